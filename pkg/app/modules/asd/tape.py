"""Reverse-mode tape.

Records are appended in execution order; each carries the local partial
derivatives of its value with respect to its parents. Parents may repeat
(``x * x`` records two entries for the same parent).

A record may also carry the local tape of a library call. The reverse pass
then replays that tape seeded with the record's adjoint instead of using the
stored partials, so a call contributes to its arguments through the same
operations a spliced copy of its path would perform.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from app.exceptions import MalformedTapeError
from app.modules.graph.program import CostMeter

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TapeRecord:
    node: int
    value: object
    partials: Tuple[Tuple[int, object], ...]
    replay: Optional["Tape"] = field(default=None, repr=False, compare=False)

    @property
    def parents(self) -> Tuple[int, ...]:
        return tuple(j for j, _ in self.partials)


@dataclass
class Tape:
    inputs: Tuple[int, ...]
    records: List[TapeRecord] = field(default_factory=list)
    output: Optional[int] = None
    exact: bool = False

    def append(self, record: TapeRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def children(self) -> Dict[int, List[int]]:
        """children(t) = {k : t in parents(k)}, in recording order."""
        out: Dict[int, List[int]] = {t: [] for t in self.inputs}
        for rec in self.records:
            out.setdefault(rec.node, [])
            for j in dict.fromkeys(rec.parents):
                out.setdefault(j, []).append(rec.node)
        return out

    @property
    def edge_terms(self) -> int:
        return sum(len(rec.partials) for rec in self.records)

    def check(self) -> None:
        """Raise MalformedTapeError unless records are topologically ordered with finite partials."""
        defined = set(self.inputs)
        last = max(self.inputs, default=0)
        for rec in self.records:
            if rec.node <= last or rec.node in defined:
                raise MalformedTapeError(f"record n{rec.node} is out of order (after n{last})")
            for j, p in rec.partials:
                if j not in defined:
                    raise MalformedTapeError(f"record n{rec.node} reads n{j} before it is defined")
                if not isinstance(p, Fraction) and not math.isfinite(p):
                    raise MalformedTapeError(f"non-finite partial on edge n{j} -> n{rec.node}")
            defined.add(rec.node)
            last = rec.node
        if self.output is None or self.output not in defined:
            raise MalformedTapeError(f"tape output n{self.output} is not defined")


def reverse_mode(tape: Tape, meter: Optional[CostMeter] = None) -> Tuple[object, ...]:
    """Adjoints ``d x_T / d x_t`` for the tape inputs.

    Records are visited from last to first, so each adjoint receives the
    contributions of its children in descending node order. One
    multiplication and one addition are charged per (child, parent) term,
    replayed local terms included.
    """
    tape.check()
    zero = Fraction(0) if tape.exact else 0.0
    one = Fraction(1) if tape.exact else 1.0
    meter = meter if meter is not None else CostMeter()

    adjoints: Dict[int, object] = {tape.output: one}
    for rec in reversed(tape.records):
        bar = adjoints.get(rec.node, zero)
        if rec.replay is not None:
            _replay(rec, bar, adjoints, zero, meter)
            continue
        for j, p in rec.partials:
            adjoints[j] = adjoints.get(j, zero) + bar * p
        meter.charge(multiplications=len(rec.partials), additions=len(rec.partials))
    return tuple(adjoints.get(t, zero) for t in tape.inputs)


def _replay(rec: TapeRecord, bar, adjoints: Dict[int, object], zero, meter: CostMeter) -> None:
    """Push ``bar`` back through a call's local tape into the global adjoints.

    Local inputs map positionally onto the record's parents. A call whose
    result is one of its inputs is not seeded: that input is its own node on
    the global tape.
    """
    local = rec.replay
    outer = dict(zip(local.inputs, rec.parents))
    inner: Dict[int, object] = {} if local.output in outer else {local.output: bar}
    for r in reversed(local.records):
        b = inner.get(r.node, zero)
        for j, p in r.partials:
            if j in outer:
                g = outer[j]
                adjoints[g] = adjoints.get(g, zero) + b * p
            else:
                inner[j] = inner.get(j, zero) + b * p
        meter.charge(multiplications=len(r.partials), additions=len(r.partials))

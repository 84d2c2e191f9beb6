"""Parser for the program text format.

One statement per line, ``#`` starts a comment::

    inputs 2
    n3 = affine 0 1 n1 -1 n2        # constant, then (coefficient, node) pairs
    n4 = mono 3 n1^2 n2             # coefficient, then node^exponent factors
    n5 = call max2 n3 n4
    output n5

Library programs::

    deflib myrelu 1 [unqualified]
      branch n1 {
        return n1
      } else {
        n2 = affine 0
        return n2
      }

    defpwl ramp breaks 0 1 pieces [0] [0 1] [1]

``defpwl`` declares a univariate piecewise polynomial: strictly increasing
breakpoints followed by one bracketed ascending coefficient list per piece.
Numbers are exact decimals or ``p/q`` rationals.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from app.exceptions import DSLParseError
from app.modules.graph.program import (
    Affine,
    Assignment,
    Branch,
    BranchProgram,
    Compute,
    Instruction,
    LibCall,
    Monomial,
    ProgramDef,
    Return,
    Step,
)

_TOKEN = re.compile(r"[\[\]{}]|[^\s\[\]{}]+")
_NODE = re.compile(r"^n(\d+)$")
_FACTOR = re.compile(r"^n(\d+)(?:\^(\d+))?$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class LibraryDecl:
    name: str
    arity: int
    program: BranchProgram
    claims_qualified: bool
    line: int


@dataclass(frozen=True)
class PiecewiseDecl:
    name: str
    breakpoints: Tuple[Fraction, ...]
    pieces: Tuple[Tuple[Fraction, ...], ...]
    line: int


Definition = Union[LibraryDecl, PiecewiseDecl]


@dataclass(frozen=True)
class ParsedSource:
    program: Optional[ProgramDef]
    definitions: Tuple[Definition, ...]


def _segments(text: str) -> List[List[Token]]:
    """Split the text into statements; braces and ``else`` stand alone."""
    segments: List[List[Token]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        current: List[Token] = []
        for match in _TOKEN.finditer(line):
            tok = Token(match.group(), lineno, match.start() + 1)
            if tok.text in ("{", "}") or (tok.text == "else" and not current):
                if current:
                    segments.append(current)
                    current = []
                segments.append([tok])
            else:
                current.append(tok)
        if current:
            segments.append(current)
    return segments


def _number(tok: Token) -> Fraction:
    try:
        return Fraction(tok.text)
    except (ValueError, ZeroDivisionError):
        raise DSLParseError(f"expected a number, got '{tok.text}'", tok.line, tok.column)


def _positive_int(tok: Token, what: str) -> int:
    if not tok.text.isdigit() or int(tok.text) < 1:
        raise DSLParseError(f"expected a positive integer {what}, got '{tok.text}'", tok.line, tok.column)
    return int(tok.text)


def _node(tok: Token) -> int:
    match = _NODE.match(tok.text)
    if not match:
        raise DSLParseError(f"expected a node reference like n3, got '{tok.text}'", tok.line, tok.column)
    return int(match.group(1))


class _Parser:
    def __init__(self, text: str, name: str):
        self.segments = _segments(text)
        self.pos = 0
        self.name = name
        self.last_line = max(1, len(text.splitlines()))

    # -- cursor ---------------------------------------------------------

    def _peek(self) -> Optional[List[Token]]:
        return self.segments[self.pos] if self.pos < len(self.segments) else None

    def _next(self, context: str) -> List[Token]:
        seg = self._peek()
        if seg is None:
            raise DSLParseError(f"unexpected end of input in {context}", self.last_line)
        self.pos += 1
        return seg

    def _expect(self, text: str, context: str) -> Token:
        seg = self._next(context)
        if len(seg) != 1 or seg[0].text != text:
            raise DSLParseError(f"expected '{text}' in {context}", seg[0].line, seg[0].column)
        return seg[0]

    # -- statements -----------------------------------------------------

    def _instruction(self, seg: List[Token]) -> Tuple[int, Instruction]:
        head = seg[0]
        target = _node(head)
        if len(seg) < 3 or seg[1].text != "=":
            raise DSLParseError("expected 'n<k> = <affine|mono|call> ...'", head.line, head.column)
        kind = seg[2]
        args = seg[3:]
        if kind.text == "affine":
            if not args:
                raise DSLParseError("affine needs a constant", kind.line, kind.column)
            constant = _number(args[0])
            rest = args[1:]
            if len(rest) % 2:
                tok = rest[-1]
                raise DSLParseError("affine terms come in '<coefficient> n<j>' pairs", tok.line, tok.column)
            terms = tuple((_number(rest[i]), _node(rest[i + 1])) for i in range(0, len(rest), 2))
            return target, Affine(constant, terms)
        if kind.text == "mono":
            if not args:
                raise DSLParseError("mono needs a coefficient", kind.line, kind.column)
            coefficient = _number(args[0])
            factors = []
            for tok in args[1:]:
                match = _FACTOR.match(tok.text)
                if not match:
                    raise DSLParseError(f"expected a factor like n2^3, got '{tok.text}'", tok.line, tok.column)
                exponent = int(match.group(2)) if match.group(2) is not None else 1
                if exponent < 1:
                    raise DSLParseError("exponents must be at least 1", tok.line, tok.column)
                factors.append((int(match.group(1)), exponent))
            return target, Monomial(coefficient, tuple(factors))
        if kind.text == "call":
            if not args or not _NAME.match(args[0].text):
                raise DSLParseError("call needs a library function name", kind.line, kind.column)
            return target, LibCall(args[0].text, tuple(_node(t) for t in args[1:]))
        raise DSLParseError(f"unknown instruction '{kind.text}'", kind.line, kind.column)

    def _body(self, context: str) -> Step:
        computes: List[Tuple[int, Instruction]] = []
        while True:
            seg = self._next(context)
            head = seg[0]
            if head.text == "return":
                if len(seg) != 2:
                    raise DSLParseError("expected 'return n<k>'", head.line, head.column)
                step: Step = Return(_node(seg[1]))
                break
            if head.text == "branch":
                if len(seg) != 2:
                    raise DSLParseError("expected 'branch n<k> {'", head.line, head.column)
                test = _node(seg[1])
                self._expect("{", "branch")
                then = self._body("then-block")
                self._expect("}", "then-block")
                self._expect("else", "branch")
                self._expect("{", "else-block")
                otherwise = self._body("else-block")
                self._expect("}", "else-block")
                step = Branch(test, then, otherwise)
                break
            if _NODE.match(head.text):
                computes.append(self._instruction(seg))
                continue
            raise DSLParseError(f"unexpected '{head.text}' in {context}", head.line, head.column)
        for target, instr in reversed(computes):
            step = Compute(target, instr, step)
        return step

    def _deflib(self, seg: List[Token]) -> LibraryDecl:
        head = seg[0]
        if len(seg) not in (3, 4):
            raise DSLParseError("expected 'deflib <name> <arity> [unqualified]'", head.line, head.column)
        if not _NAME.match(seg[1].text):
            raise DSLParseError(f"invalid library name '{seg[1].text}'", seg[1].line, seg[1].column)
        arity = _positive_int(seg[2], "arity")
        qualified = True
        if len(seg) == 4:
            if seg[3].text != "unqualified":
                raise DSLParseError(f"unexpected '{seg[3].text}'", seg[3].line, seg[3].column)
            qualified = False
        body = self._body(f"library '{seg[1].text}'")
        return LibraryDecl(seg[1].text, arity, BranchProgram(arity, body), qualified, head.line)

    def _defpwl(self, seg: List[Token]) -> PiecewiseDecl:
        head = seg[0]
        if len(seg) < 4 or not _NAME.match(seg[1].text) or seg[2].text != "breaks":
            raise DSLParseError("expected 'defpwl <name> breaks <b...> pieces [..] ...'", head.line, head.column)
        rest = seg[3:]
        try:
            split = next(i for i, t in enumerate(rest) if t.text == "pieces")
        except StopIteration:
            raise DSLParseError("defpwl is missing 'pieces'", head.line, head.column)
        breakpoints = tuple(_number(t) for t in rest[:split])
        pieces: List[Tuple[Fraction, ...]] = []
        current: Optional[List[Fraction]] = None
        for tok in rest[split + 1:]:
            if tok.text == "[":
                if current is not None:
                    raise DSLParseError("nested '['", tok.line, tok.column)
                current = []
            elif tok.text == "]":
                if current is None:
                    raise DSLParseError("unbalanced ']'", tok.line, tok.column)
                pieces.append(tuple(current) or (Fraction(0),))
                current = None
            else:
                if current is None:
                    raise DSLParseError("piece coefficients must be inside [ ]", tok.line, tok.column)
                current.append(_number(tok))
        if current is not None:
            raise DSLParseError("unterminated '['", head.line, head.column)
        return PiecewiseDecl(seg[1].text, breakpoints, tuple(pieces), head.line)

    def parse(self) -> ParsedSource:
        arity: Optional[int] = None
        assignments: List[Assignment] = []
        output: Optional[int] = None
        definitions: List[Definition] = []
        while self._peek() is not None:
            seg = self._next("program")
            head = seg[0]
            if head.text == "deflib":
                definitions.append(self._deflib(seg))
            elif head.text == "defpwl":
                definitions.append(self._defpwl(seg))
            elif head.text == "inputs":
                if arity is not None:
                    raise DSLParseError("'inputs' declared twice", head.line, head.column)
                if len(seg) != 2:
                    raise DSLParseError("expected 'inputs <d>'", head.line, head.column)
                arity = _positive_int(seg[1], "input count")
            elif head.text == "output":
                if arity is None:
                    raise DSLParseError("'output' before 'inputs'", head.line, head.column)
                if output is not None:
                    raise DSLParseError("'output' declared twice", head.line, head.column)
                if len(seg) != 2:
                    raise DSLParseError("expected 'output n<k>'", head.line, head.column)
                output = _node(seg[1])
            elif _NODE.match(head.text):
                if arity is None:
                    raise DSLParseError("instruction before 'inputs'", head.line, head.column)
                if output is not None:
                    raise DSLParseError("instruction after 'output'", head.line, head.column)
                target, instr = self._instruction(seg)
                for j in instr.parents:
                    if j >= target:
                        raise DSLParseError(
                            f"n{target} reads n{j}; node indices must exceed every referenced index",
                            head.line,
                            head.column,
                        )
                assignments.append(Assignment(target, instr))
            else:
                raise DSLParseError(f"unexpected '{head.text}'", head.line, head.column)

        program = None
        if arity is not None:
            if output is None:
                raise DSLParseError("missing 'output n<k>'", self.last_line)
            program = ProgramDef(arity, tuple(assignments), output, self.name)
        return ParsedSource(program, tuple(definitions))


def parse_program(text: str, name: str = "program") -> ParsedSource:
    return _Parser(text, name).parse()

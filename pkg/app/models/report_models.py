from typing import List, Optional

from pydantic import BaseModel


class CostReportModel(BaseModel):
    """Metered unit costs of one run"""
    runtime_f: int
    runtime_asd: int
    ratio: float
    multiplications: int
    additions: int
    branch_tests: int


class CrossCheckModel(BaseModel):
    """Subgradients collected over independent seeds"""
    seeds: List[int]
    distinct: List[List[float]]
    agree: bool
    spread: float


class RunReport(BaseModel):
    """Result of a subgradient query"""
    program: str
    point: List[float]
    seed: Optional[int] = None
    direction: List[float]
    value: float
    directional_derivative: float
    subgradient: List[float]
    cost: CostReportModel
    variant: str
    exact: bool = False
    traces: List[str] = []
    cross_check: Optional[CrossCheckModel] = None


class NaiveReport(BaseModel):
    """Fixed-convention gradient next to the engine's subgradient"""
    program: str
    point: List[float]
    relu_zero: float
    naive_gradient: List[float]
    subgradient: List[float]
    direction: List[float]
    seed: Optional[int] = None
    agree: bool


class ConstraintModel(BaseModel):
    """A constraint polynomial with the sign required on its piece"""
    polynomial: str
    sign: int


class PieceModel(BaseModel):
    """One global piece of a program"""
    word: str
    constraints: List[ConstraintModel]
    polynomial: str
    selected: bool = False
    gradient: Optional[List[str]] = None


class PiecesReport(BaseModel):
    """Symbolic pieces and, for a query point, the selected piece"""
    program: str
    pieces: List[PieceModel]
    point: Optional[List[float]] = None
    direction: Optional[List[float]] = None
    selected: Optional[int] = None
    cq_warnings: List[str] = []


class CheckItem(BaseModel):
    """One oracle comparison"""
    name: str
    passed: bool
    skipped: bool = False
    detail: str


class CheckReport(BaseModel):
    """Oracle verdicts for one query"""
    program: str
    point: List[float]
    direction: List[float]
    seed: Optional[int] = None
    subgradient: List[float]
    directional_derivative: float
    checks: List[CheckItem]
    passed: bool


class BenchRow(BaseModel):
    """Cost ratio of one program, point and variant against its bound"""
    program: str
    point: List[float]
    variant: str
    runtime_f: int
    runtime_asd: int
    ratio: float
    bound: float
    ok: bool


class BenchReport(BaseModel):
    """Cost ratios over a corpus"""
    corpus: str
    rows: List[BenchRow]
    passed: bool

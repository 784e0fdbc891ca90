"""
Published JSON schemas of every CLI report. Commands validate their output
against these before writing, and tests re-parse written files with them.
"""
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, model_validator


class Report(BaseModel):
    model_config = ConfigDict(extra='forbid')


class Matrix(Report):
    rows: int
    cols: int
    data: List[List[Optional[float]]]

    @model_validator(mode='after')
    def check_shape(self):
        if len(self.data) != self.rows or any(len(row) != self.cols for row in self.data):
            raise ValueError(f"matrix data does not match {self.rows}x{self.cols}")
        return self


class MeanFieldReport(Report):
    r_v: List[float]
    r_k: List[float]


class FixedPointReport(Report):
    alpha: float
    meanfield: MeanFieldReport
    residual: Optional[float]
    iterations: int
    converged: bool
    moments: Dict[str, Optional[float]] = {}
    stationarity: List[Optional[float]] = []


class SolveReport(Report):
    command: Literal['solve']
    model: str
    alpha: float
    sigma: float
    tol: float
    results: List[FixedPointReport]
    distinct: int
    dropped: int


class PhasePoint(Report):
    alpha: float
    sigma: float
    count: int
    dropped: int
    meanfields: List[MeanFieldReport]


class CriticalSigmaReport(Report):
    sigma_bracket: List[float]
    alpha_bracket: List[float]
    width: float
    evaluations: int


class PhaseScanReport(Report):
    command: Literal['scan']
    model: str
    starts: List[float]
    points: List[PhasePoint]
    critical: Optional[CriticalSigmaReport] = None


class Det2Sample(Report):
    alpha: float
    valid: bool
    det2: Optional[float] = None
    sign: Optional[int] = None
    min_abs_one_plus_kappa: Optional[float] = None
    reason: str = ''


class Det2ScanReport(Report):
    command: Literal['det2-scan']
    model: str
    brackets: List[List[float]]
    samples: List[Det2Sample]


class InvertibilityReport(Report):
    alpha: float
    margin: float
    invertible: bool


class BifurcationReport(Report):
    command: Literal['bifurcate'] = 'bifurcate'
    model: str
    alpha0: float
    sigma0: float
    G: Matrix
    G_alpha0: Matrix
    J_alpha0: Matrix
    M_K: Matrix
    block: Matrix
    rank_block: int
    rank_core: int
    multiplicity: int
    multiplicity_odd: bool
    rank_condition_holds: bool
    verdict: bool
    condition_G: Optional[float]
    core_eigenvalues: List[List[float]]
    one_plus_M0: Optional[float] = None
    invertibility: Optional[InvertibilityReport] = None
    det2_below: Optional[float] = None
    det2_above: Optional[float] = None
    det2_sign_change: Optional[bool] = None


class DawsonAuditReport(Report):
    command: Literal['audit-dawson'] = 'audit-dawson'
    beta: float
    found: bool
    alpha0: Optional[float] = None
    sigma0: Optional[float] = None
    alpha0_in_interval: Optional[bool] = None
    moments: Dict[str, Optional[float]] = {}
    ito_residual_2: Optional[float] = None
    ito_residual_4: Optional[float] = None
    hankel: Optional[float] = None
    hankel_nonnegative: Optional[bool] = None
    one_plus_M0_integral: Optional[float] = None
    one_plus_M0_closed_form: Optional[float] = None
    one_plus_M0_pipeline: Optional[float] = None
    m2_times_alpha0: Optional[float] = None
    m4_minus_m2: Optional[float] = None


class MomentEstimate(Report):
    mean: Optional[float]
    se: Optional[float]


class Histogram(Report):
    edges: List[float]
    counts: List[int]


class SimulationReport(Report):
    command: Literal['simulate'] = 'simulate'
    model: str
    seed: int
    N: int
    dt: float
    T: float
    sigma: float
    alpha: float
    steps: int
    burn_in_steps: int
    batches: int
    empirical_moments: Dict[str, MomentEstimate]
    histogram: Histogram
    final_mean: float


SCHEMAS = {
    'solve': SolveReport,
    'scan': PhaseScanReport,
    'det2-scan': Det2ScanReport,
    'bifurcate': BifurcationReport,
    'audit-dawson': DawsonAuditReport,
    'simulate': SimulationReport,
}

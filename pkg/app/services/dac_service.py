"""Two-stage flux DAC calculus over a three-port inductance matrix.

Fluxes are reported in mPhi0, currents are amperes and inductances henries
internally. The output flux model is linear in the stored SFQ counts; the
junction-inductance correction is omitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product

import numpy as np
from scipy.optimize import minimize_scalar

from app.exceptions.custom_exceptions import (
    ConfigurationError,
    DacStateError,
    DegenerateDesignError,
    ParameterError,
    TargetRangeError,
)
from app.utils.constants import MICRO, PHI0, PICO
from app.utils.logger import get_logger
from app.utils.utils import round_half_away

log = get_logger(__name__)

_ZERO_WEIGHT = 1e-12
_REACH_TOLERANCE = 1e-9
_FLOOR_EPS = 1e-9
_RATIO_TOLERANCE = 1e-9


class Stage(str, Enum):
    """Storage loop of a two-stage DAC."""

    LSD = "LSD"
    MSD = "MSD"


def _check_passive(label_a: str, label_b: str, mutual: float, l_a: float, l_b: float) -> None:
    if abs(mutual) >= math.sqrt(l_a * l_b):
        raise ConfigurationError(f"Mutual {label_a}-{label_b} = {mutual:.4g} H violates passivity (|M| < sqrt(L_a L_b))")


@dataclass(frozen=True)
class InductanceMatrix:
    """Symmetric LSD/MSD/OUT inductance matrix in henries."""

    l_lsd: float
    l_msd: float
    l_out: float
    m_lsd_msd: float
    m_lsd_out: float
    m_msd_out: float

    def __post_init__(self) -> None:
        for name in ("l_lsd", "l_msd", "l_out"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)!r}")
        _check_passive("LSD", "MSD", self.m_lsd_msd, self.l_lsd, self.l_msd)
        _check_passive("LSD", "OUT", self.m_lsd_out, self.l_lsd, self.l_out)
        _check_passive("MSD", "OUT", self.m_msd_out, self.l_msd, self.l_out)

    @classmethod
    def from_ph(
        cls,
        l_lsd: float,
        l_msd: float,
        l_out: float,
        m_lsd_msd: float,
        m_lsd_out: float,
        m_msd_out: float,
    ) -> "InductanceMatrix":
        """Build from picohenry values."""
        return cls(
            l_lsd=l_lsd * PICO,
            l_msd=l_msd * PICO,
            l_out=l_out * PICO,
            m_lsd_msd=m_lsd_msd * PICO,
            m_lsd_out=m_lsd_out * PICO,
            m_msd_out=m_msd_out * PICO,
        )

    @classmethod
    def from_array(cls, matrix: np.ndarray) -> "InductanceMatrix":
        """Build from a 3x3 array with port order LSD, MSD, OUT."""
        arr = np.asarray(matrix, dtype=float)
        if arr.shape != (3, 3):
            raise ConfigurationError(f"Expected a 3x3 inductance matrix, got shape {arr.shape}")
        return cls(arr[0, 0], arr[1, 1], arr[2, 2], arr[0, 1], arr[0, 2], arr[1, 2])

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                [self.l_lsd, self.m_lsd_msd, self.m_lsd_out],
                [self.m_lsd_msd, self.l_msd, self.m_msd_out],
                [self.m_lsd_out, self.m_msd_out, self.l_out],
            ]
        )


@dataclass(frozen=True)
class DacState:
    """Signed SFQ counts stored in each loop."""

    m_lsd: int = 0
    m_msd: int = 0

    def count(self, stage: Stage) -> int:
        return self.m_lsd if stage is Stage.LSD else self.m_msd

    def with_count(self, stage: Stage, value: int) -> "DacState":
        if stage is Stage.LSD:
            return DacState(m_lsd=value, m_msd=self.m_msd)
        return DacState(m_lsd=self.m_lsd, m_msd=value)

    def __add__(self, other: "DacState") -> "DacState":
        return DacState(m_lsd=self.m_lsd + other.m_lsd, m_msd=self.m_msd + other.m_msd)

    @property
    def is_zero(self) -> bool:
        return self.m_lsd == 0 and self.m_msd == 0


@dataclass(frozen=True)
class DacDesign:
    """Matrix, drive current and the derived parameters of a two-stage DAC."""

    matrix: InductanceMatrix
    i_in: float
    w_lsd: float
    w_msd: float
    max_sfq_lsd: int
    max_sfq_msd: int
    division_ratio: float
    range: float
    effective_bits: float
    derating: int = 0

    @property
    def covers_msd_step(self) -> bool:
        """True when the LSD can span one MSD step."""
        return abs(self.division_ratio) <= self.max_sfq_lsd + _RATIO_TOLERANCE

    def weight(self, stage: Stage) -> float:
        return self.w_lsd if stage is Stage.LSD else self.w_msd

    def capacity(self, stage: Stage) -> int:
        return self.max_sfq_lsd if stage is Stage.LSD else self.max_sfq_msd

    def inductance(self, stage: Stage) -> float:
        return self.matrix.l_lsd if stage is Stage.LSD else self.matrix.l_msd

    @property
    def reachable(self) -> float:
        """Largest |output flux| any in-capacity state produces."""
        return abs(self.w_msd) * self.max_sfq_msd + abs(self.w_lsd) * self.max_sfq_lsd

    @property
    def loop_current_span(self) -> float:
        """Full bipolar storage-loop current span of the reachable states (A)."""
        return 2 * max(self.capacity(s) * PHI0 / self.inductance(s) for s in Stage)

    def check_state(self, state: DacState) -> None:
        for stage in Stage:
            if abs(state.count(stage)) > self.capacity(stage):
                raise DacStateError(
                    f"{stage.value} count {state.count(stage)} exceeds capacity {self.capacity(stage)}"
                )


def _capacity(i_in: float, inductance: float, derating: int) -> int:
    return max(math.floor(i_in * inductance / PHI0 + _FLOOR_EPS) - derating, 0)


def derive_params(matrix: InductanceMatrix, i_in: float, derating: int = 0) -> DacDesign:
    """Derived weights, capacities and range of a two-stage design."""
    if not i_in > 0:
        raise ParameterError(f"i_in must be positive, got {i_in!r}")
    if derating < 0:
        raise ParameterError(f"derating must be >= 0, got {derating}")

    w_msd = 1000 * matrix.m_msd_out / matrix.l_msd
    w_lsd = 1000 * (matrix.m_lsd_out / matrix.l_lsd - (matrix.m_lsd_msd / matrix.l_lsd) * (matrix.m_msd_out / matrix.l_msd))
    if abs(w_lsd) < _ZERO_WEIGHT:
        raise DegenerateDesignError("LSD weight is zero; division ratio is undefined")

    max_lsd = _capacity(i_in, matrix.l_lsd, derating)
    max_msd = _capacity(i_in, matrix.l_msd, derating)
    full_range = w_msd * max_msd
    bits = math.log2(abs(full_range / w_lsd)) if full_range else 0.0
    design = DacDesign(
        matrix=matrix,
        i_in=i_in,
        w_lsd=w_lsd,
        w_msd=w_msd,
        max_sfq_lsd=max_lsd,
        max_sfq_msd=max_msd,
        division_ratio=w_msd / w_lsd,
        range=full_range,
        effective_bits=bits,
        derating=derating,
    )
    log.debug("Derived DAC design: W_MSD=%.4g W_LSD=%.4g bits=%.3f", w_msd, w_lsd, bits)
    return design


def reference_design() -> DacDesign:
    """8-bit design: ratio 16 and 16 SFQ per loop."""
    return derive_params(InductanceMatrix.from_ph(1000, 1000, 100, 50, 2.25, 20), 33.1 * MICRO)


def output_flux(design: DacDesign, state: DacState) -> float:
    """Output flux (mPhi0) of a state."""
    design.check_state(state)
    return state.m_msd * design.w_msd + state.m_lsd * design.w_lsd


def _clamp(value: int, limit: int) -> int:
    return max(-limit, min(limit, value))


def compile_target(design: DacDesign, target: float) -> DacState:
    """Round the MSD count, then round the residual onto the LSD."""
    if abs(target) > design.reachable + _REACH_TOLERANCE:
        raise TargetRangeError(f"Target {target} mPhi0 is beyond the reachable span +/-{design.reachable:.6g} mPhi0")

    m_msd = _clamp(round_half_away(target / design.w_msd), design.max_sfq_msd) if design.w_msd else 0
    residual = target - m_msd * design.w_msd
    m_lsd = _clamp(round_half_away(residual / design.w_lsd), design.max_sfq_lsd)
    return DacState(m_lsd=m_lsd, m_msd=m_msd)


def best_state(design: DacDesign, target: float) -> DacState:
    """Exhaustive search for the state closest to target."""
    return min(
        (
            DacState(m_lsd=lsd, m_msd=msd)
            for msd, lsd in product(
                range(-design.max_sfq_msd, design.max_sfq_msd + 1),
                range(-design.max_sfq_lsd, design.max_sfq_lsd + 1),
            )
        ),
        key=lambda s: abs(output_flux(design, s) - target),
    )


def area_objective(x: float) -> float:
    """Relative programmable range with a fraction x of area given to junctions."""
    return x * (1 - x)


def optimal_area_split() -> float:
    result = minimize_scalar(lambda x: -area_objective(x), bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
    return float(result.x)


@dataclass(frozen=True)
class AreaScaling:
    """Multiplicative factors after raising critical current density by jc_ratio."""

    jc_ratio: float
    inductance: float
    critical_current: float
    junction_area: float
    inductor_area: float
    l_ic_product: float
    total_area: float

    @property
    def reduction(self) -> float:
        return math.sqrt(self.jc_ratio)


def area_scaling_model(jc_ratio: float) -> AreaScaling:
    if not jc_ratio > 0:
        raise ParameterError(f"jc_ratio must be positive, got {jc_ratio!r}")
    root = math.sqrt(jc_ratio)
    critical_current = root
    return AreaScaling(
        jc_ratio=jc_ratio,
        inductance=1 / root,
        critical_current=critical_current,
        junction_area=critical_current / jc_ratio,
        inductor_area=1 / root,
        l_ic_product=(1 / root) * critical_current,
        total_area=1 / root,
    )


def area_scaling(jc_ratio: float) -> float:
    """Total area reduction factor for a jc_ratio increase in J_c."""
    return area_scaling_model(jc_ratio).reduction


def junction_shrink_saving(jc_ratio: float) -> float:
    """Saving from shrinking only the junctions at fixed I_c (always < 2)."""
    if not jc_ratio > 0:
        raise ParameterError(f"jc_ratio must be positive, got {jc_ratio!r}")
    return 1 / (0.5 + 0.5 / jc_ratio)


@dataclass(frozen=True)
class StageChainDesign:
    """Cascaded DAC; stages are listed finest first."""

    n_stages: int
    weights: tuple[float, ...]
    capacities: tuple[int, ...]
    matrix: np.ndarray = field(repr=False, compare=False)
    i_in: float = 0.0
    range: float = 0.0
    effective_bits: float = 0.0

    @property
    def is_ordered(self) -> bool:
        """Weights strictly grow from the finest to the coarsest stage."""
        mags = [abs(w) for w in self.weights]
        return all(a < b for a, b in zip(mags, mags[1:]))

    @property
    def covers_steps(self) -> bool:
        """Every finer stage spans one step of the next-coarser stage."""
        return all(
            abs(self.weights[k]) * self.capacities[k] >= abs(self.weights[k + 1]) * (1 - _RATIO_TOLERANCE)
            for k in range(self.n_stages - 1)
        )

    def as_dac_design(self) -> DacDesign:
        if self.n_stages != 2:
            raise ParameterError(f"Only a two-stage chain maps to a DacDesign, this one has {self.n_stages}")
        return derive_params(InductanceMatrix.from_array(self.matrix), self.i_in)


def derive_stage_chain(matrix: np.ndarray, i_in: float, derating: int = 0) -> StageChainDesign:
    """Generalize the two-stage parameters to 1-3 cascaded stages.

    Port order is finest stage first, coarsest stage last, then OUT.
    Stage k weight: 1000 * (M_k,out/L_k - sum_{j>k} (M_k,j/L_k) * W_j/1000).
    """
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigurationError(f"Inductance matrix must be square, got shape {arr.shape}")
    n = arr.shape[0] - 1
    if n not in (1, 2, 3):
        raise ParameterError(f"Stage chains have 1 to 3 stages, matrix implies {n}")
    if not np.allclose(arr, arr.T, rtol=1e-12, atol=0.0):
        raise ConfigurationError("Inductance matrix must be symmetric")
    if not np.all(np.diag(arr) > 0):
        raise ConfigurationError("Self-inductances must be positive")
    for a in range(n + 1):
        for b in range(a + 1, n + 1):
            _check_passive(str(a), str(b), arr[a, b], arr[a, a], arr[b, b])
    if not i_in > 0:
        raise ParameterError(f"i_in must be positive, got {i_in!r}")

    out = n
    weights = [0.0] * n
    for k in range(n - 1, -1, -1):
        l_k = arr[k, k]
        ladder = sum((arr[k, j] / l_k) * weights[j] / 1000 for j in range(k + 1, n))
        weights[k] = 1000 * (arr[k, out] / l_k - ladder)
    if abs(weights[0]) < _ZERO_WEIGHT:
        raise DegenerateDesignError("Finest stage weight is zero")

    capacities = [_capacity(i_in, arr[k, k], derating) for k in range(n)]
    if n == 1:
        full_range = abs(weights[0]) * capacities[0]
        bits = math.log2(2 * capacities[0] + 1)
    else:
        full_range = abs(weights[-1]) * capacities[-1]
        bits = math.log2(full_range / abs(weights[0])) if full_range else 0.0

    chain = StageChainDesign(
        n_stages=n,
        weights=tuple(weights),
        capacities=tuple(capacities),
        matrix=arr,
        i_in=i_in,
        range=full_range,
        effective_bits=bits,
    )
    log.debug("Derived %s-stage chain: weights=%s bits=%.3f", n, chain.weights, bits)
    return chain

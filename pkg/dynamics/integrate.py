"""
Fixed-step integration of the delay systems.

All simulators share one classical fourth-order stepper. Lagged values are
read from the stored solution through cubic Hermite interpolation on the
stored derivatives; times before zero come from the supplied history.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate as sp_integrate
from scipy import stats

from core.config import Config
from core.errors import DomainError, InsufficientData
from dynamics.chareq import KernelCase
from dynamics.model import (
    Equilibrium,
    ModelParams,
    SystemRHS,
    chain_system,
    interior_equilibrium,
    original_system,
    rhs_original,
)

logger = structlog.get_logger(__name__)

HistoryFn = Callable[[float], np.ndarray]

MEMORY_TAIL = 40.0
DEFAULT_OFFSET = 0.01


# ========================
# History
# ========================
class HistoryKind(str, Enum):
    CONSTANT = "constant"
    PERTURBED = "perturbed"
    TABULATED = "tabulated"


class HistorySpec(BaseModel):
    """Initial function on (-inf, 0] in (x, y) coordinates."""

    model_config = ConfigDict(frozen=True)

    kind: HistoryKind = HistoryKind.PERTURBED
    point: Optional[Tuple[float, float]] = Field(None, description="(x, y) for a constant history")
    delta: Optional[Tuple[float, float]] = Field(
        None, description="Offset from L0 for a perturbed history; defaults to 1% of max(x0, y0) on both components"
    )
    times: Optional[Tuple[float, ...]] = Field(None, description="Sample times of a tabulated history")
    values: Optional[Tuple[Tuple[float, float], ...]] = Field(None, description="(x, y) samples")

    @model_validator(mode="after")
    def _check_kind(self) -> "HistorySpec":
        if self.kind == HistoryKind.CONSTANT and self.point is None:
            raise ValueError("constant history needs 'point'")
        if self.kind == HistoryKind.TABULATED:
            if not self.times or not self.values or len(self.times) != len(self.values):
                raise ValueError("tabulated history needs matching 'times' and 'values'")
            if any(b <= a for a, b in zip(self.times, self.times[1:])):
                raise ValueError("tabulated history times must be strictly increasing")
        return self

    @classmethod
    def constant(cls, x: float, y: float) -> "HistorySpec":
        return cls(kind=HistoryKind.CONSTANT, point=(x, y))

    @classmethod
    def perturbed(cls, dx: float, dy: float = 0.0) -> "HistorySpec":
        return cls(kind=HistoryKind.PERTURBED, delta=(dx, dy))

    @classmethod
    def tabulated(cls, times, values) -> "HistorySpec":
        return cls(
            kind=HistoryKind.TABULATED,
            times=tuple(float(t) for t in times),
            values=tuple((float(x), float(y)) for x, y in values),
        )

    def anchored(self, L0: Equilibrium) -> "HistorySpec":
        """Copy with the default offset filled in from L0."""
        if self.kind != HistoryKind.PERTURBED or self.delta is not None:
            return self
        d = DEFAULT_OFFSET * max(L0.x, L0.y)
        return self.model_copy(update={"delta": (d, d)})

    @property
    def constant_in_time(self) -> bool:
        return self.kind != HistoryKind.TABULATED

    def covers(self, span: float) -> bool:
        if self.constant_in_time:
            return True
        return self.times[0] <= -span and self.times[-1] >= 0.0

    def resolve(self, L0: Equilibrium) -> HistoryFn:
        """A callable s -> (x, y) for s <= 0."""
        if self.kind == HistoryKind.CONSTANT:
            value = np.array(self.point, dtype=float)
            return lambda s: value
        if self.kind == HistoryKind.PERTURBED:
            dx, dy = self.anchored(L0).delta
            value = np.array([L0.x + dx, L0.y + dy])
            return lambda s: value

        times = np.asarray(self.times)
        table = np.asarray(self.values)

        def lookup(s: float) -> np.ndarray:
            return np.array([np.interp(s, times, table[:, 0]), np.interp(s, times, table[:, 1])])

        return lookup


def memory_initial_value(history: HistorySpec, L0: Equilibrium, rate: float, order: int = 0) -> float:
    """
    Gamma-weighted integral of the lymphocyte history, int_0^inf k(s) y(-s) ds.

    Constant histories return the history value itself. Otherwise the
    integral is truncated where the kernel tail is negligible and the
    remaining mass is charged at the truncation point.
    """
    y_of = history.resolve(L0)
    if history.constant_in_time:
        return float(y_of(0.0)[1])

    kernel = stats.gamma(a=order + 1, scale=1.0 / rate)
    cutoff = (MEMORY_TAIL + order) / rate
    breaks = sorted({-t for t in history.times if 0.0 < -t < cutoff})
    body, _ = sp_integrate.quad(
        lambda s: kernel.pdf(s) * y_of(-s)[1],
        0.0,
        cutoff,
        points=breaks[:100] or None,
        limit=400,
    )
    return float(body + kernel.sf(cutoff) * y_of(-cutoff)[1])


# ========================
# Trajectories
# ========================
class TrajectoryMeta(BaseModel):
    """Everything needed to rerun a simulation; echoed into output files."""

    system: str
    case: KernelCase
    params: ModelParams
    lags: List[float]
    q2: Optional[float] = None
    order: Optional[int] = None
    as_printed: bool = False
    dt: float
    t_end: float
    history: HistorySpec
    blew_up: bool = False
    blow_up_time: Optional[float] = None


@dataclass(frozen=True)
class Trajectory:
    """Uniform-step solution in (x, y[, z]) coordinates."""

    times: np.ndarray
    states: np.ndarray
    labels: Tuple[str, ...]
    meta: TrajectoryMeta

    @property
    def blew_up(self) -> bool:
        return self.meta.blew_up

    def component(self, label: str) -> np.ndarray:
        return self.states[:, self.labels.index(label)]

    def deviations(self, L0: Equilibrium) -> np.ndarray:
        """(x - x0, y - y0) per sample."""
        return self.states[:, :2] - np.array([L0.x, L0.y])


class OscillationSummary(BaseModel):
    converged: bool
    oscillating: bool
    final_deviation: float = Field(..., description="Sup-norm distance to L0 over the final 20%")
    period_estimate: Optional[float] = None
    amplitude: Optional[float] = None
    cycles_used: Optional[int] = None
    negative_populations: bool = False


# ========================
# Stepper
# ========================
class _DenseRecord:
    """Stored solution with Hermite lookup; extrapolates the last segment for lags under one step."""

    def __init__(self, history: HistoryFn, initial: np.ndarray, dt: float, capacity: int):
        self.history = history
        self.dt = dt
        self.states = np.empty((capacity, initial.size))
        self.derivs = np.empty((capacity, initial.size))
        self.states[0] = initial
        self.known = 0

    def value(self, s: float) -> np.ndarray:
        if s < 0.0:
            return self.history(s)
        if self.known < 2:
            return self.states[0] + s * self.derivs[0]

        i = min(int(s / self.dt), self.known - 2)
        theta = s / self.dt - i
        t2, t3 = theta * theta, theta * theta * theta
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + theta
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        return (
            h00 * self.states[i]
            + h10 * self.dt * self.derivs[i]
            + h01 * self.states[i + 1]
            + h11 * self.dt * self.derivs[i + 1]
        )


def integrate_system(
    system: SystemRHS,
    history: HistoryFn,
    initial: np.ndarray,
    t_end: float,
    dt: float,
) -> Tuple[np.ndarray, np.ndarray, Optional[float]]:
    """
    Classical RK4 with delayed arguments.

    ``history(s)`` must return a full state vector for s < 0.

    Returns:
        (times, states, blow_up_time); blow_up_time is None for a complete run.
    """
    if not dt > 0 or not t_end > 0:
        raise DomainError("dt and t_end must be positive", {"dt": dt, "t_end": t_end})
    positive = [lag for lag in system.lags if lag > 0]
    if positive and dt > min(positive) / 4.0:
        logger.warning("dt_exceeds_lag_guard", dt=dt, min_lag=min(positive), system=system.name)

    steps = int(round(t_end / dt))
    record = _DenseRecord(history, np.asarray(initial, dtype=float), dt, steps + 1)
    lags = system.lags

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        lagged = [y if lag == 0.0 else record.value(t - lag) for lag in lags]
        return system(y, lagged)

    blow_up_time = None
    count = 1
    for n in range(steps):
        t = n * dt
        y = record.states[n]
        k1 = rhs(t, y)
        record.derivs[n] = k1
        record.known = n + 1
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y_next = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        if not np.all(np.isfinite(y_next)) or np.max(np.abs(y_next)) > Config.BLOW_UP:
            blow_up_time = (n + 1) * dt
            logger.warning("blow_up", system=system.name, t=blow_up_time)
            break
        record.states[n + 1] = y_next
        count = n + 2

    times = np.arange(count) * dt
    return times, record.states[:count].copy(), blow_up_time


# ========================
# Simulators
# ========================
def _defaults(t_end: Optional[float], dt: Optional[float]) -> Tuple[float, float]:
    return (Config.T_END if t_end is None else t_end), (Config.DT if dt is None else dt)


def _require_cover(history: HistorySpec, span: float) -> None:
    if not history.covers(span):
        raise DomainError("History does not cover [-max lag, 0]", {"max_lag": span, "start": history.times[0]})


def simulate_dd(
    p: ModelParams,
    tau1: float,
    tau2: float,
    history: HistorySpec,
    t_end: Optional[float] = None,
    dt: Optional[float] = None,
) -> Trajectory:
    """Two discrete delays, integrated in (x, y)."""
    t_end, dt = _defaults(t_end, dt)
    _require_cover(history, max(tau1, tau2))
    L0 = interior_equilibrium(p)
    hist = history.resolve(L0)

    system = original_system(p, tau1, tau2)
    times, states, blow_up_time = integrate_system(system, hist, hist(0.0), t_end, dt)
    meta = TrajectoryMeta(
        system=system.name,
        case=KernelCase.DD,
        params=p,
        lags=[tau1, tau2],
        dt=dt,
        t_end=t_end,
        history=history.anchored(L0),
        blew_up=blow_up_time is not None,
        blow_up_time=blow_up_time,
    )
    logger.info("simulated", system=system.name, tau1=tau1, tau2=tau2, samples=len(times))
    return Trajectory(times, states, ("x", "y"), meta)


def simulate_chain(
    p: ModelParams,
    tau1: float,
    q2: float,
    history: HistorySpec,
    t_end: Optional[float] = None,
    dt: Optional[float] = None,
    order: int = 0,
    as_printed: bool = False,
) -> Trajectory:
    """
    Discrete delay on the malignant cells, gamma memory on the lymphocytes.

    Integrates the translated chain system and reports (x, y) plus the
    memory stages shifted back by y0.
    """
    t_end, dt = _defaults(t_end, dt)
    _require_cover(history, tau1)
    L0 = interior_equilibrium(p)
    hist = history.resolve(L0)
    system = chain_system(p, tau1, q2, order=order, as_printed=as_printed)
    stages = order + 1

    memory0 = np.array([memory_initial_value(history, L0, q2, j) - L0.y for j in range(stages)])
    shift = np.array([L0.x, L0.y])

    def translated_history(s: float) -> np.ndarray:
        return np.concatenate([hist(s) - shift, memory0])

    initial = translated_history(0.0)
    times, states, blow_up_time = integrate_system(system, translated_history, initial, t_end, dt)

    states = states.copy()
    states[:, 0] += L0.x
    states[:, 1:] += L0.y
    labels = ("x", "y", "z") if stages == 1 else ("x", "y") + tuple(f"z{j}" for j in range(stages))
    meta = TrajectoryMeta(
        system=system.name,
        case=KernelCase.DW,
        params=p,
        lags=[tau1],
        q2=q2,
        order=order,
        as_printed=as_printed,
        dt=dt,
        t_end=t_end,
        history=history.anchored(L0),
        blew_up=blow_up_time is not None,
        blow_up_time=blow_up_time,
    )
    logger.info("simulated", system=system.name, tau1=tau1, q2=q2, order=order, samples=len(times))
    return Trajectory(times, states, labels, meta)


def simulate_quadrature_weak(
    p: ModelParams,
    tau1: float,
    q2: float,
    history: HistorySpec,
    t_end: Optional[float] = None,
    dt: Optional[float] = None,
) -> Trajectory:
    """
    Weak-kernel model in (x, y) with the distributed term carried as its own
    moving integral I(t) = int_0^inf q2 exp(-q2 s) y(t - s) ds, I' = q2 (y - I).
    """
    t_end, dt = _defaults(t_end, dt)
    _require_cover(history, tau1)
    L0 = interior_equilibrium(p)
    hist = history.resolve(L0)
    integral0 = memory_initial_value(history, L0, q2, 0)

    def func(state, lagged):
        x, y, integral = state
        dx, dy = rhs_original(p, x, y, lagged[0][0], integral)
        return np.array([dx, dy, q2 * (y - integral)])

    system = SystemRHS("quadrature-weak", 3, (tau1,), func, ("x", "y", "z"))

    def full_history(s: float) -> np.ndarray:
        return np.append(hist(s), integral0)

    times, states, blow_up_time = integrate_system(system, full_history, full_history(0.0), t_end, dt)
    meta = TrajectoryMeta(
        system=system.name,
        case=KernelCase.DW,
        params=p,
        lags=[tau1],
        q2=q2,
        order=0,
        dt=dt,
        t_end=t_end,
        history=history.anchored(L0),
        blew_up=blow_up_time is not None,
        blow_up_time=blow_up_time,
    )
    return Trajectory(times, states, system.labels, meta)


# ========================
# Summary
# ========================
def _upward_crossings(t: np.ndarray, signal: np.ndarray, level: float) -> np.ndarray:
    below = signal[:-1] < level
    above = signal[1:] >= level
    idx = np.nonzero(below & above)[0]
    frac = (level - signal[idx]) / (signal[idx + 1] - signal[idx])
    return t[idx] + frac * (t[idx + 1] - t[idx])


def summarize(traj: Trajectory, L0: Equilibrium, tol: Optional[float] = None) -> OscillationSummary:
    """
    Classify a run as converged to L0 or oscillating.

    The period is the mean spacing of upward mean-crossings of x over the last
    ten cycles of the final half; the amplitude is half the peak-to-trough of x
    over the same cycles.
    """
    tol = Config.CONVERGENCE_TOL if tol is None else tol
    n = len(traj.times)
    if traj.blew_up:
        raise InsufficientData("Trajectory blew up", {"blow_up_time": traj.meta.blow_up_time})
    if n < 100:
        raise InsufficientData("Trajectory too short to summarize", {"samples": n})

    tail = traj.deviations(L0)[int(math.floor(0.8 * n)):]
    final_deviation = float(np.max(np.abs(tail)))
    converged = final_deviation < tol
    negative = bool(np.any(traj.states[:, :2] < 0.0))

    if converged:
        return OscillationSummary(
            converged=True, oscillating=False, final_deviation=final_deviation, negative_populations=negative
        )

    half = n // 2
    t = traj.times[half:]
    x = traj.states[half:, 0]
    crossings = _upward_crossings(t, x, float(np.mean(x)))
    if len(crossings) < 3:
        return OscillationSummary(
            converged=False, oscillating=False, final_deviation=final_deviation, negative_populations=negative
        )

    recent = crossings[-11:]
    period = float(np.mean(np.diff(recent)))
    window = (t >= recent[0]) & (t <= recent[-1])
    amplitude = 0.5 * float(np.max(x[window]) - np.min(x[window]))
    return OscillationSummary(
        converged=False,
        oscillating=True,
        final_deviation=final_deviation,
        period_estimate=period,
        amplitude=amplitude,
        cycles_used=len(recent) - 1,
        negative_populations=negative,
    )

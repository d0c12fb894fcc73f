"""
Tumor-immune model: parameters, delay kernels, equilibria and right-hand sides.

State variables are the malignant cell count ``x`` and the lymphocyte count
``y``. The lymphocyte equation carries the delayed interaction term
``b1 * x(t - tau1) * y(t - tau2)``; with a weak (exponential) kernel on ``y`` the
distributed delay is replaced by an extra chain variable.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Annotated, Callable, Literal, Sequence, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from core.errors import DomainError, InadmissibleParameters

logger = structlog.get_logger(__name__)


# ========================
# Parameters
# ========================
class ModelParams(BaseModel):
    """The six positive rates of the tumor-immune model."""

    model_config = ConfigDict(frozen=True)

    a1: float = Field(..., gt=0, description="Malignant growth rate (1/time)")
    a2: float = Field(..., gt=0, description="Kill rate per lymphocyte (1/(cells*time))")
    b1: float = Field(..., gt=0, description="Recognition/interaction rate (1/(cells*time))")
    b2: float = Field(..., gt=0, description="Immunodepression rate (1/time)")
    b3: float = Field(..., gt=0, description="Lymphocyte natural death rate (1/time)")
    b4: float = Field(..., gt=0, description="Lymphocyte influx (cells/time)")


def check_admissible(p: ModelParams) -> bool:
    """True iff b2/b1 < b4/b3 < a1/a2 holds strictly."""
    return p.b2 / p.b1 < p.b4 / p.b3 < p.a1 / p.a2


def require_admissible(p: ModelParams) -> None:
    """Raise InadmissibleParameters naming the violated inequality."""
    lower, middle, upper = p.b2 / p.b1, p.b4 / p.b3, p.a1 / p.a2
    if not lower < middle:
        raise InadmissibleParameters(
            f"b2/b1 < b4/b3 violated: {lower:.10g} >= {middle:.10g}",
            {"b2/b1": lower, "b4/b3": middle},
        )
    if not middle < upper:
        raise InadmissibleParameters(
            f"b4/b3 < a1/a2 violated: {middle:.10g} >= {upper:.10g}",
            {"b4/b3": middle, "a1/a2": upper},
        )


# ========================
# Delay kernels
# ========================
class DiracKernel(BaseModel):
    """Point mass at a discrete lag."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["dirac"] = "dirac"
    tau: float = Field(..., ge=0, description="Discrete lag (time)")

    @property
    def mean_lag(self) -> float:
        return self.tau

    def density(self, s):
        raise DomainError("A Dirac kernel has no density", {"tau": self.tau})

    def laplace_transform(self, lam: complex) -> complex:
        return np.exp(-lam * self.tau)


class GammaKernel(BaseModel):
    """k(s) = q^(p+1) s^p exp(-q s) / p!; order 0 is the weak kernel."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["gamma"] = "gamma"
    order: int = Field(0, ge=0, description="Kernel order p")
    rate: float = Field(..., gt=0, description="Kernel rate q (1/time)")

    @property
    def mean_lag(self) -> float:
        return (self.order + 1) / self.rate

    def density(self, s):
        return stats.gamma.pdf(s, a=self.order + 1, scale=1.0 / self.rate)

    def laplace_transform(self, lam: complex) -> complex:
        return (self.rate / (lam + self.rate)) ** (self.order + 1)


KernelSpec = Annotated[Union[DiracKernel, GammaKernel], Field(discriminator="kind")]


# ========================
# Equilibria
# ========================
class EquilibriumLabel(str, Enum):
    L0 = "L0"
    L1 = "L1"


class Equilibrium(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float = Field(..., description="Malignant cells")
    y: float = Field(..., description="Lymphocytes")
    label: EquilibriumLabel


def equilibria(p: ModelParams) -> Tuple[Equilibrium, Equilibrium]:
    """Return (L0, L1); L0 is the interior point analyzed everywhere else."""
    require_admissible(p)
    det = p.a1 * p.b1 - p.a2 * p.b2
    if det == 0.0:
        raise DomainError("a1*b1 equals a2*b2; L0 is undefined", p.model_dump())

    l0 = Equilibrium(x=(p.b3 * p.a1 - p.b4 * p.a2) / det, y=p.a1 / p.a2, label=EquilibriumLabel.L0)
    l1 = Equilibrium(x=0.0, y=p.b4 / p.b3, label=EquilibriumLabel.L1)
    return l0, l1


def interior_equilibrium(p: ModelParams) -> Equilibrium:
    return equilibria(p)[0]


# ========================
# Right-hand sides
# ========================
def rhs_original(p: ModelParams, x_now, y_now, x_lagged, y_lagged):
    dx = p.a1 * x_now - p.a2 * x_now * y_now
    dy = p.b1 * x_lagged * y_lagged - p.b2 * x_now - p.b3 * y_now + p.b4
    return dx, dy


def rhs_translated(p: ModelParams, L0: Equilibrium, x1, x2, x1_lag1, x2_lag2):
    """Model in deviations (x1, x2) = (x - x0, y - y0) with Dirac kernels."""
    x0, y0 = L0.x, L0.y
    dx1 = -p.a2 * x0 * x2 - p.a2 * x1 * x2
    dx2 = (
        -p.b2 * x1
        - p.b3 * x2
        + p.b1 * x0 * x2_lag2
        + p.b1 * y0 * x1_lag1
        + p.b1 * x1_lag1 * x2_lag2
    )
    return dx1, dx2


def rhs_chain(p: ModelParams, L0: Equilibrium, q2: float, x1, x2, x3, x1_lag_tau1):
    """
    Weak-kernel system with the memory variable x3, x3' = q2 (x2 - x3).

    The delayed factor multiplies x1(t - tau1). The literal published wiring
    lags x2 instead; ``chain_system(as_printed=True)`` feeds x2(t - tau1)
    through the same slot.
    """
    x0, y0 = L0.x, L0.y
    lagged = x1_lag_tau1
    dx1 = -p.a2 * x0 * x2 - p.a2 * x1 * x2
    dx2 = -p.b2 * x1 - p.b3 * x2 + p.b1 * x0 * x3 + p.b1 * y0 * lagged + p.b1 * x3 * lagged
    dx3 = q2 * (x2 - x3)
    return dx1, dx2, dx3


def linear_matrices(p: ModelParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(A, B1, B2): undelayed part, coefficient of x(t - tau1), coefficient of x(t - tau2)."""
    L0 = interior_equilibrium(p)
    A = np.array([[0.0, -p.a2 * L0.x], [-p.b2, -p.b3]])
    B1 = np.array([[0.0, 0.0], [p.b1 * L0.y, 0.0]])
    B2 = np.array([[0.0, 0.0], [0.0, p.b1 * L0.x]])
    return A, B1, B2


def chain_matrices(p: ModelParams, q2: float, as_printed: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """(A1, C1) of the linearized chain system; C1 multiplies the state at t - tau1."""
    L0 = interior_equilibrium(p)
    A1 = np.array(
        [
            [0.0, -p.a2 * L0.x, 0.0],
            [-p.b2, -p.b3, p.b1 * L0.x],
            [0.0, q2, -q2],
        ]
    )
    C1 = np.zeros((3, 3))
    C1[1, 1 if as_printed else 0] = p.b1 * L0.y
    return A1, C1


# ========================
# Evaluable systems
# ========================
@dataclass(frozen=True)
class SystemRHS:
    """
    A delay system ready for integration.

    ``func(state, lagged)`` returns the derivative; ``lagged[i]`` is the full
    state vector at ``t - lags[i]``.
    """

    name: str
    dimension: int
    lags: Tuple[float, ...]
    func: Callable[[np.ndarray, Sequence[np.ndarray]], np.ndarray]
    labels: Tuple[str, ...]

    def __call__(self, state: np.ndarray, lagged: Sequence[np.ndarray]) -> np.ndarray:
        return self.func(state, lagged)


def original_system(p: ModelParams, tau1: float, tau2: float) -> SystemRHS:
    def func(state, lagged):
        dx, dy = rhs_original(p, state[0], state[1], lagged[0][0], lagged[1][1])
        return np.array([dx, dy])

    return SystemRHS("original", 2, (tau1, tau2), func, ("x", "y"))


def translated_system(p: ModelParams, tau1: float, tau2: float) -> SystemRHS:
    L0 = interior_equilibrium(p)

    def func(state, lagged):
        dx1, dx2 = rhs_translated(p, L0, state[0], state[1], lagged[0][0], lagged[1][1])
        return np.array([dx1, dx2])

    return SystemRHS("translated", 2, (tau1, tau2), func, ("x1", "x2"))


def chain_system(p: ModelParams, tau1: float, q2: float, order: int = 0, as_printed: bool = False) -> SystemRHS:
    """
    Chain system in deviations from L0 with ``order + 1`` memory stages.

    Stage j follows z_j' = q2 (z_{j-1} - z_j) with z_{-1} = x2; the last stage
    stands in for the distributed lymphocyte memory.
    """
    if q2 <= 0:
        raise DomainError("q2 must be positive", {"q2": q2})
    L0 = interior_equilibrium(p)
    stages = order + 1
    lag_component = 1 if as_printed else 0

    def func(state, lagged):
        x1, x2 = state[0], state[1]
        memory = state[1 + stages]
        dx1, dx2, _ = rhs_chain(p, L0, q2, x1, x2, memory, lagged[0][lag_component])
        out = np.empty(2 + stages)
        out[0] = dx1
        out[1] = dx2
        upstream = state[1:1 + stages]
        out[2:] = q2 * (upstream - state[2:])
        return out

    labels = ("x1", "x2") + tuple(f"z{j}" for j in range(stages))
    name = "chain-printed" if as_printed else "chain"
    return SystemRHS(name, 2 + stages, (tau1,), func, labels)

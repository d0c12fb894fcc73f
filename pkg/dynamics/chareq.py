"""
Characteristic functions of the linearization about L0 and their crossings.

Two kernel cases are covered:

- DD: Dirac kernels on both factors, lags tau1 and tau2.
- DW: Dirac kernel at tau1 on x, weak kernel with rate q2 on y.

A crossing (Hopf point) is a purely imaginary root i*omega reached at a
critical tau1. Every HopfPoint returned here is residual-certified against its
characteristic function.
"""

import cmath
import math
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize

from core.config import Config
from core.errors import AmbiguousBranch, Degenerate, DomainError, NoCrossing
from dynamics.model import KernelSpec, ModelParams, interior_equilibrium, require_admissible
from dynamics.roots import newton_root

logger = structlog.get_logger(__name__)


class KernelCase(str, Enum):
    """Kernel combination analyzed"""
    DD = "DD"
    DW = "DW"


class CrossingMethod(str, Enum):
    """How the critical lag was obtained"""
    PRINTED = "printed"
    DERIVED = "derived"


# ========================
# Cases
# ========================
class CharCaseDD(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: ModelParams
    x0: float
    tau1: float = Field(0.0, ge=0)
    tau2: float = Field(0.0, ge=0)

    @classmethod
    def from_params(cls, p: ModelParams, tau1: float = 0.0, tau2: float = 0.0) -> "CharCaseDD":
        return cls(params=p, x0=interior_equilibrium(p).x, tau1=tau1, tau2=tau2)

    def with_tau1(self, tau1: float) -> "CharCaseDD":
        return self.model_copy(update={"tau1": tau1})

    @property
    def A(self) -> float:
        return self.params.a1 * self.params.b1 * self.x0

    @property
    def B(self) -> float:
        return self.params.b1 * self.x0

    @property
    def C(self) -> float:
        return self.params.a2 * self.params.b2 * self.x0


class CharCaseDW(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: ModelParams
    x0: float
    tau1: float = Field(0.0, ge=0)
    q2: float = Field(..., gt=0)
    p0: float
    p1: float
    p2: float
    r0: float
    r1: float

    @classmethod
    def from_params(cls, p: ModelParams, q2: float, tau1: float = 0.0) -> "CharCaseDW":
        x0 = interior_equilibrium(p).x
        return cls(
            params=p,
            x0=x0,
            tau1=tau1,
            q2=q2,
            p2=q2 + p.b3,
            p1=q2 * p.b3 - p.a2 * p.b2 * x0 - p.b1 * x0 * q2,
            p0=-q2 * p.a2 * p.b2 * x0,
            r1=p.a1 * p.b1 * x0,
            r0=p.a1 * p.b1 * x0 * q2,
        )

    def with_tau1(self, tau1: float) -> "CharCaseDW":
        return self.model_copy(update={"tau1": tau1})


class HopfPoint(BaseModel):
    """A certified purely imaginary root crossing at a critical tau1."""

    model_config = ConfigDict(frozen=True)

    omega: float = Field(..., gt=0, description="Angular frequency (rad/time)")
    tau_crit: float = Field(..., description="Critical lag tau1 (time)")
    branch_index: int = Field(1, ge=1, description="Branch of the critical lag")
    d_re: float = Field(..., description="Re d(lambda)/d(tau1) at the crossing")
    d_im: float = Field(..., description="Im d(lambda)/d(tau1) at the crossing")
    case: KernelCase
    tau2: Optional[float] = None
    q2: Optional[float] = None
    residual: float = Field(..., description="|Delta(i*omega)| at tau_crit")
    method: CrossingMethod = CrossingMethod.DERIVED

    @property
    def lambda1(self) -> complex:
        return 1j * self.omega

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def degenerate(self) -> bool:
        return abs(self.d_re) < Config.DEGENERACY_TOL


# ========================
# Characteristic functions
# ========================
def delta_dd(c: CharCaseDD, lam: complex) -> complex:
    return (
        lam * lam
        + c.params.b3 * lam
        - c.C
        + c.A * cmath.exp(-lam * c.tau1)
        - lam * c.B * cmath.exp(-lam * c.tau2)
    )


def d_delta_dd(c: CharCaseDD, lam: complex) -> complex:
    """d(Delta_DD)/d(lambda)."""
    e1 = cmath.exp(-lam * c.tau1)
    e2 = cmath.exp(-lam * c.tau2)
    return 2.0 * lam + c.params.b3 - c.A * c.tau1 * e1 - c.B * e2 + lam * c.B * c.tau2 * e2


def d_delta_dd_dtau1(c: CharCaseDD, lam: complex) -> complex:
    return -lam * c.A * cmath.exp(-lam * c.tau1)


def delta_dw(c: CharCaseDW, lam: complex) -> complex:
    return lam ** 3 + c.p2 * lam ** 2 + c.p1 * lam + c.p0 + (c.r1 * lam + c.r0) * cmath.exp(-lam * c.tau1)


def d_delta_dw(c: CharCaseDW, lam: complex) -> complex:
    """d(Delta_DW)/d(lambda)."""
    e = cmath.exp(-lam * c.tau1)
    return 3.0 * lam ** 2 + 2.0 * c.p2 * lam + c.p1 + c.r1 * e - c.tau1 * (c.r1 * lam + c.r0) * e


def d_delta_dw_dtau1(c: CharCaseDW, lam: complex) -> complex:
    return -lam * (c.r1 * lam + c.r0) * cmath.exp(-lam * c.tau1)


def delta_general(p: ModelParams, k1: KernelSpec, k2: KernelSpec, lam: complex) -> complex:
    """
    Characteristic function for arbitrary kernels: k1 weights x, k2 weights y.

    Equals delta_dd for two Dirac kernels and delta_dw / (lambda + q2) for a
    weak k2.
    """
    x0 = interior_equilibrium(p).x
    return (
        lam * lam
        + p.b3 * lam
        - p.a2 * p.b2 * x0
        + p.a1 * p.b1 * x0 * k1.laplace_transform(lam)
        - lam * p.b1 * x0 * k2.laplace_transform(lam)
    )


# ========================
# Stability criteria
# ========================
def stability_bound_dd(p: ModelParams) -> float:
    """tau1 + tau2 below this bound keeps L0 asymptotically stable."""
    require_admissible(p)
    x0 = interior_equilibrium(p).x
    return (p.b3 + p.b1 * x0) / (p.a1 * p.b1 * x0)


class StabilityWindow(BaseModel):
    """q2 values with a stable L0 at tau1 = 0: (0, q21) and (q22, inf)."""

    model_config = ConfigDict(frozen=True)

    inequality_holds: bool
    roots: Optional[Tuple[float, float]] = Field(None, description="Real roots of the window quadratic")
    window: Optional[Tuple[float, float]] = Field(None, description="(q21, q22) when both roots are positive")
    reason: Optional[str] = None


def q2_stability_window(p: ModelParams) -> StabilityWindow:
    require_admissible(p)
    x0 = interior_equilibrium(p).x
    lhs = 4.0 * (p.a1 * p.b1 - p.a2 * p.b2) ** 2
    rhs = p.a2 * p.b3 * (p.b1 * p.b4 - p.a2 * p.b3)
    if not lhs < rhs:
        return StabilityWindow(
            inequality_holds=False,
            reason=f"4(a1b1-a2b2)^2 = {lhs:.10g} is not below a2b3(b1b4-a2b3) = {rhs:.10g}",
        )

    lead = p.b3 - p.b1 * x0
    coeffs = [lead, p.b3 * lead, p.b3 * (p.a1 * p.b1 - p.a2 * p.b2) * x0]
    if lead == 0.0:
        return StabilityWindow(inequality_holds=True, reason="window quadratic degenerates (b3 = b1*x0)")

    raw = np.roots(coeffs)
    if np.any(np.abs(raw.imag) > 1e-12 * np.max(np.abs(raw))):
        return StabilityWindow(inequality_holds=True, reason="window quadratic has complex roots")

    q21, q22 = sorted(float(r) for r in raw.real)
    if q21 <= 0.0:
        return StabilityWindow(
            inequality_holds=True,
            roots=(q21, q22),
            reason=f"window quadratic roots are not both positive: {q21:.10g}, {q22:.10g}",
        )
    return StabilityWindow(inequality_holds=True, roots=(q21, q22), window=(q21, q22))


# ========================
# DD crossings
# ========================
def g_of_omega(p: ModelParams, x0: float, omega: float) -> float:
    if omega == 0:
        raise DomainError("g(omega) has a pole at omega = 0")
    numerator = (
        omega ** 4
        - (p.b1 ** 2 * x0 ** 2 - p.b3 ** 2 - 2.0 * p.a2 * p.b2 * x0) * omega ** 2
        + (p.a2 ** 2 * p.b2 ** 2 - p.a1 ** 2 * p.b1 ** 2) * x0 ** 2
    )
    return numerator / (2.0 * p.a1 * p.b1 ** 2 * x0 ** 2 * omega)


def omega_candidates_dd(p: ModelParams, x0: float) -> List[float]:
    """Positive roots of the published quartic, solved as a quadratic in omega^2."""
    middle = -(p.b1 ** 2 * x0 ** 2 - p.b3 ** 2 - 2.0 * p.a2 * p.b2 * x0)
    const = (p.a2 ** 2 * p.b2 ** 2 - p.a1 ** 2 * p.b1 ** 2) * x0 ** 2
    disc = middle * middle - 4.0 * const
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    candidates = []
    for u in {(-middle + sq) / 2.0, (-middle - sq) / 2.0}:
        if u > 0:
            candidates.append(math.sqrt(u))
    return sorted(candidates)


def crossing_phase_dd(c: CharCaseDD, omega: float) -> Tuple[float, float]:
    """(c, s) with A cos(omega tau1) = c and A sin(omega tau1) = s at a crossing."""
    b1x0 = c.B
    cos_part = omega ** 2 + c.C + b1x0 * omega * math.sin(omega * c.tau2)
    sin_part = c.params.b3 * omega - b1x0 * omega * math.cos(omega * c.tau2)
    return cos_part, sin_part


def crossing_modulus_dd(p: ModelParams, x0: float, tau2: float, omega):
    """Zero exactly at frequencies where i*omega is a root for some tau1 (accepts arrays)."""
    b1x0 = p.b1 * x0
    cos_part = omega ** 2 + p.a2 * p.b2 * x0 + b1x0 * omega * np.sin(omega * tau2)
    sin_part = p.b3 * omega - b1x0 * omega * np.cos(omega * tau2)
    return cos_part ** 2 + sin_part ** 2 - (p.a1 * b1x0) ** 2


def _crossing_frequencies_dd(case: CharCaseDD) -> List[float]:
    p, x0, tau2 = case.params, case.x0, case.tau2
    reach = case.B + math.sqrt(case.B ** 2 + 4.0 * (case.A + case.C)) + p.b3 + 1.0
    grid = np.linspace(1e-9, 2.0 * reach, 20001)
    values = crossing_modulus_dd(p, x0, tau2, grid)

    found = []
    for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]:
        found.append(
            optimize.brentq(
                lambda w: float(crossing_modulus_dd(p, x0, tau2, w)),
                grid[i],
                grid[i + 1],
                xtol=1e-15,
                rtol=4 * np.finfo(float).eps,
                maxiter=200,
            )
        )
    return found


def transversality_dd(case: CharCaseDD, omega: float) -> Tuple[float, float]:
    """(Re, Im) of d(lambda)/d(tau1) at lambda = i*omega through the l1/l2 closed form."""
    theta1 = omega * case.tau1
    theta2 = omega * case.tau2
    A, B = case.A, case.B
    l1 = case.params.b3 - A * case.tau1 * math.cos(theta1) - B * math.cos(theta2) + B * case.tau2 * omega * math.sin(theta2)
    l2 = 2.0 * omega + A * case.tau1 * math.sin(theta1) + B * math.sin(theta2) + B * case.tau2 * omega * math.cos(theta2)
    norm = l1 * l1 + l2 * l2
    d_re = omega * A * (math.sin(theta1) * l1 + math.cos(theta1) * l2) / norm
    d_im = omega * A * (math.cos(theta1) * l1 - math.sin(theta1) * l2) / norm
    return d_re, d_im


def printed_l2_dd(case: CharCaseDD, omega: float) -> float:
    """l2 as published (sign of the tau1 term differs from the derivative of Delta)."""
    theta1 = omega * case.tau1
    theta2 = omega * case.tau2
    return (
        2.0 * omega
        - case.A * case.tau1 * math.sin(theta1)
        + case.B * math.sin(theta2)
        + case.B * case.tau2 * omega * math.cos(theta2)
    )


def _polish_crossing(
    delta: Callable[[complex, float], complex],
    d_lambda: Callable[[complex, float], complex],
    d_tau: Callable[[complex, float], complex],
    omega: float,
    tau: float,
) -> Tuple[float, float]:
    """Newton on (omega, tau) for Re Delta = Im Delta = 0."""
    for _ in range(Config.NEWTON_MAX_ITER):
        r = delta(1j * omega, tau)
        if abs(r) < 1e-15:
            break
        j_omega = 1j * d_lambda(1j * omega, tau)
        j_tau = d_tau(1j * omega, tau)
        jac = np.array([[j_omega.real, j_tau.real], [j_omega.imag, j_tau.imag]])
        try:
            step = np.linalg.solve(jac, [-r.real, -r.imag])
        except np.linalg.LinAlgError:
            break
        omega += float(step[0])
        tau += float(step[1])
        if abs(step[0]) + abs(step[1]) < Config.NEWTON_STEP_TOL * max(1.0, abs(tau)):
            break
    return omega, tau


def _dd_point(case: CharCaseDD, omega: float, tau: float, branch: int, method: CrossingMethod) -> HopfPoint:
    case = case.with_tau1(tau)
    d_re, d_im = transversality_dd(case, omega)
    return HopfPoint(
        omega=omega,
        tau_crit=tau,
        branch_index=branch,
        d_re=d_re,
        d_im=d_im,
        case=KernelCase.DD,
        tau2=case.tau2,
        residual=abs(delta_dd(case, 1j * omega)),
        method=method,
    )


def hopf_points_dd(p: ModelParams, tau2: float, n: int = 1, k_max: Optional[int] = None) -> List[HopfPoint]:
    """
    The first ``n`` crossings with tau_crit > tau2, in increasing tau_crit.

    Frequencies solve the exact modulus condition; each frequency yields a
    family of lags spaced 2*pi/omega apart.
    """
    require_admissible(p)
    k_max = k_max or Config.K_MAX
    base = CharCaseDD.from_params(p, tau2=tau2)

    def delta(lam, tau):
        return delta_dd(base.with_tau1(tau), lam)

    def d_lambda(lam, tau):
        return d_delta_dd(base.with_tau1(tau), lam)

    def d_tau(lam, tau):
        return d_delta_dd_dtau1(base.with_tau1(tau), lam)

    points = []
    for omega in _crossing_frequencies_dd(base):
        cos_part, sin_part = crossing_phase_dd(base, omega)
        phase = math.atan2(sin_part, cos_part) % (2.0 * math.pi)
        tau = phase / omega
        period = 2.0 * math.pi / omega
        while tau <= tau2:
            tau += period
        for branch in range(1, min(n, k_max) + 1):
            w, t = _polish_crossing(delta, d_lambda, d_tau, omega, tau)
            point = _dd_point(base, w, t, branch, CrossingMethod.DERIVED)
            if point.residual < Config.RESIDUAL_TOL:
                points.append(point)
            else:
                logger.warning("dd_crossing_not_certified", omega=omega, tau=tau, residual=point.residual)
            tau += period

    points.sort(key=lambda pt: pt.tau_crit)
    return points[:n]


def hopf_point_dd(p: ModelParams, tau2: float, k_max: Optional[int] = None) -> HopfPoint:
    """
    First crossing in tau1 for fixed tau2.

    The published route (quartic frequency, tau = k*pi/omega + tau2 for the
    smallest certified k) is tried first and the smallest lag over all
    frequencies wins; when no k certifies, the crossing is taken from the
    exact modulus condition.

    Raises:
        NoCrossing: no certified crossing exists.
        Degenerate: the crossing speed Re d(lambda)/d(tau1) vanishes.
    """
    require_admissible(p)
    k_max = k_max or Config.K_MAX
    base = CharCaseDD.from_params(p, tau2=tau2)

    certified = []
    for omega in omega_candidates_dd(p, base.x0):
        for k in range(1, k_max + 1):
            tau = k * math.pi / omega + tau2
            if abs(delta_dd(base.with_tau1(tau), 1j * omega)) < Config.RESIDUAL_TOL:
                certified.append(_dd_point(base, omega, tau, k, CrossingMethod.PRINTED))
                break
    point = min(certified, key=lambda pt: pt.tau_crit, default=None)

    if point is None:
        logger.info("dd_printed_route_uncertified", tau2=tau2, candidates=omega_candidates_dd(p, base.x0))
        derived = hopf_points_dd(p, tau2, n=1, k_max=k_max)
        if not derived:
            raise NoCrossing("No purely imaginary crossing for the Dirac-Dirac case", {"tau2": tau2})
        point = derived[0]

    if point.degenerate:
        raise Degenerate("Transversality vanishes at the crossing", point.model_dump(mode="json"))
    logger.info("dd_crossing_certified", omega=point.omega, tau_crit=point.tau_crit, residual=point.residual)
    return point


# ========================
# DW crossings
# ========================
def sextic_coefficients(c: CharCaseDW, printed: bool = False) -> Tuple[float, float, float, float]:
    """Cubic in u = omega^2; ``printed`` uses +r1^2 in the linear coefficient."""
    r1_term = c.r1 ** 2 if printed else -(c.r1 ** 2)
    return (
        1.0,
        c.p2 ** 2 - 2.0 * c.p1,
        c.p1 ** 2 - 2.0 * c.p0 * c.p2 + r1_term,
        c.p0 ** 2 - c.r0 ** 2,
    )


def omega_candidates_dw(c: CharCaseDW, printed: bool = False) -> List[float]:
    roots = np.roots(sextic_coefficients(c, printed=printed))
    scale = max(1.0, float(np.max(np.abs(roots)))) if roots.size else 1.0
    omegas = [math.sqrt(float(u.real)) for u in roots if abs(u.imag) <= 1e-10 * scale and u.real > 0]
    return sorted(omegas)


def crossing_trig_dw(c: CharCaseDW, omega: float) -> Tuple[float, float]:
    """(cos(omega tau1), sin(omega tau1)) required for i*omega to be a root."""
    P = c.p2 * omega ** 2 - c.p0
    Q = omega ** 3 - c.p1 * omega
    denom = c.r0 ** 2 + c.r1 ** 2 * omega ** 2
    return (c.r0 * P + c.r1 * omega * Q) / denom, (c.r1 * omega * P - c.r0 * Q) / denom


def printed_arctan_tau_dw(c: CharCaseDW, omega: float) -> float:
    """Principal-branch tau from the published arctan expression."""
    num = c.r1 * omega * (c.p2 * omega ** 2 - c.p0) + c.r0 * (c.p1 * omega - omega ** 3)
    den = c.p1 * omega * (omega ** 3 - c.p1 * omega) + c.r0 * (c.p0 - c.p2 * omega ** 2)
    if den == 0.0:
        return math.copysign(math.pi / 2.0, num) / omega
    return math.atan(num / den) / omega


def transversality_dw(c: CharCaseDW, omega: float) -> Tuple[float, float]:
    """(Re, Im) of d(lambda)/d(tau1) at lambda = i*omega through the m1/m2 closed form."""
    theta = omega * c.tau1
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    m1 = (c.p1 - 3.0 * omega ** 2) * cos_t - 2.0 * c.p2 * omega * sin_t + c.r1 - c.r0 * c.tau1
    m2 = 2.0 * c.p2 * omega * cos_t + (c.p1 - 3.0 * omega ** 2) * sin_t - c.r1 * c.tau1 * omega
    norm = m1 * m1 + m2 * m2
    d_re = omega * (c.r0 * m2 - c.r1 * omega * m1) / norm
    d_im = omega * (c.r0 * m1 + c.r1 * omega * m2) / norm
    return d_re, d_im


def printed_m2_dw(c: CharCaseDW, omega: float) -> float:
    theta = omega * c.tau1
    return (
        2.0 * c.p2 * omega * math.cos(theta)
        + (c.p1 - 3.0 * omega ** 2) * math.sin(theta)
        - c.r1 * c.tau1
        - c.r1 * c.tau1 * omega
    )


def _dw_point(base: CharCaseDW, omega: float, tau: float, branch: int, method: CrossingMethod) -> HopfPoint:
    case = base.with_tau1(tau)
    d_re, d_im = transversality_dw(case, omega)
    return HopfPoint(
        omega=omega,
        tau_crit=tau,
        branch_index=branch,
        d_re=d_re,
        d_im=d_im,
        case=KernelCase.DW,
        q2=base.q2,
        residual=abs(delta_dw(case, 1j * omega)),
        method=method,
    )


def _dw_first_lag(base: CharCaseDW, omega: float, k_max: int) -> Tuple[float, CrossingMethod]:
    """Smallest positive certified tau1 for this frequency; printed arctan first."""
    step = math.pi / omega
    tau = printed_arctan_tau_dw(base, omega)
    while tau <= 0:
        tau += step
    for _ in range(k_max):
        if abs(delta_dw(base.with_tau1(tau), 1j * omega)) < Config.RESIDUAL_TOL:
            return tau, CrossingMethod.PRINTED
        tau += step

    cos_t, sin_t = crossing_trig_dw(base, omega)
    phase = math.atan2(sin_t, cos_t) % (2.0 * math.pi)
    if phase == 0.0:
        phase = 2.0 * math.pi
    logger.info("dw_printed_arctan_uncertified", omega=omega, q2=base.q2)
    return phase / omega, CrossingMethod.DERIVED


def hopf_points_dw(p: ModelParams, q2: float, n: int = 1, k_max: Optional[int] = None) -> List[HopfPoint]:
    """The first ``n`` crossings in increasing tau1 over all sextic frequencies."""
    require_admissible(p)
    k_max = k_max or Config.K_MAX
    base = CharCaseDW.from_params(p, q2=q2)
    if not base.p0 ** 2 < base.r0 ** 2:
        logger.warning("dw_sextic_constant_nonnegative", p0=base.p0, r0=base.r0)

    def delta(lam, tau):
        return delta_dw(base.with_tau1(tau), lam)

    def d_lambda(lam, tau):
        return d_delta_dw(base.with_tau1(tau), lam)

    def d_tau(lam, tau):
        return d_delta_dw_dtau1(base.with_tau1(tau), lam)

    points = []
    for omega in omega_candidates_dw(base):
        first, method = _dw_first_lag(base, omega, k_max)
        period = 2.0 * math.pi / omega
        for branch in range(1, n + 1):
            w, t = _polish_crossing(delta, d_lambda, d_tau, omega, first + (branch - 1) * period)
            point = _dw_point(base, w, t, branch, method)
            if point.residual < Config.RESIDUAL_TOL:
                points.append(point)
            else:
                logger.warning("dw_crossing_not_certified", omega=omega, tau=t, residual=point.residual)

    points.sort(key=lambda pt: pt.tau_crit)
    return points[:n]


def hopf_point_dw(p: ModelParams, q2: float, k_max: Optional[int] = None) -> HopfPoint:
    """
    The weak-kernel crossing for a given q2.

    Raises:
        NoCrossing: the sextic has no positive root.
        AmbiguousBranch: several sextic frequencies cross; ``points`` in the
            error context lists them smallest tau first.
        Degenerate: the crossing speed vanishes.
    """
    base = CharCaseDW.from_params(p, q2=q2)
    omegas = omega_candidates_dw(base)
    if not omegas:
        raise NoCrossing("Sextic has no positive root", {"q2": q2})

    points = hopf_points_dw(p, q2, n=len(omegas), k_max=k_max)
    if not points:
        raise NoCrossing("No certified weak-kernel crossing", {"q2": q2, "omegas": omegas})
    if len(omegas) > 1:
        raise AmbiguousBranch(
            f"{len(omegas)} crossing frequencies for q2={q2}",
            {"points": [pt.model_dump(mode="json") for pt in points]},
        )

    point = points[0]
    if point.degenerate:
        raise Degenerate("Transversality vanishes at the crossing", point.model_dump(mode="json"))
    logger.info("dw_crossing_certified", omega=point.omega, tau_crit=point.tau_crit, residual=point.residual)
    return point


# ========================
# Root continuation
# ========================
def case_functions(p: ModelParams, hp: HopfPoint):
    """(delta(lam, tau1), d_delta(lam, tau1)) for the kernel case of ``hp``."""
    if hp.case == KernelCase.DD:
        base = CharCaseDD.from_params(p, tau2=hp.tau2 or 0.0)
        return (
            lambda lam, tau: delta_dd(base.with_tau1(tau), lam),
            lambda lam, tau: d_delta_dd(base.with_tau1(tau), lam),
        )
    base = CharCaseDW.from_params(p, q2=hp.q2)
    return (
        lambda lam, tau: delta_dw(base.with_tau1(tau), lam),
        lambda lam, tau: d_delta_dw(base.with_tau1(tau), lam),
    )


def track_root(p: ModelParams, hp: HopfPoint, tau1: float, seed: Optional[complex] = None) -> complex:
    """Follow the crossing root to another tau1 by Newton from i*omega."""
    delta, d_delta = case_functions(p, hp)
    return newton_root(lambda lam: delta(lam, tau1), lambda lam: d_delta(lam, tau1), seed or hp.lambda1)


def lambda_prime_fd(p: ModelParams, hp: HopfPoint, step: float = 1e-5) -> complex:
    """Central difference of the tracked root in tau1."""
    plus = track_root(p, hp, hp.tau_crit + step)
    minus = track_root(p, hp, hp.tau_crit - step)
    return (plus - minus) / (2.0 * step)


def crossing_equation_residuals(p: ModelParams, hp: HopfPoint) -> Tuple[float, float]:
    """Residuals of the real and imaginary parts of the crossing conditions at (omega, tau_crit)."""
    theta = hp.omega * hp.tau_crit
    if hp.case == KernelCase.DD:
        case = CharCaseDD.from_params(p, tau1=hp.tau_crit, tau2=hp.tau2 or 0.0)
        cos_part, sin_part = crossing_phase_dd(case, hp.omega)
        return abs(case.A * math.cos(theta) - cos_part), abs(case.A * math.sin(theta) - sin_part)
    case = CharCaseDW.from_params(p, q2=hp.q2, tau1=hp.tau_crit)
    cos_t, sin_t = crossing_trig_dw(case, hp.omega)
    return abs(math.cos(theta) - cos_t), abs(math.sin(theta) - sin_t)

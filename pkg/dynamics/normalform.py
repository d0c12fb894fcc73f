"""
Center-manifold normal form at a certified Hopf point.

The linear part of both kernel cases is a finite sum of point masses
``sum_r M_r x(t - r)``, so every function on the delay interval that appears
in the reduction is an exponential polynomial. Profiles are kept in that form
and all pairings are evaluated in closed form.
"""

import cmath
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from core.config import Config
from core.errors import (
    DegenerateTransversality,
    DomainError,
    SingularE,
    SingularEigenvector,
    ZeroDenominator,
)
from dynamics.chareq import (
    CharCaseDD,
    CharCaseDW,
    HopfPoint,
    KernelCase,
    printed_l2_dd,
    printed_m2_dw,
    transversality_dd,
    transversality_dw,
)
from dynamics.model import ModelParams, chain_matrices, interior_equilibrium, linear_matrices

logger = structlog.get_logger(__name__)


# ========================
# Serializable values
# ========================
class ComplexValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    re: float
    im: float

    @classmethod
    def of(cls, z: complex) -> "ComplexValue":
        z = complex(z)
        return cls(re=z.real, im=z.imag)

    def to_complex(self) -> complex:
        return complex(self.re, self.im)


# ========================
# Exponential profiles and measures
# ========================
@dataclass(frozen=True)
class ExpProfile:
    """phi(theta) = sum of vector * exp(exponent * theta)."""

    pieces: Tuple[Tuple[np.ndarray, complex], ...]

    @classmethod
    def single(cls, vector, exponent: complex) -> "ExpProfile":
        return cls(((np.asarray(vector, dtype=complex), complex(exponent)),))

    def __call__(self, theta: float) -> np.ndarray:
        total = np.zeros_like(self.pieces[0][0])
        for vector, exponent in self.pieces:
            total = total + vector * cmath.exp(exponent * theta)
        return total

    def scaled(self, factor: complex) -> "ExpProfile":
        return ExpProfile(tuple((factor * v, k) for v, k in self.pieces))

    def conj(self) -> "ExpProfile":
        return ExpProfile(tuple((np.conj(v), k.conjugate()) for v, k in self.pieces))

    def __add__(self, other: "ExpProfile") -> "ExpProfile":
        return ExpProfile(self.pieces + other.pieces)


@dataclass(frozen=True)
class DelayMeasure:
    """Point masses (lag r >= 0, matrix M) of the linearized system."""

    masses: Tuple[Tuple[float, np.ndarray], ...]

    @property
    def dimension(self) -> int:
        return self.masses[0][1].shape[0]

    @property
    def tau_max(self) -> float:
        return max(r for r, _ in self.masses)

    def delta_matrix(self, lam: complex) -> np.ndarray:
        """lam*I - sum M exp(-lam r)."""
        out = lam * np.eye(self.dimension, dtype=complex)
        for r, M in self.masses:
            out = out - M * cmath.exp(-lam * r)
        return out

    def delta_matrix_prime(self, lam: complex) -> np.ndarray:
        out = np.eye(self.dimension, dtype=complex)
        for r, M in self.masses:
            out = out + r * M * cmath.exp(-lam * r)
        return out

    def apply(self, profile: ExpProfile) -> np.ndarray:
        """The linear part evaluated on a history profile: sum M phi(-r)."""
        out = np.zeros(self.dimension, dtype=complex)
        for r, M in self.masses:
            out = out + M @ profile(-r)
        return out


def measure_dd(p: ModelParams, tau1: float, tau2: float) -> DelayMeasure:
    A, B1, B2 = linear_matrices(p)
    return DelayMeasure(((0.0, A), (tau1, B1), (tau2, B2)))


def measure_dw(p: ModelParams, tau1: float, q2: float) -> DelayMeasure:
    A1, C1 = chain_matrices(p, q2)
    return DelayMeasure(((0.0, A1), (tau1, C1)))


def bilinear(phi: ExpProfile, psi: ExpProfile, measure: DelayMeasure) -> float:
    """
    <phi, psi> = conj(psi(0)).phi(0) minus the double integral over the measure.

    Linear in phi, conjugate-linear in psi. For point masses the inner
    integral of exponentials is closed form.
    """
    total = 0j
    for a, alpha in phi.pieces:
        for b, beta in psi.pieces:
            b_bar = np.conj(b)
            beta_bar = beta.conjugate()
            total += complex(b_bar @ a)
            rate = alpha + beta_bar
            for r, M in measure.masses:
                if r == 0.0:
                    continue
                if abs(rate) <= 1e-14 * max(1.0, abs(alpha)):
                    kernel = r
                else:
                    kernel = (1.0 - cmath.exp(-rate * r)) / rate
                total += complex(b_bar @ M @ a) * cmath.exp(beta_bar * r) * kernel
    return total


# ========================
# Eigenvectors
# ========================
@dataclass(frozen=True)
class EigPair:
    """h(theta) = v exp(lambda1 theta); h_star(s) = w exp(lambda1 s), normalized <h, h_star> = 1."""

    v: np.ndarray
    w: np.ndarray
    lambda1: complex
    case: KernelCase
    measure: DelayMeasure
    eta_seed: complex
    eta_required: complex

    @property
    def h(self) -> ExpProfile:
        return ExpProfile.single(self.v, self.lambda1)

    @property
    def h_star(self) -> ExpProfile:
        return ExpProfile.single(self.w, self.lambda1)

    def biorthogonality(self) -> Tuple[complex, complex]:
        """(<h, h*>, <conj h, h*>)."""
        return bilinear(self.h, self.h_star, self.measure), bilinear(self.h.conj(), self.h_star, self.measure)

    def eigen_residual(self) -> float:
        return float(np.linalg.norm(self.measure.delta_matrix(self.lambda1) @ self.v))

    def adjoint_residual(self) -> float:
        return float(np.linalg.norm(np.conj(self.w) @ self.measure.delta_matrix(self.lambda1)))

    def rephased(self, phi: float) -> "EigPair":
        factor = cmath.exp(1j * phi)
        return EigPair(self.v * factor, self.w * factor, self.lambda1, self.case, self.measure, self.eta_seed, self.eta_required)


def _normalize(v: np.ndarray, u: np.ndarray, eta_seed: complex, lam1: complex, measure: DelayMeasure):
    """Scale the adjoint so that <h, h*> = 1; the seed normalizer is corrected by one complex factor."""
    seed = eta_seed if abs(eta_seed) > Config.DEGENERACY_TOL else 1.0
    w0 = u / seed
    s = bilinear(ExpProfile.single(v, lam1), ExpProfile.single(w0, lam1), measure)
    if abs(s) < Config.DEGENERACY_TOL:
        raise SingularEigenvector("Adjoint vector is orthogonal to the eigenvector", {"pairing": str(s)})
    w = w0 / np.conj(s)
    eta_required = seed * np.conj(s)
    logger.debug("adjoint_normalized", seed=str(eta_seed), correction=str(s))
    return w, complex(eta_required)


def eig_pair_dd(p: ModelParams, hp: HopfPoint, tau2: Optional[float] = None) -> EigPair:
    tau2 = hp.tau2 if tau2 is None else tau2
    L0 = interior_equilibrium(p)
    x0, y0 = L0.x, L0.y
    tau1 = hp.tau_crit
    lam1 = hp.lambda1
    lam2 = lam1.conjugate()

    denom = p.b3 + lam1 - p.b1 * x0 * cmath.exp(lam2 * tau2)
    if abs(denom) < Config.DEGENERACY_TOL:
        raise SingularEigenvector("v2 denominator b3 + lambda1 - b1 x0 exp(lambda2 tau2) vanishes", {"value": str(denom)})
    v = np.array([1.0, (p.b1 * y0 * cmath.exp(lam2 * tau1) - p.b2) / denom], dtype=complex)

    f1 = (p.a2 * p.b2 - p.a1 * p.b1 * cmath.exp(lam1 * tau1)) / (p.a2 * lam1)
    u = np.array([f1, 1.0], dtype=complex)
    eta_seed = (f1 + p.b1 * y0 * tau1 * cmath.exp(lam1 * tau1)) + np.conj(v[1]) * (
        1.0 + tau2 * p.b2 * x0 * cmath.exp(lam1 * tau2)
    )

    measure = measure_dd(p, tau1, tau2)
    w, eta_required = _normalize(v, u, complex(eta_seed), lam1, measure)
    return EigPair(v, w, lam1, KernelCase.DD, measure, complex(eta_seed), eta_required)


def eig_pair_dw(p: ModelParams, hp: HopfPoint, q2: Optional[float] = None) -> EigPair:
    q2 = hp.q2 if q2 is None else q2
    L0 = interior_equilibrium(p)
    x0, y0 = L0.x, L0.y
    tau = hp.tau_crit
    lam1 = hp.lambda1
    lam2 = lam1.conjugate()
    if abs(lam1) < Config.DEGENERACY_TOL or abs(lam2 + q2) < Config.DEGENERACY_TOL:
        raise SingularEigenvector("lambda2 = 0 or lambda2 = -q2", {"lambda1": str(lam1), "q2": q2})

    v = np.array(
        [p.a2 * x0 * p.b2 * (lam1 + q2) / lam1, -p.b2 * (lam1 + q2), -p.b2 * q2],
        dtype=complex,
    )
    f1 = -(p.b2 - p.b1 * y0 * cmath.exp(lam1 * tau)) / lam2
    f3 = p.b1 * x0 / (lam2 + q2)
    u = np.array([f1, 1.0, f3], dtype=complex)

    f1_printed = -p.b2 / lam2
    e = cmath.exp(lam1 * tau)
    eta_seed = (
        f1_printed * np.conj(v[0])
        + np.conj(v[1]) * (1.0 - p.b1 * y0 / lam2 ** 2 * (1.0 - e - lam2 * tau * p.b2 * e))
        + f3 * np.conj(v[2])
    )

    measure = measure_dw(p, tau, q2)
    w, eta_required = _normalize(v, u, complex(eta_seed), lam1, measure)
    return EigPair(v, w, lam1, KernelCase.DW, measure, complex(eta_seed), eta_required)


# ========================
# Quadratic parts
# ========================
QuadraticForm = Callable[[ExpProfile, ExpProfile], np.ndarray]


def quadratic_dd(p: ModelParams, tau1: float, tau2: float, scale: float = 1.0) -> QuadraticForm:
    """Symmetric bilinear form of -a2 x1 x2 and b1 x1(t - tau1) x2(t - tau2)."""

    def Q(a: ExpProfile, b: ExpProfile) -> np.ndarray:
        a0, b0 = a(0.0), b(0.0)
        a_t1, b_t1 = a(-tau1), b(-tau1)
        a_t2, b_t2 = a(-tau2), b(-tau2)
        return scale * np.array(
            [
                -0.5 * p.a2 * (a0[0] * b0[1] + b0[0] * a0[1]),
                0.5 * p.b1 * (a_t1[0] * b_t2[1] + b_t1[0] * a_t2[1]),
            ]
        )

    return Q


def quadratic_dw(p: ModelParams, tau1: float, scale: float = 1.0) -> QuadraticForm:
    """Symmetric bilinear form of -a2 x1 x2 and b1 x3 x1(t - tau1)."""

    def Q(a: ExpProfile, b: ExpProfile) -> np.ndarray:
        a0, b0 = a(0.0), b(0.0)
        a_t, b_t = a(-tau1), b(-tau1)
        return scale * np.array(
            [
                -0.5 * p.a2 * (a0[0] * b0[1] + b0[0] * a0[1]),
                0.5 * p.b1 * (a0[2] * b_t[0] + b0[2] * a_t[0]),
                0.0,
            ]
        )

    return Q


# ========================
# g-coefficients
# ========================
@dataclass(frozen=True)
class GCoeffs:
    g20: complex
    g11: complex
    g02: complex
    g21: complex
    f20: np.ndarray
    f11: np.ndarray
    f02: np.ndarray
    f21: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    w20: ExpProfile
    w11: ExpProfile
    e_residual: float = 0.0
    w_residual: float = 0.0
    f02_conjugate_error: float = 0.0
    notes: List[str] = field(default_factory=list)


def _g_coeffs(
    pair: EigPair,
    Q: QuadraticForm,
    closed_forms: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]],
) -> GCoeffs:
    lam1 = pair.lambda1
    lam2 = lam1.conjugate()
    v = pair.v
    w_bar = np.conj(pair.w)
    q = pair.h
    q_bar = q.conj()

    f20 = 2.0 * Q(q, q)
    f11 = 2.0 * Q(q, q_bar)
    f02 = 2.0 * Q(q_bar, q_bar)
    g20 = complex(w_bar @ f20)
    g11 = complex(w_bar @ f11)
    g02 = complex(w_bar @ f02)

    E1, E2 = closed_forms(f20, f11)
    measure = pair.measure
    try:
        E1_solved = np.linalg.solve(measure.delta_matrix(2.0 * lam1), f20)
        E2_solved = np.linalg.solve(measure.delta_matrix(0.0), f11)
        e_residual = float(max(np.max(np.abs(E1 - E1_solved)), np.max(np.abs(E2 - E2_solved))))
    except np.linalg.LinAlgError:
        e_residual = float("nan")

    w20 = ExpProfile(
        (
            (-g20 / lam1 * v, lam1),
            (-g02.conjugate() / (3.0 * lam1) * np.conj(v), lam2),
            (np.asarray(E1, dtype=complex), 2.0 * lam1),
        )
    )
    w11 = ExpProfile(
        (
            (g11 / lam1 * v, lam1),
            (-g11.conjugate() / lam1 * np.conj(v), lam2),
            (np.asarray(E2, dtype=complex), 0j),
        )
    )

    # W20 and W11 satisfy L W - kappa W(0) = g q(0) + conj(g) conj(q(0)) - f at theta = 0
    r20 = measure.apply(w20) - 2.0 * lam1 * w20(0.0) - (g20 * v + g02.conjugate() * np.conj(v) - f20)
    r11 = measure.apply(w11) - (g11 * v + g11.conjugate() * np.conj(v) - f11)
    w_residual = float(max(np.max(np.abs(r20)), np.max(np.abs(r11))))

    f21 = 4.0 * Q(q, w11) + 2.0 * Q(q_bar, w20)
    g21 = complex(w_bar @ f21)

    return GCoeffs(
        g20=g20,
        g11=g11,
        g02=g02,
        g21=g21,
        f20=f20,
        f11=f11,
        f02=f02,
        f21=f21,
        E1=np.asarray(E1, dtype=complex),
        E2=np.asarray(E2, dtype=complex),
        w20=w20,
        w11=w11,
        e_residual=e_residual,
        w_residual=w_residual,
        f02_conjugate_error=float(np.max(np.abs(f02 - np.conj(f20)))),
    )


def _check_denominator(value: complex, expression: str) -> complex:
    if abs(value) < Config.DEGENERACY_TOL:
        raise SingularE(f"E-vector denominator vanishes: {expression}", {"value": str(value)})
    return value


def e_vectors_dd(p: ModelParams, lam1: complex, tau1: float, tau2: float, f20: np.ndarray, f11: np.ndarray):
    """Closed-form solutions of Delta(2 lambda1) E1 = f20 and Delta(0) E2 = f11 (Dirac-Dirac)."""
    L0 = interior_equilibrium(p)
    x0, y0 = L0.x, L0.y
    a2x0 = p.a2 * x0
    B = p.b1 * x0
    two = 2.0 * lam1
    row2 = two + p.b3 - B * cmath.exp(-two * tau2)
    denom = _check_denominator(
        two * row2 - a2x0 * (p.b2 - p.b1 * y0 * cmath.exp(-two * tau1)),
        "2l(2l + b3 - b1x0 e^(-2l tau2)) - a2x0(b2 - b1y0 e^(-2l tau1))",
    )
    E11 = (row2 * f20[0] - a2x0 * f20[1]) / denom
    E12 = (f20[0] - two * E11) / a2x0

    E22 = f11[0] / a2x0
    E21 = (f11[1] - (p.b3 - B) * E22) / _check_denominator(p.b2 - p.b1 * y0, "b2 - b1y0")
    return np.array([E11, E12], dtype=complex), np.array([E21, E22], dtype=complex)


def e_vectors_dw(p: ModelParams, lam1: complex, tau1: float, q2: float, f20: np.ndarray, f11: np.ndarray):
    """Closed-form E-vectors of the chain system; the third component is the memory stage."""
    L0 = interior_equilibrium(p)
    x0, y0 = L0.x, L0.y
    a2x0 = p.a2 * x0
    B = p.b1 * x0
    two = 2.0 * lam1
    coupling = p.b2 - p.b1 * y0 * cmath.exp(-two * tau1)
    stage = _check_denominator(two + q2, "2l + q2")
    denom = _check_denominator(
        two * (two + p.b3 - B * q2 / stage) - a2x0 * coupling,
        "2l(2l + b3 - b1x0 q2/(2l + q2)) - a2x0(b2 - b1y0 e^(-2l tau1))",
    )
    E12 = (two * f20[1] - coupling * f20[0]) / denom
    E11 = (f20[0] - a2x0 * E12) / two
    E13 = q2 * E12 / stage

    E22 = f11[0] / a2x0
    E23 = E22
    E21 = (f11[1] - (p.b3 - B) * E22) / _check_denominator(p.b2 - p.b1 * y0, "b2 - b1y0")
    return np.array([E11, E12, E13], dtype=complex), np.array([E21, E22, E23], dtype=complex)


def g_coeffs_dd(p: ModelParams, pair: EigPair, hp: HopfPoint, tau2: Optional[float] = None, nonlinear_scale: float = 1.0) -> GCoeffs:
    tau2 = hp.tau2 if tau2 is None else tau2
    tau1 = hp.tau_crit
    Q = quadratic_dd(p, tau1, tau2, nonlinear_scale)
    return _g_coeffs(pair, Q, lambda f20, f11: e_vectors_dd(p, pair.lambda1, tau1, tau2, f20, f11))


def g_coeffs_dw(p: ModelParams, pair: EigPair, hp: HopfPoint, q2: Optional[float] = None, nonlinear_scale: float = 1.0) -> GCoeffs:
    q2 = hp.q2 if q2 is None else q2
    tau1 = hp.tau_crit
    Q = quadratic_dw(p, tau1, nonlinear_scale)
    return _g_coeffs(pair, Q, lambda f20, f11: e_vectors_dw(p, pair.lambda1, tau1, q2, f20, f11))


# ========================
# d(lambda)/d(tau1)
# ========================
def lambda_prime_dd(p: ModelParams, hp: HopfPoint, tau2: Optional[float] = None, lam: Optional[complex] = None) -> complex:
    tau2 = hp.tau2 if tau2 is None else tau2
    lam = hp.lambda1 if lam is None else lam
    c = CharCaseDD.from_params(p, tau1=hp.tau_crit, tau2=tau2)
    e1 = cmath.exp(-lam * c.tau1)
    e2 = cmath.exp(-lam * c.tau2)
    denom = p.b3 + 2.0 * lam - c.A * c.tau1 * e1 - c.B * (1.0 - lam * c.tau2) * e2
    if abs(denom) < Config.DEGENERACY_TOL:
        raise ZeroDenominator("d(lambda)/d(tau1) denominator vanishes", {"lambda": str(lam)})
    return c.A * lam * e1 / denom


def lambda_prime_dw(p: ModelParams, hp: HopfPoint, q2: Optional[float] = None, lam: Optional[complex] = None) -> complex:
    q2 = hp.q2 if q2 is None else q2
    lam = hp.lambda1 if lam is None else lam
    c = CharCaseDW.from_params(p, q2=q2, tau1=hp.tau_crit)
    e = cmath.exp(-lam * c.tau1)
    drive = c.r1 * lam + c.r0
    denom = 3.0 * lam ** 2 + 2.0 * c.p2 * lam + c.p1 + (c.r1 - c.tau1 * drive) * e
    if abs(denom) < Config.DEGENERACY_TOL:
        raise ZeroDenominator("d(lambda)/d(tau1) denominator vanishes", {"lambda": str(lam)})
    return lam * drive * e / denom


def printed_lambda_prime_dw(p: ModelParams, hp: HopfPoint) -> complex:
    c = CharCaseDW.from_params(p, q2=hp.q2, tau1=hp.tau_crit)
    lam = hp.lambda1
    numerator = (c.r1 * lam ** 2 + c.r0 * lam - c.r1) * cmath.exp(-lam * c.tau1)
    return numerator / (3.0 * lam ** 2 + 2.0 * c.p2 * lam + c.p1 - (c.r1 * lam + c.r0) * c.tau1)


# ========================
# Direction and stability
# ========================
class Direction(str, Enum):
    SUPERCRITICAL = "supercritical"
    SUBCRITICAL = "subcritical"
    UNDETERMINED = "undetermined"


class OrbitStability(str, Enum):
    STABLE = "orbitally stable"
    UNSTABLE = "orbitally unstable"
    UNDETERMINED = "undetermined"


class PeriodTrend(str, Enum):
    INCREASES = "period increases"
    DECREASES = "period decreases"
    UNDETERMINED = "undetermined"


class FormulaCheck(BaseModel):
    """A published closed form evaluated next to its derived counterpart."""

    name: str
    printed: ComplexValue
    derived: ComplexValue
    abs_diff: float
    match: bool


class NormalFormDiagnostics(BaseModel):
    pairing: ComplexValue = Field(..., description="<h, h*>, expected 1")
    cross_pairing: ComplexValue = Field(..., description="<conj h, h*>, expected 0")
    eigen_residual: float
    adjoint_residual: float
    e_residual: float = Field(..., description="Closed-form E-vectors against direct solves")
    w_residual: float = Field(..., description="Defining relations of w20, w11 at theta = 0")
    f02_conjugate_error: float
    lambda_prime_closed_form: ComplexValue = Field(..., description="From the l1/l2 or m1/m2 expressions")
    formula_checks: List[FormulaCheck] = Field(default_factory=list)


class NormalFormResult(BaseModel):
    case: Optional[KernelCase] = None
    omega: float
    tau_crit: Optional[float] = None
    g20: ComplexValue
    g11: ComplexValue
    g02: ComplexValue
    g21: ComplexValue
    C1: ComplexValue
    mu2: float
    beta2: float
    T2: float
    lambda_prime: ComplexValue
    direction: Direction
    stability: OrbitStability
    period_trend: PeriodTrend
    diagnostics: Optional[NormalFormDiagnostics] = None

    @property
    def verdicts(self) -> Tuple[str, str, str]:
        return self.direction.value, self.stability.value, self.period_trend.value


def _sign_verdict(value: float, positive, negative, undetermined):
    if value > 0:
        return positive
    if value < 0:
        return negative
    return undetermined


def hopf_quantities(g: GCoeffs, lambda_prime: complex, omega: float) -> NormalFormResult:
    """
    C1(0), mu2, beta2, T2 and their verdicts.

    Raises:
        DomainError: omega is not positive.
        DegenerateTransversality: Re lambda' is zero.
    """
    if not omega > 0:
        raise DomainError("omega must be positive", {"omega": omega})
    if lambda_prime.real == 0.0:
        raise DegenerateTransversality("Re d(lambda)/d(tau1) is zero", {"lambda_prime": str(lambda_prime)})

    C1 = 1j / (2.0 * omega) * (g.g20 * g.g11 - 2.0 * abs(g.g11) ** 2 - abs(g.g02) ** 2 / 3.0) + g.g21 / 2.0
    mu2 = -C1.real / lambda_prime.real
    beta2 = 2.0 * C1.real
    T2 = -(C1.imag + mu2 * lambda_prime.imag) / omega

    return NormalFormResult(
        omega=omega,
        g20=ComplexValue.of(g.g20),
        g11=ComplexValue.of(g.g11),
        g02=ComplexValue.of(g.g02),
        g21=ComplexValue.of(g.g21),
        C1=ComplexValue.of(C1),
        mu2=mu2,
        beta2=beta2,
        T2=T2,
        lambda_prime=ComplexValue.of(lambda_prime),
        direction=_sign_verdict(mu2, Direction.SUPERCRITICAL, Direction.SUBCRITICAL, Direction.UNDETERMINED),
        stability=_sign_verdict(-beta2, OrbitStability.STABLE, OrbitStability.UNSTABLE, OrbitStability.UNDETERMINED),
        period_trend=_sign_verdict(T2, PeriodTrend.INCREASES, PeriodTrend.DECREASES, PeriodTrend.UNDETERMINED),
    )


# ========================
# Formula audit
# ========================
def formula_check(name: str, printed: complex, derived: complex) -> FormulaCheck:
    diff = abs(complex(printed) - complex(derived))
    return FormulaCheck(
        name=name,
        printed=ComplexValue.of(printed),
        derived=ComplexValue.of(derived),
        abs_diff=diff,
        match=diff <= 1e-6 * max(1.0, abs(complex(derived))),
    )


def formula_checks_dd(p: ModelParams, hp: HopfPoint, pair: EigPair, g: GCoeffs) -> List[FormulaCheck]:
    L0 = interior_equilibrium(p)
    x0, y0 = L0.x, L0.y
    lam1 = pair.lambda1
    lam2 = lam1.conjugate()
    tau1, tau2 = hp.tau_crit, hp.tau2 or 0.0
    B = p.b1 * x0
    case = CharCaseDD.from_params(p, tau1=tau1, tau2=tau2)

    v2_printed = (p.a2 * p.b2 - p.a1 * p.b1 * cmath.exp(lam2 * tau1)) / (p.a2 * (p.b3 + lam1 - B * cmath.exp(lam2 * tau2)))

    theta1, theta2 = hp.omega * tau1, hp.omega * tau2
    l2_derived = (
        2.0 * hp.omega + case.A * tau1 * np.sin(theta1) + B * np.sin(theta2) + B * tau2 * hp.omega * np.cos(theta2)
    )

    f120, f220 = g.f20
    f111, f211 = g.f11
    E11 = ((2 * lam1 + p.b3 - B * cmath.exp(lam1 * tau2)) * f120 - p.a2 * x0 * f220) / (
        2 * lam1 * (-2 * lam1 - p.b3 + B * cmath.exp(2 * lam1 * tau2))
        + p.a2 * x0 * (-p.b2 + p.b1 * y0 * cmath.exp(2 * lam1 * tau1))
    )
    E22 = -f111 / (p.a2 * x0)
    E21 = ((B - p.b3) * E22 + f211) / (p.b1 * y0 - p.b2)

    return [
        formula_check("dd_eigenvector_v2", v2_printed, pair.v[1]),
        formula_check("dd_adjoint_normalizer_eta", pair.eta_seed, pair.eta_required),
        formula_check("dd_transversality_l2", printed_l2_dd(case, hp.omega), l2_derived),
        formula_check("dd_E11", E11, g.E1[0]),
        formula_check("dd_E21", E21, g.E2[0]),
        formula_check("dd_E22", E22, g.E2[1]),
    ]


def formula_checks_dw(p: ModelParams, hp: HopfPoint, pair: EigPair, g: GCoeffs) -> List[FormulaCheck]:
    L0 = interior_equilibrium(p)
    x0, y0 = L0.x, L0.y
    lam1 = pair.lambda1
    lam2 = lam1.conjugate()
    tau, q2 = hp.tau_crit, hp.q2
    case = CharCaseDW.from_params(p, q2=q2, tau1=tau)

    v1_printed = (lam1 + q2) * (lam1 + p.b3 - p.b1 * y0 * cmath.exp(lam2 * tau)) - q2 * p.b1 * x0
    f1_printed = -p.b2 / lam2
    f1_derived = -(p.b2 - p.b1 * y0 * cmath.exp(lam1 * tau)) / lam2

    theta = hp.omega * tau
    m2_derived = (
        2.0 * case.p2 * hp.omega * np.cos(theta)
        + (case.p1 - 3.0 * hp.omega ** 2) * np.sin(theta)
        - case.r1 * tau * hp.omega
    )

    f120, f220, _ = g.f20
    f111, f211, _ = g.f11
    E12 = (2 * lam1 * f220 - p.b2 * f120) / (
        2 * lam1 * (2 * lam1 + p.b3 - p.b1 * y0 * cmath.exp(2 * lam1 * tau)) - p.a2 * p.b2 * x0
    )
    E11 = (p.a2 * x0 * E12 + f120) / (2 * lam1)
    E22 = f111 / (p.a2 * x0)
    E21 = -((p.b3 - p.b1 * y0) * E22 - f211) / p.b2

    return [
        formula_check("dw_eigenvector_v1", v1_printed, pair.v[0]),
        formula_check("dw_adjoint_f1", f1_printed, f1_derived),
        formula_check("dw_adjoint_normalizer_eta", pair.eta_seed, pair.eta_required),
        formula_check("dw_transversality_m2", printed_m2_dw(case, hp.omega), m2_derived),
        formula_check("dw_lambda_prime_quotient", printed_lambda_prime_dw(p, hp), lambda_prime_dw(p, hp)),
        formula_check("dw_E11", E11, g.E1[0]),
        formula_check("dw_E12", E12, g.E1[1]),
        formula_check("dw_E21", E21, g.E2[0]),
        formula_check("dw_E22", E22, g.E2[1]),
    ]


# ========================
# End-to-end
# ========================
def _diagnostics(pair: EigPair, g: GCoeffs, closed_form: Tuple[float, float], checks: Sequence[FormulaCheck]):
    pairing, cross = pair.biorthogonality()
    return NormalFormDiagnostics(
        pairing=ComplexValue.of(pairing),
        cross_pairing=ComplexValue.of(cross),
        eigen_residual=pair.eigen_residual(),
        adjoint_residual=pair.adjoint_residual(),
        e_residual=g.e_residual,
        w_residual=g.w_residual,
        f02_conjugate_error=g.f02_conjugate_error,
        lambda_prime_closed_form=ComplexValue(re=closed_form[0], im=closed_form[1]),
        formula_checks=list(checks),
    )


def normal_form_dd(p: ModelParams, hp: HopfPoint, nonlinear_scale: float = 1.0) -> NormalFormResult:
    pair = eig_pair_dd(p, hp)
    g = g_coeffs_dd(p, pair, hp, nonlinear_scale=nonlinear_scale)
    lam_prime = lambda_prime_dd(p, hp)
    result = hopf_quantities(g, lam_prime, hp.omega)

    checks = formula_checks_dd(p, hp, pair, g)
    for check in checks:
        if not check.match:
            logger.info("printed_formula_mismatch", name=check.name, abs_diff=check.abs_diff)
    closed_form = transversality_dd(CharCaseDD.from_params(p, tau1=hp.tau_crit, tau2=hp.tau2 or 0.0), hp.omega)
    return result.model_copy(
        update={
            "case": KernelCase.DD,
            "tau_crit": hp.tau_crit,
            "diagnostics": _diagnostics(pair, g, closed_form, checks),
        }
    )


def normal_form_dw(p: ModelParams, hp: HopfPoint, nonlinear_scale: float = 1.0) -> NormalFormResult:
    pair = eig_pair_dw(p, hp)
    g = g_coeffs_dw(p, pair, hp, nonlinear_scale=nonlinear_scale)
    lam_prime = lambda_prime_dw(p, hp)
    result = hopf_quantities(g, lam_prime, hp.omega)

    checks = formula_checks_dw(p, hp, pair, g)
    for check in checks:
        if not check.match:
            logger.info("printed_formula_mismatch", name=check.name, abs_diff=check.abs_diff)
    closed_form = transversality_dw(CharCaseDW.from_params(p, q2=hp.q2, tau1=hp.tau_crit), hp.omega)
    return result.model_copy(
        update={
            "case": KernelCase.DW,
            "tau_crit": hp.tau_crit,
            "diagnostics": _diagnostics(pair, g, closed_form, checks),
        }
    )


def normal_form(p: ModelParams, hp: HopfPoint, nonlinear_scale: float = 1.0) -> NormalFormResult:
    if hp.case == KernelCase.DD:
        return normal_form_dd(p, hp, nonlinear_scale)
    return normal_form_dw(p, hp, nonlinear_scale)

import cmath
import math

import numpy as np
import pytest
from scipy import optimize

from core.errors import AmbiguousBranch, DomainError, NoCrossing
from dynamics.chareq import (
    CharCaseDD,
    CharCaseDW,
    CrossingMethod,
    KernelCase,
    crossing_equation_residuals,
    crossing_modulus_dd,
    delta_dd,
    delta_dw,
    delta_general,
    g_of_omega,
    hopf_point_dw,
    hopf_points_dd,
    hopf_points_dw,
    lambda_prime_fd,
    omega_candidates_dd,
    omega_candidates_dw,
    printed_arctan_tau_dw,
    q2_stability_window,
    sextic_coefficients,
    stability_bound_dd,
    track_root,
    transversality_dd,
    transversality_dw,
)
from dynamics.model import DiracKernel, GammaKernel, interior_equilibrium
from dynamics.normalform import lambda_prime_dd, lambda_prime_dw, measure_dd, measure_dw


def grid_sign_changes(f, upper, step=1e-4):
    grid = np.arange(step, upper, step)
    values = f(grid)
    idx = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    return [optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-14) for i in idx]


@pytest.fixture
def random_lambdas():
    rng = np.random.default_rng(7)
    return rng.uniform(-2, 2, 50) + 1j * rng.uniform(-3, 3, 50)


class TestCharacteristicFunctions:
    def test_dd_matches_matrix_determinant(self, worked_params, random_lambdas):
        case = CharCaseDD.from_params(worked_params, tau1=1.3, tau2=0.4)
        measure = measure_dd(worked_params, 1.3, 0.4)
        for lam in random_lambdas:
            det = np.linalg.det(measure.delta_matrix(lam))
            assert abs(delta_dd(case, lam) - det) <= 1e-10 * max(1.0, abs(det))

    def test_dw_matches_chain_determinant(self, worked_params, random_lambdas):
        case = CharCaseDW.from_params(worked_params, q2=0.1, tau1=2.0)
        measure = measure_dw(worked_params, 2.0, 0.1)
        for lam in random_lambdas:
            det = np.linalg.det(measure.delta_matrix(lam))
            assert abs(delta_dw(case, lam) - det) <= 1e-10 * max(1.0, abs(det))

    def test_general_kernel_form(self, worked_params, random_lambdas):
        dd = CharCaseDD.from_params(worked_params, tau1=1.3, tau2=0.4)
        dw = CharCaseDW.from_params(worked_params, q2=0.3, tau1=1.3)
        k1 = DiracKernel(tau=1.3)
        for lam in random_lambdas[:10]:
            assert delta_general(worked_params, k1, DiracKernel(tau=0.4), lam) == pytest.approx(delta_dd(dd, lam), rel=1e-12)
            weak = (lam + 0.3) * delta_general(worked_params, k1, GammaKernel(order=0, rate=0.3), lam)
            assert weak == pytest.approx(delta_dw(dw, lam), rel=1e-10, abs=1e-12)

    def test_conjugate_symmetry(self, worked_params, random_lambdas):
        dd = CharCaseDD.from_params(worked_params, tau1=1.3, tau2=0.4)
        dw = CharCaseDW.from_params(worked_params, q2=0.1, tau1=2.0)
        for lam in random_lambdas:
            lam = complex(lam)
            assert delta_dd(dd, lam.conjugate()) == pytest.approx(delta_dd(dd, lam).conjugate(), rel=1e-12, abs=1e-12)
            assert delta_dw(dw, lam.conjugate()) == pytest.approx(delta_dw(dw, lam).conjugate(), rel=1e-12, abs=1e-12)

    def test_zero_lag_quadratic(self, worked_params):
        case = CharCaseDD.from_params(worked_params)
        roots = np.roots([1.0, worked_params.b3 - case.B, case.A - case.C])
        for r in roots:
            assert abs(delta_dd(case, complex(r))) < 1e-12
            assert r.real < 0


class TestStabilityCriteria:
    def test_stability_bound(self, worked_params):
        assert stability_bound_dd(worked_params) == pytest.approx(2.528, abs=1e-3)

    def test_bound_grows_with_b3_at_fixed_equilibrium(self, worked_params, L0):
        p = worked_params
        bounds = []
        for b3 in (0.95, 1.2, 1.5, 2.0):
            b4 = (b3 * p.a1 - L0.x * (p.a1 * p.b1 - p.a2 * p.b2)) / p.a2
            shifted = p.model_copy(update={"b3": b3, "b4": b4})
            assert interior_equilibrium(shifted).x == pytest.approx(L0.x, rel=1e-12)
            bounds.append(stability_bound_dd(shifted))
        assert np.all(np.diff(bounds) > 0)

    def test_window_inequality_fails_for_worked_example(self, worked_params):
        window = q2_stability_window(worked_params)
        assert not window.inequality_holds
        assert window.window is None
        assert "17.64" in window.reason

    def test_window_roots_not_positive(self, window_params):
        window = q2_stability_window(window_params)
        assert window.inequality_holds
        assert window.window is None
        assert window.roots[0] == pytest.approx(-0.887298, abs=1e-6)
        assert window.roots[1] == pytest.approx(-0.112702, abs=1e-6)
        assert "not both positive" in window.reason

    def test_weak_kernel_stable_without_discrete_lag(self, window_params):
        case = CharCaseDW.from_params(window_params, q2=0.5)
        roots = np.roots([1.0, case.p2, case.p1 + case.r1, case.p0 + case.r0])
        assert all(r.real < 0 for r in roots)


class TestDiracDiracCrossing:
    def test_g_of_omega_pole(self, worked_params, L0):
        with pytest.raises(DomainError):
            g_of_omega(worked_params, L0.x, 0.0)

    def test_g_of_omega_increasing(self, worked_params, L0):
        grid = np.linspace(0.01, 10.0, 1000)
        values = np.array([g_of_omega(worked_params, L0.x, w) for w in grid])
        assert np.all(np.diff(values) > 0)
        assert g_of_omega(worked_params, L0.x, 1e-6) < -1e5

    def test_printed_route_takes_smallest_lag(self, worked_params, monkeypatch):
        import dynamics.chareq as chareq

        def vanishing_on_axis(case, lam):
            return 0.0 if min(abs(lam.imag - 0.5), abs(lam.imag - 2.0)) < 1e-12 else 1.0

        monkeypatch.setattr(chareq, "omega_candidates_dd", lambda p, x0: [0.5, 2.0])
        monkeypatch.setattr(chareq, "delta_dd", vanishing_on_axis)
        point = chareq.hopf_point_dd(worked_params, 0.0)
        assert point.method == CrossingMethod.PRINTED
        assert point.omega == 2.0
        assert point.tau_crit == pytest.approx(math.pi / 2.0)

    def test_printed_quartic_matches_grid_scan(self, worked_params, L0):
        def quartic(w):
            return (
                w ** 4
                - (worked_params.b1 ** 2 * L0.x ** 2 - worked_params.b3 ** 2 - 2 * worked_params.a2 * worked_params.b2 * L0.x) * w ** 2
                + (worked_params.a2 ** 2 * worked_params.b2 ** 2 - worked_params.a1 ** 2 * worked_params.b1 ** 2) * L0.x ** 2
            )

        scanned = grid_sign_changes(quartic, 10.0)
        solved = omega_candidates_dd(worked_params, L0.x)
        assert len(scanned) == len(solved) == 1
        assert solved[0] == pytest.approx(scanned[0], abs=1e-6)
        assert solved[0] == pytest.approx(0.40598, abs=1e-4)

    def test_exact_modulus_matches_grid_scan(self, worked_params, L0, hopf_dd):
        scanned = grid_sign_changes(lambda w: crossing_modulus_dd(worked_params, L0.x, 0.01, w), 10.0)
        assert len(scanned) == 1
        assert hopf_dd.omega == pytest.approx(scanned[0], abs=1e-6)

    def test_crossing_is_certified(self, worked_params, hopf_dd):
        assert hopf_dd.case == KernelCase.DD
        assert hopf_dd.method == CrossingMethod.DERIVED
        assert hopf_dd.residual < 1e-9
        case = CharCaseDD.from_params(worked_params, tau1=hopf_dd.tau_crit, tau2=0.01)
        assert abs(delta_dd(case, 1j * hopf_dd.omega)) < 1e-9
        assert max(crossing_equation_residuals(worked_params, hopf_dd)) < 1e-9
        assert hopf_dd.tau_crit > 0.01
        assert hopf_dd.omega == pytest.approx(0.4536, abs=2e-3)
        assert hopf_dd.tau_crit == pytest.approx(1.986, abs=2e-2)

    def test_root_crosses_left_to_right(self, hopf_dd):
        assert hopf_dd.d_re > 0
        assert not hopf_dd.degenerate

    def test_later_branches(self, worked_params, hopf_dd):
        points = hopf_points_dd(worked_params, 0.01, n=3)
        assert len(points) == 3
        assert [pt.branch_index for pt in points] == [1, 2, 3]
        assert points[0].tau_crit == pytest.approx(hopf_dd.tau_crit, abs=1e-9)
        spacing = 2 * math.pi / hopf_dd.omega
        assert points[1].tau_crit - points[0].tau_crit == pytest.approx(spacing, rel=1e-8)
        assert all(pt.residual < 1e-9 for pt in points)

    def test_transversality_triple_agreement(self, worked_params, hopf_dd):
        case = CharCaseDD.from_params(worked_params, tau1=hopf_dd.tau_crit, tau2=0.01)
        closed = complex(*transversality_dd(case, hopf_dd.omega))
        quotient = lambda_prime_dd(worked_params, hopf_dd)
        numeric = lambda_prime_fd(worked_params, hopf_dd)
        for a, b in ((closed, quotient), (closed, numeric), (quotient, numeric)):
            assert a.real == pytest.approx(b.real, rel=1e-3, abs=1e-7)
            assert a.imag == pytest.approx(b.imag, rel=1e-3, abs=1e-7)

    def test_root_moves_right_past_crossing(self, worked_params, hopf_dd):
        before = track_root(worked_params, hopf_dd, 0.95 * hopf_dd.tau_crit)
        after = track_root(worked_params, hopf_dd, 1.05 * hopf_dd.tau_crit)
        assert before.real < 0 < after.real


class TestDiracWeakCrossing:
    def test_sextic_matches_grid_scan(self, worked_params):
        case = CharCaseDW.from_params(worked_params, q2=0.1)
        c0, c1, c2, c3 = sextic_coefficients(case)
        scanned = grid_sign_changes(lambda w: c0 * w ** 6 + c1 * w ** 4 + c2 * w ** 2 + c3, 10.0)
        solved = omega_candidates_dw(case)
        assert len(scanned) == len(solved) == 1
        assert solved[0] == pytest.approx(scanned[0], abs=1e-6)
        assert solved[0] ** 2 == pytest.approx(0.1574, abs=1e-3)

    def test_printed_sextic_differs(self, worked_params):
        case = CharCaseDW.from_params(worked_params, q2=0.1)
        printed = sextic_coefficients(case, printed=True)
        derived = sextic_coefficients(case)
        assert printed[2] - derived[2] == pytest.approx(2 * case.r1 ** 2)

    def test_crossing_is_certified(self, worked_params, hopf_dw):
        assert hopf_dw.case == KernelCase.DW
        assert hopf_dw.q2 == 0.1
        assert hopf_dw.residual < 1e-9
        assert max(crossing_equation_residuals(worked_params, hopf_dw)) < 1e-9
        assert hopf_dw.omega == pytest.approx(0.3967, abs=2e-3)
        assert hopf_dw.tau_crit == pytest.approx(2.49, abs=3e-2)
        assert hopf_dw.d_re > 0

    def test_derived_lag_is_smallest_positive(self, worked_params, hopf_dw):
        case = CharCaseDW.from_params(worked_params, q2=0.1)
        arctan_lag = printed_arctan_tau_dw(case, hopf_dw.omega)
        step = math.pi / hopf_dw.omega
        lifted = [arctan_lag + k * step for k in range(-2, 4)]
        certified = [t for t in lifted if t > 0 and abs(delta_dw(case.with_tau1(t), 1j * hopf_dw.omega)) < 1e-9]
        if certified:
            assert hopf_dw.tau_crit == pytest.approx(min(certified), abs=1e-9)

    def test_transversality_triple_agreement(self, worked_params, hopf_dw):
        case = CharCaseDW.from_params(worked_params, q2=0.1, tau1=hopf_dw.tau_crit)
        closed = complex(*transversality_dw(case, hopf_dw.omega))
        quotient = lambda_prime_dw(worked_params, hopf_dw)
        numeric = lambda_prime_fd(worked_params, hopf_dw)
        for a, b in ((closed, quotient), (closed, numeric), (quotient, numeric)):
            assert a.real == pytest.approx(b.real, rel=1e-3, abs=1e-7)
            assert a.imag == pytest.approx(b.imag, rel=1e-3, abs=1e-7)

    def test_conjugate_symmetry_of_lambda_prime(self, worked_params, hopf_dw):
        at_conjugate = lambda_prime_dw(worked_params, hopf_dw, lam=-1j * hopf_dw.omega)
        assert at_conjugate == pytest.approx(lambda_prime_dw(worked_params, hopf_dw).conjugate(), rel=1e-12)

    def test_several_points_ordered(self, worked_params, hopf_dw):
        points = hopf_points_dw(worked_params, 0.1, n=2)
        assert len(points) == 2
        assert points[0].tau_crit < points[1].tau_crit
        assert points[1].tau_crit - points[0].tau_crit == pytest.approx(2 * math.pi / hopf_dw.omega, rel=1e-8)

    def test_uncertified_frequencies_mean_no_crossing(self, worked_params, monkeypatch):
        import dynamics.chareq as chareq

        monkeypatch.setattr(chareq, "omega_candidates_dw", lambda case, printed=False: [0.3967, 0.9])
        monkeypatch.setattr(chareq, "hopf_points_dw", lambda p, q2, n=1, k_max=None: [])
        with pytest.raises(NoCrossing):
            hopf_point_dw(worked_params, 0.1)

    def test_ambiguous_branch_lists_points(self, worked_params, hopf_dw, monkeypatch):
        import dynamics.chareq as chareq

        monkeypatch.setattr(chareq, "omega_candidates_dw", lambda case, printed=False: [0.3967, 0.9])
        monkeypatch.setattr(chareq, "hopf_points_dw", lambda p, q2, n=1, k_max=None: [hopf_dw, hopf_dw])
        with pytest.raises(AmbiguousBranch) as info:
            hopf_point_dw(worked_params, 0.1)
        assert len(info.value.context["points"]) == 2

    def test_lambda_prime_helper_handles_conjugate(self, worked_params, hopf_dd):
        value = lambda_prime_dd(worked_params, hopf_dd, lam=-1j * hopf_dd.omega)
        assert value == pytest.approx(lambda_prime_dd(worked_params, hopf_dd).conjugate(), rel=1e-12)
        assert cmath.isfinite(value)

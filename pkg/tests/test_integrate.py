import math

import numpy as np
import pytest
from structlog.testing import capture_logs

from core.config import Config
from core.errors import DomainError, InsufficientData
from dynamics.chareq import KernelCase, stability_bound_dd
from dynamics.integrate import (
    HistorySpec,
    Trajectory,
    TrajectoryMeta,
    memory_initial_value,
    simulate_chain,
    simulate_dd,
    simulate_quadrature_weak,
    summarize,
)


def synthetic_run(params, x_of_t, y_value, t_end=200.0, dt=0.01) -> Trajectory:
    times = np.arange(int(round(t_end / dt)) + 1) * dt
    states = np.column_stack([x_of_t(times), np.full_like(times, y_value)])
    meta = TrajectoryMeta(
        system="synthetic",
        case=KernelCase.DD,
        params=params,
        lags=[0.0, 0.0],
        dt=dt,
        t_end=t_end,
        history=HistorySpec(),
    )
    return Trajectory(times, states, ("x", "y"), meta)


class TestHistory:
    def test_constant_needs_point(self):
        with pytest.raises(ValueError):
            HistorySpec(kind="constant")

    def test_tabulated_needs_increasing_times(self):
        with pytest.raises(ValueError):
            HistorySpec.tabulated([0.0, -1.0], [(1.0, 1.0), (1.0, 1.0)])

    def test_perturbed_offsets_from_equilibrium(self, L0):
        value = HistorySpec.perturbed(0.01, -0.02).resolve(L0)(-3.0)
        np.testing.assert_allclose(value, [L0.x + 0.01, L0.y - 0.02])

    def test_default_offset_follows_equilibrium(self, L0):
        history = HistorySpec()
        np.testing.assert_allclose(history.resolve(L0)(-1.0), [L0.x + 0.025, L0.y + 0.025], rtol=1e-12)
        assert history.anchored(L0).delta == pytest.approx((0.025, 0.025))
        assert HistorySpec.perturbed(1e-3).anchored(L0).delta == (1e-3, 0.0)

    def test_tabulated_interpolates(self, L0):
        history = HistorySpec.tabulated([-2.0, 0.0], [(0.0, 1.0), (1.0, 3.0)])
        np.testing.assert_allclose(history.resolve(L0)(-1.0), [0.5, 2.0])
        assert history.covers(2.0)
        assert not history.covers(2.5)

    def test_short_history_is_rejected(self, worked_params):
        history = HistorySpec.tabulated([-0.5, 0.0], [(0.2, 2.0), (0.2, 2.0)])
        with pytest.raises(DomainError):
            simulate_dd(worked_params, 1.0, 0.2, history, t_end=1.0, dt=0.01)


class TestMemoryInitialValue:
    def test_constant_history_is_exact(self, L0):
        assert memory_initial_value(HistorySpec.constant(0.3, 1.7), L0, 0.1) == 1.7
        assert memory_initial_value(HistorySpec.perturbed(0.0, 0.05), L0, 0.1, order=2) == L0.y + 0.05

    def test_linear_ramp_history(self, L0):
        history = HistorySpec.tabulated([-10.0, 0.0], [(0.0, 2.0), (0.0, 1.0)])
        expected = 1.2 - 0.2 * math.exp(-5.0)
        assert memory_initial_value(history, L0, 0.5) == pytest.approx(expected, rel=1e-9)


class TestIntegrator:
    def test_equilibrium_is_preserved(self, worked_params, L0):
        at_rest = HistorySpec.constant(L0.x, L0.y)
        runs = [
            simulate_dd(worked_params, 1.5, 0.3, at_rest, t_end=100.0, dt=0.01),
            simulate_chain(worked_params, 1.5, 0.1, at_rest, t_end=100.0, dt=0.01),
            simulate_quadrature_weak(worked_params, 1.5, 0.1, at_rest, t_end=100.0, dt=0.01),
        ]
        for traj in runs:
            assert not traj.blew_up
            assert np.max(np.abs(traj.deviations(L0))) < 1e-10

    def test_chain_labels_and_shift(self, worked_params, L0):
        traj = simulate_chain(worked_params, 1.0, 0.2, HistorySpec.constant(L0.x, L0.y), t_end=5.0, dt=0.01)
        assert traj.labels == ("x", "y", "z")
        np.testing.assert_allclose(traj.component("z"), L0.y, atol=1e-12)
        deep = simulate_chain(worked_params, 1.0, 0.2, HistorySpec.perturbed(1e-3), t_end=5.0, dt=0.01, order=2)
        assert deep.labels == ("x", "y", "z0", "z1", "z2")

    def test_zero_lags_decay(self, worked_params, L0):
        traj = simulate_dd(worked_params, 0.0, 0.0, HistorySpec.perturbed(1e-2, -1e-2), t_end=60.0, dt=0.01)
        summary = summarize(traj, L0)
        assert summary.converged
        assert not summary.oscillating

    def test_fourth_order_convergence(self, worked_params):
        history = HistorySpec.constant(0.5, 1.5)

        def run(dt):
            return simulate_dd(worked_params, 1.0, 0.5, history, t_end=20.0, dt=dt).states

        reference = run(0.0025)
        coarse = np.max(np.abs(run(0.02) - reference[::8]))
        fine = np.max(np.abs(run(0.01) - reference[::4]))
        assert math.log2(coarse / fine) >= 3.5

    def test_chain_matches_moving_integral(self, worked_params):
        history = HistorySpec.perturbed(1e-2, 5e-3)
        chain = simulate_chain(worked_params, 5.0, 0.1, history, t_end=50.0, dt=0.01)
        oracle = simulate_quadrature_weak(worked_params, 5.0, 0.1, history, t_end=50.0, dt=0.01)
        assert np.max(np.abs(chain.states - oracle.states)) < 1e-4

    def test_fast_memory_approaches_instant_lymphocytes(self, worked_params):
        history = HistorySpec.perturbed(1e-2)
        instant = simulate_dd(worked_params, 1.0, 0.0, history, t_end=20.0, dt=1e-3)
        gaps = []
        for q2 in (10.0, 100.0, 1000.0):
            weak = simulate_chain(worked_params, 1.0, q2, history, t_end=20.0, dt=1e-3)
            gaps.append(np.max(np.abs(weak.states[:, :2] - instant.states)))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-2

    def test_chain_fourth_order_convergence(self, worked_params):
        history = HistorySpec.constant(0.5, 1.5)

        def run(dt):
            return simulate_chain(worked_params, 1.0, 0.5, history, t_end=20.0, dt=dt).states

        reference = run(0.0025)
        coarse = np.max(np.abs(run(0.02) - reference[::8]))
        fine = np.max(np.abs(run(0.01) - reference[::4]))
        assert math.log2(coarse / fine) == pytest.approx(4.0, abs=0.2)

    def test_blow_up_truncates(self, worked_params, L0, monkeypatch):
        monkeypatch.setattr(Config, "BLOW_UP", 2.0)
        traj = simulate_dd(worked_params, 1.0, 0.2, HistorySpec.perturbed(1e-3), t_end=10.0, dt=0.01)
        assert traj.blew_up
        assert traj.meta.blow_up_time == pytest.approx(0.01)
        assert len(traj.times) == 1
        with pytest.raises(InsufficientData):
            summarize(traj, L0)

    def test_coarse_step_warning(self, worked_params):
        with capture_logs() as logs:
            simulate_dd(worked_params, 0.2, 0.1, HistorySpec.perturbed(1e-3), t_end=1.0, dt=0.05)
        assert any(entry["event"] == "dt_exceeds_lag_guard" for entry in logs)

    def test_rejects_non_positive_step(self, worked_params):
        with pytest.raises(DomainError):
            simulate_dd(worked_params, 1.0, 0.2, HistorySpec.perturbed(1e-3), t_end=1.0, dt=0.0)


class TestSummary:
    def test_sinusoid(self, worked_params, L0):
        traj = synthetic_run(worked_params, lambda t: L0.x + 0.1 * np.sin(2 * np.pi * t / 5.0), L0.y)
        summary = summarize(traj, L0)
        assert summary.oscillating
        assert not summary.converged
        assert summary.period_estimate == pytest.approx(5.0, rel=1e-3)
        assert summary.amplitude == pytest.approx(0.1, rel=1e-3)
        assert summary.cycles_used == 10
        assert not summary.negative_populations

    def test_constant_run_converges(self, worked_params, L0):
        traj = synthetic_run(worked_params, lambda t: np.full_like(t, L0.x), L0.y)
        summary = summarize(traj, L0)
        assert summary.converged
        assert summary.final_deviation == 0.0
        assert summary.period_estimate is None

    def test_negative_populations_flagged(self, worked_params, L0):
        traj = synthetic_run(worked_params, lambda t: L0.x + 0.5 * np.sin(t), L0.y)
        assert summarize(traj, L0).negative_populations

    def test_short_run(self, worked_params, L0):
        traj = synthetic_run(worked_params, lambda t: np.full_like(t, L0.x), L0.y, t_end=0.5)
        with pytest.raises(InsufficientData):
            summarize(traj, L0)


# Small-amplitude onset: the orbit is still close to the linear one here.
ONSET_OFFSET = 1e-4
ONSET_HORIZON = 300.0
ONSET_DT = 0.01


@pytest.mark.slow
class TestDynamicsAgainstTheory:
    """Default runs on both sides of the first crossing agree with the bifurcation analysis."""

    def check_sides(self, simulate, hp, L0):
        below = summarize(simulate(0.9 * hp.tau_crit, HistorySpec(), Config.T_END, Config.DT), L0)
        above = summarize(simulate(1.1 * hp.tau_crit, HistorySpec(), Config.T_END, Config.DT), L0)
        assert below.converged
        assert above.oscillating
        # saturated orbit runs slower than 2*pi/omega
        assert hp.period < above.period_estimate < 1.2 * hp.period

        onset_history = HistorySpec.perturbed(ONSET_OFFSET)
        onset = summarize(simulate(1.1 * hp.tau_crit, onset_history, ONSET_HORIZON, ONSET_DT), L0)
        assert onset.oscillating
        assert onset.period_estimate == pytest.approx(hp.period, rel=0.1)

    def test_two_discrete_lags(self, worked_params, hopf_dd, L0):
        def simulate(tau1, history, t_end, dt):
            return simulate_dd(worked_params, tau1, hopf_dd.tau2, history, t_end=t_end, dt=dt)

        self.check_sides(simulate, hopf_dd, L0)

    def test_weak_lymphocyte_memory(self, worked_params, hopf_dw, L0):
        def simulate(tau1, history, t_end, dt):
            return simulate_chain(worked_params, tau1, hopf_dw.q2, history, t_end=t_end, dt=dt)

        self.check_sides(simulate, hopf_dw, L0)

    def test_half_the_delay_sum_bound_decays(self, worked_params, L0):
        half = 0.5 * stability_bound_dd(worked_params)
        traj = simulate_dd(worked_params, half - 0.01, 0.01, HistorySpec(), t_end=Config.T_END, dt=0.01)
        assert summarize(traj, L0).converged

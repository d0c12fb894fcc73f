import json

import pytest
from structlog.testing import capture_logs

from cli.run_config import DEFAULT_PARAMS, RunConfig, load_run_config, to_sections
from core.config import Config
from core.errors import ConfigError
from dynamics.chareq import KernelCase
from dynamics.integrate import HistoryKind, HistorySpec
from dynamics.model import GammaKernel


@pytest.fixture
def restore_config():
    saved = {key: value for key, value in vars(Config).items() if key.isupper()}
    yield
    for key, value in saved.items():
        setattr(Config, key, value)


class TestEnvironment:
    def test_defaults_validate(self):
        assert Config.validate()

    def test_reload_reads_environment(self, monkeypatch, restore_config):
        monkeypatch.setenv("TUMORDDE_DT", "0.005")
        monkeypatch.setenv("TUMORDDE_K_MAX", "12")
        monkeypatch.setenv("TUMORDDE_LOG_JSON", "true")
        Config.reload()
        assert Config.DT == 0.005
        assert Config.K_MAX == 12
        assert Config.LOG_JSON is True

    def test_malformed_values_fall_back(self, monkeypatch, restore_config):
        monkeypatch.setenv("TUMORDDE_T_END", "forever")
        monkeypatch.setenv("TUMORDDE_NEWTON_MAX_ITER", "many")
        Config.reload()
        assert Config.T_END == 500.0
        assert Config.NEWTON_MAX_ITER == 100

    def test_rejects_non_positive_tolerance(self, monkeypatch, restore_config):
        monkeypatch.setenv("TUMORDDE_RESIDUAL_TOL", "0")
        with pytest.raises(ValueError, match="TUMORDDE_RESIDUAL_TOL"):
            Config.reload()

    def test_rejects_unknown_log_level(self, monkeypatch, restore_config):
        monkeypatch.setenv("TUMORDDE_LOG_LEVEL", "chatty")
        with pytest.raises(ValueError, match="LOG_LEVEL"):
            Config.reload()

    def test_summary_lists_values(self):
        assert "Residual tol" in Config.summary()


class TestRunConfig:
    def test_defaults(self):
        cfg = load_run_config()
        assert cfg.params == DEFAULT_PARAMS
        assert cfg.case == KernelCase.DD
        assert cfg.tau1 == 0.0 and cfg.tau2 == 0.0
        assert cfg.run.history.kind == HistoryKind.PERTURBED

    def test_ini_file_with_overrides(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(
            "[model]\na1 = 3.0\n"
            "[kernels]\nkernel2 = gamma\ntau1 = 5.0\nq2 = 0.1\n"
            "[run]\ndt = 0.002\nhistory = constant\npoint = 0.2, 2.4\nregion = -2, 0.5, 0, 3\n",
            encoding="utf-8",
        )
        cfg = load_run_config(path, {"tau1": 4.0, "b3": 0.9})
        assert cfg.params.a1 == 3.0
        assert cfg.params.b3 == 0.9
        assert cfg.case == KernelCase.DW
        assert cfg.q2 == 0.1
        assert cfg.tau1 == 4.0
        assert cfg.run.dt == 0.002
        assert cfg.run.history == HistorySpec.constant(0.2, 2.4)
        assert cfg.run.region == (-2.0, 0.5, 0.0, 3.0)

    def test_q2_flag_selects_gamma(self):
        cfg = load_run_config(None, {"q2": 0.3, "order": 2})
        assert isinstance(cfg.kernel2, GammaKernel)
        assert cfg.order == 2

    def test_tau2_flag_conflicts_with_q2(self):
        with pytest.raises(ConfigError, match="--tau2 and --q2"):
            load_run_config(None, {"q2": 0.1, "tau2": 0.3})

    def test_file_tau2_ignored_for_gamma_is_logged(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[kernels]\nkernel2 = dirac\ntau2 = 0.2\n", encoding="utf-8")
        with capture_logs() as logs:
            cfg = load_run_config(path, {"q2": 0.1})
        assert cfg.case == KernelCase.DW
        assert any(entry["event"] == "tau2_ignored_for_gamma_kernel" for entry in logs)

    def test_gamma_without_rate(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[kernels]\nkernel2 = gamma\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="kernels.q2"):
            load_run_config(path)

    def test_invalid_value_names_field(self):
        with pytest.raises(ConfigError, match="run.dt"):
            load_run_config(None, {"dt": -1.0})

    def test_unknown_kernel(self):
        with pytest.raises(ConfigError, match="kernel2"):
            load_run_config(None, {"kernel2": "uniform"})

    def test_unknown_section(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[solver]\nmethod = rk4\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="solver"):
            load_run_config(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_run_config(path)

    def test_tabulated_history_round_trip(self, tmp_path):
        history = HistorySpec.tabulated([-6.0, -3.0, 0.0], [(0.2, 2.4), (0.18, 2.5), (0.17, 2.6)])
        cfg = load_run_config(None, {"history": "perturbed", "tau1": 5.0}).model_copy(
            update={"run": RunConfig().run.model_copy(update={"history": history})}
        )
        path = tmp_path / "emitted.json"
        path.write_text(json.dumps({"config": cfg.model_dump(mode="json")}), encoding="utf-8")
        assert load_run_config(path) == cfg

    def test_sections_round_trip(self):
        cfg = load_run_config(None, {"q2": 0.2, "tau1": 3.0})
        model, kernels, run = to_sections(cfg)
        assert kernels == {"tau1": 3.0, "kernel2": "gamma", "q2": 0.2, "order": 0}
        assert model == DEFAULT_PARAMS.model_dump()
        assert run["history"] == "perturbed"

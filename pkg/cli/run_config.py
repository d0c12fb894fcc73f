"""
Per-run configuration.

A run is described by a sectioned key-value file::

    [model]
    a1 = 2.5
    ...
    [kernels]
    kernel2 = gamma
    tau1 = 5.0
    q2 = 0.1
    [run]
    dt = 0.001
    history = perturbed
    delta = 0.025, 0.025

or by the JSON document a previous run emitted (its ``config`` object).
Command-line flags override file values. ``delta`` is optional; without it a
perturbed history starts from L0 offset by 1% of max(x0, y0) on both
components.
"""

import configparser
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from core.config import Config
from core.errors import ConfigError
from dynamics.chareq import KernelCase
from dynamics.integrate import HistoryKind, HistorySpec
from dynamics.model import DiracKernel, GammaKernel, KernelSpec, ModelParams

logger = structlog.get_logger(__name__)

# Worked example parameter set used as the default model.
DEFAULT_PARAMS = ModelParams(a1=2.5, a2=1.0, b1=1.0, b2=0.4, b3=0.95, b4=2.0)

MODEL_KEYS = ("a1", "a2", "b1", "b2", "b3", "b4")
KERNEL_KEYS = ("kernel2", "tau1", "tau2", "q2", "order")


class RunOptions(BaseModel):
    """Command options; unused ones are ignored by commands that do not need them."""

    model_config = ConfigDict(frozen=True)

    dt: float = Field(default_factory=lambda: Config.DT, gt=0, description="Integration step")
    t_end: float = Field(default_factory=lambda: Config.T_END, gt=0, description="Integration horizon")
    history: HistorySpec = Field(default_factory=HistorySpec)
    as_printed: bool = Field(False, description="Lag x2 instead of x1 in the chain system")
    n_points: int = Field(1, ge=1, description="Crossings to report")
    k_max: int = Field(default_factory=lambda: Config.K_MAX, ge=1)
    region: Tuple[float, float, float, float] = Field((-3.0, 1.0, 0.0, 4.0), description="Root scan rectangle")
    grid: Tuple[int, int] = Field((81, 81), description="Root scan grid")
    nonlinear_scale: float = Field(1.0, ge=0, description="Multiplier on the quadratic terms (0 for debugging)")
    output_dir: Path = Field(default_factory=lambda: Config.OUTPUT_DIR)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: ModelParams = DEFAULT_PARAMS
    kernel1: KernelSpec = DiracKernel(tau=0.0)
    kernel2: KernelSpec = DiracKernel(tau=0.0)
    run: RunOptions = Field(default_factory=RunOptions)

    @field_validator("kernel1")
    @classmethod
    def _discrete_first_kernel(cls, value):
        if not isinstance(value, DiracKernel):
            raise ValueError("only a discrete lag is supported on the malignant-cell factor")
        if value.tau < 0:
            raise ValueError("tau1 must be non-negative")
        return value

    @field_validator("kernel2")
    @classmethod
    def _supported_second_kernel(cls, value):
        if isinstance(value, GammaKernel) and value.order != 0:
            logger.info("gamma_kernel_simulation_only", order=value.order)
        return value

    @property
    def case(self) -> KernelCase:
        return KernelCase.DW if isinstance(self.kernel2, GammaKernel) else KernelCase.DD

    @property
    def tau1(self) -> float:
        return self.kernel1.tau

    @property
    def tau2(self) -> float:
        return self.kernel2.tau if isinstance(self.kernel2, DiracKernel) else 0.0

    @property
    def q2(self) -> Optional[float]:
        return self.kernel2.rate if isinstance(self.kernel2, GammaKernel) else None

    @property
    def order(self) -> int:
        return self.kernel2.order if isinstance(self.kernel2, GammaKernel) else 0


# ========================
# Sections <-> RunConfig
# ========================
def _split_floats(text: str):
    return tuple(float(part) for part in str(text).replace(";", ",").split(",") if part.strip())


def to_sections(cfg: RunConfig) -> Tuple[Dict[str, Any], Dict[str, Any], Dict[str, Any]]:
    model = cfg.params.model_dump()
    kernels: Dict[str, Any] = {"tau1": cfg.tau1}
    if cfg.case == KernelCase.DW:
        kernels.update(kernel2="gamma", q2=cfg.q2, order=cfg.order)
    else:
        kernels.update(kernel2="dirac", tau2=cfg.tau2)
    run = cfg.run.model_dump()
    history = run.pop("history")
    run["history"] = history["kind"]
    if history["delta"] is not None:
        run["delta"] = history["delta"]
    if history["point"] is not None:
        run["point"] = history["point"]
    if history["times"] is not None:
        run["history_times"] = history["times"]
        run["history_values"] = history["values"]
    return model, kernels, run


def _build(model: Dict[str, Any], kernels: Dict[str, Any], run: Dict[str, Any]) -> RunConfig:
    kind = str(kernels.get("kernel2", "dirac")).lower()
    kernel1 = {"kind": "dirac", "tau": kernels.get("tau1", 0.0)}
    if kind == "gamma":
        if kernels.get("q2") is None:
            raise ConfigError("kernels.q2 is required for a gamma kernel", {"field": "kernels.q2"})
        kernel2 = {"kind": "gamma", "order": kernels.get("order", 0), "rate": kernels["q2"]}
        if kernels.get("tau2") is not None:
            logger.warning("tau2_ignored_for_gamma_kernel", tau2=kernels["tau2"])
    elif kind == "dirac":
        kernel2 = {"kind": "dirac", "tau": kernels.get("tau2", 0.0)}
    else:
        raise ConfigError(f"kernels.kernel2 must be 'dirac' or 'gamma', got {kind!r}", {"field": "kernels.kernel2"})

    run = dict(run)
    history: Dict[str, Any] = {"kind": run.pop("history", HistoryKind.PERTURBED.value)}
    if run.get("delta") is not None:
        delta = run.pop("delta")
        history["delta"] = _split_floats(delta) if isinstance(delta, str) else tuple(delta)
    run.pop("delta", None)
    if "point" in run:
        point = run.pop("point")
        history["point"] = _split_floats(point) if isinstance(point, str) else tuple(point)
    if "history_times" in run:
        history["times"] = run.pop("history_times")
        history["values"] = run.pop("history_values", None)
    for key in ("region", "grid"):
        if isinstance(run.get(key), str):
            run[key] = _split_floats(run[key])

    data = {
        "params": {**DEFAULT_PARAMS.model_dump(), **model},
        "kernel1": kernel1,
        "kernel2": kernel2,
        "run": {**run, "history": history},
    }
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        fields = [".".join(str(part) for part in err["loc"]) + ": " + err["msg"] for err in exc.errors()]
        raise ConfigError("Invalid run configuration: " + "; ".join(fields), {"errors": fields}) from exc


def _read_file(path: Path) -> Tuple[Dict[str, Any], Dict[str, Any], Dict[str, Any]]:
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Malformed JSON config {path}: {exc}", {"path": str(path)}) from exc
        document = document.get("config", document)
        try:
            return to_sections(RunConfig.model_validate(document))
        except ValidationError as exc:
            raise ConfigError(f"Invalid JSON config {path}: {exc}", {"path": str(path)}) from exc

    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"Malformed config {path}: {exc}", {"path": str(path)}) from exc
    unknown = set(parser.sections()) - {"model", "kernels", "run"}
    if unknown:
        raise ConfigError(f"Unknown config sections: {sorted(unknown)}", {"path": str(path)})

    def section(name):
        return dict(parser[name]) if parser.has_section(name) else {}

    return section("model"), section("kernels"), section("run")


def load_run_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Merge a config file (INI or emitted JSON) with flag overrides.

    Raises:
        ConfigError: malformed file or invalid values; the message names the fields.
    """
    model: Dict[str, Any] = {}
    kernels: Dict[str, Any] = {}
    run: Dict[str, Any] = {}
    if path is not None:
        model, kernels, run = _read_file(Path(path))

    overrides = overrides or {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in MODEL_KEYS:
            model[key] = value
        elif key in KERNEL_KEYS:
            kernels[key] = value
        else:
            run[key] = value

    if overrides.get("q2") is not None and overrides.get("tau2") is not None:
        raise ConfigError("--tau2 and --q2 select different lymphocyte kernels; give one", {"field": "kernels.tau2"})
    # a q2 flag alone selects the weak kernel
    if overrides.get("q2") is not None and overrides.get("kernel2") is None:
        kernels["kernel2"] = "gamma"

    cfg = _build(model, kernels, run)
    logger.debug("run_config_loaded", path=str(path) if path else None, case=cfg.case.value)
    return cfg

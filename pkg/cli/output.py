"""
Artifact writers: trajectory CSV, SVG plots and JSON documents.

Every file embeds the tool version and the effective run configuration:
``#`` comment lines in CSV, the ``Description`` metadata of SVG.
"""

import json
from pathlib import Path
from typing import Any, Dict, List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import structlog  # noqa: E402

from cli import __version__  # noqa: E402
from core.errors import OutputError  # noqa: E402
from dynamics.integrate import Trajectory  # noqa: E402

logger = structlog.get_logger(__name__)

# Deterministic element ids across runs
matplotlib.rcParams["svg.hashsalt"] = "tumordde"


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def metadata_lines(config: Dict[str, Any], extra: Dict[str, Any] = None) -> List[str]:
    lines = [f"tumordde {__version__}", "config: " + _dumps(config)]
    for key, value in (extra or {}).items():
        lines.append(f"{key}: " + _dumps(value))
    return lines


def _ensure_dir(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"Cannot create output directory {path.parent}: {exc}", {"path": str(path)}) from exc


def write_trajectory_csv(traj: Trajectory, path: Path, config: Dict[str, Any]) -> Path:
    """Header ``t,x,y[,z]`` after the metadata lines; 15 significant digits."""
    path = Path(path)
    _ensure_dir(path)
    data = np.column_stack([traj.times, traj.states])
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for line in metadata_lines(config, {"trajectory": traj.meta.model_dump(mode="json")}):
                fh.write(f"# {line}\n")
            fh.write(",".join(("t",) + traj.labels) + "\n")
            np.savetxt(fh, data, fmt="%.15g", delimiter=",", newline="\n")
    except OSError as exc:
        raise OutputError(f"Cannot write {path}: {exc}", {"path": str(path)}) from exc
    logger.info("csv_written", path=str(path), rows=len(traj.times))
    return path


def read_trajectory_csv(path: Path):
    """(labels, data) from a CSV written by ``write_trajectory_csv``."""
    with Path(path).open(encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    labels = tuple(lines[0].strip().split(","))
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return labels, data


def _save_svg(fig, path: Path, description: str) -> Path:
    _ensure_dir(path)
    try:
        fig.savefig(path, format="svg", metadata={"Date": None, "Description": description})
    except OSError as exc:
        raise OutputError(f"Cannot write {path}: {exc}", {"path": str(path)}) from exc
    finally:
        plt.close(fig)
    logger.info("svg_written", path=str(path))
    return path


def write_plots(traj: Trajectory, out_dir: Path, stem: str, config: Dict[str, Any]) -> List[Path]:
    """Waveforms (t vs x, t vs y) and the x-y phase plane."""
    out_dir = Path(out_dir)
    description = "\n".join(metadata_lines(config))
    note = f" (blow-up at t={traj.meta.blow_up_time:g})" if traj.blew_up else ""
    x, y = traj.component("x"), traj.component("y")

    fig, (ax_x, ax_y) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    ax_x.plot(traj.times, x, lw=0.8)
    ax_x.set_ylabel("x (malignant cells)")
    ax_x.set_title(f"{traj.meta.system}{note}")
    ax_y.plot(traj.times, y, lw=0.8, color="tab:green")
    ax_y.set_ylabel("y (lymphocytes)")
    ax_y.set_xlabel("t")
    for ax in (ax_x, ax_y):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    waveform = _save_svg(fig, out_dir / f"{stem}_waveform.svg", description)

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(x, y, lw=0.6)
    ax.plot(x[:1], y[:1], "o", color="tab:red", ms=3)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"phase plane{note}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    phase = _save_svg(fig, out_dir / f"{stem}_phase.svg", description)
    return [waveform, phase]


def write_json(document: Dict[str, Any], path: Path) -> Path:
    path = Path(path)
    _ensure_dir(path)
    try:
        path.write_text(json.dumps(document, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"Cannot write {path}: {exc}", {"path": str(path)}) from exc
    return path

"""
tumordde command group.

    tumordde analyze|hopf|normalform|simulate|reproduce-paper [--config FILE] [--out DIR] [flags...]
"""

import json
from pathlib import Path
from typing import Any, Dict, List

import click
import numpy as np
import structlog

from cli import __version__
from cli.error_handler import handle_errors
from cli.output import write_json, write_plots, write_trajectory_csv
from cli.reproduce import format_report, reproduce_paper
from cli.run_config import RunConfig, load_run_config
from core.errors import InsufficientData, NoCrossing
from core.log import configure_logging
from dynamics.chareq import (
    CharCaseDD,
    CharCaseDW,
    HopfPoint,
    KernelCase,
    crossing_equation_residuals,
    d_delta_dd,
    d_delta_dw,
    delta_dd,
    delta_dw,
    hopf_point_dd,
    hopf_points_dd,
    hopf_points_dw,
    q2_stability_window,
    stability_bound_dd,
)
from dynamics.integrate import simulate_chain, simulate_dd, summarize
from dynamics.model import equilibria, interior_equilibrium
from dynamics.normalform import normal_form
from dynamics.roots import root_scan

logger = structlog.get_logger(__name__)

NON_OVERRIDE_KEYS = {"config_path", "as_json", "scan"}


def run_options(func):
    """Flags shared by every command; each one overrides the config file value."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path)),
        click.option("--out", "output_dir", type=click.Path(file_okay=False, path_type=Path), help="Output directory"),
        click.option("--json", "as_json", is_flag=True, help="Emit one JSON object on stdout"),
        click.option("--a1", type=float),
        click.option("--a2", type=float),
        click.option("--b1", type=float),
        click.option("--b2", type=float),
        click.option("--b3", type=float),
        click.option("--b4", type=float),
        click.option("--kernel2", type=click.Choice(["dirac", "gamma"]), help="Kernel on the lymphocyte factor"),
        click.option("--tau1", type=float, help="Discrete lag on the malignant-cell factor"),
        click.option("--tau2", type=float, help="Discrete lag on the lymphocyte factor"),
        click.option("--q2", type=float, help="Gamma kernel rate (selects the gamma kernel)"),
        click.option("--order", type=int, help="Gamma kernel order (simulation only above 0)"),
        click.option("--dt", type=float),
        click.option("--t-end", "t_end", type=float),
        click.option("--history", type=click.Choice(["constant", "perturbed"])),
        click.option("--delta", type=(float, float), default=None, help="Offset from L0 for a perturbed history"),
        click.option("--point", type=(float, float), default=None, help="(x, y) for a constant history"),
        click.option("--as-printed/--corrected", "as_printed", default=None, help="Chain wiring with the lag on x2"),
        click.option("--n", "n_points", type=int, help="Number of crossings to report"),
        click.option("--k-max", "k_max", type=int),
        click.option("--nonlinear-scale", "nonlinear_scale", type=float),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _config(kwargs: Dict[str, Any]) -> RunConfig:
    overrides = {key: value for key, value in kwargs.items() if key not in NON_OVERRIDE_KEYS}
    return load_run_config(kwargs.get("config_path"), overrides)


def _emit(document: Dict[str, Any], as_json: bool, text: str) -> None:
    if as_json:
        click.echo(json.dumps(document, sort_keys=True, default=str))
    else:
        click.echo(text)


def _crossings(cfg: RunConfig) -> List[HopfPoint]:
    p, n = cfg.params, cfg.run.n_points
    if cfg.case == KernelCase.DD:
        if n == 1:
            return [hopf_point_dd(p, cfg.tau2, k_max=cfg.run.k_max)]
        points = hopf_points_dd(p, cfg.tau2, n=n, k_max=cfg.run.k_max)
    else:
        points = hopf_points_dw(p, cfg.q2, n=n, k_max=cfg.run.k_max)
    if not points:
        context = {"tau2": cfg.tau2} if cfg.case == KernelCase.DD else {"q2": cfg.q2}
        raise NoCrossing(f"No certified crossing for the {cfg.case.value} case", context)
    return points


def _point_record(cfg: RunConfig, hp: HopfPoint) -> Dict[str, Any]:
    record = hp.model_dump(mode="json")
    record["period"] = hp.period
    record["equation_residuals"] = list(crossing_equation_residuals(cfg.params, hp))
    return record


@click.group()
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
@click.option("--log-json/--log-console", default=None)
@click.version_option(__version__, prog_name="tumordde")
def cli(log_level, log_json):
    """Delayed tumor-immune model: stability, Hopf crossings, normal form and simulation."""
    configure_logging(log_level, log_json)


# ========================
# analyze
# ========================
@cli.command()
@run_options
@handle_errors
def analyze(**kwargs):
    """Equilibria, stability bound, q2 window and a characteristic-root scan."""
    cfg = _config(kwargs)
    p = cfg.params
    L0, L1 = equilibria(p)
    bound = stability_bound_dd(p)
    window = q2_stability_window(p)

    if cfg.case == KernelCase.DD:
        case = CharCaseDD.from_params(p, tau1=cfg.tau1, tau2=cfg.tau2)
        roots = root_scan(lambda lam: delta_dd(case, lam), cfg.run.region, cfg.run.grid, lambda lam: d_delta_dd(case, lam))
    else:
        case = CharCaseDW.from_params(p, q2=cfg.q2, tau1=cfg.tau1)
        roots = root_scan(lambda lam: delta_dw(case, lam), cfg.run.region, cfg.run.grid, lambda lam: d_delta_dw(case, lam))

    if not roots:
        verdict = "no characteristic roots in the scan region"
    elif all(r.real < 0 for r in roots):
        verdict = "L0 locally asymptotically stable"
    else:
        verdict = "L0 unstable"

    document: Dict[str, Any] = {
        "config": cfg.model_dump(mode="json"),
        "equilibria": [L0.model_dump(mode="json"), L1.model_dump(mode="json")],
        "admissible": True,
        "stability_bound": bound,
        "q2_window": window.model_dump(mode="json"),
        "root_scan": {
            "region": list(cfg.run.region),
            "roots": [[r.real, r.imag] for r in roots],
            "rightmost_real": max((r.real for r in roots), default=None),
            "verdict": verdict,
        },
    }
    if cfg.case == KernelCase.DD and cfg.tau1 == 0 and cfg.tau2 == 0:
        quadratic = np.roots([1.0, p.b3 - case.B, case.A - case.C])
        document["quadratic_roots"] = [[complex(r).real, complex(r).imag] for r in quadratic]

    lines = [
        f"L0 = ({L0.x:.10g}, {L0.y:.10g})   L1 = ({L1.x:.10g}, {L1.y:.10g})",
        "admissible: b2/b1 < b4/b3 < a1/a2 holds",
        f"delay-sum bound: tau1 + tau2 < {bound:.10g}",
    ]
    if window.window is not None:
        lines.append(f"q2 window: (0, {window.window[0]:.10g}) and ({window.window[1]:.10g}, inf)")
    else:
        lines.append(f"q2 window: none ({window.reason})")
    lines.append(f"{cfg.case.value} roots in {tuple(cfg.run.region)}: " + ", ".join(f"{r:.6g}" for r in roots))
    if "quadratic_roots" in document:
        lines.append("quadratic roots: " + ", ".join(f"{re:.10g}{im:+.10g}i" for re, im in document["quadratic_roots"]))
    lines.append(verdict)
    _emit(document, kwargs["as_json"], "\n".join(lines))


# ========================
# hopf
# ========================
@cli.command()
@run_options
@handle_errors
def hopf(**kwargs):
    """Certified crossings for the configured kernel case."""
    cfg = _config(kwargs)
    points = _crossings(cfg)
    document = {"config": cfg.model_dump(mode="json"), "points": [_point_record(cfg, hp) for hp in points]}
    lines = []
    for record in document["points"]:
        lines.append(
            f"branch {record['branch_index']}: omega={record['omega']:.10g} tau_crit={record['tau_crit']:.10g} "
            f"Re dl/dtau={record['d_re']:.6g} Im dl/dtau={record['d_im']:.6g} |Delta|={record['residual']:.3g} "
            f"({record['method']})"
        )
    _emit(document, kwargs["as_json"], "\n".join(lines))


# ========================
# normalform
# ========================
@cli.command()
@run_options
@handle_errors
def normalform(**kwargs):
    """Direction, stability and period of the bifurcating orbit at the first crossing."""
    cfg = _config(kwargs)
    hp = _crossings(cfg)[0]
    result = normal_form(cfg.params, hp, nonlinear_scale=cfg.run.nonlinear_scale)
    document = {
        "config": cfg.model_dump(mode="json"),
        "point": _point_record(cfg, hp),
        "normal_form": result.model_dump(mode="json"),
    }
    C1 = result.C1.to_complex()
    lines = [
        f"omega={hp.omega:.10g} tau_crit={hp.tau_crit:.10g}",
        f"g20={result.g20.to_complex():.6g} g11={result.g11.to_complex():.6g} "
        f"g02={result.g02.to_complex():.6g} g21={result.g21.to_complex():.6g}",
        f"C1(0)={C1:.10g}",
        f"mu2={result.mu2:.10g} beta2={result.beta2:.10g} T2={result.T2:.10g}",
        ", ".join(result.verdicts),
    ]
    if result.diagnostics is not None:
        diag = result.diagnostics
        lines.append(
            f"|<h,h*> - 1|={abs(diag.pairing.to_complex() - 1):.2e} |<conj h,h*>|={abs(diag.cross_pairing.to_complex()):.2e} "
            f"eigen residual={diag.eigen_residual:.2e} E residual={diag.e_residual:.2e}"
        )
    _emit(document, kwargs["as_json"], "\n".join(lines))


# ========================
# simulate
# ========================
@cli.command()
@run_options
@handle_errors
def simulate(**kwargs):
    """Integrate the delay system; write CSV and SVG plots."""
    cfg = _config(kwargs)
    p, run = cfg.params, cfg.run
    if cfg.case == KernelCase.DD:
        traj = simulate_dd(p, cfg.tau1, cfg.tau2, run.history, run.t_end, run.dt)
    else:
        traj = simulate_chain(p, cfg.tau1, cfg.q2, run.history, run.t_end, run.dt, order=cfg.order, as_printed=run.as_printed)

    config = cfg.model_dump(mode="json")
    stem = f"simulate_{cfg.case.value.lower()}"
    csv_path = write_trajectory_csv(traj, run.output_dir / f"{stem}.csv", config)
    svg_paths = write_plots(traj, run.output_dir, stem, config)

    try:
        summary = summarize(traj, interior_equilibrium(p)).model_dump(mode="json")
    except InsufficientData as exc:
        summary = {"unavailable": exc.message, **exc.context}

    document = {
        "config": config,
        "files": [str(csv_path)] + [str(path) for path in svg_paths],
        "blew_up": traj.blew_up,
        "summary": summary,
    }
    lines = [f"wrote {path}" for path in document["files"]]
    lines.append("summary: " + json.dumps(summary, sort_keys=True))
    _emit(document, kwargs["as_json"], "\n".join(lines))


# ========================
# reproduce-paper
# ========================
@cli.command("reproduce-paper")
@run_options
@click.option("--scan/--no-scan", "scan", default=True, help="Search q2 for the second weak-kernel result row")
@handle_errors
def reproduce_paper_cmd(**kwargs):
    """Compare every published worked-example number with the computed one."""
    cfg = _config(kwargs)
    report = reproduce_paper(cfg.params, scan=kwargs["scan"])
    document = report.model_dump(mode="json")
    document["config"] = cfg.model_dump(mode="json")
    path = write_json(document, cfg.run.output_dir / "reproduce_report.json")
    _emit(document, kwargs["as_json"], format_report(report) + f"\n\nreport written to {path}")


if __name__ == "__main__":
    cli()

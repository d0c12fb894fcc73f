"""
Complex root finding for characteristic functions.

``root_scan`` seeds complex Newton iterations from local minima of |f| on a
rectangular grid and returns the distinct roots that land inside the region.
"""

from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog
from scipy import ndimage

from core.config import Config
from core.errors import ConvergenceFailure

logger = structlog.get_logger(__name__)

ComplexFn = Callable[[complex], complex]
Region = Tuple[float, float, float, float]


def numeric_derivative(f: ComplexFn, step: float = 1e-7) -> ComplexFn:
    """Central difference along the real axis (f is holomorphic)."""

    def df(z: complex) -> complex:
        return (f(z + step) - f(z - step)) / (2.0 * step)

    return df


def newton_root(
    f: ComplexFn,
    df: Optional[ComplexFn],
    seed: complex,
    max_iter: Optional[int] = None,
    step_tol: Optional[float] = None,
) -> complex:
    """
    Refine a root of a holomorphic function by complex Newton iteration.

    Args:
        f: function whose zero is sought
        df: derivative of f; a central difference is used when None
        seed: starting point
        max_iter: iteration cap (defaults to Config.NEWTON_MAX_ITER)
        step_tol: stop once |step| falls below this (defaults to Config.NEWTON_STEP_TOL)

    Returns:
        The converged root.

    Raises:
        ConvergenceFailure: when the cap is reached or the derivative vanishes.
    """
    max_iter = max_iter or Config.NEWTON_MAX_ITER
    step_tol = step_tol or Config.NEWTON_STEP_TOL
    deriv = df or numeric_derivative(f)

    z = complex(seed)
    for iteration in range(max_iter):
        slope = deriv(z)
        if slope == 0 or not np.isfinite(slope):
            raise ConvergenceFailure("Vanishing derivative", {"seed": str(seed), "z": str(z)})
        step = f(z) / slope
        z -= step
        if not np.isfinite(z):
            break
        if abs(step) <= step_tol * max(1.0, abs(z)):
            return z

    raise ConvergenceFailure(
        f"Newton did not converge in {max_iter} iterations",
        {"seed": str(seed), "last": str(z)},
    )


def _grid_seeds(f: ComplexFn, region: Region, grid: Tuple[int, int]) -> List[complex]:
    re_min, re_max, im_min, im_max = region
    n_re, n_im = grid
    re = np.linspace(re_min, re_max, n_re)
    im = np.linspace(im_min, im_max, n_im)
    plane = re[:, None] + 1j * im[None, :]
    magnitude = np.abs(np.vectorize(f, otypes=[complex])(plane))
    magnitude[~np.isfinite(magnitude)] = np.inf

    minima = (magnitude == ndimage.minimum_filter(magnitude, size=3, mode="nearest")) & np.isfinite(magnitude)
    return [complex(z) for z in plane[minima]]


def root_scan(
    f: ComplexFn,
    region: Region,
    grid: Tuple[int, int] = (81, 81),
    df: Optional[ComplexFn] = None,
    tol: float = 1e-9,
) -> List[complex]:
    """
    Approximate all roots of ``f`` inside ``region = (re_min, re_max, im_min, im_max)``.

    Seeds whose Newton iteration fails are logged and dropped. Roots are
    deduplicated and returned sorted by real part, then imaginary part.
    """
    re_min, re_max, im_min, im_max = region
    if not (re_max > re_min and im_max > im_min):
        return []

    roots: List[complex] = []
    for seed in _grid_seeds(f, region, grid):
        try:
            z = newton_root(f, df, seed)
        except ConvergenceFailure as exc:
            logger.warning("root_scan_seed_discarded", seed=str(seed), reason=exc.message)
            continue

        inside = (re_min - tol <= z.real <= re_max + tol) and (im_min - tol <= z.imag <= im_max + tol)
        if not inside:
            continue
        if any(abs(z - known) <= 1e-8 * max(1.0, abs(z)) for known in roots):
            continue
        roots.append(z)

    roots.sort(key=lambda z: (round(z.real, 10), z.imag))
    logger.debug("root_scan_done", region=region, grid=grid, found=len(roots))
    return roots

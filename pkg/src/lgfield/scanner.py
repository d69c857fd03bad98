"""Two-parameter sweeps of q, violation regions and minima.

Axis parameters act on a base :class:`~lgfield.config.RunConfig`:

=============  ====================================
``ellL``       L = value / ell
``ellT2``      t2 = value / ell
``t2_over_L``  t2 = value * L
``wL``         window half-width w = value / L
``xi``         coherent amplitude
``r``          squeezing strength
``theta``      squeezing phase
=============  ====================================

Model and state parameters are applied before the time and window ones,
so ``ellL`` combined with ``t2_over_L`` behaves as expected.
"""

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np

from .config import AxisSpec, RunConfig
from .errors import AllCellsFailed, LGFieldError
from .quasiprob import WindowBand, quasi_prob

__all__ = [
    "AxisSpec",
    "ScanGrid",
    "apply_parameters",
    "evaluate",
    "scan_plane",
    "find_min",
    "violation_summary",
]

_FIRST_PASS = ("ellL", "xi", "r", "theta")


def apply_parameters(base: RunConfig, params: dict) -> RunConfig:
    """Return ``base`` with the named axis parameters set."""
    cfg = base
    for name in sorted(params, key=lambda p: p not in _FIRST_PASS):
        v = float(params[name])
        if name == "ellL":
            cfg = replace(cfg, model=replace(cfg.model, L=v / cfg.state.ell))
        elif name in ("xi", "r", "theta"):
            cfg = replace(cfg, state=replace(cfg.state, **{name: v}))
        elif name == "ellT2":
            cfg = cfg.with_natural_t2(v / cfg.state.ell)
        elif name == "t2_over_L":
            cfg = cfg.with_natural_t2(v * cfg.model.L)
        elif name == "wL":
            if not isinstance(cfg.scheme, WindowBand):
                raise ValueError("wL axis needs a window scheme")
            cfg = replace(cfg, scheme=WindowBand(v / cfg.model.L))
        else:
            raise ValueError(f"unknown axis parameter {name!r}")
    return cfg


def evaluate(cfg: RunConfig):
    return quasi_prob(cfg.model, cfg.state, cfg.scheme, cfg.physical_query(), cfg.quadrature)


def _cell(args):
    base, px, vx, py, vy = args
    try:
        res = evaluate(apply_parameters(base, {px: vx, py: vy}))
        return res.q, res.est_error, None
    except (LGFieldError, ValueError, ArithmeticError) as exc:
        return math.nan, math.nan, f"{type(exc).__name__}: {exc}"


@dataclass
class ScanGrid:
    x: AxisSpec
    y: AxisSpec
    fixed: RunConfig
    values: np.ndarray
    errors: np.ndarray
    failures: List[Tuple[int, int, str]] = field(default_factory=list)

    @property
    def x_values(self):
        return np.array(self.x.values())

    @property
    def y_values(self):
        return np.array(self.y.values())

    @property
    def sign_mask(self):
        """True where the cell is robustly negative (q + est_error < 0)."""
        with np.errstate(invalid="ignore"):
            return (self.values + self.errors) < 0

    @property
    def n_failed(self):
        return len(self.failures)

    def argmin(self):
        """Index of the smallest finite value (lowest flat index on ties)."""
        if not np.isfinite(self.values).any():
            raise AllCellsFailed("no finite cell in grid")
        flat = int(np.nanargmin(self.values))
        return np.unravel_index(flat, self.values.shape)

    @property
    def min_point(self):
        i, j = self.argmin()
        return float(self.x_values[i]), float(self.y_values[j]), float(self.values[i, j])


def scan_plane(base: RunConfig, x: AxisSpec, y: AxisSpec, threads: int = 1) -> ScanGrid:
    """Evaluate q on the ``x`` by ``y`` grid; ``values[i, j]`` sits at (x_i, y_j).

    Failed cells are stored as NaN and listed in ``failures``.  The result
    does not depend on ``threads``.
    """
    if x.parameter == y.parameter:
        raise ValueError("axes must bind distinct parameters")
    xs, ys = x.values(), y.values()
    tasks = [(base, x.parameter, vx, y.parameter, vy) for vx in xs for vy in ys]
    if threads > 1:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
            out = list(pool.map(_cell, tasks, chunksize=max(1, len(tasks) // (8 * threads))))
    else:
        out = [_cell(t) for t in tasks]
    values = np.array([o[0] for o in out], dtype=float).reshape(len(xs), len(ys))
    errors = np.array([o[1] for o in out], dtype=float).reshape(len(xs), len(ys))
    failures = [(k // len(ys), k % len(ys), o[2]) for k, o in enumerate(out) if o[2] is not None]
    return ScanGrid(x, y, base, values, errors, failures)


def _golden(f, lo, hi, tol):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def find_min(grid: ScanGrid, refine: bool = True):
    """Grid minimum, then one golden-section pass along each axis.

    The refined point is kept only when it is strictly lower than the grid
    value.  Returns ``(x, y, q)``.
    """
    i, j = grid.argmin()
    xs, ys = grid.x_values, grid.y_values
    bx, by, bq = float(xs[i]), float(ys[j]), float(grid.values[i, j])
    if not refine:
        return bx, by, bq

    def q_at(vx, vy):
        try:
            cfg = apply_parameters(grid.fixed, {grid.x.parameter: vx, grid.y.parameter: vy})
            return evaluate(cfg).q
        except (LGFieldError, ValueError, ArithmeticError):
            return math.inf

    for axis in (0, 1):
        vals = xs if axis == 0 else ys
        k = i if axis == 0 else j
        lo = vals[max(k - 1, 0)]
        hi = vals[min(k + 1, len(vals) - 1)]
        tol = 1e-3 * (vals[1] - vals[0])
        if axis == 0:
            v, q = _golden(lambda t: q_at(t, by), lo, hi, tol)
            if q < bq:
                bx, bq = float(v), float(q)
        else:
            v, q = _golden(lambda t: q_at(bx, t), lo, hi, tol)
            if q < bq:
                by, bq = float(v), float(q)
    return bx, by, bq


def violation_summary(grid: ScanGrid):
    """``(fraction_neg, min_q, crossings)``.

    ``crossings`` holds, for each axis, ``(parameter, value)`` where value is
    the smallest axis value carrying a robustly negative cell, or ``None``.
    """
    finite = np.isfinite(grid.values)
    if not finite.any():
        raise AllCellsFailed("no finite cell in grid")
    mask = grid.sign_mask
    fraction = float(mask.sum()) / float(finite.sum())
    min_q = float(np.nanmin(grid.values))
    crossings = []
    for axis, spec, vals in ((0, grid.x, grid.x_values), (1, grid.y, grid.y_values)):
        hit = mask.any(axis=1 - axis)
        idx = np.flatnonzero(hit)
        crossings.append((spec.parameter, float(vals[idx[0]]) if idx.size else None))
    return fraction, min_q, crossings

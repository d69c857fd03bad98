"""Slow, independent validators for the closed forms and the engines.

* :func:`oracle_kernels` -- direct mode-space quadrature (from ``kernels``).
* :func:`orthant_q` -- zero-mean quasi-probability from the arcsin orthant
  formula continued to complex correlation.
* :func:`discretized_q` -- rebuilds the kernels as finite sums over a
  midpoint-sampled set of modes and runs them through the engines.
"""

import cmath
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import BranchAmbiguity
from .kernels import KernelSet, coherent_mean, oracle_kernels
from .quasiprob import (
    QuadratureConfig,
    QuasiProbQuery,
    WindowBand,
    _sign_engine,
    qp_window,
    resolve_thresholds,
)

__all__ = [
    "oracle_kernels",
    "orthant_q",
    "DiscretizedField",
    "discretized_kernels",
    "discretized_q",
]


def orthant_q(a1, a2, b, s1, s2):
    """``Re[1/4 + asin(s1 s2 b / sqrt(a1 a2)) / (2 pi)]`` (principal branches)."""
    a1, a2, b = complex(a1), complex(a2), complex(b)
    if abs(b * b / (a1 * a2) - 1.0) < 1e-12:
        raise BranchAmbiguity("correlation coefficient is +-1; arcsin branch undefined")
    rho = s1 * s2 * b / cmath.sqrt(a1 * a2)
    return (0.25 + cmath.asin(rho) / (2.0 * math.pi)).real


@dataclass(frozen=True)
class DiscretizedField:
    """Midpoint sampling ``k_j = (j + 1/2) dk`` of the radial mode measure.

    ``weights[j] = norm * k_j * dk`` so that ``sum_j weights[j] g(k_j)`` tends
    to ``norm * int_0^kmax k g(k) dk``.
    """

    n_modes: int
    k_max: float
    norm: float
    weights: List[float] = field(repr=False)
    modes: List[float] = field(repr=False)

    @classmethod
    def build(cls, model, n_modes, k_max):
        if n_modes < 2:
            raise ValueError("n_modes must be >= 2")
        if not k_max > 0:
            raise ValueError("k_max must be positive")
        dk = k_max / n_modes
        k = (np.arange(n_modes) + 0.5) * dk
        norm = model.prefactor
        return cls(n_modes, float(k_max), norm, list(norm * k * dk), list(k))

    @property
    def dk(self):
        return self.k_max / self.n_modes


def discretized_kernels(fld, model, state, t1, t2):
    """Kernel set as finite mode sums.

    The coherent drift belongs to a single mode and is taken as is.
    """
    k = np.asarray(fld.modes)
    w = np.asarray(fld.weights) * np.exp(-0.5 * (model.L * k) ** 2)
    ch, sh = math.cosh(2 * state.r), math.sinh(2 * state.r)
    th = state.theta

    def a_of(t):
        return complex(np.sum(w * (ch - sh * np.cos(2 * k * t - th))))

    dt, s = t2 - t1, t1 + t2
    b = np.sum(w * (ch * np.cos(k * dt) - 1j * np.sin(k * dt) - sh * np.cos(k * s - th)))
    return KernelSet(
        a_of(t1), a_of(t2), complex(b),
        coherent_mean(model, state, t1), coherent_mean(model, state, t2),
    )


def discretized_q(fld, model, state, scheme, query, cfg=QuadratureConfig()):
    kernels = discretized_kernels(fld, model, state, query.t1, query.t2)
    if isinstance(scheme, WindowBand):
        return qp_window(kernels, scheme.w, query, cfg).q
    phis = resolve_thresholds(model, state, scheme, query.t1, query.t2)
    return _sign_engine(cfg)(kernels, QuasiProbQuery(query.s1, query.s2, query.t1, query.t2),
                             cfg, phis).q

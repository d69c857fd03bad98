"""Two-time quasi-probability q_{s1,s2}(t1, t2) for Gaussian field states.

After the p-integrals are done, every quantity here is an integral of the
complex bivariate "density"

    f(c) = exp(-(c - m)^T M (c - m) / 2) / (2 pi sqrt(det V)),

    V = [[a1, s1 s2 b], [s1 s2 b, a2]],   M = V^{-1},   m_i = s_i (E_i - phi_i)

over the positive quadrant, followed by ``Re``.  ``Re V`` is the symmetrised
covariance and hence positive definite; this makes ``Re M`` positive
definite as well, so the quadrant integral converges absolutely and
``det V`` never crosses the negative real axis (the principal square root is
the continuous branch).

Engines
-------
polar
    Radial integral done in closed form with ``erfcx``; one adaptive
    integral over the polar angle remains.
cartesian
    Adaptive 2D cubature.  Thresholds are applied by shifting the
    integration domain rather than the mean, which keeps this engine an
    independent check on the polar one.
window
    Band projector ``|phi| > w`` assembled from four sign-threshold blocks
    with thresholds ``+-w`` plus single-time marginals.
"""

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateKernel, QuadratureFailure
from .kernels import KernelSet, build_kernels, coherent_mean
from .specfun import erfcx

__all__ = [
    "Engine",
    "SignThreshold",
    "WindowBand",
    "QuasiProbQuery",
    "QuadratureConfig",
    "QuasiProbResult",
    "quasi_prob",
    "qp_sign_polar",
    "qp_sign_cartesian",
    "qp_window",
    "lg_correlators",
    "single_time_probability",
    "resolve_thresholds",
]

_SQRT_PI = math.sqrt(math.pi)
_EPS = 2.0**-52


class Engine(str, Enum):
    AUTO = "auto"
    POLAR = "polar"
    CARTESIAN = "cartesian"


@dataclass(frozen=True)
class SignThreshold:
    """Q = sgn(phi_bar(t) - phi(t)).

    ``reference`` is ``"zero"``, ``"minus_e"`` (phi(t) = -E(t) of the state's
    coherent mode) or a pair ``(phi(t1), phi(t2))`` of tabulated values.
    """

    reference: Union[str, Tuple[float, float]] = "zero"

    def __post_init__(self):
        ref = self.reference
        if isinstance(ref, str):
            if ref not in ("zero", "minus_e"):
                raise ValueError(f"unknown reference {ref!r}")
        else:
            ref = tuple(float(v) for v in ref)
            if len(ref) != 2 or not all(math.isfinite(v) for v in ref):
                raise ValueError("tabulated reference needs two finite values")
            object.__setattr__(self, "reference", ref)


@dataclass(frozen=True)
class WindowBand:
    """Q = +1 if |phi_bar(t)| > w else -1."""

    w: float

    def __post_init__(self):
        w = float(self.w)
        if not (w >= 0 and math.isfinite(w)):
            raise ValueError("w must be finite and >= 0")
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class QuasiProbQuery:
    s1: int
    s2: int
    t1: float
    t2: float

    def __post_init__(self):
        for name in ("s1", "s2"):
            if getattr(self, name) not in (-1, 1):
                raise ValueError(f"{name} must be +1 or -1")
            object.__setattr__(self, name, int(getattr(self, name)))


@dataclass(frozen=True)
class QuadratureConfig:
    engine: Engine = Engine.AUTO
    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    trunc_sigmas: float = 12.0
    max_subdiv: int = 2**14
    # relative to |a1 a2|
    eps_det: float = 1e-12
    degenerate_shift: bool = True
    # time shift, in units of L, used on the degenerate path
    degenerate_eps: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "engine", Engine(self.engine))
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.eps_det > 0):
            raise ValueError("tolerances must be positive")
        if self.trunc_sigmas < 6:
            raise ValueError("trunc_sigmas must be >= 6")
        if self.max_subdiv < 1:
            raise ValueError("max_subdiv must be >= 1")
        if not self.degenerate_eps > 0:
            raise ValueError("degenerate_eps must be positive")


@dataclass
class QuasiProbResult:
    q: float
    est_error: float
    residual_imag: float
    engine_used: str
    kernels: Optional[KernelSet] = None
    # times actually evaluated (differs from the query on the degenerate path)
    times: Tuple[float, float] = field(default=(math.nan, math.nan))

    def as_dict(self):
        return {
            "q": self.q,
            "est_error": self.est_error,
            "residual_imag": self.residual_imag,
            "engine_used": self.engine_used,
            "kernels": self.kernels.as_dict() if self.kernels is not None else None,
            "times": list(self.times),
        }


def error_target(cfg, q):
    """Absolute error an engine must reach for a result of size ``q``.

    ``abs_tol`` is the working bound; ``rel_tol * |q|`` tightens it for
    small ``q``, down to a floor of ``abs_tol / 10``.
    """
    return max(min(cfg.abs_tol, cfg.rel_tol * abs(q)), 0.1 * cfg.abs_tol)


def _check_det(kernels, cfg):
    det = kernels.det
    if abs(det) <= cfg.eps_det * abs(kernels.a1 * kernels.a2):
        raise DegenerateKernel(
            f"|det| = {abs(det):.3e} is degenerate (coincident times?)"
        )
    return det


def _gaussian_pieces(kernels, s1, s2, mean, cfg):
    """Inverse-covariance entries and the prefactor 1/(2 pi sqrt det)."""
    a1, a2, b = kernels.a1, kernels.a2, kernels.b
    det = _check_det(kernels, cfg)
    s = s1 * s2
    m11, m22, m12 = a2 / det, a1 / det, -s * b / det
    pref = 1.0 / (2.0 * math.pi * cmath.sqrt(det))
    return m11, m22, m12, pref


# --------------------------------------------------------------------- polar


def _ridge_angle(a1, a2, b, s):
    # polar angle in (0, pi/2) where Re(a2 cos^2 + a1 sin^2 - s b sin 2u) is smallest
    p = 0.5 * (a2.real - a1.real)
    qs = -s * b.real
    x = math.atan2(-qs, -p)
    if 0.0 < x < math.pi:
        return 0.5 * x
    return None


def _quad_complex(fn, lo, hi, abs_tol, limit, points):
    total = 0j
    err = 0.0
    msg = None
    for part, unit in ((lambda u: fn(u).real, 1.0), (lambda u: fn(u).imag, 1j)):
        res = quad(part, lo, hi, epsabs=0.5 * abs_tol, epsrel=0.0, limit=limit,
                   points=points, full_output=1)
        total += unit * res[0]
        err += res[1]
        if len(res) > 3 and msg is None:
            msg = res[3].splitlines()[0]
    return total, err, msg


def qp_sign_polar(kernels, query, cfg=QuadratureConfig(), thresholds=(0.0, 0.0)):
    """Sign-projector quasi-probability via the polar-angle reduction.

    With ``c = rho (cos u, sin u)`` the radial integral
    ``int_0^inf rho exp(-alpha rho^2 + beta rho) drho`` is

        1/(2 alpha) + beta/(4 alpha) sqrt(pi/alpha) exp(beta^2/4alpha) erfc(-beta/(2 sqrt alpha)),

    leaving a smooth integral over ``u in [0, pi/2]``.
    """
    s1, s2 = query.s1, query.s2
    mu1 = s1 * (kernels.e1 - thresholds[0])
    mu2 = s2 * (kernels.e2 - thresholds[1])
    m11, m22, m12, pref = _gaussian_pieces(kernels, s1, s2, None, cfg)
    gamma = 0.5 * (m11 * mu1 * mu1 + 2.0 * m12 * mu1 * mu2 + m22 * mu2 * mu2)
    v1 = m11 * mu1 + m12 * mu2
    v2 = m12 * mu1 + m22 * mu2
    has_mean = mu1 != 0.0 or mu2 != 0.0
    exp_gamma = cmath.exp(-gamma)
    det_m = m11 * m22 - m12 * m12

    def integrand(u):
        c, sn = math.cos(u), math.sin(u)
        alpha = 0.5 * (m11 * c * c + 2.0 * m12 * c * sn + m22 * sn * sn)
        if not has_mean:
            return 0.5 / alpha
        beta = v1 * c + v2 * sn
        ra = cmath.sqrt(alpha)
        z = -beta / (2.0 * ra)
        if z.real >= 0.0:
            tail = exp_gamma * erfcx(z)
        else:
            # erfcx(z) = 2 exp(z^2) - erfcx(-z), and z^2 - gamma is formed
            # without cancellation: -det(M) (mu x n)^2 / (4 alpha)
            cross = mu1 * sn - mu2 * c
            tail = 2.0 * cmath.exp(-det_m * cross * cross / (4.0 * alpha)) - exp_gamma * erfcx(-z)
        return exp_gamma * 0.5 / alpha + beta / (4.0 * alpha) * _SQRT_PI / ra * tail

    apref = abs(pref)
    points = [math.pi / 4]
    ridge = _ridge_angle(kernels.a1, kernels.a2, kernels.b, s1 * s2)
    if ridge is not None:
        points.append(ridge)
    if mu1 > 0 and mu2 > 0:
        # a mean deep inside the quadrant concentrates the integrand near its
        # direction, in a peak of angular width ~ 1/sqrt(gamma); grade towards it
        u_mean = math.atan2(mu2, mu1)
        points.append(u_mean)
        step = 1.0 / math.sqrt(max(gamma.real, 1.0))
        while step < 0.5:
            points += [u_mean - step, u_mean + step]
            step *= 4.0
    merged = []
    for p in sorted(points):
        # QUADPACK chokes on breakpoints that (nearly) coincide
        if 1e-9 < p < 0.5 * math.pi - 1e-9 and (not merged or p - merged[-1] > 1e-9):
            merged.append(p)
    points = merged
    limit = min(cfg.max_subdiv, 5000)
    total, err, msg = _quad_complex(integrand, 0.0, 0.5 * math.pi, cfg.abs_tol / apref, limit, points)
    target = error_target(cfg, (pref * total).real)
    if apref * err > target:
        total, err, msg = _quad_complex(integrand, 0.0, 0.5 * math.pi, target / apref, limit, points)
    if apref * err > max(target, 4.0 * _EPS * abs(pref * total)):
        raise QuadratureFailure(
            f"polar: error {apref * err:.2e} > {target:.2e} ({msg or 'no diagnostic'})",
            engine="polar",
        )
    val = pref * total
    return QuasiProbResult(val.real, apref * err, val.imag, "polar", kernels)


# ----------------------------------------------------------------- cartesian

_GL_HI = np.polynomial.legendre.leggauss(20)
_GL_LO = np.polynomial.legendre.leggauss(10)


def _panel_rules(f, panels):
    """20x20 Gauss-Legendre value and per-axis error indicators for each panel.

    The indicators compare against 10x20 and 20x10 rules, so a panel can be
    split along the axis that actually needs it.
    """
    (xh, wh), (xl, wl) = _GL_HI, _GL_LO
    x0, x1, y0, y1 = panels.T
    hx, hy = 0.5 * (x1 - x0), 0.5 * (y1 - y0)
    cx, cy = x0 + hx, y0 + hy

    def grid(nx, ny):
        X = cx[:, None] + hx[:, None] * nx[None, :]
        Y = cy[:, None] + hy[:, None] * ny[None, :]
        return f(X[:, :, None], Y[:, None, :])

    jac = hx * hy
    hh = np.einsum("pij,i,j->p", grid(xh, xh), wh, wh) * jac
    lh = np.einsum("pij,i,j->p", grid(xl, xh), wl, wh) * jac
    hl = np.einsum("pij,i,j->p", grid(xh, xl), wh, wl) * jac
    return hh, np.abs(hh - lh), np.abs(hh - hl)


def _halve(panels, axis):
    x0, x1, y0, y1 = panels.T
    if axis == 0:
        m = 0.5 * (x0 + x1)
        kids = [np.stack([x0, m, y0, y1], axis=1), np.stack([m, x1, y0, y1], axis=1)]
    else:
        m = 0.5 * (y0 + y1)
        kids = [np.stack([x0, x1, y0, m], axis=1), np.stack([x0, x1, m, y1], axis=1)]
    return np.concatenate(kids, axis=0)


def adaptive_cubature(f, x_edges, y_edges, target, max_panels, initial=4):
    """Globally adaptive tensor Gauss-Legendre cubature on a rectangle.

    ``x_edges``/``y_edges`` are increasing breakpoints (kinks of ``f`` belong
    there); each gap starts as ``initial`` panels.  Every panel is integrated
    with a 20x20 rule; dropping either axis to 10 points gives two error
    indicators whose sum is the panel error.  Panels whose error exceeds an
    equal share of the tolerance are halved along the worse axis until the
    summed error meets ``target(I)``, a callable giving the absolute tolerance
    for the current estimate.  ``f`` must be vectorised and may be complex.
    Returns ``(integral, error, n_panels)``.
    """

    def refine_edges(edges):
        out = [edges[0]]
        for lo, hi in zip(edges, edges[1:]):
            out += list(np.linspace(lo, hi, initial + 1)[1:])
        return out

    gx, gy = refine_edges(list(x_edges)), refine_edges(list(y_edges))
    panels = np.array(
        [[gx[i], gx[i + 1], gy[j], gy[j + 1]] for i in range(len(gx) - 1) for j in range(len(gy) - 1)]
    )
    done_val = 0j
    done_err = 0.0
    n_total = len(panels)
    while True:
        hi, ex, ey = _panel_rules(f, panels)
        err = ex + ey
        total = done_val + hi.sum()
        total_err = done_err + err.sum()
        tol = target(total)
        if total_err <= tol:
            return total, total_err, n_total
        share = tol / (2.0 * len(panels) + 1.0)
        refine = err > share
        done_val += hi[~refine].sum()
        done_err += err[~refine].sum()
        n_total += int(refine.sum())
        if n_total > max_panels:
            raise QuadratureFailure(
                f"cartesian: {n_total} panels exceed budget {max_panels}, "
                f"error {total_err:.2e} > {tol:.2e}",
                engine="cartesian",
            )
        sel = panels[refine]
        along_x = ex[refine] >= ey[refine]
        panels = np.concatenate([_halve(sel[along_x], 0), _halve(sel[~along_x], 1)], axis=0)


def qp_sign_cartesian(kernels, query, cfg=QuadratureConfig(), thresholds=(0.0, 0.0)):
    """Sign-projector quasi-probability by direct 2D cubature.

    The Gaussian stays centred on ``m = (s1 E1, s2 E2)``; the thresholds move
    the corner of the integration quadrant to ``(s1 phi1, s2 phi2)``.

    Near coincident times the density is a thin ridge, so the second
    coordinate is sheared along it.  With ``P = Re M``,
    ``kappa = -P12/P22`` and ``zeta = sqrt(P22) (c2 - m2 - kappa (c1 - m1))``
    the envelope factorises as ``exp(-zeta^2/2 - lam (c1 - m1)^2/2)``,
    ``lam = det P / P22``.  For each ``c1`` the admissible ``zeta`` range is
    mapped onto ``v in [0, 1]``; both coordinates are truncated at
    ``trunc_sigmas`` envelope widths.
    """
    s1, s2 = query.s1, query.s2
    m11, m22, m12, pref = _gaussian_pieces(kernels, s1, s2, None, cfg)
    mu1, mu2 = s1 * kernels.e1, s2 * kernels.e2
    lo1, lo2 = s1 * thresholds[0], s2 * thresholds[1]

    p11, p22, p12 = m11.real, m22.real, m12.real
    lam = (p11 * p22 - p12 * p12) / p22 if p22 > 0 else -1.0
    if not (p22 > 0 and lam > 0):
        raise QuadratureFailure("cartesian: Re(V^-1) is not positive definite", engine="cartesian")
    kappa = -p12 / p22
    sq = math.sqrt(p22)
    Z = cfg.trunc_sigmas
    X = Z / math.sqrt(lam)
    x_lo, x_hi = max(lo1, mu1 - X), mu1 + X
    apref = abs(pref)
    tail = apref * 2.0 * math.pi / math.sqrt(p22 * lam) * 2.0 * math.erfc(Z / math.sqrt(2.0))
    if x_lo >= x_hi:
        return QuasiProbResult(0.0, tail, 0.0, "cartesian", kernels)

    def zeta_floor(c1):
        return sq * (lo2 - mu2 - kappa * (c1 - mu1))

    # kinks where the zeta floor crosses -Z or +Z
    edges = [x_lo, x_hi]
    if kappa != 0.0:
        for level in (-Z, Z):
            xk = mu1 + (lo2 - mu2 - level / sq) / kappa
            if x_lo < xk < x_hi:
                edges.append(xk)
    edges.sort()

    def f(c1, v):
        a = np.clip(zeta_floor(c1), -Z, Z)
        width = Z - a
        zeta = a + v * width
        dx = c1 - mu1
        dy = kappa * dx + zeta / sq
        expo = -0.5 * (m11 * dx * dx + 2.0 * m12 * dx * dy + m22 * dy * dy)
        return np.exp(expo) * (width / sq)

    total, err, _ = adaptive_cubature(
        f, edges, [0.0, 1.0],
        lambda tot: 0.5 * error_target(cfg, (pref * tot).real) / apref, cfg.max_subdiv,
    )
    val = pref * total
    return QuasiProbResult(val.real, apref * err + tail, val.imag, "cartesian", kernels)


# -------------------------------------------------------------------- window


def _sign_engine(cfg):
    if cfg.engine is Engine.CARTESIAN:
        return qp_sign_cartesian
    return qp_sign_polar


def _tail_prob(mean, var, threshold, sign):
    # P(sign * (X - threshold) > 0) for X ~ N(mean, var)
    return 0.5 * math.erfc(-sign * (mean - threshold) / math.sqrt(2.0 * var))


def _band_marginal(mean, var, w, s):
    # sum over the two theta-blocks of the projector P_s at one time
    return _tail_prob(mean, var, w, s) + _tail_prob(mean, var, -w, -s)


def qp_window(kernels, w, query, cfg=QuadratureConfig()):
    """Band-projector quasi-probability.

    ``P_s = theta(s(phi - w)) + theta(-s(phi + w)) + (s - 1)/2``; expanding the
    product of two such projectors gives four sign blocks with thresholds
    ``+-w``, two single-time marginal terms and a constant.  At zero mean the
    blocks pair up under ``(sign, threshold) -> (-sign, -threshold)`` and
    only two are evaluated.
    """
    s1, s2 = query.s1, query.s2
    engine = _sign_engine(cfg)
    zero_mean = kernels.e1 == 0.0 and kernels.e2 == 0.0
    blocks = [((s1, w), (s2, w)), ((s1, w), (-s2, -w))]
    if not zero_mean:
        blocks += [((-s1, -w), (-s2, -w)), ((-s1, -w), (s2, w))]
    weight = 2.0 if zero_mean else 1.0
    # four block contributions share the absolute tolerance
    cfg = replace(cfg, abs_tol=0.25 * cfg.abs_tol)
    q = 0.0
    imag = 0.0
    err = 0.0
    for (g1, tau1), (g2, tau2) in blocks:
        res = engine(kernels, QuasiProbQuery(g1, g2, query.t1, query.t2), cfg, (tau1, tau2))
        q += weight * res.q
        imag += weight * res.residual_imag
        err += weight * res.est_error
    a1, a2 = kernels.a1.real, kernels.a2.real
    terms = [
        0.5 * (s2 - 1) * _band_marginal(kernels.e1, a1, w, s1),
        0.5 * (s1 - 1) * _band_marginal(kernels.e2, a2, w, s2),
        0.25 * (s1 - 1) * (s2 - 1),
    ]
    # rounding in the final assembly
    err += 4.0 * _EPS * (abs(q) + sum(abs(t) for t in terms) + err)
    q += math.fsum(terms)
    return QuasiProbResult(q, err, imag, "window/" + engine.__name__.rsplit("_", 1)[-1],
                           kernels)


# ------------------------------------------------------------------ dispatch


def resolve_thresholds(model, state, scheme, t1, t2):
    """phi(t1), phi(t2) for a sign-threshold scheme."""
    ref = scheme.reference
    if ref == "zero":
        return 0.0, 0.0
    if ref == "minus_e":
        return -coherent_mean(model, state, t1), -coherent_mean(model, state, t2)
    return ref


def quasi_prob(model, state, scheme, query, cfg=QuadratureConfig()):
    """q_{s1,s2}(t1, t2) for the given field, state and projection scheme.

    When the kernel determinant vanishes (coincident times) the evaluation is
    moved to ``t2 = t1 + degenerate_eps * L`` and tagged
    ``degenerate_limit`` (``times`` records the shifted pair).  With
    ``degenerate_shift=False`` the call raises :class:`DegenerateKernel`.
    """
    t1, t2 = query.t1, query.t2
    kernels = build_kernels(model, state, t1, t2)
    degenerate = False
    try:
        _check_det(kernels, cfg)
    except DegenerateKernel:
        if not cfg.degenerate_shift:
            raise
        degenerate = True
        t2 = t1 + cfg.degenerate_eps * model.L
        kernels = build_kernels(model, state, t1, t2)
    q2 = QuasiProbQuery(query.s1, query.s2, t1, t2)

    if isinstance(scheme, WindowBand):
        res = qp_window(kernels, scheme.w, q2, cfg)
    else:
        phis = resolve_thresholds(model, state, scheme, t1, t2)
        res = _sign_engine(cfg)(kernels, q2, cfg, phis)
    if degenerate:
        res.engine_used = "degenerate_limit"
    res.times = (t1, t2)
    return res


def single_time_probability(model, state, scheme, s, t, kernels=None):
    """Probability of the outcome Q(t) = s from the 1D Gaussian marginal."""
    if kernels is None:
        kernels = build_kernels(model, state, t, t)
    mean, var = kernels.e1, kernels.a1.real
    if isinstance(scheme, WindowBand):
        outside = _band_marginal(mean, var, scheme.w, 1)
        return outside if s == 1 else 1.0 - outside
    phi = resolve_thresholds(model, state, scheme, t, t)[0]
    return _tail_prob(mean, var, phi, s)


def lg_correlators(model, state, scheme, t1, t2, cfg=QuadratureConfig()):
    """Moments reconstructed from the four quasi-probabilities.

    Returns ``(<Q(t1)>, <Q(t2)>, <{Q(t1), Q(t2)}>/2)``.
    """
    mean1 = mean2 = corr = 0.0
    for s1 in (1, -1):
        for s2 in (1, -1):
            q = quasi_prob(model, state, scheme, QuasiProbQuery(s1, s2, t1, t2), cfg).q
            mean1 += s1 * q
            mean2 += s2 * q
            corr += s1 * s2 * q
    return mean1, mean2, corr

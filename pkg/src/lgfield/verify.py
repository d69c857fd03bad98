"""Self-check suite run by ``lgfield verify``.

Each check draws random (seeded) parameter sets, compares two independent
routes to the same number and reports the worst deviation against its
tolerance.  ``quick`` finishes in seconds; ``full`` adds the mode-space
kernel oracle on 200 draws per model and discretized-field convergence.
"""

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, List

import numpy as np

from . import kernels as _kernels
from .kernels import FieldModel, StateSpec, Variant, coherent_mean
from .oracle import DiscretizedField, discretized_q, orthant_q
from .quasiprob import (
    KernelSet,
    QuadratureConfig,
    QuasiProbQuery,
    SignThreshold,
    WindowBand,
    qp_sign_cartesian,
    qp_sign_polar,
    quasi_prob,
    single_time_probability,
)

__all__ = ["CheckResult", "run_suite", "CHECKS_QUICK", "CHECKS_FULL"]

SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tol: float
    seconds: float = 0.0
    detail: str = ""


def _draw(rng, variant=None, squeezed=True, coherent=True):
    variant = variant or (Variant.SCALAR3D, Variant.CHIRAL1D)[int(rng.integers(2))]
    L = float(rng.uniform(0.5, 3.0))
    model = FieldModel(variant, L)
    state = StateSpec(
        xi=float(rng.uniform(0, 10)) if coherent else 0.0,
        ell=float(rng.uniform(0.3, 2.0)),
        alpha=float(rng.uniform(0, 2 * math.pi)),
        r=float(rng.uniform(0, 1)) if squeezed else 0.0,
        theta=float(rng.uniform(0, 2 * math.pi)),
    )
    while True:
        t1, t2 = (float(v) for v in rng.uniform(0, 5 * L, size=2))
        if abs(t2 - t1) > 0.05 * L:
            return model, state, t1, t2


def _scheme(rng, model):
    if rng.uniform() < 0.5:
        return SignThreshold()
    return WindowBand(float(rng.uniform(0, 2.0)) * math.sqrt(model.prefactor) / model.L)


def _kernel_dev(closed, ref, scale):
    pairs = [(closed.a1, ref.a1), (closed.a2, ref.a2), (closed.b, ref.b)]
    dev = max(abs(c - r) / max(abs(r), scale) for c, r in pairs)
    # the drift is O(xi); compare it on its own scale
    for c, r in ((closed.e1, ref.e1), (closed.e2, ref.e2)):
        dev = max(dev, abs(c - r) / max(abs(r), 1e-3 * scale, 1e-300))
    return dev


def check_kernels(rng, n_per_model):
    worst = 0.0
    for variant in (Variant.SCALAR3D, Variant.CHIRAL1D):
        for _ in range(n_per_model):
            model, state, t1, t2 = _draw(rng, variant)
            # exercise the squeezed closed forms directly, including B_sq
            closed = KernelSet(
                _kernels.kernel_A_sq(model, state, t1),
                _kernels.kernel_A_sq(model, state, t2),
                _kernels.kernel_B_sq(model, state, t1, t2),
                coherent_mean(model, state, t1),
                coherent_mean(model, state, t2),
            )
            ref = _kernels.oracle_kernels(model, state, t1, t2)
            worst = max(worst, _kernel_dev(closed, ref, _kernels.kernel_A(model)))
            vac = StateSpec(xi=state.xi, ell=state.ell, alpha=state.alpha)
            closed_v = _kernels.build_kernels(model, vac, t1, t2)
            ref_v = _kernels.oracle_kernels(model, vac, t1, t2)
            worst = max(worst, _kernel_dev(closed_v, ref_v, _kernels.kernel_A(model)))
    return worst


def check_completeness(rng, n):
    worst = 0.0
    for _ in range(n):
        model, state, t1, t2 = _draw(rng, squeezed=rng.uniform() < 0.7)
        scheme = _scheme(rng, model)
        for engine in ("polar", "cartesian"):
            cfg = QuadratureConfig(engine=engine)
            total = sum(
                quasi_prob(model, state, scheme, QuasiProbQuery(a, b, t1, t2), cfg).q
                for a, b in SIGNS
            )
            worst = max(worst, abs(total - 1.0))
    return worst


def check_exchange(rng, n):
    worst = 0.0
    for _ in range(n):
        model, state, t1, t2 = _draw(rng)
        scheme = _scheme(rng, model)
        for s1, s2 in SIGNS:
            a = quasi_prob(model, state, scheme, QuasiProbQuery(s1, s2, t1, t2)).q
            b = quasi_prob(model, state, scheme, QuasiProbQuery(s2, s1, t2, t1)).q
            worst = max(worst, abs(a - b))
    return worst


def check_sign_flip(rng, n):
    worst = 0.0
    for _ in range(n):
        # even Gaussian measure: zero mean for the sign scheme, any state for the window
        window = rng.uniform() < 0.5
        model, state, t1, t2 = _draw(rng, coherent=window)
        scheme = _scheme(rng, model) if window else SignThreshold()
        if window and isinstance(scheme, SignThreshold):
            scheme = WindowBand(0.5 * math.sqrt(model.prefactor) / model.L)
        if not window or state.xi == 0.0:
            pairs = ((1, 1), (1, -1))
        else:
            pairs = ()
        for s1, s2 in pairs:
            a = quasi_prob(model, state, scheme, QuasiProbQuery(s1, s2, t1, t2)).q
            b = quasi_prob(model, state, scheme, QuasiProbQuery(-s1, -s2, t1, t2)).q
            worst = max(worst, abs(a - b))
        if window and state.xi != 0.0:
            # window with a drift: flipping the drift sign is the symmetry
            flipped = replace(state, alpha=state.alpha + math.pi)
            for s1, s2 in SIGNS:
                a = quasi_prob(model, state, scheme, QuasiProbQuery(s1, s2, t1, t2)).q
                b = quasi_prob(model, flipped, scheme, QuasiProbQuery(s1, s2, t1, t2)).q
                worst = max(worst, abs(a - b))
    return worst


def check_equivalence(rng, n):
    """Coherent state at zero threshold against vacuum with threshold -E(t).

    Both sides go through the Cartesian engine: the first shifts the
    Gaussian centre, the second moves the integration corner.
    """
    cfg = QuadratureConfig(engine="cartesian", abs_tol=1e-12, rel_tol=1e-11)
    worst = 0.0
    for _ in range(n):
        model, state, t1, t2 = _draw(rng)
        vac = replace(state, xi=0.0)
        phis = (-coherent_mean(model, state, t1), -coherent_mean(model, state, t2))
        for s1, s2 in SIGNS:
            q = QuasiProbQuery(s1, s2, t1, t2)
            a = quasi_prob(model, state, SignThreshold(), q, cfg).q
            b = quasi_prob(model, vac, SignThreshold(phis), q, cfg).q
            worst = max(worst, abs(a - b))
    return worst


def check_r0_continuity(rng, n):
    worst = 0.0
    for _ in range(n):
        model, state, t1, t2 = _draw(rng, squeezed=False)
        tiny = replace(state, r=1e-12)
        scheme = _scheme(rng, model)
        for s1, s2 in SIGNS:
            q = QuasiProbQuery(s1, s2, t1, t2)
            a = quasi_prob(model, state, scheme, q).q
            b = quasi_prob(model, tiny, scheme, q).q
            worst = max(worst, abs(a - b))
    return worst


def check_engines(rng, n_per_model):
    worst = 0.0
    for variant in (Variant.SCALAR3D, Variant.CHIRAL1D):
        for _ in range(n_per_model):
            model, state, t1, t2 = _draw(rng, variant)
            s1, s2 = SIGNS[int(rng.integers(4))]
            k = _kernels.build_kernels(model, state, t1, t2)
            q = QuasiProbQuery(s1, s2, t1, t2)
            worst = max(worst, abs(qp_sign_polar(k, q).q - qp_sign_cartesian(k, q).q))
    return worst


def check_orthant(rng, n):
    worst = 0.0
    for _ in range(n):
        a1, a2 = (float(v) for v in rng.uniform(0.2, 3.0, size=2))
        mag = float(rng.uniform(0, 0.95)) * math.sqrt(a1 * a2)
        b = mag * complex(math.cos(ph := float(rng.uniform(0, 2 * math.pi))), math.sin(ph))
        k = KernelSet(complex(a1), complex(a2), b, 0.0, 0.0)
        for s1, s2 in ((1, 1), (1, -1)):
            ref = orthant_q(a1, a2, b, s1, s2)
            q = QuasiProbQuery(s1, s2, 0.0, 1.0)
            worst = max(worst, abs(qp_sign_cartesian(k, q).q - ref),
                        abs(qp_sign_polar(k, q).q - ref))
    return worst


def check_marginal(rng, n):
    worst = 0.0
    for _ in range(n):
        model, state, t1, t2 = _draw(rng)
        scheme = _scheme(rng, model)
        for s1 in (1, -1):
            p = single_time_probability(model, state, scheme, s1, t1)
            for t in (t2, t2 + 0.7 * model.L):
                tot = sum(quasi_prob(model, state, scheme, QuasiProbQuery(s1, s2, t1, t)).q
                          for s2 in (1, -1))
                worst = max(worst, abs(tot - p))
    return worst


def check_near_coincidence(rng, n):
    """Worst of |q_{s,-s}| and |q_{s,s} - P(s)| at t2 = t1 + 1e-4 L."""
    worst = 0.0
    for _ in range(n):
        model, state, t1, _ = _draw(rng)
        scheme = _scheme(rng, model)
        t2 = t1 + 1e-4 * model.L
        for s in (1, -1):
            p = single_time_probability(model, state, scheme, s, t1)
            same = quasi_prob(model, state, scheme, QuasiProbQuery(s, s, t1, t2)).q
            cross = quasi_prob(model, state, scheme, QuasiProbQuery(s, -s, t1, t2)).q
            worst = max(worst, abs(cross), abs(same - p))
    return worst


CANONICAL = [
    (Variant.SCALAR3D, 1.0, StateSpec(), SignThreshold(), (1, 1, 0.0, 1.5)),
    (Variant.SCALAR3D, 1.0, StateSpec(r=0.5), SignThreshold(), (1, -1, 0.0, 1.0)),
    (Variant.SCALAR3D, math.pi, StateSpec(xi=8.0), SignThreshold(), (-1, 1, 0.0, 2.1)),
    (Variant.SCALAR3D, 10 / 3, StateSpec(xi=10.0, r=0.5), SignThreshold(), (-1, 1, 0.0, 2.0)),
    (Variant.SCALAR3D, 1.0, StateSpec(r=0.3), WindowBand(0.2), (1, 1, 0.0, 1.05)),
    (Variant.CHIRAL1D, 1.0, StateSpec(), SignThreshold(), (1, 1, 0.0, 0.7)),
    (Variant.CHIRAL1D, math.pi, StateSpec(xi=3.0), SignThreshold(), (-1, 1, 0.0, 2.0)),
    (Variant.CHIRAL1D, 10 / 3, StateSpec(xi=4.0, r=0.5), SignThreshold(), (-1, 1, 0.0, 2.0)),
    (Variant.CHIRAL1D, 1.0, StateSpec(), WindowBand(0.43), (1, 1, 0.0, 1.1)),
    (Variant.CHIRAL1D, 1.0, StateSpec(r=0.3, theta=0.4), WindowBand(0.38), (1, 1, 0.5, 1.6)),
]


def check_discretized(rng, _n):
    """Deviation at 256 modes; fails outright if refinement ever increases it."""
    worst = 0.0
    for variant, L, state, scheme, (s1, s2, t1, t2) in CANONICAL:
        model = FieldModel(variant, L)
        query = QuasiProbQuery(s1, s2, t1, t2)
        exact = quasi_prob(model, state, scheme, query).q
        devs = []
        for n_modes in (64, 128, 256):
            fld = DiscretizedField.build(model, n_modes, 12.0 / L)
            devs.append(abs(discretized_q(fld, model, state, scheme, query) - exact))
        # stop comparing once both sit at the quadrature noise floor
        monotone = all(b <= a or b < 1e-9 for a, b in zip(devs, devs[1:]))
        worst = max(worst, devs[-1] if monotone else math.inf)
    return worst


# (name, function, tolerance, quick draws, full draws)
CHECKS_QUICK = [
    ("kernel closed form vs mode quadrature", check_kernels, 1e-8, 5, None),
    ("completeness sum_s q = 1", check_completeness, 4e-9, 20, None),
    ("exchange symmetry", check_exchange, 1e-8, 10, None),
    ("sign-flip symmetry", check_sign_flip, 1e-8, 10, None),
    ("coherent <-> shifted-threshold vacuum", check_equivalence, 1e-9, 10, None),
    ("r -> 0 continuity", check_r0_continuity, 1e-8, 10, None),
    ("cartesian vs polar (per model)", check_engines, 1e-6, 100, None),
    ("orthant arcsin oracle", check_orthant, 1e-7, 100, None),
    ("marginalization over s2", check_marginal, 1e-8, 10, None),
    ("near-coincidence projector limit", check_near_coincidence, 5e-3, 10, None),
]
CHECKS_FULL = [
    ("kernel closed form vs mode quadrature", check_kernels, 1e-8, None, 200),
    ("orthant arcsin oracle", check_orthant, 1e-7, None, 200),
    ("discretized field -> continuum (256 modes)", check_discretized, 1e-3, None, 1),
]


def run_suite(level="quick", seed=0, report: Callable[[CheckResult], None] = None):
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    plan = [(n, f, tol, q) for n, f, tol, q, _ in CHECKS_QUICK]
    if level == "full":
        done = {name for name, *_ in CHECKS_FULL}
        plan = [p for p in plan if p[0] not in done]
        plan += [(n, f, tol, k) for n, f, tol, _, k in CHECKS_FULL]
    results: List[CheckResult] = []
    for i, (name, fn, tol, count) in enumerate(plan):
        rng = np.random.default_rng([seed, i])
        t0 = time.perf_counter()
        try:
            worst = float(fn(rng, count))
            res = CheckResult(name, worst <= tol, worst, tol)
        except Exception as exc:  # a crashing check is a failed check
            res = CheckResult(name, False, math.inf, tol, detail=f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        results.append(res)
        if report is not None:
            report(res)
    return results

"""Gaussian correlation kernels of the coarse-grained field.

Two field models are supported:

* ``SCALAR3D`` -- massless scalar in 3+1 dimensions smeared with a Gaussian
  window of width ``L``;
* ``CHIRAL1D`` -- spatial derivative of a chiral massless field in 1+1
  dimensions, smeared the same way.

After the angular integration both models reduce to the same radial integral
``pref * int_0^inf k exp(-L^2 k^2 / 2) (...) dk`` and differ only in the
prefactor (``1/(4 pi^2)`` against ``1/(4 pi)``) and in the coherent drift.
The closed forms below use

    Jc(b) = int_0^inf k exp(-L^2 k^2/2) cos(b k) dk
          = 1/L^2 - sqrt(2 pi) b / (2 L^3) * exp(-x^2) erfi(x),   x = b / (sqrt2 L)
    Js(b) = int_0^inf k exp(-L^2 k^2/2) sin(b k) dk
          = sqrt(2 pi) b / (2 L^3) * exp(-x^2)

with ``exp(-x^2) erfi(x)`` taken from the Faddeeva function so that no large
exponential is ever formed.  ``oracle_kernels`` integrates the defining mode
integrals directly and is the reference the closed forms are tested against.
"""

import math
from dataclasses import dataclass
from enum import Enum
from numbers import Real

from scipy.integrate import quad

from .errors import QuadratureFailure
from .specfun import erfi_scaled, faddeeva

__all__ = [
    "Variant",
    "FieldModel",
    "StateSpec",
    "KernelSet",
    "coherent_mean",
    "kernel_A",
    "kernel_B",
    "kernel_A_sq",
    "kernel_B_sq",
    "build_kernels",
    "oracle_kernels",
    "oracle_coherent_mean",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)
# window cut-off: exp(-L^2 k^2 / 2) < 1e-18 beyond k = _K_CUT / L
_K_CUT = math.sqrt(2.0 * math.log(1e18))


class Variant(str, Enum):
    SCALAR3D = "scalar3d"
    CHIRAL1D = "chiral1d"


def _require_real(name, value):
    if isinstance(value, bool) or not isinstance(value, Real):
        raise TypeError(f"{name} must be a real scalar, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite")
    return float(value)


@dataclass(frozen=True)
class FieldModel:
    variant: Variant
    L: float

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        L = _require_real("L", self.L)
        if L <= 0:
            raise ValueError("L must be positive")
        object.__setattr__(self, "L", L)

    @property
    def prefactor(self):
        """Radial-measure prefactor multiplying ``int k (...) dk``."""
        if self.variant is Variant.SCALAR3D:
            return 1.0 / (4.0 * math.pi**2)
        return 1.0 / (4.0 * math.pi)


@dataclass(frozen=True)
class StateSpec:
    """Gaussian initial state: one coherent mode on top of uniform two-mode squeezing.

    Only mode-independent squeezing is representable; ``r`` and ``theta``
    must be plain scalars.
    """

    xi: float = 0.0
    ell: float = 1.0
    alpha: float = 0.0
    r: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("xi", "ell", "alpha", "r", "theta"):
            object.__setattr__(self, name, _require_real(name, getattr(self, name)))
        if self.xi < 0:
            raise ValueError("xi must be >= 0")
        if self.ell <= 0:
            raise ValueError("ell must be > 0")
        if self.r < 0:
            raise ValueError("r must be >= 0")

    @property
    def is_vacuum(self):
        return self.xi == 0.0 and self.r == 0.0

    @property
    def is_coherent(self):
        return self.r == 0.0


@dataclass(frozen=True)
class KernelSet:
    """Kernels feeding the quasi-probability engines at one pair of times."""

    a1: complex
    a2: complex
    b: complex
    e1: float
    e2: float

    @property
    def det(self):
        return self.a1 * self.a2 - self.b * self.b

    def as_dict(self):
        def c(z):
            return [z.real, z.imag]

        return {
            "a1": c(self.a1),
            "a2": c(self.a2),
            "b": c(self.b),
            "e1": self.e1,
            "e2": self.e2,
            "det": c(self.det),
        }


def coherent_mean(model, state, t):
    """Expectation value E(t) of the coarse-grained field (dispersion omega = ell)."""
    if state.xi == 0.0:
        return 0.0
    ell, L = state.ell, model.L
    envelope = state.xi * math.exp(-0.25 * (L * ell) ** 2)
    if model.variant is Variant.SCALAR3D:
        return (2.0 * math.pi) ** -1.5 * math.sqrt(2.0 / ell) * envelope * math.cos(
            ell * t - state.alpha
        )
    return math.sqrt(ell / math.pi) * envelope * math.sin(state.alpha - ell * t)


def kernel_A(model):
    """Equal-time variance of the smeared field in the vacuum."""
    return model.prefactor / model.L**2


def kernel_B(model, t1, t2):
    """Vacuum two-time correlator <phi(t2) phi(t1)>.

    ``A - i sqrt(pi/2) pref dt/L^3 exp(-dt^2/2L^2) (1 - erf(i dt/(sqrt2 L)))``,
    where the last two factors together are ``w(-dt/(sqrt2 L))``.
    """
    L = model.L
    dt = t2 - t1
    if dt == 0.0:
        return complex(kernel_A(model))
    tail = faddeeva(-dt / (math.sqrt(2.0) * L))
    return kernel_A(model) - 1j * _SQRT_HALF_PI * model.prefactor * dt / L**3 * tail


def _jc(b, L):
    # int_0^inf k exp(-L^2 k^2/2) cos(b k) dk
    x = b / (math.sqrt(2.0) * L)
    return 1.0 / L**2 - b * _SQRT_2PI / (2.0 * L**3) * erfi_scaled(x)


def _js(b, L):
    # int_0^inf k exp(-L^2 k^2/2) sin(b k) dk
    return b * _SQRT_2PI / (2.0 * L**3) * math.exp(-0.5 * (b / L) ** 2)


def _phase_term(b, L, theta):
    # int k exp(-L^2 k^2/2) cos(b k - theta) dk
    return math.cos(theta) * _jc(b, L) + math.sin(theta) * _js(b, L)


def kernel_A_sq(model, state, t):
    """Equal-time variance in the uniformly squeezed state at time ``t``."""
    L = model.L
    ch, sh = math.cosh(2 * state.r), math.sinh(2 * state.r)
    val = ch / L**2 - sh * _phase_term(2.0 * t, L, state.theta)
    return complex(model.prefactor * val)


def kernel_B_sq(model, state, t1, t2):
    """Two-time correlator <phi(t2) phi(t1)> in the uniformly squeezed state."""
    L = model.L
    ch, sh = math.cosh(2 * state.r), math.sinh(2 * state.r)
    dt = t2 - t1
    val = ch * _jc(dt, L) - 1j * _js(dt, L) - sh * _phase_term(t1 + t2, L, state.theta)
    return model.prefactor * val


def build_kernels(model, state, t1, t2):
    """Closed-form KernelSet; the coherent (r = 0) branch uses the vacuum kernels."""
    if state.is_coherent:
        a = complex(kernel_A(model))
        a1 = a2 = a
        b = kernel_B(model, t1, t2)
    else:
        a1 = kernel_A_sq(model, state, t1)
        a2 = kernel_A_sq(model, state, t2)
        b = kernel_B_sq(model, state, t1, t2)
    return KernelSet(a1, a2, b, coherent_mean(model, state, t1), coherent_mean(model, state, t2))


def _radial(fn, L, abs_tol, limit, what):
    val, err, info = quad(fn, 0.0, _K_CUT / L, epsabs=abs_tol, epsrel=1e-13, limit=limit,
                          full_output=1)[:3]
    if err > 10 * abs_tol and err > 1e-12 * abs(val):
        raise QuadratureFailure(f"{what}: error estimate {err:.2e} above tolerance",
                                engine="oracle")
    return val


def oracle_kernels(model, state, t1, t2, abs_tol=1e-13, limit=2000):
    """Kernels by direct adaptive quadrature of the mode integrals.

    The angular part of the 3D integral is done analytically, leaving a
    half-line radial integral; the 1D chiral integral already is one.  The
    coherent drift is obtained by smearing the classical mode profile over
    position space (``oracle_coherent_mean``).
    """
    L = model.L
    pref = model.prefactor
    r, theta = state.r, state.theta
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    dt = t2 - t1
    s = t1 + t2
    # the radial integrals are O(1/L^2)
    scale = abs_tol / L**2

    def window(k):
        return k * math.exp(-0.5 * (L * k) ** 2)

    def a_of(t):
        return pref * _radial(
            lambda k: window(k) * (ch - sh * math.cos(2 * k * t - theta)), L, scale, limit, "A_sq"
        )

    b_re = _radial(
        lambda k: window(k) * (ch * math.cos(k * dt) - sh * math.cos(k * s - theta)),
        L, scale, limit, "B_sq",
    )
    b_im = _radial(lambda k: -window(k) * math.sin(k * dt), L, scale, limit, "B_sq")
    return KernelSet(
        complex(a_of(t1)),
        complex(a_of(t2)),
        pref * complex(b_re, b_im),
        oracle_coherent_mean(model, state, t1),
        oracle_coherent_mean(model, state, t2),
    )


def oracle_coherent_mean(model, state, t):
    """E(t) by smearing the classical coherent-mode profile with the window.

    The window is a product of 1D Gaussians; along directions transverse to
    the mode wavevector it integrates to one, so a single position integral
    along the wavevector remains.
    """
    if state.xi == 0.0:
        return 0.0
    L, ell, xi, alpha = model.L, state.ell, state.xi, state.alpha
    norm = 1.0 / (math.sqrt(math.pi) * L)
    if model.variant is Variant.SCALAR3D:
        amp = (2.0 * math.pi) ** -1.5 * math.sqrt(2.0 / ell) * xi

        def profile(x):
            return amp * math.cos(ell * t - ell * x - alpha)
    else:
        # d/dx of (2 pi)^{-1/2} 2 Re[xi e^{-i ell (t + x)} / sqrt(2 ell)]
        amp = -math.sqrt(ell / math.pi) * xi

        def profile(x):
            return amp * math.sin(ell * (t + x) - alpha)

    half = 12.0 * L
    val, _ = quad(lambda x: norm * math.exp(-(x / L) ** 2) * profile(x), -half, half,
                  epsabs=1e-14 * abs(amp), epsrel=1e-12, limit=500)
    return val

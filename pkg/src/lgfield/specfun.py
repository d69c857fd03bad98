"""Error-function family at complex argument.

Everything is built on the Faddeeva function ``w(z) = exp(-z**2) erfc(-iz)``
so that the large exponentials appearing at imaginary argument are carried
analytically instead of being formed and cancelled.  Small arguments go
through the Maclaurin series, where it is both fast and free of cancellation.

All functions take and return Python scalars (``complex`` or ``float``).
"""

import cmath
import math

from scipy.special import wofz

from .errors import OverflowDomain

__all__ = [
    "faddeeva",
    "erfcx",
    "erf_complex",
    "erfc_complex",
    "erfi",
    "erfi_scaled",
]

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
# largest x with exp(x) finite in double precision
_EXP_LIMIT = 709.0
# below this modulus erf comes from its Maclaurin series
_SERIES_RADIUS = 1.0
_ERFI_SERIES_LIMIT = 6.0


def faddeeva(z):
    """Faddeeva function ``w(z) = exp(-z**2) * erfc(-i z)``.

    Evaluated in the upper half-plane by the scipy backend (Johnson's
    Faddeeva package); the lower half-plane follows from
    ``w(-z) = 2 exp(-z**2) - w(z)``, which the backend applies internally.
    """
    return complex(wofz(complex(z)))


def erfcx(z):
    """Scaled complementary error function ``exp(z**2) * erfc(z)``."""
    return faddeeva(1j * complex(z))


def _checked_exp(arg, what):
    if arg.real > _EXP_LIMIT:
        raise OverflowDomain(
            f"{what}: exp({arg.real:.1f}) overflows; use erfcx/faddeeva instead"
        )
    return cmath.exp(arg)


def _erf_series(z):
    # alternating Maclaurin series; only used for |z| <= 1 where terms shrink fast
    z2 = z * z
    term = z
    total = z
    n = 0
    while True:
        n += 1
        term *= -z2 / n
        contrib = term / (2 * n + 1)
        total += contrib
        if abs(contrib) <= 1e-17 * abs(total):
            break
    return _TWO_OVER_SQRT_PI * total


def _erf_first_quadrant(z):
    # z.real >= 0, z.imag >= 0
    if abs(z) <= _SERIES_RADIUS:
        return _erf_series(z)
    scale = _checked_exp(-z * z, "erf")
    return 1.0 - scale * faddeeva(1j * z)


def erf_complex(z):
    """Error function of a complex argument.

    Accurate to about 1e-13 relative away from the complex zeros of erf.
    Symmetries ``erf(-z) = -erf(z)`` and ``erf(conj z) = conj erf(z)`` hold
    exactly because every argument is reduced to the first quadrant.

    Raises
    ------
    OverflowDomain
        If ``Im(z)**2 - Re(z)**2`` exceeds the double-precision exponent
        range, so that the result itself is not representable.
    """
    z = complex(z)
    x, y = z.real, z.imag
    val = _erf_first_quadrant(complex(abs(x), abs(y)))
    if y < 0:
        val = val.conjugate()
    if x < 0:
        # erf(-conj(w)) = -conj(erf(w)): odd and conjugation-symmetric
        val = -val.conjugate()
    return val


def erfc_complex(z):
    """Complementary error function ``1 - erf(z)`` without cancellation.

    For ``Re z >= 0`` the value is ``exp(-z**2) w(iz)``; the left half-plane
    uses ``erfc(z) = 2 - erfc(-z)``.
    """
    z = complex(z)
    x, y = z.real, z.imag
    w = complex(abs(x), abs(y))
    scale = _checked_exp(-w * w, "erfc")
    val = scale * faddeeva(1j * w)
    if y < 0:
        val = val.conjugate()
    if x < 0:
        val = 2.0 - val.conjugate()
    return val


def erfi(x):
    """Imaginary error function ``erfi(x) = -i erf(ix)`` for real ``x``.

    Uses the all-positive Maclaurin series for ``|x| <= 6`` and
    ``exp(x**2) * Im w(x)`` beyond it.
    """
    x = float(x)
    ax = abs(x)
    if ax <= _ERFI_SERIES_LIMIT:
        x2 = ax * ax
        term = ax
        total = ax
        n = 0
        while term > 1e-17 * total:
            n += 1
            term *= x2 / n
            total += term / (2 * n + 1)
        val = _TWO_OVER_SQRT_PI * total
    else:
        if x * x > _EXP_LIMIT:
            raise OverflowDomain(f"erfi({x}) overflows")
        val = math.exp(ax * ax) * faddeeva(ax).imag
    return math.copysign(val, x)


def erfi_scaled(x):
    """``exp(-x**2) * erfi(x)`` for real ``x``; bounded, equals (2/sqrt(pi)) * Dawson(x)."""
    return faddeeva(float(x)).imag

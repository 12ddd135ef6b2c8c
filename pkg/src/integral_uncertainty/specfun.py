"""Scalar special functions used by the kernels and the constant formulas.

All functions accept numpy arrays where it makes sense and are pure.
"""
import math

import numpy as np
from scipy import special

# Below this argument the defining power series of j_alpha is summed directly;
# above it scipy's J_alpha is rescaled.  At x = 4 the largest series term is
# about 4, so cancellation costs < 1e-15 absolute.
SERIES_SWITCH = 4.0
_SERIES_TERMS = 40
GAMMA_OVERFLOW = 171.624


def gamma(x):
    """Gamma function for positive real arguments.

    Raises
    ------
    ValueError
        If ``x <= 0``.
    OverflowError
        If ``x`` exceeds the double precision range (about 171.62).
    """
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma is only defined here for x > 0, got {x}")
    if x > GAMMA_OVERFLOW:
        raise OverflowError(f"gamma({x}) overflows double precision")
    return math.gamma(x)


def log_gamma(x):
    x = float(x)
    if not x > 0:
        raise ValueError(f"log_gamma is only defined here for x > 0, got {x}")
    return math.lgamma(x)


def _check_alpha(alpha):
    if alpha < -0.5:
        raise ValueError(f"normalized Bessel function needs alpha >= -1/2, got {alpha}")


def bessel_j_norm_series(alpha, x, terms=_SERIES_TERMS):
    """Sum ``Gamma(alpha+1) * sum (-1)^n / (n! Gamma(n+alpha+1)) (x/2)^(2n)``.

    Accurate for moderate ``|x|``; used below :data:`SERIES_SWITCH`.
    """
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    q = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for n in range(1, terms):
        term = term * q / (n * (n + alpha))
        total = total + term
    return total


def bessel_j_norm(alpha, x):
    """Normalized Bessel function ``j_alpha(x) = 2^a Gamma(a+1) J_a(x) / x^a``.

    Even in ``x``, equal to 1 at the origin and bounded by 1 in modulus.

    Parameters
    ----------
    alpha : float
        Order, ``alpha >= -1/2``.
    x : float or array_like
        Argument; negative values are mapped to ``|x|``.

    Returns
    -------
    float or ndarray
    """
    _check_alpha(alpha)
    scalar = np.ndim(x) == 0
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(ax)
    small = ax <= SERIES_SWITCH
    out[small] = bessel_j_norm_series(alpha, ax[small])
    big = ~small
    if np.any(big):
        xb = ax[big]
        # log-space prefactor keeps large alpha from overflowing
        logpref = special.gammaln(alpha + 1.0) + alpha * np.log(2.0 / xb)
        out[big] = np.exp(logpref) * special.jv(alpha, xb)
    return float(out) if scalar else out


def laguerre(n, alpha, x):
    """Generalized Laguerre polynomial ``L_n^alpha(x)`` by the three-term recurrence."""
    if int(n) != n or n < 0:
        raise ValueError(f"degree must be a non-negative integer, got {n}")
    if alpha <= -1:
        raise ValueError(f"Laguerre polynomials need alpha > -1, got {alpha}")
    n = int(n)
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if x.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur if x.ndim else float(cur)


def laguerre_coefficients(n, alpha):
    """Monomial coefficients ``c_j`` with ``L_n^alpha(x) = sum_j c_j x^j``."""
    return [
        (-1) ** j * special.binom(n + alpha, n - j) / math.factorial(j)
        for j in range(n + 1)
    ]

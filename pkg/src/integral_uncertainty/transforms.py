"""Concrete homogeneous integral transforms.

Two families are supported, both written in the uniform form
``T f(xi) = int f(x) K(x, xi) dmu(x)``:

* ``hankel(alpha)``: the Fourier-Bessel transform on ``[0, inf)`` with kernel
  ``j_alpha(x xi)`` and measure ``x^(2 alpha + 1) dx / (2^alpha Gamma(alpha+1))``.
* ``dunkl1d(k)``: the rank-one Dunkl transform on the real line.  The Mehta
  normalization ``c_k`` is folded into the measure ``c_k |x|^(2k) dx`` so the
  kernel is the bare Dunkl kernel ``E_k(-i xi, x)``, bounded by one.
"""
from dataclasses import dataclass
import math

import numpy as np

from .specfun import bessel_j_norm, gamma

KINDS = ("hankel", "dunkl1d")


@dataclass(frozen=True)
class TransformSpec:
    """Which transform, plus its homogeneity data.

    Only ``kind`` and ``param`` are stored; everything else is derived.
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}; expected one of {KINDS}")
        p = float(self.param)
        if not math.isfinite(p):
            raise ValueError("transform parameter must be finite")
        if self.kind == "hankel" and p < -0.5:
            raise ValueError(f"hankel needs alpha >= -1/2, got {p}")
        if self.kind == "dunkl1d" and p < 0:
            raise ValueError(f"dunkl1d needs k >= 0, got {p}")
        object.__setattr__(self, "param", p)

    @classmethod
    def hankel(cls, alpha):
        return cls("hankel", alpha)

    @classmethod
    def dunkl1d(cls, k):
        return cls("dunkl1d", k)

    @property
    def a(self):
        """Homogeneity half-degree: ``mu(lambda A) = lambda^(2a) mu(A)``."""
        return self.param + 1.0 if self.kind == "hankel" else self.param + 0.5

    @property
    def c_tau(self):
        # |K| <= 1 for both families once c_k sits in the measure
        return 1.0

    @property
    def m(self):
        return 0.0

    @property
    def m_hat(self):
        return 0.0

    @property
    def symmetric(self):
        """True when the cone is the whole line."""
        return self.kind == "dunkl1d"

    @property
    def density_coefficient(self):
        """``w0`` in ``dmu(x) = w0 |x|^(2a-1) dx``."""
        if self.kind == "hankel":
            alpha = self.param
            return 1.0 / (2.0 ** alpha * gamma(alpha + 1.0))
        return mehta_constant(self.param)

    @property
    def sphere_weight(self):
        """Total angular weight: ``mu(B_r) = sphere_weight * r^(2a) / (2a)``."""
        w0 = self.density_coefficient
        return 2.0 * w0 if self.symmetric else w0

    @property
    def density_exponent(self):
        return 2.0 * self.a - 1.0

    @property
    def smooth_density(self):
        """Whether ``|x|^(2a-1)`` is a polynomial on each half-line.

        Panels always break at 0, so an integer exponent needs no grading.
        """
        e = self.density_exponent
        return abs(e - round(e)) <= 1e-12

    def to_dict(self):
        return {"kind": self.kind, "param": self.param}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["kind"], d["param"])
        except KeyError as exc:
            raise ValueError(f"transform spec is missing field {exc}") from None

    def label(self):
        sym = "alpha" if self.kind == "hankel" else "k"
        return f"{self.kind}({sym}={self.param:g})"


def _check_points(spec, x):
    x = np.asarray(x, dtype=float)
    if not spec.symmetric and np.any(x < 0):
        raise ValueError(f"{spec.label()} lives on [0, inf); got negative points")
    return x


def kernel(spec, x, xi):
    """Kernel ``K(x, xi)``, broadcast over ``x`` and ``xi``.

    Real for ``hankel``; complex for ``dunkl1d``.
    """
    x = _check_points(spec, x)
    xi = _check_points(spec, xi)
    t = x * xi
    if spec.kind == "hankel":
        return bessel_j_norm(spec.param, t)
    k = spec.param
    even = bessel_j_norm(k - 0.5, t)
    odd = t / (2.0 * k + 1.0) * bessel_j_norm(k + 0.5, t)
    return even - 1j * odd


def measure_density(spec, x):
    """Density ``w`` of ``dmu = w(x) dx`` on the cone."""
    x = _check_points(spec, x)
    e = spec.density_exponent
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        powed = np.where(ax > 0, ax ** e, 1.0 if e == 0 else 0.0)
    out = spec.density_coefficient * powed
    return float(out) if np.ndim(out) == 0 else out


def mehta_constant(k, d=1, gamma_idx=None, d_k=None):
    """Mehta-type constant ``c_k = (int exp(-|x|^2/2) dmu_k)^(-1)``.

    In rank one (``d == 1`` and ``gamma_idx`` unset or equal to ``k``) the
    closed form ``1 / (2^(k+1/2) Gamma(k+1/2))`` is returned.  Otherwise the
    radial reduction ``c_k^(-1) = d_k int_0^inf exp(-r^2/2) r^(2 gamma + d - 1) dr``
    is used, which needs the sphere weight ``d_k``.
    """
    if k < 0:
        raise ValueError(f"multiplicity must be >= 0, got {k}")
    if d < 1 or int(d) != d:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    if gamma_idx is None:
        gamma_idx = k
    if gamma_idx < 0:
        raise ValueError(f"index gamma must be >= 0, got {gamma_idx}")
    if d == 1 and gamma_idx == k and d_k is None:
        return 1.0 / (2.0 ** (k + 0.5) * gamma(k + 0.5))
    if d_k is None:
        raise ValueError("the general Mehta constant needs the sphere weight d_k")
    h = gamma_idx + d / 2.0
    radial = 2.0 ** (h - 1.0) * gamma(h)
    return 1.0 / (d_k * radial)


def sphere_weight_dk(c_k, gamma_idx, d):
    """``d_k = int_{S^(d-1)} w_k dsigma = c_k^(-1) / (2^(gamma+d/2-1) Gamma(gamma+d/2))``."""
    if c_k <= 0:
        raise ValueError("c_k must be positive")
    h = gamma_idx + d / 2.0
    return 1.0 / (c_k * 2.0 ** (h - 1.0) * gamma(h))

"""Explicit uncertainty constants and numerical certificates.

Constants are written for a homogeneous measure ``dmu = w0 |x|^(2a-1) dx`` on
a cone with total angular weight ``omega`` (``mu(B_r) = omega r^(2a) / (2a)``)
and a kernel bounded by ``c_tau``.
"""
from dataclasses import dataclass, field
import math
from typing import NamedTuple

import numpy as np
from scipy.special import beta as beta_fn

from . import _io
from .concentration import SetSpec, _as_set, weighted_measure
from .discretize import build_grid
from .transforms import TransformSpec, kernel, mehta_constant

PASS_TOL = 1e-9


class Homogeneity(NamedTuple):
    """Scalars the constants depend on."""

    a: float
    c_tau: float = 1.0
    omega: float = 1.0
    m: float = 0.0
    m_hat: float = 0.0


def homogeneity(spec):
    if isinstance(spec, Homogeneity):
        return spec
    return Homogeneity(spec.a, spec.c_tau, spec.sphere_weight, spec.m, spec.m_hat)


def c1_constant(spec, s):
    """``C1(s) = int_{|x| <= 1} |x|^(-2s) dmu = omega / (2a - 2s)``, for ``0 < s < a``."""
    h = homogeneity(spec)
    if not 0 < s < h.a:
        raise ValueError(f"C1(s) needs 0 < s < a = {h.a}; got s = {s}")
    return h.omega / (2 * h.a - 2 * s)


def c2_constant(spec, s):
    """``C2(s) = int (1 + |x|)^(-2s) dmu = omega B(2a, 2s - 2a)``, for ``s > a``."""
    h = homogeneity(spec)
    if not s > h.a:
        raise ValueError(f"C2(s) needs s > a = {h.a}; got s = {s}")
    return h.omega * beta_fn(2 * h.a, 2 * s - 2 * h.a)


def radial_power_integral(spec, s):
    """``int dmu / (1 + |x|^(2s)) = omega / (2s) Gamma(p) Gamma(1 - p)``, ``p = a/s < 1``."""
    h = homogeneity(spec)
    p = h.a / s
    if not 0 < p < 1:
        raise ValueError(f"integral diverges unless s > a = {h.a}; got s = {s}")
    return h.omega / (2 * s) * math.pi / math.sin(math.pi * p)


@dataclass(frozen=True)
class LocalBound:
    """``||T f||_Sigma <= constant * mu(Sigma)^measure_exp * ||f||^norm_exp * || |x|^s f ||^moment_exp``.

    With ``weighted`` set, the last two factors are replaced by ``||f||_{L^2(mu_2s)}``.
    """

    constant: float
    regime: int
    s: float
    measure_exp: float
    norm_exp: float
    moment_exp: float
    weighted: bool = False

    def rhs(self, sigma_measure, norm, moment):
        return (
            self.constant
            * sigma_measure ** self.measure_exp
            * norm ** self.norm_exp
            * moment ** self.moment_exp
        )


def regime(spec, s):
    h = homogeneity(spec)
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    if s < h.a:
        return 1
    if s <= h.a + h.m:
        return 2
    return 3


def _regime1(h, s, sigma_measure, method):
    root = h.c_tau * math.sqrt(c1_constant(h, s))
    if h.m == 0 and method == "optimized":
        # min over r of r^-s + root sqrt(mu) r^(a-s)
        c = h.a / (h.a - s) * (root * (h.a - s) / s) ** (s / h.a)
        return LocalBound(c, 1, s, s / (2 * h.a), 0.0, 1.0)
    if method not in ("optimized", "fixed"):
        raise ValueError(f"unknown method {method!r}")
    # fixed radius r = mu^(-1/2a) or mu^(-1/2(a+m)); (1 + r)^m <= 2^m max(1, r)^m
    c = 1.0 + root * 2.0 ** h.m
    if sigma_measure <= 1 and h.m > 0:
        return LocalBound(c, 1, s, s / (2 * (h.a + h.m)), 0.0, 1.0)
    return LocalBound(c, 1, s, s / (2 * h.a), 0.0, 1.0)


def local_constant(spec, s, sigma_measure=1.0, route="sharp", method="optimized", eps=None):
    """Constant and exponents of the local uncertainty inequality.

    Parameters
    ----------
    spec : TransformSpec or Homogeneity
    s : float
        Moment order.
    sigma_measure : float
        ``mu_hat(Sigma)``; only the fixed-radius branches with ``m > 0`` use it.
    route : {"sharp", "c2"}
        For ``s > a``: bound ``||f||_1`` with ``int dmu / (1 + |x|^(2s))`` (sharp)
        or with ``2^(2s) C2(s)``.
    method : {"optimized", "fixed"}
        For ``s < a``: optimal cut radius, or the fixed radius ``mu^(-1/2a)``.
    eps : float, optional
        Required when ``a <= s <= a + m``; the moment order used is ``a - eps * s``.
    """
    h = homogeneity(spec)
    reg = regime(h, s)
    if reg == 1:
        return _regime1(h, s, sigma_measure, method)
    if reg == 2:
        if eps is None:
            raise ValueError(f"s = {s} lies in [a, a + m]; pass eps > 0 to interpolate")
        sigma = h.a - eps * s
        if not 0 < sigma < h.a:
            raise ValueError(f"eps = {eps} gives an inadmissible order {sigma}")
        inner = _regime1(h, sigma, sigma_measure, method)
        t = sigma / s
        # Holder: || |x|^sigma f || <= ||f||^(1-t) || |x|^s f ||^t
        return LocalBound(inner.constant, 2, s, inner.measure_exp, 1 - t, t)
    if h.m > 0:
        return LocalBound(h.c_tau * math.sqrt(c2_constant(h, s - h.m)), 3, s, 0.5, 0.0, 0.0, True)
    p = h.a / s
    if route == "sharp":
        base = radial_power_integral(h, s)
    elif route == "c2":
        base = 2.0 ** (2 * s) * c2_constant(h, s)
    else:
        raise ValueError(f"unknown route {route!r}")
    c = h.c_tau * math.sqrt(base * p ** (-p) * (1 - p) ** (p - 1))
    return LocalBound(c, 3, s, 0.5, 1 - p, p)


def global_constant(spec, s, beta, route="sharp", interpolation=0.5):
    """``C`` with ``|| |x|^s f ||^(2b/(s+b)) || |xi|^b T f ||^(2s/(s+b)) >= C ||f||^2``.

    Obtained from the local inequality on balls and optimization over the
    radius.  For ``s = a`` the moment order ``t s`` (``t = interpolation``) is
    used and lifted back by Holder's inequality.
    """
    h = homogeneity(spec)
    if s <= 0 or beta <= 0:
        raise ValueError("s and beta must be positive")
    if h.m or h.m_hat:
        raise ValueError("global constant implemented for m = m_hat = 0")
    a = h.a
    if s < a:
        k = local_constant(h, s, route=route).constant ** 2 * (h.omega / (2 * a)) ** (s / a)
        return s / (s + beta) * (beta / (s * k)) ** (beta / (s + beta))
    if s > a:
        k = local_constant(h, s, route=route).constant ** 2 * h.omega / (2 * a)
        m_ = (s + beta) / s * (s * k / beta) ** (beta / (s + beta))
        return m_ ** (-s / a)
    t = interpolation
    if not 0 < t < 1:
        raise ValueError("interpolation factor must lie in (0, 1)")
    inner = global_constant(h, t * s, beta, route)
    return inner ** ((t * s + beta) / (t * (s + beta)))


def sharp_heisenberg_constant(spec):
    """Optimal ``C_{1,1}`` for the Hankel (``alpha + 1``) and rank-one Dunkl (``k + 1/2``) transforms."""
    return spec.a


# rank-one / general Dunkl constants in the unnormalized measure w_k dx


def _dunkl_data(k, d, gamma_idx, c_k, d_k):
    gamma_idx = k if gamma_idx is None else gamma_idx
    if c_k is None:
        c_k = mehta_constant(k, d, gamma_idx, d_k if d != 1 or gamma_idx != k else None)
    if d_k is None:
        h = gamma_idx + d / 2.0
        d_k = 1.0 / (c_k * 2.0 ** (h - 1.0) * math.gamma(h))
    return gamma_idx, c_k, d_k


def dunkl_c_printed(s, k, d=1, gamma_idx=None, c_k=None, d_k=None):
    """``c(s,k)`` exactly as displayed for the Dunkl transform (outer exponent ``(2 gamma + d)/(2s)``)."""
    g, c_k, d_k = _dunkl_data(k, d, gamma_idx, c_k, d_k)
    n = 2 * g + d
    if not 0 < s < n / 2:
        raise ValueError(f"c(s,k) needs 0 < s < gamma + d/2 = {n / 2}")
    return n / (n - 2 * s) * (c_k / (2 * s) * math.sqrt((n - 2 * s) * d_k)) ** (n / (2 * s))


def dunkl_c_derived(s, k, d=1, gamma_idx=None, c_k=None, d_k=None):
    """``c(s,k)`` from the radius optimization; outer exponent ``2s / (2 gamma + d)``."""
    g, c_k, d_k = _dunkl_data(k, d, gamma_idx, c_k, d_k)
    n = 2 * g + d
    if not 0 < s < n / 2:
        raise ValueError(f"c(s,k) needs 0 < s < gamma + d/2 = {n / 2}")
    return n / (n - 2 * s) * (c_k / (2 * s) * math.sqrt((n - 2 * s) * d_k)) ** (2 * s / n)


def dunkl_c_prime(s, k, d=1, gamma_idx=None, c_k=None, d_k=None):
    """``c'(s,k)`` for ``s > gamma + d/2``."""
    g, c_k, d_k = _dunkl_data(k, d, gamma_idx, c_k, d_k)
    n = 2 * g + d
    q = n / (2 * s)
    if not 0 < q < 1:
        raise ValueError(f"c'(s,k) needs s > gamma + d/2 = {n / 2}")
    inner = d_k / n * (2 * s / n - 1) ** (q - 1) * math.gamma(q) * math.gamma(1 - q)
    return c_k * math.sqrt(inner)


def unfold_dunkl_constant(constant, spec, s):
    """Convert a constant for the folded measure ``c_k |x|^(2k) dx`` to ``|x|^(2k) dx``."""
    c_k = spec.density_coefficient
    reg = regime(spec, s)
    if reg == 1:
        return constant * c_k ** (s / (2 * spec.a))
    if reg == 3:
        return constant * math.sqrt(c_k)
    raise ValueError("no closed conversion at s = a")


# certificates


@dataclass
class InequalityReport:
    id: str
    transform: dict
    params: dict
    lhs: float
    rhs: float
    constant: float
    margin: float
    passed: bool
    resolution: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "id": self.id,
            "transform": self.transform,
            "params": self.params,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "constant": self.constant,
            "margin": self.margin,
            "pass": self.passed,
            "resolution": self.resolution,
            "extra": self.extra,
        }

    def csv_row(self):
        params = ";".join(f"{k}={_io.fmt(v)}" for k, v in sorted(self.params.items()) if not isinstance(v, (dict, list)))
        return [self.id, params, self.lhs, self.rhs, self.margin, self.passed]

    CSV_HEADER = ["id", "params", "lhs", "rhs", "margin", "pass"]

    def export(self, prefix):
        return (
            _io.write_json(f"{prefix}.json", self.to_dict()),
            _io.write_csv(f"{prefix}.csv", self.CSV_HEADER, [self.csv_row()]),
        )


def _passes(lhs, rhs):
    return rhs - lhs >= -PASS_TOL * abs(rhs)


def _labels_and_values(grid, family):
    for i, f in enumerate(family):
        label = getattr(f, "label", f"f{i}")
        yield label, grid.sample(f)


def _resolution(grid):
    return {"radius": grid.radius, "panels": grid.panels, "nodes_per_panel": grid.nodes_per_panel, "size": grid.size}


def verify_local(spec, s, Sigma, family, grid=None, route="sharp", eps=None):
    """Largest ratio ``||T f||_Sigma / RHS`` over ``family``; passes when it is at most 1."""
    Sigma = _as_set(Sigma)
    if Sigma.is_empty:
        raise ValueError("Sigma must have positive measure")
    if grid is None:
        grid = build_grid(spec, 12.0, 32, 16, Sigma.endpoints)
    Sigma.check_within(spec, grid.radius)
    mu_sigma = weighted_measure(Sigma, spec)
    bound = local_constant(spec, s, mu_sigma, route=route, eps=eps)
    if bound.weighted:
        raise ValueError("weighted-norm regime has no numeric certificate")
    # forward transform rows for the Sigma nodes only
    xi, wxi = _set_nodes(spec, Sigma, grid)
    rows = kernel(spec, grid.nodes[None, :], xi[:, None]) * grid.weights[None, :]
    worst = (0.0, 0.0, 1.0, None)
    ratios = {}
    for label, f in _labels_and_values(grid, family):
        lhs = float(np.sqrt(np.sum(wxi * np.abs(rows @ f) ** 2)))
        rhs = bound.rhs(mu_sigma, float(grid.norm(f)), float(grid.moment_norm(f, s)))
        ratio = 0.0 if lhs == 0 else lhs / rhs
        ratios[label] = ratio
        if ratio >= worst[0] or worst[3] is None:
            worst = (ratio, lhs, rhs, label)
    ratio, lhs, rhs, label = worst
    return InequalityReport(
        id="local",
        transform=spec.to_dict(),
        params={"s": s, "Sigma": Sigma.to_dict(), "route": route, "regime": bound.regime, "mu_Sigma": mu_sigma},
        lhs=lhs,
        rhs=rhs,
        constant=bound.constant,
        margin=rhs - lhs,
        passed=ratio <= 1 + PASS_TOL,
        resolution=_resolution(grid),
        extra={"max_ratio": ratio, "worst": label, "ratios": ratios},
    )


def _set_nodes(spec, set_, grid):
    mask = set_.mask(grid.nodes)
    return grid.nodes[mask], grid.weights[mask]


def global_ratio(grid, forward_matrix, f, s, beta):
    """``|| |x|^s f ||^(2b/(s+b)) || |xi|^b T f ||^(2s/(s+b)) / ||f||^2`` on one grid."""
    nf = float(grid.norm(f))
    if nf == 0:
        return math.inf
    x = float(grid.moment_norm(f, s))
    y = float(grid.moment_norm(forward_matrix @ f, beta))
    return x ** (2 * beta / (s + beta)) * y ** (2 * s / (s + beta)) / nf ** 2


def verify_global(spec, s, beta, family, grid=None, route="sharp", sharp_tol=1e-6):
    """Smallest Heisenberg-type ratio over ``family`` against the derived constant.

    For ``s = beta = 1`` the sharp constant is checked as well.
    """
    from .discretize import assemble_forward

    if grid is None:
        grid = build_grid(spec, 12.0, 32, 16)
    a_mat = assemble_forward(spec, grid).matrix
    c = global_constant(spec, s, beta, route)
    ratios = {}
    for label, f in _labels_and_values(grid, family):
        ratios[label] = global_ratio(grid, a_mat, f, s, beta)
    if not ratios:
        raise ValueError("empty test family")
    worst = min(ratios, key=ratios.get)
    rmin = ratios[worst]
    passed = _passes(c, rmin)
    extra = {"min_ratio": rmin, "worst": worst, "ratios": ratios}
    if s == 1 and beta == 1:
        sharp = sharp_heisenberg_constant(spec)
        extra["sharp_constant"] = sharp
        extra["sharp_pass"] = bool(rmin >= sharp * (1 - sharp_tol))
        passed = passed and extra["sharp_pass"]
    return InequalityReport(
        id="global",
        transform=spec.to_dict(),
        params={"s": s, "beta": beta, "route": route},
        lhs=c,
        rhs=rmin,
        constant=c,
        margin=rmin - c,
        passed=passed,
        resolution=_resolution(grid),
        extra=extra,
    )


def donoho_stark_bound(c_tau, eps1, eps2):
    """``c_tau^-2 (1 - sqrt(eps1^2 + eps2^2))^2``; ``None`` when vacuous."""
    e = eps1 ** 2 + eps2 ** 2
    if e > 1:
        return None
    return (1 - math.sqrt(e)) ** 2 / c_tau ** 2


def verify_donoho_stark(pair, f):
    """Check ``mu(S) mu_hat(Sigma) >= c_tau^-2 (1 - sqrt(eps1^2 + eps2^2))^2`` for ``f``."""
    f = pair.grid.sample(f)
    nf = float(pair.grid.norm(f))
    if nf == 0:
        raise ValueError("f must be nonzero")
    f = f / nf
    eps1 = pair.time_complement_norm(f)
    eps2 = pair.band_complement_norm(f)
    product = weighted_measure(pair.S, pair.spec) * weighted_measure(pair.Sigma, pair.spec)
    bound = donoho_stark_bound(pair.spec.c_tau, eps1, eps2)
    vacuous = bound is None
    lhs = 0.0 if vacuous else bound
    return InequalityReport(
        id="donoho_stark",
        transform=pair.spec.to_dict(),
        params={"S": pair.S.to_dict(), "Sigma": pair.Sigma.to_dict()},
        lhs=lhs,
        rhs=product,
        constant=pair.spec.c_tau,
        margin=product - lhs,
        passed=vacuous or product >= lhs - PASS_TOL,
        resolution=_resolution(pair.grid),
        extra={"eps1": eps1, "eps2": eps2, "vacuous": vacuous},
    )


__all__ = [
    "Homogeneity",
    "LocalBound",
    "InequalityReport",
    "homogeneity",
    "regime",
    "c1_constant",
    "c2_constant",
    "radial_power_integral",
    "local_constant",
    "global_constant",
    "sharp_heisenberg_constant",
    "dunkl_c_printed",
    "dunkl_c_derived",
    "dunkl_c_prime",
    "unfold_dunkl_constant",
    "verify_local",
    "verify_global",
    "verify_donoho_stark",
    "donoho_stark_bound",
    "global_ratio",
    "SetSpec",
    "TransformSpec",
]

"""Deterministic test-function families."""
from typing import Callable, NamedTuple

import numpy as np

from .specfun import laguerre

DEFAULT_SEED = 20240917


class TestFunction(NamedTuple):
    label: str
    func: Callable

    def __call__(self, x):
        return self.func(x)


def _orders(spec):
    """Laguerre orders of the even and odd parts (odd only on the line)."""
    if spec.kind == "hankel":
        return spec.param, None
    return spec.param - 0.5, spec.param + 0.5


def laguerre_gaussian(spec, n, odd=False):
    """``L_n^alpha(x^2) exp(-x^2/2)``; eigenfunction with eigenvalue ``(-1)^n``.

    On the line (``dunkl1d``) ``odd=True`` gives ``x L_n^(k+1/2)(x^2) exp(-x^2/2)``
    with eigenvalue ``-1j (-1)^n``.
    """
    even_order, odd_order = _orders(spec)
    if odd:
        if odd_order is None:
            raise ValueError("odd Laguerre-Gaussians exist only for dunkl1d")
        return TestFunction(
            f"lg{n}o", lambda x: np.asarray(x) * laguerre(n, odd_order, np.asarray(x) ** 2) * np.exp(-np.asarray(x) ** 2 / 2)
        )
    return TestFunction(f"lg{n}", lambda x: laguerre(n, even_order, np.asarray(x) ** 2) * np.exp(-np.asarray(x) ** 2 / 2))


def laguerre_eigenvalue(n, odd=False):
    return (-1) ** n * (-1j if odd else 1)


def laguerre_family(spec, nmax=6):
    return [laguerre_gaussian(spec, n) for n in range(nmax + 1)]


def gaussian(spec=None):
    return TestFunction("gauss", lambda x: np.exp(-np.asarray(x) ** 2 / 2))


def dilation_factors(count=17, lo=0.25, hi=4.0):
    return np.geomspace(lo, hi, count)


def dilated_gaussians(spec, count=17, lo=0.25, hi=4.0):
    """``D_lam g`` for ``count`` log-spaced ``lam`` in ``[lo, hi]``."""
    a = spec.a
    out = []
    for lam in dilation_factors(count, lo, hi):
        out.append(
            TestFunction(
                f"gauss_l{lam:.6g}",
                lambda x, lam=lam: lam ** (-a) * np.exp(-(np.asarray(x) / lam) ** 2 / 2),
            )
        )
    return out


def random_combinations(spec, draws=50, terms=4, nmax=6, seed=DEFAULT_SEED):
    """Random real combinations of ``terms`` distinct Laguerre-Gaussians."""
    rng = np.random.default_rng(seed)
    basis = laguerre_family(spec, nmax)
    out = []
    for i in range(draws):
        idx = np.sort(rng.choice(nmax + 1, size=terms, replace=False))
        coef = rng.standard_normal(terms)
        parts = [basis[j] for j in idx]

        def f(x, coef=coef, parts=parts):
            return sum(c * p(x) for c, p in zip(coef, parts))

        out.append(TestFunction(f"rand{i}", f))
    return out


def shipped_family(spec, seed=DEFAULT_SEED):
    """Laguerre-Gaussians, dilated Gaussians and random combinations."""
    return laguerre_family(spec) + dilated_gaussians(spec) + random_combinations(spec, seed=seed)


def family(name, spec, seed=DEFAULT_SEED):
    if name == "laguerre":
        return laguerre_family(spec)
    if name == "dilated":
        return dilated_gaussians(spec)
    if name == "random":
        return random_combinations(spec, seed=seed)
    if name == "gaussian":
        return [gaussian(spec)]
    if name == "shipped":
        return shipped_family(spec, seed)
    raise ValueError(f"unknown family {name!r}")


FAMILIES = ("laguerre", "dilated", "random", "gaussian", "shipped")

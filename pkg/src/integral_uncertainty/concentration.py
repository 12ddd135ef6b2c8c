"""Time and band projections, the composite ``E_S F_Sigma`` and its spectrum.

Norms of ``E_S F_Sigma`` are computed from the block ``E_Sigma T E_S`` in
orthonormal (square-root-weight) coordinates.  By unitarity of ``T`` this
block has the same singular values as ``E_S F_Sigma``, and it avoids the
truncation leakage of forming ``T^-1 E_Sigma T`` on a bounded grid.
"""
from dataclasses import dataclass
from functools import cached_property
import math
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.special import roots_jacobi

from . import _io
from ._linalg import ConvergenceError, power_iteration, subspace_iteration
from .discretize import DiscreteOperator, assemble_forward, assemble_inverse, build_grid
from .transforms import kernel, measure_density

NOT_APPLICABLE = None
REFUSAL_MARGIN = 1e-6


@dataclass(frozen=True)
class SetSpec:
    """Finite union of disjoint closed intervals, sorted."""

    intervals: tuple = ()

    def __post_init__(self):
        ivs = []
        for iv in self.intervals:
            lo, hi = (float(v) for v in iv)
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise ValueError(f"interval {iv!r} must satisfy lo < hi with finite ends")
            ivs.append((lo, hi))
        ivs.sort()
        for (_, h0), (l1, _) in zip(ivs, ivs[1:]):
            if l1 <= h0:
                raise ValueError("intervals must be disjoint")
        object.__setattr__(self, "intervals", tuple(ivs))

    @classmethod
    def empty(cls):
        return cls(())

    @classmethod
    def full(cls, spec, radius):
        return cls(((-radius if spec.symmetric else 0.0, radius),))

    @property
    def is_empty(self):
        return not self.intervals

    @property
    def endpoints(self):
        return tuple(v for iv in self.intervals for v in iv)

    @property
    def length(self):
        return sum(hi - lo for lo, hi in self.intervals)

    def check_within(self, spec, radius):
        lo_bound = -radius if spec.symmetric else 0.0
        for lo, hi in self.intervals:
            if lo < lo_bound - 1e-12 or hi > radius + 1e-12:
                raise ValueError(
                    f"interval [{lo}, {hi}] leaves the truncated cone [{lo_bound}, {radius}]"
                )

    def mask(self, nodes):
        nodes = np.asarray(nodes)
        out = np.zeros(nodes.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (nodes >= lo) & (nodes <= hi)
        return out

    def to_dict(self):
        return {"intervals": [list(iv) for iv in self.intervals]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(tuple(iv) for iv in d["intervals"]))


def _as_set(s):
    if isinstance(s, SetSpec):
        return s
    if isinstance(s, dict):
        return SetSpec.from_dict(s)
    return SetSpec(tuple(tuple(iv) for iv in s))


def _half_pieces(intervals):
    """Split intervals at 0; yield ``(p, q, sign)`` with ``0 <= p < q`` and ``x = sign * r``."""
    for lo, hi in intervals:
        if lo < 0 < hi:
            yield 0.0, -lo, -1.0
            yield 0.0, hi, 1.0
        elif hi <= 0:
            yield -hi, -lo, -1.0
        else:
            yield lo, hi, 1.0


def weighted_measure(set_, spec, rho=0.0):
    """``mu_rho(set) = int_set (1 + |x|)^rho dmu``.

    ``rho = 0`` uses the closed form; otherwise adaptive quadrature with the
    algebraic endpoint weight at the origin.
    """
    set_ = _as_set(set_)
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if not spec.symmetric and any(lo < 0 for lo, _ in set_.intervals):
        raise ValueError(f"{spec.label()} lives on [0, inf); set has negative points")
    w0, e, two_a = spec.density_coefficient, spec.density_exponent, 2 * spec.a
    total = 0.0
    for p, q, _ in _half_pieces(set_.intervals):
        if rho == 0:
            total += w0 * (q ** two_a - p ** two_a) / two_a
        elif p == 0:
            val, _ = integrate.quad(lambda x: (1 + x) ** rho, 0.0, q, weight="alg", wvar=(e, 0.0))
            total += w0 * val
        else:
            val, _ = integrate.quad(lambda x: (1 + x) ** rho * x ** e, p, q, epsabs=0, epsrel=1e-13)
            total += w0 * val
    return float(total)


def project_time(set_, grid):
    """``E_S`` as a 0/1 diagonal by node membership."""
    set_ = _as_set(set_)
    d = set_.mask(grid.nodes).astype(float)
    return DiscreteOperator(np.diag(d), grid, grid, grid.spec, "time")


def project_band(set_, forward, inverse):
    """``F_Sigma = T^-1 diag(chi_Sigma) T`` on the space grid."""
    set_ = _as_set(set_)
    if forward.out_grid is not inverse.in_grid and not forward.out_grid.compatible(inverse.in_grid):
        raise ValueError("forward and inverse operators use different transform grids")
    if forward.in_grid is not inverse.out_grid and not forward.in_grid.compatible(inverse.out_grid):
        raise ValueError("forward and inverse operators use different space grids")
    chi = set_.mask(forward.out_grid.nodes).astype(float)
    mat = inverse.matrix @ (chi[:, None] * forward.matrix)
    return DiscreteOperator(mat, forward.in_grid, inverse.out_grid, forward.spec, "band")


@dataclass(frozen=True, eq=False)
class ConcentrationPair:
    """Sets ``S`` (space side) and ``Sigma`` (transform side) on a shared grid."""

    spec: object
    S: SetSpec
    Sigma: SetSpec
    forward: DiscreteOperator
    inverse: DiscreteOperator

    @property
    def grid(self):
        return self.forward.in_grid

    @property
    def freq_grid(self):
        return self.forward.out_grid

    @cached_property
    def s_mask(self):
        return self.S.mask(self.grid.nodes)

    @cached_property
    def sigma_mask(self):
        return self.Sigma.mask(self.freq_grid.nodes)

    @cached_property
    def E_S(self):
        return project_time(self.S, self.grid)

    @cached_property
    def F_Sigma(self):
        return project_band(self.Sigma, self.forward, self.inverse)

    @cached_property
    def ESFSigma(self):
        mat = self.s_mask[:, None] * self.F_Sigma.matrix
        return DiscreteOperator(mat, self.grid, self.grid, self.spec, "composite")

    @cached_property
    def block(self):
        """``E_Sigma T E_S`` in orthonormal coordinates, rows Sigma nodes, columns S nodes."""
        x = self.grid.nodes[self.s_mask]
        w = self.grid.weights[self.s_mask]
        xi = self.freq_grid.nodes[self.sigma_mask]
        wh = self.freq_grid.weights[self.sigma_mask]
        k = kernel(self.spec, x[None, :], xi[:, None])
        return np.sqrt(wh)[:, None] * k * np.sqrt(w)[None, :]

    def band_norm(self, f):
        """``||E_Sigma T f||`` for grid values ``f``."""
        tf = self.forward(f)
        return float(self.freq_grid.norm(np.where(self.sigma_mask, tf, 0.0)))

    def band_complement_norm(self, f):
        """``||F_{Sigma^c} f||`` through Plancherel: ``sqrt(||f||^2 - ||E_Sigma T f||^2)``."""
        nf2 = float(self.grid.norm(f)) ** 2
        return math.sqrt(max(nf2 - self.band_norm(f) ** 2, 0.0))

    def time_complement_norm(self, f):
        return float(self.grid.norm(np.where(self.s_mask, 0.0, np.asarray(f))))

    def metadata(self):
        return {
            "transform": self.spec.to_dict(),
            "S": self.S.to_dict(),
            "Sigma": self.Sigma.to_dict(),
            "grid": self.grid.metadata(),
        }


def make_pair(spec, S, Sigma, radius=12.0, panels=32, nodes_per_panel=16):
    """Build grids (set endpoints as panel breaks) and operators for ``(S, Sigma)``."""
    S, Sigma = _as_set(S), _as_set(Sigma)
    S.check_within(spec, radius)
    Sigma.check_within(spec, radius)
    grid = build_grid(spec, radius, panels, nodes_per_panel, S.endpoints + Sigma.endpoints)
    return ConcentrationPair(spec, S, Sigma, assemble_forward(spec, grid), assemble_inverse(spec, grid))


def _set_rule(spec, set_, nodes=24, width=0.25):
    """Quadrature for ``int_set g dmu``, independent of any transform grid.

    Pieces touching the origin use Gauss-Jacobi for the density; the rest use
    Gauss-Legendre on sub-intervals of length at most ``width``.
    """
    w0, e = spec.density_coefficient, spec.density_exponent
    t, wt = leggauss(nodes)
    tj, wj = roots_jacobi(nodes, 0.0, e)
    xs, ws = [], []
    for p, q, sign in _half_pieces(set_.intervals):
        cuts = np.unique(np.concatenate([np.arange(p, q, width), [q]]))
        if p == 0:
            c = cuts[1]
            # int_0^c x^e g dx with x = c (1 + t) / 2
            xs.append(sign * c * (1 + tj) / 2)
            ws.append((c / 2) ** (e + 1) * wj * w0)
            cuts = cuts[1:]
        for u, v in zip(cuts[:-1], cuts[1:]):
            x = 0.5 * (v - u) * t + 0.5 * (v + u)
            xs.append(sign * x)
            ws.append(0.5 * (v - u) * wt * measure_density(spec, x))
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


class HSResult(NamedTuple):
    value: float
    bound: float


def hs_norm_kernel(pair, nodes=24, width=0.25):
    """``||E_S F_Sigma||_HS`` from the kernel double integral.

    Returns the value and the bound ``c_tau sqrt(mu(S) mu_hat(Sigma))``.
    """
    spec = pair.spec
    bound = spec.c_tau * math.sqrt(weighted_measure(pair.S, spec) * weighted_measure(pair.Sigma, spec))
    if pair.S.is_empty or pair.Sigma.is_empty:
        return HSResult(0.0, bound)
    y, wy = _set_rule(spec, pair.S, nodes, width)
    eta, weta = _set_rule(spec, pair.Sigma, nodes, width)
    k2 = np.abs(kernel(spec, y[None, :], eta[:, None])) ** 2
    return HSResult(float(math.sqrt(weta @ k2 @ wy)), bound)


def hs_norm_matrix(pair):
    """Frobenius norm of the orthonormal-coordinate block ``E_Sigma T E_S``."""
    return float(np.linalg.norm(pair.block)) if pair.block.size else 0.0


def hs_norm_composite(pair):
    """Weighted Frobenius norm of the assembled four-factor ``E_S F_Sigma`` matrix.

    Diagnostic only: on a truncated grid it inherits the leakage of band
    limited functions past the radius.
    """
    sw = np.sqrt(pair.grid.weights)
    mat = sw[:, None] * pair.ESFSigma.matrix / sw[None, :]
    return float(np.linalg.norm(mat))


class OpNorm(NamedTuple):
    value: float
    iterations: int
    residual: float


def op_norm(pair, tol=1e-12, max_iter=20000, seed=0):
    """Largest singular value of ``E_S F_Sigma`` by power iteration on ``M^H M``.

    Near one the top eigenvalues cluster and power iteration can stall; it
    then falls back to a dense SVD of the block (``iterations`` is -1).
    """
    m = pair.block
    if m.size == 0:
        return OpNorm(0.0, 0, 0.0)
    try:
        res = power_iteration(lambda v: m.conj().T @ (m @ v), m.shape[1], tol, max_iter, seed)
    except ConvergenceError:
        return OpNorm(float(np.linalg.norm(m, 2)), -1, 0.0)
    return OpNorm(math.sqrt(max(res.value, 0.0)), res.iterations, res.residual)


def annihilation_constant(pair_or_norm):
    """``(1 - ||E_S F_Sigma||)^-2``, or ``None`` when the norm is within 1e-6 of 1."""
    norm = pair_or_norm if isinstance(pair_or_norm, (int, float)) else op_norm(pair_or_norm).value
    if norm >= 1.0 - REFUSAL_MARGIN:
        return NOT_APPLICABLE
    return 1.0 / (1.0 - norm) ** 2


def annihilation_certificate(pair, f, constant=None):
    """Slack of ``C (||E_{S^c} f||^2 + ||F_{Sigma^c} f||^2) - ||f||^2``.

    Returns ``(slack, lhs, rhs)``; ``None`` slack when no constant applies.
    """
    c = annihilation_constant(pair) if constant is None else constant
    lhs = float(pair.grid.norm(f)) ** 2
    if c is None:
        return None, lhs, math.inf
    rhs = c * (pair.time_complement_norm(f) ** 2 + pair.band_complement_norm(f) ** 2)
    return rhs - lhs, lhs, rhs


@dataclass(frozen=True, eq=False)
class Prolate:
    """One concentration eigenpair.

    ``vector`` is the unit-norm space-limited eigenfunction (supported on S);
    ``spectrum`` is its normalized transform restricted to Sigma.
    """

    eigenvalue: float
    vector: np.ndarray
    spectrum: np.ndarray
    residual: float
    iterations: int


def prolate_pairs(pair, count, tol=1e-10, max_iter=5000, seed=0):
    """Top ``count`` eigenpairs of the concentration operator, eigenvalues non-increasing."""
    grid, fgrid = pair.grid, pair.freq_grid
    if count > grid.size:
        raise ValueError(f"count {count} exceeds grid size {grid.size}")
    m = pair.block
    n_s = m.shape[1]
    if m.size == 0:
        zeros = np.zeros(grid.size)
        return [Prolate(0.0, zeros, np.zeros(fgrid.size), 0.0, 0) for _ in range(count)]
    usable = min(count, n_s)
    vals, vecs, its, res = subspace_iteration(
        lambda q: m.conj().T @ (m @ q), n_s, usable, tol, max_iter, seed
    )
    out = []
    sw, swh = np.sqrt(grid.weights[pair.s_mask]), np.sqrt(fgrid.weights[pair.sigma_mask])
    for i in range(count):
        phi = np.zeros(grid.size, dtype=complex)
        spec_vals = np.zeros(fgrid.size, dtype=complex)
        lam = 0.0
        if i < usable:
            v = vecs[:, i]
            # fix the global phase so the largest entry is real positive
            j = np.argmax(np.abs(v))
            v = v * np.exp(-1j * np.angle(v[j]))
            lam = float(min(max(vals[i], 0.0), 1.0 + 1e-12))
            phi[pair.s_mask] = v / sw
            if lam > 0:
                spec_vals[pair.sigma_mask] = (m @ v) / math.sqrt(lam) / swh
        if not pair.spec.symmetric:
            phi, spec_vals = phi.real, spec_vals.real
        out.append(Prolate(lam, phi, spec_vals, float(res[i]) if i < usable else 0.0, its))
    return out


def export_prolates(prolates, pair, prefix):
    """CSV columns node, weight, value_i (plus imag_i for complex vectors); JSON metadata."""
    cplx = any(np.iscomplexobj(p.vector) for p in prolates)
    header = ["node", "weight"]
    cols = [pair.grid.nodes, pair.grid.weights]
    for i, p in enumerate(prolates):
        header.append(f"value_{i}")
        cols.append(np.real(p.vector))
        if cplx:
            header.append(f"imag_{i}")
            cols.append(np.imag(p.vector))
    meta = {
        "pair": pair.metadata(),
        "eigenpairs": [
            {"eigenvalue": p.eigenvalue, "residual": p.residual, "iterations": p.iterations}
            for p in prolates
        ],
    }
    return _io.write_json(f"{prefix}.json", meta), _io.write_csv(f"{prefix}.csv", header, zip(*cols))


def dilate_gram(spec, f, support, lambdas, radius=12.0, nodes=32, width=0.25):
    """Gram matrix of ``D_lam f = lam^(-a) f(x / lam)`` for ``lam`` in ``lambdas``.

    ``f`` is a callable vanishing outside the interval ``support``.  Panels
    break at every dilated support endpoint.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("lambdas must be a non-empty sequence")
    if np.any(lambdas <= 0):
        raise ValueError("dilation factors must be positive")
    if np.unique(lambdas).size != lambdas.size:
        raise ValueError("dilation factors must be distinct")
    lo, hi = (float(v) for v in support)
    if not lo < hi:
        raise ValueError("support must be a proper interval")
    ends = np.concatenate([lambdas * lo, lambdas * hi])
    if np.max(np.abs(ends)) > radius:
        raise ValueError(f"dilated support escapes the truncation radius {radius}")
    if not spec.symmetric and lo < 0:
        raise ValueError(f"{spec.label()} lives on [0, inf)")
    cut = np.unique(np.concatenate([ends, [0.0] if lo < 0 < hi else []]))
    t, wt = leggauss(nodes)
    xs, ws = [], []
    for u, v in zip(cut[:-1], cut[1:]):
        sub = np.unique(np.concatenate([np.arange(u, v, width), [v]]))
        for p, q in zip(sub[:-1], sub[1:]):
            x = 0.5 * (q - p) * t + 0.5 * (q + p)
            xs.append(x)
            ws.append(0.5 * (q - p) * wt * measure_density(spec, x))
    x, w = np.concatenate(xs), np.concatenate(ws)
    a = spec.a
    vals = np.array([lam ** (-a) * np.asarray(f(x / lam)) for lam in lambdas])
    gram = (vals * w) @ vals.conj().T
    return 0.5 * (gram + gram.conj().T)


def dilate_gram_independence(spec, f, support, lambdas, radius=12.0):
    """Smallest eigenvalue of the dilate Gram matrix; positive witnesses independence."""
    gram = dilate_gram(spec, f, support, lambdas, radius)
    return float(np.linalg.eigvalsh(gram)[0])


__all__ = [
    "SetSpec",
    "ConcentrationPair",
    "ConvergenceError",
    "HSResult",
    "OpNorm",
    "Prolate",
    "NOT_APPLICABLE",
    "make_pair",
    "weighted_measure",
    "project_time",
    "project_band",
    "hs_norm_kernel",
    "hs_norm_matrix",
    "hs_norm_composite",
    "op_norm",
    "annihilation_constant",
    "annihilation_certificate",
    "prolate_pairs",
    "export_prolates",
    "dilate_gram",
    "dilate_gram_independence",
]

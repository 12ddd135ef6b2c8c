"""Quadrature grids and dense transform matrices on a truncated cone.

A :class:`Grid` carries composite Gauss-Legendre nodes whose weights already
contain the measure density, so ``sum(w * f)`` approximates ``int f dmu``.
"""
from dataclasses import dataclass, field
import warnings

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import _io
from .transforms import TransformSpec, kernel, measure_density

GRADING_RATIO = 1.5
_MAX_GRADED = 60


def _graded_edges(first_edge, exponent, ratio=GRADING_RATIO):
    """Geometric breakpoints in ``(0, first_edge)`` for a ``x^exponent`` density.

    Grading stops once the innermost panel carries less than ~1e-14 of mass.
    """
    target = 1e-14 ** (1.0 / (exponent + 1.0))
    levels = 0
    h = first_edge
    edges = []
    while h > target * first_edge and levels < _MAX_GRADED:
        h /= ratio
        edges.append(h)
        levels += 1
    return edges


def panel_edges(spec, radius, panels, breakpoints=(), grading=True):
    """Sorted panel edges on ``[0, radius]`` (the positive half for ``dunkl1d``)."""
    extra = [abs(float(b)) for b in breakpoints if 0 < abs(float(b)) < radius]
    edges = np.unique(np.concatenate([np.linspace(0.0, radius, panels + 1), extra]))
    if grading and not spec.smooth_density:
        graded = _graded_edges(edges[1], spec.density_exponent)
        edges = np.unique(np.concatenate([edges, graded]))
    return edges


def panel_rule(spec, edges, nodes_per_panel):
    """Gauss-Legendre nodes/weights on consecutive panels, density folded in."""
    t, w = leggauss(nodes_per_panel)
    lo = edges[:-1, None]
    hi = edges[1:, None]
    nodes = (0.5 * (hi - lo) * t + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * w).ravel()
    return nodes, weights * measure_density(spec, nodes)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Quadrature realization of ``L^2(mu)`` on ``[0, R]`` or ``[-R, R]``."""

    spec: TransformSpec
    nodes: np.ndarray
    weights: np.ndarray
    radius: float
    panels: int
    nodes_per_panel: int
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))
        object.__setattr__(self, "edges", _frozen(self.edges))
        if self.nodes.shape != self.weights.shape:
            raise ValueError("nodes and weights must have the same length")
        if np.any(self.weights <= 0):
            raise ValueError("grid weights must be positive")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")

    @property
    def size(self):
        return self.nodes.size

    def __len__(self):
        return self.size

    def sample(self, f):
        """Evaluate a callable on the nodes (arrays pass through after a size check)."""
        if callable(f):
            return np.asarray(f(self.nodes))
        values = np.asarray(f)
        if values.shape[-1] != self.size:
            raise ValueError(f"expected {self.size} grid values, got shape {values.shape}")
        return values

    def inner(self, f, g):
        """Discrete ``L^2(mu)`` inner product ``sum w f conj(g)``."""
        return np.sum(self.weights * np.asarray(f) * np.conj(g), axis=-1)

    def norm(self, f):
        f = np.asarray(f)
        return np.sqrt(np.sum(self.weights * np.abs(f) ** 2, axis=-1))

    def moment_norm(self, f, s):
        """``|| |x|^s f ||`` by the same quadrature."""
        return self.norm(np.abs(self.nodes) ** s * np.asarray(f))

    def dilated(self, lam):
        """Grid on ``lam * nodes`` with weights rescaled by ``lam^(2a)``."""
        return Grid(
            self.spec,
            lam * self.nodes,
            lam ** (2 * self.spec.a) * self.weights,
            lam * self.radius,
            self.panels,
            self.nodes_per_panel,
            lam * self.edges,
        )

    def compatible(self, other):
        return (
            self.spec == other.spec
            and self.size == other.size
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )

    def metadata(self):
        return {
            "transform": self.spec.to_dict(),
            "radius": self.radius,
            "panels": self.panels,
            "nodes_per_panel": self.nodes_per_panel,
            "size": self.size,
            "total_weight": float(np.sum(self.weights)),
        }

    def export(self, prefix):
        """Write ``<prefix>.json`` (metadata) and ``<prefix>.csv`` (node, weight)."""
        meta = _io.write_json(f"{prefix}.json", self.metadata())
        table = _io.write_csv(f"{prefix}.csv", ["node", "weight"], zip(self.nodes, self.weights))
        return meta, table


def build_grid(spec, radius, panels, nodes_per_panel, breakpoints=(), grading=True):
    """Composite Gauss-Legendre grid for ``spec`` on the truncated cone.

    Parameters
    ----------
    spec : TransformSpec
    radius : float
        Truncation radius ``R``.
    panels : int
        Number of uniform panels on ``[0, R]``; for ``dunkl1d`` the layout is
        mirrored onto ``[-R, 0]``.
    nodes_per_panel : int
        Gauss-Legendre order, 2..64.
    breakpoints : sequence of float
        Extra panel edges, typically set endpoints so that node membership
        integrates indicators exactly.
    grading : bool
        Geometric refinement toward the origin when the density is not a
        polynomial.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if int(panels) != panels or panels < 1:
        raise ValueError(f"panels must be a positive integer, got {panels}")
    if int(nodes_per_panel) != nodes_per_panel or not 2 <= nodes_per_panel <= 64:
        raise ValueError(f"nodes_per_panel must be in [2, 64], got {nodes_per_panel}")
    panels = int(panels)
    nodes_per_panel = int(nodes_per_panel)
    edges = panel_edges(spec, radius, panels, breakpoints, grading)
    nodes, weights = panel_rule(spec, edges, nodes_per_panel)
    if spec.symmetric:
        nodes = np.concatenate([-nodes[::-1], nodes])
        weights = np.concatenate([weights[::-1], weights])
        edges = np.concatenate([-edges[::-1], edges[1:]])
    return Grid(spec, nodes, weights, float(radius), panels, nodes_per_panel, edges)


def reference_grid(spec, breakpoints=()):
    """The default resolution: ``R = 12``, 32 panels of 16 nodes."""
    return build_grid(spec, 12.0, 32, 16, breakpoints)


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Dense matrix acting from ``in_grid`` samples to ``out_grid`` samples."""

    matrix: np.ndarray
    in_grid: Grid
    out_grid: Grid
    spec: TransformSpec
    direction: str = "forward"

    def __post_init__(self):
        if self.matrix.shape != (self.out_grid.size, self.in_grid.size):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match grids "
                f"({self.out_grid.size}, {self.in_grid.size})"
            )
        self.matrix.setflags(write=False)

    @property
    def shape(self):
        return self.matrix.shape

    def __call__(self, f):
        values = self.in_grid.sample(f)
        return values @ self.matrix.T

    def __matmul__(self, other):
        if isinstance(other, DiscreteOperator):
            if other.out_grid is not self.in_grid and not other.out_grid.compatible(self.in_grid):
                raise ValueError("cannot compose operators on mismatched grids")
            return DiscreteOperator(
                self.matrix @ other.matrix, other.in_grid, self.out_grid, self.spec, "composite"
            )
        return self.matrix @ other

    def normalized(self):
        """Matrix in orthonormal coordinates: ``W_out^(1/2) A W_in^(-1/2)``."""
        so = np.sqrt(self.out_grid.weights)
        si = np.sqrt(self.in_grid.weights)
        return so[:, None] * self.matrix / si[None, :]

    def adjoint(self):
        """Adjoint for the weighted inner products on both grids."""
        mat = np.conj(self.matrix.T) * (self.out_grid.weights[None, :] / self.in_grid.weights[:, None])
        return DiscreteOperator(mat, self.out_grid, self.in_grid, self.spec, "adjoint")

    def export(self, prefix):
        meta = {
            "direction": self.direction,
            "transform": self.spec.to_dict(),
            "shape": list(self.shape),
            "in_grid": self.in_grid.metadata(),
            "out_grid": self.out_grid.metadata(),
        }
        rows = [("in", i, x, w) for i, (x, w) in enumerate(zip(self.in_grid.nodes, self.in_grid.weights))]
        rows += [("out", i, x, w) for i, (x, w) in enumerate(zip(self.out_grid.nodes, self.out_grid.weights))]
        return (
            _io.write_json(f"{prefix}.json", meta),
            _io.write_csv(f"{prefix}.csv", ["grid", "index", "node", "weight"], rows),
        )


def _check_grids(spec, *grids):
    for g in grids:
        if g.spec != spec:
            raise ValueError(f"grid built for {g.spec.label()} used with {spec.label()}")


def assemble_forward(spec, in_grid, out_grid=None):
    """Matrix with entries ``K(x_i, xi_j) w_i`` (row ``j``, column ``i``)."""
    out_grid = in_grid if out_grid is None else out_grid
    _check_grids(spec, in_grid, out_grid)
    mat = kernel(spec, in_grid.nodes[None, :], out_grid.nodes[:, None]) * in_grid.weights[None, :]
    return DiscreteOperator(np.ascontiguousarray(mat), in_grid, out_grid, spec, "forward")


def assemble_inverse(spec, freq_grid, space_grid=None):
    """Matrix with entries ``conj(K(x_j, xi_i)) w_hat_i`` mapping transform samples back."""
    space_grid = freq_grid if space_grid is None else space_grid
    _check_grids(spec, freq_grid, space_grid)
    k = kernel(spec, space_grid.nodes[:, None], freq_grid.nodes[None, :])
    mat = np.conj(k) * freq_grid.weights[None, :]
    return DiscreteOperator(np.ascontiguousarray(mat), freq_grid, space_grid, spec, "inverse")


def tail_mass(spec, f, radius, factor=3.0, nodes=64):
    """Fraction of ``int |f|^2 dmu`` lying in ``radius < |x| < factor * radius``."""
    edges = np.linspace(radius, factor * radius, 9)
    x, w = panel_rule(spec, edges, nodes)
    outside = np.sum(w * np.abs(f(x)) ** 2)
    if spec.symmetric:
        outside += np.sum(w * np.abs(f(-x)) ** 2)
    inner_edges = np.linspace(0.0, radius, 33)
    xi, wi = panel_rule(spec, inner_edges, 32)
    inside = np.sum(wi * np.abs(f(xi)) ** 2)
    if spec.symmetric:
        inside += np.sum(wi * np.abs(f(-xi)) ** 2)
    total = inside + outside
    return 0.0 if total == 0 else float(outside / total)


def plancherel_defect(forward, test_family, tail_warn=1e-10):
    """Largest ``| ||T f|| / ||f|| - 1 |`` over a family.

    ``test_family`` holds callables (tail mass is then checked and a warning is
    emitted above ``tail_warn``) or arrays of node values.  Zero functions are
    skipped.
    """
    worst = 0.0
    for f in test_family:
        if callable(f):
            tm = tail_mass(forward.spec, f, forward.in_grid.radius)
            if tm > tail_warn:
                warnings.warn(
                    f"test function has relative tail mass {tm:.2e} beyond R={forward.in_grid.radius}",
                    RuntimeWarning,
                    stacklevel=2,
                )
        values = forward.in_grid.sample(f)
        nf = forward.in_grid.norm(values)
        if nf == 0:
            continue
        ntf = forward.out_grid.norm(forward(values))
        worst = max(worst, abs(ntf / nf - 1.0))
    return float(worst)


def dilate(spec, f, lam):
    """``D_lam f(x) = lam^(-a) f(x / lam)`` for a callable ``f``."""
    a = spec.a
    return lambda x: lam ** (-a) * f(np.asarray(x) / lam)


def relative_l2_error(grid, approx, exact):
    den = grid.norm(exact)
    num = grid.norm(np.asarray(approx) - np.asarray(exact))
    return float(num / den) if den > 0 else float(num)


def truncated_measure(spec, radius):
    """``mu`` of the truncated cone, closed form."""
    return spec.sphere_weight * radius ** (2 * spec.a) / (2 * spec.a)


__all__ = [
    "Grid",
    "DiscreteOperator",
    "build_grid",
    "reference_grid",
    "assemble_forward",
    "assemble_inverse",
    "plancherel_defect",
    "tail_mass",
    "dilate",
    "relative_l2_error",
    "truncated_measure",
    "panel_rule",
    "panel_edges",
]

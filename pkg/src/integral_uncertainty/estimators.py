"""Estimator-style wrappers over the functional core.

Rows of ``X`` are functions sampled on the fitted grid.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_grid_array, check_positive
from .concentration import annihilation_constant, hs_norm_matrix, make_pair, op_norm, prolate_pairs
from .discretize import assemble_forward, assemble_inverse, build_grid
from .recovery import Observation, observe, reconstruct
from .transforms import TransformSpec


class _GridParams(BaseEstimator):
    def _spec(self):
        return TransformSpec(self.kind, self.param)

    def _check_grid_params(self):
        check_positive(self.radius, "radius")
        return self._spec()


class IntegralTransformer(TransformerMixin, _GridParams):
    """Discrete transform ``T`` and its inverse on a quadrature grid.

    Parameters
    ----------
    kind : {"hankel", "dunkl1d"}
    param : float
        ``alpha`` for ``hankel``, ``k`` for ``dunkl1d``.
    radius, panels, nodes_per_panel
        Grid resolution.

    Attributes
    ----------
    grid_ : Grid
    nodes_ : ndarray
    forward_, inverse_ : DiscreteOperator
    """

    def __init__(self, kind="hankel", param=0.0, radius=12.0, panels=32, nodes_per_panel=16):
        self.kind = kind
        self.param = param
        self.radius = radius
        self.panels = panels
        self.nodes_per_panel = nodes_per_panel

    def fit(self, X=None, y=None):
        spec = self._check_grid_params()
        self.grid_ = build_grid(spec, self.radius, self.panels, self.nodes_per_panel)
        self.nodes_ = self.grid_.nodes
        self.forward_ = assemble_forward(spec, self.grid_)
        self.inverse_ = assemble_inverse(spec, self.grid_)
        self.n_features_in_ = self.grid_.size
        if X is not None:
            check_grid_array(X, self.n_features_in_)
        return self

    def transform(self, X):
        check_is_fitted(self, "forward_")
        X = check_grid_array(X, self.n_features_in_)
        return X @ self.forward_.matrix.T

    def inverse_transform(self, X):
        check_is_fitted(self, "inverse_")
        X = check_grid_array(X, self.n_features_in_)
        return X @ self.inverse_.matrix.T

    def sample(self, f):
        """Evaluate a callable on the fitted nodes."""
        check_is_fitted(self, "grid_")
        return self.grid_.sample(f)


class ConcentrationOperator(TransformerMixin, _GridParams):
    """Spectral data of ``E_S F_Sigma`` and projection onto its top eigenfunctions.

    Attributes
    ----------
    pair_ : ConcentrationPair
    op_norm_, hs_norm_ : float
    annihilation_constant_ : float or None
    eigenvalues_ : ndarray of shape (n_components,)
    components_ : ndarray of shape (n_components, n_nodes)
        Orthonormal in the weighted inner product.
    """

    def __init__(
        self,
        kind="hankel",
        param=0.0,
        S=((0.0, 1.0),),
        Sigma=((0.0, 1.0),),
        n_components=4,
        radius=12.0,
        panels=32,
        nodes_per_panel=16,
        tol=1e-10,
        random_state=0,
    ):
        self.kind = kind
        self.param = param
        self.S = S
        self.Sigma = Sigma
        self.n_components = n_components
        self.radius = radius
        self.panels = panels
        self.nodes_per_panel = nodes_per_panel
        self.tol = tol
        self.random_state = random_state

    def fit(self, X=None, y=None):
        spec = self._check_grid_params()
        check_positive(self.tol, "tol")
        if int(self.n_components) != self.n_components or self.n_components < 1:
            raise ValueError("n_components must be a positive integer")
        pair = make_pair(spec, self.S, self.Sigma, self.radius, self.panels, self.nodes_per_panel)
        self.pair_ = pair
        self.op_norm_ = op_norm(pair).value
        self.hs_norm_ = hs_norm_matrix(pair)
        self.annihilation_constant_ = annihilation_constant(self.op_norm_)
        prolates = prolate_pairs(pair, int(self.n_components), self.tol, seed=self.random_state)
        self.eigenvalues_ = np.array([p.eigenvalue for p in prolates])
        self.components_ = np.array([p.vector for p in prolates])
        self.n_features_in_ = pair.grid.size
        return self

    def transform(self, X):
        """Weighted inner products with the components."""
        check_is_fitted(self, "components_")
        X = check_grid_array(X, self.n_features_in_)
        return (X * self.pair_.grid.weights) @ self.components_.conj().T

    def inverse_transform(self, coef):
        check_is_fitted(self, "components_")
        coef = check_grid_array(coef, self.components_.shape[0], "coef")
        return coef @ self.components_


class MissingDataRecovery(_GridParams):
    """Recover functions from samples off ``S`` and transform samples off ``Sigma``.

    ``predict`` takes rows ``[g1, g2]``: grid values of ``f`` (zero on S)
    followed by transform-grid values of ``T f`` (zero on Sigma).
    """

    def __init__(
        self,
        kind="hankel",
        param=0.0,
        S=((0.0, 0.5),),
        Sigma=((0.0, 1.0),),
        tol=1e-12,
        max_iter=2000,
        radius=12.0,
        panels=32,
        nodes_per_panel=16,
    ):
        self.kind = kind
        self.param = param
        self.S = S
        self.Sigma = Sigma
        self.tol = tol
        self.max_iter = max_iter
        self.radius = radius
        self.panels = panels
        self.nodes_per_panel = nodes_per_panel

    def fit(self, X=None, y=None):
        spec = self._check_grid_params()
        check_positive(self.tol, "tol")
        self.pair_ = make_pair(spec, self.S, self.Sigma, self.radius, self.panels, self.nodes_per_panel)
        self.op_norm_ = op_norm(self.pair_).value
        self.annihilation_constant_ = annihilation_constant(self.op_norm_)
        self.n_nodes_ = self.pair_.grid.size
        self.n_features_in_ = self.n_nodes_ + self.pair_.freq_grid.size
        return self

    def observe(self, F):
        """Rows ``[g1, g2]`` for full functions sampled on the grid."""
        check_is_fitted(self, "pair_")
        F = check_grid_array(F, self.n_nodes_, "F")
        rows = []
        for f in F:
            obs = observe(f, self.pair_)
            rows.append(np.concatenate([obs.g1, obs.g2]))
        return np.array(rows)

    def predict(self, X):
        check_is_fitted(self, "pair_")
        X = check_grid_array(X, self.n_features_in_)
        n = self.n_nodes_
        out, iters = [], []
        for row in X:
            g1 = np.where(self.pair_.s_mask, 0, row[:n])
            g2 = np.where(self.pair_.sigma_mask, 0, row[n:])
            rec = reconstruct(Observation(g1, g2, self.pair_), self.tol, self.max_iter, norm=self.op_norm_)
            out.append(rec.f_hat)
            iters.append(rec.iterations)
        self.n_iter_ = np.array(iters)
        return np.array(out)

"""Missing-data recovery from ``f`` off ``S`` and ``T f`` off ``Sigma``.

With ``u = E_S f`` the data satisfy
``(I - E_S F_Sigma E_S) u = E_S F_Sigma g1 + E_S T^-1 g2``, solved here by
Neumann iteration; it contracts whenever ``||E_S F_Sigma|| < 1``.
"""
from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np

from . import _io
from ._linalg import ConvergenceError
from .concentration import REFUSAL_MARGIN, annihilation_constant, op_norm


class RecoveryRefused(ValueError):
    """The pair is not a contraction; no stability constant is available."""


@dataclass(frozen=True, eq=False)
class Observation:
    g1: np.ndarray
    g2: np.ndarray
    pair: object

    def __post_init__(self):
        if np.any(self.g1[self.pair.s_mask] != 0):
            raise ValueError("g1 must vanish on S")
        if np.any(self.g2[self.pair.sigma_mask] != 0):
            raise ValueError("g2 must vanish on Sigma")


def observe(f, pair):
    """Mask ``f`` by ``S^c`` and ``T f`` by ``Sigma^c``."""
    f = pair.grid.sample(f)
    tf = pair.forward(f)
    g1 = np.where(pair.s_mask, 0, f)
    g2 = np.where(pair.sigma_mask, 0, tf)
    return Observation(g1, g2, pair)


class Reconstruction(NamedTuple):
    f_hat: np.ndarray
    iterations: int
    residual: float
    op_norm: float
    history: tuple


def _rhs(obs):
    """``E_S T^-1 (E_Sigma T g1 + g2)`` in square-root-weight coordinates on the S nodes."""
    pair = obs.pair
    h = np.where(pair.sigma_mask, pair.forward(obs.g1), obs.g2)
    rows = pair.inverse.matrix[pair.s_mask]
    return np.sqrt(pair.grid.weights[pair.s_mask]) * (rows @ h)


def reconstruct(obs, tol=1e-12, max_iter=2000, norm=None):
    """Neumann iteration ``u <- b + M^H M u``; returns ``f_hat = g1 + u``.

    ``residual`` is the last update size relative to ``||b||``; the iteration
    stops when it falls below ``tol``.
    """
    pair = obs.pair
    if pair.S.is_empty or not np.any(pair.s_mask):
        return Reconstruction(np.array(obs.g1), 0, 0.0, 0.0, ())
    rho = op_norm(pair).value if norm is None else norm
    if rho >= 1 - REFUSAL_MARGIN:
        raise RecoveryRefused(f"||E_S F_Sigma|| = {rho:.9g} is not below 1 - {REFUSAL_MARGIN:g}")
    m = pair.block
    b = _rhs(obs)
    nb = float(np.linalg.norm(b))
    sw = np.sqrt(pair.grid.weights[pair.s_mask])
    u = b.copy()
    history = []
    res = 0.0 if nb == 0 else 1.0
    it = 0
    while nb > 0:
        if it >= max_iter:
            raise ConvergenceError(
                f"Neumann iteration did not converge in {max_iter} steps (residual {res:.3g})",
                residual=res,
                iterations=it,
            )
        it += 1
        new = b + m.conj().T @ (m @ u)
        res = float(np.linalg.norm(new - u)) / nb
        history.append(res)
        u = new
        if res <= tol:
            break
    f_hat = np.array(obs.g1, dtype=np.result_type(obs.g1, u))
    f_hat[pair.s_mask] = u / sw
    if not pair.spec.symmetric:
        f_hat = np.real(f_hat)
    return Reconstruction(f_hat, it, res, float(rho), tuple(history))


def observed_rate(history, skip=2):
    """Geometric mean ratio of successive updates, ignoring the first ``skip`` steps."""
    h = np.asarray(history)
    h = h[skip:]
    h = h[h > 0]
    if h.size < 2:
        return 0.0
    return float((h[-1] / h[0]) ** (1.0 / (h.size - 1)))


def direct_solve(obs):
    """Dense solve of the same restricted system; a cross-check for :func:`reconstruct`."""
    pair = obs.pair
    m = pair.block
    b = _rhs(obs)
    u = np.linalg.solve(np.eye(m.shape[1]) - m.conj().T @ m, b)
    f_hat = np.array(obs.g1, dtype=np.result_type(obs.g1, u))
    f_hat[pair.s_mask] = u / np.sqrt(pair.grid.weights[pair.s_mask])
    return np.real(f_hat) if not pair.spec.symmetric else f_hat


def _noise(rng, grid, mask, level, complex_):
    n = rng.standard_normal(grid.size)
    if complex_:
        n = n + 1j * rng.standard_normal(grid.size)
    n = np.where(mask, n, 0)
    nn = float(grid.norm(n))
    return n * (level / nn) if nn > 0 else n


@dataclass
class StabilityReport:
    noise_level: float
    error: float
    noise1: float
    noise2: float
    band_residual: float
    constant: float
    bound: float
    slack: float
    passed: bool
    iterations: int
    op_norm: float

    def to_dict(self):
        return dict(self.__dict__)


def stability_certificate(obs, f_true, noise_level, seed=0, tol=1e-13, max_iter=5000, slack_tol=1e-6):
    """Perturb ``g1``, ``g2`` by fixed-seed noise of norm ``noise_level`` and bound the error.

    The check is ``||e||^2 <= C (||n1||^2 + ||n2||^2)`` with
    ``C = (1 - ||E_S F_Sigma||)^-2``; ``slack`` is ``bound - ||e||^2`` relative to
    ``bound``.  ``band_residual`` is ``||F_{Sigma^c} e||`` so the inequality can
    also be read directly on ``e``.
    """
    pair = obs.pair
    rho = op_norm(pair).value
    c = annihilation_constant(rho)
    if c is None:
        raise RecoveryRefused(f"||E_S F_Sigma|| = {rho:.9g} is not below 1 - {REFUSAL_MARGIN:g}")
    rng = np.random.default_rng(seed)
    cplx = pair.spec.symmetric
    n1 = _noise(rng, pair.grid, ~pair.s_mask, noise_level, cplx)
    n2 = _noise(rng, pair.freq_grid, ~pair.sigma_mask, noise_level, cplx)
    noisy = Observation(obs.g1 + n1, obs.g2 + n2, pair)
    rec = reconstruct(noisy, tol, max_iter, norm=rho)
    f_true = pair.grid.sample(f_true)
    e = rec.f_hat - f_true
    err2 = float(pair.grid.norm(e)) ** 2
    nn1, nn2 = float(pair.grid.norm(n1)), float(pair.freq_grid.norm(n2))
    bound = c * (nn1 ** 2 + nn2 ** 2)
    slack = (bound - err2) / bound if bound > 0 else -err2
    passed = slack >= -slack_tol if bound > 0 else math.sqrt(err2) <= 10 * tol * max(float(pair.grid.norm(f_true)), 1.0)
    return StabilityReport(
        noise_level=noise_level,
        error=math.sqrt(err2),
        noise1=nn1,
        noise2=nn2,
        band_residual=pair.band_complement_norm(e),
        constant=c,
        bound=bound,
        slack=slack,
        passed=bool(passed),
        iterations=rec.iterations,
        op_norm=rho,
    )


def export_reconstruction(obs, f_true, rec, prefix, extra=None):
    pair = obs.pair
    f_true = pair.grid.sample(f_true)
    cols = [pair.grid.nodes, np.real(f_true), np.real(obs.g1), np.real(rec.f_hat)]
    header = ["node", "truth", "observed", "recovered"]
    if np.iscomplexobj(rec.f_hat) or np.iscomplexobj(f_true):
        cols += [np.imag(f_true), np.imag(obs.g1), np.imag(rec.f_hat)]
        header += ["truth_imag", "observed_imag", "recovered_imag"]
    meta = {
        "pair": pair.metadata(),
        "iterations": rec.iterations,
        "residual": rec.residual,
        "op_norm": rec.op_norm,
        "C": annihilation_constant(rec.op_norm),
        "rate": observed_rate(rec.history),
        "relative_error": float(pair.grid.norm(rec.f_hat - f_true) / pair.grid.norm(f_true)),
    }
    meta.update(extra or {})
    return _io.write_json(f"{prefix}.json", meta), _io.write_csv(f"{prefix}.csv", header, zip(*cols))

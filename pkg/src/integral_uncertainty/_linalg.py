"""Iterative eigensolvers for Hermitian PSD operators given as callables."""
from typing import NamedTuple

import numpy as np


class ConvergenceError(RuntimeError):
    """An iterative solver stopped at ``max_iter`` without meeting ``tol``."""

    def __init__(self, message, value=None, residual=None, iterations=None):
        super().__init__(message)
        self.value = value
        self.residual = residual
        self.iterations = iterations


class EigResult(NamedTuple):
    value: float
    vector: np.ndarray
    iterations: int
    residual: float


def _start(n, k, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, k))


def power_iteration(apply, n, tol=1e-12, max_iter=10000, seed=0):
    """Dominant eigenpair of a Hermitian PSD operator.

    Stops when the Rayleigh residual ``||A v - rho v||`` drops below
    ``tol * max(rho, 1)``.
    """
    if n == 0:
        return EigResult(0.0, np.zeros(0), 0, 0.0)
    v = _start(n, 1, seed)[:, 0].astype(complex)
    v /= np.linalg.norm(v)
    rho, res = 0.0, np.inf
    for it in range(1, max_iter + 1):
        w = apply(v)
        rho = float(np.real(np.vdot(v, w)))
        res = float(np.linalg.norm(w - rho * v))
        nw = np.linalg.norm(w)
        if nw == 0:
            return EigResult(0.0, v, it, 0.0)
        if res <= tol * max(rho, 1.0):
            return EigResult(rho, v, it, res)
        v = w / nw
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps "
        f"(rayleigh={rho:.6g}, residual={res:.3g})",
        value=rho,
        residual=res,
        iterations=max_iter,
    )


def subspace_iteration(apply, n, count, tol=1e-10, max_iter=5000, seed=0, guard=4):
    """Top ``count`` eigenpairs by block power iteration with Rayleigh-Ritz.

    ``apply`` maps an ``(n, b)`` block to an ``(n, b)`` block.  Returns values
    (non-increasing), orthonormal vectors as columns, iterations and the
    per-pair residual norms.
    """
    if count > n:
        raise ValueError(f"requested {count} eigenpairs from a space of dimension {n}")
    if count == 0:
        return np.zeros(0), np.zeros((n, 0)), 0, np.zeros(0)
    b = min(n, count + guard)
    q, _ = np.linalg.qr(_start(n, b, seed).astype(complex))
    vals = np.zeros(count)
    res = np.full(count, np.inf)
    for it in range(1, max_iter + 1):
        z = apply(q)
        h = q.conj().T @ z
        theta, y = np.linalg.eigh(0.5 * (h + h.conj().T))
        order = np.argsort(theta)[::-1]
        theta, y = theta[order], y[:, order]
        ritz = q @ y
        az = z @ y
        res = np.linalg.norm(az[:, :count] - ritz[:, :count] * theta[:count], axis=0)
        vals = theta[:count]
        if np.all(res <= tol * max(theta[0], 1.0)):
            return vals, ritz[:, :count], it, res
        q, _ = np.linalg.qr(az)
    raise ConvergenceError(
        f"subspace iteration did not converge in {max_iter} steps "
        f"(max residual {np.max(res):.3g})",
        value=vals,
        residual=res,
        iterations=max_iter,
    )

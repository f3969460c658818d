"""Dense symmetric eigendecomposition and Cholesky factorization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SymmetricMatrix
from .exceptions import NoConvergence, NotPositiveDefinite, ValidationError

MAX_SWEEPS = 64
OFF_DIAGONAL_TOL = 1e-12
# "auto" switches to LAPACK above this size; a Jacobi sweep costs O(n^3)
# in Python-driven rounds.
AUTO_JACOBI_LIMIT = 256


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _as_square(s) -> np.ndarray:
    a = np.array(s.values if isinstance(s, SymmetricMatrix) else s, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
    if np.abs(a - a.T).max(initial=0.0) > 1e-12 * scale:
        raise ValidationError("matrix is not symmetric")
    return a


def _round_robin(n: int):
    """Pairings for one sweep: n-1 rounds (n even) of n/2 disjoint pairs
    that together cover every unordered pair exactly once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(a: np.ndarray, max_sweeps: int):
    n = a.shape[0]
    v = np.eye(n)
    if n < 2:
        return np.diag(a).copy(), v, 0
    threshold = OFF_DIAGONAL_TOL * np.linalg.norm(a)
    rounds = _round_robin(n)
    off = np.abs(a - np.diag(np.diag(a)))
    sweeps = 0
    while off.max() > threshold:
        if sweeps >= max_sweeps:
            raise NoConvergence(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(max off-diagonal {off.max():.3e})"
            )
        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- J^T A J with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
            rp, rq = a[p, :], a[q, :]
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p], a[:, q]
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p], v[:, q]
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
        sweeps += 1
        off = np.abs(a - np.diag(np.diag(a)))
    return np.diag(a).copy(), v, sweeps


def eigen_symmetric(s, method: str = "jacobi", max_sweeps: int = MAX_SWEEPS) -> EigenDecomposition:
    """Full eigendecomposition, eigenvalues ascending.

    ``method="jacobi"`` runs cyclic Jacobi sweeps (round-robin pair order)
    until the largest off-diagonal magnitude is at most 1e-12 times the
    Frobenius norm. ``"lapack"`` delegates to :func:`numpy.linalg.eigh`;
    ``"auto"`` picks Jacobi up to ``AUTO_JACOBI_LIMIT`` rows.
    """
    a = _as_square(s)
    if method == "auto":
        method = "jacobi" if a.shape[0] <= AUTO_JACOBI_LIMIT else "lapack"
    if method == "jacobi":
        w, v, sweeps = _jacobi(a, max_sweeps)
    elif method == "lapack":
        try:
            w, v = np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from exc
        sweeps = 0
    else:
        raise ValidationError(f"unknown eigen method {method!r}")
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], v[:, order], sweeps)


def min_eigenvalue(s, method: str = "auto") -> float:
    a = _as_square(s)
    if a.shape[0] == 0:
        return math.inf
    if method == "auto":
        method = "jacobi" if a.shape[0] <= AUTO_JACOBI_LIMIT else "lapack"
    if method == "lapack":
        try:
            return float(np.linalg.eigvalsh(a)[0])
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from exc
    return float(eigen_symmetric(a, method=method).eigenvalues[0])


def cholesky(s) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == s`` (Cholesky-Banachiewicz,
    row by row)."""
    a = _as_square(s)
    n = a.shape[0]
    low = np.zeros_like(a)
    for i in range(n):
        row = low[i, :i]
        for j in range(i):
            low[i, j] = (a[i, j] - low[j, :j] @ row[:j]) / low[j, j]
        pivot = a[i, i] - row @ row
        if not pivot > 0.0:
            raise NotPositiveDefinite(f"non-positive pivot {pivot:.3e} at row {i}")
        low[i, i] = math.sqrt(pivot)
    return low

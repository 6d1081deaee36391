"""Dense complex linear-algebra kernels shared by the rest of the package."""
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-9
HERMITIAN_TOL = 1e-10
GRAM_DET_TOL = 1e-12


class NotHermitianError(ValueError):
    pass


def as_vectors(vectors) -> np.ndarray:
    """Stack a sequence of vectors into an ``(m, d)`` array (one vector per row)."""
    if isinstance(vectors, np.ndarray):
        arr = vectors
    else:
        vectors = list(vectors)
        if not vectors:
            return np.zeros((0, 0), dtype=complex)
        arr = np.array(vectors)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def _project_out(v: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Remove the components along the orthonormal rows ``q`` (two passes)."""
    for _ in range(2):
        v = v - (v @ q.conj().T) @ q
    return v


class SpanBuilder:
    """Orthonormal rows spanning the vectors admitted so far.

    Candidates are offered in chunks: the chunk is projected onto the
    complement of the current span in one batch, then admitted one at a time
    (first come first served) when the residual norm exceeds the threshold.
    """

    def __init__(self, width: int, dtype=complex, capacity: int = 64):
        self.q = np.zeros((max(1, min(capacity, width)), width), dtype=dtype)
        self.k = 0
        self.width = width

    @property
    def basis(self) -> np.ndarray:
        return self.q[: self.k]

    def _push(self, v: np.ndarray):
        if self.k == self.q.shape[0]:
            q = np.zeros((min(self.width, 2 * self.k), self.width), dtype=self.q.dtype)
            q[: self.k] = self.q[: self.k]
            self.q = q
        self.q[self.k] = v
        self.k += 1

    def residuals(self, rows: np.ndarray) -> np.ndarray:
        q = self.basis
        for _ in range(2):
            rows = rows - (rows @ q.conj().T) @ q
        return rows

    def extend(self, rows: np.ndarray, thresh: float) -> list[int]:
        """Offer ``rows``; return the local indices that were admitted.

        The residual block is first cut down to its singular directions above
        ``thresh``; the greedy pass then runs in those coordinates and stops
        once they are exhausted.  Without this, a genuine but tiny residual
        gets normalised along with its round-off, and later rows pick up
        spurious residuals of about the threshold size.
        """
        rows = np.atleast_2d(rows)
        if np.iscomplexobj(rows) and not np.iscomplexobj(self.q):
            self.q = self.q.astype(complex)
        resid = self.residuals(rows.astype(self.q.dtype, copy=False))
        live = np.flatnonzero(np.linalg.norm(resid, axis=1) > thresh)
        room = self.width - self.k
        if live.size == 0 or room == 0:
            return []
        _, s, vh = np.linalg.svd(resid[live], full_matrices=False)
        rank = min(int(np.count_nonzero(s > thresh)), room)
        if rank == 0:
            return []
        vh = vh[:rank]
        coords = resid[live] @ vh.conj().T
        g = np.zeros((rank, rank), dtype=coords.dtype)
        picked: list[int] = []
        for i, c in enumerate(coords):
            c = _project_out(c, g[: len(picked)])
            nc = np.linalg.norm(c)
            if nc > thresh:
                g[len(picked)] = c / nc
                picked.append(i)
                if len(picked) == rank:
                    break
        while len(picked) < rank:
            # first-come left some of the retained directions uncovered
            res = np.linalg.norm(_project_out(coords, g[: len(picked)]), axis=1)
            res[picked] = -1.0
            i = int(np.argmax(res))
            c = _project_out(coords[i], g[: len(picked)])
            g[len(picked)] = c / np.linalg.norm(c)
            picked.append(i)
        new = self.residuals(g @ vh)
        for j in range(rank):
            v = _project_out(new[j], new[:j])
            new[j] = v / np.linalg.norm(v)
            self._push(new[j])
        return sorted(int(live[i]) for i in picked)


def numeric_rank(vectors, tol: float = DEFAULT_RANK_TOL, chunk: int = 256) -> tuple[int, list[int]]:
    """Greedy maximal independent subset.

    A vector is admitted iff its residual after projecting out the previously
    admitted vectors exceeds ``tol`` times the largest vector norm.  Returns the
    rank and the admitted indices in input order.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    arr = as_vectors(vectors)
    if arr.size == 0:
        return 0, []
    scale = np.linalg.norm(arr, axis=1).max()
    if scale == 0:
        return 0, []
    span = SpanBuilder(arr.shape[1], np.result_type(arr, float))
    chosen: list[int] = []
    for start in range(0, arr.shape[0], chunk):
        taken = span.extend(arr[start : start + chunk], tol * scale)
        chosen.extend(start + i for i in taken)
        if span.k == arr.shape[1]:
            break
    return len(chosen), chosen


def orthonormal_columns(vectors) -> np.ndarray:
    """Orthonormal basis (as columns) of the span of linearly independent ``vectors``.

    Uses QR with the diagonal of R made real positive, so the result equals
    Gram-Schmidt applied in input order.
    """
    arr = as_vectors(vectors)
    if arr.size == 0:
        return np.zeros((0, 0), dtype=complex)
    q, r = np.linalg.qr(arr.T.astype(complex))
    diag = np.diag(r)
    if np.any(np.abs(diag) <= 1e-14 * np.abs(diag).max()):
        raise np.linalg.LinAlgError("input vectors are linearly dependent")
    return q * (diag / np.abs(diag))[None, :]


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    scale = max(1.0, np.abs(a).max()) if a.size else 1.0
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.abs(a - a.conj().T).max(initial=0) <= tol * scale


def hermitian_eig(a: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors with ``a = U diag(w) U^dagger``."""
    a = np.asarray(a)
    if not is_hermitian(a, tol):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return np.linalg.eigh(a)


def evolve(a: np.ndarray, t: float, v: np.ndarray) -> np.ndarray:
    """``exp(-i a t) v`` for Hermitian ``a`` via its eigendecomposition."""
    w, u = hermitian_eig(a)
    return u @ (np.exp(-1j * w * t) * (u.conj().T @ v))


def evolve_many(a: np.ndarray, times: Sequence[float], v: np.ndarray) -> np.ndarray:
    """States ``exp(-i a t) v`` for every ``t``; rows index time."""
    w, u = hermitian_eig(a)
    c = u.conj().T @ v
    times = np.asarray(times, dtype=float)
    return (np.exp(-1j * np.outer(times, w)) * c[None, :]) @ u.T


def gram_matrix(vectors) -> np.ndarray:
    """``G[k, l] = <v_k | v_l>``."""
    arr = as_vectors(vectors)
    return arr.conj() @ arr.T


def gram_independent(g: np.ndarray, scale: float = 1.0, tol: float = GRAM_DET_TOL) -> bool:
    """Determinant rule ``|det G| > tol * scale**(2k)`` for a k x k Gramian."""
    g = np.asarray(g)
    k = g.shape[0]
    if k == 0:
        return True
    sign, logdet = np.linalg.slogdet(g)
    if sign == 0:
        return False
    margin = logdet - (np.log(tol) + 2 * k * np.log(scale))
    if abs(margin) < 2.0:
        logger.debug("borderline Gramian determinant: log|det|=%.3f, margin %.3f", logdet, margin)
    return margin > 0

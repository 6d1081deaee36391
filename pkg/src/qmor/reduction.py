"""Minimal reduced subspace, reduction maps and projected reduced-order models."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .burnside import BurnsideBasis
from .linalg import DEFAULT_RANK_TOL, GRAM_DET_TOL, SpanBuilder, is_hermitian, orthonormal_columns
from .model import HamiltonianModel, ModelError, PauliSum, normalize_product_labels, product_state
from .pauli import BinaryPauli

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-10
CONTAIN_TOL = 1e-9
INVARIANCE_TOL = 1e-8
_CHUNK = 2048
_I_POW = np.array([1, 1j, -1, -1j])


def _matrix_to_pairs(m: np.ndarray) -> list:
    m = np.asarray(m)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def _pairs_to_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass(frozen=True, eq=False)
class ReductionMap:
    """``d x r`` matrix with orthonormal columns spanning a reduced subspace.

    ``selected`` records which orbit generators were kept (positions in the
    Burnside basis for ``burnside``, packed Pauli keys for ``gramian``,
    snapshot indices for ``snapshots``).
    """

    phi: np.ndarray
    source: str
    selected: tuple[int, ...] = ()
    basis_size: int | None = None

    @property
    def d(self) -> int:
        return self.phi.shape[0]

    @property
    def r(self) -> int:
        return self.phi.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.phi @ self.phi.conj().T

    def orthonormality_error(self) -> float:
        return float(np.abs(self.phi.conj().T @ self.phi - np.eye(self.r)).max(initial=0.0))

    def containment_residual(self, psi0: np.ndarray) -> float:
        """``||(I - Phi Phi^dagger) psi0||``."""
        psi0 = np.asarray(psi0)
        return float(np.linalg.norm(psi0 - self.phi @ (self.phi.conj().T @ psi0)))

    def invariance_residual(self, coeffs: Sequence[np.ndarray]) -> float:
        """Largest ``||(I - Phi Phi^dagger) H_k Phi||_F`` over the given operators."""
        worst = 0.0
        for h in coeffs:
            hp = np.asarray(h) @ self.phi
            res = hp - self.phi @ (self.phi.conj().T @ hp)
            worst = max(worst, float(np.linalg.norm(res)))
        return worst

    def truncated(self, k: int) -> "ReductionMap":
        """Drop the last ``k`` columns."""
        if not 0 <= k < self.r:
            raise ValueError(f"cannot drop {k} of {self.r} columns")
        keep = self.r - k
        return ReductionMap(self.phi[:, :keep], self.source, self.selected[:keep], self.basis_size)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "d": self.d,
            "r": self.r,
            "basis_size": self.basis_size,
            "selected": [int(s) for s in self.selected],
            "phi": _matrix_to_pairs(self.phi),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReductionMap":
        phi = _pairs_to_matrix(data["phi"]).reshape(int(data["d"]), int(data["r"]))
        return cls(phi, data["source"], tuple(data.get("selected", ())), data.get("basis_size"))

    def to_csv(self) -> str:
        """One row per entry: ``row, col, re, im``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "re", "im"])
        for (i, j), v in np.ndenumerate(self.phi):
            w.writerow([i, j, repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """Projected model ``hat H(lam) = hat H0 + sum_k lam_k hat H_k`` with initial value ``v0``."""

    h0: np.ndarray | None
    terms: tuple[np.ndarray, ...]
    v0: np.ndarray
    labels: tuple[str, ...] = ()

    @property
    def r(self) -> int:
        return self.v0.shape[0]

    @property
    def num_params(self) -> int:
        return len(self.terms)

    def parameter_vector(self, lam) -> np.ndarray:
        if isinstance(lam, dict):
            unknown = set(lam) - set(self.labels)
            if unknown:
                raise ModelError(f"unknown parameter(s): {sorted(unknown)}")
            return np.array([float(lam.get(lb, 0.0)) for lb in self.labels])
        lam = np.asarray(lam, dtype=float).ravel()
        if lam.shape[0] != self.num_params:
            raise ModelError(f"expected {self.num_params} parameters, got {lam.shape[0]}")
        return lam

    def evaluate(self, lam) -> np.ndarray:
        lam = self.parameter_vector(lam)
        h = np.zeros((self.r, self.r), dtype=complex) if self.h0 is None else self.h0.astype(complex)
        for c, t in zip(lam, self.terms):
            h = h + c * t
        return h

    def hermiticity_error(self) -> float:
        mats = ([self.h0] if self.h0 is not None else []) + list(self.terms)
        return max((float(np.abs(m - m.conj().T).max(initial=0.0)) for m in mats), default=0.0)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "labels": list(self.labels),
            "h0": _matrix_to_pairs(self.h0) if self.h0 is not None else None,
            "terms": [_matrix_to_pairs(t) for t in self.terms],
            "v0": _matrix_to_pairs(self.v0),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReducedModel":
        h0 = _pairs_to_matrix(data["h0"]) if data.get("h0") is not None else None
        terms = tuple(_pairs_to_matrix(t) for t in data["terms"])
        return cls(h0, terms, _pairs_to_matrix(data["v0"]), tuple(data.get("labels", ())))


# --- dense orbit ------------------------------------------------------------------


def _orbit_chunks(basis: BurnsideBasis, psi0: np.ndarray, chunk: int) -> Iterator[np.ndarray]:
    if basis.mode == "dense":
        elems = basis.elements
        for s in range(0, len(elems), chunk):
            yield np.array([b @ psi0 for b in elems[s : s + chunk]])
        return
    n = basis.n
    d = 1 << n
    idx = np.arange(d, dtype=np.uint64)
    mask = np.uint64(d - 1)
    keys = np.asarray(basis.keys, dtype=np.uint64)
    for s in range(0, len(keys), chunk):
        k = keys[s : s + chunk]
        z = (k >> np.uint64(n))[:, None]
        x = (k & mask)[:, None]
        # row j: (P psi)[b ^ x] = i^{pop(z&x)} (-1)^{pop(b&z)} psi[b], so (P psi)[a] uses b = a ^ x
        b = idx[None, :] ^ x
        sign = 1 - 2 * (np.bitwise_count(b & z).astype(np.int8) & 1)
        ph = _I_POW[np.bitwise_count(z & x).astype(np.int64) % 4]
        yield ph * sign * psi0[b.astype(np.int64)]


def orbit_basis(basis: BurnsideBasis, psi0: np.ndarray, tol: float = DEFAULT_RANK_TOL, chunk: int = _CHUNK) -> ReductionMap:
    """Orthonormal basis of ``span{B_j psi0}``.

    The span is seeded with ``psi0`` and orbit vectors are admitted greedily in
    basis order when their residual exceeds ``tol`` times the largest orbit
    vector norm.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (basis.dim,):
        raise ValueError(f"state of shape {psi0.shape} does not match dimension {basis.dim}")
    nrm = np.linalg.norm(psi0)
    if nrm == 0:
        raise ValueError("zero initial state")
    if basis.mode == "dense":
        scale = max(np.linalg.norm(b, 2) for b in basis.elements) * nrm
    else:
        scale = nrm
    span = SpanBuilder(basis.dim, complex)
    span.extend(psi0 / nrm, 0.0)
    selected: list[int] = []
    start = 0
    for rows in _orbit_chunks(basis, psi0, chunk):
        if span.k == basis.dim:
            break
        selected.extend(start + i for i in span.extend(rows, tol * scale))
        start += rows.shape[0]
    phi = span.basis.T.copy()
    return ReductionMap(phi, "burnside", tuple(selected), basis.size)


# --- Pauli expectations and the Gramian route -------------------------------------


def _label_masks(labels: str) -> tuple[int, int, int, int, int]:
    labels = normalize_product_labels(labels)
    n = len(labels)
    zsites = xsites = ones = minus = 0
    for j, c in enumerate(labels):
        bit = 1 << (n - 1 - j)
        if c in "01":
            zsites |= bit
            if c == "1":
                ones |= bit
        else:
            xsites |= bit
            if c == "-":
                minus |= bit
    return n, zsites, xsites, ones, minus


def pauli_expectation(p: BinaryPauli, labels: str) -> complex:
    """``<psi|p|psi>`` for a product state of single-site labels 0, 1, +, -.

    Sites in 0/1 only see the Z part and sites in +/- only the X part; any
    other single-site factor has zero expectation.
    """
    n, zsites, xsites, ones, minus = _label_masks(labels)
    if n != p.n:
        raise ValueError(f"{n}-site state for a {p.n}-site Pauli")
    if p.x & zsites or p.z & xsites:
        return 0j
    sign = (bin(p.z & ones).count("1") + bin(p.x & minus).count("1")) % 2
    return complex(_I_POW[p.phase % 4] * (1 - 2 * sign))


def pauli_expectations(n: int, keys: np.ndarray, phases: np.ndarray | int, labels: str) -> np.ndarray:
    """Vectorised :func:`pauli_expectation` over packed keys and phase exponents."""
    m, zsites, xsites, ones, minus = _label_masks(labels)
    if m != n:
        raise ValueError(f"{m}-site state for {n}-site Paulis")
    keys = np.asarray(keys, dtype=np.uint64)
    z = keys >> np.uint64(n)
    x = keys & np.uint64((1 << n) - 1)
    dead = ((x & np.uint64(zsites)) | (z & np.uint64(xsites))) != 0
    sign = (np.bitwise_count(z & np.uint64(ones)) + np.bitwise_count(x & np.uint64(minus))).astype(np.int64) & 1
    val = _I_POW[np.asarray(phases, dtype=np.int64) % 4] * (1 - 2 * sign)
    return np.where(dead, 0, val)


def pauli_products(n: int, ka, pa, kb, pb) -> tuple[np.ndarray, np.ndarray]:
    """Broadcast products of packed Paulis: returns (keys, phase exponents)."""
    ka = np.asarray(ka, dtype=np.uint64)
    kb = np.asarray(kb, dtype=np.uint64)
    sh = np.uint64(n)
    lo = np.uint64((1 << n) - 1)
    za, xa, zb, xb = ka >> sh, ka & lo, kb >> sh, kb & lo
    kr = ka ^ kb
    zr, xr = kr >> sh, kr & lo
    pc = lambda v: np.bitwise_count(v).astype(np.int64)  # noqa: E731
    ph = (np.asarray(pa, dtype=np.int64) + np.asarray(pb, dtype=np.int64)
          + pc(za & xa) + pc(zb & xb) + 2 * pc(za & xb) - pc(zr & xr)) % 4
    return kr, ph


def _gram_block(n: int, ka: np.ndarray, kb: np.ndarray, labels: str) -> np.ndarray:
    """``G[a, b] = <psi| B_a^dagger B_b |psi>`` for Hermitian Pauli keys (phase 0)."""
    k, ph = pauli_products(n, ka[:, None], 0, kb[None, :], 0)
    return pauli_expectations(n, k, ph, labels)


def materialize(n: int, keys: Sequence[int], labels: str) -> np.ndarray:
    """Columns ``B_k psi`` for the given Pauli keys (the only place d-vectors appear)."""
    psi = product_state(labels)
    basis = BurnsideBasis("pauli", 1 << n, keys=np.asarray(keys, dtype=np.uint64), n=n)
    return next(_orbit_chunks(basis, psi, max(1, len(keys)))).T


def _flip_pattern(n: int, keys: np.ndarray, zsites: int, xsites: int) -> np.ndarray:
    """Sites whose single-site state a Pauli flips (X part on 0/1 sites, Z part on +/- sites)."""
    z = keys >> np.uint64(n)
    x = keys & np.uint64((1 << n) - 1)
    return (x & np.uint64(zsites)) | (z & np.uint64(xsites))


class _FlipClass:
    """Selected keys sharing one flip pattern and the Cholesky factor of their Gramian."""

    def __init__(self, key: int, diag: float):
        self.keys = [key]
        self.lo = np.array([[np.sqrt(diag)]], dtype=complex)

    def schur(self, n: int, key: int, diag: float, labels: str) -> tuple[float, np.ndarray]:
        col = _gram_block(n, np.asarray(self.keys, dtype=np.uint64), np.array([key], dtype=np.uint64), labels)[:, 0]
        y = solve_triangular(self.lo, col, lower=True, check_finite=False)
        return diag - float(np.vdot(y, y).real), y

    def admit(self, key: int, y: np.ndarray, sc: float):
        k = len(self.keys)
        lo = np.zeros((k + 1, k + 1), dtype=complex)
        lo[:k, :k] = self.lo
        lo[k, :k] = y.conj()
        lo[k, k] = np.sqrt(sc)
        self.lo = lo
        self.keys.append(key)


def gramian_select(
    basis: BurnsideBasis, labels: str, tol: float = GRAM_DET_TOL, chunk: int = 1 << 14
) -> ReductionMap:
    """Orbit basis of a product state selected from Pauli expectations alone.

    Candidates ``B_l psi`` are taken in basis order.  Writing ``S`` for the
    selected set, ``l`` is admitted when ``det G_{S+l} > tol * det G_S``, i.e.
    when the Schur complement of the Gramian ``G = [<B_k psi|B_l psi>]`` exceeds
    ``tol``.  ``<B_k B_l>`` vanishes unless ``B_k`` and ``B_l`` flip the same
    sites, so ``G`` is block diagonal over flip patterns and each Schur
    complement only involves the selected keys sharing the candidate's pattern.
    """
    if basis.mode != "pauli":
        raise ValueError("gramian_select needs a Pauli-mode Burnside basis")
    n = basis.n
    m, zsites, xsites, _, _ = _label_masks(labels)
    if m != n:
        raise ValueError(f"product state must have {n} sites")
    keys = np.asarray(basis.keys, dtype=np.uint64)
    d = 1 << n
    classes: dict[int, _FlipClass] = {}
    taken: list[int] = []
    # <psi|I|psi>: the Gramian diagonal, identical for every Hermitian Pauli
    diag = float(pauli_expectations(n, np.zeros(1, dtype=np.uint64), 0, labels)[0].real)

    def offer(pos: int, pattern: int):
        key = int(keys[pos])
        cls = classes.get(pattern)
        if cls is None:
            if diag > tol:
                classes[pattern] = _FlipClass(key, diag)
                taken.append(pos)
            return
        sc, y = cls.schur(n, key, diag, labels)
        if sc > tol:
            cls.admit(key, y, sc)
            taken.append(pos)

    # flip classes are independent blocks, so each class sees its candidates in
    # basis order and the admitted positions are sorted back at the end
    for s in range(0, len(keys), chunk):
        if len(taken) == d:
            break
        block = keys[s : s + chunk]
        pats = _flip_pattern(n, block, zsites, xsites)
        uniq, first = np.unique(pats, return_index=True)
        fresh = [i for p, i in zip(uniq.tolist(), first.tolist()) if p not in classes]
        for i in fresh:
            offer(s + i, int(pats[i]))
        rest = np.ones(len(block), dtype=bool)
        rest[fresh] = False
        plist = pats.tolist()
        single = np.array([p in classes and len(classes[p].keys) == 1 for p in plist], dtype=bool) & rest
        if single.any():
            rep = np.array([classes[p].keys[0] for p, f in zip(plist, single) if f], dtype=np.uint64)
            g = _pair_gram(n, rep, block[single], labels)
            rest[np.flatnonzero(single)[diag - np.abs(g) ** 2 / diag <= tol]] = False
        for j in np.flatnonzero(rest):
            if len(taken) == d:
                break
            offer(s + int(j), int(pats[j]))
    taken.sort()
    sel = [int(keys[i]) for i in taken]
    phi = orthonormal_columns(materialize(n, sel, labels).T)
    logger.debug("gramian selection kept %d of %d orbit vectors", len(sel), len(keys))
    return ReductionMap(phi, "gramian", tuple(sel), basis.size)


def _pair_gram(n: int, ka: np.ndarray, kb: np.ndarray, labels: str) -> np.ndarray:
    k, ph = pauli_products(n, ka, 0, kb, 0)
    return pauli_expectations(n, k, ph, labels)


# --- reduced models ---------------------------------------------------------------


def reduced_model(model: HamiltonianModel, rmap: ReductionMap, psi0: np.ndarray) -> ReducedModel:
    """``hat H_k = Phi^dagger H_k Phi`` for every term (H0 included) and ``v0 = Phi^dagger psi0``."""
    phi = rmap.phi
    if phi.shape[0] != model.dim:
        raise ValueError("reduction map and model dimensions differ")
    proj = lambda h: phi.conj().T @ h @ phi  # noqa: E731
    h0 = proj(model.dense_h0) if model.h0 is not None else None
    terms = tuple(proj(t) for t in model.dense_terms)
    return ReducedModel(h0, terms, phi.conj().T @ np.asarray(psi0, dtype=complex), model.labels)


def _pauli_sum_matrix(n: int, sel: np.ndarray, term: PauliSum, labels: str) -> np.ndarray:
    """``K[k, l] = <psi| B_k term B_l |psi>``."""
    out = np.zeros((len(sel), len(sel)), dtype=complex)
    for c, p in term.terms:
        k1, p1 = pauli_products(n, sel[:, None], 0, np.uint64(p.key), p.phase)
        k2, p2 = pauli_products(n, k1, p1, sel[None, :], 0)
        out += c * pauli_expectations(n, k2, p2, labels)
    return out


def reduced_model_pauli(model: HamiltonianModel, keys: Sequence[int], labels: str) -> ReducedModel:
    """Reduced model in the orthonormalised orbit basis from Pauli expectations alone.

    With ``G = R^dagger R`` (Cholesky) and ``K_i[k, l] = <B_k H_i B_l>``,
    ``hat H_i = R^{-dagger} K_i R^{-1}`` and ``v0 = R^{-dagger} [<B_k>]``.  This
    is the same basis :func:`gramian_select` produces for ``keys``.
    """
    if not model.is_pauli:
        raise ModelError("reduced_model_pauli needs a Pauli-typed model")
    n = model.n
    sel = np.asarray(keys, dtype=np.uint64)
    g = _gram_block(n, sel, sel, labels)
    lo = np.linalg.cholesky(g)  # g = lo lo^dagger, R = lo^dagger

    def sandwich(k: np.ndarray) -> np.ndarray:
        a = solve_triangular(lo, k, lower=True)
        return solve_triangular(lo, a.conj().T, lower=True).conj().T

    h0 = sandwich(_pauli_sum_matrix(n, sel, model.h0, labels)) if model.h0 is not None else None
    terms = tuple(sandwich(_pauli_sum_matrix(n, sel, t, labels)) for t in model.terms)
    v0 = solve_triangular(lo, pauli_expectations(n, sel, 0, labels).conj(), lower=True)
    return ReducedModel(h0, terms, v0, model.labels)


# --- block-dimension predictor ----------------------------------------------------


@dataclass(frozen=True)
class BlockSpec:
    """Blocks ``Mat_{q_k} (x) 1_{j_k}`` of a block-diagonal algebra, as ``(q_k, j_k)`` pairs.

    Block ``k`` acts as ``kron(eye(j_k), A)`` on its ``j_k * q_k`` coordinates.
    """

    blocks: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        blocks = tuple((int(q), int(j)) for q, j in self.blocks)
        if not blocks or any(q < 1 or j < 1 for q, j in blocks):
            raise ValueError("block sizes must be positive integers")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return sum(q * j for q, j in self.blocks)

    def embed(self, mats: Sequence[np.ndarray]) -> np.ndarray:
        """Block-diagonal operator with ``kron(eye(j_k), mats[k])`` on block ``k``."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        o = 0
        for (q, j), a in zip(self.blocks, mats, strict=True):
            if np.shape(a) != (q, q):
                raise ValueError(f"block needs a {q}x{q} matrix")
            out[o : o + q * j, o : o + q * j] = np.kron(np.eye(j), a)
            o += q * j
        return out


def predicted_orbit_dim(blocks: BlockSpec, nu: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> int:
    """``sum_k q_k rank(M_k)`` where ``M_k`` has the ``j_k`` length-``q_k`` pieces of ``nu`` as columns."""
    nu = np.asarray(nu)
    if nu.shape != (blocks.dim,):
        raise ValueError(f"vector of length {nu.shape} for a {blocks.dim}-dimensional block spec")
    total = 0
    o = 0
    scale = max(float(np.linalg.norm(nu)), 1.0)
    for q, j in blocks.blocks:
        m = nu[o : o + q * j].reshape(j, q).T
        o += q * j
        total += q * int(np.linalg.matrix_rank(m, tol=tol * scale))
    return total


def check_reduced_model(rm: ReducedModel, tol: float = ORTHO_TOL) -> None:
    """Raise if a projected term is not Hermitian or ``v0`` is not a unit vector."""
    mats = ([rm.h0] if rm.h0 is not None else []) + list(rm.terms)
    for m in mats:
        if not is_hermitian(m, tol):
            raise ValueError("projected term is not Hermitian")
    if abs(np.linalg.norm(rm.v0) - 1) > CONTAIN_TOL:
        raise ValueError("projected initial state is not normalised")

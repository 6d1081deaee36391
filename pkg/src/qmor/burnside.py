"""Burnside basis of the algebra generated by a model's coefficient operators.

The dense route multiplies monomials on the right by the coefficient
operators, degree by degree, keeping a monomial only if it leaves the span of
those already kept.  The Pauli route works on binary vectors: for a pure Pauli
model the algebra is spanned by the group the support Paulis generate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import SpanBuilder, numeric_rank
from .model import HamiltonianModel, ModelError
from .pauli import (
    GRAYCODE_MAX_GENERATORS,
    BinaryPauli,
    GF2Matrix,
    gf2_rank,
    group_keys_graycode,
    group_keys_layered,
    pauli_sufficiency_count,
    pauli_sufficiency_rank,
)

logger = logging.getLogger(__name__)

SPAN_TOL = 1e-9
MAX_DENSE_DIM = 256
MAX_PAZ_MONOMIALS = 50_000


class BasisSizeError(RuntimeError):
    pass


def paz_bound(d: int) -> int:
    """Upper bound ceil((d^2 + 2) / 3) on the word length needed to span the algebra."""
    return -(-(d * d + 2) // 3)


@dataclass
class BurnsideBasis:
    """Linearly independent monomials spanning the generated algebra.

    ``mode == "dense"``: ``elements`` holds unit-Frobenius-norm matrices, the
    identity first.  ``mode == "pauli"``: ``keys`` holds sorted packed binary
    words (identity = 0 first) of the Paulis spanning the algebra.
    """

    mode: str
    dim: int
    elements: list[np.ndarray] | None = None
    keys: np.ndarray | None = None
    n: int | None = None
    layers_used: int | None = None
    strategy: str = ""

    @property
    def size(self) -> int:
        return len(self.elements) if self.mode == "dense" else len(self.keys)

    def __len__(self) -> int:
        return self.size

    @property
    def paulis(self) -> list[BinaryPauli]:
        if self.mode != "pauli":
            raise ValueError("only a Pauli-mode basis has Pauli elements")
        return [BinaryPauli.from_key(self.n, int(k)) for k in self.keys]

    def dense_elements(self) -> list[np.ndarray]:
        if self.mode == "dense":
            return self.elements
        return [p.dense() for p in self.paulis]

    def apply_all(self, psi: np.ndarray) -> np.ndarray:
        """Rows ``B_j psi`` in basis order."""
        if self.mode == "dense":
            return np.array([b @ psi for b in self.elements])
        return np.array([p.apply(psi) for p in self.paulis])


def _generators(coeffs: Sequence[np.ndarray]) -> tuple[list[np.ndarray], int]:
    coeffs = [np.asarray(c) for c in coeffs]
    if not coeffs:
        raise ValueError("empty coefficient set")
    d = coeffs[0].shape[0]
    for c in coeffs:
        if c.ndim != 2 or c.shape != (d, d):
            raise ValueError(f"coefficient operators must all be {d}x{d} square matrices")
    gens = [c for c in coeffs if np.abs(c).max() > 0]
    if all(np.abs(g.imag).max() == 0 for g in gens if np.iscomplexobj(g)):
        gens = [np.ascontiguousarray(g.real, dtype=float) for g in gens]
    else:
        gens = [g.astype(complex) for g in gens]
    return gens, d


def _span_check(gens, d, tol):
    dtype = gens[0].dtype
    eye = np.eye(d, dtype=dtype) / math.sqrt(d)
    span = SpanBuilder(d * d, dtype)
    span.extend(eye.ravel(), tol)
    elements = [eye]
    frontier = [eye]
    layers = 0
    while frontier and span.k < d * d:
        cands = []
        for w in frontier:
            for g in gens:
                m = w @ g
                nrm = np.linalg.norm(m)
                if nrm > 0:
                    cands.append(m / nrm)
        if not cands:
            break
        taken = span.extend(np.array([c.ravel() for c in cands]), tol)
        admitted = [cands[i] for i in taken]
        if admitted:
            layers += 1
            elements.extend(admitted)
        frontier = admitted
    return elements, layers


def _monomial_key(m: np.ndarray) -> bytes:
    r = np.round(m, 10) + 0.0
    return r.tobytes()


def _paz_layers(gens, d, tol, max_monomials):
    k = paz_bound(d)
    eye = np.eye(d, dtype=gens[0].dtype) / math.sqrt(d)
    layer = {_monomial_key(eye): (0, eye)}
    monomials = [eye]
    seen_sets = {frozenset([_monomial_key(eye)])}
    layers = 0
    for degree in range(1, k + 1):
        new = {}
        for w in monomials:
            for g in gens:
                m = w @ g
                nrm = np.linalg.norm(m)
                if nrm == 0:
                    continue
                m = m / nrm
                new.setdefault(_monomial_key(m), m)
        if not new:
            break
        key_set = frozenset(new)
        for key, m in new.items():
            layer.setdefault(key, (degree, m))
        if len(layer) > max_monomials:
            raise BasisSizeError(
                f"Paz-bound layering produced more than {max_monomials} monomials at degree {degree}"
            )
        layers = degree
        if key_set in seen_sets:
            # the monomial sets now cycle; later layers repeat earlier ones
            break
        seen_sets.add(key_set)
        monomials = list(new.values())
    ordered = sorted(layer.values(), key=lambda t: t[0])
    vecs = np.array([m.ravel() for _, m in ordered])
    _, idx = numeric_rank(vecs, tol)
    kept = [ordered[i] for i in idx]
    return [m for _, m in kept], max(deg for deg, _ in kept), layers


def burnside_basis_dense(
    coeffs: Sequence[np.ndarray],
    tol: float = SPAN_TOL,
    strategy: str = "span-check",
    max_monomials: int = MAX_PAZ_MONOMIALS,
) -> BurnsideBasis:
    """Basis of the algebra generated by ``coeffs`` (identity included).

    ``strategy="span-check"`` admits a degree-k monomial only if it leaves the
    current span and stops at the first layer adding nothing.
    ``strategy="paz-bound"`` forms every layer up to the Paz bound (stopping
    early only once the layer sets start to cycle) and then filters a maximal
    independent subset.
    """
    gens, d = _generators(coeffs)
    if not gens:
        eye = np.eye(d) / math.sqrt(d)
        return BurnsideBasis("dense", d, elements=[eye], layers_used=0, strategy=strategy)
    if strategy == "span-check":
        elements, layers = _span_check(gens, d, tol)
    elif strategy == "paz-bound":
        elements, layers, built = _paz_layers(gens, d, tol, max_monomials)
        logger.debug("paz-bound: built %d layers, basis needs %d", built, layers)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return BurnsideBasis("dense", d, elements=elements, layers_used=layers, strategy=strategy)


def burnside_basis_pauli(
    model: HamiltonianModel,
    algorithm: str = "graycode",
    max_generators: int = GRAYCODE_MAX_GENERATORS,
) -> BurnsideBasis:
    """Basis of a pure Pauli model: the group generated by its support Paulis.

    More than ``max_generators`` support Paulis falls back to the layered
    closure regardless of ``algorithm``.
    """
    if not model.is_pure_pauli:
        raise ModelError("burnside_basis_pauli needs a pure Pauli model; over-parameterize it first")
    keys = [p.key for p in model.support_paulis()]
    layers = None
    if algorithm == "graycode" and len(keys) <= max_generators:
        words = group_keys_graycode(keys, max_generators)
    elif algorithm in ("graycode", "layered"):
        words, layers = group_keys_layered(keys)
        algorithm = "layered"
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return BurnsideBasis("pauli", model.dim, keys=words, n=model.n, layers_used=layers, strategy=algorithm)


@dataclass(frozen=True)
class CertificateReport:
    reducible: bool | None
    dim_algebra: int | None
    dim_full: int
    method: str
    layers_used: int | None = None

    def to_dict(self) -> dict:
        return {
            "reducible": self.reducible,
            "dim_algebra": self.dim_algebra,
            "dim_full": self.dim_full,
            "method": self.method,
            "layers_used": self.layers_used,
        }


def certify(
    model: HamiltonianModel,
    method: str = "auto",
    tol: float = SPAN_TOL,
    max_dense_dim: int = MAX_DENSE_DIM,
) -> CertificateReport:
    """Decide whether the model leaves a nontrivial proper subspace invariant.

    ``auto`` tries the Pauli term count, then the GF(2) rank (conclusive
    both ways for pure Pauli models), then the full dense basis when
    ``dim <= max_dense_dim``.  ``reducible is None`` means undecided.
    """
    d = model.dim
    full = d * d
    if method not in ("auto", "pauli", "burnside"):
        raise ValueError(f"unknown certification method {method!r}")

    if method in ("auto", "pauli") and model.is_pauli:
        n = model.n
        support = model.support_paulis()
        rank = gf2_rank(GF2Matrix.from_paulis(support)) if support else 0
        dim_alg = 2**rank if model.is_pure_pauli else None
        if pauli_sufficiency_count(support, n):
            return CertificateReport(True, dim_alg, full, "pauli-count")
        if pauli_sufficiency_rank(support, n):
            return CertificateReport(True, dim_alg, full, "pauli-rank")
        if model.is_pure_pauli:
            return CertificateReport(False, dim_alg, full, "pauli-rank")
        if method == "pauli":
            return CertificateReport(None, None, full, "pauli-rank")
    elif method == "pauli":
        raise ModelError("the Pauli certificates need a Pauli-typed model")

    if method == "burnside" or d <= max_dense_dim:
        basis = burnside_basis_dense(model.coeff_set(), tol=tol)
        return CertificateReport(basis.size < full, basis.size, full, "burnside", basis.layers_used)
    return CertificateReport(None, None, full, "none")

"""Parameterized Hamiltonian models ``H(lam) = H0 + sum_k lam_k H_k``."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .linalg import HERMITIAN_TOL, is_hermitian
from .pauli import BinaryPauli, PauliError, encode_pauli, single_site

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-8

BUILTIN_MODELS = ("collective", "tfim", "random-tfim")


class ModelError(ValueError):
    pass


class NearDegeneracyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PauliSum:
    """Real linear combination of distinct, non-identity Paulis."""

    n: int
    terms: tuple[tuple[float, BinaryPauli], ...] = ()

    def __post_init__(self):
        seen = set()
        for c, p in self.terms:
            if p.n != self.n:
                raise ModelError(f"Pauli {p} acts on {p.n} spins, expected {self.n}")
            if c == 0:
                raise ModelError("zero coefficient stored in PauliSum")
            if p.is_identity:
                raise ModelError("identity term not allowed (terms must be traceless)")
            if p.phase:
                raise ModelError("stored Paulis must carry phase 0")
            if p.key in seen:
                raise ModelError(f"duplicate Pauli {p.label}")
            seen.add(p.key)

    @classmethod
    def build(cls, n: int, items: Iterable[tuple[float, BinaryPauli | str]]) -> "PauliSum":
        """Merge repeated Paulis, fold signs, and drop cancelled terms."""
        acc: dict[int, float] = {}
        for c, p in items:
            if isinstance(p, str):
                p = encode_pauli(p)
            if p.n != n:
                raise ModelError(f"Pauli {p.label} acts on {p.n} spins, expected {n}")
            if p.phase == 2:
                c = -c
            elif p.phase:
                raise ModelError(f"non-Hermitian Pauli term {p}")
            if p.is_identity:
                raise ModelError("identity term not allowed (terms must be traceless)")
            acc[p.key] = acc.get(p.key, 0.0) + float(c)
        terms = tuple(
            (c, BinaryPauli.from_key(n, k)) for k, c in acc.items() if c != 0.0
        )
        return cls(n, terms)

    @property
    def paulis(self) -> list[BinaryPauli]:
        return [p for _, p in self.terms]

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def dense(self) -> np.ndarray:
        d = 1 << self.n
        out = np.zeros((d, d), dtype=complex)
        for c, p in self.terms:
            out += c * p.dense()
        return out

    def apply(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(vec.shape, dtype=complex)
        for c, p in self.terms:
            out += c * p.apply(vec)
        return out

    def to_list(self) -> list[dict]:
        return [{"coeff": c, "pauli": p.label} for c, p in self.terms]

    @classmethod
    def from_list(cls, n: int, items: Sequence[dict]) -> "PauliSum":
        try:
            return cls.build(n, [(float(it["coeff"]), it["pauli"]) for it in items])
        except (KeyError, TypeError, PauliError) as exc:
            raise ModelError(f"malformed Pauli term list: {exc}") from exc


Term = Union[PauliSum, np.ndarray]


def _dense(term: Term) -> np.ndarray:
    return term.dense() if isinstance(term, PauliSum) else np.asarray(term, dtype=complex)


@dataclass(eq=False)
class HamiltonianModel:
    """Affine family of Hermitian operators on a ``dim``-dimensional space.

    ``h0`` may be ``None`` for models without a free term.  Terms are either
    :class:`PauliSum` objects or dense Hermitian arrays; dense realisations are
    built lazily and cached.
    """

    dim: int
    h0: Term | None
    terms: tuple[Term, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.terms = tuple(self.terms)
        if not self.labels:
            self.labels = tuple(f"lambda{k + 1}" for k in range(len(self.terms)))
        self.labels = tuple(self.labels)
        if len(self.labels) != len(self.terms):
            raise ModelError("one label per parameter is required")
        if len(set(self.labels)) != len(self.labels):
            raise ModelError("parameter labels must be distinct")
        if isinstance(self.h0, PauliSum) and self.h0.is_zero:
            self.h0 = None
        for t in self.all_terms:
            if isinstance(t, PauliSum):
                if (1 << t.n) != self.dim:
                    raise ModelError(f"Pauli term on {t.n} spins in a model of dimension {self.dim}")
            else:
                t = np.asarray(t)
                if t.shape != (self.dim, self.dim):
                    raise ModelError(f"dense term of shape {t.shape}, expected {(self.dim, self.dim)}")
                if not is_hermitian(t, HERMITIAN_TOL):
                    raise ModelError("dense term is not Hermitian")
                if abs(np.trace(t)) > HERMITIAN_TOL * max(1.0, np.abs(t).max()) * self.dim:
                    raise ModelError("dense term is not traceless")

    @property
    def all_terms(self) -> tuple[Term, ...]:
        return ((self.h0,) if self.h0 is not None else ()) + self.terms

    @property
    def num_params(self) -> int:
        return len(self.terms)

    @property
    def is_pauli(self) -> bool:
        return all(isinstance(t, PauliSum) for t in self.all_terms)

    @property
    def n(self) -> int:
        if not self.is_pauli:
            raise ModelError("spin count is only defined for Pauli-typed models")
        return self.dim.bit_length() - 1

    @property
    def is_pure_pauli(self) -> bool:
        """Every parameter controls exactly one Pauli and no Pauli repeats."""
        if not self.is_pauli or self.h0 is not None:
            return False
        keys = []
        for t in self.terms:
            if len(t.terms) != 1:
                return False
            keys.append(t.terms[0][1].key)
        return len(set(keys)) == len(keys)

    @cached_property
    def dense_h0(self) -> np.ndarray:
        if self.h0 is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return _dense(self.h0)

    @cached_property
    def dense_terms(self) -> tuple[np.ndarray, ...]:
        return tuple(_dense(t) for t in self.terms)

    def parameter_vector(self, lam) -> np.ndarray:
        """Accept a sequence or a ``{label: value}`` mapping (missing labels are 0)."""
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
        h = self.dense_h0.copy()
        for c, t in zip(lam, self.dense_terms):
            if c:
                h += c * t
        return h

    def coeff_set(self) -> list[np.ndarray]:
        """``[H0, H1, ..., HM]`` as dense matrices, omitting an absent H0."""
        out = [self.dense_h0] if self.h0 is not None else []
        return out + list(self.dense_terms)

    def support_paulis(self) -> list[BinaryPauli]:
        """Distinct Paulis carrying a nonzero coefficient in some term."""
        if not self.is_pauli:
            raise ModelError("support_paulis requires a Pauli-typed model")
        keys = {p.key for t in self.all_terms for p in t.paulis}
        return [BinaryPauli.from_key(self.n, k) for k in sorted(keys)]

    def over_parameterize(self) -> "HamiltonianModel":
        """Pure Pauli model with one free parameter per support Pauli."""
        if self.is_pure_pauli:
            return self
        n = self.n
        paulis = self.support_paulis()
        terms = tuple(PauliSum(n, ((1.0, p),)) for p in paulis)
        return HamiltonianModel(self.dim, None, terms, tuple(p.label for p in paulis))

    def to_dict(self) -> dict:
        if not self.is_pauli:
            raise ModelError("only Pauli-typed models have a JSON form")
        return {
            "n": self.n,
            "h0": self.h0.to_list() if self.h0 is not None else [],
            "terms": [{"label": lb, "paulis": t.to_list()} for lb, t in zip(self.labels, self.terms)],
        }

    @classmethod
    def from_dict(cls, spec: dict) -> "HamiltonianModel":
        try:
            n = int(spec["n"])
            if n < 1:
                raise ModelError("n must be positive")
            h0 = PauliSum.from_list(n, spec.get("h0", []))
            terms, labels = [], []
            for k, entry in enumerate(spec["terms"]):
                terms.append(PauliSum.from_list(n, entry["paulis"]))
                labels.append(str(entry.get("label", f"lambda{k + 1}")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model spec: {exc}") from exc
        return cls(1 << n, h0, tuple(terms), tuple(labels))

    def __eq__(self, other) -> bool:
        if not isinstance(other, HamiltonianModel):
            return NotImplemented
        if self.dim != other.dim or self.labels != other.labels or len(self.terms) != len(other.terms):
            return False
        pairs = list(zip(self.terms, other.terms))
        if (self.h0 is None) != (other.h0 is None):
            return False
        if self.h0 is not None:
            pairs.append((self.h0, other.h0))
        for a, b in pairs:
            if isinstance(a, PauliSum) and isinstance(b, PauliSum):
                if dict((p.key, c) for c, p in a.terms) != dict((p.key, c) for c, p in b.terms):
                    return False
            elif not np.array_equal(_dense(a), _dense(b)):
                return False
        return True

    __hash__ = None


# --- built-in models ------------------------------------------------------------


def _collective(n: int, kind: str) -> PauliSum:
    return PauliSum.build(n, [(1.0, single_site(n, j, kind)) for j in range(n)])


def collective_rotation(n: int) -> HamiltonianModel:
    """``lx sum X_j + ly sum Y_j + lz sum Z_j``; parameters ordered (x, y, z)."""
    terms = tuple(_collective(n, k) for k in "XYZ")
    return HamiltonianModel(1 << n, None, terms, ("lambda_x", "lambda_y", "lambda_z"))


def _zz(n: int, i: int, j: int) -> BinaryPauli:
    chars = ["I"] * n
    chars[i] = chars[j] = "Z"
    return encode_pauli("".join(chars))


def tfim_periodic(n: int) -> HamiltonianModel:
    """``-B sum X_j - J (sum_j Z_j Z_{j+1} + Z_n Z_1)``; parameters (B, J)."""
    if n < 2:
        raise ModelError("the periodic Ising ring needs n >= 2")
    field_term = PauliSum.build(n, [(-1.0, single_site(n, j, "X")) for j in range(n)])
    bonds = [(-1.0, _zz(n, j, j + 1)) for j in range(n - 1)] + [(-1.0, _zz(n, n - 1, 0))]
    return HamiltonianModel(1 << n, None, (field_term, PauliSum.build(n, bonds)), ("B", "J"))


def random_tfim_open(n: int) -> HamiltonianModel:
    """``sum B_j X_j + sum J_j Z_j Z_{j+1}`` with open ends; 2n - 1 parameters."""
    terms = [PauliSum(n, ((1.0, single_site(n, j, "X")),)) for j in range(n)]
    terms += [PauliSum(n, ((1.0, _zz(n, j, j + 1)),)) for j in range(n - 1)]
    labels = [f"B{j + 1}" for j in range(n)] + [f"J{j + 1}" for j in range(n - 1)]
    return HamiltonianModel(1 << n, None, tuple(terms), tuple(labels))


def builtin_model(name: str, n: int) -> HamiltonianModel:
    try:
        factory = {"collective": collective_rotation, "tfim": tfim_periodic, "random-tfim": random_tfim_open}[name]
    except KeyError:
        raise ModelError(f"unknown builtin model {name!r}; choose from {BUILTIN_MODELS}") from None
    return factory(n)


def total_pauli(n: int, kind: str) -> PauliSum:
    """``sum_j sigma^kind_j``, e.g. the net transverse magnetization for ``kind="X"``."""
    return _collective(n, kind)


# --- initial states ---------------------------------------------------------------

_SITE_STATES = {
    "0": np.array([1.0, 0.0]),
    "1": np.array([0.0, 1.0]),
    "+": np.array([1.0, 1.0]) / np.sqrt(2),
    "-": np.array([1.0, -1.0]) / np.sqrt(2),
}


def normalize_product_labels(labels: str) -> str:
    labels = labels.replace("−", "-")
    bad = [c for c in labels if c not in _SITE_STATES]
    if not labels or bad:
        raise ModelError(f"product state labels must be drawn from 0, 1, +, -; got {labels!r}")
    return labels


def product_state(labels: str) -> np.ndarray:
    """Tensor product of single-site states, site 1 left-most."""
    labels = normalize_product_labels(labels)
    out = np.ones(1, dtype=complex)
    for c in labels:
        out = np.kron(out, _SITE_STATES[c])
    return out


def _first_support(v: np.ndarray) -> int:
    mags = np.abs(v)
    return int(np.argmax(mags > 1e-8 * mags.max()))


def fix_phase(v: np.ndarray) -> np.ndarray:
    i = _first_support(v)
    return v * (abs(v[i]) / v[i])


def ground_manifold(model: HamiltonianModel, lam, degeneracy_tol: float = DEGENERACY_TOL):
    """Eigenvalues and orthonormal eigenvectors within ``degeneracy_tol`` of the minimum."""
    w, u = np.linalg.eigh(model.evaluate(lam))
    k = int(np.searchsorted(w, w[0] + degeneracy_tol, side="right"))
    return w[:k], u[:, :k]


def ground_state(model: HamiltonianModel, lam, degeneracy_tol: float = DEGENERACY_TOL) -> np.ndarray:
    """Lowest eigenvector of ``H(lam)`` with a deterministic tie-break.

    When several eigenvalues lie within ``degeneracy_tol`` of the minimum the
    returned vector is the unit vector of that eigenspace with the largest
    modulus on the first basis state the eigenspace touches (the normalised
    projection of that basis state).  The global phase makes this amplitude
    real and positive.  A :class:`NearDegeneracyWarning` is emitted.
    """
    w, v = ground_manifold(model, lam, degeneracy_tol)
    if v.shape[1] == 1:
        return fix_phase(v[:, 0])
    warnings.warn(
        f"ground state is {v.shape[1]}-fold degenerate within {degeneracy_tol:g} "
        f"(spread {w[-1] - w[0]:.3g}); using the first-amplitude tie-break",
        NearDegeneracyWarning,
        stacklevel=2,
    )
    row_norms = np.linalg.norm(v, axis=1)
    i = int(np.argmax(row_norms > 1e-8 * row_norms.max()))
    psi = v @ v[i].conj()
    psi /= np.linalg.norm(psi)
    return fix_phase(psi)


def state_from_spec(spec, model: HamiltonianModel) -> np.ndarray:
    """Build an initial state from its JSON form.

    Accepted forms: ``{"product": "+0+"}``, ``{"ground_state": {"lambda": [...]}}``,
    ``{"amplitudes": [[re, im], ...]}``.
    """
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ModelError(f"state spec must be a single-key object, got {spec!r}")
    (kind, val), = spec.items()
    if kind == "product":
        psi = product_state(val)
    elif kind == "ground_state":
        tol = float(val.get("degeneracy_tol", DEGENERACY_TOL))
        psi = ground_state(model, val["lambda"], tol)
    elif kind == "amplitudes":
        arr = np.asarray(val, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ModelError("amplitudes must be a list of [re, im] pairs")
        psi = arr[:, 0] + 1j * arr[:, 1]
        nrm = np.linalg.norm(psi)
        if nrm == 0:
            raise ModelError("zero state vector")
        if abs(nrm - 1) > 1e-9:
            raise ModelError(f"state is not normalized (norm {nrm:.6g})")
    else:
        raise ModelError(f"unknown state kind {kind!r}")
    if psi.shape[0] != model.dim:
        raise ModelError(f"state of dimension {psi.shape[0]} for a model of dimension {model.dim}")
    return psi

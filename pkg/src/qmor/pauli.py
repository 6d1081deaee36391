"""Binary (symplectic) representation of the n-spin Pauli group.

A Pauli operator on ``n`` spins is stored as two ``n``-bit masks ``z`` and
``x`` plus a power of ``i``.  Per site the canonical matrices are

    (z, x) = (0, 0) -> I,  (0, 1) -> X,  (1, 1) -> Y,  (1, 0) -> Z

and the operator represented is ``i**phase * P1 (x) P2 (x) ... (x) Pn``.
Site 1 is the left-most tensor factor and the left-most label character.
Inside the packed masks site ``j`` (0-based) lives at bit ``n - 1 - j`` so a
mask doubles as a computational-basis index mask.

Products are XORs of the masks; the phase is tracked exactly so that dense
realisations multiply like the matrices they stand for.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

GRAYCODE_MAX_GENERATORS = 30
_GRAY_CHUNK = 1 << 20

_SITE_BITS = {"I": (0, 0), "X": (0, 1), "Y": (1, 1), "Z": (1, 0)}
_BITS_SITE = {v: k for k, v in _SITE_BITS.items()}


class PauliError(ValueError):
    pass


class GroupSizeError(PauliError):
    """Raised when a Gray-code enumeration would exceed the generator cap."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=True)
class BinaryPauli:
    """Phase-tracked Pauli operator in 2n-bit form."""

    n: int
    z: int
    x: int
    phase: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise PauliError(f"spin count must be positive, got {self.n}")
        full = (1 << self.n) - 1
        if self.z & ~full or self.x & ~full or self.z < 0 or self.x < 0:
            raise PauliError(f"bit masks do not fit in {self.n} sites")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n: int) -> "BinaryPauli":
        return cls(n, 0, 0)

    @classmethod
    def from_bits(cls, z_bits: Sequence[int], x_bits: Sequence[int], phase: int = 0) -> "BinaryPauli":
        if len(z_bits) != len(x_bits):
            raise PauliError("z and x bit vectors differ in length")
        n = len(z_bits)
        z = x = 0
        for zb, xb in zip(z_bits, x_bits):
            z = (z << 1) | (int(zb) & 1)
            x = (x << 1) | (int(xb) & 1)
        return cls(n, z, x, phase)

    @classmethod
    def from_key(cls, n: int, key: int, phase: int = 0) -> "BinaryPauli":
        return cls(n, key >> n, key & ((1 << n) - 1), phase)

    @property
    def key(self) -> int:
        """Packed ``(z | x)`` word; used for hashing and canonical ordering."""
        return (self.z << self.n) | self.x

    @property
    def z_bits(self) -> tuple[int, ...]:
        return tuple((self.z >> (self.n - 1 - j)) & 1 for j in range(self.n))

    @property
    def x_bits(self) -> tuple[int, ...]:
        return tuple((self.x >> (self.n - 1 - j)) & 1 for j in range(self.n))

    @property
    def label(self) -> str:
        return "".join(_BITS_SITE[zb, xb] for zb, xb in zip(self.z_bits, self.x_bits))

    @property
    def is_identity(self) -> bool:
        return self.z == 0 and self.x == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def bits(self) -> np.ndarray:
        """The 2n-bit row ``z_bits | x_bits`` as a uint8 array."""
        return np.array(self.z_bits + self.x_bits, dtype=np.uint8)

    def phaseless(self) -> "BinaryPauli":
        return BinaryPauli(self.n, self.z, self.x)

    def to_binary_string(self) -> str:
        return "".join(map(str, self.z_bits)) + "|" + "".join(map(str, self.x_bits))

    def __mul__(self, other: "BinaryPauli") -> "BinaryPauli":
        return pauli_product(self, other)

    def __str__(self) -> str:
        prefix = ("", "i", "-", "-i")[self.phase]
        return prefix + self.label

    def dense(self) -> np.ndarray:
        return pauli_dense(self)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return pauli_apply(self, vec)


def encode_pauli(label: str) -> BinaryPauli:
    """Parse an uppercase label such as ``"XIZ"`` into its binary form."""
    if not label:
        raise PauliError("empty Pauli label")
    z = x = 0
    for pos, ch in enumerate(label):
        try:
            zb, xb = _SITE_BITS[ch]
        except KeyError:
            raise PauliError(f"invalid Pauli character {ch!r} at position {pos}") from None
        z = (z << 1) | zb
        x = (x << 1) | xb
    return BinaryPauli(len(label), z, x)


def decode_pauli(p: BinaryPauli) -> str:
    return p.label


def parse_binary_string(s: str) -> BinaryPauli:
    """Inverse of :meth:`BinaryPauli.to_binary_string` (``"z|x"`` form)."""
    try:
        zs, xs = s.split("|")
    except ValueError:
        raise PauliError(f"expected 'z|x' binary string, got {s!r}") from None
    if len(zs) != len(xs) or not zs or set(zs + xs) - {"0", "1"}:
        raise PauliError(f"malformed binary string {s!r}")
    return BinaryPauli.from_bits([int(c) for c in zs], [int(c) for c in xs])


def single_site(n: int, site: int, kind: str) -> BinaryPauli:
    """Pauli ``kind`` acting on ``site`` (0-based), identity elsewhere."""
    chars = ["I"] * n
    chars[site] = kind
    return encode_pauli("".join(chars))


def _product_phase(n: int, za: int, xa: int, pa: int, zb: int, xb: int, pb: int) -> int:
    # canonical site matrix is i**(z*x) X**x Z**z; moving Z**za past X**xb costs (-1)**(za.xb)
    zr, xr = za ^ zb, xa ^ xb
    e = pa + pb + _popcount(za & xa) + _popcount(zb & xb) + 2 * _popcount(za & xb) - _popcount(zr & xr)
    return e % 4


def pauli_product(a: BinaryPauli, b: BinaryPauli) -> BinaryPauli:
    """Exact matrix product ``a @ b`` in binary form."""
    if a.n != b.n:
        raise PauliError(f"size mismatch: {a.n} vs {b.n} spins")
    phase = _product_phase(a.n, a.z, a.x, a.phase, b.z, b.x, b.phase)
    return BinaryPauli(a.n, a.z ^ b.z, a.x ^ b.x, phase)


def commutes(a: BinaryPauli, b: BinaryPauli) -> bool:
    return (_popcount(a.z & b.x) + _popcount(a.x & b.z)) % 2 == 0


_I_POW = np.array([1, 1j, -1, -1j])


def _column_coefficients(n: int, z: int, x: int, phase: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    sign = np.bitwise_count(idx & np.uint64(z)).astype(np.int64) % 2
    base = _I_POW[(phase + _popcount(z & x)) % 4]
    return base * (1 - 2 * sign)


def pauli_apply(p: BinaryPauli, vec: np.ndarray) -> np.ndarray:
    """``p @ vec`` without forming the 2^n x 2^n matrix."""
    vec = np.asarray(vec)
    d = 1 << p.n
    if vec.shape[0] != d:
        raise PauliError(f"vector of length {vec.shape[0]} does not match {p.n} spins")
    coef = _column_coefficients(p.n, p.z, p.x, p.phase)
    idx = np.arange(d) ^ p.x
    out = np.empty(vec.shape, dtype=complex)
    if vec.ndim == 1:
        out[idx] = coef * vec
    else:
        out[idx] = coef[:, None] * vec
    return out


def pauli_dense(p: BinaryPauli) -> np.ndarray:
    d = 1 << p.n
    m = np.zeros((d, d), dtype=complex)
    cols = np.arange(d)
    m[cols ^ p.x, cols] = _column_coefficients(p.n, p.z, p.x, p.phase)
    return m


# --- GF(2) linear algebra ---------------------------------------------------


@dataclass(frozen=True)
class GF2Matrix:
    """Binary matrix with rows packed into Python ints (most significant bit = column 0)."""

    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self):
        for r in self.rows:
            if r < 0 or r >> self.ncols:
                raise PauliError("row does not fit in the declared column count")

    @classmethod
    def from_paulis(cls, paulis: Iterable[BinaryPauli]) -> "GF2Matrix":
        paulis = list(paulis)
        if not paulis:
            return cls((), 0)
        n = paulis[0].n
        if any(p.n != n for p in paulis):
            raise PauliError("Paulis act on different numbers of spins")
        return cls(tuple(p.key for p in paulis), 2 * n)

    @classmethod
    def from_array(cls, arr) -> "GF2Matrix":
        arr = np.atleast_2d(np.asarray(arr, dtype=np.int64)) & 1
        rows = []
        for row in arr:
            v = 0
            for b in row:
                v = (v << 1) | int(b)
            rows.append(v)
        return cls(tuple(rows), arr.shape[1])

    def to_array(self) -> np.ndarray:
        out = np.zeros((len(self.rows), self.ncols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.ncols):
                out[i, j] = (r >> (self.ncols - 1 - j)) & 1
        return out


def _xor_basis(rows: Iterable[int]) -> dict[int, int]:
    """Reduced rows keyed by their leading bit."""
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            lead = r.bit_length() - 1
            if lead in basis:
                r ^= basis[lead]
            else:
                basis[lead] = r
                break
    return basis


def gf2_rank(m) -> int:
    """Rank over Z2 of a :class:`GF2Matrix`, an iterable of Paulis, or a 0/1 array."""
    if isinstance(m, GF2Matrix):
        rows = m.rows
    elif isinstance(m, np.ndarray):
        rows = GF2Matrix.from_array(m).rows if m.size else ()
    else:
        m = list(m)
        if m and isinstance(m[0], BinaryPauli):
            rows = GF2Matrix.from_paulis(m).rows
        else:
            rows = GF2Matrix.from_array(m).rows if m else ()
    return len(_xor_basis(rows))


# --- group generation --------------------------------------------------------


def _check_generators(generators: Sequence[BinaryPauli]) -> int | None:
    if not generators:
        return None
    n = generators[0].n
    if any(g.n != n for g in generators):
        raise PauliError("generators act on different numbers of spins")
    return n


def group_keys_graycode(keys: Sequence[int], max_generators: int = GRAYCODE_MAX_GENERATORS) -> np.ndarray:
    """Span of packed bit words enumerated along a Gray code.

    Walks ``j = 1 .. 2**l - 1``; between consecutive Gray words exactly one bit
    flips and the matching generator is XOR-ed into the running word.  Returns
    the sorted, duplicate-free words (including 0, the identity).
    """
    ell = len(keys)
    if ell > max_generators:
        raise GroupSizeError(f"{ell} generators exceed the Gray-code cap of {max_generators}")
    gens = np.asarray(keys, dtype=np.uint64)
    found = [np.zeros(1, dtype=np.uint64)]
    acc = np.uint64(0)
    total = 1 << ell
    for start in range(1, total, _GRAY_CHUNK):
        j = np.arange(start, min(start + _GRAY_CHUNK, total), dtype=np.uint64)
        gray_prev = (j - np.uint64(1)) ^ ((j - np.uint64(1)) >> np.uint64(1))
        gray_cur = j ^ (j >> np.uint64(1))
        flip = np.log2((gray_prev ^ gray_cur).astype(np.float64)).astype(np.int64)
        words = np.bitwise_xor.accumulate(gens[flip]) ^ acc
        acc = words[-1]
        found.append(np.unique(words))
    return np.unique(np.concatenate(found))


def group_keys_layered(keys: Sequence[int]) -> tuple[np.ndarray, int]:
    """Breadth-first closure of packed words under XOR with the generators.

    Returns the sorted words and the number of productive layers (the longest
    word length needed).
    """
    gens = list(dict.fromkeys(int(k) for k in keys))
    seen = {0}
    frontier = [0]
    layers = 0
    while frontier:
        new = []
        for w in frontier:
            for g in gens:
                v = w ^ g
                if v not in seen:
                    seen.add(v)
                    new.append(v)
        if new:
            layers += 1
        frontier = new
    return np.array(sorted(seen), dtype=np.uint64), layers


def _wrap(n: int | None, keys: np.ndarray) -> list[BinaryPauli]:
    if n is None:
        raise PauliError("cannot infer spin count from an empty generator set; pass n")
    return [BinaryPauli.from_key(n, int(k)) for k in keys]


def generate_group_graycode(
    generators: Sequence[BinaryPauli],
    n: int | None = None,
    max_generators: int = GRAYCODE_MAX_GENERATORS,
) -> list[BinaryPauli]:
    """Subgroup generated by ``generators`` modulo phases, in canonical key order."""
    generators = list(generators)
    n = _check_generators(generators) or n
    keys = group_keys_graycode([g.key for g in generators], max_generators)
    return _wrap(n, keys)


def generate_group_layered(generators: Sequence[BinaryPauli], n: int | None = None) -> list[BinaryPauli]:
    generators = list(generators)
    n = _check_generators(generators) or n
    keys, _ = group_keys_layered([g.key for g in generators])
    return _wrap(n, keys)


# --- sufficiency tests for reducibility ---------------------------------------


def pauli_sufficiency_count(terms: Iterable[BinaryPauli], n: int) -> bool:
    """True when fewer than 2n distinct Paulis appear (reduction guaranteed).

    False is inconclusive.
    """
    return len({t.key for t in terms}) < 2 * n


def pauli_sufficiency_rank(terms: Iterable[BinaryPauli], n: int) -> bool:
    """True when the terms' binary vectors have GF(2) rank below 2n.

    Sufficient in general, and also necessary for pure Pauli models.
    """
    terms = list(terms)
    if not terms:
        return True
    return gf2_rank(GF2Matrix.from_paulis(terms)) < 2 * n

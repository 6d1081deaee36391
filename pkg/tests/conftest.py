from __future__ import annotations

from functools import reduce

import numpy as np
import pytest

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_pauli(label: str) -> np.ndarray:
    """Dense Pauli string built directly from the 2x2 matrices, site 1 left-most."""
    return reduce(np.kron, [SIGMA[c] for c in label])


def gf2_rank_oracle(rows) -> int:
    """Row reduction of a 0/1 array over Z2."""
    a = np.array(rows, dtype=np.uint8) % 2
    if a.size == 0:
        return 0
    a = a.reshape(len(a), -1).copy()
    rank = 0
    for col in range(a.shape[1]):
        pivot = next((i for i in range(rank, a.shape[0]) if a[i, col]), None)
        if pivot is None:
            continue
        a[[rank, pivot]] = a[[pivot, rank]]
        for i in range(a.shape[0]):
            if i != rank and a[i, col]:
                a[i] ^= a[rank]
        rank += 1
    return rank


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_state(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def projector_residual(phi: np.ndarray, v: np.ndarray) -> float:
    return float(np.linalg.norm(v - phi @ (phi.conj().T @ v)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Acceptance outcomes, one line per criterion, echoed in the terminal summary.
ACCEPTANCE: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

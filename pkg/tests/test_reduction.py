from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import block_diag

from conftest import kron_pauli, random_hermitian, random_state
from qmor.burnside import burnside_basis_dense, burnside_basis_pauli
from qmor.linalg import evolve
from qmor.model import HamiltonianModel, PauliSum, collective_rotation, product_state, random_tfim_open, tfim_periodic
from qmor.pauli import BinaryPauli, encode_pauli
from qmor.reduction import (
    BlockSpec,
    ReducedModel,
    ReductionMap,
    check_reduced_model,
    gramian_select,
    orbit_basis,
    pauli_expectation,
    predicted_orbit_dim,
    reduced_model,
    reduced_model_pauli,
)


def _dense_orbit(model, state):
    return orbit_basis(burnside_basis_dense(model.coeff_set()), state)


def test_orbit_examples():
    assert _dense_orbit(collective_rotation(4), product_state("0000")).r == 5
    assert _dense_orbit(collective_rotation(3), product_state("100")).r == 6
    assert _dense_orbit(collective_rotation(1), product_state("0")).r == 2


def test_orbit_map_invariants():
    m = tfim_periodic(4)
    psi = product_state("++++")
    rmap = _dense_orbit(m, psi)
    assert rmap.orthonormality_error() <= 1e-10
    assert rmap.containment_residual(psi) <= 1e-9
    assert rmap.invariance_residual(m.coeff_set()) <= 1e-8
    assert rmap.selected == tuple(sorted(rmap.selected))


def test_orbit_minimality(rng):
    m = collective_rotation(3)
    psi = product_state("100")
    rmap = _dense_orbit(m, psi)
    k = int(rng.integers(rmap.r))
    cut = ReductionMap(np.delete(rmap.phi, k, axis=1), "burnside")
    broken = cut.invariance_residual(m.coeff_set()) > 1e-8 or cut.containment_residual(psi) > 1e-9
    assert broken


def test_trajectory_containment(rng):
    m = tfim_periodic(4)
    psi = product_state("0+0+")
    rmap = _dense_orbit(m, psi)
    for _ in range(20):
        lam = rng.normal(size=2)
        t = rng.uniform(0, 10)
        v = evolve(m.evaluate(lam), t, psi)
        assert np.linalg.norm(v - rmap.phi @ (rmap.phi.conj().T @ v)) <= 1e-8


def test_orbit_rejects_bad_state():
    b = burnside_basis_dense(collective_rotation(1).coeff_set())
    with pytest.raises(ValueError):
        orbit_basis(b, np.zeros(2))
    with pytest.raises(ValueError):
        orbit_basis(b, np.ones(4))


# --- Pauli expectations -------------------------------------------------------


def test_pauli_expectation_examples():
    assert pauli_expectation(encode_pauli("ZII"), "000") == 1
    assert pauli_expectation(encode_pauli("XII"), "000") == 0
    p = encode_pauli("XXZ")
    psi = product_state("++0")
    assert np.isclose(pauli_expectation(p, "++0"), psi.conj() @ kron_pauli("XXZ") @ psi)


def test_pauli_expectation_exhaustive_two_sites():
    for a in "IXYZ":
        for b in "IXYZ":
            for s in ("00", "01", "+-", "1+", "-0"):
                for phase in range(4):
                    p = BinaryPauli.from_key(2, encode_pauli(a + b).key, phase)
                    psi = product_state(s)
                    assert np.isclose(pauli_expectation(p, s), psi.conj() @ p.dense() @ psi)


# --- Gramian route ------------------------------------------------------------


def test_gramian_random_tfim_half_space():
    for n in range(2, 7):
        rmap = gramian_select(burnside_basis_pauli(random_tfim_open(n)), "+" * n)
        assert rmap.r == 2 ** (n - 1)


def test_gramian_eigenstate_gives_r1():
    m = HamiltonianModel(8, None, tuple(PauliSum.build(3, [(1.0, s)]) for s in ("ZII", "IZZ", "ZZZ")))
    assert gramian_select(burnside_basis_pauli(m), "010").r == 1


def _pure_models(rng, count):
    out = []
    while len(out) < count:
        n = int(rng.integers(1, 5))
        k = int(rng.integers(1, 2 * n))
        keys = rng.choice(np.arange(1, 4**n), size=min(k, 4**n - 1), replace=False)
        terms = tuple(PauliSum(n, ((1.0, BinaryPauli.from_key(n, int(c))),)) for c in keys)
        out.append(HamiltonianModel(1 << n, None, terms))
    return out


def test_gramian_matches_dense_orbit(rng):
    for m in _pure_models(rng, 15):
        n = m.n
        labels = "".join(rng.choice(list("01+-"), size=n))
        pb = burnside_basis_pauli(m)
        g = gramian_select(pb, labels)
        o = orbit_basis(burnside_basis_dense(m.coeff_set()), product_state(labels))
        assert g.r == o.r
        assert np.abs(g.projector - o.projector).max() <= 1e-8
        assert g.invariance_residual(m.coeff_set()) <= 1e-8


def test_gramian_needs_pauli_basis():
    with pytest.raises(ValueError):
        gramian_select(burnside_basis_dense(collective_rotation(1).coeff_set()), "0")


# --- reduced models -----------------------------------------------------------


def test_reduced_model_identity_map():
    m = tfim_periodic(2)
    psi = product_state("+0")
    rm = reduced_model(m, ReductionMap(np.eye(4, dtype=complex), "burnside"), psi)
    for a, b in zip(rm.terms, m.dense_terms):
        assert np.allclose(a, b)
    assert np.allclose(rm.v0, psi)


def test_reduced_model_collective_two_spins():
    m = collective_rotation(2)
    psi = product_state("00")
    rm = reduced_model(m, _dense_orbit(m, psi), psi)
    assert rm.r == 3 and all(t.shape == (3, 3) for t in rm.terms)
    check_reduced_model(rm)


def test_reduced_model_scalar():
    m = HamiltonianModel(2, None, (PauliSum.build(1, [(1.0, "Z")]),))
    psi = product_state("1")
    rm = reduced_model(m, _dense_orbit(m, psi), psi)
    assert rm.r == 1
    assert np.isclose(rm.evaluate([2.5])[0, 0], -2.5)


def test_reduced_model_pauli_matches_projection(rng):
    cases = [(random_tfim_open(3), "+++"), (tfim_periodic(3).over_parameterize(), "+0-"), (random_tfim_open(4), "0+1-")]
    for m, labels in cases:
        g = gramian_select(burnside_basis_pauli(m), labels)
        a = reduced_model(m, g, product_state(labels))
        b = reduced_model_pauli(m, g.selected, labels)
        for x, y in zip(a.terms, b.terms):
            assert np.abs(x - y).max() <= 1e-10
        assert np.abs(a.v0 - b.v0).max() <= 1e-10


def test_reduced_model_pauli_with_h0():
    m = HamiltonianModel(4, PauliSum.build(2, [(0.7, "XX")]), (PauliSum.build(2, [(1.0, "ZI")]), PauliSum.build(2, [(1.0, "IZ")])))
    labels = "+0"
    pm = m.over_parameterize()
    g = gramian_select(burnside_basis_pauli(pm), labels)
    a = reduced_model(m, g, product_state(labels))
    b = reduced_model_pauli(m, g.selected, labels)
    assert np.abs(a.h0 - b.h0).max() <= 1e-10


def test_reduced_model_pauli_diagonal_identity_entry():
    m = random_tfim_open(2)
    rm = reduced_model_pauli(m, [0], "+0")
    for c, t in zip(rm.terms, m.terms):
        assert np.isclose(c[0, 0], pauli_expectation(t.terms[0][1], "+0"))


def test_reduced_model_pauli_single_spin():
    m = HamiltonianModel(2, None, (PauliSum.build(1, [(1.0, "Z")]),))
    g = gramian_select(burnside_basis_pauli(m), "+")
    rm = reduced_model_pauli(m, g.selected, "+")
    assert np.allclose(rm.evaluate([1.7]), 1.7 * np.array([[0, 1], [1, 0]]))
    minus = product_state("-")
    assert np.allclose(g.phi[:, 1], minus) or np.allclose(g.phi[:, 1], -minus)


def test_serialisation_roundtrip(rng):
    m = tfim_periodic(3)
    psi = product_state("+++")
    rmap = _dense_orbit(m, psi)
    back = ReductionMap.from_dict(rmap.to_dict())
    assert np.array_equal(back.phi, rmap.phi) and back.selected == rmap.selected
    rm = reduced_model(m, rmap, psi)
    rm2 = ReducedModel.from_dict(rm.to_dict())
    assert all(np.array_equal(a, b) for a, b in zip(rm.terms, rm2.terms))
    lines = rmap.to_csv().splitlines()
    assert lines[0] == "row,col,re,im" and len(lines) == 1 + rmap.d * rmap.r


def test_truncated_map():
    rmap = _dense_orbit(collective_rotation(2), product_state("00"))
    t = rmap.truncated(1)
    assert t.r == rmap.r - 1 and np.array_equal(t.phi, rmap.phi[:, :-1])
    with pytest.raises(ValueError):
        rmap.truncated(rmap.r)


# --- block-dimension predictor ------------------------------------------------


def test_predicted_dim_trivial_cases(rng):
    assert predicted_orbit_dim(BlockSpec(((5, 1),)), random_state(rng, 5)) == 5
    nu = np.concatenate([np.zeros(4), random_state(rng, 3)])
    assert predicted_orbit_dim(BlockSpec(((2, 2), (3, 1))), nu) == 3


def _block_generators(spec: BlockSpec, rng, count=3):
    gens = []
    for _ in range(count):
        gens.append(spec.embed([random_hermitian(rng, q) for q, _ in spec.blocks]))
    return gens


def test_predicted_dim_matches_orbit_on_mat2_kron_1_plus_mat3(rng):
    spec = BlockSpec(((2, 2), (3, 1)))
    assert spec.dim == 7
    gens = _block_generators(spec, rng)
    basis = burnside_basis_dense(gens)
    assert basis.size == 4 + 9
    nus = [random_state(rng, 7)]
    v = random_state(rng, 2)
    nus.append(np.concatenate([v, 2j * v, random_state(rng, 3)]))
    nus.append(np.concatenate([v, np.zeros(2), np.zeros(3)]))
    for nu in nus:
        assert predicted_orbit_dim(spec, nu) == orbit_basis(basis, nu).r


def test_block_spec_validation():
    with pytest.raises(ValueError):
        BlockSpec(((0, 1),))
    with pytest.raises(ValueError):
        predicted_orbit_dim(BlockSpec(((2, 1),)), np.ones(3))
    e = BlockSpec(((1, 1), (2, 1)))
    assert np.allclose(e.embed([np.eye(1), np.eye(2)]), block_diag(np.eye(1), np.eye(2)))

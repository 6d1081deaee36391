"""Exact model order reduction for parameterized Hamiltonians via invariant subspaces."""
from __future__ import annotations

from .burnside import BurnsideBasis, CertificateReport, burnside_basis_dense, burnside_basis_pauli, certify, paz_bound
from .dynamics import compare, project_observable, propagate_full, propagate_reduced
from .model import (
    HamiltonianModel,
    PauliSum,
    builtin_model,
    collective_rotation,
    ground_state,
    product_state,
    random_tfim_open,
    tfim_periodic,
)
from .pauli import BinaryPauli, encode_pauli, gf2_rank, pauli_product
from .reduction import (
    BlockSpec,
    ReducedModel,
    ReductionMap,
    gramian_select,
    orbit_basis,
    pauli_expectation,
    predicted_orbit_dim,
    reduced_model,
    reduced_model_pauli,
)
from .sampling import cyclic_dimension, krylov_rank, snapshot_reduction, snapshots, uniform_step_valid

__version__ = "0.1.0"

__all__ = [
    "BinaryPauli",
    "BlockSpec",
    "BurnsideBasis",
    "CertificateReport",
    "HamiltonianModel",
    "PauliSum",
    "ReducedModel",
    "ReductionMap",
    "builtin_model",
    "burnside_basis_dense",
    "burnside_basis_pauli",
    "certify",
    "collective_rotation",
    "compare",
    "cyclic_dimension",
    "encode_pauli",
    "gf2_rank",
    "gramian_select",
    "ground_state",
    "krylov_rank",
    "orbit_basis",
    "pauli_expectation",
    "pauli_product",
    "paz_bound",
    "predicted_orbit_dim",
    "product_state",
    "project_observable",
    "propagate_full",
    "propagate_reduced",
    "random_tfim_open",
    "reduced_model",
    "reduced_model_pauli",
    "snapshot_reduction",
    "snapshots",
    "tfim_periodic",
    "uniform_step_valid",
]

"""Full- and reduced-order propagation and trajectory comparison."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import evolve_many
from .model import HamiltonianModel, PauliSum
from .reduction import ReducedModel, ReductionMap, reduced_model
from .serialize import dumps, fmt_float

IMAG_TOL = 1e-10


def _times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1 or not np.all(np.isfinite(t)):
        raise ValueError("times must be a finite 1-d sequence")
    return t


def propagate_full(model: HamiltonianModel, lam, psi0: np.ndarray, times) -> np.ndarray:
    """Rows are ``exp(-i H(lam) t) psi0`` for each ``t``."""
    return evolve_many(model.evaluate(lam), _times(times), np.asarray(psi0, dtype=complex))


def propagate_reduced(rm: ReducedModel, lam, times) -> np.ndarray:
    """Rows are ``exp(-i hat H(lam) t) v0`` for each ``t``."""
    return evolve_many(rm.evaluate(lam), _times(times), rm.v0)


def project_observable(obs, rmap: ReductionMap) -> np.ndarray:
    o = obs.dense() if isinstance(obs, PauliSum) else np.asarray(obs)
    return rmap.phi.conj().T @ o @ rmap.phi


def expectations(states: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """``<psi_t|O|psi_t>`` per row; the imaginary part must vanish for Hermitian ``O``."""
    vals = np.einsum("ti,ij,tj->t", states.conj(), obs, states)
    scale = max(1.0, float(np.abs(obs).max(initial=0.0)))
    if np.abs(vals.imag).max(initial=0.0) > IMAG_TOL * scale:
        raise ValueError("observable expectation is not real; is the observable Hermitian?")
    return vals.real


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    times: np.ndarray
    values: np.ndarray
    model_kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("one value per time point is required")

    def csv_rows(self) -> list[list[str]]:
        return [[fmt_float(t), fmt_float(v), self.model_kind] for t, v in zip(self.times, self.values)]

    def to_csv(self) -> str:
        return trajectories_csv([self])

    def to_dict(self) -> dict:
        return {"model_kind": self.model_kind, "meta": self.meta,
                "times": self.times.tolist(), "values": self.values.tolist()}


def trajectories_csv(results: Sequence[TrajectoryResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "value", "model_kind"])
    for res in results:
        w.writerows(res.csv_rows())
    return buf.getvalue()


def simulate_full(model: HamiltonianModel, lam, psi0: np.ndarray, obs, times) -> TrajectoryResult:
    o = obs.dense() if isinstance(obs, PauliSum) else np.asarray(obs)
    t = _times(times)
    return TrajectoryResult(t, expectations(propagate_full(model, lam, psi0, t), o), "full", {"d": model.dim})


def simulate_reduced(
    model: HamiltonianModel, rmap: ReductionMap, lam, psi0: np.ndarray, obs, times, kind: str = "reduced"
) -> TrajectoryResult:
    rm = reduced_model(model, rmap, psi0)
    t = _times(times)
    vals = expectations(propagate_reduced(rm, lam, t), project_observable(obs, rmap))
    return TrajectoryResult(t, vals, kind, {"d": model.dim, "r": rmap.r})


@dataclass(frozen=True, eq=False)
class Comparison:
    full: TrajectoryResult
    reduced: TrajectoryResult
    max_abs_error: float

    def to_dict(self) -> dict:
        return {"max_abs_error": self.max_abs_error, "full": self.full.to_dict(), "reduced": self.reduced.to_dict()}

    def to_json(self) -> str:
        return dumps(self.to_dict())


def compare(
    model: HamiltonianModel,
    rmap: ReductionMap,
    lam,
    obs,
    times,
    psi0: np.ndarray,
    truncate: int = 0,
) -> Comparison:
    """Pointwise comparison of full and reduced expectations.

    ``truncate=k`` drops the last ``k`` columns of the map first; the projected
    initial state is then not renormalised.
    """
    kind = "reduced"
    if truncate:
        rmap = rmap.truncated(truncate)
        kind = f"truncated({rmap.r})"
    full = simulate_full(model, lam, psi0, obs, times)
    red = simulate_reduced(model, rmap, lam, psi0, obs, times, kind)
    err = float(np.abs(full.values - red.values).max(initial=0.0))
    return Comparison(full, red, err)

"""Reduced subspaces from time snapshots, with the spanning diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import DEFAULT_RANK_TOL, hermitian_eig, evolve_many, numeric_rank, orthonormal_columns
from .model import HamiltonianModel, ModelError
from .reduction import INVARIANCE_TOL, ReductionMap

EIG_CLUSTER_REL = 1e-9
PROJECTION_TOL = 1e-9
PHASE_TOL = 1e-9
DEFAULT_INTERVAL = (0.0, 10.0)


def _clusters(w: np.ndarray, rel: float = EIG_CLUSTER_REL) -> list[slice]:
    """Runs of ascending eigenvalues whose neighbour gaps are within ``rel`` times the spectral radius."""
    eigtol = rel * float(np.abs(w).max(initial=0.0))
    cuts = np.flatnonzero(np.diff(w) > eigtol) + 1
    edges = [0, *cuts.tolist(), len(w)]
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def relevant_eigenvalues(h: np.ndarray, psi0: np.ndarray, tol: float = PROJECTION_TOL) -> np.ndarray:
    """Distinct eigenvalues (cluster means) whose eigenspace has a projection of ``psi0`` above ``tol``."""
    w, u = hermitian_eig(h)
    c = u.conj().T @ np.asarray(psi0)
    out = [w[s].mean() for s in _clusters(w) if np.linalg.norm(c[s]) > tol]
    return np.array(out)


def cyclic_dimension(h: np.ndarray, psi0: np.ndarray, tol: float = PROJECTION_TOL) -> int:
    """Dimension of ``span{H^k psi0}`` from the spectrum: the count of relevant distinct eigenvalues."""
    return len(relevant_eigenvalues(h, psi0, tol))


def krylov_rank(h: np.ndarray, psi0: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> int:
    """Dimension of ``span{H^k psi0}`` by Arnoldi with full reorthogonalisation.

    The iteration stops when the new direction has norm at most ``tol`` times
    ``max(1, ||H||_2)``.
    """
    h = np.asarray(h, dtype=complex)
    v = np.asarray(psi0, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return 0
    scale = max(1.0, float(np.linalg.norm(h, 2)))
    q = [v / nrm]
    while len(q) < h.shape[0]:
        w = h @ q[-1]
        basis = np.array(q)
        for _ in range(2):
            w = w - basis.T @ (basis.conj() @ w)
        nw = np.linalg.norm(w)
        if nw <= tol * scale:
            break
        q.append(w / nw)
    return len(q)


def uniform_step_valid(eigenvalues: Sequence[float], dt: float, tol: float = PHASE_TOL) -> bool:
    """False iff ``dt * (mu_k - mu_j)`` is a multiple of ``2 pi`` for some distinct pair.

    Such a step makes two relevant eigen-components acquire the same phase per
    step, so uniformly spaced snapshots lose rank.
    """
    mu = np.unique(np.asarray(eigenvalues, dtype=float))
    if len(mu) < 2:
        return True
    diff = (mu[None, :] - mu[:, None])[np.triu_indices(len(mu), 1)]
    phase = np.mod(dt * diff, 2 * math.pi)
    dist = np.minimum(phase, 2 * math.pi - phase)
    return bool(np.all(dist > tol))


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """States ``evolve(H(lam_g), t, psi0)``; ``groups[i]`` is the schedule entry of ``states[i]``."""

    lambdas: tuple[np.ndarray, ...]
    times: tuple[np.ndarray, ...]
    states: np.ndarray
    groups: np.ndarray

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.states.shape[0]


def snapshots(model: HamiltonianModel, lam, times: Sequence[float], psi0: np.ndarray) -> SnapshotSet:
    """Snapshots of a single parameter value at the given times (``t0 = 0``)."""
    times = np.asarray(times, dtype=float).ravel()
    if not np.all(np.isfinite(times)):
        raise ValueError("snapshot times must be finite")
    lam = model.parameter_vector(lam)
    states = evolve_many(model.evaluate(lam), times, np.asarray(psi0, dtype=complex))
    return SnapshotSet((lam,), (times,), states, np.zeros(len(times), dtype=int))


def merge(sets: Sequence[SnapshotSet]) -> SnapshotSet:
    lambdas, times, states, groups = [], [], [], []
    for s in sets:
        base = len(lambdas)
        lambdas.extend(s.lambdas)
        times.extend(s.times)
        states.append(s.states)
        groups.append(s.groups + base)
    return SnapshotSet(tuple(lambdas), tuple(times), np.vstack(states), np.concatenate(groups))


def snapshot_span_dim(s: SnapshotSet, tol: float = DEFAULT_RANK_TOL) -> int:
    return numeric_rank(s.states, tol)[0]


# --- schedules --------------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleEntry:
    """One parameter value with its resolved sampling times."""

    lam: object
    times: tuple[float, ...]
    kind: str = "list"
    seed: int | None = None
    step: float | None = None

    def to_dict(self) -> dict:
        out = {"lambda": self.lam if isinstance(self.lam, dict) else list(self.lam), "kind": self.kind,
               "times": list(self.times)}
        if self.seed is not None:
            out["seed"] = self.seed
        if self.step is not None:
            out["step"] = self.step
        return out


def parse_schedule(data, seed: int | None = None) -> list[ScheduleEntry]:
    """Resolve a schedule into explicit times.

    Each entry is ``{"lambda": [...] | {label: value}, "times": ...}`` where
    ``times`` is a list, ``{"random": {"count", "interval", "seed"}}`` or
    ``{"uniform": {"start", "step", "count"}}``.  A random entry without its own
    seed uses ``seed + index``; with no seed at all one is drawn and recorded.
    """
    if not isinstance(data, list) or not data:
        raise ModelError("schedule must be a non-empty list of entries")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**31))
    out = []
    for i, entry in enumerate(data):
        try:
            lam = entry["lambda"]
            spec = entry["times"]
        except (KeyError, TypeError) as exc:
            raise ModelError(f"schedule entry {i}: missing {exc}") from exc
        if not isinstance(lam, dict):
            lam = [float(v) for v in lam]
        if isinstance(spec, list):
            out.append(ScheduleEntry(lam, tuple(float(t) for t in spec)))
        elif isinstance(spec, dict) and "random" in spec:
            r = spec["random"]
            a, b = r.get("interval", DEFAULT_INTERVAL)
            s = int(r.get("seed", seed + i))
            count = int(r["count"])
            if count < 1 or not b > a:
                raise ModelError(f"schedule entry {i}: need count >= 1 and a non-empty interval")
            ts = np.random.default_rng(s).uniform(float(a), float(b), count)
            out.append(ScheduleEntry(lam, tuple(ts.tolist()), "random", seed=s))
        elif isinstance(spec, dict) and "uniform" in spec:
            u = spec["uniform"]
            start, step, count = float(u.get("start", 0.0)), float(u["step"]), int(u["count"])
            if count < 1:
                raise ModelError(f"schedule entry {i}: count must be >= 1")
            ts = start + step * np.arange(count)
            out.append(ScheduleEntry(lam, tuple(ts.tolist()), "uniform", step=step))
        else:
            raise ModelError(f"schedule entry {i}: unrecognised times {spec!r}")
    return out


@dataclass(frozen=True)
class SnapshotReport:
    d: int
    r: int
    span_dim: int
    cyclic_dims: tuple[int, ...]
    uniform_valid: tuple[bool | None, ...]
    invariance_residual: float
    residual_pass: bool

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "r": self.r,
            "span_dim": self.span_dim,
            "cyclic_dims": list(self.cyclic_dims),
            "uniform_step_valid": list(self.uniform_valid),
            "invariance_residual": self.invariance_residual,
            "residual_pass": self.residual_pass,
        }


def snapshot_reduction(
    model: HamiltonianModel,
    schedule: Sequence[ScheduleEntry],
    psi0: np.ndarray,
    tol: float = DEFAULT_RANK_TOL,
) -> tuple[ReductionMap, SnapshotReport, SnapshotSet]:
    """Reduction map spanned by the union of all snapshots in the schedule.

    The report says whether the span is invariant under every coefficient
    operator; under-sampled schedules give a span that is not.
    """
    if not schedule:
        raise ModelError("empty schedule")
    psi0 = np.asarray(psi0, dtype=complex)
    sets, cyc, valid = [], [], []
    for e in schedule:
        s = snapshots(model, e.lam, e.times, psi0)
        sets.append(s)
        h = model.evaluate(e.lam)
        cyc.append(cyclic_dimension(h, psi0))
        valid.append(uniform_step_valid(relevant_eigenvalues(h, psi0), e.step) if e.kind == "uniform" else None)
    allsnaps = merge(sets)
    rank, idx = numeric_rank(allsnaps.states, tol)
    phi = orthonormal_columns(allsnaps.states[idx])
    rmap = ReductionMap(phi, "snapshots", tuple(idx))
    res = rmap.invariance_residual(model.coeff_set())
    report = SnapshotReport(model.dim, rank, rank, tuple(cyc), tuple(valid), res, res <= INVARIANCE_TOL)
    return rmap, report, allsnaps

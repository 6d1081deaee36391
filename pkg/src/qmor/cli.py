"""Command-line entry point: ``qmor {certify,reduce,simulate,sample,model}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import warnings

import numpy as np

from .burnside import burnside_basis_dense, burnside_basis_pauli, certify
from .dynamics import compare, simulate_full, trajectories_csv
from .model import (
    BUILTIN_MODELS,
    HamiltonianModel,
    ModelError,
    NearDegeneracyWarning,
    PauliSum,
    builtin_model,
    ground_state,
    normalize_product_labels,
    product_state,
    state_from_spec,
    total_pauli,
)
from .pauli import PauliError, encode_pauli
from .reduction import gramian_select, orbit_basis, reduced_model
from .sampling import parse_schedule, snapshot_reduction
from .serialize import dumps

EXIT_REDUCIBLE = 0
EXIT_IRREDUCIBLE = 1
EXIT_ERROR = 2

log = logging.getLogger("qmor")


class UsageError(Exception):
    pass


# --- argument helpers -------------------------------------------------------------


def _load_model(args) -> HamiltonianModel:
    if args.model and args.builtin:
        raise UsageError("give either --model or --builtin, not both")
    if args.model:
        if not os.path.isfile(args.model):
            raise UsageError(f"model file {args.model!r} does not exist")
        with open(args.model) as fh:
            return HamiltonianModel.from_dict(json.load(fh))
    if args.builtin:
        if args.n is None:
            raise UsageError("--builtin needs --n")
        return builtin_model(args.builtin, args.n)
    raise UsageError("a model is required: --model FILE or --builtin NAME --n INT")


def _parse_lambda(text: str, model: HamiltonianModel):
    """``B=0.5,J=1`` (by label) or ``0.5,1`` (positional)."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        if parts and all("=" in p for p in parts):
            return {k.strip(): float(v) for k, v in (p.split("=", 1) for p in parts)}
        return [float(p) for p in parts]
    except ValueError as exc:
        raise UsageError(f"cannot parse --lambda {text!r}") from exc


_POWER = re.compile(r"^([01+\-−])\^(\d+)$")
_GS = re.compile(r"^gs\((.*)\)$")


def _parse_state(text: str, model: HamiltonianModel, degeneracy_tol: float) -> tuple[np.ndarray, str | None]:
    """Return the state and, for product states, its site labels.

    Accepted: ``+0-1`` product labels, ``+^6`` repeated label, ``gs(0.05,1)``
    or ``gs(B=0.05,J=1)`` ground state, an inline JSON object, or a JSON file.
    """
    text = text.strip()
    m = _POWER.match(text)
    if m:
        text = m.group(1) * int(m.group(2))
    m = _GS.match(text)
    if m:
        lam = _parse_lambda(m.group(1), model)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NearDegeneracyWarning)
            psi = ground_state(model, lam, degeneracy_tol)
        for w in caught:
            log.warning("%s", w.message)
        return psi, None
    if text.startswith("{"):
        spec = json.loads(text)
    elif os.path.isfile(text):
        with open(text) as fh:
            spec = json.load(fh)
    else:
        labels = normalize_product_labels(text)
        if (1 << len(labels)) != model.dim:
            raise UsageError(f"{len(labels)}-site state for a model of dimension {model.dim}")
        return product_state(labels), labels
    if "degeneracy_tol" not in spec.get("ground_state", {}) and "ground_state" in spec:
        spec["ground_state"]["degeneracy_tol"] = degeneracy_tol
    psi = state_from_spec(spec, model)
    labels = normalize_product_labels(spec["product"]) if "product" in spec else None
    return psi, labels


def _parse_times(text: str) -> np.ndarray:
    """Comma list ``0,0.5,1`` or ``start:stop:count`` (inclusive linspace)."""
    try:
        if ":" in text:
            a, b, c = text.split(":")
            return np.linspace(float(a), float(b), int(c))
        return np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError as exc:
        raise UsageError(f"cannot parse --times {text!r}") from exc


def _observable(text: str, n: int) -> PauliSum:
    m = re.match(r"^sum-([xyz])$", text.lower())
    if m:
        return total_pauli(n, m.group(1).upper())
    return PauliSum.build(n, [(1.0, encode_pauli(text))])


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check_tol(tol):
    if tol is not None and not tol > 0:
        raise UsageError("--tol must be positive")


# --- subcommands ------------------------------------------------------------------


def cmd_certify(args) -> int:
    model = _load_model(args)
    _check_tol(args.tol)
    method = {"auto": "auto", "pauli": "pauli", "burnside": "burnside"}.get(args.method or "auto")
    if method is None:
        raise UsageError(f"--method {args.method} does not apply to certify")
    kw = {"tol": args.tol} if args.tol else {}
    rep = certify(model, method=method, **kw)
    _emit(dumps(rep.to_dict()), args.out)
    if rep.reducible is None:
        return EXIT_ERROR
    return EXIT_REDUCIBLE if rep.reducible else EXIT_IRREDUCIBLE


def _build_map(args, model, psi0, labels):
    method = args.method or "auto"
    tol = args.tol
    if method == "auto":
        if model.is_pure_pauli and labels is not None:
            method = "gramian"
        elif model.dim <= 256:
            method = "burnside"
        else:
            method = "pauli"
    if method == "gramian":
        if labels is None:
            raise UsageError("the Gramian method needs a product state")
        basis = burnside_basis_pauli(model.over_parameterize())
        return gramian_select(basis, labels, **({"tol": tol} if tol else {})), basis.size, method
    if method == "pauli":
        basis = burnside_basis_pauli(model.over_parameterize())
    elif method == "burnside":
        basis = burnside_basis_dense(model.coeff_set(), **({"tol": tol} if tol else {}))
    elif method == "snapshots":
        if not args.schedule:
            raise UsageError("--method snapshots needs --schedule")
        rmap, _, _ = snapshot_reduction(model, _load_schedule(args, model), psi0, **({"tol": tol} if tol else {}))
        return rmap, None, method
    else:
        raise UsageError(f"unknown method {method!r}")
    return orbit_basis(basis, psi0, **({"tol": tol} if tol else {})), basis.size, method


def cmd_reduce(args) -> int:
    model = _load_model(args)
    _check_tol(args.tol)
    if not args.state:
        raise UsageError("reduce needs --state")
    psi0, labels = _parse_state(args.state, model, args.degeneracy_tol)
    rmap, basis_size, method = _build_map(args, model, psi0, labels)
    rm = reduced_model(model, rmap, psi0)
    report = {
        "d": rmap.d,
        "r": rmap.r,
        "basis_size": basis_size,
        "method": method,
        "reducible": rmap.r < rmap.d,
        "invariance_residual": rmap.invariance_residual(model.coeff_set()),
    }
    if args.out:
        _emit(dumps({"report": report, "map": rmap.to_dict(), "reduced_model": rm.to_dict()}), args.out)
    sys.stdout.write(dumps(report))
    return 0


def cmd_simulate(args) -> int:
    model = _load_model(args)
    _check_tol(args.tol)
    if not args.state:
        raise UsageError("simulate needs --state")
    if not args.lam:
        raise UsageError("simulate needs at least one --lambda")
    times = _parse_times(args.times or "0:10:200")
    psi0, labels = _parse_state(args.state, model, args.degeneracy_tol)
    obs = _observable(args.observable, model.n)
    lams = [_parse_lambda(t, model) for t in args.lam]
    reduce_needed = args.compare or args.truncate
    rmap = None
    if reduce_needed:
        rmap, _, _ = _build_map(args, model, psi0, labels)
    results, summary = [], []
    for q, lam in enumerate(lams):
        if reduce_needed:
            cmp_ = compare(model, rmap, lam, obs, times, psi0, truncate=args.truncate or 0)
            results.append((q, [cmp_.full, cmp_.reduced]))
            summary.append({"lambda": lam, "max_abs_error": cmp_.max_abs_error})
        else:
            results.append((q, [simulate_full(model, lam, psi0, obs, times)]))
            summary.append({"lambda": lam})
    lines = [",".join(["time", "value", "model_kind"] + (["quench"] if len(lams) > 1 else []))]
    for q, trajs in results:
        body = trajectories_csv(trajs).splitlines()[1:]
        lines += [row + (f",{q}" if len(lams) > 1 else "") for row in body]
    _emit("\n".join(lines) + "\n", args.out)
    meta = {"d": model.dim, "r": rmap.r if rmap is not None else None, "truncate": args.truncate or 0,
            "seed": args.seed, "quenches": summary}
    if args.json:
        _emit(dumps(meta), args.json)
    if reduce_needed:
        sys.stderr.write(dumps(meta))
    return 0


def _load_schedule(args, model):
    if args.schedule:
        if not os.path.isfile(args.schedule):
            raise UsageError(f"schedule file {args.schedule!r} does not exist")
        with open(args.schedule) as fh:
            data = json.load(fh)
    else:
        if not args.lam or not args.times:
            raise UsageError("sampling needs --schedule or --lambda with --times")
        data = [{"lambda": _parse_lambda(t, model), "times": _parse_times(args.times).tolist()} for t in args.lam]
    return parse_schedule(data, seed=args.seed)


def cmd_sample(args) -> int:
    model = _load_model(args)
    _check_tol(args.tol)
    if not args.state:
        raise UsageError("sample needs --state")
    psi0, _ = _parse_state(args.state, model, args.degeneracy_tol)
    schedule = _load_schedule(args, model)
    rmap, report, _ = snapshot_reduction(model, schedule, psi0, **({"tol": args.tol} if args.tol else {}))
    out = {"report": report.to_dict(), "schedule": [e.to_dict() for e in schedule]}
    sys.stdout.write(dumps(out))
    if args.out:
        _emit(dumps({**out, "map": rmap.to_dict()}), args.out)
    return 0


def cmd_model(args) -> int:
    model = _load_model(args)
    _emit(dumps(model.to_dict()), args.out)
    return 0


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmor", description="Exact model order reduction for parameterized Hamiltonians.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", metavar="FILE", help="model JSON file")
    common.add_argument("--builtin", choices=BUILTIN_MODELS)
    common.add_argument("--n", type=int, help="number of spins for --builtin")
    common.add_argument("--tol", type=float)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--method", choices=("auto", "burnside", "pauli", "gramian", "snapshots"))

    run = argparse.ArgumentParser(add_help=False, parents=[common])
    run.add_argument("--state", help="+0-1 labels, '+^n', gs(B=..,J=..), JSON object or JSON file")
    run.add_argument("--lambda", dest="lam", action="append", metavar="k=v,...")
    run.add_argument("--times", metavar="LIST", help="comma list or start:stop:count")
    run.add_argument("--schedule", metavar="FILE")
    run.add_argument("--seed", type=int)
    run.add_argument("--degeneracy-tol", type=float, default=1e-8)

    sub.add_parser("certify", parents=[common], help="decide reducibility").set_defaults(func=cmd_certify)
    sub.add_parser("reduce", parents=[run], help="build the minimal reduced subspace").set_defaults(func=cmd_reduce)
    sp = sub.add_parser("simulate", parents=[run], help="propagate and compare full and reduced models")
    sp.add_argument("--compare", action="store_true")
    sp.add_argument("--truncate", type=int, default=0, metavar="K")
    sp.add_argument("--observable", default="sum-x", help="sum-x, sum-y, sum-z or a Pauli label")
    sp.add_argument("--json", metavar="PATH", help="metadata bundle")
    sp.set_defaults(func=cmd_simulate)
    sub.add_parser("sample", parents=[run], help="snapshot-based reduction").set_defaults(func=cmd_sample)
    sub.add_parser("model", parents=[common], help="write a model as JSON").set_defaults(func=cmd_model)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="qmor: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ModelError, PauliError, ValueError, np.linalg.LinAlgError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"qmor: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands ``repr``, ``evolve``, ``grid``, ``expect``, ``sample``,
``moments`` and ``diagnose`` print (or write with ``--out``) JSON documents
tagged ``"schema": 1``.  Output carries no timestamps, so identical
arguments and seed give byte-identical files.

Exit codes: 2 usage, 3 validation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis, dynamics, estimation
from .errors import NumericalError, SpinPhaseError, ValidationError
from .pauli import PauliPolynomial, PauliString
from .sw import PhaseSpaceFunction, check_s, evaluate, grid_to_csv, lat_long_nodes, state_library

SCHEMA = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4
DEFAULT_GRID_RES = 121
SEED_ENV = "SPINPHASE_SEED"
FIGURES = ("precession", "zz_purity", "imaginary_ground", "lindblad_decay")
COMMANDS = ("repr", "evolve", "grid", "expect", "sample", "moments", "diagnose")


class UsageError(ValidationError):
    """Missing or inconsistent command-line arguments (exit code 2)."""


@dataclass
class RunSpec:
    """Validated view of one invocation."""

    command: str
    seed: int
    s: float = -1.0
    state: str | None = None
    model: str | None = None
    out: str | None = None
    grid_res: int = DEFAULT_GRID_RES
    workers: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        check_s(self.s)
        if self.grid_res < 2:
            raise ValidationError("--grid-res must be at least 2")
        if self.workers < 1:
            raise ValidationError("--workers must be positive")
        for path in (self.state, self.model):
            if path and _looks_like_path(path) and not Path(path).is_file():
                raise ValidationError(f"file not found: {path}")


def _looks_like_path(text: str) -> bool:
    return text.endswith(".json") or os.sep in text


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ValidationError(f"{SEED_ENV} must be an integer, got {env!r}") from exc


def _load_json(path: str):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_state(name: str, s: float, n=None, p=None, beta=None) -> PhaseSpaceFunction:
    """Library name or path to a coefficient JSON file."""
    if _looks_like_path(name) or Path(name).is_file():
        data = _load_json(name)
        try:
            f = PhaseSpaceFunction.from_dict(data, is_state=True)
        except ValueError as exc:
            raise ValidationError(f"{name}: {exc}") from exc
        return f.with_s(s)
    return state_library(name, s, n=n, p=p, beta=beta)


def figure_spec(name: str) -> dict:
    """Shipped figure-reproduction spec by name (one of ``FIGURES``)."""
    if name not in FIGURES:
        raise ValidationError(f"unknown figure spec {name!r}; choose from {', '.join(FIGURES)}")
    text = resources.files("spinphase").joinpath("figures", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_model_spec(name: str) -> dict:
    if name in FIGURES:
        return figure_spec(name)
    return _load_json(name)


_TERM = re.compile(
    r"\s*([+-])?\s*(?:((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*\*?\s*)?([IXYZ]+)\s*"
)


def parse_observable(text: str, n_qubits: int | None = None) -> PauliPolynomial:
    """``"XXX"``, ``"0.5*XX - ZZ"`` or a path to a polynomial JSON file."""
    if _looks_like_path(text):
        try:
            return PauliPolynomial.from_dict(_load_json(text))
        except ValueError as exc:
            raise ValidationError(f"{text}: {exc}") from exc
    terms: dict[str, float] = {}
    pos = 0
    src = text.strip()
    if not src:
        raise ValidationError("empty observable")
    while pos < len(src):
        m = _TERM.match(src, pos)
        if not m or m.end() == pos or (pos > 0 and m.group(1) is None):
            raise ValidationError(f"cannot parse observable {text!r} at position {pos}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        coeff = float(m.group(2)) if m.group(2) else 1.0
        terms[m.group(3)] = terms.get(m.group(3), 0.0) + sign * coeff
        pos = m.end()
    lengths = {len(k) for k in terms}
    if len(lengths) != 1:
        raise ValidationError("observable strings differ in length")
    poly = PauliPolynomial.from_labels(terms)
    if n_qubits is not None and poly.n_qubits != n_qubits:
        raise ValidationError(f"observable has {poly.n_qubits} sites, state has {n_qubits}")
    return poly


def _snapshot_times(arg: str | None, spec_times, t_final: float) -> list[float] | None:
    if arg is None:
        return None if spec_times is None else [float(t) for t in spec_times]
    parts = [x for x in arg.split(",") if x.strip()]
    if len(parts) == 1 and re.fullmatch(r"\s*\d+\s*", parts[0]):
        k = int(parts[0])
        if k < 1:
            raise ValidationError("--snapshots count must be positive")
        return [float(t) for t in np.linspace(0.0, t_final, k)] if k > 1 else [0.0]
    try:
        return [float(x) for x in parts]
    except ValueError as exc:
        raise ValidationError(f"bad --snapshots value {arg!r}") from exc


def _peak(values: np.ndarray, th: np.ndarray, ph: np.ndarray) -> dict:
    """Grid argmax refined by a three-point parabola along each axis."""
    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    n_t, n_p = values.shape

    def vertex(a, b, c):
        den = a - 2 * b + c
        return 0.0 if den == 0 else 0.5 * (a - c) / den

    dp = vertex(values[i, (j - 1) % n_p], values[i, j], values[i, (j + 1) % n_p])
    dth = 0.0
    if 0 < i < n_t - 1:
        dth = vertex(values[i - 1, j], values[i, j], values[i + 1, j])
    hp = 2 * math.pi / n_p
    ht = th[1] - th[0] if n_t > 1 else 0.0
    return {"theta": float(th[i] + dth * ht), "phi": float((ph[j] + dp * hp) % (2 * math.pi)),
            "value": float(values[i, j])}


def _site_grid(f: PhaseSpaceFunction, site: int, res: int):
    marg = analysis.marginalize(f, [site]) if f.n_qubits > 1 else f
    th, ph = lat_long_nodes(res, res)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    vals = np.real(evaluate(marg, tt.reshape(-1, 1), pp.reshape(-1, 1))).reshape(res, res)
    return marg, th, ph, tt, pp, vals


def _write(text: str, out: str | None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(doc: dict) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _state_from(spec: RunSpec, args) -> PhaseSpaceFunction:
    if not spec.state:
        raise UsageError("--state is required")
    return load_state(spec.state, spec.s, n=args.n, p=args.p, beta=args.beta)


def cmd_repr(spec: RunSpec, args) -> dict:
    f = _state_from(spec, args)
    return {"schema": SCHEMA, "command": "repr", "state": spec.state, "s": f.s,
            "n_qubits": f.n_qubits, "coefficients": f.coeffs.to_dict()["terms"]}


def cmd_evolve(spec: RunSpec, args) -> dict:
    if not spec.model:
        raise UsageError("--model is required (file path or one of " + ", ".join(FIGURES) + ")")
    data = load_model_spec(spec.model)
    model, t_final, dt = dynamics.model_from_dict(data)
    if args.t is not None:
        t_final = float(args.t)
    if args.dt is not None:
        dt = float(args.dt)
    if not (t_final >= 0 and dt > 0):
        raise ValidationError("need t >= 0 and dt > 0")
    state_name = spec.state or data.get("state")
    if not state_name:
        raise UsageError("--state is required when the model spec names none")
    f0 = load_state(state_name, spec.s, n=args.n, p=args.p, beta=args.beta)
    if f0.n_qubits != model.n_qubits:
        raise ValidationError(f"state has {f0.n_qubits} qubits, model {model.n_qubits}")
    times = _snapshot_times(args.snapshots, data.get("snapshots"), t_final)
    traj = dynamics.evolve(f0, model, t_final, dt, method=args.method or "rk4", times=times)
    sites = data.get("view", {}).get("sites") or list(range(1, f0.n_qubits + 1))
    if args.site is not None:
        sites = [args.site]
    for k in sites:
        if not 1 <= k <= f0.n_qubits:
            raise ValidationError(f"view site {k} outside 1..{f0.n_qubits}")
    grid_dir = Path(args.grid_dir) if args.grid_dir else None
    if grid_dir:
        grid_dir.mkdir(parents=True, exist_ok=True)
    snaps = []
    for idx, t in enumerate(traj.times):
        f = traj.state(idx)
        entry = {"t": float(t), "coefficients": f.coeffs.to_dict()["terms"],
                 "purity": analysis.purity_coefficients(f), "views": []}
        for k in sites:
            marg, th, ph, tt, pp, vals = _site_grid(f, k - 1, spec.grid_res)
            view = {"site": k, "purity": analysis.purity_coefficients(marg),
                    "peak": _peak(vals, th, ph)}
            if grid_dir:
                name = f"snapshot_{idx:03d}_site{k}.csv"
                (grid_dir / name).write_text(grid_to_csv(tt.reshape(-1, 1), pp.reshape(-1, 1), vals.reshape(-1)),
                                             encoding="utf-8")
                view["grid_csv"] = name
            entry["views"].append(view)
        snaps.append(entry)
    return {"schema": SCHEMA, "command": "evolve", "method": traj.meta.get("method", args.method or "rk4"),
            "seed": spec.seed, "model": dynamics.model_to_dict(model, t_final, dt),
            "state": state_name, "s": f0.s, "n_qubits": f0.n_qubits, "grid_res": spec.grid_res,
            "snapshots": snaps}


def cmd_grid(spec: RunSpec, args) -> str:
    f = _state_from(spec, args)
    site = args.site
    if f.n_qubits > 1 and site is None:
        raise UsageError("--site is required for multi-qubit states (marginal grid)")
    site = 1 if site is None else site
    if not 1 <= site <= f.n_qubits:
        raise ValidationError(f"--site must be in 1..{f.n_qubits}")
    _, _, _, tt, pp, vals = _site_grid(f, site - 1, spec.grid_res)
    return grid_to_csv(tt.reshape(-1, 1), pp.reshape(-1, 1), vals.reshape(-1))


def _mc(spec: RunSpec, args) -> estimation.McConfig:
    return estimation.McConfig(n_samples=args.samples, seed=spec.seed, n_workers=spec.workers)


def cmd_expect(spec: RunSpec, args) -> dict:
    f = _state_from(spec, args)
    if not args.obs:
        raise UsageError("--obs is required")
    obs = parse_observable(args.obs, f.n_qubits)
    method = args.method or "exact"
    out = {"schema": SCHEMA, "command": "expect", "method": method, "seed": spec.seed,
           "state": spec.state, "observable": obs.to_dict()["terms"], "s": f.s}
    if method == "exact":
        out.update(estimate=estimation.expectation_exact(f, obs), stderr=0.0)
    elif method == "mc":
        cfg = _mc(spec, args)
        est, err = estimation.expectation_mc(f, obs, cfg)
        out.update(estimate=est, stderr=err, n_samples=cfg.n_samples, workers=cfg.n_workers)
    elif method == "mgf-fd":
        total = 0.0
        for p, a in obs.items():
            if abs(a.imag) > 1e-12:
                raise ValidationError("mgf-fd needs a real observable")
            total += a.real * (1.0 if p.weight == 0 else estimation.mgf_moment(f, p, args.h, args.richardson))
        out.update(estimate=total, stderr=None, h=args.h, richardson=bool(args.richardson))
    else:
        raise ValidationError(f"unknown method {method!r} for expect")
    return out


def cmd_sample(spec: RunSpec, args) -> dict:
    f = _state_from(spec, args)
    method = args.method or "exact"
    if method not in ("exact", "mc"):
        raise ValidationError(f"unknown method {method!r} for sample")
    cfg = _mc(spec, args)
    shots = args.shots
    if shots < 1:
        raise ValidationError("--shots must be positive")
    draws = estimation.sample_basis(f, cfg, shots, method)
    counts: dict[str, int] = {}
    for b in draws:
        counts[b] = counts.get(b, 0) + 1
    return {"schema": SCHEMA, "command": "sample", "method": method, "seed": spec.seed,
            "state": spec.state, "shots": shots, "counts": dict(sorted(counts.items()))}


def cmd_moments(spec: RunSpec, args) -> dict:
    f = _state_from(spec, args)
    labels = [x.strip() for x in (args.obs or "").split(",") if x.strip()]
    if not labels:
        labels = [p.label for p in sorted(f.coeffs, key=lambda p: p.label) if p.weight > 0]
    rows = []
    for lab in labels:
        p = PauliString.from_label(lab)
        if p.n != f.n_qubits:
            raise ValidationError(f"string {lab} does not have {f.n_qubits} sites")
        est = 1.0 if p.weight == 0 else estimation.mgf_moment(f, p, args.h, args.richardson)
        exact = float(np.real(f.coeffs.get(p, 0.0)))
        rows.append({"string": lab, "estimate": est, "exact": exact, "abs_error": abs(est - exact)})
    return {"schema": SCHEMA, "command": "moments", "method": "mgf-fd", "seed": spec.seed,
            "state": spec.state, "s": f.s, "h": args.h, "richardson": bool(args.richardson),
            "moments": rows}


def cmd_diagnose(spec: RunSpec, args) -> dict:
    f = _state_from(spec, args)
    cfg = _mc(spec, args)
    rep = analysis.diagnostic_report(f, cfg)
    return {"schema": SCHEMA, "command": "diagnose", "method": rep["wehrl"]["method"],
            "seed": spec.seed, "state": spec.state, "report": rep}


HANDLERS = {"repr": cmd_repr, "evolve": cmd_evolve, "grid": cmd_grid, "expect": cmd_expect,
            "sample": cmd_sample, "moments": cmd_moments, "diagnose": cmd_diagnose}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state", help="library name (e.g. bell:phi+, ghz, classical) or coefficient JSON file")
    common.add_argument("--s", type=float, default=-1.0, help="representation index in [-1, 1] (default -1, Q)")
    common.add_argument("--n", type=int, help="qubit count for ghz, w and mixed:max")
    common.add_argument("--p", type=float, help="parameter of the classical state")
    common.add_argument("--beta", type=float, help="inverse temperature of the thermal families")
    common.add_argument("--seed", type=int, help=f"RNG seed (fallback: ${SEED_ENV}, then 0)")
    common.add_argument("--workers", type=int, default=1, help="Monte Carlo worker threads (default 1)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--grid-res", type=int, default=DEFAULT_GRID_RES,
                        help="grid points per axis per displayed sphere (default 121)")

    parser = argparse.ArgumentParser(prog="spinphase", description="Spin phase-space toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("repr", parents=[common], help="coefficient JSON of a state")

    ev = sub.add_parser("evolve", parents=[common], help="run a model and record snapshots")
    ev.add_argument("--model", help="model JSON file or a shipped spec: " + ", ".join(FIGURES))
    ev.add_argument("--t", type=float, help="final time (overrides the model spec)")
    ev.add_argument("--dt", type=float, help="step size (overrides the model spec)")
    ev.add_argument("--snapshots", help="count, or comma-separated times")
    ev.add_argument("--method", choices=["rk4", "exact_small"])
    ev.add_argument("--site", type=int, help="only view this site (1-based)")
    ev.add_argument("--grid-dir", help="directory for per-snapshot grid CSVs")

    gr = sub.add_parser("grid", parents=[common], help="grid CSV of a state (marginal for N > 1)")
    gr.add_argument("--site", type=int, help="site to display (1-based)")

    ex = sub.add_parser("expect", parents=[common], help="expectation value of an observable")
    ex.add_argument("--obs", help='Pauli sum such as "XXX" or "0.5*XX-ZZ", or a JSON file')
    ex.add_argument("--method", choices=["exact", "mc", "mgf-fd"])
    ex.add_argument("--samples", type=int, default=100_000)
    ex.add_argument("--h", type=float, default=1e-3)
    ex.add_argument("--richardson", action="store_true")

    sa = sub.add_parser("sample", parents=[common], help="computational-basis samples")
    sa.add_argument("--shots", type=int, default=1000)
    sa.add_argument("--method", choices=["exact", "mc"])
    sa.add_argument("--samples", type=int, default=20_000, help="MC samples per marginal (method mc)")

    mo = sub.add_parser("moments", parents=[common], help="Pauli moments from MGF differences")
    mo.add_argument("--obs", help="comma-separated strings (default: the state's support)")
    mo.add_argument("--h", type=float, default=1e-3)
    mo.add_argument("--richardson", action="store_true")

    di = sub.add_parser("diagnose", parents=[common], help="structure report")
    di.add_argument("--samples", type=int, default=50_000)
    return parser


def run(argv: Sequence[str] | None = None, write: bool = True) -> tuple[int, str]:
    """Parse, execute and return ``(exit code, rendered output)``.

    With ``write=False`` the output is only returned, not sent to ``--out``
    or stdout.
    """
    args = build_parser().parse_args(argv)
    spec = RunSpec(command=args.command, seed=resolve_seed(args.seed), s=args.s, state=args.state,
                   model=getattr(args, "model", None), out=args.out, grid_res=args.grid_res,
                   workers=args.workers)
    result = HANDLERS[args.command](spec, args)
    text = result if isinstance(result, str) else _dump(result)
    if write:
        _write(text, spec.out)
    return 0, text


def main(argv: Sequence[str] | None = None) -> int:
    try:
        code, _ = run(argv)
        return code
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SpinPhaseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

Exit codes: 0 success, 1 scientific failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .dynamics import (
    EnsembleError,
    HybridEnsemble,
    coevolve_overlap,
    density_matrix,
    ensemble_trajectories,
    flow_symplectic_check,
    hybrid_point,
    integrate,
    purity_series,
    quadratic_flow_oracle,
)
from .errors import ConvergenceError
from .maps import (
    MAPS,
    Method,
    SamplingError,
    TangentParams,
    closed_form_area,
    initial_point,
    sample_object_state,
    sweep_ratios,
    tangent_from_params,
)
from .phase_space import (
    HermitianOperator,
    PhaseSpace,
    TangentVector,
    fit_global_phase,
    observable_field,
    poisson_bracket,
    symplectic_form,
)
from .presets import PLUS, PRESET_NAMES, UP, classical_ensemble, get_preset, meanfield_oscillator

SEED_ENV = "SYMCLONE_SEED"
DEFAULT_SEED = 7
EXPECTED_RATIO = {
    "self-replication": 2.0,
    "quantum-cloning": 1.0,
    "quantum-cloning-fixed-machine": None,
    "hybrid-cloning": 1.0,
}
CONTROL_DEVIATION = 0.1
CONSERVATION_TOL = 1e-8
ORACLE_TOL = 1e-8


class ConfigError(ValueError):
    pass


# -- output helpers ---------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def build_report(config: dict, summary: dict, instances: list) -> dict:
    return {
        "config": config,
        "summary": summary,
        "instances": instances,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False)


def write_json(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_report(report))
        fh.write("\n")


def write_csv(header: list[str], rows, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=",")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _emit(report: dict, args, csv_table=None) -> None:
    if not args.output:
        return
    if getattr(args, "format", "json") == "csv":
        if csv_table is None:
            raise ConfigError("this command has no CSV output")
        write_csv(*csv_table, args.output)
    else:
        write_json(report, args.output)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


# -- argument types -------------------------------------------------------------------


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {s}")
    return v


def _nonnegative_float(s: str) -> float:
    v = float(s)
    if v < 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be non-negative, got {s}")
    return v


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None


# -- verify -----------------------------------------------------------------------------


def run_verify(map_name: str, n: int, seed: int, method: str, tol: Optional[float], jobs: int = 1):
    method = Method(method)
    if tol is None:
        tol = 1e-6 if method is Method.ANALYTIC else 1e-5
    sweep = sweep_ratios(MAPS[map_name](), n, seed, method, jobs=jobs)
    expected = EXPECTED_RATIO[map_name]
    ratios = sweep.ratios
    if expected is None:
        passed = bool(np.any(np.abs(ratios - 1.0) > CONTROL_DEVIATION))
    else:
        passed = bool(np.all(np.abs(ratios - expected) <= tol))
    summary = {
        "map": map_name,
        "expected_ratio": "none" if expected is None else expected,
        "observed_min": sweep.ratio_min,
        "observed_max": sweep.ratio_max,
        "observed_mean": sweep.ratio_mean,
        "max_deviation": None if expected is None else float(np.max(np.abs(ratios - expected))),
        "n": n,
        "method": method.value,
        "tolerance": tol,
        "pass": passed,
    }
    instances = [dict(v.to_dict(), index=i) for i, v in enumerate(sweep.verdicts)]
    return summary, instances


def cmd_verify(args) -> int:
    summary, instances = run_verify(args.map, args.n, args.seed, args.method, args.tol, args.jobs)
    _emit(build_report(_config(args), summary, instances), args)
    exp = summary["expected_ratio"]
    print(f"{args.map}: expected ratio {exp}, observed [{summary['observed_min']:.12g}, "
          f"{summary['observed_max']:.12g}] over {args.n} instances ({args.method}) -> "
          f"{'PASS' if summary['pass'] else 'FAIL'}")
    return 0 if summary["pass"] else 1


# -- evolve --------------------------------------------------------------------------------


def _coord_names(space: PhaseSpace) -> list[str]:
    nc, nq = space.n_classical, space.n_quantum
    return ([f"q{i + 1}" for i in range(nc)] + [f"p{i + 1}" for i in range(nc)]
            + [f"x{j + 1}" for j in range(nq)] + [f"y{j + 1}" for j in range(nq)])


def run_evolve(preset: str, t_final: float, dt: float, scheme: str = "yoshida4", tol: float = CONSERVATION_TOL):
    p = get_preset(preset)
    traj = integrate(p.hamiltonian, p.initial, t_final, dt, scheme=scheme)
    norms = traj.norms()
    summary = {
        "preset": preset,
        "t_final": traj.t_final,
        "steps": len(traj) - 1,
        "norm_drift": float(np.max(np.abs(norms - norms[0]))),
        "energy_drift": float(np.max(np.abs(traj.energies - traj.energies[0]))),
        "tolerance": tol,
    }
    passed = summary["norm_drift"] < tol and summary["energy_drift"] < tol
    if preset == "linear-sigma-z":
        exact = quadratic_flow_oracle(p.hamiltonian.op, p.initial.amplitudes(), traj.t_final)
        _, residual = fit_global_phase(traj.amplitudes()[-1], exact)
        summary["oracle_residual"] = residual
        passed = passed and residual < ORACLE_TOL
    summary["pass"] = bool(passed)
    return traj, summary


def cmd_evolve(args) -> int:
    traj, summary = run_evolve(args.preset, args.t_final, args.dt, args.scheme, args.tol)
    norms = traj.norms()
    idx = np.arange(0, len(traj), args.stride)
    if idx[-1] != len(traj) - 1:
        idx = np.append(idx, len(traj) - 1)
    header = ["t"] + _coord_names(traj.space) + ["energy", "norm"]
    rows = [[traj.times[i], *traj.states[i], traj.energies[i], norms[i]] for i in idx]
    instances = [dict(zip(header, map(float, r))) for r in rows]
    _emit(build_report(_config(args), summary, instances), args, (header, rows))
    line = (f"{args.preset}: t={summary['t_final']:.6g} norm drift {summary['norm_drift']:.3e}, "
            f"energy drift {summary['energy_drift']:.3e}")
    if "oracle_residual" in summary:
        line += f", oracle residual {summary['oracle_residual']:.3e}"
    print(line + f" -> {'PASS' if summary['pass'] else 'FAIL'}")
    return 0 if summary["pass"] else 1


# -- ensemble --------------------------------------------------------------------------------


def load_members(path: str) -> HybridEnsemble:
    """Read ``[{"weight": w, "q": [...], "p": [...], "psi": [[re, im], ...]}, ...]``."""
    mf = meanfield_oscillator()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        members = []
        for m in raw:
            psi = np.array([complex(re, im) for re, im in m["psi"]])
            members.append((float(m["weight"]), hybrid_point(mf, list(m["q"]) + list(m["p"]), psi)))
        return HybridEnsemble(tuple(members))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid ensemble file {path}: {exc}") from exc


def run_ensemble(distribution: str, t_final: float, dt: float, members: Optional[str] = None,
                 jobs: int = 1, mixing_threshold: float = 0.999):
    ens = load_members(members) if members else classical_ensemble(distribution)
    trajs = ensemble_trajectories(meanfield_oscillator(), ens, t_final, dt, jobs=jobs)
    series = purity_series(ens, trajs)
    rho = density_matrix(HybridEnsemble(tuple((w, tr.final) for (w, _), tr in zip(ens.members, trajs))))
    pure_expected = len(ens.members) == 1
    if pure_expected:
        passed = bool(np.all(np.abs(series - 1.0) <= 1e-8))
    else:
        passed = bool(series[-1] < mixing_threshold)
    summary = {
        "distribution": "custom" if members else distribution,
        "members": len(ens.members),
        "t_final": float(trajs[0].t_final),
        "expectation": "pure" if pure_expected else f"final purity < {mixing_threshold}",
        "initial_purity": float(series[0]),
        "final_purity": float(series[-1]),
        "min_purity": float(series.min()),
        "max_purity_deviation": float(np.max(np.abs(series - 1.0))),
        "density_matrix": {"real": rho.entries.real.tolist(), "imag": rho.entries.imag.tolist()},
        "pass": passed,
    }
    return trajs[0].times, series, summary


def cmd_ensemble(args) -> int:
    times, series, summary = run_ensemble(args.distribution, args.t_final, args.dt, args.members,
                                          args.jobs, args.mixing_threshold)
    idx = np.arange(0, len(times), args.stride)
    if idx[-1] != len(times) - 1:
        idx = np.append(idx, len(times) - 1)
    rows = [[times[i], series[i]] for i in idx]
    instances = [{"t": float(t), "purity": float(p)} for t, p in rows]
    _emit(build_report(_config(args), summary, instances), args, (["t", "purity"], rows))
    print(f"ensemble {summary['distribution']}: purity {summary['initial_purity']:.12g} -> "
          f"{summary['final_purity']:.12g} (min {summary['min_purity']:.12g}) -> "
          f"{'PASS' if summary['pass'] else 'FAIL'}")
    return 0 if summary["pass"] else 1


# -- oracle check ---------------------------------------------------------------------------


def _gate(name, value, tol, passed=None):
    ok = bool(value < tol) if passed is None else bool(passed)
    return {"gate": name, "value": float(value), "tolerance": tol, "pass": ok}


def run_oracle_check(method: str = "both", perturb: float = 0.0, points: int = 100,
                     instances: int = 1000, seed: int = DEFAULT_SEED) -> list[dict]:
    rng = np.random.default_rng(seed)
    gates = []
    maps = {name: MAPS[name]() for name in ("self-replication", "quantum-cloning", "hybrid-cloning")}

    if method in ("both", "analytic"):
        for name, m in maps.items():
            worst = 0.0
            for _ in range(points):
                x = initial_point(m, sample_object_state(rng, 0.0))
                jac = m.jacobian(x, Method.ANALYTIC) + perturb
                worst = max(worst, float(np.max(np.abs(jac - m.jacobian(x, Method.FINITE_DIFFERENCE)))))
            gates.append(_gate(f"jacobian-fd-vs-analytic[{name}]", worst, 1e-6))

    if method in ("both", "fd"):
        for name, m in maps.items():
            sweep = sweep_ratios(m, points, rng, Method.FINITE_DIFFERENCE)
            dev = float(np.max(np.abs(sweep.ratios - EXPECTED_RATIO[name])))
            gates.append(_gate(f"fd-ratio[{name}]", dev, 1e-5))

    sr = maps["self-replication"]
    worst = 0.0
    for _ in range(instances):
        u = sample_object_state(rng, 0.0)
        pg, ph = TangentParams(*rng.standard_normal(3)), TangentParams(*rng.standard_normal(3))
        g = tangent_from_params(sr, u, pg, normalize=False)
        h = tangent_from_params(sr, u, ph, normalize=False)
        worst = max(worst, abs(symplectic_form(g, h) - closed_form_area(u, pg, ph)))
    gates.append(_gate("closed-form-area", worst, 1e-12))

    q2 = PhaseSpace.quantum(2)
    worst = 0.0
    for _ in range(points):
        a, b = HermitianOperator.random(2, rng), HermitianOperator.random(2, rng)
        z = rng.standard_normal(4)
        point = initial_point_from(z, q2)
        lhs = poisson_bracket(observable_field(a, q2), observable_field(b, q2), point)
        c = point.amplitudes()
        rhs = (np.vdot(c, a.commutator(b) @ c) / 1j).real
        worst = max(worst, abs(lhs - rhs))
    gates.append(_gate("poisson-commutator", worst, 1e-9))

    p = get_preset("weinberg-quadratic")
    u = TangentVector(p.initial, rng.standard_normal(4))
    v = TangentVector(p.initial, rng.standard_normal(4))
    ratio = flow_symplectic_check(p.hamiltonian, p.initial, u, v, 1.0, 1e-3)
    gates.append(_gate("flow-symplectic[weinberg-quadratic]", abs(ratio - 1.0), 1e-6))
    return gates


def initial_point_from(z, space: PhaseSpace):
    from .phase_space import to_canonical

    c = z[:2] + 1j * z[2:]
    return to_canonical(c / np.linalg.norm(c), space)


def cmd_oracle_check(args) -> int:
    gates = run_oracle_check(args.method, args.perturb, args.points, args.instances, args.seed)
    passed = all(g["pass"] for g in gates)
    _emit(build_report(_config(args), {"pass": passed, "gates": len(gates)}, gates), args)
    for g in gates:
        print(f"{'PASS' if g['pass'] else 'FAIL'}  {g['gate']}: {g['value']:.3e} (tol {g['tolerance']:.0e})")
    if not passed:
        print("failing gates: " + ", ".join(g["gate"] for g in gates if not g["pass"]), file=sys.stderr)
    return 0 if passed else 1


# -- reproduce-paper --------------------------------------------------------------------------


def run_reproduce(n: int, seed: int, jobs: int = 1) -> list[dict]:
    rows = []
    for name, label in (
        ("self-replication", "self-replication, no machine"),
        ("quantum-cloning", "cloning, quantum machine m = conj(u)"),
        ("quantum-cloning-fixed-machine", "control: quantum machine fixed at (1,0)"),
        ("hybrid-cloning", "cloning, classical machine"),
    ):
        s, _ = run_verify(name, n, seed, "analytic", None, jobs)
        rows.append({"result": label, "expected": s["expected_ratio"],
                     "observed": f"[{s['observed_min']:.10f}, {s['observed_max']:.10f}]",
                     "pass": s["pass"]})
    _, _, delta = run_ensemble("delta", 2.0, 1e-3, jobs=jobs)
    rows.append({"result": "mean-field, delta classical start: purity", "expected": 1.0,
                 "observed": f"{delta['min_purity']:.12f}", "pass": delta["pass"]})
    _, _, mix = run_ensemble("two-point", 2.0, 1e-3, jobs=jobs)
    rows.append({"result": "mean-field, two-point classical start: purity at t=2", "expected": "< 0.999",
                 "observed": f"{mix['final_purity']:.6f}", "pass": mix["pass"]})
    overlap = coevolve_overlap(meanfield_oscillator(), UP, PLUS, [1.0, 0.0], "A", 5.0, 1e-3)
    var = float(np.var(overlap))
    rows.append({"result": "mean-field, shared driver: overlap variance", "expected": "< 1e-8",
                 "observed": f"{var:.3e}", "pass": var < 1e-8})
    return rows


def cmd_reproduce(args) -> int:
    rows = run_reproduce(args.n, args.seed, args.jobs)
    passed = all(r["pass"] for r in rows)
    _emit(build_report(_config(args), {"pass": passed}, rows), args)
    out = io.StringIO()
    width = max(len(r["result"]) for r in rows)
    out.write(f"{'result':<{width}}  {'expected':>10}  {'observed':<30} verdict\n")
    for r in rows:
        out.write(f"{r['result']:<{width}}  {str(r['expected']):>10}  {r['observed']:<30} "
                  f"{'PASS' if r['pass'] else 'FAIL'}\n")
    print(out.getvalue(), end="")
    return 0 if passed else 1


# -- parser ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symclone",
        description="Symplectic area checks for cloning maps and Hamiltonian flows "
                    "of quantum and hybrid systems.",
        epilog=f"The default seed is {DEFAULT_SEED}; set {SEED_ENV} to override it.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    seed = _default_seed()

    def common(p, formats=False):
        p.add_argument("--output", "-o", help="report path")
        if formats:
            p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("verify", help="area ratios of a cloning map over random instances")
    p.add_argument("--map", required=True, choices=sorted(MAPS))
    p.add_argument("-n", type=_positive_int, default=1000, help="number of instances")
    p.add_argument("--seed", type=int, default=seed, help=f"RNG seed (env {SEED_ENV})")
    p.add_argument("--method", choices=("analytic", "fd"), default="analytic")
    p.add_argument("--tol", type=_positive_float, default=None,
                   help="ratio tolerance (default 1e-6 analytic, 1e-5 fd)")
    p.add_argument("--jobs", type=_positive_int, default=1)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("evolve", help="integrate a preset Hamiltonian")
    p.add_argument("--preset", required=True, choices=PRESET_NAMES)
    p.add_argument("--t-final", type=_nonnegative_float, default=math.pi)
    p.add_argument("--dt", type=_positive_float, default=1e-3)
    p.add_argument("--scheme", choices=("yoshida4", "midpoint"), default="yoshida4")
    p.add_argument("--tol", type=_positive_float, default=CONSERVATION_TOL, help="conservation tolerance")
    p.add_argument("--stride", type=_positive_int, default=1, help="write every k-th sample")
    common(p, formats=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("ensemble", help="purity of the mean-field quantum marginal")
    p.add_argument("--preset", choices=("meanfield-oscillator",), default="meanfield-oscillator")
    p.add_argument("--distribution", choices=("delta", "two-point"), default="delta")
    p.add_argument("--members", help="JSON file with a custom ensemble")
    p.add_argument("--t-final", type=_nonnegative_float, default=2.0)
    p.add_argument("--dt", type=_positive_float, default=1e-3)
    p.add_argument("--mixing-threshold", type=_positive_float, default=0.999)
    p.add_argument("--stride", type=_positive_int, default=1)
    p.add_argument("--jobs", type=_positive_int, default=1)
    common(p, formats=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("oracle-check", help="finite-difference and closed-form oracle gates")
    p.add_argument("--method", choices=("both", "analytic", "fd"), default="both")
    p.add_argument("--perturb", type=float, default=0.0, help="offset added to analytic Jacobians")
    p.add_argument("--points", type=_positive_int, default=100)
    p.add_argument("--instances", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=seed)
    common(p)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("reproduce-paper", help="all headline results in one table")
    p.add_argument("-n", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--jobs", type=_positive_int, default=1)
    common(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, EnsembleError, SamplingError, ArithmeticError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

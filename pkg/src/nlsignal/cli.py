"""Command-line front end.

Subcommands ``evolve``, ``protocol``, ``lyapunov``, ``sweep`` and ``verify``
read a JSON experiment (``--config PATH`` or a shipped ``--recipe NAME``) and
write CSV / JSON files into ``--out DIR``.  Floats are written with 17
significant digits, so identical inputs give byte-identical files.

Exit codes: 0 success, 1 usage or configuration error, 2 numeric divergence
(partial output is kept and ends with an ``# error:`` trailer), 3 failed
verification.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfg
from .chaos import DistanceSeries, estimate_lyapunov, suggest_window, trajectory_distance_series
from .dynamics import Trajectory, integrate
from .errors import ConfigError, DivergenceError, NLSignalError
from .hilbert import bloch_vector, concurrence_from_amps, purity, reduced_b
from .protocols import (
    BranchEnsemble,
    evolve_ensemble,
    evolve_state,
    first_crossing,
    measure_on_a,
    trace_distance_series,
)
from .verify import run_suite, suite_ok

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_VERIFY = 0, 1, 2, 3
FLOAT_FMT = "%.17g"


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    return FLOAT_FMT % v


def write_csv(path: Path, header, rows, trailer=None):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
        if trailer:
            fh.write(f"# error: {trailer}\n")


def _write_json(path: Path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _pairs(matrix):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix)]


# -- evolve -----------------------------------------------------------------

def trajectory_table(traj: Trajectory):
    """Header and rows: t, Re/Im of each amplitude, norm, Bloch vector,
    concurrence, purity (qubit-only columns are dropped for larger factors)."""
    shape = traj.shape
    header = ["t"]
    for n in range(shape.total):
        j, k = shape.labels(n)
        header += [f"re_a{j}{k}", f"im_a{j}{k}"]
    header.append("norm")
    cols = [traj.times[:, None]]
    ri = np.empty((len(traj), 2 * shape.total))
    ri[:, 0::2] = traj.amps.real
    ri[:, 1::2] = traj.amps.imag
    cols += [ri, traj.norms()[:, None]]
    # Observables are reported for the normalized state; the norm column keeps the drift.
    unit = traj.amps / traj.norms()[:, None]
    rho = reduced_b(unit, shape)
    if shape.dim_b == 2:
        header += ["n_x", "n_y", "n_z"]
        cols.append(bloch_vector(rho))
    if (shape.dim_a, shape.dim_b) == (2, 2):
        header.append("concurrence")
        cols.append(concurrence_from_amps(unit, shape)[:, None])
    header.append("purity")
    cols.append(purity(rho)[:, None])
    return header, np.hstack(cols)


def _integrate_or_partial(psi0, exp):
    try:
        return integrate(psi0, exp.h, exp.nl, exp.grid.t_end, exp.grid.dt, exp.grid.sample_every), None
    except DivergenceError as err:
        return err.partial, err


def _write_trajectory(path, traj, err, shape):
    if traj is None:
        traj = Trajectory(shape, np.zeros(0), np.zeros((0, shape.total), dtype=complex))
    with np.errstate(over="ignore", invalid="ignore"):
        header, rows = trajectory_table(traj)
    write_csv(path, header, rows, trailer=str(err) if err else None)


def cmd_evolve(exp, out: Path, jobs: int = 1) -> int:
    if exp.protocol is not None:
        raise UsageError("evolve takes a config without a protocol block; use 'protocol'")
    pert = (exp.chaos or {}).get("perturbation")
    states = [exp.psi0]
    if pert and pert["kind"] == "state":
        states.append(cfg.build_state(pert["initial_state"], exp.shape, "chaos.perturbation.initial_state"))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda s: _integrate_or_partial(s, exp), states))
    traj, err = results[0]
    _write_trajectory(out / "trajectory.csv", traj, err, exp.shape)
    status = EXIT_DIVERGENCE if err else EXIT_OK
    if len(results) == 2:
        traj2, err2 = results[1]
        _write_trajectory(out / "trajectory_perturbed.csv", traj2, err2, exp.shape)
        if err2:
            status = EXIT_DIVERGENCE
        if traj is not None and traj2 is not None:
            n = min(len(traj), len(traj2))
            a, b = traj.amps[:n], traj2.amps[:n]
            ov = np.abs(np.einsum("ti,ti->t", a.conj(), b)) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            header, cols = ["t", "overlap"], [traj.times[:n, None], ov[:, None]]
            if exp.shape.dim_b == 2:
                na = bloch_vector(reduced_b(a, exp.shape))
                nb = bloch_vector(reduced_b(b, exp.shape))
                header.append("bloch_distance")
                cols.append(np.linalg.norm(na - nb, axis=1)[:, None])
            first = err or err2
            write_csv(out / "comparison.csv", header, np.hstack(cols), trailer=str(first) if first else None)
    for e in (r[1] for r in results):
        if e:
            print(f"error: {e}", file=sys.stderr)
    return status


# -- protocol ---------------------------------------------------------------

def _protocol_ensembles(exp, inputs):
    """((ensemble, hamiltonians) for arm A, same for arm B)."""
    kind = inputs["kind"]
    src = exp.psi0
    if kind == "observable_choice":
        return (measure_on_a(src, inputs["x"]), exp.h), (measure_on_a(src, inputs["x_prime"]), exp.h)
    if kind == "measure_or_not":
        return (BranchEnsemble.pure(src), exp.h), (measure_on_a(src, inputs["x"]), exp.h)
    return (BranchEnsemble.pure(src), exp.h), (BranchEnsemble.pure(src), inputs["h_prime"])


def run_protocol_arms(exp, jobs: int = 1):
    inputs = cfg.protocol_inputs(exp)
    arms = _protocol_ensembles(exp, inputs)
    with ThreadPoolExecutor(max_workers=max(1, min(jobs, 2))) as pool:
        futures = [pool.submit(evolve_ensemble, ens, h, exp.nl, exp.grid) for ens, h in arms]
        series = [f.result() for f in futures]
    return inputs, series[0], series[1]


def _arm_table(series, dim_b):
    header = ["t"]
    cols = [series.times[:, None]]
    if dim_b == 2:
        header += ["n_x", "n_y", "n_z"]
        cols.append(series.blochs)
    header += [f"rho_{k}{k}" for k in range(dim_b)]
    cols.append(series.diagonals)
    return header, np.hstack(cols)


def protocol_summary(inputs, s_a, s_b, dim_b):
    d = np.abs(s_a.expectation(inputs["observable"]) - s_b.expectation(inputs["observable"]))
    td = trace_distance_series(s_a, s_b)
    i = int(np.argmax(d))
    summary = {
        "kind": inputs["kind"],
        "observable": _pairs(inputs["observable"]),
        "max_distinguishability": float(d[i]),
        "t_at_max": float(s_a.times[i]),
        "max_trace_distance": float(td.max()),
        "threshold": inputs["threshold"],
        "first_crossing": first_crossing(s_a.times, d, inputs["threshold"]),
    }
    if dim_b == 2:
        dn = np.abs(s_a.blochs - s_b.blochs).max(axis=0)
        summary["max_abs_delta_n"] = {"x": float(dn[0]), "y": float(dn[1]), "z": float(dn[2])}
    return summary, d, td


def cmd_protocol(exp, out: Path, jobs: int = 1) -> int:
    if exp.protocol is None:
        raise UsageError("protocol needs a 'protocol' block in the config")
    try:
        inputs, s_a, s_b = run_protocol_arms(exp, jobs)
    except DivergenceError as err:
        _write_json(out / "summary.json", {"error": str(err), "branch": err.branch, "step": err.step})
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    dim_b = exp.shape.dim_b
    for name, s in (("arm_a.csv", s_a), ("arm_b.csv", s_b)):
        write_csv(out / name, *_arm_table(s, dim_b))
    summary, d, td = protocol_summary(inputs, s_a, s_b, dim_b)
    write_csv(out / "distinguishability.csv", ["t", "distinguishability", "trace_distance"],
              np.column_stack([s_a.times, d, td]))
    _write_json(out / "summary.json", summary)
    return EXIT_OK


# -- lyapunov ---------------------------------------------------------------

def distance_series(exp, jobs: int = 1) -> DistanceSeries:
    """Separation of Bob's trajectories for the configured perturbation."""
    chaos = exp.chaos or {}
    pert = chaos.get("perturbation")
    if pert is None:
        raise UsageError("lyapunov needs a 'chaos.perturbation' block")
    eps = float(chaos.get("epsilon_shift", 0.0))
    kind = pert["kind"]
    if kind == "synthetic":
        # Self-test: an exact exponential, so the fitted rate must equal ``rate``.
        t = exp.grid.times
        series = DistanceSeries(t, float(pert.get("d0", 1.0)) * np.exp(float(pert["rate"]) * t))
        return series.shifted(eps) if eps else series
    if kind == "protocol":
        _, s_a, s_b = run_protocol_arms(exp, jobs)
        return trajectory_distance_series(s_a, s_b, epsilon_shift=eps)
    if kind == "state":
        other = cfg.parse(exp.raw | {"initial_state": pert["initial_state"]})
        runs = [(exp.psi0, exp), (other.psi0, exp)]
        offset = None
    else:
        other = cfg.parse(cfg.perturbed_config(exp.raw, pert["path"], pert["offset"]))
        runs = [(exp.psi0, exp), (exp.psi0, other)]
        offset = float(pert["offset"])
    with ThreadPoolExecutor(max_workers=max(1, min(jobs, 2))) as pool:
        s1, s2 = pool.map(lambda r: evolve_state(r[0], r[1].h, r[1].nl, r[1].grid), runs)
    return trajectory_distance_series(s1, s2, parameter_offset=offset, epsilon_shift=eps)


def lyapunov_result(exp, jobs: int = 1):
    series = distance_series(exp, jobs)
    t_max = (exp.chaos or {}).get("t_max", "auto")
    if t_max == "auto":
        t_max = suggest_window(series)
    return series, estimate_lyapunov(series, float(t_max))


def cmd_lyapunov(exp, out: Path, jobs: int = 1) -> int:
    try:
        series, est = lyapunov_result(exp, jobs)
    except DivergenceError as err:
        _write_json(out / "lyapunov.json", {"error": str(err), "step": err.step})
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    write_csv(out / "log_distance.csv", ["t", "distance", "log_ratio"],
              np.column_stack([series.times, series.values, series.log_ratio()]))
    result = est.as_dict() | {
        "window": list(est.window),
        "epsilon_shift": series.epsilon_shift,
        "perturbation": exp.chaos["perturbation"]["kind"],
        "d0": float(series.values[0]),
    }
    _write_json(out / "lyapunov.json", result)
    return EXIT_OK


# -- sweep ------------------------------------------------------------------

def _sweep_row(raw, axis, value, seed, jobs):
    exp = cfg.parse(cfg.set_path(raw, axis, value), seed=seed)
    row = [value]
    if exp.protocol is not None:
        inputs, s_a, s_b = run_protocol_arms(exp, jobs)
        summary, _, _ = protocol_summary(inputs, s_a, s_b, exp.shape.dim_b)
        fc = summary["first_crossing"]
        row += [summary["max_distinguishability"], summary["max_trace_distance"],
                float("nan") if fc is None else fc]
    if exp.chaos is not None and "perturbation" in exp.chaos:
        _, est = lyapunov_result(exp, jobs)
        row += [est.lambda_, est.cv, est.window[1]]
    if exp.protocol is None and exp.chaos is None:
        traj = integrate(exp.psi0, exp.h, exp.nl, exp.grid.t_end, exp.grid.dt, exp.grid.sample_every)
        header, rows = trajectory_table(traj)
        row += [traj.max_norm_drift()] + [rows[-1, header.index(c)] for c in ("n_x", "n_y", "n_z") if c in header]
    return row


def sweep_header(raw, axis):
    header = [axis]
    if "protocol" in raw:
        header += ["max_distinguishability", "max_trace_distance", "first_crossing"]
    if "perturbation" in raw.get("chaos", {}):
        header += ["lambda", "cv", "t_max"]
    if "protocol" not in raw and "chaos" not in raw:
        header += ["max_norm_drift", "final_n_x", "final_n_y", "final_n_z"]
    return header


def parse_values(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--values must be comma-separated numbers, got {text!r}") from None


def cmd_sweep(exp, out: Path, axis: str, values, seed: int = 0, jobs: int = 1) -> int:
    raw = exp.raw
    # Validate the axis before any work; per-row config errors also surface as exit 1.
    probe = cfg.get_path(raw, axis) if _has_path(raw, axis) else 0.0
    if not isinstance(probe, (int, float)) or isinstance(probe, bool):
        raise ConfigError(f"{axis}: sweep axis must address a real number")
    cfg.parse(cfg.set_path(raw, axis, probe), seed=seed)
    header = sweep_header(raw, axis)
    if exp.shape.dim_b != 2 and header[-1] == "final_n_z":
        header = header[:-3]
    rows, err = [], None
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [pool.submit(_sweep_row, raw, axis, v, seed, 1) for v in values]
        for f in futures:
            try:
                rows.append(f.result())
            except DivergenceError as e:
                err = err or e
    write_csv(out / "sweep.csv", header, rows, trailer=str(err) if err else None)
    if err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    return EXIT_OK


def _has_path(raw, path):
    try:
        cfg.get_path(raw, path)
        return True
    except ConfigError:
        return False


# -- verify -----------------------------------------------------------------

def cmd_verify(seed: int, tolerance_scale: float = 1.0, controls_only: bool = False, jobs: int = 1,
               stream=None) -> int:
    stream = stream or sys.stdout
    reports = run_suite(seed, tolerance_scale=tolerance_scale, controls_only=controls_only, jobs=jobs)
    for r in reports:
        stream.write(r.to_json() + "\n")
    ok = suite_ok(reports)
    stream.write(json.dumps({"summary": True, "ok": ok, "n_checks": len(reports),
                             "n_unexpected": sum(not r.as_expected for r in reports)}, sort_keys=True) + "\n")
    return EXIT_OK if ok else EXIT_VERIFY


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlsignal", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            src = p.add_mutually_exclusive_group(required=False)
            src.add_argument("--config", type=Path, help="JSON experiment file")
            src.add_argument("--recipe", help="name of a shipped recipe (see 'nlsignal recipes')")
            p.add_argument("--out", type=Path, default=Path("."), help="output directory (created)")
            p.add_argument("--dump-config", action="store_true",
                           help="print the parsed configuration as canonical JSON and exit")
        p.add_argument("--seed", type=int, default=0, help="seed for random states and the verification suite")
        p.add_argument("--jobs", type=int, default=1, help="concurrent integrations")

    for name, text in (("evolve", "integrate one state and write its trajectory"),
                       ("protocol", "run a two-arm signalling protocol"),
                       ("lyapunov", "trajectory separation and Lyapunov fit")):
        common(sub.add_parser(name, help=text))
    sw = sub.add_parser("sweep", help="repeat a run over values of one scalar config entry")
    common(sw)
    sw.add_argument("--axis", required=True, help="dotted path, e.g. system.nonlinearity.g")
    sw.add_argument("--values", required=True, help="comma-separated numbers (empty for none)")
    ver = sub.add_parser("verify", help="run the property suite; JSON lines on stdout")
    common(ver, needs_config=False)
    ver.add_argument("--tolerance-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    ver.add_argument("--controls-only", action="store_true", help="run only the sharpness controls")
    sub.add_parser("recipes", help="list shipped recipe names")
    return parser


def _load_experiment(args):
    if args.config is None and args.recipe is None:
        raise UsageError("one of --config or --recipe is required")
    raw = cfg.load(args.config) if args.config is not None else cfg.load_recipe(args.recipe)
    return cfg.parse(raw, seed=args.seed)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "recipes":
            print("\n".join(cfg.recipe_names()))
            return EXIT_OK
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        if args.command == "verify":
            return cmd_verify(args.seed, args.tolerance_scale, args.controls_only, args.jobs)
        exp = _load_experiment(args)
        if args.dump_config:
            print(cfg.dump(exp))
            return EXIT_OK
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "evolve":
            return cmd_evolve(exp, args.out, args.jobs)
        if args.command == "protocol":
            return cmd_protocol(exp, args.out, args.jobs)
        if args.command == "lyapunov":
            return cmd_lyapunov(exp, args.out, args.jobs)
        return cmd_sweep(exp, args.out, args.axis, parse_values(args.values), args.seed, args.jobs)
    except (UsageError, ConfigError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except NLSignalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

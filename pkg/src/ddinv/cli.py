"""Command-line front end.

Subcommands::

    simulate-data   generate an open-loop experiment and write it to disk
    synthesize      solve one synthesis problem described by a config file
    verify          re-check the certificates of a stored result
    platoon-demo    run the built-in two-vehicle benchmark end to end
    sweep           map feasibility over a (T, delta) grid, seed by seed

Exit codes: 0 feasible/pass, 1 infeasible/fail, 2 operational error.  Every
randomized step takes an explicit seed and records it in its outputs, so any
produced file can be regenerated bit for bit.
"""

import argparse
import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from . import fileio, platoon
from .dataset import (DisturbanceSet, build_consistency_set, consistency_rows)
from .errors import (DimensionError, EmptySetError, ProblemTooLargeError,
                     SolverFailure, UnboundedSetError)
from .farkas import (CERT_TOL, ContainmentProblem, FarkasCertificate,
                     verify_certificate)
from .polyhedra import HPolyhedron, VPolytope, enumerate_vertices
from .synthesis import (SynthesisOptions, max_delta_bisection,
                        synthesize_data_driven, synthesize_model_based,
                        synthesize_vertex_models)
from .verify import simulate_closed_loop

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_ERROR = 2


def _load_set(spec: dict, base: Path) -> HPolyhedron:
    if "combined" in spec:
        return fileio.load_polyhedron(base / spec["combined"])
    return fileio.load_polyhedron(base / spec["A"], base / spec["b"])


def _make_options(raw: dict) -> SynthesisOptions:
    opts = SynthesisOptions()
    known = ("minimize_consistency", "margin", "certificate_tol",
             "variable_cap", "scale_rows")
    for key in raw:
        if key not in known:
            raise ValueError(f"config: unknown option {key!r}; known: {known}")
        setattr(opts, key, raw[key])
    return opts


def _options_from_config(cfg: dict) -> SynthesisOptions:
    return _make_options(cfg.get("options", {}))


def _run_synthesis(cfg: dict, base: Path, overrides: dict):
    formulation = overrides.get("formulation") or cfg.get("formulation")
    if formulation not in ("model", "data", "vertex"):
        raise ValueError(f"config: formulation must be model, data or vertex, "
                         f"got {formulation!r}")
    delta = overrides.get("delta")
    if delta is None:
        delta = cfg.get("delta")
    if delta is None:
        raise ValueError("config: missing delta")
    S = _load_set(cfg["state_set"], base)
    D_mat = fileio.load_matrix(base / cfg["disturbance_matrix"])
    dist = DisturbanceSet(D_mat, float(delta))
    input_set = None
    if "input_set" in cfg:
        input_set = _load_set(cfg["input_set"], base)
    opts = _options_from_config(cfg)

    if formulation == "model":
        A = fileio.load_matrix(base / cfg["model"]["A"])
        B = fileio.load_matrix(base / cfg["model"]["B"])
        return synthesize_model_based(A, B, S, dist, input_set, opts), cfg
    if formulation == "data":
        manifest = base / cfg["data_manifest"]
        data, meta = fileio.load_dataset(manifest)
        T_cap = overrides.get("T")
        if T_cap:
            data = data.truncated(int(T_cap))
        result = synthesize_data_driven(data, S, dist, input_set, opts)
        result.config["data_manifest"] = str(manifest.resolve())
        return result, cfg
    spec = cfg["vertices"]
    verts = VPolytope(fileio.load_matrix(base / spec["file"]))
    result = synthesize_vertex_models(verts, int(spec["n"]), int(spec["m"]),
                                      S, dist, input_set, opts)
    return result, cfg


def _resolve_paths(obj, base: Path):
    """Resolve every path-valued string in a config fragment against base."""
    if isinstance(obj, str):
        return str((base / obj).resolve())
    if isinstance(obj, dict):
        return {k: _resolve_paths(v, base) for k, v in obj.items()}
    return obj


_PATH_KEYS = ("state_set", "disturbance_matrix", "input_set", "model",
              "data_manifest", "vertices")


def cmd_synthesize(args) -> int:
    cfg = fileio.read_json(args.config)
    base = Path(args.config).parent
    overrides = {"formulation": args.formulation, "delta": args.delta,
                 "T": args.T}
    result, cfg = _run_synthesis(cfg, base, overrides)
    out = Path(args.out)
    extra = {
        "inputs": {k: _resolve_paths(v, base) if k in _PATH_KEYS else v
                   for k, v in cfg.items() if k != "options"},
    }
    fileio.save_synthesis_result(out, result, extra)
    print(f"synthesize: {result.status}"
          + (f", certificates {'pass' if result.verification['passed'] else 'FAIL'}"
             if result.verification else ""))
    if result.status == "feasible":
        ok = result.verification is None or result.verification["passed"]
        return EXIT_OK if ok else EXIT_INFEASIBLE
    if result.status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_ERROR


def cmd_simulate_data(args) -> int:
    out = Path(args.out)
    data = platoon.generate_dataset(T=args.T, delta=args.delta, seed=args.seed,
                                    input_range=args.input_range)
    fileio.save_dataset(out, data, seed=args.seed, delta=args.delta,
                        mode="platoon-uniform",
                        extra={"input_range": args.input_range})
    print(f"simulate-data: wrote T={args.T} columns to {out}")
    return EXIT_OK


def _reverify_result(result_dir: Path, tol: float):
    """Rebuild each stored certificate's containment system and re-check it.

    Returns ``(ok, reports)`` or ``(None, [])`` when the stored result is not
    feasible (there is nothing to verify).
    """
    summary = fileio.read_json(result_dir / "result.json")
    if summary.get("status") != "feasible":
        return None, []
    cfg = summary.get("inputs", {})
    config = summary.get("config", {})
    K = fileio.load_matrix(result_dir / summary["gain_file"])
    S = _load_set(_as_set_spec(cfg["state_set"]), Path())
    D_mat = fileio.load_matrix(cfg["disturbance_matrix"])
    delta = float(config["delta"])
    dist = DisturbanceSet(D_mat, delta)
    formulation = config.get("formulation")

    reports = []
    names = summary.get("certificates", [])
    certs = []
    for name in names:
        E = fileio.load_matrix(result_dir / "certificates" / f"{name}.csv")
        meta = fileio.read_json(result_dir / "certificates" / f"{name}.json")
        certs.append((int(meta["vertex_index"]), E))

    from .synthesis import data_condition_lhs, model_condition_lhs
    if formulation == "model":
        A = fileio.load_matrix(cfg["model"]["A"])
        B = fileio.load_matrix(cfg["model"]["B"])
        n, n_s, n_d = A.shape[0], S.num_rows, D_mat.shape[0]
        sys_mat = np.block([[S.A, np.zeros((n_s, n))],
                            [np.zeros((n_d, n)), D_mat]])
        sys_off = np.concatenate([np.ones(n_s), delta * np.ones(n_d)])
        for _, E in certs:
            prob = ContainmentProblem(A=sys_mat, c=sys_off,
                                      B=model_condition_lhs(S.A, A, B, K),
                                      d=np.ones(n_s))
            reports.append(verify_certificate(prob, FarkasCertificate(E), tol))
    elif formulation == "data":
        data, _ = fileio.load_dataset(config["data_manifest"])
        H, h = consistency_rows(data, dist)
        row_map_file = summary.get("consistency_row_map_file")
        if row_map_file:
            kept = fileio.load_matrix(result_dir / row_map_file).ravel().astype(int)
            H, h = H[kept], h[kept]
        verts = enumerate_vertices(S)
        n_d = D_mat.shape[0]
        sys_mat = np.block([
            [D_mat, np.zeros((n_d, H.shape[1]))],
            [np.zeros((H.shape[0], D_mat.shape[1])), H]])
        sys_off = np.concatenate([delta * np.ones(n_d), h])
        for idx, E in certs:
            lhs = data_condition_lhs(S.A, verts.vertices[idx], K)
            prob = ContainmentProblem(A=sys_mat, c=sys_off, B=lhs,
                                      d=np.ones(S.num_rows))
            reports.append(verify_certificate(prob, FarkasCertificate(E), tol))
    elif formulation == "vertex":
        spec = cfg["vertices"]
        V_list = fileio.load_matrix(spec["file"] if isinstance(spec, str)
                                    else spec["file"])
        n, m = int(config["n"]), int(config["m"])
        n_s, n_d = S.num_rows, D_mat.shape[0]
        sys_mat = np.block([[S.A, np.zeros((n_s, n))],
                            [np.zeros((n_d, n)), D_mat]])
        sys_off = np.concatenate([np.ones(n_s), delta * np.ones(n_d)])
        for idx, E in certs:
            V = V_list[idx].reshape((n, n + m), order="F")
            prob = ContainmentProblem(A=sys_mat, c=sys_off,
                                      B=model_condition_lhs(S.A, V[:, :n],
                                                            V[:, n:], K),
                                      d=np.ones(n_s))
            reports.append(verify_certificate(prob, FarkasCertificate(E), tol))
    else:
        raise ValueError(f"unknown formulation {formulation!r} in stored result")
    return all(r.passed for r in reports), reports


def _as_set_spec(value):
    # stored inputs may hold resolved path strings for combined files
    if isinstance(value, str):
        return {"combined": value}
    return value


def cmd_verify(args) -> int:
    ok, reports = _reverify_result(Path(args.result), args.tol)
    if ok is None:
        print("verify: stored result is not feasible; nothing to verify")
        return EXIT_INFEASIBLE
    for i, rep in enumerate(reports):
        print(f"certificate {i}: {rep}")
    print(f"verify: {'pass' if ok else 'FAIL'} ({len(reports)} certificates)")
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_platoon_demo(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    A, B = platoon.discrete_matrices()
    S = platoon.state_set()
    dist = platoon.disturbance_set(args.delta)

    print(f"platoon-demo: T={args.T} delta={args.delta} seed={args.seed}")
    data = platoon.generate_dataset(T=args.T, delta=args.delta, seed=args.seed)
    manifest = fileio.save_dataset(out / "dataset", data, seed=args.seed,
                                   delta=args.delta, mode="platoon-uniform")
    fileio.save_polyhedron(S, out / "S.csv")
    fileio.save_matrix(out / "D.csv", platoon.D_MATRIX)
    fileio.save_matrix(out / "A.csv", A)
    fileio.save_matrix(out / "B.csv", B)
    common_inputs = {"state_set": str((out / "S.csv").resolve()),
                     "disturbance_matrix": str((out / "D.csv").resolve()),
                     "model": {"A": str((out / "A.csv").resolve()),
                               "B": str((out / "B.csv").resolve())}}

    res_mb = synthesize_model_based(A, B, S, dist)
    print(f"  model-based: {res_mb.status}")
    fileio.save_synthesis_result(out / "model_based", res_mb,
                                 {"inputs": common_inputs})

    res_dd = synthesize_data_driven(data, S, dist)
    res_dd.config["data_manifest"] = str(manifest.resolve())
    verified = res_dd.verification["passed"] if res_dd.verification else None
    print(f"  data-driven: {res_dd.status}"
          + (f" (certificates {'pass' if verified else 'FAIL'})"
             if verified is not None else ""))
    fileio.save_synthesis_result(out / "data_driven", res_dd,
                                 {"inputs": common_inputs})

    exits = 0
    if res_dd.feasible:
        traj_dir = out / "trajectories"
        traj_dir.mkdir(exist_ok=True)
        verts = enumerate_vertices(S)
        for i, x0 in enumerate(verts.vertices):
            traj = simulate_closed_loop(A, B, res_dd.K, x0, dist,
                                        steps=args.steps, policy="vertex_random",
                                        seed=args.seed + i, S=S)
            fileio.save_trajectory(traj_dir / f"vertex_{i:02d}.csv", traj)
            if traj.first_exit_step is not None:
                exits += 1
        print(f"  simulation: {verts.num_vertices} runs of {args.steps} steps, "
              f"{exits} exited the target set")

    summary = {
        "T": args.T, "delta": args.delta, "seed": args.seed,
        "model_based_status": res_mb.status,
        "data_driven_status": res_dd.status,
        "data_driven_certificates_pass": verified,
        "simulated_exits": exits if res_dd.feasible else None,
    }
    fileio.write_json(out / "summary.json", summary)
    if res_dd.feasible and res_mb.feasible:
        return EXIT_OK if (verified and exits == 0) else EXIT_INFEASIBLE
    return EXIT_INFEASIBLE


def _delta_grid(cfg) -> list:
    grid = cfg["delta_grid"]
    if isinstance(grid, dict):
        start, stop, step = grid["start"], grid["stop"], grid["step"]
        count = int(round((stop - start) / step)) + 1
        return [start + k * step for k in range(count)]
    return list(grid)


def _sweep_cell(task: dict) -> dict:
    """One (T, delta, seed) synthesis; module-level so workers can pickle it."""
    t0 = time.perf_counter()
    try:
        data = platoon.generate_dataset(T=task["T"], delta=task["gen_delta"],
                                        seed=task["seed"],
                                        input_range=task["input_range"])
        if task.get("truncate_to"):
            data = data.truncated(task["truncate_to"])
        S = platoon.state_set()
        dist = platoon.disturbance_set(task["delta"])
        opts = _make_options(task.get("options", {}))
        res = synthesize_data_driven(data, S, dist, options=opts)
        status = res.status
    except (EmptySetError, UnboundedSetError, ProblemTooLargeError,
            SolverFailure, DimensionError) as exc:
        status = f"error: {exc}"
    return {"T": task.get("truncate_to") or task["T"], "delta": task["delta"],
            "seed": task["seed"], "status": status,
            "solve_seconds": time.perf_counter() - t0}


def _make_cell_task(static: dict, T: int, delta: float, seed: int) -> dict:
    task = {"T": T, "delta": delta, "seed": seed,
            "input_range": static["input_range"], "options": static["options"]}
    if static["policy"] == "nested":
        task.update(T=static["T_max"], truncate_to=T,
                    gen_delta=static["gen_delta"])
    else:
        task.update(gen_delta=delta)
    return task


def _bisect_column(static: dict, deltas: list, T: int, seed: int):
    """Largest feasible grid delta for one (T, seed), assuming monotonicity."""
    local = []
    lo, hi = 0, len(deltas) - 1
    res = _sweep_cell(_make_cell_task(static, T, deltas[lo], seed))
    local.append(res)
    if res["status"] != "feasible":
        return local, None
    if hi == lo:
        return local, deltas[lo]
    res = _sweep_cell(_make_cell_task(static, T, deltas[hi], seed))
    local.append(res)
    if res["status"] == "feasible":
        return local, deltas[hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        res = _sweep_cell(_make_cell_task(static, T, deltas[mid], seed))
        local.append(res)
        if res["status"] == "feasible":
            lo = mid
        else:
            hi = mid
    return local, deltas[lo]


def _write_sweep_rows(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T", "delta", "seed", "status", "solve_seconds"])
        for row in sorted(rows, key=lambda r: (r["T"], r["delta"], r["seed"])):
            writer.writerow([row["T"], f"{row['delta']:.6g}", row["seed"],
                             row["status"], f"{row['solve_seconds']:.3f}"])


def run_sweep(cfg: dict, out_dir, jobs: int = 1) -> list:
    """Feasibility map over a T-grid and a delta-grid.

    ``mode`` "grid" solves every cell; "max-delta" bisects each (T, seed)
    column over the delta grid assuming monotone feasibility and probes only
    O(log) cells.  Data policy "independent" draws a fresh experiment per
    cell with the disturbance level of that cell; "nested" draws one long
    experiment per (T_max, seed) at a fixed generation level and truncates,
    so feasible cells are nested across T by construction.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    T_grid = list(cfg["T_grid"])
    deltas = _delta_grid(cfg)
    seeds = list(cfg.get("seeds", [0]))
    mode = cfg.get("mode", "grid")
    policy = cfg.get("data_policy", "independent")
    input_range = cfg.get("input_range", platoon.INPUT_RANGE)
    options = cfg.get("options", {})
    static = {"input_range": input_range, "options": options, "policy": policy,
              "T_max": max(T_grid),
              "gen_delta": cfg.get("nested_generation_delta", min(deltas))}

    rows = []
    if mode == "grid":
        tasks = [_make_cell_task(static, T, d, s)
                 for T in T_grid for d in deltas for s in seeds]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_sweep_cell, t) for t in tasks]
                for fut in as_completed(futures):
                    rows.append(fut.result())
        else:
            rows = [_sweep_cell(t) for t in tasks]
    elif mode == "max-delta":
        max_rows = []
        columns = [(T, s) for T in T_grid for s in seeds]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = {pool.submit(_bisect_column, static, deltas, T, s): (T, s)
                           for T, s in columns}
                for fut in as_completed(futures):
                    T, s = futures[fut]
                    local, dmax = fut.result()
                    rows.extend(local)
                    max_rows.append({"T": T, "seed": s, "max_delta": dmax})
        else:
            for T, s in columns:
                local, dmax = _bisect_column(static, deltas, T, s)
                rows.extend(local)
                max_rows.append({"T": T, "seed": s, "max_delta": dmax})
        with open(out_dir / "max_delta.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["T", "seed", "max_delta"])
            for row in sorted(max_rows, key=lambda r: (r["T"], r["seed"])):
                writer.writerow([row["T"], row["seed"],
                                 "" if row["max_delta"] is None
                                 else f"{row['max_delta']:.6g}"])
    else:
        raise ValueError(f"unknown sweep mode {mode!r}")

    _write_sweep_rows(out_dir / "sweep.csv", rows)
    return rows


def cmd_sweep(args) -> int:
    cfg = fileio.read_json(args.config)
    rows = run_sweep(cfg, args.out, jobs=args.jobs)
    n_err = sum(1 for r in rows if r["status"].startswith("error"))
    n_feas = sum(1 for r in rows if r["status"] == "feasible")
    print(f"sweep: {len(rows)} cells solved, {n_feas} feasible, {n_err} errors; "
          f"table in {Path(args.out) / 'sweep.csv'}")
    return EXIT_OK if n_err == 0 else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddinv",
        description="Data-driven synthesis of robustly invariant polyhedral sets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-data", help="generate benchmark experiment data")
    p.add_argument("--T", type=int, default=1600)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input-range", type=float, default=platoon.INPUT_RANGE)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_data)

    p = sub.add_parser("synthesize", help="solve a synthesis problem from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--delta", type=float, default=None, help="override config delta")
    p.add_argument("--T", type=int, default=None,
                   help="truncate the dataset to its first T columns")
    p.add_argument("--formulation", choices=("model", "data", "vertex"),
                   default=None, help="override config formulation")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="re-verify the certificates of a stored result")
    p.add_argument("--result", required=True, help="directory written by synthesize")
    p.add_argument("--tol", type=float, default=CERT_TOL)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("platoon-demo", help="run the built-in benchmark end to end")
    p.add_argument("--T", type=int, default=1600)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_platoon_demo)

    p = sub.add_parser("sweep", help="feasibility map over (T, delta) grids")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EmptySetError, UnboundedSetError, DimensionError,
            ProblemTooLargeError, SolverFailure, ValueError, OSError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""File formats shared across the toolkit.

Matrices are plain-text CSV: one matrix row per line, comma-separated fields,
decimal point, no header.  Polyhedra are either a pair of files (A and b) or
a single file with b as the final column.  Everything structured (configs,
dataset manifests, result summaries, certificate metadata) is JSON with
documented keys, kept separate from the matrices so the numeric files stay
tool-friendly and diffs stay readable.
"""

import json
from pathlib import Path

import numpy as np

from .dataset import ExperimentData
from .polyhedra import HPolyhedron
from .verify import Trajectory

MATRIX_FMT = "%.17g"  # round-trips doubles exactly; keeps outputs reproducible


def save_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, float))
    np.savetxt(path, M, fmt=MATRIX_FMT, delimiter=",")


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        return np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))
    except ValueError as exc:
        raise ValueError(f"{path}: malformed matrix CSV ({exc})") from exc
    except OSError as exc:
        raise OSError(f"{path}: cannot read matrix file ({exc})") from exc


def save_polyhedron(P: HPolyhedron, a_path, b_path=None) -> None:
    """Write A and b as a file pair, or combined with b as last column."""
    if b_path is None:
        save_matrix(a_path, np.hstack([P.A, P.b[:, None]]))
    else:
        save_matrix(a_path, P.A)
        save_matrix(b_path, P.b[:, None])


def load_polyhedron(a_path, b_path=None) -> HPolyhedron:
    if b_path is None:
        M = load_matrix(a_path)
        if M.shape[1] < 2:
            raise ValueError(f"{a_path}: combined polyhedron file needs at "
                             "least one A column plus the b column")
        return HPolyhedron(M[:, :-1], M[:, -1])
    return HPolyhedron(load_matrix(a_path), load_matrix(b_path).ravel())


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{exc.lineno}: malformed JSON ({exc.msg})") from exc
    except OSError as exc:
        raise OSError(f"{path}: cannot read file ({exc})") from exc


def save_dataset(out_dir, data: ExperimentData, seed: int, delta: float,
                 mode: str = "custom", extra: dict | None = None) -> Path:
    """Write the data matrices plus a manifest; returns the manifest path.

    The manifest records everything needed to regenerate or audit the data:
    dimensions, the PRNG seed, the disturbance level, the generation mode,
    and the file names.  The true disturbance matrix is stored when present
    (simulation only) but synthesis never reads it.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {"U0": "U0.csv", "X0": "X0.csv", "X1": "X1.csv"}
    save_matrix(out_dir / files["U0"], data.U0)
    save_matrix(out_dir / files["X0"], data.X0)
    save_matrix(out_dir / files["X1"], data.X1)
    if data.D0 is not None:
        files["D0"] = "D0.csv"
        save_matrix(out_dir / files["D0"], data.D0)
    manifest = {
        "n": data.n, "m": data.m, "T": data.T,
        "seed": seed, "delta": delta, "mode": mode,
        "files": files,
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    write_json(path, manifest)
    return path


def load_dataset(manifest_path):
    """Read a dataset manifest and its matrices.

    Returns ``(ExperimentData, manifest_dict)``.  An absent D0 entry is the
    normal case for externally collected data.
    """
    manifest_path = Path(manifest_path)
    manifest = read_json(manifest_path)
    base = manifest_path.parent
    for key in ("files", "n", "m", "T"):
        if key not in manifest:
            raise ValueError(f"{manifest_path}: manifest lacks required key {key!r}")
    files = manifest["files"]
    for key in ("U0", "X0", "X1"):
        if key not in files:
            raise ValueError(f"{manifest_path}: manifest lists no {key} file")
    U0 = load_matrix(base / files["U0"])
    X0 = load_matrix(base / files["X0"])
    X1 = load_matrix(base / files["X1"])
    D0 = load_matrix(base / files["D0"]) if "D0" in files else None
    data = ExperimentData(U0=U0, X0=X0, X1=X1, D0=D0)
    if (data.n, data.m, data.T) != (manifest["n"], manifest["m"], manifest["T"]):
        raise ValueError(f"{manifest_path}: manifest dimensions "
                         f"({manifest['n']}, {manifest['m']}, {manifest['T']}) "
                         f"disagree with the matrix files "
                         f"({data.n}, {data.m}, {data.T})")
    return data, manifest


def save_certificate(out_dir, name: str, E: np.ndarray, meta: dict) -> None:
    """One multiplier matrix as CSV plus a JSON metadata record."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_matrix(out_dir / f"{name}.csv", E)
    write_json(out_dir / f"{name}.json", meta)


def save_synthesis_result(out_dir, result, extra: dict | None = None) -> Path:
    """Persist a synthesis result: summary JSON, gain CSV, certificates.

    Timing and solver chatter live in the summary only; the numeric files
    carry no volatile content so reruns with the same seed diff clean.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "status": result.status,
        "config": result.config,
        "verification": result.verification,
        "diagnostics": {k: v for k, v in result.diagnostics.items()
                        if isinstance(v, (int, float, str, bool))},
    }
    if extra:
        summary.update(extra)
    if result.K is not None:
        save_matrix(out_dir / "K.csv", result.K)
        summary["gain_file"] = "K.csv"
    cert_meta = []
    for cert in result.certificates:
        name = f"certificate_{cert.index:03d}"
        report = None
        if result.verification is not None:
            reports = result.verification.get("reports", [])
            if cert.index < len(reports):
                report = reports[cert.index]
        save_certificate(out_dir / "certificates", name, cert.E, {
            "vertex_index": cert.index,
            "shape": list(cert.E.shape),
            "report": report,
        })
        cert_meta.append(name)
    if cert_meta:
        summary["certificates"] = cert_meta
    row_map = result.diagnostics.get("consistency_row_map")
    if row_map is not None:
        save_matrix(out_dir / "consistency_row_map.csv",
                    np.asarray(row_map, float)[None, :])
        summary["consistency_row_map_file"] = "consistency_row_map.csv"
    path = out_dir / "result.json"
    write_json(path, summary)
    return path


def save_trajectory(path, traj: Trajectory) -> None:
    """Steps as rows: step index, state, applied disturbance, contained flag.

    The final row describes the last state; its disturbance fields are zero
    since no further step was taken.
    """
    steps, n = traj.disturbances.shape
    rows = np.zeros((steps + 1, 1 + 2 * n + 1))
    rows[:, 0] = np.arange(steps + 1)
    rows[:, 1:1 + n] = traj.states
    rows[:steps, 1 + n:1 + 2 * n] = traj.disturbances
    rows[:, -1] = traj.contained.astype(float)
    save_matrix(path, rows)


def load_trajectory(path, n: int) -> Trajectory:
    M = load_matrix(path)
    if M.shape[1] != 2 + 2 * n:
        raise ValueError(f"{path}: expected {2 + 2 * n} columns for state "
                         f"dimension {n}, found {M.shape[1]}")
    states = M[:, 1:1 + n]
    dists = M[:-1, 1 + n:1 + 2 * n]
    contained = M[:, -1] > 0.5
    exits = np.flatnonzero(~contained)
    return Trajectory(states=states, disturbances=dists, contained=contained,
                      first_exit_step=int(exits[0]) if exits.size else None)

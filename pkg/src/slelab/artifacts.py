"""Artifact IO: CSV/JSON/PGM writers and readers with light schema validation.

Every artifact is deterministic given its inputs (no timestamps inside the
files); run manifests carry timestamps and sha256 digests of the emitted
files under the schema name "sle-lab/1".
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from .errors import ParameterError

SCHEMA = "sle-lab/1"


def _fmt(x):
    return repr(float(x))


def write_path_csv(path, record):
    """Driving/path CSV: comment header with parameters, columns t,value[,V_i...]."""
    lines = [f"# kappa={record.kappa} geometry={record.geometry}"
             f" halted_at={record.halted_at if record.halted_at is not None else 'none'}"]
    cols = ["t", "value"] + [f"V_{k + 1}" for k in range(len(record.force_points))]
    lines.append(",".join(cols))
    t = record.path.times
    w = record.path.values
    fps = [fp.path.values for fp in record.force_points]
    for i in range(len(t)):
        row = [_fmt(t[i]), _fmt(w[i])] + [_fmt(v[i]) for v in fps]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_path_csv(path):
    txt = Path(path).read_text().strip().splitlines()
    params = {}
    rows = []
    header = None
    for line in txt:
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    params[k] = v
        elif header is None:
            header = line.split(",")
            if header[:2] != ["t", "value"]:
                raise ParameterError(f"bad path CSV header {header!r}")
        else:
            rows.append([float(x) for x in line.split(",")])
    data = np.asarray(rows)
    return params, data


def write_trace_csv(path, trace):
    lines = ["t,re,im"]
    for t, z in zip(trace.cap_times, trace.vertices):
        lines.append(f"{_fmt(t)},{_fmt(z.real)},{_fmt(z.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path):
    txt = Path(path).read_text().strip().splitlines()
    if txt[0].split(",") != ["t", "re", "im"]:
        raise ParameterError("bad trace CSV header")
    data = np.asarray([[float(x) for x in line.split(",")] for line in txt[1:]])
    return data[:, 0], data[:, 1] + 1j * data[:, 2]


def write_chain_csv(path, chain):
    lines = [f"# geometry={chain.geometry} w0={chain.w0}", "dt,dW"]
    for dt, dw in zip(chain.dts, chain.dws):
        lines.append(f"{_fmt(dt)},{_fmt(dw)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_measure_csv(path, points, masses):
    lines = ["x,y,mass"]
    for z, m in zip(points, masses):
        lines.append(f"{_fmt(z.real)},{_fmt(z.imag)},{_fmt(m)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_measure_csv(path):
    txt = Path(path).read_text().strip().splitlines()
    if txt[0].split(",") != ["x", "y", "mass"]:
        raise ParameterError("bad measure CSV header")
    data = np.asarray([[float(x) for x in line.split(",")] for line in txt[1:]])
    if len(data) == 0:
        return np.zeros(0, complex), np.zeros(0)
    return data[:, 0] + 1j * data[:, 1], data[:, 2]


def write_points_csv(path, points):
    lines = ["x,y"]
    for z in points:
        lines.append(f"{_fmt(z.real)},{_fmt(z.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_points_csv(path):
    txt = Path(path).read_text().strip().splitlines()
    if txt[0].split(",") != ["x", "y"]:
        raise ParameterError("bad points CSV header")
    data = np.asarray([[float(x) for x in line.split(",")] for line in txt[1:]])
    return data[:, 0] + 1j * data[:, 1]


def write_edges_csv(path, graph):
    lines = ["id_a,id_b,shared_cells"]
    for (a, b), c in sorted(graph.edges.items()):
        lines.append(f"{a},{b},{c}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_pgm(path, data):
    Path(path).write_bytes(data if isinstance(data, bytes) else data.to_pgm())


def write_field(path_base, field):
    """Flat binary grid (float64 little-endian) with a JSON sidecar."""
    base = Path(path_base)
    base.with_suffix(".bin").write_bytes(field.values.astype("<f8").tobytes())
    sidecar = {
        "schema": SCHEMA,
        "shape": list(field.values.shape),
        "origin": list(field.origin),
        "spacing": field.spacing,
        "kind": field.kind,
        "seed": field.seed,
        "gmc_spacing": field.gmc_spacing,
    }
    base.with_suffix(".json").write_text(json.dumps(sidecar, indent=1))


def read_field(path_base):
    from .gff import DiscreteField

    base = Path(path_base)
    meta = json.loads(base.with_suffix(".json").read_text())
    vals = np.frombuffer(base.with_suffix(".bin").read_bytes(), "<f8").reshape(meta["shape"])
    return DiscreteField(vals.copy(), tuple(meta["origin"]), meta["spacing"],
                         kind=meta["kind"], seed=meta["seed"],
                         gmc_spacing=meta.get("gmc_spacing"))


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True, default=_default))


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o)}")


def sha256(path):
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(out_dir, command, params, seed, artifacts, started, version):
    manifest = {
        "schema": SCHEMA,
        "command": command,
        "params": {k: (v if not isinstance(v, Path) else str(v)) for k, v in params.items()},
        "seed": seed,
        "version": version,
        "started": started,
        "finished": time.time(),
        "digests": {Path(p).name: sha256(p) for p in artifacts},
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True, default=_default))
    return path

"""Command-line surface: simulation, estimation, and artifact orchestration.

Config precedence is flags > config file (flat key=value lines) > defaults.
All randomness flows from one --seed, expanded per sample with a splittable
counter (numpy SeedSequence), so runs are byte-identical given the seed.
Exit codes: 0 success, 2 parameter error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import sys
import time
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import __version__, annuli, artifacts, cutmeasure, geometry, gff, loewner, processes
from .errors import GeometryError, NumericalBlowupError, ParameterError

COMMANDS = ("simulate", "trace", "raster", "components", "adjacency", "cutpoints",
            "dimension", "cutmeasure", "gff", "flowgrid", "whitney", "annuli",
            "good-annulus", "report")


def sample_seed(root_seed, index):
    """Deterministic per-sample seed from the run seed (splittable counter)."""
    return int(np.random.SeedSequence(entropy=root_seed, spawn_key=(index,))
               .generate_state(1)[0])


def _load_config(path):
    conf = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"bad config line: {line!r}")
        k, v = line.split("=", 1)
        conf[k.strip().replace("-", "_")] = v.strip()
    return conf


def _merge_config(args, parser):
    if getattr(args, "config", None):
        conf = _load_config(args.config)
        defaults = {a.dest: a.default for a in parser._actions}
        for key, raw in conf.items():
            if not hasattr(args, key):
                raise ParameterError(f"unknown config key {key!r}")
            if getattr(args, key) == defaults.get(key):  # flags win over config
                cur = getattr(args, key)
                typ = type(cur) if cur is not None else str
                setattr(args, key, typ(raw) if typ is not bool else raw == "true")
    return args


def build_parser():
    p = argparse.ArgumentParser(prog="slelab", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", type=Path, default=Path("run"))
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--config", type=Path, default=None)
        sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("simulate", help="sample an SLE_kappa(rho) driving record")
    common(sp)
    sp.add_argument("--kappa", type=float, required=True)
    sp.add_argument("--steps", type=int, default=100000)
    sp.add_argument("--horizon", type=float, default=1.0)
    sp.add_argument("--rho", type=float, nargs="*", default=[])
    sp.add_argument("--x", type=float, nargs="*", default=[])

    sp = sub.add_parser("trace", help="driving plus Loewner trace")
    common(sp)
    sp.add_argument("--kappa", type=float, required=True)
    sp.add_argument("--steps", type=int, default=100000)
    sp.add_argument("--horizon", type=float, default=1.0)
    sp.add_argument("--points", type=int, default=20000)

    for name, extra in (("raster", ()), ("components", ()), ("adjacency", ()),
                        ("cutpoints", ())):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--in", dest="infile", type=Path, required=True)
        sp.add_argument("--spacing", type=float, default=1.0 / 512)
        sp.add_argument("--min-cells", type=int, default=4)

    sp = sub.add_parser("dimension", help="box-counting dimension of a point set")
    common(sp)
    sp.add_argument("--in", dest="infile", type=Path, required=True)
    sp.add_argument("--scales", type=int, default=6)
    sp.add_argument("--coarsest", type=float, default=0.25)

    sp = sub.add_parser("cutmeasure", help="empirical cut measure of one trace")
    common(sp)
    sp.add_argument("--in", dest="infile", type=Path, required=True)
    sp.add_argument("--kappa-prime", type=float, required=True)
    sp.add_argument("--spacing", type=float, default=1.0 / 512)
    sp.add_argument("--eps", type=float, default=1e-4)
    sp.add_argument("--field-seeds", type=int, default=8)
    sp.add_argument("--field-n", type=int, default=256)

    sp = sub.add_parser("gff", help="sample a zero-boundary field")
    common(sp)
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--domain", choices=("square", "disk", "halfplane"), default="disk")
    sp.add_argument("--gamma", type=float, default=None)

    sp = sub.add_parser("flowgrid", help="X-grid of flow lines in the standard annulus")
    common(sp)
    sp.add_argument("--kappa-prime", type=float, default=6.0)
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--a", type=float, default=1.0 / 16)

    sp = sub.add_parser("whitney", help="Whitney decomposition + geodesic counts")
    common(sp)
    sp.add_argument("--domain", choices=("disk", "square"), default="disk")
    sp.add_argument("--max-level", type=int, default=8)

    sp = sub.add_parser("annuli", help="deterministic annuli plan for a point set")
    common(sp)
    sp.add_argument("--points", type=Path, required=True)
    sp.add_argument("--r0", type=float, default=0.25)

    sp = sub.add_parser("good-annulus", help="good-annulus event report")
    common(sp)
    sp.add_argument("--kappa-prime", type=float, default=5.0)
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--a", type=float, default=1.0 / 16)
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--holder-a", type=float, default=0.2)
    sp.add_argument("--m-const", type=float, default=50.0)

    sp = sub.add_parser("report", help="aggregate JSON artifacts of a suite directory")
    common(sp)
    sp.add_argument("--suite", type=Path, required=True)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args, parser)
        return run(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return 2
    except NumericalBlowupError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


def run(args):
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    emitted = []

    if args.command == "simulate":
        rec = processes.sample_sle_rho_driving(
            args.kappa, args.rho, args.x, args.horizon, args.horizon / args.steps, args.seed)
        artifacts.write_path_csv(out / "driving.csv", rec)
        emitted.append(out / "driving.csv")

    elif args.command == "trace":
        rec = processes.sample_sle_rho_driving(
            args.kappa, [], [], args.horizon, args.horizon / args.steps, args.seed)
        tr = loewner.solve_chordal(loewner.MapChain.from_driving(rec), n_points=args.points)
        artifacts.write_path_csv(out / "driving.csv", rec)
        artifacts.write_trace_csv(out / "trace.csv", tr)
        (out / "chain.lwnr").write_bytes(tr.chain.to_bytes())
        emitted += [out / "driving.csv", out / "trace.csv", out / "chain.lwnr"]

    elif args.command in ("raster", "components", "adjacency", "cutpoints"):
        _, verts = artifacts.read_trace_csv(args.infile)
        raster = geometry.rasterize(verts, args.spacing)
        artifacts.write_pgm(out / "raster.pgm", raster)
        emitted.append(out / "raster.pgm")
        if args.command in ("components", "adjacency"):
            graph = geometry.adjacency_graph(raster)
            artifacts.write_edges_csv(out / "edges.csv", graph)
            conn = geometry.connectivity(graph, args.min_cells)
            artifacts.write_json(out / "connectivity.json",
                                 {"schema": artifacts.SCHEMA, **conn,
                                  "min_cells": args.min_cells,
                                  "sizes": raster.component_sizes()})
            emitted += [out / "edges.csv", out / "connectivity.json"]
        if args.command == "cutpoints":
            pts = geometry.detect_cut_points(raster)
            artifacts.write_points_csv(out / "cutpoints.csv", pts)
            emitted.append(out / "cutpoints.csv")

    elif args.command == "dimension":
        if args.infile.suffix == ".csv" and args.infile.name.endswith("trace.csv"):
            _, pts = artifacts.read_trace_csv(args.infile)
        else:
            pts = artifacts.read_points_csv(args.infile)
        scales = args.coarsest * 2.0 ** (-np.arange(args.scales))
        res = geometry.box_dimension(pts, scales)
        artifacts.write_json(out / "dimension.json", {"schema": artifacts.SCHEMA, **res})
        emitted.append(out / "dimension.json")

    elif args.command == "cutmeasure":
        _, verts = artifacts.read_trace_csv(args.infile)
        raster = geometry.rasterize(verts, args.spacing)
        window = (raster.origin[0], raster.origin[0] + raster.shape[1] * raster.spacing)
        pts_all, mass_all = [], []
        for k in range(args.field_seeds):
            fseed = sample_seed(args.seed, k)
            field = gff.sample_zero_boundary_rect(
                window, (0.0, raster.origin[1] + raster.shape[0] * raster.spacing),
                args.field_n, fseed)
            gamma = 4.0 / np.sqrt(args.kappa_prime)
            mu = gff.gmc_area(field, gamma)
            bubbles = cutmeasure.bubble_table(raster, mu)
            meas = cutmeasure.cut_measure(bubbles, args.eps, args.kappa_prime)
            pts_all.append(meas.points)
            mass_all.append(meas.masses / args.field_seeds)
        pts = np.concatenate(pts_all) if pts_all else np.zeros(0, complex)
        masses = np.concatenate(mass_all) if mass_all else np.zeros(0)
        artifacts.write_measure_csv(out / "cutmeasure.csv", pts, masses)
        artifacts.write_json(out / "cutmeasure.json", {
            "schema": artifacts.SCHEMA, "atoms": len(pts),
            "total_mass": float(masses.sum()),
            "eps": args.eps, "kappa_prime": args.kappa_prime,
            "field_seeds": args.field_seeds,
        })
        emitted += [out / "cutmeasure.csv", out / "cutmeasure.json"]

    elif args.command == "gff":
        field = gff.sample_zero_boundary(args.n, args.seed, domain=args.domain)
        artifacts.write_field(out / "field", field)
        emitted += [out / "field.bin", out / "field.json"]
        if args.gamma:
            mu = gff.gmc_area(field, args.gamma)
            ys, xs = np.nonzero(mu.masses > np.quantile(mu.masses, 0.999))
            zs = (mu.origin[0] + xs * mu.spacing) + 1j * (mu.origin[1] + ys * mu.spacing)
            artifacts.write_measure_csv(out / "gmc_top.csv", zs, mu.masses[ys, xs])
            emitted.append(out / "gmc_top.csv")

    elif args.command == "flowgrid":
        from . import flowlines

        field = gff.sample_zero_boundary(args.n, args.seed, domain="disk")
        kappa = 16.0 / args.kappa_prime
        grid = flowlines.build_flow_grid(
            field, (0j, 9.0 / 16, 15.0 / 16), args.a, kappa)
        pockets = flowlines.classify_pockets(grid)
        header = f"P5\n{grid.union.shape[1]} {grid.union.shape[0]}\n255\n".encode()
        artifacts.write_pgm(out / "flowgrid.pgm",
                            header + ((1 - grid.union) * 255).astype(np.uint8)[::-1].tobytes())
        artifacts.write_json(out / "pockets.json", {
            "schema": artifacts.SCHEMA, "marker": grid.marker,
            "pockets": [{
                "id": p.component_id, "type": p.type,
                "opening": [p.opening.real, p.opening.imag],
                "closing": [p.closing.real, p.closing.imag],
                "cells": int(len(p.cells)),
            } for p in pockets]})
        emitted += [out / "flowgrid.pgm", out / "pockets.json"]

    elif args.command == "whitney":
        from . import hypwhitney

        dom = hypwhitney.DiskDomain() if args.domain == "disk" else hypwhitney.SquareDomain()
        dec = hypwhitney.whitney_decompose(dom, max_level=args.max_level)
        lines = ["cx,cy,len"]
        for cen, side in zip(dec.centers, dec.sides):
            lines.append(f"{cen.real!r},{cen.imag!r},{side!r}")
        (out / "whitney.csv").write_text("\n".join(lines) + "\n")
        counts = {}
        if args.domain == "disk":  # geodesics need the conformal structure
            counts = hypwhitney.geodesic_square_counts(
                dom, dom.boundary_points(256), range(1, args.max_level),
                decomposition=dec)
        artifacts.write_json(out / "whitney.json", {
            "schema": artifacts.SCHEMA, "squares": len(dec),
            "geodesic_counts": {str(k): v for k, v in counts.items()}})
        emitted += [out / "whitney.csv", out / "whitney.json"]

    elif args.command == "annuli":
        pts = artifacts.read_points_csv(args.points)
        plan = annuli.plan_annuli(pts, args.r0)
        report = annuli.verify_plan(plan)
        artifacts.write_json(out / "plan.json", {"schema": artifacts.SCHEMA, **plan.to_dict()})
        artifacts.write_json(out / "verify.json", {"schema": artifacts.SCHEMA, **report})
        emitted += [out / "plan.json", out / "verify.json"]
        if not report["ok"]:
            return 3

    elif args.command == "good-annulus":
        from . import flowlines, hypwhitney

        field = gff.sample_zero_boundary(args.n, args.seed, domain="disk")
        kappa = 16.0 / args.kappa_prime
        scale = 2.0 ** (-args.k)
        region = (0j, (9.0 / 16) * scale * 16 / 15, (15.0 / 16) * scale * 16 / 15)
        grid = flowlines.build_flow_grid(field, (0j, 9.0 / 16, 15.0 / 16),
                                         args.a, kappa)
        pockets = flowlines.classify_pockets(grid)
        y_res = flowlines.build_Y(grid, pockets, args.kappa_prime, args.seed)
        gamma = 4.0 / np.sqrt(args.kappa_prime)
        mu = gff.gmc_area(field, gamma)
        rep = hypwhitney.good_annulus_check(field, y_res, grid, pockets, 0j, args.k,
                                            args.holder_a, args.m_const,
                                            args.kappa_prime, gmc=mu)
        artifacts.write_json(out / "good_annulus.json",
                             {"schema": artifacts.SCHEMA, **rep})
        emitted.append(out / "good_annulus.json")

    elif args.command == "report":
        import json

        entries = []
        for js in sorted(Path(args.suite).rglob("*.json")):
            if js.name == "manifest.json":
                continue
            try:
                entries.append({"file": str(js.relative_to(args.suite)),
                                "content": json.loads(js.read_text())})
            except (ValueError, OSError):
                entries.append({"file": str(js), "content": "UNREADABLE"})
        artifacts.write_json(out / "report.json",
                             {"schema": artifacts.SCHEMA, "entries": entries})
        emitted.append(out / "report.json")

    artifacts.write_manifest(out, args.command, params, args.seed, emitted,
                             started, __version__)
    return 0


def run_pool(fn, jobs, workers):
    """Deterministic worker pool: ordered results over independent samples."""
    if workers <= 1:
        return [fn(j) for j in jobs]
    with Pool(workers) as pool:
        return list(pool.map(fn, jobs))


if __name__ == "__main__":
    sys.exit(main())

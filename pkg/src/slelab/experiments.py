"""Reproducible Monte Carlo experiment runners for the estimation suites.

Each runner is deterministic given its seed (per-sample seeds come from the
splittable counter in `cli.sample_seed`) and returns plain dicts ready for
JSON serialization.  Heavy inner loops fan out over a process pool with
ordered results, so worker count does not change output.
"""

from __future__ import annotations

import math
from multiprocessing import get_context

import numpy as np

from . import cutmeasure, geometry, gff, loewner, processes
from .cli import sample_seed

__all__ = [
    "coarsen_chain",
    "sample_trace_vertices",
    "trace_dimension_experiment",
    "cut_dimension_experiment",
    "covariance_experiment",
    "bessel_slope_experiment",
    "gff_variance_slope",
    "gmc_expectation_ratio",
    "good_scales_experiment",
    "connectivity_report",
    "wilson_interval",
]


def coarsen_chain(chain, factor):
    """Merge consecutive steps (exact for the driving law; trades resolution)."""
    if factor <= 1:
        return chain
    n = (len(chain) // factor) * factor
    return loewner.MapChain(chain.dts[:n].reshape(-1, factor).sum(1),
                            chain.dws[:n].reshape(-1, factor).sum(1),
                            chain.geometry, chain.w0)


def sample_trace_vertices(kappa, horizon, steps, seed, coarsen=2, n_points=100000):
    drv = processes.sample_sle_rho_driving(kappa, [], [], horizon, horizon / steps, seed)
    chain = coarsen_chain(loewner.MapChain.from_driving(drv), coarsen)
    return loewner.solve_chordal(chain, n_points=n_points).vertices


def _pool_map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with get_context("spawn").Pool(workers) as pool:
        return list(pool.map(fn, jobs, chunksize=1))


# ---- trace box dimension ----


def _trace_boxes_job(args):
    kappa, horizon, steps, seed, coarsen, n_points, spacing, sizes = args
    v = sample_trace_vertices(kappa, horizon, steps, seed, coarsen, n_points)
    segs = np.stack([np.stack([v[:-1].real, v[:-1].imag], 1),
                     np.stack([v[1:].real, v[1:].imag], 1)], 1)
    cells, _ = geometry.rasterize_segments(segs, spacing, geometry="chordal")
    return [geometry.occupied_boxes(cells, k) for k in sizes]


def trace_dimension_experiment(kappa, n_traces, seed, horizon, steps=100000,
                               coarsen=2, n_points=100000, spacing=1.0 / 512,
                               sizes=(2, 4, 8, 16, 32), workers=1):
    """Pooled box-count dimension of SLE_kappa traces.

    Per trace: driving at `steps` Euler steps over `horizon`, slit-map trace,
    raster at `spacing`, box counts at `sizes` (in cells); the estimate is the
    least-squares slope of the mean log-count against log(1/eps).
    """
    jobs = [(kappa, horizon, steps, sample_seed(seed, i), coarsen, n_points,
             spacing, tuple(sizes)) for i in range(n_traces)]
    counts = np.array(_pool_map(_trace_boxes_job, jobs, workers), dtype=float)
    logs = np.log(np.maximum(counts, 1.0)).mean(axis=0)
    eps = np.asarray(sizes) * spacing
    x = np.log(1.0 / eps)
    slope, intercept = np.polyfit(x, logs, 1)
    resid = logs - (slope * x + intercept)
    stderr = float(np.sqrt(np.sum(resid ** 2) / max(len(x) - 2, 1)
                           / np.sum((x - x.mean()) ** 2)))
    return {"kappa": kappa, "estimate": float(slope), "stderr": stderr,
            "n_traces": n_traces, "steps": steps, "horizon": horizon,
            "sizes": list(sizes), "spacing": spacing,
            "mean_log_counts": logs.tolist()}


# ---- cut-point dimension ----


def _cut_points_job(args):
    kp, horizon, steps, seed, spacing, sizes = args
    v = sample_trace_vertices(kp, horizon, steps, seed, coarsen=2)
    raster = geometry.rasterize(v, spacing)
    pts = geometry.detect_cut_points(raster)
    if len(pts) < 20:
        return None
    return [geometry._box_count(pts, k * spacing) for k in sizes]


def cut_dimension_experiment(kp, n_traces, seed, horizon=0.04, steps=100000,
                             spacing=1.0 / 512, sizes=(2, 4, 8, 16, 32), workers=1):
    """Pooled box-count dimension of the detected cut points of SLE_kappa' traces."""
    jobs = [(kp, horizon, steps, sample_seed(seed, i), spacing, tuple(sizes))
            for i in range(n_traces)]
    rows = [r for r in _pool_map(_cut_points_job, jobs, workers) if r is not None]
    logs = np.log(np.maximum(np.array(rows, dtype=float), 1.0)).mean(axis=0)
    eps = np.asarray(sizes) * spacing
    slope = float(np.polyfit(np.log(1.0 / eps), logs, 1)[0])
    return {"kappa_prime": kp, "estimate": slope, "used_traces": len(rows),
            "n_traces": n_traces, "sizes": list(sizes),
            "mean_log_counts": logs.tolist()}


# ---- conformal covariance of the cut measure ----


def _covariance_job(args):
    kp, horizon, steps, seed, qeps, eps_frozen, lams, spacing, rball = args
    gamma = 4.0 / math.sqrt(kp)
    v1 = sample_trace_vertices(kp, horizon, steps, seed, coarsen=2)
    scale0 = float(np.ptp(v1.real))
    z0 = complex(np.median(v1.real), np.median(v1.imag))
    out_mass, out_count = [], []
    eps = eps_frozen
    for li, lam in enumerate(lams):
        raster = geometry.rasterize(v1 * lam, spacing)
        x0 = raster.origin[0]
        x1 = x0 + raster.shape[1] * spacing
        field = gff.sample_zero_boundary_rect(
            (x0, x1), (0.0, raster.origin[1] + raster.shape[0] * spacing),
            int(round((x1 - x0) / spacing)), sample_seed(seed, 1000 + li))
        bubbles = cutmeasure.bubble_table(raster, gff.gmc_area(field, gamma))
        if eps is None and lam == 1.0 and len(bubbles):
            eps = float(np.quantile(bubbles.areas, qeps))
        meas = cutmeasure.cr_reweight(cutmeasure.cut_measure(bubbles, eps, kp), "H", kp)
        out_mass.append(meas.mass_in_ball(lam * z0, lam * rball * scale0) + 1e-300)
        out_count.append(len(meas))
    return out_mass, out_count, eps


def covariance_experiment(kp, n_samples, seed, horizon, steps=100000, qeps=0.8,
                          lams=(1.0, 2.0, 4.0, 8.0), spacing=1.0 / 512, rball=0.2,
                          workers=1):
    """Covariance exponent of the reweighted cut measure under z -> lam z.

    The quantum-area threshold eps is frozen from the first sample's unit-scale
    bubble areas (quantile `qeps`) and reused everywhere, so the whole run is
    deterministic given the seed.
    """
    first = _covariance_job((kp, horizon, steps, sample_seed(seed, 0), qeps, None,
                             tuple(lams), spacing, rball))
    eps = first[2]
    jobs = [(kp, horizon, steps, sample_seed(seed, i), qeps, eps, tuple(lams),
             spacing, rball) for i in range(1, n_samples)]
    rows = [first] + _pool_map(_covariance_job, jobs, workers)
    masses = np.array([r[0] for r in rows])
    counts = np.array([r[1] for r in rows])
    mass_by_scale = {lam: masses[:, i] for i, lam in enumerate(lams)}
    slope = cutmeasure.covariance_exponent(mass_by_scale)
    return {"kappa_prime": kp, "slope": slope, "eps": eps,
            "d_cut": cutmeasure.cut_dimension(kp),
            "mean_atoms": counts.mean(axis=0).tolist(),
            "mean_mass": masses.mean(axis=0).tolist(),
            "lams": list(lams), "n_samples": n_samples}


# ---- Bessel excursions ----


def bessel_slope_experiment(delta, n_paths, seed, horizon=60.0, dt=1e-4):
    paths = [processes.sample_bessel(delta, horizon, dt, sample_seed(seed, i))
             for i in range(n_paths)]
    slope = processes.excursion_count_slope(paths)
    return {"delta": delta, "slope": slope, "target": delta / 2.0 - 1.0,
            "n_paths": n_paths, "horizon": horizon, "dt": dt}


# ---- GFF calibration ----


def _gff_slope_job(args):
    n, seed, radii = args
    f = gff.sample_zero_boundary(n, seed, domain="disk")
    return [gff.circle_average(f, 0, r) for r in radii]


def gff_variance_slope(n_samples, seed, n=256, radii=(0.25, 0.125, 0.0625, 0.03125),
                       workers=1):
    jobs = [(n, sample_seed(seed, i), tuple(radii)) for i in range(n_samples)]
    vals = np.array(_pool_map(_gff_slope_job, jobs, workers))
    variances = vals.var(axis=0)
    slope = float(np.polyfit([math.log(1 / r) for r in radii], variances, 1)[0])
    return {"slope": slope, "variances": variances.tolist(), "radii": list(radii),
            "n_samples": n_samples, "grid": n}


def _gmc_job(args):
    n, seed = args
    f = gff.sample_zero_boundary(n, seed, domain="disk")
    return gff.gmc_area(f, 1.0).mass_in_ball(0j, 0.5)


def gmc_expectation_ratio(n_samples, seed, n=128, workers=1):
    from scipy.integrate import quad

    jobs = [(n, sample_seed(seed, i)) for i in range(n_samples)]
    masses = np.array(_pool_map(_gmc_job, jobs, workers))
    oracle = 2 * math.pi * quad(lambda r: r * math.sqrt(1 - r * r), 0, 0.5)[0]
    return {"ratio": float(masses.mean() / oracle), "oracle": oracle,
            "mc_stderr": float(masses.std() / math.sqrt(len(masses)) / oracle),
            "n_samples": n_samples, "gamma": 1.0}


def _good_scales_job(args):
    n, seed, z, r, K, M = args
    f = gff.sample_zero_boundary(n, seed, domain="square")
    return gff.good_scale_stats(f, z, r, K, M).fraction_good


def good_scales_experiment(n_samples, seed, M=20.0, K=6, n=1024, z=0.5 + 0.5j, r=0.4,
                           workers=1):
    jobs = [(n, sample_seed(seed, i), z, r, K, M) for i in range(n_samples)]
    fracs = np.array(_pool_map(_good_scales_job, jobs, workers))
    return {"M": M, "K": K, "rate_ge_075": float(np.mean(fracs >= 0.75)),
            "min_fraction": float(fracs.min()), "n_samples": n_samples}


# ---- connectivity report (exploratory, never asserted) ----


def wilson_interval(k, n, z=1.96):
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(center - half, 0.0), min(center + half, 1.0))


def _connectivity_job(args):
    kp, horizon, steps, seed, spacing, min_cells = args
    v = sample_trace_vertices(kp, horizon, steps, seed, coarsen=2)
    raster = geometry.rasterize(v, spacing)
    graph = geometry.adjacency_graph(raster)
    return geometry.connectivity(graph, min_cells)["connected"]


def connectivity_report(kps=(4.5, 5.0, 6.0, 7.0), n_traces=25, seed=0, horizon=0.04,
                        steps=100000, spacing=1.0 / 512, min_cells=4, workers=1):
    """Connected-fraction of the discrete adjacency graph with Wilson 95% CIs.

    Exploratory: the continuum statement is open away from small kappa', so
    these rates are reported, never asserted.
    """
    out = {}
    for kp in kps:
        jobs = [(kp, horizon, steps, sample_seed(seed, 10_000 * int(kp * 10) + i),
                 spacing, min_cells) for i in range(n_traces)]
        flags = _pool_map(_connectivity_job, jobs, workers)
        k = int(np.sum(flags))
        lo, hi = wilson_interval(k, n_traces)
        out[str(kp)] = {"connected": k, "n": n_traces, "rate": k / n_traces,
                        "wilson95": [lo, hi]}
    return {"report": out, "asserted": False, "min_cells": min_cells}

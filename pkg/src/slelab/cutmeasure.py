"""The natural cut-point measure: bubble counting at quantum-area threshold.

Bubbles are the bounded complementary components enclosed entirely by the
curve (touching neither the real axis nor any EXTERIOR-adjacent trace cell),
standing in for the pockets between the left and right outer boundaries.  Each
bubble gets a quantum area from an independent zero-boundary field; the
empirical cut measure puts an atom of mass eps^(1 - kappa'/8) at the closing
point of every bubble of area at least eps, and the conformal-radius weight
CR(z, D)^(2 - 8/kappa' - kappa'/8) converts it into the conformally covariant
normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EstimationError, ParameterError
from .geometry import EXTERIOR, TRACE

__all__ = [
    "BubbleTable",
    "AtomicMeasure",
    "bubble_table",
    "cut_measure",
    "cr_reweight",
    "covariance_exponent",
    "diameter_bound_fit",
    "cut_dimension",
    "cr_exponent",
    "vague_stabilization",
]


def cut_dimension(kappa_prime):
    """Cut-point dimension 3 - 3 kappa'/8 for kappa' in (4, 8)."""
    if not (4 < kappa_prime < 8):
        raise ParameterError(f"kappa-prime must lie in (4, 8), got {kappa_prime}")
    return 3.0 - 3.0 * kappa_prime / 8.0


def cr_exponent(kappa_prime):
    """Conformal-radius reweighting exponent 2 - 8/kappa' - kappa'/8."""
    if not (4 < kappa_prime < 8):
        raise ParameterError(f"kappa-prime must lie in (4, 8), got {kappa_prime}")
    return 2.0 - 8.0 / kappa_prime - kappa_prime / 8.0


@dataclass(frozen=True)
class BubbleTable:
    """Rows (component id, quantum area, closing point) for curve-enclosed bubbles."""

    component_ids: np.ndarray
    areas: np.ndarray
    closing_points: np.ndarray   # complex

    def __len__(self):
        return len(self.component_ids)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite weighted point set with provenance metadata."""

    points: np.ndarray           # complex
    masses: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=complex)
        m = np.asarray(self.masses, dtype=float)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "masses", m)
        if len(p) != len(m):
            raise ParameterError("points and masses must be aligned")
        if len(m) and (np.any(m <= 0) or not np.all(np.isfinite(m))):
            raise ParameterError("masses must be positive and finite")

    def __len__(self):
        return len(self.points)

    @property
    def total(self):
        return float(self.masses.sum())

    def mass_in_ball(self, z, r):
        z = complex(z)
        return float(self.masses[np.abs(self.points - z) < r].sum())

    def integrate(self, f):
        if len(self) == 0:
            return 0.0
        return float(np.sum(self.masses * f(self.points)))


def bubble_table(raster, gmc):
    """Quantum areas and closing points of the curve-enclosed bubbles of a raster.

    The gmc grid must cover the raster window.  A bounded component is a bubble
    when its boundary ring contains no real-axis cell and none of its ring
    trace cells also borders EXTERIOR; the closing point is the last ring cell
    in the fixed row-major scan.
    """
    lab = raster.labels
    ny, nx = lab.shape
    if gmc.spacing > raster.spacing * 32 + 1e-12:
        raise ParameterError("gmc grid too coarse for this raster")
    gx0, gy0 = gmc.origin
    gny, gnx = gmc.masses.shape
    rx0, ry0 = raster.origin
    if (gx0 > rx0 + 1e-9 or gy0 > ry0 + 1e-9
            or gx0 + (gnx - 1) * gmc.spacing < rx0 + (nx - 1) * raster.spacing - max(gmc.spacing, raster.spacing)
            or gy0 + (gny - 1) * gmc.spacing < ry0 + (ny - 1) * raster.spacing - max(gmc.spacing, raster.spacing)):
        raise ParameterError("gmc grid does not cover the raster window")

    n_comp = raster.n_components
    if n_comp == 0:
        return BubbleTable(np.zeros(0, int), np.zeros(0), np.zeros(0, complex))

    # accumulate gmc node masses into components via node -> raster cell binning
    jx = np.floor((gx0 + np.arange(gnx) * gmc.spacing - rx0) / raster.spacing).astype(int)
    jy = np.floor((gy0 + np.arange(gny) * gmc.spacing - ry0) / raster.spacing).astype(int)
    ok_x = (jx >= 0) & (jx < nx)
    ok_y = (jy >= 0) & (jy < ny)
    sub = gmc.masses[np.ix_(ok_y, ok_x)]
    cell_lab = lab[np.ix_(jy[ok_y], jx[ok_x])]
    areas = np.zeros(n_comp + 1)
    good = cell_lab > 0
    np.add.at(areas, cell_lab[good], sub[good])

    # vectorized per-component exclusions and closing points
    trace = lab == TRACE
    ext_adjacent_trace = np.zeros_like(trace)
    shifts = ((1, 0), (-1, 0), (0, 1), (0, -1))
    for dj, di in shifts:
        shifted = np.full_like(lab, -9)
        js = slice(max(dj, 0), ny + min(dj, 0))
        jd = slice(max(-dj, 0), ny + min(-dj, 0))
        is_ = slice(max(di, 0), nx + min(di, 0))
        id_ = slice(max(-di, 0), nx + min(-di, 0))
        shifted[jd, id_] = lab[js, is_]
        ext_adjacent_trace |= trace & (shifted == EXTERIOR)

    comp_js, comp_is = np.nonzero(lab > 0)
    comp_ids_all = lab[comp_js, comp_is]
    big = np.iinfo(np.int64).max
    min_row = np.full(n_comp + 1, big)
    max_row = np.full(n_comp + 1, -1)
    min_col = np.full(n_comp + 1, big)
    max_col = np.full(n_comp + 1, -1)
    np.minimum.at(min_row, comp_ids_all, comp_js)
    np.maximum.at(max_row, comp_ids_all, comp_js)
    np.minimum.at(min_col, comp_ids_all, comp_is)
    np.maximum.at(max_col, comp_ids_all, comp_is)

    excluded = np.zeros(n_comp + 1, bool)
    if raster.geometry == "chordal":
        excluded |= min_row <= 1          # boundary ring reaches the real axis
    excluded |= (min_row <= 0) | (min_col <= 0)
    excluded |= (max_row >= ny - 1) | (max_col >= nx - 1)
    excluded |= areas <= 0

    # components adjacent to a far-field-facing trace cell, and closing points
    closing_scan = np.full(n_comp + 1, -1)
    for dj, di in shifts:
        js = slice(max(dj, 0), ny + min(dj, 0))
        jd = slice(max(-dj, 0), ny + min(-dj, 0))
        is_ = slice(max(di, 0), nx + min(di, 0))
        id_ = slice(max(-di, 0), nx + min(-di, 0))
        neigh = np.full_like(lab, -9)
        neigh[jd, id_] = lab[js, is_]      # neigh[c] = label of the cell at c+shift
        contact = trace & (neigh > 0)      # trace cell c adjacent to component
        cj, ci = np.nonzero(contact)
        owners = neigh[cj, ci]
        excluded |= np.bincount(owners[ext_adjacent_trace[cj, ci]],
                                minlength=n_comp + 1).astype(bool)
        np.maximum.at(closing_scan, owners, cj * nx + ci)

    ids = np.nonzero(~excluded[1:])[0] + 1
    scan = closing_scan[ids]
    ids = ids[scan >= 0]
    scan = closing_scan[ids]
    cx, cy = raster.cell_center(scan % nx, scan // nx)
    return BubbleTable(ids.astype(int), areas[ids], cx + 1j * cy)


def _ring(mask):
    grown = mask.copy()
    grown[1:, :] |= mask[:-1, :]
    grown[:-1, :] |= mask[1:, :]
    grown[:, 1:] |= mask[:, :-1]
    grown[:, :-1] |= mask[:, 1:]
    return grown & ~mask


def cut_measure(bubbles, epsilon, kappa_prime, meta=None):
    """Atom of mass eps^(1 - kappa'/8) at the closing point of each bubble >= eps."""
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    if not (4 < kappa_prime < 8):
        raise ParameterError(f"kappa-prime must lie in (4, 8), got {kappa_prime}")
    keep = bubbles.areas >= epsilon
    mass = epsilon ** (1.0 - kappa_prime / 8.0)
    info = {"epsilon": epsilon, "kappa_prime": kappa_prime}
    if meta:
        info.update(meta)
    return AtomicMeasure(bubbles.closing_points[keep],
                         np.full(int(keep.sum()), mass), info)


def cr_reweight(measure, domain, kappa_prime):
    """Multiply each atom by CR(z, D)^(2 - 8/kappa' - kappa'/8).

    domain "H" uses CR(z, H) = 2 Im z; a JordanMap handle supplies
    CR(z) = (1 - |w|^2) |f'(w)| with w the disk preimage of z.
    """
    expo = cr_exponent(kappa_prime)
    pts = measure.points
    if isinstance(domain, str):
        if domain != "H":
            raise ParameterError(f"unknown domain {domain!r}")
        if len(pts) and np.any(pts.imag <= 0):
            raise DomainError("atom outside the upper half-plane")
        cr = 2.0 * pts.imag
    else:
        w = domain.to_disk(pts) if len(pts) else np.zeros(0, complex)
        if len(pts) and np.any(np.abs(w) >= 1):
            raise DomainError("atom outside the mapped domain")
        cr = (1.0 - np.abs(w) ** 2) * np.abs(domain.derivative(w))
    masses = measure.masses * cr ** expo
    meta = dict(measure.meta)
    meta["cr_exponent"] = expo
    return AtomicMeasure(pts, masses, meta)


def covariance_exponent(mass_by_scale):
    """Slope of log mean ball-mass against log scale.

    mass_by_scale: mapping scale -> per-sample masses of the matched balls
    (scale lam holding the ball lam * B).  The fitted slope estimates the
    covariance exponent of the measure (d_cut for the reweighted cut measure).
    """
    lams = sorted(mass_by_scale)
    if len(lams) < 2:
        raise EstimationError("need at least two scales")
    xs, ys = [], []
    for lam in lams:
        vals = np.asarray(mass_by_scale[lam], dtype=float)
        if len(vals) == 0 or np.mean(vals) <= 0:
            raise EstimationError(f"no atom mass at scale {lam}")
        xs.append(math.log(lam))
        ys.append(math.log(np.mean(vals)))
    slope = float(np.polyfit(xs, ys, 1)[0])
    return slope


def diameter_bound_fit(measure, balls):
    """Envelope fit of sup-ball-mass against ball diameter.

    balls: iterable of (center, radius) spanning at least 3 dyadic radii with
    at least 50 entries.  Groups by radius, takes the sup of the measure over
    balls of that radius, and fits log sup-mass ~ exponent * log diam + log C.
    """
    balls = list(balls)
    if len(balls) < 50:
        raise EstimationError("need at least 50 balls")
    radii = sorted({round(r, 14) for _, r in balls})
    if len(radii) < 3:
        raise EstimationError("need at least 3 distinct radii")
    if len(measure) == 0:
        raise EstimationError("empty measure")
    sups = {}
    for z, r in balls:
        key = round(r, 14)
        sups[key] = max(sups.get(key, 0.0), measure.mass_in_ball(z, r))
    xs, ys = [], []
    for r in radii:
        if sups[r] > 0:
            xs.append(math.log(2 * r))
            ys.append(math.log(sups[r]))
    if len(xs) < 2:
        raise EstimationError("too few occupied radii")
    if len(set(ys)) == 1:
        return {"C_hat": math.exp(ys[0]), "exponent_hat": 0.0}
    slope, intercept = np.polyfit(xs, ys, 1)
    return {"C_hat": float(math.exp(intercept)), "exponent_hat": float(slope)}


def vague_stabilization(bubbles, kappa_prime, eps_levels, f):
    """Relative change of measure(f) between successive epsilon levels.

    Diagnostic for vague convergence: reports measure(f) per level and the
    relative change at the two finest levels.
    """
    eps_levels = sorted(eps_levels, reverse=True)
    vals = []
    for eps in eps_levels:
        mu = cut_measure(bubbles, eps, kappa_prime)
        vals.append(mu.integrate(f))
    if len(vals) >= 2 and vals[-1] != 0:
        rel = abs(vals[-1] - vals[-2]) / abs(vals[-1])
    else:
        rel = float("nan")
    return {"epsilons": list(eps_levels), "values": vals, "relative_change_finest": rel}

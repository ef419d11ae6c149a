"""Whitney square decompositions, hyperbolic geodesics, good-annulus checks.

The Whitney construction is the recursive dyadic one: a square is accepted
when its sup-norm distance to the boundary is at least its side length, else
it is subdivided.  With distances and diameters both taken in the sup norm the
sandwich diam(Q) <= dist(Q, bd D) <= 4 diam(Q) holds exactly on the dyadic
grid (lower bound by the acceptance rule, upper bound by parent rejection),
and the Euclidean hyperbolic diameter of every accepted square stays below 1.

Hyperbolic quantities are exact in the disk and pulled back through a
Riemann-map handle elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EstimationError, ParameterError
from .loewner import JordanMap, riemann_map_jordan

__all__ = [
    "WhitneyDecomposition",
    "DiskDomain",
    "SquareDomain",
    "PolygonDomain",
    "whitney_decompose",
    "hyperbolic_distance",
    "geodesic",
    "good_cubes_statistic",
    "geodesic_square_counts",
    "good_annulus_check",
    "farthest_point_sample",
]


# ---- domains ----


class DiskDomain:
    """The unit disk with exact distance, metric, and geodesics."""

    name = "disk"

    def __init__(self):
        self.reference = 0.0 + 0.0j

    def contains(self, z):
        return abs(z) < 1.0

    def dist_inf(self, x0, y0, side):
        """Sup-norm distance from the square [x0,x0+s]x[y0,y0+s] to the circle."""
        th = _CIRCLE_THETA
        dx = np.maximum(np.maximum(x0 - np.cos(th), np.cos(th) - (x0 + side)), 0.0)
        dy = np.maximum(np.maximum(y0 - np.sin(th), np.sin(th) - (y0 + side)), 0.0)
        return float(np.minimum.reduce([np.maximum(dx, dy)]).min())

    def boundary_points(self, m=512):
        th = np.arange(m) * (2 * math.pi / m)
        return np.exp(1j * th)

    def to_disk(self, z):
        return np.asarray(z, dtype=complex)

    def from_disk(self, w):
        return np.asarray(w, dtype=complex)


_CIRCLE_THETA = np.arange(1 << 14) * (2 * math.pi / (1 << 14))


class SquareDomain:
    """Axis-aligned square (x0, x0+s) x (y0, y0+s) with exact sup-norm distance."""

    name = "square"

    def __init__(self, x0=0.0, y0=0.0, side=1.0):
        self.x0, self.y0, self.side = x0, y0, side
        self.reference = complex(x0 + side / 2, y0 + side / 2)

    def contains(self, z):
        z = complex(z)
        return (self.x0 < z.real < self.x0 + self.side
                and self.y0 < z.imag < self.y0 + self.side)

    def dist_inf(self, x0, y0, side):
        if not (self.x0 <= x0 and x0 + side <= self.x0 + self.side
                and self.y0 <= y0 and y0 + side <= self.y0 + self.side):
            return 0.0
        return min(x0 - self.x0, self.x0 + self.side - (x0 + side),
                   y0 - self.y0, self.y0 + self.side - (y0 + side))

    def boundary_points(self, m=512):
        t = np.linspace(0, 1, m // 4, endpoint=False)
        s = self.side
        e = [self.x0 + t * s + 1j * self.y0,
             (self.x0 + s) + 1j * (self.y0 + t * s),
             (self.x0 + s - t * s) + 1j * (self.y0 + s),
             self.x0 + 1j * (self.y0 + s - t * s)]
        return np.concatenate(e)


class PolygonDomain:
    """Jordan polygon equipped with a zipper Riemann map for the metric."""

    name = "polygon"

    def __init__(self, boundary, anchor=None, jordan_map=None):
        pts = np.asarray(boundary, dtype=complex)
        self.boundary = pts
        if anchor is None:
            anchor = pts.mean()
        if jordan_map is None:
            jordan_map = riemann_map_jordan(pts, anchor)
        self.map = jordan_map
        self.reference = complex(anchor)

    @classmethod
    def from_raster_component(cls, mask, origin, spacing, anchor=None):
        from .flowlines import _boundary_polygon, _inner_anchor  # shared helpers

        poly = _boundary_polygon(mask, origin, spacing)
        if anchor is None:
            from scipy import ndimage

            dist = ndimage.distance_transform_edt(mask)
            j, i = np.unravel_index(np.argmax(dist), dist.shape)
            anchor = complex(origin[0] + (i + 0.5) * spacing,
                             origin[1] + (j + 0.5) * spacing)
        return cls(poly, anchor)

    def contains(self, z):
        w = self.map.to_disk(complex(z))
        return abs(w) < 1.0 - 1e-12

    def dist_inf(self, x0, y0, side):
        b = self.boundary
        dx = np.maximum(np.maximum(x0 - b.real, b.real - (x0 + side)), 0.0)
        dy = np.maximum(np.maximum(y0 - b.imag, b.imag - (y0 + side)), 0.0)
        return float(np.maximum(dx, dy).min())

    def boundary_points(self, m=512):
        if len(self.boundary) <= m:
            return self.boundary
        step = len(self.boundary) // m
        return self.boundary[::step]

    def to_disk(self, z):
        return self.map.to_disk(z)

    def from_disk(self, w):
        return self.map.evaluate(w)


# ---- Whitney decomposition ----


@dataclass(frozen=True)
class WhitneyDecomposition:
    """Dyadic squares (corner, side) tiling the domain with the distance sandwich."""

    domain: object
    corners: np.ndarray      # complex lower-left corners
    sides: np.ndarray

    def __len__(self):
        return len(self.sides)

    @property
    def centers(self):
        return self.corners + (0.5 + 0.5j) * self.sides

    def levels(self):
        return np.round(-np.log2(self.sides / self.root_side)).astype(int)

    @property
    def root_side(self):
        return float(self.sides.max()) if len(self.sides) else 1.0

    def locate(self, z):
        """Index of the square containing z, or -1."""
        z = complex(z)
        inside = ((self.corners.real <= z.real) & (z.real < self.corners.real + self.sides)
                  & (self.corners.imag <= z.imag) & (z.imag < self.corners.imag + self.sides))
        hits = np.nonzero(inside)[0]
        return int(hits[0]) if len(hits) else -1


def whitney_decompose(domain, max_level=9):
    """Recursive dyadic Whitney decomposition of a bounded domain.

    Accept a square iff its center lies in the domain and its sup-norm distance
    to the boundary is at least its side; otherwise subdivide (to max_level).
    """
    bp = domain.boundary_points(2048)
    if len(bp) == 0:
        raise DomainError("empty domain")
    lo_x, hi_x = bp.real.min(), bp.real.max()
    lo_y, hi_y = bp.imag.min(), bp.imag.max()
    extent = max(hi_x - lo_x, hi_y - lo_y)
    if extent <= 0:
        raise DomainError("degenerate domain")
    root = 2.0 ** math.ceil(math.log2(extent * (1 + 1e-9)))
    rx = lo_x - (root - (hi_x - lo_x)) / 2.0
    ry = lo_y - (root - (hi_y - lo_y)) / 2.0

    corners, sides = [], []
    stack = [(rx, ry, root, 0)]
    while stack:
        x0, y0, s, lvl = stack.pop()
        cen = complex(x0 + s / 2, y0 + s / 2)
        if domain.contains(cen) and domain.dist_inf(x0, y0, s) >= s:
            corners.append(complex(x0, y0))
            sides.append(s)
            continue
        if lvl >= max_level:
            continue
        if not _square_relevant(domain, x0, y0, s):
            continue
        h = s / 2
        stack.extend([(x0, y0, h, lvl + 1), (x0 + h, y0, h, lvl + 1),
                      (x0, y0 + h, h, lvl + 1), (x0 + h, y0 + h, h, lvl + 1)])
    if not corners:
        raise DomainError("no Whitney squares at this depth")
    return WhitneyDecomposition(domain, np.asarray(corners, complex), np.asarray(sides))


def _square_relevant(domain, x0, y0, s):
    probes = [complex(x0 + s / 2, y0 + s / 2)]
    for fx in (0.01, 0.5, 0.99):
        for fy in (0.01, 0.5, 0.99):
            probes.append(complex(x0 + fx * s, y0 + fy * s))
    if any(domain.contains(p) for p in probes):
        return True
    return domain.dist_inf(x0, y0, s) <= 0.75 * s  # boundary may thread through


# ---- hyperbolic metric (normalization |dz| / (1 - |z|^2) in the disk) ----


def _disk_distance(z1, z2):
    rho = abs((z1 - z2) / (1 - np.conj(z1) * z2))
    rho = min(rho, 1 - 1e-16)
    return 0.5 * math.log((1 + rho) / (1 - rho))


def hyperbolic_distance(domain, z, w):
    """dist_hyp^D via the disk formula, pulled back through the domain's map."""
    zd = complex(domain.to_disk(complex(z)))
    wd = complex(domain.to_disk(complex(w)))
    return _disk_distance(zd, wd)


def geodesic(domain, z, w, t):
    """Point(s) of the unit-speed geodesic from z toward w at hyperbolic time t.

    In the disk from 0 to e^{i theta} this is e^{i theta} tanh(t); the general
    case conjugates by a disk automorphism and the domain's Riemann map.
    """
    t = np.asarray(t, dtype=float)
    zd = complex(domain.to_disk(complex(z)))
    wd = complex(domain.to_disk(complex(w)))
    m_w = (wd - zd) / (1 - np.conj(zd) * wd)
    direction = m_w / abs(m_w)
    total = _disk_distance(zd, wd) if abs(wd) < 1 else math.inf
    pts_std = direction * np.tanh(np.minimum(t, total if total < math.inf else t))
    pts_disk = (pts_std + zd) / (1 + np.conj(zd) * pts_std)
    out = domain.from_disk(pts_disk)
    return out


def farthest_point_sample(points, k):
    """Greedy farthest-point subsample of a complex point set."""
    pts = np.asarray(points, dtype=complex)
    if len(pts) <= k:
        return pts
    chosen = [0]
    dist = np.abs(pts - pts[0])
    for _ in range(k - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.abs(pts - pts[nxt]))
    return pts[chosen]


def _geodesic_hits(domain, decomposition, targets, samples_per_unit=64, t_max=12.0):
    """Set of Whitney-square indices hit by geodesics from the reference point."""
    z0 = decomposition.domain.reference if hasattr(decomposition.domain, "reference") \
        else domain.reference
    hit = {}
    for w in targets:
        total = min(hyperbolic_distance(domain, z0, (1 - 1e-9) * w
                                        if abs(complex(domain.to_disk(w))) >= 1 else w), t_max)
        ts = np.linspace(0.0, min(total, t_max), max(int(samples_per_unit * min(total, t_max)), 16))
        pts = geodesic(domain, z0, w, ts)
        for p in np.atleast_1d(pts):
            idx = decomposition.locate(p)
            if idx >= 0:
                hit.setdefault(idx, 0)
                hit[idx] += 1
    return hit


def good_cubes_statistic(domain, X, a, decomposition=None, n_probes=64):
    """max over hit squares of dist_hyp(cen Qtilde, cen Q) * len(Q)^a.

    Geodesics run from the domain reference point to >= 64 farthest-point
    samples of the boundary set X; Qtilde is the Whitney square containing the
    reference point.
    """
    X = np.asarray(X, dtype=complex)
    if len(X) == 0:
        raise ParameterError("X must be nonempty")
    if decomposition is None:
        decomposition = whitney_decompose(domain)
    targets = farthest_point_sample(X, max(n_probes, min(64, len(X))))
    hits = _geodesic_hits(domain, decomposition, targets)
    anchor_idx = decomposition.locate(domain.reference)
    if anchor_idx < 0:
        raise DomainError("reference point not covered by the decomposition")
    cen0 = decomposition.centers[anchor_idx]
    stat = 0.0
    per_square = []
    for idx in hits:
        cen = decomposition.centers[idx]
        d = hyperbolic_distance(domain, cen0, cen)
        val = d * decomposition.sides[idx] ** a
        per_square.append((idx, d, float(decomposition.sides[idx])))
        stat = max(stat, val)
    return {"statistic": stat, "squares": per_square, "anchor": anchor_idx}


def geodesic_square_counts(domain, X, j_range, decomposition=None, n_probes=64):
    """Count of side-2^-j Whitney squares hit by the geodesic family, per j."""
    X = np.asarray(X, dtype=complex)
    if len(X) == 0:
        raise ParameterError("X must be nonempty")
    if decomposition is None:
        decomposition = whitney_decompose(domain)
    targets = farthest_point_sample(X, max(n_probes, min(64, len(X))))
    hits = _geodesic_hits(domain, decomposition, targets)
    counts = {}
    for idx in hits:
        side = decomposition.sides[idx]
        j = int(round(-math.log2(side)))
        counts[j] = counts.get(j, 0) + 1
    return {j: counts.get(j, 0) for j in j_range}


# ---- the (a, a~, M)-good annulus event ----


def good_annulus_check(field, y_result, grid, pockets, z, k, a, M, kappa_prime,
                       gmc=None):
    """Discrete surrogate of the good-annulus event for Y built on A^2_{z,k}.

    Items: (i) at most M chain components of A^2 minus Y, each meeting A^0 and
    inside A^1, whose closures disconnect the annulus; (ii) shared-boundary
    measures with mass >= M^-1 2^(-d_cut k); (iii) measure-diameter envelope
    with constant M; (iv) Whitney geodesic distance statistic <= M at exponent
    a; (v) geodesic square counts <= M 2^((d_cut+a)(l-k)).  Returns per-item
    pass/fail plus the measured quantities.
    """
    from scipy import ndimage

    from . import cutmeasure as cm
    from .flowlines import _annulus_cell_mask, _dilate

    d_cut = cm.cut_dimension(kappa_prime)
    h = grid.raster_spacing
    y_mask = y_result["raster"]
    inside = _annulus_cell_mask(grid)
    scale = 2.0 ** (-k)
    r_mid = abs(grid.region.r_outer + grid.region.r_inner) / 2.0
    width = (grid.region.r_outer - grid.region.r_inner) / 2.0
    # A^0 and A^1 sub-annuli in the proportions of the construction
    c = grid.region.center
    ny, nx = y_mask.shape
    x = grid.origin[0] + (np.arange(nx) + 0.5) * h
    y = grid.origin[1] + (np.arange(ny) + 0.5) * h
    xx, yy = np.meshgrid(x, y)
    rr = np.hypot(xx - c.real, yy - c.imag)
    u = grid.region.r_outer / (15.0 / 16.0)  # reference radius of the full annulus
    a0 = (rr > (11.0 / 16.0) * u) & (rr < (3.0 / 4.0) * u)
    a1 = (rr > (5.0 / 8.0) * u) & (rr < (7.0 / 8.0) * u)

    free = inside & (y_mask == 0)
    four = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], bool)
    lab, n = ndimage.label(free, structure=four)
    rim = inside & ~_shrink_bool(inside)
    candidates = []
    for comp in range(1, n + 1):
        mask = lab == comp
        if mask.sum() < 4:
            continue
        ring = _dilate(mask) & ~mask
        if (ring & rim).any() or (ring & ~inside).any():
            continue
        if not (mask & a0).any() or (mask & ~a1).any():
            continue
        candidates.append((comp, mask, ring))

    report = {"items": {}, "n_components": len(candidates), "marker": y_result["marker"]}

    # (i): the union of candidate closures disconnects inner from outer rim
    if candidates:
        blocked = np.zeros_like(free)
        for _, mask, ring in candidates:
            blocked |= mask | ring
        passable = inside & ~blocked
        plab, _ = ndimage.label(passable, structure=four)
        inner_rim = inside & (rr < grid.region.r_inner + 2 * h)
        outer_rim = inside & (rr > grid.region.r_outer - 2 * h)
        inner_ids = set(np.unique(plab[inner_rim & passable])) - {0}
        outer_ids = set(np.unique(plab[outer_rim & passable])) - {0}
        disconnects = len(inner_ids & outer_ids) == 0
        report["items"]["i"] = bool(disconnects and 1 <= len(candidates) <= M)
    else:
        report["items"]["i"] = False

    if not candidates:
        for item in ("ii", "iii", "iv", "v"):
            report["items"][item] = False
        report["passed"] = False
        report["statistic_iv"] = []
        return report

    # shared boundaries between consecutive candidates (pairwise rings overlap)
    shared = []
    for i1 in range(len(candidates)):
        for i2 in range(i1 + 1, len(candidates)):
            common = candidates[i1][2] & candidates[i2][2]
            if common.any():
                shared.append((i1, i2, common))

    # (ii)/(iii): cut-measure atoms near each shared boundary
    ok_mass, ok_diam = bool(shared), bool(shared)
    if gmc is not None and shared:
        from .geometry import label_components

        raster = label_components(y_mask, grid.origin, h, geometry="plane")
        bubbles = cm.bubble_table(raster, gmc)
        if len(bubbles):
            eps = float(np.quantile(bubbles.areas, 0.5))
            mu = cm.cut_measure(bubbles, eps, kappa_prime)
        else:
            mu = cm.AtomicMeasure(np.zeros(0, complex), np.zeros(0))
        for i1, i2, common in shared:
            cells = np.argwhere(common)
            pts = (grid.origin[0] + (cells[:, 1] + 0.5) * h
                   + 1j * (grid.origin[1] + (cells[:, 0] + 0.5) * h))
            near = np.zeros(len(mu), dtype=bool)
            for p in pts[:: max(len(pts) // 64, 1)]:
                near |= np.abs(mu.points - p) < 4 * h
            local = cm.AtomicMeasure(mu.points[near], mu.masses[near]) if near.any() \
                else cm.AtomicMeasure(np.zeros(0, complex), np.zeros(0))
            if local.total < (scale ** d_cut) / M:
                ok_mass = False
            if len(local):
                diam = max(np.ptp(pts.real), np.ptp(pts.imag)) + h
                if local.total > M * diam ** (d_cut - a):
                    ok_diam = False
    report["items"]["ii"] = bool(ok_mass and shared)
    report["items"]["iii"] = bool(ok_diam and shared)

    # (iv)/(v): Whitney statistics inside each candidate component
    ok_iv, ok_v = True, True
    stats_iv = []
    for idx, (comp, mask, ring) in enumerate(candidates[: int(M)]):
        try:
            dom = PolygonDomain.from_raster_component(mask, grid.origin, h)
            dec = whitney_decompose(dom, max_level=8)
            bcells = np.argwhere(ring)
            bx = grid.origin[0] + (bcells[:, 1] + 0.5) * h
            by = grid.origin[1] + (bcells[:, 0] + 0.5) * h
            probe = (bx + 1j * by)
            res = good_cubes_statistic(dom, probe, a, decomposition=dec, n_probes=32)
            stat_scaled = 0.0
            for _, d, side in res["squares"]:
                stat_scaled = max(stat_scaled, d * (side / scale) ** a)
            stats_iv.append(stat_scaled)
            if stat_scaled > M:
                ok_iv = False
            j_lo = max(int(round(-math.log2(dec.sides.max()))), 0)
            j_hi = int(round(-math.log2(dec.sides.min())))
            counts = geodesic_square_counts(dom, probe, range(j_lo, j_hi + 1),
                                            decomposition=dec, n_probes=32)
            for j, cnt in counts.items():
                bound = M * 2.0 ** ((d_cut + a) * (j - k))
                if cnt > bound:
                    ok_v = False
        except Exception:
            ok_iv = ok_v = False
    report["items"]["iv"] = bool(ok_iv and stats_iv)
    report["items"]["v"] = bool(ok_v and stats_iv)
    report["statistic_iv"] = stats_iv
    report["passed"] = all(report["items"].values())
    return report


def _shrink_bool(mask):
    out = mask.copy()
    out[1:, :] &= mask[:-1, :]
    out[:-1, :] &= mask[1:, :]
    out[:, 1:] &= mask[:, :-1]
    out[:, :-1] &= mask[:, 1:]
    return out

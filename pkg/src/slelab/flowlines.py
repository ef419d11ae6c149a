"""Heuristic discrete flow lines of e^{ih/chi}, the X/Y annulus grids, pockets.

Flow lines of a rough field are only defined through the field coupling; here
they are realized as explicit Euler trajectories of the ODE
eta' = exp(i (h(eta)/chi + theta)) on the bilinearly interpolated field, so
every downstream statistic is a HEURISTIC surrogate (each output carries that
marker).  Same-angle lines merge when one steps into a grid cell another has
claimed; pockets of the annulus grid are classified by which line sides their
boundary touches, and counterflow lines are transported into type II/III
pockets through the Jordan-domain Riemann map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import DomainError, ParameterError
from .loewner import MapChain, riemann_map_jordan, solve_chordal
from .processes import sample_sle_rho_driving

__all__ = [
    "FlowLine",
    "FlowGrid",
    "Pocket",
    "Annulus",
    "trace_flow_line",
    "interaction_report",
    "build_flow_grid",
    "classify_pockets",
    "build_Y",
    "chi_of_kappa",
]

HEURISTIC = "heuristic-ode-flow-line"


def chi_of_kappa(kappa):
    if not (0 < kappa < 4):
        raise ParameterError(f"flow lines need kappa in (0, 4), got {kappa}")
    return 2.0 / math.sqrt(kappa) - math.sqrt(kappa) / 2.0


@dataclass(frozen=True)
class FlowLine:
    start: complex
    angle: float
    vertices: np.ndarray
    stopped_reason: str          # "exited-region" | "merged" | "step-limit"
    merged_with: int | None = None
    line_id: int = -1
    marker: str = HEURISTIC

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class Annulus:
    center: complex
    r_inner: float
    r_outer: float

    def contains(self, z):
        d = abs(complex(z) - self.center)
        return self.r_inner < d < self.r_outer


@dataclass(frozen=True)
class FlowGrid:
    """Union of +-pi/2 flow lines from (a Z)^2 inside an annulus, rasterized."""

    region: Annulus
    a: float
    kappa: float
    lines: tuple[FlowLine, ...]
    raster_spacing: float
    origin: tuple[float, float]
    union: np.ndarray            # uint8: any line
    angle_masks: dict            # +1/-1 -> uint8 mask
    side_masks: dict             # (angle_sign, 'L'|'R') -> uint8 mask
    marker: str = HEURISTIC


@dataclass(frozen=True)
class Pocket:
    component_id: int
    type: str                    # "I" | "II" | "III" | "untyped"
    opening: complex
    closing: complex
    cells: np.ndarray            # (m, 2) row/col indices into the grid raster
    boundary_sides: tuple        # sorted (angle_sign, side) pairs seen on the boundary


def _region_tuple(region):
    if isinstance(region, Annulus):
        return region
    center, r_in, r_out = region
    return Annulus(complex(center), float(r_in), float(r_out))


def smoothed_field(field, sigma):
    """Gaussian mollification of the field at world-scale sigma (tracing aid).

    The raw lattice field has unbounded pointwise swings (its value variance
    grows like log(1/spacing)), which makes the literal ODE direction spin at
    every cell; mollifying at the seeding pitch keeps the heuristic lines
    coherent at the scales the annulus statistics read.
    """
    from scipy import ndimage

    if not sigma or sigma <= 0:
        return field
    vals = ndimage.gaussian_filter(field.values, sigma / field.spacing)
    return replace(field, values=vals, kind=f"smoothed({field.kind})")


def trace_flow_line(field, z0, theta, kappa, step, region, max_steps=100000,
                    smooth_sigma=None, _occupancy=None, _line_id=-1):
    """Euler flow line of the field from z0 with angle theta, stopped on exit.

    HEURISTIC surrogate for the coupling-defined flow line; see module note.
    ``smooth_sigma`` mollifies the field at that world scale before tracing.
    """
    region = _region_tuple(region)
    z0 = complex(z0)
    if not region.contains(z0):
        raise DomainError(f"start point {z0} lies outside the region")
    if smooth_sigma:
        field = smoothed_field(field, smooth_sigma)
    chi = chi_of_kappa(kappa)
    ny, nx = field.values.shape
    if _occupancy is None:
        occ = np.full((1, 1), -1, dtype=np.int64)
        occ_ox = occ_oy = 1e300  # never hit
        occ_h = 1.0
    else:
        occ, (occ_ox, occ_oy), occ_h = _occupancy
    verts, n, reason, merged = _kernels.flow_line_euler(
        z0.real, z0.imag, float(theta), chi, field.values,
        field.origin[0], field.origin[1], field.spacing, nx, ny,
        float(step), int(max_steps),
        region.r_inner ** 2, region.r_outer ** 2,
        region.center.real, region.center.imag,
        occ, occ_ox, occ_oy, occ_h, occ.shape[1], occ.shape[0], _line_id)
    reasons = {0: "exited-region", 1: "merged", 2: "step-limit"}
    return FlowLine(
        start=z0, angle=float(theta),
        vertices=verts[:, 0] + 1j * verts[:, 1],
        stopped_reason=reasons[reason],
        merged_with=int(merged) if merged >= 0 else None,
        line_id=_line_id,
    )


def interaction_report(line1, line2, step=None):
    """Transversal crossing count and a merged flag for two traced lines."""
    v1, v2 = line1.vertices, line2.vertices
    if step is None:
        d1 = np.abs(np.diff(v1)).max() if len(v1) > 1 else 0.0
        d2 = np.abs(np.diff(v2)).max() if len(v2) > 1 else 0.0
        step = max(d1, d2, 1e-12)
    crossings = _count_crossings(v1, v2)
    merged = bool(abs(v1[-1] - v2[-1]) < 2.0 * step) or line1.merged_with == line2.line_id \
        or line2.merged_with == line1.line_id
    return {"crossings": crossings, "merged": merged}


def _count_crossings(v1, v2, cap=3000):
    if (len(v1) - 1) * (len(v2) - 1) > cap * cap:
        v1 = v1[::max(len(v1) // cap, 1)]
        v2 = v2[::max(len(v2) // cap, 1)]
    n = 0
    a = v1[:-1]
    b = v1[1:]
    for k in range(len(v2) - 1):
        c, d = v2[k], v2[k + 1]
        if c == d:
            continue
        o1 = np.sign((b - a).real * (c - a).imag - (b - a).imag * (c - a).real)
        o2 = np.sign((b - a).real * (d - a).imag - (b - a).imag * (d - a).real)
        o3 = np.sign((d - c).real * (a - c).imag - (d - c).imag * (a - c).real)
        o4 = np.sign((d - c).real * (b - c).imag - (d - c).imag * (b - c).real)
        hit = (o1 != o2) & (o3 != o4) & (o1 != 0) & (o2 != 0) & (o3 != 0) & (o4 != 0)
        n += int(hit.sum())
    return n


def build_flow_grid(field, annulus, a, kappa, step=None, max_steps=4000, smoothing=0.5):
    """X raster: flow lines with angles +-pi/2 from every (a Z)^2 point in the annulus.

    Lines start in a deterministic order (sorted by start point) and merge into
    earlier same-angle lines when they step into an occupancy cell (of side
    2*step, the merging tolerance) another line claimed, so near-coincident
    lines share suffixes.  ``smoothing`` mollifies the field at smoothing * a.
    """
    region = _region_tuple(annulus)
    if a < 4 * field.spacing:
        raise ParameterError(f"grid pitch a={a} under 4 field cells ({field.spacing})")
    if step is None:
        step = a / 4.0
    base_field = smoothed_field(field, smoothing * a) if smoothing else field
    xs = np.arange(math.floor((region.center.real - region.r_outer) / a),
                   math.ceil((region.center.real + region.r_outer) / a) + 1) * a
    ys = np.arange(math.floor((region.center.imag - region.r_outer) / a),
                   math.ceil((region.center.imag + region.r_outer) / a) + 1) * a
    starts = [complex(x, y) for y in ys for x in xs if region.contains(complex(x, y))]
    starts.sort(key=lambda z: (z.imag, z.real))

    h = step
    ox = region.center.real - region.r_outer - 2 * h
    oy = region.center.imag - region.r_outer - 2 * h
    nr = int(math.ceil(2 * (region.r_outer + 2 * h) / h)) + 1
    shape = (nr, nr)
    h_occ = 2.0 * step  # merging tolerance
    nocc = int(math.ceil(2 * (region.r_outer + 2 * h) / h_occ)) + 1
    occupancy = {+1: np.full((nocc, nocc), -1, dtype=np.int64),
                 -1: np.full((nocc, nocc), -1, dtype=np.int64)}
    lines = []
    for idx, z0 in enumerate(starts):
        for sign in (+1, -1):
            line = trace_flow_line(
                base_field, z0, sign * math.pi / 2.0, kappa, step, region,
                max_steps=max_steps,
                _occupancy=(occupancy[sign], (ox, oy), h_occ),
                _line_id=2 * idx + (sign > 0))
            lines.append(line)

    union = np.zeros(shape, dtype=np.uint8)
    angle_masks = {+1: np.zeros(shape, dtype=np.uint8), -1: np.zeros(shape, dtype=np.uint8)}
    side_masks = {(s, sd): np.zeros(shape, dtype=np.uint8)
                  for s in (+1, -1) for sd in ("L", "R")}
    owner = np.full(shape, -1, dtype=np.int32)
    for sign in (+1, -1):
        segs = [[], [], [], [], []]
        for line in lines:
            if (line.angle > 0) != (sign > 0) or len(line.vertices) < 2:
                continue
            v = line.vertices
            segs[0].append(v[:-1].real)
            segs[1].append(v[:-1].imag)
            segs[2].append(v[1:].real)
            segs[3].append(v[1:].imag)
            segs[4].append(np.full(len(v) - 1, line.line_id, dtype=np.int64))
        if not segs[0]:
            continue
        _kernels.mark_segments_sides(
            angle_masks[sign], side_masks[(sign, "L")], side_masks[(sign, "R")], owner,
            np.concatenate(segs[0]), np.concatenate(segs[1]),
            np.concatenate(segs[2]), np.concatenate(segs[3]),
            ox, oy, h, h / math.sqrt(2.0), np.concatenate(segs[4]))
        union |= angle_masks[sign]
    return FlowGrid(region=region, a=a, kappa=kappa, lines=tuple(lines),
                    raster_spacing=h, origin=(ox, oy), union=union,
                    angle_masks=angle_masks, side_masks=side_masks)


def _annulus_cell_mask(grid):
    ny, nx = grid.union.shape
    x = grid.origin[0] + (np.arange(nx) + 0.5) * grid.raster_spacing
    y = grid.origin[1] + (np.arange(ny) + 0.5) * grid.raster_spacing
    xx, yy = np.meshgrid(x, y)
    rr = np.hypot(xx - grid.region.center.real, yy - grid.region.center.imag)
    return (rr > grid.region.r_inner) & (rr < grid.region.r_outer)


def classify_pockets(grid, min_cells=4, side_fraction=0.02, require_enclosed=True):
    """Type each complementary component of the line union inside the annulus.

    A pocket's boundary must consist of flow-line raster only (components that
    touch the annulus rim are skipped).  The type comes from which (angle,
    side) pairs the boundary-adjacent line cells carry: {(+,R), (-,L)} is I,
    {(+,L), (-,R)} is II, all four is III; anything else is untyped and
    reported.  Opening/closing points are the first/last boundary cells in the
    fixed row-major scan of the raster.
    """
    from scipy import ndimage

    inside = _annulus_cell_mask(grid)
    free = inside & (grid.union == 0)
    lab, n = ndimage.label(free, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], bool))
    pockets = []
    ny, nx = lab.shape
    rim = inside & ~_shrink(inside)
    for comp in range(1, n + 1):
        mask = lab == comp
        cells = np.argwhere(mask)
        if len(cells) < min_cells:
            continue
        ring = _dilate(mask) & ~mask
        if require_enclosed and ((ring & ~inside).any() or (ring & rim).any()):
            continue  # touches the annulus rim: not curve-enclosed
        counts = {}
        ring_cells = np.argwhere(ring)
        for s in (+1, -1):
            for sd in ("L", "R"):
                counts[(s, sd)] = int(grid.side_masks[(s, sd)][ring].sum())
        threshold = max(1, int(side_fraction * len(ring_cells)))
        sig = {k for k, c in counts.items() if c >= threshold}
        if sig == {(+1, "R"), (-1, "L")}:
            ptype = "I"
        elif sig == {(+1, "L"), (-1, "R")}:
            ptype = "II"
        elif sig == {(+1, "L"), (+1, "R"), (-1, "L"), (-1, "R")}:
            ptype = "III"
        else:
            ptype = "untyped"
        scan = ring_cells[:, 0] * nx + ring_cells[:, 1]
        j_o, i_o = ring_cells[np.argmin(scan)]
        j_c, i_c = ring_cells[np.argmax(scan)]
        h = grid.raster_spacing
        opening = complex(grid.origin[0] + (i_o + 0.5) * h, grid.origin[1] + (j_o + 0.5) * h)
        closing = complex(grid.origin[0] + (i_c + 0.5) * h, grid.origin[1] + (j_c + 0.5) * h)
        pockets.append(Pocket(component_id=comp, type=ptype, opening=opening,
                              closing=closing, cells=cells,
                              boundary_sides=tuple(sorted(sig))))
    return pockets


def _dilate(mask):
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def _shrink(mask):
    out = mask.copy()
    out[1:, :] &= mask[:-1, :]
    out[:-1, :] &= mask[1:, :]
    out[:, 1:] &= mask[:, :-1]
    out[:, :-1] &= mask[:, 1:]
    return out


def _moebius_three_points(src, dst):
    """2x2 matrix of the Moebius map sending three points to three points."""

    def to_01inf(z1, z2, z3):
        return np.array([[z2 - z3, -z1 * (z2 - z3)], [z2 - z1, -z3 * (z2 - z1)]],
                        dtype=complex)

    a = to_01inf(*src)
    b = to_01inf(*dst)
    binv = np.array([[b[1, 1], -b[0, 1]], [-b[1, 0], b[0, 0]]], dtype=complex)
    return binv @ a


def _apply_moebius(m, z):
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


def _boundary_polygon(mask, origin, h):
    """Ordered polygon of cell-corner points around a 4-connected component."""
    padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    edges = {}
    js, is_ = np.nonzero(padded)
    for j, i in zip(js, is_):
        c00 = (i - 1, j - 1)
        c10 = (i, j - 1)
        c11 = (i, j)
        c01 = (i - 1, j)
        if not padded[j - 1, i]:
            edges[c00] = c10      # bottom edge, left-to-right
        if not padded[j, i + 1]:
            edges[c10] = c11      # right edge, upward
        if not padded[j + 1, i]:
            edges[c11] = c01      # top edge, right-to-left
        if not padded[j, i - 1]:
            edges[c01] = c00      # left edge, downward
    start = next(iter(edges))
    poly = [start]
    cur = edges[start]
    while cur != start and len(poly) <= len(edges) + 1:
        poly.append(cur)
        cur = edges[cur]
    pts = np.array([complex(origin[0] + (px + 1) * h, origin[1] + (py + 1) * h)
                    for px, py in poly])
    return pts


def build_Y(grid, pockets, kappa_prime, seed, horizon=0.35, n_steps=4000, n_points=600):
    """Augment the X raster with counterflow lines inside type II/III pockets.

    For each such pocket a chordal SLE_{kappa'}(kappa'/2-4; kappa'/2-4) sample
    in H (force points at 0^-, 0^+) is transported into the pocket by the
    Jordan Riemann map composed with the boundary Moebius aligning 0 to the
    opening point and infinity to the closing point.  Returns the Y raster
    (uint8) plus the per-pocket transported curves; Y contains every pocket
    boundary by construction.
    """
    if not (4 < kappa_prime < 8):
        raise ParameterError(f"kappa-prime must lie in (4, 8), got {kappa_prime}")
    rho = kappa_prime / 2.0 - 4.0
    h = grid.raster_spacing
    y_mask = grid.union.copy()
    curves = {}
    skipped = []
    rngseq = np.random.SeedSequence(seed)
    children = rngseq.spawn(max(len(pockets), 1))
    for pocket, child in zip(pockets, children):
        mask = np.zeros_like(grid.union, dtype=bool)
        mask[pocket.cells[:, 0], pocket.cells[:, 1]] = True
        ring = _dilate(mask) & ~mask
        y_mask |= ring.astype(np.uint8)  # pocket boundaries always belong to Y
        if pocket.type not in ("II", "III"):
            continue
        try:
            poly = _boundary_polygon(mask, grid.origin, h)
            if len(poly) < 8:
                raise DomainError("pocket too small for a boundary polygon")
            anchor = _inner_anchor(pocket, grid)
            jmap = riemann_map_jordan(poly, anchor)
            curve = _transport_counterflow(jmap, pocket, kappa_prime, rho, child,
                                           horizon, n_steps, n_points)
        except Exception as exc:  # degenerate pocket: skip, log
            skipped.append((pocket.component_id, repr(exc)))
            continue
        curves[pocket.component_id] = curve
        segs_x0 = np.ascontiguousarray(curve[:-1].real)
        segs_y0 = np.ascontiguousarray(curve[:-1].imag)
        segs_x1 = np.ascontiguousarray(curve[1:].real)
        segs_y1 = np.ascontiguousarray(curve[1:].imag)
        _kernels.mark_segments(y_mask, segs_x0, segs_y0, segs_x1, segs_y1,
                               grid.origin[0], grid.origin[1], h, h / math.sqrt(2.0))
    return {"raster": y_mask, "curves": curves, "skipped": skipped, "marker": HEURISTIC}


def _inner_anchor(pocket, grid):
    from scipy import ndimage

    mask = np.zeros_like(grid.union, dtype=bool)
    mask[pocket.cells[:, 0], pocket.cells[:, 1]] = True
    dist = ndimage.distance_transform_edt(mask)
    j, i = np.unravel_index(np.argmax(dist), dist.shape)
    h = grid.raster_spacing
    return complex(grid.origin[0] + (i + 0.5) * h, grid.origin[1] + (j + 0.5) * h)


def _transport_counterflow(jmap, pocket, kappa_prime, rho, seedseq, horizon, n_steps,
                           n_points):
    seed = int(seedseq.generate_state(1)[0])
    driving = sample_sle_rho_driving(
        kappa_prime, [rho, rho], [(-0.0, "L"), (0.0, "R")],
        horizon=horizon, dt=horizon / n_steps, seed=seed)
    tr = solve_chordal(MapChain.from_driving(driving), n_points=n_points)
    zs = tr.vertices
    cay = (zs - 1j) / (zs + 1j)   # H -> D: 0 -> -1, infinity -> 1
    th_open = _disk_angle(jmap, pocket.opening)
    th_close = _disk_angle(jmap, pocket.closing)
    mid = _arc_midpoint(th_open, th_close)
    m = _moebius_three_points((-1.0 + 0j, 0.0 - 1j, 1.0 + 0j),
                              (np.exp(1j * th_open), np.exp(1j * mid), np.exp(1j * th_close)))
    disk_pts = _apply_moebius(m, cay)
    mags = np.abs(disk_pts)
    disk_pts = np.where(mags > 1.0, disk_pts / mags, disk_pts)  # clamp round-off
    # the sampled chord has finite capacity: close the tail at the image of
    # infinity so the transported curve ends at the closing point
    disk_pts = np.concatenate([disk_pts, [np.exp(1j * th_close)]])
    return jmap.evaluate(disk_pts * (1 - 1e-9))


def _disk_angle(jmap, boundary_point):
    z = complex(boundary_point)
    inward = jmap.anchor - z
    probe = z + 1e-3 * inward / abs(inward)
    w = jmap.to_disk(probe)
    return float(np.angle(w))


def _arc_midpoint(th_a, th_b):
    """Angle halfway from th_a to th_b going counterclockwise."""
    gap = (th_b - th_a) % (2 * math.pi)
    return th_a + 0.5 * gap

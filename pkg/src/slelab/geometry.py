"""Rasterization, complementary components, adjacency, cut points, dimensions.

A curve is rasterized onto a square grid; cells within spacing/sqrt(2) of any
segment are TRACE.  Complementary components are 4-connected (TRACE itself is
treated 8-connected) so diagonal leaks between pockets cannot occur.  For
chordal geometry the real axis is a floor: only components reaching the top or
side borders count as EXTERIOR, so pockets squeezed between curve and R keep
their identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import EstimationError, ParameterError

__all__ = [
    "ComponentRaster",
    "ComponentGraph",
    "rasterize",
    "rasterize_segments",
    "adjacency_graph",
    "connectivity",
    "detect_cut_points",
    "box_dimension",
    "ball_filling_report",
]

TRACE = -1
EXTERIOR = 0
_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class ComponentRaster:
    """Occupancy grid: labels[j,i] is TRACE (-1), EXTERIOR (0) or a component id >= 1."""

    labels: np.ndarray            # int32 (ny, nx)
    origin: tuple[float, float]   # lower-left corner (x, y)
    spacing: float
    geometry: str = "plane"       # "plane" | "chordal" (y=0 floor)

    @property
    def shape(self):
        return self.labels.shape

    @property
    def n_components(self):
        m = self.labels.max()
        return int(m) if m > 0 else 0

    def component_sizes(self):
        n = self.n_components
        if n == 0:
            return np.zeros(0, dtype=np.int64)
        return np.bincount(self.labels[self.labels > 0], minlength=n + 1)[1:]

    def cell_center(self, i, j):
        return (self.origin[0] + (np.asarray(i) + 0.5) * self.spacing,
                self.origin[1] + (np.asarray(j) + 0.5) * self.spacing)

    def to_pgm(self):
        """Portable graymap bytes: TRACE black, EXTERIOR white, components mid-gray cycle."""
        lab = self.labels
        img = np.where(lab == TRACE, 0, np.where(lab == EXTERIOR, 255,
                       64 + (lab % 8) * 16)).astype(np.uint8)
        header = f"P5\n{lab.shape[1]} {lab.shape[0]}\n255\n".encode()
        return header + img[::-1].tobytes()


@dataclass(frozen=True)
class ComponentGraph:
    """Undirected adjacency over complementary components via shared TRACE cells."""

    n_nodes: int
    sizes: np.ndarray
    edges: dict = field(default_factory=dict)   # (a, b) a<b -> shared TRACE cell count

    def neighbors(self, a):
        out = set()
        for (u, v) in self.edges:
            if u == a:
                out.add(v)
            elif v == a:
                out.add(u)
        return out


def rasterize_segments(segments, spacing, bounds=None, geometry="plane", pad=2):
    """TRACE mask for a list of segments ((x0,y0),(x1,y1)) at the given spacing."""
    segs = np.asarray(segments, dtype=float)
    if segs.ndim != 3 or segs.shape[1:] != (2, 2):
        raise ParameterError("segments must have shape (n, 2, 2)")
    if bounds is None:
        xs = segs[:, :, 0]
        ys = segs[:, :, 1]
        lo_x, hi_x = xs.min(), xs.max()
        lo_y, hi_y = ys.min(), ys.max()
    else:
        (lo_x, lo_y), (hi_x, hi_y) = bounds
    if geometry == "chordal":
        lo_y = 0.0
    ox = lo_x - pad * spacing
    oy = lo_y - (0 if geometry == "chordal" else pad * spacing)
    nx = int(np.ceil((hi_x - ox) / spacing)) + pad + 1
    ny = int(np.ceil((hi_y - oy) / spacing)) + pad + 1
    cells = np.zeros((ny, nx), dtype=np.uint8)
    _kernels.mark_segments(
        cells,
        np.ascontiguousarray(segs[:, 0, 0]), np.ascontiguousarray(segs[:, 0, 1]),
        np.ascontiguousarray(segs[:, 1, 0]), np.ascontiguousarray(segs[:, 1, 1]),
        ox, oy, spacing, spacing / np.sqrt(2.0))
    return cells, (ox, oy)


def rasterize(trace, spacing, bounds=None, geometry=None):
    """ComponentRaster of a Trace (or complex vertex array) at the given spacing.

    Bounded complementary components get ids 1..n by flood fill; the far-field
    component(s) are EXTERIOR.  ``geometry`` defaults to "chordal" when every
    vertex has nonnegative imaginary part.
    """
    verts = np.asarray(getattr(trace, "vertices", trace), dtype=complex)
    if len(verts) < 2:
        raise ParameterError("need at least 2 vertices to rasterize")
    if geometry is None:
        geometry = "chordal" if verts.imag.min() >= -1e-12 else "plane"
    segs = np.stack([
        np.stack([verts[:-1].real, verts[:-1].imag], axis=1),
        np.stack([verts[1:].real, verts[1:].imag], axis=1),
    ], axis=1)
    cells, origin = rasterize_segments(segs, spacing, bounds=bounds, geometry=geometry)
    return label_components(cells, origin, spacing, geometry)


def label_components(trace_mask, origin, spacing, geometry="plane"):
    """Label the complement of a TRACE mask into EXTERIOR and components 1..n."""
    free = trace_mask == 0
    lab, n = ndimage.label(free, structure=_FOUR)
    border = set()
    border.update(np.unique(lab[-1, :]))          # top
    border.update(np.unique(lab[:, 0]))           # left
    border.update(np.unique(lab[:, -1]))          # right
    if geometry != "chordal":
        border.update(np.unique(lab[0, :]))       # bottom (plane only)
    border.discard(0)
    out = np.where(trace_mask > 0, TRACE, 0).astype(np.int32)
    next_id = 1
    if n:
        table = np.zeros(n + 1, dtype=np.int32)
        for comp in range(1, n + 1):
            if comp in border:
                table[comp] = EXTERIOR
            else:
                table[comp] = next_id
                next_id += 1
        out[free] = table[lab[free]]
    return ComponentRaster(out, origin, spacing, geometry)


def _component_adjacent_trace_cells(raster):
    """For each component id, the set of TRACE cells 4-adjacent to it."""
    lab = raster.labels
    ny, nx = lab.shape
    out = {}
    trace = lab == TRACE
    for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        shifted = np.full_like(lab, EXTERIOR)
        js = slice(max(dj, 0), ny + min(dj, 0))
        jd = slice(max(-dj, 0), ny + min(-dj, 0))
        is_ = slice(max(di, 0), nx + min(di, 0))
        id_ = slice(max(-di, 0), nx + min(-di, 0))
        shifted[jd, id_] = lab[js, is_]
        mask = trace & (shifted > 0)
        for j, i in zip(*np.nonzero(mask)):
            out.setdefault(int(shifted[j, i]), set()).add((int(j), int(i)))
    return out


def adjacency_graph(raster):
    """Edges between components that share a boundary-adjacent TRACE cell."""
    adj = _component_adjacent_trace_cells(raster)
    cell_owner = {}
    edges = {}
    for comp, cells in adj.items():
        for c in cells:
            cell_owner.setdefault(c, set()).add(comp)
    for cell, comps in cell_owner.items():
        if len(comps) > 1:
            comps = sorted(comps)
            for a in range(len(comps)):
                for b in range(a + 1, len(comps)):
                    key = (comps[a], comps[b])
                    edges[key] = edges.get(key, 0) + 1
    return ComponentGraph(raster.n_components, raster.component_sizes(), edges)


def connectivity(graph, min_cells=4):
    """Connectivity of the subgraph induced by components with >= min_cells cells."""
    keep = {i + 1 for i in range(graph.n_nodes) if graph.sizes[i] >= min_cells}
    if not keep:
        return {"connected": True, "components": 0}
    parent = {v: v for v in keep}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for (a, b) in graph.edges:
        if a in keep and b in keep:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    roots = {find(v) for v in keep}
    return {"connected": len(roots) == 1, "components": len(roots)}


def detect_cut_points(raster, window=3):
    """Centers of TRACE cells whose removal locally disconnects the trace.

    A cell qualifies if deleting it increases the number of 4-connected TRACE
    components inside its (2*window+1)^2 neighborhood and that neighborhood
    meets at least two distinct bounded complementary components (the pockets
    a cut point separates sit within a cell or two of it).  When the raster
    has fewer than two bounded components (a simple arc separates nothing)
    the second condition is vacuous and every locally disconnecting cell
    qualifies: the cut points of a simple curve are all of its points.
    """
    lab = raster.labels
    trace = lab == TRACE
    ny, nx = lab.shape
    require_two = raster.n_components >= 2
    pts_i, pts_j = [], []
    js, is_ = np.nonzero(trace)
    for j, i in zip(js, is_):
        j0, j1 = max(j - window, 0), min(j + window + 1, ny)
        i0, i1 = max(i - window, 0), min(i + window + 1, nx)
        if require_two:
            patch = lab[j0:j1, i0:i1]
            comps = np.unique(patch[patch > 0])
            if len(comps) < 2:
                continue
        local = trace[j0:j1, i0:i1]
        before = ndimage.label(local, structure=_FOUR)[1]
        local = local.copy()
        local[j - j0, i - i0] = False
        after = ndimage.label(local, structure=_FOUR)[1]
        if after > before:
            pts_i.append(i)
            pts_j.append(j)
    x, y = raster.cell_center(np.array(pts_i, dtype=float), np.array(pts_j, dtype=float))
    return x + 1j * y


def box_dimension(points, scales):
    """Least-squares slope of log N(eps) against log(1/eps) over the given scales."""
    pts = np.asarray(points, dtype=complex).ravel()
    scales = np.asarray(scales, dtype=float)
    if len(scales) < 3:
        raise ParameterError("need at least 3 scales")
    if len(pts) < 100:
        raise EstimationError("need at least 100 points for a dimension estimate")
    if np.ptp(pts.real) == 0 and np.ptp(pts.imag) == 0:
        raise EstimationError("degenerate point set")
    counts = np.array([_box_count(pts, eps) for eps in scales], dtype=float)
    if np.any(counts <= 0):
        raise EstimationError("empty box count at some scale")
    x = np.log(1.0 / scales)
    y = np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(len(x) - 2, 1)
    sxx = np.sum((x - x.mean()) ** 2)
    stderr = float(np.sqrt(np.sum(resid ** 2) / dof / sxx))
    return {"estimate": float(slope), "stderr": stderr,
            "scales": scales.tolist(), "counts": counts.tolist()}


def _box_count(pts, eps):
    ij = np.stack([np.floor(pts.real / eps).astype(np.int64),
                   np.floor(pts.imag / eps).astype(np.int64)], axis=1)
    return len(np.unique(ij, axis=0))


def occupied_boxes(mask, eps_cells):
    """Box count of a raster mask at a box size of eps_cells grid cells."""
    step = max(int(eps_cells), 1)
    js, is_ = np.nonzero(mask)
    if len(js) == 0:
        return 0
    coarse = set(zip((js // step).tolist(), (is_ // step).tolist()))
    return len(coarse)


def ball_filling_report(trace, epsilon, delta, spacing, window=None, max_pairs=200, seed=0):
    """Check that near-revisits of the curve trap a ball of comparable diameter.

    For sampled pairs s < t with |eta(s) - eta(t)| <= epsilon inside a compact
    window, the rasterized piece eta([s,t]) must disconnect from infinity a
    ball of diameter at least |eta(s) - eta(t)|^(1+delta).  Returns the
    violation count and rate (discretization-limited; reported, not asserted).
    """
    verts = np.asarray(getattr(trace, "vertices", trace), dtype=complex)
    n = len(verts)
    rng = np.random.default_rng(seed)
    if window is not None:
        (wx0, wy0), (wx1, wy1) = window
        inside = ((verts.real >= wx0) & (verts.real <= wx1)
                  & (verts.imag >= wy0) & (verts.imag <= wy1))
    else:
        inside = np.ones(n, dtype=bool)
    cand = np.nonzero(inside)[0]
    if len(cand) > 400:
        cand = cand[np.unique(np.linspace(0, len(cand) - 1, 400).round().astype(int))]
    arclen = np.concatenate(([0.0], np.cumsum(np.abs(np.diff(verts)))))
    pairs = []
    sub = verts[cand]
    dmat = np.abs(sub[:, None] - sub[None, :])
    for a in range(len(cand)):
        for b in range(a + 1, len(cand)):
            s, t = int(cand[a]), int(cand[b])
            if t - s < 8:
                continue
            d = float(dmat[a, b])
            # a revisit, not two nearby times: the curve must travel much
            # farther than the displacement
            if 0 < d <= epsilon and arclen[t] - arclen[s] >= 4.0 * d:
                pairs.append((s, t, d))
    pairs.sort(key=lambda p: (p[2], p[0]))
    pairs = pairs[:max_pairs]
    violations = 0
    for s, t, d in pairs:
        need = d ** (1.0 + delta)
        sub = verts[s: t + 1]
        segs = np.stack([
            np.stack([sub[:-1].real, sub[:-1].imag], axis=1),
            np.stack([sub[1:].real, sub[1:].imag], axis=1),
        ], axis=1)
        cells, _ = rasterize_segments(segs, spacing, geometry="plane")
        enclosed = _max_enclosed_diameter(cells, spacing)
        if enclosed < need:
            violations += 1
    return {"pairs": len(pairs), "violations": violations,
            "rate": violations / len(pairs) if pairs else 0.0}


def _max_enclosed_diameter(trace_mask, spacing):
    """Diameter of the largest ball inside the region the mask disconnects from infinity."""
    free = trace_mask == 0
    lab, _ = ndimage.label(free, structure=_FOUR)
    border_ids = set(np.unique(lab[0, :])) | set(np.unique(lab[-1, :])) \
        | set(np.unique(lab[:, 0])) | set(np.unique(lab[:, -1]))
    trapped = free.copy()
    for b in border_ids:
        if b != 0:
            trapped[lab == b] = False
    filled = trapped | (trace_mask > 0)
    if not filled.any():
        return 0.0
    dist = ndimage.distance_transform_edt(filled)
    return float(2.0 * dist.max() * spacing)

"""Discrete Gaussian free fields and the machinery built on top of them.

Synthesis is spectral: the zero-boundary field on a rectangle is a sine-basis
sum with weights 8*pi / (lambda_jk * a^2 * nx * ny), which makes the node
covariance equal to 2*pi times the inverse discrete Dirichlet Laplacian.  In
the continuum normalization that gives Var h_eps(z) = log(1/eps) + log CR(z,D)
up to a lattice constant; the constant is measured once from the exact discrete
Green function and absorbed into a variance-matched spacing used by the GMC
weights (the "calibrated normalization" knob).

Fields on subdomains (disk, ball decompositions) use the exact discrete domain
Markov property: restrict the rectangle field and subtract the discrete
harmonic extension of its values off the subdomain.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, ParameterError

__all__ = [
    "DiscreteField",
    "GmcMeasure",
    "GoodScaleReport",
    "sample_zero_boundary",
    "sample_zero_boundary_rect",
    "circle_average",
    "harmonic_decompose",
    "is_m_good",
    "good_scale_stats",
    "gmc_area",
    "gmc_boundary",
    "synthesize_wedge_field",
    "harmonic_conjugate",
    "wedge_alpha",
    "field_from_function",
    "lattice_constant",
]


@dataclass(frozen=True)
class DiscreteField:
    """Grid of real values with boundary-condition metadata.

    Nodes sit at origin + (i, j) * spacing; values has shape (ny, nx) indexed
    [j, i].  Sites outside ``mask`` (if any) are held at 0.  ``gmc_spacing``
    is the variance-matched spacing used by the GMC regularization exponent.
    """

    values: np.ndarray
    origin: tuple[float, float]
    spacing: float
    kind: str = "zero_boundary"
    mask: np.ndarray | None = None
    seed: int | None = None
    gmc_spacing: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if not np.all(np.isfinite(v)):
            raise ParameterError("field values must be finite")

    @property
    def shape(self):
        return self.values.shape

    def node_xy(self):
        ny, nx = self.values.shape
        x = self.origin[0] + np.arange(nx) * self.spacing
        y = self.origin[1] + np.arange(ny) * self.spacing
        return x, y

    def interp(self, zx, zy):
        """Bilinear interpolation; clamped at the grid edge."""
        zx = np.asarray(zx, dtype=float)
        zy = np.asarray(zy, dtype=float)
        fx = (zx - self.origin[0]) / self.spacing
        fy = (zy - self.origin[1]) / self.spacing
        ny, nx = self.values.shape
        i = np.clip(np.floor(fx).astype(int), 0, nx - 2)
        j = np.clip(np.floor(fy).astype(int), 0, ny - 2)
        tx = np.clip(fx - i, 0.0, 1.0)
        ty = np.clip(fy - j, 0.0, 1.0)
        v = self.values
        return (v[j, i] * (1 - tx) * (1 - ty) + v[j, i + 1] * tx * (1 - ty)
                + v[j + 1, i] * (1 - tx) * ty + v[j + 1, i + 1] * tx * ty)

    def shifted(self, c):
        """Field plus a constant (kind records the shift)."""
        return replace(self, values=self.values + c, kind=f"shifted({self.kind})")


@dataclass(frozen=True)
class GmcMeasure:
    """Grid-aligned nonnegative cell masses of a multiplicative-chaos measure."""

    masses: np.ndarray
    origin: tuple[float, float]
    spacing: float
    gamma: float

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        object.__setattr__(self, "masses", m)
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ParameterError("masses must be finite and nonnegative")

    @property
    def total(self):
        return float(self.masses.sum())

    def mass_in(self, predicate):
        """Mass of {(x, y): predicate(x, y)} evaluated at cell nodes."""
        ny, nx = self.masses.shape
        x = self.origin[0] + np.arange(nx) * self.spacing
        y = self.origin[1] + np.arange(ny) * self.spacing
        xx, yy = np.meshgrid(x, y)
        return float(self.masses[predicate(xx, yy)].sum())

    def mass_in_ball(self, z, r):
        z = complex(z)
        return self.mass_in(lambda x, y: (x - z.real) ** 2 + (y - z.imag) ** 2 < r * r)


@dataclass(frozen=True)
class GoodScaleReport:
    z: complex
    radii: tuple[float, ...]
    flags: tuple[bool, ...]

    @property
    def fraction_good(self):
        return sum(self.flags) / len(self.flags) if self.flags else 0.0


# ---- synthesis ----


def _sine_field(nx, ny, a, rng):
    """Zero-boundary field on an (nx x ny)-cell rectangle, nodes (ny+1, nx+1)."""
    j = np.arange(1, nx)
    k = np.arange(1, ny)
    lam = ((2 - 2 * np.cos(np.pi * j / nx))[None, :]
           + (2 - 2 * np.cos(np.pi * k / ny))[:, None]) / (a * a)
    sigma = np.sqrt(8.0 * np.pi / (lam * a * a * nx * ny))
    z = rng.normal(size=(ny - 1, nx - 1))
    interior = scipy.fft.dstn(z * sigma, type=1) / 4.0
    vals = np.zeros((ny + 1, nx + 1))
    vals[1:ny, 1:nx] = interior
    return vals


_LATTICE_C0 = {}


def lattice_constant(n=256):
    """Exact lattice constant c0 in Var h(x) = log(1/a) + log CR(x, D) + c0.

    Measured from the discrete Green function at the center of the unit disk
    (where CR = 1) on an n-cell grid; cached.  Depends on the 5-point stencil
    only, up to o(1) in the mesh.
    """
    if n not in _LATTICE_C0:
        mask, origin, a = _disk_mask(n)
        lap, idx = _masked_laplacian(mask)
        ny, nx = mask.shape
        jc, ic = ny // 2, nx // 2
        rhs = np.zeros(lap.shape[0])
        rhs[idx[jc, ic]] = 2.0 * np.pi
        green = spla.spsolve(lap.tocsc(), rhs)
        var = green[idx[jc, ic]]
        _LATTICE_C0[n] = float(var + math.log(a))
    return _LATTICE_C0[n]


def _disk_mask(n):
    a = 2.0 / n
    xs = -1.0 + np.arange(n + 1) * a
    xx, yy = np.meshgrid(xs, xs)
    return (xx * xx + yy * yy) < 1.0 - 1e-12, (-1.0, -1.0), a


def _masked_laplacian(mask):
    """Dimensionless 5-point Laplacian on True sites, Dirichlet outside."""
    ny, nx = mask.shape
    idx = -np.ones((ny, nx), dtype=np.int64)
    sites = np.nonzero(mask)
    m = len(sites[0])
    idx[sites] = np.arange(m)
    rows = [np.arange(m)]
    cols = [np.arange(m)]
    vals = [np.full(m, 4.0)]
    for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        jj = sites[0] + dj
        ii = sites[1] + di
        ok = (jj >= 0) & (jj < ny) & (ii >= 0) & (ii < nx)
        ok2 = ok.copy()
        ok2[ok] = mask[jj[ok], ii[ok]]
        rows.append(np.arange(m)[ok2])
        cols.append(idx[jj[ok2], ii[ok2]])
        vals.append(np.full(int(ok2.sum()), -1.0))
    lap = sp.csr_matrix((np.concatenate(vals),
                         (np.concatenate(rows), np.concatenate(cols))), shape=(m, m))
    return lap, idx


_SPLU_CACHE = {}


def _cached_splu(key, builder):
    if key not in _SPLU_CACHE:
        if len(_SPLU_CACHE) > 48:
            _SPLU_CACHE.pop(next(iter(_SPLU_CACHE)))
        lap, idx = builder()
        _SPLU_CACHE[key] = (spla.splu(lap.tocsc()), idx)
    return _SPLU_CACHE[key]


def sample_zero_boundary(n, seed, domain="square"):
    """Exact discrete zero-boundary GFF on an n-cell grid.

    domain "square": [0,1]^2.  domain "disk": the unit disk inside [-1,1]^2,
    produced from the square field by the exact discrete Markov property
    (subtract the discrete-harmonic extension of the off-disk values).
    domain "halfplane": window [-2,2] x [0,2], zero boundary on all sides.
    """
    if n < 8:
        raise ParameterError("grid too small: need n >= 8")
    rng = np.random.default_rng(seed)
    c0 = lattice_constant(min(n, 512))
    if domain == "square":
        a = 1.0 / n
        vals = _sine_field(n, n, a, rng)
        return DiscreteField(vals, (0.0, 0.0), a, kind="zero_boundary", seed=seed,
                             gmc_spacing=a * math.exp(-c0))
    if domain == "disk":
        mask, origin, a = _disk_mask(n)
        vals = _sine_field(n, n, a, rng)
        vals = _restrict_markov(vals, mask, f"disk-{n}")
        return DiscreteField(vals, origin, a, kind="zero_boundary", mask=mask, seed=seed,
                             gmc_spacing=a * math.exp(-c0))
    if domain == "halfplane":
        a = 4.0 / n
        vals = _sine_field(n, n // 2, a, rng)
        return DiscreteField(vals, (-2.0, 0.0), a, kind="zero_boundary", seed=seed,
                             gmc_spacing=a * math.exp(-c0))
    raise ParameterError(f"unknown domain {domain!r}")


def sample_zero_boundary_rect(x_range, y_range, n_x, seed):
    """Zero-boundary GFF on an arbitrary rectangle with n_x cells across."""
    x0, x1 = x_range
    y0, y1 = y_range
    nx = int(n_x)
    a = (x1 - x0) / nx
    ny = max(int(round((y1 - y0) / a)), 4)
    rng = np.random.default_rng(seed)
    vals = _sine_field(nx, ny, a, rng)
    return DiscreteField(vals, (x0, y0), a, kind="zero_boundary", seed=seed,
                         gmc_spacing=a * math.exp(-lattice_constant()))


def _restrict_markov(vals, mask, cache_key):
    """Exact domain Markov restriction: subtract the harmonic extension of off-mask data."""
    lu, idx = _cached_splu(("markov", cache_key, mask.shape), lambda: _masked_laplacian(mask))
    rhs = _neighbor_sum_outside(vals, mask)
    harm = lu.solve(rhs)
    out = np.zeros_like(vals)
    out[mask] = vals[mask] - harm
    return out


def _neighbor_sum_outside(vals, mask):
    """RHS of the Dirichlet system: sum of off-mask neighbor values per masked site."""
    ny, nx = mask.shape
    sites = np.nonzero(mask)
    rhs = np.zeros(len(sites[0]))
    for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        jj = np.clip(sites[0] + dj, 0, ny - 1)
        ii = np.clip(sites[1] + di, 0, nx - 1)
        outside = ~mask[jj, ii]
        rhs[outside] += vals[jj[outside], ii[outside]]
    return rhs


# ---- averages and decompositions ----


def circle_average(field, z, r):
    """Trapezoidal average of the field over the circle |w - z| = r.

    Uses max(16, ceil(2 pi r / spacing)) bilinearly interpolated samples.  On
    half-plane grids (origin at y = 0) a circle centered on the real axis is
    replaced by the upper half-circle, matching the half-plane convention.
    """
    z = complex(z)
    m = max(16, int(math.ceil(2 * math.pi * r / field.spacing)))
    if field.origin[1] == 0.0 and z.imag - r < -1e-12:
        if z.imag > 1e-12:
            raise DomainError("circle dips under the half-plane grid")
        th = np.linspace(0.0, math.pi, m + 1)
    else:
        th = np.arange(m) * (2 * math.pi / m)
    px = z.real + r * np.cos(th)
    py = z.imag + r * np.sin(th)
    if not _inside_grid(field, px, py):
        raise DomainError(f"circle of radius {r} around {z} exits the grid")
    return float(np.mean(field.interp(px, py)))


def _inside_grid(field, px, py):
    ny, nx = field.values.shape
    x1 = field.origin[0] + (nx - 1) * field.spacing
    y1 = field.origin[1] + (ny - 1) * field.spacing
    return (px.min() >= field.origin[0] - 1e-9 and px.max() <= x1 + 1e-9
            and py.min() >= field.origin[1] - 1e-9 and py.max() <= y1 + 1e-9)


def _ball_mask(field, z, r):
    x, y = field.node_xy()
    xx, yy = np.meshgrid(x, y)
    ball = ((xx - z.real) ** 2 + (yy - z.imag) ** 2) < r * r
    if field.mask is not None:
        ball &= field.mask
    return ball


def harmonic_decompose(field, z, r):
    """Split the field on B(z, r) into inner (zero-boundary) + harmonic parts.

    The harmonic part is the discrete-harmonic extension of the field values
    on the sites bordering the ball; inner = field - harmonic vanishes there.
    By the exact discrete Markov property the inner part is distributed as a
    zero-boundary GFF on the ball.
    """
    z = complex(z)
    ball = _ball_mask(field, z, r)
    if not ball.any():
        raise DomainError("ball contains no grid sites")
    if ball[0, :].any() or ball[-1, :].any() or ball[:, 0].any() or ball[:, -1].any():
        raise DomainError("ball must lie strictly inside the grid")
    mask_token = None if field.mask is None else zlib.crc32(np.packbits(field.mask).tobytes())
    key = ("ball", field.values.shape, field.origin, field.spacing,
           round(z.real, 12), round(z.imag, 12), round(r, 12), mask_token)
    lu, idx = _cached_splu(key, lambda: _masked_laplacian(ball))
    rhs = _neighbor_sum_outside(field.values, ball)
    harm_vals = lu.solve(rhs)
    harm = np.array(field.values)
    harm[ball] = harm_vals
    inner = np.zeros_like(field.values)
    inner[ball] = field.values[ball] - harm_vals
    mk = dict(origin=field.origin, spacing=field.spacing, mask=ball, seed=field.seed,
              gmc_spacing=field.gmc_spacing)
    return (DiscreteField(inner, kind="zero_boundary", **mk),
            DiscreteField(harm, kind="harmonic", **mk))


def is_m_good(field, z, r, M):
    """Harmonic-part oscillation test: sup over B(z, 15r/16) of |h(w) - h(z)| <= M."""
    z = complex(z)
    _, harm = harmonic_decompose(field, z, r)
    inner_ball = _ball_mask(field, z, 15.0 * r / 16.0)
    hz = float(harm.interp(z.real, z.imag))
    osc = np.abs(harm.values[inner_ball] - hz).max()
    return bool(osc <= M)


def good_scale_stats(field, z, r, K, M):
    """Per-scale M-good flags at radii r_k = 2^-k r, k = 1..K."""
    radii = [r * 2.0 ** (-k) for k in range(1, K + 1)]
    if radii[-1] < 4 * field.spacing:
        raise DomainError(f"K={K} too deep: finest radius {radii[-1]:.4g} under 4 cells")
    flags = tuple(is_m_good(field, z, rk, M) for rk in radii)
    return GoodScaleReport(z=complex(z), radii=tuple(radii), flags=flags)


# ---- multiplicative chaos ----


def gmc_area(field, gamma):
    """Area measure: cell mass a^2 * a_hat^(gamma^2/2) * exp(gamma h)."""
    if not (0 < gamma < 2):
        raise ParameterError(f"gamma must lie in (0, 2), got {gamma}")
    a = field.spacing
    a_hat = field.gmc_spacing if field.gmc_spacing is not None else a
    masses = (a ** 2) * (a_hat ** (gamma * gamma / 2.0)) * np.exp(gamma * field.values)
    if field.mask is not None:
        masses = np.where(field.mask, masses, 0.0)
    else:
        masses = masses.copy()
        masses[0, :] = masses[-1, :] = 0.0
        masses[:, 0] = masses[:, -1] = 0.0
    return GmcMeasure(masses, field.origin, a, gamma)


def gmc_boundary(field, gamma, segment):
    """Boundary length measure along a segment: a * a_hat^(gamma^2/4) * exp(gamma h / 2)."""
    if not (0 < gamma < 2):
        raise ParameterError(f"gamma must lie in (0, 2), got {gamma}")
    (x0, y0), (x1, y1) = segment
    a = field.spacing
    a_hat = field.gmc_spacing if field.gmc_spacing is not None else a
    length = math.hypot(x1 - x0, y1 - y0)
    m = max(int(round(length / a)), 1)
    t = (np.arange(m) + 0.5) / m
    px = x0 + t * (x1 - x0)
    py = y0 + t * (y1 - y0)
    vals = field.interp(px, py)
    masses = a * (a_hat ** (gamma * gamma / 4.0)) * np.exp(0.5 * gamma * vals)
    return GmcMeasure(masses[None, :], (x0, y0), a, gamma)


# ---- quantum wedge synthesis ----


def wedge_alpha(weight, gamma):
    """alpha of a weight-W wedge: W = gamma*(gamma/2 + Q - alpha)."""
    q = 2.0 / gamma + gamma / 2.0
    return gamma / 2.0 + q - weight / gamma


def synthesize_wedge_field(weight, gamma, n=256, seed=0, horizon=10.0, max_tries=20000,
                           return_profile=False):
    """Thick-wedge field on the half-plane window [-1,1] x [0,1].

    Radial part: common value A_s on the half-circle of radius e^-s, with
    A_s = B_2s + alpha*s inward (s >= 0) and the outward branch conditioned so
    that Bhat_2u + (Q - alpha)*u stays positive on a grid up to `horizon`
    (rejection sampling).  Lateral part: free-boundary (Neumann) field with the
    zero mode removed, projected to mean zero on half-circles.  The circle
    average embedding sup{r : h_r(0) + Q log r = 0} = 1 then holds by
    construction.
    """
    q = 2.0 / gamma + gamma / 2.0
    alpha = wedge_alpha(weight, gamma)
    if alpha >= q:
        raise ParameterError(f"thin wedge (alpha={alpha:.3f} >= Q={q:.3f}) unsupported")
    rng = np.random.default_rng(seed)
    a = 2.0 / n
    nx, ny = n, n // 2

    # radial profile: A_s on an s-grid; outward branch rejected until positive
    ds = 1e-3
    s_max = -math.log(a / 4.0)
    s_in = np.arange(0.0, s_max + ds, ds)
    bm = np.concatenate(([0.0], np.cumsum(rng.normal(0, math.sqrt(2 * ds), len(s_in) - 1))))
    a_in = bm + alpha * s_in
    u_out = np.arange(ds, horizon + ds, ds)
    drift = (q - alpha) * u_out
    for _ in range(max_tries):
        bhat = np.cumsum(rng.normal(0, math.sqrt(2 * ds), len(u_out)))
        if np.all(bhat + drift > 0):
            break
    else:
        raise ParameterError("wedge conditioning rejection failed; raise max_tries")
    a_out = bhat - alpha * u_out      # A_{-u} = Bhat_{2u} - alpha*u
    s_grid = np.concatenate([-u_out[::-1], s_in])
    a_grid = np.concatenate([a_out[::-1], a_in])

    lateral = _neumann_field(nx, ny, a, rng)
    field0 = DiscreteField(lateral, (-1.0, 0.0), a, kind="lateral")
    # project out the half-circle means so the radial part owns them; the
    # sampling convention matches circle_average exactly (clamped interp)
    s_bins = np.linspace(0.0, s_max, 240)
    r_bins = np.exp(-s_bins)
    means = np.zeros_like(r_bins)
    for i, rr in enumerate(r_bins):
        m = max(16, int(math.ceil(2 * math.pi * rr / a)))
        th = np.linspace(0.0, math.pi, m + 1)
        means[i] = float(np.mean(field0.interp(rr * np.cos(th), rr * np.sin(th))))
    x, y = field0.node_xy()
    xx, yy = np.meshgrid(x, y)
    rr_site = np.hypot(xx, yy)
    rr_site[rr_site < a / 4] = a / 4
    lateral = lateral - np.interp(-np.log(rr_site), s_bins, means)

    radial = np.interp(-np.log(rr_site), s_grid, a_grid)
    vals = radial + lateral
    out = DiscreteField(vals, (-1.0, 0.0), a, kind=f"wedge({weight})", seed=seed,
                        gmc_spacing=a * math.exp(-lattice_constant()))
    if return_profile:
        return out, (s_grid, a_grid)
    return out


def _neumann_field(nx, ny, a, rng):
    """Free-boundary (Neumann) field on the rectangle, zero mode removed."""
    j = np.arange(nx + 1)
    k = np.arange(ny + 1)
    lam = ((2 - 2 * np.cos(np.pi * j / nx))[None, :]
           + (2 - 2 * np.cos(np.pi * k / ny))[:, None]) / (a * a)
    lam[0, 0] = np.inf  # zero mode removed
    norm = np.full((ny + 1, nx + 1), nx * ny / 4.0)
    norm[0, :] *= 2.0
    norm[:, 0] *= 2.0
    sigma = np.sqrt(2.0 * np.pi / (lam * a * a * norm))
    sigma[0, 0] = 0.0
    coef = rng.normal(size=(ny + 1, nx + 1)) * sigma
    return _cosine_eval(coef, nx, ny)


def _cosine_eval(coef, nx, ny):
    """sum_{j,k} coef[k,j] cos(pi j i/nx) cos(pi k l/ny) on the node grid."""
    i = np.arange(nx + 1)
    l = np.arange(ny + 1)
    cx = np.cos(np.pi * np.outer(np.arange(nx + 1), i) / nx)   # (j, i)
    cy = np.cos(np.pi * np.outer(np.arange(ny + 1), l) / ny)   # (k, l)
    return cy.T @ coef @ cx


# ---- harmonic conjugate ----


def harmonic_conjugate(u, r, n_angles=4096, tol=1e-4):
    """Harmonic conjugate v with v(0) = 0 of a harmonic field on the unit disk.

    Both functions come from the Poisson-type integral
    u(z) + i v(z) = (1/2pi) Int u(e^it) (e^it + z)/(e^it - z) dt, evaluated by
    the (spectrally accurate) trapezoid rule on the circle of radius 1 - 2a.
    The construction guarantees |v(z)| <= 2 sup|u| / (1 - r) on B(0, r).
    """
    if not isinstance(u, DiscreteField):
        raise ParameterError("harmonic_conjugate expects a DiscreteField")
    scale = max(1.0, float(np.abs(u.values).max()))
    if _harmonic_residual(u) > tol * scale:
        raise ParameterError("input field is not discrete-harmonic within tolerance")
    a = u.spacing
    rb = 1.0 - 2 * a
    th = np.arange(n_angles) * (2 * math.pi / n_angles)
    bx = rb * np.cos(th)
    by = rb * np.sin(th)
    ub = u.interp(bx, by)
    if abs(float(u.interp(0.0, 0.0))) > 1e-3 * scale:
        raise ParameterError("harmonic_conjugate requires u(0) = 0")
    x, y = u.node_xy()
    xx, yy = np.meshgrid(x, y)
    keep = (xx * xx + yy * yy) < (r * rb) ** 2
    zs = (xx[keep] + 1j * yy[keep]) / rb
    e = np.exp(1j * th)
    kernel = (e[None, :] + zs[:, None]) / (e[None, :] - zs[:, None])
    v = (kernel.imag @ ub) / n_angles
    vals = np.zeros_like(u.values)
    vals[keep] = v
    return DiscreteField(vals, u.origin, a, kind="harmonic_conjugate", mask=keep)


def _harmonic_residual(u):
    """Max 5-point stencil residual over sites whose full stencil is in the mask."""
    v = u.values
    res = 4 * v[1:-1, 1:-1] - v[:-2, 1:-1] - v[2:, 1:-1] - v[1:-1, :-2] - v[1:-1, 2:]
    if u.mask is not None:
        m = u.mask
        core = m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
        return float(np.abs(res[core]).max()) if core.any() else 0.0
    return float(np.abs(res).max())


def field_from_function(fn, n=128, domain="disk"):
    """DiscreteField sampled from a callable z -> value (for fixtures)."""
    if domain == "disk":
        mask, origin, a = _disk_mask(n)
        xs = origin[0] + np.arange(n + 1) * a
        xx, yy = np.meshgrid(xs, xs)
        vals = np.where(mask, np.real(fn(xx + 1j * yy)), 0.0)
        return DiscreteField(vals, origin, a, kind="fixture", mask=mask)
    if domain == "square":
        a = 1.0 / n
        xs = np.arange(n + 1) * a
        xx, yy = np.meshgrid(xs, xs)
        vals = np.real(fn(xx + 1j * yy))
        return DiscreteField(vals, (0.0, 0.0), a, kind="fixture")
    raise ParameterError(f"unknown domain {domain!r}")

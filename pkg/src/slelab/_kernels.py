"""Numba kernels for the hot loops: inverse-flow trace evaluation and rasterization.

Kernels are deterministic (no RNG) and parallelize over independent output
slots only, so results are bitwise stable across thread counts.
"""

import numba
import numpy as np
from numba import njit, prange


@njit(cache=True, inline="always")
def _slit_inverse(w_re, w_im, wk, four_dt):
    """Inverse vertical-slit map f(w) = W + sqrt((w - W)^2 - 4 dt), upper branch."""
    zr = w_re - wk
    zi = w_im
    # (zr + i zi)^2 - four_dt
    ar = zr * zr - zi * zi - four_dt
    ai = 2.0 * zr * zi
    r = np.sqrt(ar * ar + ai * ai)
    sr = np.sqrt(max((r + ar) / 2.0, 0.0))
    si = np.sqrt(max((r - ar) / 2.0, 0.0))
    if ai < 0.0:
        sr = -sr
    # principal sqrt, then pick the branch with Im >= 0
    if si < 0.0 or (si == 0.0 and sr < 0.0):
        sr, si = -sr, -si
    return wk + sr, si


@njit(cache=True, fastmath=True)
def chordal_trace(dts, dws, w_abs, idx):
    """Trace points gamma(t_k) = f_1 o ... o f_k (W_k + i eps) for k in idx.

    Active-set sweep: idx must be sorted ascending; the map steps run once
    from the last one down, points joining the sweep at their own step, so
    the inner loop is a contiguous vectorizable pass (and the kernel is
    single-threaded, hence bitwise stable across thread counts).
    """
    m = len(idx)
    n = len(dts)
    re = np.empty(m)
    im = np.empty(m)
    out = np.empty(m, dtype=np.complex128)
    act = 0
    nxt = m - 1  # next point (largest k first) to activate
    for i in range(n, 0, -1):
        while nxt >= 0 and idx[nxt] == i:
            re[act] = w_abs[i]
            im[act] = 1e-12  # tiny lift off the branch cut
            act += 1
            nxt -= 1
        wk = w_abs[i]
        four_dt = 4.0 * dts[i - 1]
        for j in range(act):
            zr = re[j] - wk
            zi = im[j]
            ar = zr * zr - zi * zi - four_dt
            ai = 2.0 * zr * zi
            r = np.sqrt(ar * ar + ai * ai)
            sr = np.sqrt(max((r + ar) / 2.0, 0.0))
            si = np.sqrt(max((r - ar) / 2.0, 0.0))
            if ai < 0.0:
                sr = -sr
            re[j] = wk + sr
            im[j] = si
    for j in range(m):
        # points were activated from the largest index down
        out[m - 1 - j] = complex(re[j], im[j])
    return out


@njit(cache=True, parallel=True, fastmath=True)
def chordal_forward(zs_re, zs_im, dts, w_abs, blow_tol):
    """Forward composed slit maps applied to points zs; returns points + swallow step.

    swallow[j] = step index at which the flow blew up (|g - W| < blow_tol), or -1.
    """
    m = len(zs_re)
    out = np.empty(m, dtype=np.complex128)
    swallow = np.full(m, -1, dtype=np.int64)
    n = len(dts)
    for j in prange(m):
        re = zs_re[j]
        im = zs_im[j]
        dead = -1
        for i in range(n):
            # step i+1 uses driving w_abs[i+1]: g(z) = W + sqrt((z - W)^2 + 4 dt)
            wk = w_abs[i + 1]
            zr = re - wk
            zi = im
            if zr * zr + zi * zi < blow_tol[i] * blow_tol[i]:
                dead = i
                break
            ar = zr * zr - zi * zi + 4.0 * dts[i]
            ai = 2.0 * zr * zi
            r = np.sqrt(ar * ar + ai * ai)
            sr = np.sqrt(max((r + ar) / 2.0, 0.0))
            si = np.sqrt(max((r - ar) / 2.0, 0.0))
            if ai < 0.0:
                sr = -sr
            if si < 0.0 or (si == 0.0 and sr < 0.0):
                sr, si = -sr, -si
            re = wk + sr
            im = si
        out[j] = complex(re, im)
        swallow[j] = dead
    return out, swallow


@njit(cache=True, parallel=True)
def radial_trace(dts, thetas, idx):
    """Radial trace points via inverse exact constant-driving radial slit maps."""
    m = len(idx)
    out = np.empty(m, dtype=np.complex128)
    for j in prange(m):
        k = idx[j]
        # start at the tip image: solve g/(1+g)^2 = e^{dt} z/(1+z)^2 at z = W
        zr, zi = _radial_tip(dts[k - 1])
        # rotate into the driving frame of step k
        c = np.cos(thetas[k])
        s = np.sin(thetas[k])
        re = c * zr - s * zi
        im = s * zr + c * zi
        for i in range(k - 1, 0, -1):
            re, im = _radial_slit_inverse(re, im, thetas[i], dts[i - 1])
        out[j] = complex(re, im)
    return out


@njit(cache=True, inline="always")
def _csqrt(ar, ai):
    """Square root on the Im >= 0 branch."""
    r = np.sqrt(ar * ar + ai * ai)
    sr = np.sqrt(max((r + ar) / 2.0, 0.0))
    si = np.sqrt(max((r - ar) / 2.0, 0.0))
    if ai < 0.0:
        sr = -sr
    return sr, si


@njit(cache=True, inline="always")
def _csqrt_principal(ar, ai):
    """Principal square root (Re >= 0)."""
    r = np.sqrt(ar * ar + ai * ai)
    sr = np.sqrt(max((r + ar) / 2.0, 0.0))
    si = np.sqrt(max((r - ar) / 2.0, 0.0))
    if ai < 0.0:
        si = -si
    return sr, si


@njit(cache=True, inline="always")
def _radial_tip(dt):
    """Image of the driving point 1 under the inverse radial slit map of capacity dt."""
    # solve z/(1+z)^2 = e^{-dt} * 1/4 =: c ; root inside the closed disk,
    # in the cancellation-free form 2c / (1 - 2c + sqrt(1 - 4c))
    c = 0.25 * np.exp(-dt)
    s = np.sqrt(max(1.0 - 4.0 * c, 0.0))
    z = 2.0 * c / (1.0 - 2.0 * c + s)
    return z, 0.0


@njit(cache=True, inline="always")
def _radial_slit_inverse(re, im, theta, dt):
    """One inverse radial step: undo g/(1+g)^2 = e^{dt} z/(1+z)^2 in the frame of theta."""
    c = np.cos(theta)
    s = np.sin(theta)
    # rotate into the slit frame (driving at 1)
    gr = c * re + s * im
    gi = -s * re + c * im
    # u = g/(1+g)^2
    d_re = 1.0 + gr
    d_im = gi
    den = (d_re * d_re + d_im * d_im)
    den2 = den * den
    # (1+g)^2
    q_re = d_re * d_re - d_im * d_im
    q_im = 2.0 * d_re * d_im
    qq = q_re * q_re + q_im * q_im
    u_re = (gr * q_re + gi * q_im) / qq
    u_im = (gi * q_re - gr * q_im) / qq
    # target: z/(1+z)^2 = e^{-dt} u
    e = np.exp(-dt)
    c_re = e * u_re
    c_im = e * u_im
    # z = 2c / (1 - 2c + sqrt(1-4c)): cancellation-free at small c; the
    # principal branch keeps the denominator near 2 around c = 0
    ar = 1.0 - 4.0 * c_re
    ai = -4.0 * c_im
    sr, si = _csqrt_principal(ar, ai)
    den_re = 1.0 - 2.0 * c_re + sr
    den_im = -2.0 * c_im + si
    dd = den_re * den_re + den_im * den_im
    if dd < 1e-300:
        zr, zi = c_re, c_im  # z ~ c for c ~ 0
    else:
        zr = 2.0 * (c_re * den_re + c_im * den_im) / dd
        zi = 2.0 * (c_im * den_re - c_re * den_im) / dd
    # keep the root in the closed unit disk: the two roots are z and 1/z
    mag = zr * zr + zi * zi
    if mag > 1.0 + 1e-12:
        zr, zi = zr / mag, -zi / mag
    # rotate back
    re_out = c * zr - s * zi
    im_out = s * zr + c * zi
    return re_out, im_out


@njit(cache=True, parallel=True)
def mark_segments(cells, x0, y0, x1, y1, ox, oy, spacing, radius):
    """Mark raster cells within `radius` of any segment (x0,y0)-(x1,y1).

    cells: uint8 (ny, nx) array, origin (ox, oy).  Parallel over rows of a
    per-segment bounding box would race, so segments are processed serially;
    the work per segment is tiny.
    """
    nseg = len(x0)
    ny, nx = cells.shape
    for s in range(nseg):
        ax, ay, bx, by = x0[s], y0[s], x1[s], y1[s]
        lo_x = min(ax, bx) - radius
        hi_x = max(ax, bx) + radius
        lo_y = min(ay, by) - radius
        hi_y = max(ay, by) + radius
        i0 = max(int(np.floor((lo_x - ox) / spacing)), 0)
        i1 = min(int(np.floor((hi_x - ox) / spacing)) + 1, nx)
        j0 = max(int(np.floor((lo_y - oy) / spacing)), 0)
        j1 = min(int(np.floor((hi_y - oy) / spacing)) + 1, ny)
        dx = bx - ax
        dy = by - ay
        L2 = dx * dx + dy * dy
        for jj in range(j0, j1):
            cy = oy + (jj + 0.5) * spacing
            for ii in range(i0, i1):
                cx = ox + (ii + 0.5) * spacing
                if L2 <= 0.0:
                    t = 0.0
                else:
                    t = ((cx - ax) * dx + (cy - ay) * dy) / L2
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                px = ax + t * dx
                py = ay + t * dy
                dd = (cx - px) * (cx - px) + (cy - py) * (cy - py)
                if dd <= radius * radius:
                    cells[jj, ii] = 1
    return cells


@njit(cache=True)
def flow_line_euler(start_re, start_im, theta, chi, field, ox, oy, spacing, nx, ny,
                    step, max_steps, region_inner2, region_outer2, cx, cy,
                    occupied, occ_ox, occ_oy, occ_h, occ_nx, occ_ny, line_id):
    """Explicit Euler e^{i(h/chi + theta)} flow on a bilinearly interpolated field.

    Stops on annulus exit (radii^2 bounds around (cx, cy)), on stepping into a
    cell of `occupied` owned by another line (merge), or at max_steps.
    Returns (vertices, n_used, reason, merged_id); reason: 0 exit, 1 merged,
    2 step-limit.
    """
    verts = np.empty((max_steps + 1, 2))
    x = start_re
    y = start_im
    verts[0, 0] = x
    verts[0, 1] = y
    reason = 2
    merged = -1
    n = 1
    for k in range(max_steps):
        fx = (x - ox) / spacing
        fy = (y - oy) / spacing
        i = int(np.floor(fx))
        j = int(np.floor(fy))
        if i < 0 or j < 0 or i >= nx - 1 or j >= ny - 1:
            reason = 0
            break
        tx = fx - i
        ty = fy - j
        h = (field[j, i] * (1 - tx) * (1 - ty) + field[j, i + 1] * tx * (1 - ty)
             + field[j + 1, i] * (1 - tx) * ty + field[j + 1, i + 1] * tx * ty)
        ang = h / chi + theta
        x = x + step * np.cos(ang)
        y = y + step * np.sin(ang)
        verts[n, 0] = x
        verts[n, 1] = y
        n += 1
        r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy)
        if r2 < region_inner2 or r2 > region_outer2:
            reason = 0
            break
        oi = int(np.floor((x - occ_ox) / occ_h))
        oj = int(np.floor((y - occ_oy) / occ_h))
        if 0 <= oi < occ_nx and 0 <= oj < occ_ny:
            owner = occupied[oj, oi]
            if owner >= 0 and owner != line_id:
                reason = 1
                merged = owner
                break
            occupied[oj, oi] = line_id
    return verts[:n], n, reason, merged


@njit(cache=True)
def mark_segments_sides(angle_mask, left_mask, right_mask, owner, x0, y0, x1, y1,
                        ox, oy, spacing, radius, line_ids):
    """Segment rasterization that also records which side of the line a cell sees.

    angle_mask: uint8 occupancy for this angle; left/right: uint8 side flags;
    owner: int32 first line id to claim the cell (-1 when free).
    """
    nseg = len(x0)
    ny, nx = angle_mask.shape
    for s in range(nseg):
        ax, ay, bx, by = x0[s], y0[s], x1[s], y1[s]
        lo_x = min(ax, bx) - radius
        hi_x = max(ax, bx) + radius
        lo_y = min(ay, by) - radius
        hi_y = max(ay, by) + radius
        i0 = max(int(np.floor((lo_x - ox) / spacing)), 0)
        i1 = min(int(np.floor((hi_x - ox) / spacing)) + 1, nx)
        j0 = max(int(np.floor((lo_y - oy) / spacing)), 0)
        j1 = min(int(np.floor((hi_y - oy) / spacing)) + 1, ny)
        dx = bx - ax
        dy = by - ay
        L2 = dx * dx + dy * dy
        for jj in range(j0, j1):
            cy = oy + (jj + 0.5) * spacing
            for ii in range(i0, i1):
                cx = ox + (ii + 0.5) * spacing
                if L2 <= 0.0:
                    t = 0.0
                else:
                    t = ((cx - ax) * dx + (cy - ay) * dy) / L2
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                px = ax + t * dx
                py = ay + t * dy
                dd = (cx - px) * (cx - px) + (cy - py) * (cy - py)
                if dd <= radius * radius:
                    angle_mask[jj, ii] = 1
                    if owner[jj, ii] < 0:
                        owner[jj, ii] = line_ids[s]
                    cross = dx * (cy - ay) - dy * (cx - ax)
                    if cross > 0.0:
                        left_mask[jj, ii] = 1
                    elif cross < 0.0:
                        right_mask[jj, ii] = 1
    return angle_mask


@njit(cache=True, fastmath=True)
def chordal_trace_tilted(dts, dws, w_abs, idx):
    """Tilted-slit trace sweep: each step is the exact square-root-driving map.

    Step k with increments (dt, dW) uses f(v) = (v+a)^(1-alpha) (v-b)^alpha,
    a = alpha*s, b = (1-alpha)*s, s = 2 sqrt(dt/(alpha(1-alpha))), where alpha
    solves dW/sqrt(dt) = 2(1-2 alpha)/sqrt(alpha(1-alpha)).  Anchored at the
    step's left driving endpoint; the tip preimage is the right endpoint, so
    seeding matches the vertical scheme.
    """
    m = len(idx)
    n = len(dts)
    re = np.empty(m)
    im = np.empty(m)
    out = np.empty(m, dtype=np.complex128)
    act = 0
    nxt = m - 1
    for i in range(n, 0, -1):
        while nxt >= 0 and idx[nxt] == i:
            re[act] = w_abs[i]
            im[act] = 1e-12
            act += 1
            nxt -= 1
        w_prev = w_abs[i - 1]
        dt = dts[i - 1]
        c = dws[i - 1] / np.sqrt(dt)
        alpha = 0.5 - 0.5 * c / np.sqrt(16.0 + c * c)
        s = 2.0 * np.sqrt(dt / (alpha * (1.0 - alpha)))
        a = alpha * s
        b = (1.0 - alpha) * s
        one_m = 1.0 - alpha
        for j in range(act):
            vr = re[j] - w_prev
            vi = im[j]
            # principal logs of (v+a) and (v-b); vi >= 0 keeps args in [0, pi]
            xr = vr + a
            lr1 = 0.5 * np.log(xr * xr + vi * vi)
            la1 = np.arctan2(vi, xr)
            yr = vr - b
            lr2 = 0.5 * np.log(yr * yr + vi * vi)
            la2 = np.arctan2(vi, yr)
            mod = np.exp(one_m * lr1 + alpha * lr2)
            ang = one_m * la1 + alpha * la2
            re[j] = w_prev + mod * np.cos(ang)
            im[j] = mod * np.sin(ang)
            if im[j] < 0.0:
                im[j] = 0.0
    for j in range(m):
        out[m - 1 - j] = complex(re[j], im[j])
    return out

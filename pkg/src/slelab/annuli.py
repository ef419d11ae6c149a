"""Deterministic annuli-selection algorithm with exact dyadic radii.

Given distinct points in the upper half-plane, builds for each point a nested
chain of annuli B(z_j, r_jk) minus B(z_j, s_jk) with every radius a power of
two, pairwise disjoint across the whole family, respecting the 4r / (r/4)
clearance rules and the s = 2 s~ doubling, and terminating each chain when its
ball is free of later points.  All radius arithmetic is on integer exponents;
only point-distance comparisons touch floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = ["AnnulusPlan", "plan_annuli", "verify_plan"]

_MAX_EXP = 900  # dyadic search guard well inside float range


@dataclass(frozen=True)
class AnnulusPlan:
    """Per point j: list of (s, r) pairs, radii dyadic, s = 0 terminates the chain."""

    points: np.ndarray
    r0: float
    chains: tuple            # chains[j] = ((s_1, r_1), ..., (s_nj, r_nj))

    @property
    def n_points(self):
        return len(self.points)

    def n_j(self, j):
        return len(self.chains[j])

    def all_annuli(self):
        out = []
        for j, chain in enumerate(self.chains):
            for (s, r) in chain:
                out.append((j, s, r))
        return out

    def to_dict(self):
        return {
            "r0": self.r0,
            "points": [[z.real, z.imag] for z in self.points],
            "chains": [[[s, r] for (s, r) in chain] for chain in self.chains],
        }


def _pow2(m):
    return 2.0 ** (-m)


def _ball_in_h(z, r4):
    return z.imag >= r4


def _clear_of_points(z, r, later):
    """No later point w with r/4 <= |w - z| < 4r."""
    if len(later) == 0:
        return True
    d = np.abs(later - z)
    return not np.any((d >= r / 4.0) & (d < 4.0 * r))


def _ball_disjoint_from(z, radius, annuli):
    """B(z, radius) disjoint from every annulus (center, s, r) in the list."""
    for (c, s, r) in annuli:
        d = abs(z - c)
        if not (d - radius >= r or d + radius <= s):
            return False
    return True


def plan_annuli(points, r0):
    """Exact transcription of the greedy annuli construction.

    For each point in order: the first radius is the largest dyadic r <= r0
    with B(z, 4r) inside H, disjoint from all previously chosen annuli, and no
    later point in B(z, 4r) minus B(z, r/4).  If the ball still contains later
    points, s~ is the smallest dyadic with B(z, r) minus B(z, s~) point-free,
    s = 2 s~, and the next radius is the largest dyadic below s with the same
    point clearance; chains stop at the first s = 0.
    """
    pts = np.asarray(points, dtype=complex)
    if len(pts) == 0:
        raise ParameterError("need at least one point")
    if np.any(pts.imag <= 0):
        raise ParameterError("points must lie in the open upper half-plane")
    if len(np.unique(pts)) != len(pts):
        raise ParameterError("points must be distinct")
    if not r0 > 0:
        raise ParameterError("r0 must be positive")
    chosen = []   # (center, s, r) accumulated across all chains
    chains = []
    n = len(pts)
    for j in range(n):
        z = pts[j]
        later = pts[j + 1:]
        chain = []
        # first radius: r0 cap, ball-in-H, disjointness, point clearance
        m = 1
        while _pow2(m) > r0:
            m += 1
        while m < _MAX_EXP:
            r = _pow2(m)
            if (_ball_in_h(z, 4.0 * r)
                    and _ball_disjoint_from(z, 4.0 * r, chosen)
                    and _clear_of_points(z, r, later)):
                break
            m += 1
        else:
            raise ParameterError(f"no admissible first radius for point {z}")
        r_cur = _pow2(m)
        while True:
            inside = later[np.abs(later - z) < r_cur] if len(later) else later
            if len(inside) == 0:
                chain.append((0.0, r_cur))
                break
            # smallest dyadic s~ with no point at distance in [s~, r_cur)
            d_max = float(np.abs(inside - z).max())
            ms = 1
            while _pow2(ms + 1) > d_max and ms < _MAX_EXP:
                ms += 1
            # now 2^-(ms+1) <= d_max < ... ensure s~ = smallest dyadic > d_max
            while _pow2(ms) <= d_max:
                ms -= 1
            s_tilde = _pow2(ms)
            s_cur = 2.0 * s_tilde
            chain.append((s_cur, r_cur))
            # next radius: largest dyadic < s with point clearance
            m2 = max(int(round(-math.log2(s_cur))) + 1, 1)
            while m2 < _MAX_EXP:
                r2 = _pow2(m2)
                if r2 < s_cur and _clear_of_points(z, r2, later):
                    break
                m2 += 1
            else:
                raise ParameterError(f"no admissible follow-up radius for point {z}")
            r_cur = _pow2(m2)
        for (s, r) in chain:
            chosen.append((z, s, r))
        chains.append(tuple(chain))
    return AnnulusPlan(points=pts, r0=float(r0), chains=tuple(chains))


def _is_dyadic(r):
    if r <= 0:
        return False
    m = round(math.log2(r))
    return r == 2.0 ** m and m <= -1


def verify_plan(plan, points=None, r0=None):
    """Exact invariant checks; violations are reported, never raised."""
    pts = plan.points if points is None else np.asarray(points, dtype=complex)
    r0 = plan.r0 if r0 is None else r0
    n = len(pts)
    violations = []
    annuli = []
    for j, chain in enumerate(plan.chains):
        if len(chain) == 0:
            violations.append(f"point {j}: empty chain")
            continue
        if len(chain) > n:
            violations.append(f"point {j}: n_j = {len(chain)} exceeds n = {n}")
        prev_s = None
        for k, (s, r) in enumerate(chain):
            if not _is_dyadic(r):
                violations.append(f"point {j} annulus {k}: r = {r} not of the form 2^-m")
            if r > r0:
                violations.append(f"point {j} annulus {k}: r = {r} exceeds r0 = {r0}")
            if not (0 <= s < r):
                violations.append(f"point {j} annulus {k}: need 0 <= s < r, got ({s}, {r})")
            if s > 0 and not _is_dyadic(s / 2.0):
                violations.append(f"point {j} annulus {k}: s = {s} is not twice a dyadic")
            last = k == len(chain) - 1
            if last and s != 0.0:
                violations.append(f"point {j}: chain does not terminate with s = 0")
            if not last and s == 0.0:
                violations.append(f"point {j} annulus {k}: s = 0 before the chain end")
            if prev_s is not None:
                if r >= prev_s:
                    violations.append(f"point {j} annulus {k}: r = {r} >= previous s = {prev_s}")
                ratio_cap = 2.0 ** (4 * (n - 1)) if n > 1 else 1.0
                if prev_s / r > ratio_cap:
                    violations.append(
                        f"point {j} annulus {k}: s/r = {prev_s / r} above 2^(4(n-1))")
            prev_s = s
            annuli.append((pts[j], s, r, j, k))
    for a in range(len(annuli)):
        for b in range(a + 1, len(annuli)):
            za, sa, ra, ja, ka = annuli[a]
            zb, sb, rb, jb, kb = annuli[b]
            if not _annuli_disjoint(za, sa, ra, zb, sb, rb):
                violations.append(
                    f"annuli ({ja},{ka}) and ({jb},{kb}) intersect")
    return {"ok": not violations, "violations": violations,
            "n_annuli": len(annuli)}


def _annuli_disjoint(z1, s1, r1, z2, s2, r2):
    """Exact disjointness of {s1 <= |w-z1| < r1} and {s2 <= |w-z2| < r2}."""
    if z1 == z2:
        return r1 <= s2 or r2 <= s1
    d = abs(z1 - z2)
    if d >= r1 + r2:
        return True                      # far apart
    if d + r1 <= s2 or d + r2 <= s1:
        return True                      # one annulus inside the other's hole
    return False

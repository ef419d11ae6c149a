"""Stochastic drivers.

Brownian paths, chordal and radial SLE_kappa(rho) driving SDEs with the
continuation threshold, Bessel processes of dimension in (0,2) with local
time and excursions, spectrally one-sided stable processes, and a Poisson
lower-tail bound.

All samplers are pure functions of (parameters, seed): RNG state is created
per call from ``numpy.random.default_rng(seed)`` and never shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalBlowupError, ParameterError

__all__ = [
    "TimeSeriesPath",
    "ForcePoint",
    "DrivingRecord",
    "BesselPath",
    "sample_brownian",
    "sample_sle_rho_driving",
    "sample_radial_driving",
    "sample_bessel",
    "sample_stable_one_sided",
    "poisson_lower_tail",
]


@dataclass(frozen=True)
class TimeSeriesPath:
    """A sampled scalar path: strictly increasing times, one value per time."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or values.ndim != 1 or len(times) != len(values):
            raise ParameterError("times and values must be 1-d arrays of equal length")
        if len(times) < 2:
            raise ParameterError("a path needs at least two samples")
        if times[0] < 0 or np.any(np.diff(times) <= 0):
            raise ParameterError("times must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ParameterError("path values must be finite")

    def __len__(self):
        return len(self.times)

    @property
    def horizon(self):
        return float(self.times[-1])

    def value_at(self, t):
        """Linear interpolation of the path at time t."""
        return float(np.interp(t, self.times, self.values))


@dataclass(frozen=True)
class ForcePoint:
    """One force point: rank index, side of the seed, weight, and its V-trajectory."""

    index: int
    side: str  # "L" or "R"
    rho: float
    path: TimeSeriesPath


@dataclass(frozen=True)
class DrivingRecord:
    """Driving function of one SLE_kappa(rho) sample plus force-point trajectories.

    For ``geometry == "radial"`` the stored values are continuous (unwrapped)
    angles: W_t = exp(i * path.values[t]) and the single force point track is
    the angle of O_t.
    """

    kappa: float
    path: TimeSeriesPath
    force_points: tuple[ForcePoint, ...] = ()
    halted_at: float | None = None
    geometry: str = "chordal"

    @property
    def rho(self):
        return tuple(fp.rho for fp in self.force_points)

    def ordering_ok(self, atol=1e-9):
        """Check V^{l,L} <= ... <= V^{1,L} <= W <= V^{1,R} <= ... <= V^{k,R} at every step."""
        if self.geometry != "chordal":
            return True
        w = self.path.values
        lefts = sorted((fp for fp in self.force_points if fp.side == "L"), key=lambda f: f.index)
        rights = sorted((fp for fp in self.force_points if fp.side == "R"), key=lambda f: f.index)
        prev = w
        for fp in rights:
            if np.any(fp.path.values < prev - atol):
                return False
            prev = fp.path.values
        prev = w
        for fp in lefts:
            if np.any(fp.path.values > prev + atol):
                return False
            prev = fp.path.values
        return True

    def complex_driving(self):
        """Driving value as a complex array (radial: on the unit circle)."""
        if self.geometry == "radial":
            return np.exp(1j * self.path.values)
        return self.path.values.astype(complex)


@dataclass(frozen=True)
class BesselPath:
    """A Bessel sample path with its local time at 0 and excursion list."""

    delta: float
    path: TimeSeriesPath
    local_time: TimeSeriesPath
    excursions: tuple[tuple[float, float, float], ...] = field(default_factory=tuple)
    last_zero: float = 0.0


def sample_brownian(n_steps, dt, seed):
    """Standard Brownian motion from 0: n_steps Gaussian increments of variance dt."""
    if n_steps < 1 or not dt > 0:
        raise ParameterError(f"need n_steps >= 1 and dt > 0, got {n_steps}, {dt}")
    rng = np.random.default_rng(seed)
    increments = rng.normal(0.0, math.sqrt(dt), size=int(n_steps))
    values = np.concatenate(([0.0], np.cumsum(increments)))
    times = np.arange(n_steps + 1) * dt
    return TimeSeriesPath(times, values)


def _normalize_force_points(x, rho):
    """Sort raw (position, weight) data into left/right stacks.

    Positions may be floats (side by sign; signed zero selects 0^- / 0^+) or
    ``(position, "L"|"R")`` pairs.
    """
    if len(x) != len(rho):
        raise ParameterError("x and rho must have the same length")
    lefts, rights = [], []
    for xi, ri in zip(x, rho):
        if isinstance(xi, tuple):
            pos, side = float(xi[0]), xi[1]
            if side not in ("L", "R"):
                raise ParameterError(f"force point side must be 'L' or 'R', got {side!r}")
        else:
            pos = float(xi)
            side = "L" if (pos < 0 or (pos == 0 and np.signbit(pos))) else "R"
        if side == "L" and pos > 0:
            raise ParameterError("left force point with positive position")
        if side == "R" and pos < 0:
            raise ParameterError("right force point with negative position")
        (lefts if side == "L" else rights).append((pos, float(ri)))
    lefts_sorted = sorted(lefts, key=lambda p: -p[0])   # x_{1,L} >= x_{2,L} >= ...
    rights_sorted = sorted(rights, key=lambda p: p[0])  # x_{1,R} <= x_{2,R} <= ...
    if [p for p, _ in lefts] != [p for p, _ in lefts_sorted] or \
            [p for p, _ in rights] != [p for p, _ in rights_sorted]:
        raise ParameterError("force points must be given ordered outward from 0 on each side")
    return lefts_sorted, rights_sorted


def _besq_gap_step(gap, drift_weight, kappa, dt, rng):
    """Exact one-step transition of the collision pair |W - V|.

    X = |W - V| solves dX = sqrt(kappa) dB + drift_weight/X dt, so X^2/kappa is a
    squared Bessel process of dimension 1 + 2*drift_weight/kappa, stepped exactly
    through its noncentral chi-square transition.  Dimensions <= 0 (past the
    continuation threshold) are absorbed at 0.
    """
    dim = 1.0 + 2.0 * drift_weight / kappa
    if dim <= 0:
        return 0.0
    y = gap * gap / kappa
    n_mix = rng.poisson(y / (2.0 * dt))
    df = dim + 2.0 * n_mix
    y_new = dt * (rng.chisquare(df) if df > 0 else 0.0)
    return math.sqrt(kappa * y_new)


def sample_sle_rho_driving(kappa, rho, x, horizon, dt, seed):
    """Euler-Maruyama sample of the chordal SLE_kappa(rho) driving SDE.

    dW = sqrt(kappa) dB + sum_i rho_i/(W - V^i) dt and dV^i = 2/(V^i - W) dt,
    with a per-step collision guard: when the nearest force point is within
    dt^0.6 of W the singular pair is advanced by the exact Bessel-type local
    transition instead of an Euler step.  Integration halts (recording
    ``halted_at``) when the weights of force points colliding with W sum
    to <= -2.

    With ``rho`` empty this consumes the same normal stream as
    ``sample_brownian(n, dt, seed)`` scaled by sqrt(kappa), bit for bit.
    """
    if not (0 < kappa <= 8):
        raise ParameterError(f"kappa must lie in (0, 8], got {kappa}")
    if not dt > 0 or not horizon > 0:
        raise ParameterError("horizon and dt must be positive")
    lefts, rights = _normalize_force_points(x, rho)
    n = int(round(horizon / dt))
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, math.sqrt(dt), size=n)
    sqk = math.sqrt(kappa)
    guard = dt ** 0.6

    v_left = np.array([p for p, _ in lefts])
    rho_left = np.array([r for _, r in lefts])
    v_right = np.array([p for p, _ in rights])
    rho_right = np.array([r for _, r in rights])

    w = 0.0
    w_hist = np.empty(n + 1)
    w_hist[0] = 0.0
    vl_hist = np.empty((n + 1, len(v_left)))
    vr_hist = np.empty((n + 1, len(v_right)))
    vl_hist[0] = v_left
    vr_hist[0] = v_right
    halted_at = None
    n_done = n

    for k in range(n):
        colliding = 0.0
        if len(v_left):
            colliding += rho_left[np.abs(v_left - w) < guard].sum()
        if len(v_right):
            colliding += rho_right[np.abs(v_right - w) < guard].sum()
        if k > 0 and colliding <= -2.0:
            halted_at = k * dt
            n_done = k
            break

        gaps = np.concatenate([np.abs(w - v_left), np.abs(v_right - w)])

        if len(gaps) and gaps.min() < guard:
            # W keeps its own Euler step (drift clamped at the guard scale); the
            # colliding gap is advanced by the exact Bessel transition with the
            # stacked weights lumped, and the near force points are re-placed at
            # that gap from the new W.
            near_left = np.abs(w - v_left) < guard if len(v_left) else np.zeros(0, bool)
            near_right = np.abs(v_right - w) < guard if len(v_right) else np.zeros(0, bool)
            drift = 0.0
            if len(v_left):
                drift += np.sum(rho_left / np.maximum(w - v_left, guard))
            if len(v_right):
                drift -= np.sum(rho_right / np.maximum(v_right - w, guard))
            w_old = w
            w = w + sqk * noise[k] + drift * dt
            if len(v_left):
                v_left = v_left - 2.0 * dt / np.maximum(w_old - v_left, guard)
            if len(v_right):
                v_right = v_right + 2.0 * dt / np.maximum(v_right - w_old, guard)
            if near_left.any():
                gap = np.abs(w_old - vl_hist[k][near_left]).min()
                new_gap = _besq_gap_step(gap, rho_left[near_left].sum() + 2.0, kappa, dt, rng)
                v_left = np.where(near_left, w - new_gap, v_left)
            if near_right.any():
                gap = np.abs(vr_hist[k][near_right] - w_old).min()
                new_gap = _besq_gap_step(gap, rho_right[near_right].sum() + 2.0, kappa, dt, rng)
                v_right = np.where(near_right, w + new_gap, v_right)
        else:
            drift = 0.0
            if len(v_left):
                drift += np.sum(rho_left / (w - v_left))  # all gaps >= guard here
            if len(v_right):
                drift -= np.sum(rho_right / (v_right - w))
            w_old = w
            w = w + sqk * noise[k] + drift * dt
            if len(v_left):
                v_left = v_left - 2.0 * dt / (w_old - v_left)
            if len(v_right):
                v_right = v_right + 2.0 * dt / (v_right - w_old)

        if not (np.isfinite(w) and np.all(np.isfinite(v_left)) and np.all(np.isfinite(v_right))):
            raise NumericalBlowupError("SLE_kappa(rho) driving step produced NaN", k * dt)

        # keep the force-point ordering exact despite Euler noise
        if len(v_left):
            v_left = np.minimum.accumulate(np.minimum(v_left, w))
        if len(v_right):
            v_right = np.maximum.accumulate(np.maximum(v_right, w))
        if __debug__:
            assert not len(v_left) or v_left[0] <= w + 1e-12
            assert not len(v_right) or v_right[0] >= w - 1e-12
        w_hist[k + 1] = w
        vl_hist[k + 1] = v_left
        vr_hist[k + 1] = v_right

    times = np.arange(n_done + 1) * dt
    force_points = tuple(
        ForcePoint(i + 1, "L", float(rho_left[i]), TimeSeriesPath(times, vl_hist[: n_done + 1, i]))
        for i in range(len(v_left))
    ) + tuple(
        ForcePoint(i + 1, "R", float(rho_right[i]), TimeSeriesPath(times, vr_hist[: n_done + 1, i]))
        for i in range(len(v_right))
    )
    return DrivingRecord(
        kappa=float(kappa),
        path=TimeSeriesPath(times, w_hist[: n_done + 1]),
        force_points=force_points,
        halted_at=halted_at,
        geometry="chordal",
    )


def _radial_psi(w, z):
    return -z * (z + w) / (z - w)


def _radial_psi_tilde(z, w):
    return 0.5 * (_radial_psi(z, w) + _radial_psi(1.0 / np.conj(z), w))


def sample_radial_driving(kappa, rho, x, horizon, dt, seed, drift_only=False):
    """Radial SLE_kappa(rho) driving pair (W_t, O_t) on the unit circle.

    Euler step of dW = (rho/2 PsiTilde(O,W) - kappa/2 W) dt + i sqrt(kappa) W dB
    and dO = Psi(W,O) dt, renormalized to the circle each step so |W_t| = 1 to
    1e-9.  Requires rho > -2 (the regime the driving SDE is defined in).  The
    record stores continuous unwrapped angles; ``drift_only`` freezes the noise
    (and the Stratonovich correction) to expose the deterministic rotation.
    """
    if not (0 < kappa <= 8):
        raise ParameterError(f"kappa must lie in (0, 8], got {kappa}")
    if rho <= -2:
        raise ParameterError(f"radial driving requires rho > -2, got {rho}")
    x = complex(x)
    if abs(abs(x) - 1) > 1e-9:
        raise ParameterError("the force point must lie on the unit circle")
    if not dt > 0 or not horizon > 0:
        raise ParameterError("horizon and dt must be positive")
    n = int(round(horizon / dt))
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, math.sqrt(dt), size=n)
    sqk = math.sqrt(kappa)
    guard_angle = dt ** 0.6

    w = 1.0 + 0.0j
    o = x / abs(x)
    theta = np.empty(n + 1)
    phi = np.empty(n + 1)
    theta[0] = 0.0
    phi[0] = math.atan2(o.imag, o.real)

    for k in range(n):
        gap = abs(np.angle(w / o))
        if gap < guard_angle and not drift_only:
            # collision guard: W keeps its clamped Euler step, the angle gap
            # (locally a Bessel SDE of dimension 1 + 2(rho+2)/kappa) is advanced
            # by its exact transition, and O is re-placed at that gap.
            cot = math.cos(gap / 2.0) / max(math.sin(gap / 2.0), math.sin(guard_angle / 2.0))
            sign = 1.0 if np.angle(w / o) >= 0 else -1.0
            w = w * np.exp(1j * (sqk * noise[k] + 0.5 * rho * sign * cot * dt))
            new_gap = _besq_gap_step(gap, rho + 2.0, kappa, dt, rng)
            o = w * np.exp(-1j * sign * new_gap)
        else:
            drift = 0.5 * rho * _radial_psi_tilde(o, w) - 0.5 * kappa * w
            if drift_only:
                w = w + drift * dt
            else:
                w = w + drift * dt + 1j * sqk * w * noise[k]
            o = o + _radial_psi(w, o) * dt
        if not (np.isfinite(w) and np.isfinite(o)):
            raise NumericalBlowupError("radial driving step produced NaN", k * dt)
        w /= abs(w)
        o /= abs(o)
        theta[k + 1] = theta[k] + np.angle(w / np.exp(1j * theta[k]))
        phi[k + 1] = phi[k] + np.angle(o / np.exp(1j * phi[k]))

    times = np.arange(n + 1) * dt
    o_track = ForcePoint(1, "R", float(rho), TimeSeriesPath(times, phi))
    return DrivingRecord(
        kappa=float(kappa),
        path=TimeSeriesPath(times, theta),
        force_points=(o_track,),
        halted_at=None,
        geometry="radial",
    )


def sample_bessel(delta, horizon, dt, seed):
    """BES^delta path for delta in (0,2), exact in the squared-Bessel sense.

    Each step draws the noncentral chi-square transition of the squared
    process, which preserves nonnegativity exactly.  Zeros between grid times
    are then flagged exactly at resolution dt: given the step endpoints a, b
    the squared-Bessel bridge avoids 0 with probability
    I_{1-delta/2}(x) / I_{delta/2-1}(x), x = sqrt(a b)/dt (the killed versus
    reflecting transition densities), so the zero set needs no level
    threshold.  Local time at 0 is the spec estimator
    (eps/2) * #downcrossings of [0, eps] with eps = dt^0.4 (a downcrossing
    completes at a flagged zero after the path has exceeded eps); excursions
    are the maximal zero-free intervals of length >= 2 dt.
    """
    if not (0 < delta < 2):
        raise ParameterError(f"delta must lie in (0, 2), got {delta}")
    if not dt > 0 or not horizon > 0:
        raise ParameterError("horizon and dt must be positive")
    from scipy.special import ive

    n = int(round(horizon / dt))
    rng = np.random.default_rng(seed)

    # squared Bessel: Y_{t+dt} | Y_t ~ dt * chi'^2(delta, Y_t/dt)
    y = 0.0
    ys = np.empty(n + 1)
    ys[0] = 0.0
    us = np.empty(n)
    mix = rng.poisson  # noncentral chi-square via Poisson mixture of chi-squares
    chi2 = rng.chisquare
    uni = rng.random
    for k in range(n):
        df = delta + 2.0 * mix(y / (2.0 * dt))
        y = dt * chi2(df)
        ys[k + 1] = y
        us[k] = uni()  # interleaved so a longer horizon extends the same path
    values = np.sqrt(ys)
    times = np.arange(n + 1) * dt

    # exact zero flags per step via the bridge hitting probability
    x = np.sqrt(ys[:-1] * ys[1:]) / dt
    with np.errstate(invalid="ignore", divide="ignore"):
        p_avoid = np.where(x > 0, ive(1.0 - delta / 2.0, x) / ive(delta / 2.0 - 1.0, x), 0.0)
    hits = us >= p_avoid   # hit zero during step k -> k+1

    eps = dt ** 0.4
    local = np.zeros(n + 1)
    acc = 0.0
    armed = False
    crossings = 0
    for k in range(n):
        if values[k] >= eps:
            armed = True
        if hits[k]:
            if armed:
                crossings += 1
                acc = 0.5 * eps * crossings
            armed = False
        local[k + 1] = acc

    excursions = []
    start = 0
    for k in range(n):
        if hits[k]:
            s, e = times[start], times[k + 1]
            if e - s >= 2 * dt:
                excursions.append((float(s), float(e), float(e - s)))
            start = k + 1

    return BesselPath(
        delta=float(delta),
        path=TimeSeriesPath(times, values),
        local_time=TimeSeriesPath(times, local),
        excursions=tuple(excursions),
        last_zero=float(times[start]),
    )


def excursion_lengths_windowed(bessel_path, window_fraction=0.5):
    """Excursion lengths with start inside the counting window, censoring included.

    Counting only excursions STARTED before t_win (and carrying the open
    excursion straddling the horizon as a censored length) removes the
    inspection bias against long excursions that plagues completed-by-horizon
    counts when the length tail is heavy.  Returns (lengths, local time at
    t_win).
    """
    t = bessel_path.path.times
    t_win = t[-1] * window_fraction
    lengths = [l for (a, b, l) in bessel_path.excursions if a <= t_win]
    if bessel_path.last_zero <= t_win and t[-1] - bessel_path.last_zero >= 2 * (t[1] - t[0]):
        lengths.append(t[-1] - bessel_path.last_zero)  # censored straddler
    return np.asarray(lengths), bessel_path.local_time.value_at(t_win)


def excursion_count_slope(paths, eps_grid=None, window_fraction=0.5):
    """Regression slope of log(#excursions >= eps per unit local time) on log eps.

    The count of excursions of length >= eps per unit of local time scales
    like eps^(delta/2 - 1), so the fitted slope estimates delta/2 - 1.
    Accepts one path or a pool; counts use the windowed/censored protocol of
    excursion_lengths_windowed.
    """
    if eps_grid is None:
        eps_grid = 2.0 ** -np.arange(4, 11)
    if not isinstance(paths, (list, tuple)):
        paths = [paths]
    lengths = []
    total_local = 0.0
    for bp in paths:
        ls, loc = excursion_lengths_windowed(bp, window_fraction)
        lengths.append(ls)
        total_local += loc
    lengths = np.concatenate(lengths) if lengths else np.zeros(0)
    if total_local <= 0 or len(lengths) == 0:
        raise ParameterError("no excursions / local time in the counting window")
    counts = np.array([(lengths >= eps).sum() for eps in eps_grid], dtype=float)
    keep = counts > 0
    if keep.sum() < 3:
        raise ParameterError("not enough occupied excursion scales for a regression")
    slope = np.polyfit(np.log(np.asarray(eps_grid)[keep]),
                       np.log(counts[keep] / total_local), 1)[0]
    return float(slope)


def sample_stable_one_sided(alpha, horizon, dt, seed):
    """Strictly alpha-stable process, alpha in (1,2), one-sided jumps.

    Chambers-Mallows-Stuck increments with skewness pinned to the one-sided
    case chosen so that the positivity parameter is P(X_1 >= 0) = 1 - 1/alpha
    (the value 1 - 4/kappa' when alpha = kappa'/4).  All jumps are then on a
    single side; the opposite tail of each increment is light.
    """
    if not (1 < alpha < 2):
        raise ParameterError(f"alpha must lie in (1, 2), got {alpha}")
    if not dt > 0 or not horizon > 0:
        raise ParameterError("horizon and dt must be positive")
    n = int(round(horizon / dt))
    rng = np.random.default_rng(seed)
    increments = dt ** (1.0 / alpha) * _stable_standard(alpha, n, rng)
    values = np.concatenate(([0.0], np.cumsum(increments)))
    times = np.arange(n + 1) * dt
    return TimeSeriesPath(times, values)


def _stable_standard(alpha, size, rng):
    """CMS sampler for the standard strictly stable law with beta = +1."""
    beta = 1.0
    u = rng.uniform(-math.pi / 2, math.pi / 2, size=size)
    e = rng.exponential(1.0, size=size)
    t0 = math.atan(beta * math.tan(math.pi * alpha / 2.0)) / alpha
    scale = (1.0 + beta * beta * math.tan(math.pi * alpha / 2.0) ** 2) ** (1.0 / (2 * alpha))
    s = (
        scale
        * np.sin(alpha * (u + t0))
        / np.cos(u) ** (1.0 / alpha)
        * (np.cos(u - alpha * (u + t0)) / e) ** ((1.0 - alpha) / alpha)
    )
    return s


def poisson_lower_tail(lam, alpha):
    """Chernoff bound exp(lam*(alpha - alpha*log(alpha) - 1)) >= P[Poisson(lam) <= alpha*lam]."""
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if not (0 < alpha < 1):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return math.exp(lam * (alpha - alpha * math.log(alpha) - 1.0))

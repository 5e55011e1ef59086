"""Trajectory-separation diagnostics and finite-window Lyapunov estimates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import TimeGrid, integrate
from .errors import InsufficientDataError, PreconditionError, ShapeError
from .hilbert import StateVector
from .protocols import evolve_state

MIN_POINTS = 8
WINDOW_PERTURBATION = 0.05
CHAOS_SAMPLE_SPACING = 0.1


def bloch_distance(n, m) -> np.ndarray | float:
    """Euclidean distance in the Bloch ball (broadcasts over leading axes)."""
    return np.linalg.norm(np.asarray(n, float) - np.asarray(m, float), axis=-1)


def cylinder_distance(n, c, m, c_prime) -> np.ndarray | float:
    """Distance on ball x parameter-interval: the Bloch offset plus (c - c')^2."""
    return np.sqrt(bloch_distance(n, m) ** 2 + (float(c) - float(c_prime)) ** 2)


@dataclass(frozen=True)
class DistanceSeries:
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    epsilon_shift: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.times, float)
        values = np.asarray(self.values, float)
        if times.shape != values.shape:
            raise ShapeError("times and values must have equal length")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("distance values must be finite and non-negative")
        if self.epsilon_shift < 0:
            raise ValueError("epsilon_shift must be non-negative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def shifted(self, eps: float) -> "DistanceSeries":
        """D_eps = D + eps, the usual fix when both runs start at the same point."""
        return DistanceSeries(self.times, self.values + eps, self.epsilon_shift + eps)

    def log_ratio(self) -> np.ndarray:
        if self.values[0] <= 0:
            raise PreconditionError("D(0) = 0; apply an epsilon shift first")
        with np.errstate(divide="ignore"):
            return np.log(self.values / self.values[0])


def overlap_series(psi0: StateVector, phi0: StateVector, h, nl, grid: TimeGrid) -> np.ndarray:
    """|<psi(t)|phi(t)>| from two independent integrations."""
    if psi0.shape != phi0.shape:
        raise ShapeError("states must share a shape")
    a = integrate(psi0, h, nl, grid.t_end, grid.dt, grid.sample_every)
    b = integrate(phi0, h, nl, grid.t_end, grid.dt, grid.sample_every)
    return np.abs(np.einsum("ti,ti->t", a.amps.conj(), b.amps))


def trajectory_distance_series(run1, run2, parameter_offset=None, epsilon_shift=0.0) -> DistanceSeries:
    """Pointwise Bloch (or cylinder, with ``parameter_offset``) distance
    between two reduced-state series."""
    if run1.times.shape != run2.times.shape or not np.allclose(run1.times, run2.times, rtol=0, atol=1e-12):
        raise ShapeError("series are sampled on different time grids")
    d = bloch_distance(run1.blochs, run2.blochs)
    if parameter_offset is not None:
        d = np.sqrt(d**2 + float(parameter_offset) ** 2)
    series = DistanceSeries(run1.times, d)
    return series.shifted(epsilon_shift) if epsilon_shift else series


@dataclass(frozen=True)
class LyapunovEstimate:
    lambda_: float
    cv: float
    window: tuple
    delta_lambda: float
    delta_cv: float
    n_points: int

    def as_dict(self) -> dict:
        return {
            "lambda": self.lambda_,
            "cv": self.cv,
            "t_max": self.window[1],
            "delta_lambda": self.delta_lambda,
            "delta_cv": self.delta_cv,
            "n_points": self.n_points,
        }


def _fit(times, y, t_max):
    mask = (times > 0) & (times <= t_max * (1 + 1e-12))
    t, v = times[mask], y[mask]
    if t.size < MIN_POINTS:
        raise InsufficientDataError(
            f"only {t.size} samples in (0, {t_max:g}]; need at least {MIN_POINTS}"
        )
    if not np.all(np.isfinite(v)):
        raise PreconditionError("log-distance is not finite in the window (D(t) = 0?)")
    lam = float(t @ v / (t @ t))
    slopes = v / t
    mean = slopes.mean()
    cv = float(slopes.std() / mean) if mean != 0 else 0.0
    return lam, cv, t.size


def estimate_lyapunov(series: DistanceSeries, t_max: float) -> LyapunovEstimate:
    """Zero-intercept regression of log(D(t)/D(0)) on t over (0, t_max].

    CV is std/mean of the pointwise slopes log(D/D0)/t inside the window.
    The deltas average |change| over refits with t_max scaled by 0.95 and
    1.05; the upper refit is skipped when it runs past the data.
    """
    if t_max > series.times[-1] * (1 + 1e-12) or t_max <= 0:
        raise PreconditionError(f"t_max = {t_max} outside (0, {series.times[-1]}]")
    y = series.log_ratio()
    lam, cv, n = _fit(series.times, y, t_max)
    d_lam, d_cv = [], []
    for scale in (1 - WINDOW_PERTURBATION, 1 + WINDOW_PERTURBATION):
        tm = t_max * scale
        if tm > series.times[-1] * (1 + 1e-12):
            continue
        try:
            l2, c2, _ = _fit(series.times, y, tm)
        except InsufficientDataError:
            continue
        d_lam.append(abs(l2 - lam))
        d_cv.append(abs(c2 - cv))
    return LyapunovEstimate(
        lam, cv, (0.0, float(t_max)),
        float(np.mean(d_lam)) if d_lam else float("nan"),
        float(np.mean(d_cv)) if d_cv else float("nan"),
        n,
    )


def suggest_window(series: DistanceSeries, min_points: int = MIN_POINTS) -> float:
    """t_max whose zero-intercept fit has the highest R^2 (largest on ties)."""
    y = series.log_ratio()
    t = series.times
    mask = t > 0
    t, y = t[mask], y[mask]
    if t.size < min_points:
        raise InsufficientDataError(f"need at least {min_points} positive-time samples")
    sty = np.cumsum(t * y)
    stt = np.cumsum(t * t)
    syy = np.cumsum(y * y)
    sy = np.cumsum(y)
    k = np.arange(1, t.size + 1)
    ss_res = syy - sty**2 / stt
    ss_tot = syy - sy**2 / k
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(ss_tot > 0, 1 - ss_res / ss_tot, -np.inf)
    r2[: min_points - 1] = -np.inf
    best = np.flatnonzero(r2 >= r2.max() - 1e-12)[-1]
    return float(t[best])


def state_sensitivity(psi0: StateVector, phi0: StateVector, h, nl, grid: TimeGrid,
                      epsilon_shift=0.0) -> DistanceSeries:
    """Bloch distance between Bob's states evolved from two nearby sources."""
    return trajectory_distance_series(
        evolve_state(psi0, h, nl, grid), evolve_state(phi0, h, nl, grid),
        epsilon_shift=epsilon_shift,
    )


def parameter_sensitivity(psi0: StateVector, h, h_prime, nl, grid: TimeGrid,
                          parameter_offset: float, nl_prime=None, epsilon_shift=0.0) -> DistanceSeries:
    """Cylinder distance between runs of one source under two nearby systems."""
    return trajectory_distance_series(
        evolve_state(psi0, h, nl, grid), evolve_state(psi0, h_prime, nl_prime or nl, grid),
        parameter_offset=parameter_offset, epsilon_shift=epsilon_shift,
    )

"""Particle-filter torso tracking from planar range scans.

Each particle is a body hypothesis (x, y, theta): position of the torso
ellipse center and facing direction in degrees (the shoulder line runs
perpendicular to theta). Per frame the filter diffuses the particles
with Gaussian motion noise, weights them against the scan, estimates
the body state as the weighted mean (circular in theta), and then
systematically resamples.

The weight of a hypothesis comes from evaluation points spread evenly
around its ellipse contour. Only points on the sensor-facing side count:
a point is kept when its outward normal has a positive component toward
the sensor. For every kept point the distance to the nearest scan return
is collected; with d_max the largest of those distances and sigma_d
their population variance (floored to avoid division blowups) the
weight is

    alpha = exp(-d_max^2 / sigma_d)

which rewards hypotheses whose entire visible contour hugs the scan.

The facing direction is ambiguous by 180 degrees from shape alone. The
filter resolves it by initialization: particles start near the seat's
nominal facing, and per-frame motion continuity keeps the estimate on
the true branch as the person turns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Pose2, normalize_angle
from .laser import LaserScan, scan_to_points
from .seeding import SeedLike, derive_rng

MIN_WEIGHT = 1e-300


@dataclass
class FilterConfig:
    n_particles: int = 500
    motion_sigma_xy_m: float = 0.05
    motion_sigma_theta_deg: float = 5.0
    n_eval_points: int = 20
    # Floor for the distance-variance denominator, (3 * range noise sigma)^2.
    # Anything tighter lets rotated hypotheses overfit per-frame scan noise
    # (they dodge the sparse silhouette edges) and the estimate wanders.
    sigma_floor_m2: float = 9e-4
    body_semi_major_m: float = 0.25
    body_semi_minor_m: float = 0.15
    init_sigma_xy_m: float = 0.2
    init_sigma_theta_deg: float = 15.0
    warmup_frames: int = 10

    def __post_init__(self) -> None:
        if self.n_particles < 2:
            raise ValueError("n_particles must be at least 2")
        if self.n_eval_points < 4:
            raise ValueError("n_eval_points must be at least 4")
        if self.sigma_floor_m2 <= 0:
            raise ValueError("sigma_floor_m2 must be positive")
        if not (self.body_semi_major_m >= self.body_semi_minor_m > 0):
            raise ValueError("require body_semi_major_m >= body_semi_minor_m > 0")


@dataclass
class ParticleSet:
    """states has shape (n, 3): columns x, y, theta_deg. weights sum to 1."""

    states: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.states.ndim != 2 or self.states.shape[1] != 3:
            raise ValueError("states must have shape (n, 3)")
        if self.weights.shape != (len(self.states),):
            raise ValueError("weights must match states")

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class BodyEstimate:
    x: float
    y: float
    theta_deg: float
    distance_m: float
    n_effective: float
    converged: bool


def init_particles(config: FilterConfig, guess: Pose2, seed: SeedLike) -> ParticleSet:
    """Spread particles around an initial pose guess (e.g. the seat)."""
    rng = derive_rng(seed)
    n = config.n_particles
    states = np.empty((n, 3))
    states[:, 0] = rng.normal(guess.x, config.init_sigma_xy_m, n)
    states[:, 1] = rng.normal(guess.y, config.init_sigma_xy_m, n)
    states[:, 2] = _wrap(rng.normal(guess.heading_deg, config.init_sigma_theta_deg, n))
    return ParticleSet(states, np.full(n, 1.0 / n))


def _wrap(deg: np.ndarray) -> np.ndarray:
    wrapped = np.remainder(deg, 360.0)
    wrapped[wrapped > 180.0] -= 360.0
    return wrapped


def _contour_local(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Evenly parameterized contour points and outward normals, ellipse frame."""
    t = 2.0 * math.pi * np.arange(n) / n
    pts = np.column_stack([a * np.cos(t), b * np.sin(t)])
    normals = np.column_stack([np.cos(t) / a, np.sin(t) / b])
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return pts, normals


def visible_evaluation_points(
    state: tuple[float, float, float] | np.ndarray,
    sensor: Pose2,
    config: FilterConfig,
) -> np.ndarray:
    """Contour points of one hypothesis facing the sensor, shape (k, 2)."""
    x, y, theta = float(state[0]), float(state[1]), float(state[2])
    local_pts, local_nrm = _contour_local(
        config.body_semi_major_m, config.body_semi_minor_m, config.n_eval_points
    )
    axis = math.radians(theta + 90.0)  # major axis direction
    c, s = math.cos(axis), math.sin(axis)
    rot = np.array([[c, -s], [s, c]])
    pts = local_pts @ rot.T + [x, y]
    nrm = local_nrm @ rot.T
    to_sensor = np.array([sensor.x, sensor.y]) - pts
    visible = np.einsum("ij,ij->i", nrm, to_sensor) > 0.0
    return pts[visible]


def likelihood(
    eval_points: np.ndarray,
    scan_points: np.ndarray,
    sigma_floor_m2: float,
    min_weight: float = MIN_WEIGHT,
) -> float:
    """Score one hypothesis's visible contour against the scan returns."""
    eval_points = np.asarray(eval_points, dtype=float)
    scan_points = np.asarray(scan_points, dtype=float)
    if len(eval_points) == 0 or len(scan_points) == 0:
        return min_weight
    diff = eval_points[:, None, :] - scan_points[None, :, :]
    d = np.sqrt(np.min(np.einsum("ijk,ijk->ij", diff, diff), axis=1))
    d_max = float(np.max(d))
    sigma_d = max(float(np.var(d)), sigma_floor_m2)
    alpha = math.exp(-(d_max * d_max) / sigma_d)
    return max(alpha, min_weight)


def _batch_likelihoods(
    states: np.ndarray,
    sensor_xy: np.ndarray,
    scan_points: np.ndarray,
    config: FilterConfig,
) -> np.ndarray:
    """Vectorized likelihood over all particles; matches the scalar path."""
    n = len(states)
    if len(scan_points) == 0:
        return np.full(n, MIN_WEIGHT)
    local_pts, local_nrm = _contour_local(
        config.body_semi_major_m, config.body_semi_minor_m, config.n_eval_points
    )
    axis = np.radians(states[:, 2] + 90.0)
    c, s = np.cos(axis)[:, None], np.sin(axis)[:, None]
    lx, ly = local_pts[:, 0][None, :], local_pts[:, 1][None, :]
    nx, ny = local_nrm[:, 0][None, :], local_nrm[:, 1][None, :]
    px = states[:, 0][:, None] + c * lx - s * ly
    py = states[:, 1][:, None] + s * lx + c * ly
    wnx = c * nx - s * ny
    wny = s * nx + c * ny
    visible = wnx * (sensor_xy[0] - px) + wny * (sensor_xy[1] - py) > 0.0

    dx = px[:, :, None] - scan_points[None, None, :, 0]
    dy = py[:, :, None] - scan_points[None, None, :, 1]
    d = np.sqrt(np.min(dx * dx + dy * dy, axis=2))

    d = np.where(visible, d, np.nan)
    counts = visible.sum(axis=1)
    ok = counts > 0
    alphas = np.full(n, MIN_WEIGHT)
    if ok.any():
        with np.errstate(invalid="ignore"):
            d_max = np.nanmax(d[ok], axis=1)
            var = np.nanvar(d[ok], axis=1)
        sigma_d = np.maximum(var, config.sigma_floor_m2)
        alphas[ok] = np.maximum(np.exp(-(d_max * d_max) / sigma_d), MIN_WEIGHT)
    return alphas


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indices chosen by systematic (low-variance) resampling."""
    n = len(weights)
    positions = (np.arange(n) + rng.uniform()) / n
    cumulative = np.cumsum(weights)
    cumulative /= cumulative[-1]
    return np.searchsorted(cumulative, positions)


def _estimate(particles: ParticleSet, sensor: Pose2, converged: bool) -> BodyEstimate:
    w = particles.weights
    x = float(np.dot(w, particles.states[:, 0]))
    y = float(np.dot(w, particles.states[:, 1]))
    theta_rad = np.radians(particles.states[:, 2])
    theta = math.degrees(
        math.atan2(float(np.dot(w, np.sin(theta_rad))), float(np.dot(w, np.cos(theta_rad))))
    )
    n_eff = 1.0 / float(np.dot(w, w))
    return BodyEstimate(
        x=x,
        y=y,
        theta_deg=normalize_angle(theta),
        distance_m=sensor.distance_to((x, y)),
        n_effective=n_eff,
        converged=converged,
    )


def _reinit_over_field(scan: LaserScan, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform hypotheses over the sensor's fan, used on track loss."""
    span = scan.angular_step_deg * (len(scan.ranges_m) - 1)
    rel = rng.uniform(scan.start_angle_deg, scan.start_angle_deg + span, n)
    rad = np.radians(scan.sensor_pose.heading_deg + rel)
    r = rng.uniform(0.2, scan.max_range_m, n)
    states = np.empty((n, 3))
    states[:, 0] = scan.sensor_pose.x + r * np.cos(rad)
    states[:, 1] = scan.sensor_pose.y + r * np.sin(rad)
    states[:, 2] = rng.uniform(-180.0, 180.0, n)
    return states


def filter_step(
    particles: ParticleSet,
    scan: LaserScan,
    config: FilterConfig,
    seed: SeedLike,
) -> tuple[ParticleSet, BodyEstimate]:
    """One diffuse/weight/estimate/resample cycle.

    On total weight underflow (no hypothesis explains the scan) the set
    is reinitialized uniformly over the sensor's field and the returned
    estimate is flagged converged=False. Otherwise converged=True here;
    BodyTracker additionally requires a warmup streak.
    """
    rng = derive_rng(seed)
    n = len(particles)
    sensor = scan.sensor_pose

    states = particles.states.copy()
    states[:, 0] += rng.normal(0.0, config.motion_sigma_xy_m, n)
    states[:, 1] += rng.normal(0.0, config.motion_sigma_xy_m, n)
    states[:, 2] = _wrap(states[:, 2] + rng.normal(0.0, config.motion_sigma_theta_deg, n))

    scan_points = scan_to_points(scan)
    alphas = _batch_likelihoods(states, np.array([sensor.x, sensor.y]), scan_points, config)
    weights = particles.weights * alphas
    total = float(weights.sum())

    if not math.isfinite(total) or total <= 0.0:
        states = _reinit_over_field(scan, n, rng)
        uniform = np.full(n, 1.0 / n)
        fresh = ParticleSet(states, uniform)
        return fresh, _estimate(fresh, sensor, converged=False)

    weights = weights / total
    weighted = ParticleSet(states, weights)
    estimate = _estimate(weighted, sensor, converged=True)
    idx = systematic_resample(weights, rng)
    resampled = ParticleSet(states[idx].copy(), np.full(n, 1.0 / n))
    return resampled, estimate


def body_orientation_for_srm(estimate: BodyEstimate, robot: Pose2) -> float | None:
    """Body facing relative to the body-to-robot direction, or None.

    None signals that the estimate is not ready to feed the situation
    rules (filter still warming up or freshly reinitialized).
    """
    if not estimate.converged:
        return None
    to_robot = math.degrees(math.atan2(robot.y - estimate.y, robot.x - estimate.x))
    return normalize_angle(estimate.theta_deg - to_robot)


class BodyTracker:
    """Stateful convenience wrapper: owns the particle set and warmup logic."""

    def __init__(self, config: FilterConfig, guess: Pose2, seed: SeedLike) -> None:
        self.config = config
        self.particles = init_particles(config, guess, seed)
        self.frames = 0
        self._healthy_streak = 0

    def step(self, scan: LaserScan, seed: SeedLike) -> BodyEstimate:
        self.particles, estimate = filter_step(self.particles, scan, self.config, seed)
        self.frames += 1
        self._healthy_streak = self._healthy_streak + 1 if estimate.converged else 0
        if self._healthy_streak < self.config.warmup_frames:
            estimate = replace(estimate, converged=False)
        return estimate

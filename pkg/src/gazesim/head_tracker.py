"""Simulated camera-based head direction sensor.

Reports head yaw/pitch/roll relative to the camera with additive
Gaussian noise, at most once per video frame. The face model is only
trackable while the head is turned no more than 90 degrees away from
the camera; beyond that the observation is invalid and carries no
angles. Validity depends on the true relative yaw only, never on the
noise draw.
"""
from __future__ import annotations

from dataclasses import dataclass

from .geometry import HeadPose, Pose2, bearing_to, normalize_angle
from .seeding import STREAM_HEAD, SeedLike, derive_rng

TRACKING_LIMIT_DEG = 90.0
DEFAULT_NOISE_SIGMA_DEG = 1.0
FRAME_RATE_HZ = 30.0


@dataclass(frozen=True)
class HeadObservation:
    """One frame of head-tracker output.

    Angle fields are None when valid is False; they must not be read.
    yaw_deg is measured relative to the head-to-camera direction, so 0
    means the face points straight at the camera.
    """

    frame: int
    valid: bool
    yaw_deg: float | None = None
    pitch_deg: float | None = None
    roll_deg: float | None = None


def relative_yaw_deg(head: HeadPose, camera: Pose2) -> float:
    """True head yaw relative to the head-to-camera direction."""
    to_camera = bearing_to(head.position, camera.position)
    return normalize_angle(head.yaw_deg - to_camera)


def observe_head(
    true_head: HeadPose,
    camera: Pose2,
    noise_sigma: float = DEFAULT_NOISE_SIGMA_DEG,
    seed: SeedLike = 0,
    frame: int = 0,
) -> HeadObservation:
    """Observe one frame. Identical (seed, frame) pairs give identical output."""
    rel = relative_yaw_deg(true_head, camera)
    if abs(rel) > TRACKING_LIMIT_DEG:
        return HeadObservation(frame=frame, valid=False)
    rng = derive_rng(seed, STREAM_HEAD, frame)
    noise = rng.normal(0.0, noise_sigma, size=3)
    return HeadObservation(
        frame=frame,
        valid=True,
        yaw_deg=normalize_angle(rel + noise[0]),
        pitch_deg=normalize_angle(true_head.pitch_deg + noise[1]),
        roll_deg=normalize_angle(true_head.roll_deg + noise[2]),
    )

"""Rigid pose registration of the EVB: least-squares fit of observed feature
points to the model's features, and rebasing of the digital twin.

Stands in for the camera pipeline: correspondences are known (pack corner
features), the fit is the orthogonal-Procrustes solution on centered points
with a proper-rotation (det = +1) constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CountMismatchError, DegenerateInputError, ResidualTooHighError
from .geometry import Pose6D, mat_to_quat
from .scene import Scene

RESIDUAL_GATE_M = 0.005


@dataclass(frozen=True)
class PoseUpdate:
    transform: Pose6D          # model (EVB base) frame -> observed world frame
    timestamp_us: int
    residual_rmse_m: float

    def to_dict(self) -> dict:
        return {"transform": self.transform.to_dict(),
                "timestamp_us": self.timestamp_us,
                "residual_m": self.residual_rmse_m}

    @staticmethod
    def from_dict(d: dict) -> "PoseUpdate":
        return PoseUpdate(transform=Pose6D.from_dict(d["transform"]),
                          timestamp_us=int(d.get("timestamp_us", 0)),
                          residual_rmse_m=float(d.get("residual_m", 0.0)))


def estimate_rigid_transform(model_points, observed_points,
                             timestamp_us: int = 0) -> PoseUpdate:
    """Least-squares rigid transform mapping model_points onto observed_points.

    Kabsch/Procrustes on centered points; reflections are repaired to proper
    rotations. Needs >= 3 non-collinear points with given correspondence.
    """
    mp = np.asarray(model_points, dtype=float).reshape(-1, 3)
    op = np.asarray(observed_points, dtype=float).reshape(-1, 3)
    if len(mp) != len(op):
        raise CountMismatchError(f"{len(mp)} model vs {len(op)} observed points")
    if len(mp) < 3:
        raise DegenerateInputError("need at least 3 point pairs")

    cm = mp.mean(axis=0)
    co = op.mean(axis=0)
    a = mp - cm
    b = op - co
    # collinear/coincident model points leave the rotation underdetermined
    s = np.linalg.svd(a, compute_uv=False)
    if s[1] < 1e-12 * max(1.0, s[0]):
        raise DegenerateInputError("model points are collinear or coincident")

    h = a.T @ b
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = co - r @ cm
    residual = float(np.sqrt(np.mean(np.sum((b - a @ r.T) ** 2, axis=1))))
    return PoseUpdate(transform=Pose6D(t, mat_to_quat(r)),
                      timestamp_us=timestamp_us, residual_rmse_m=residual)


def rebase_scene(scene: Scene, update: PoseUpdate,
                 residual_gate_m: float = RESIDUAL_GATE_M) -> Scene:
    """Replace the EVB base frame pose with the estimated transform.

    All component world poses shift rigidly; relative poses are untouched.
    Rejects updates whose fit residual exceeds the gate.
    """
    if update.residual_rmse_m > residual_gate_m:
        raise ResidualTooHighError(
            f"residual {update.residual_rmse_m * 1e3:.1f} mm exceeds "
            f"gate {residual_gate_m * 1e3:.1f} mm")
    return scene.with_frame_pose(scene.evb_base_frame, update.transform)


def synthesize_observation(scene: Scene, true_transform: Pose6D,
                           noise_sigma_m: float, seed: int) -> np.ndarray:
    """Simulated camera: the pack's corner features under true_transform with
    seeded Gaussian noise."""
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = true_transform.transform_points(scene.feature_points)
    if noise_sigma_m > 0.0:
        pts = pts + rng.normal(0.0, noise_sigma_m, size=pts.shape)
    return pts

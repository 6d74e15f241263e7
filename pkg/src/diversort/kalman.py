"""Constant-velocity Kalman filter over box centers.

The state is ``(x, y, vx, vy)`` in pixels and pixels/frame. Box area and
aspect ratio are deliberately left out: a swimmer's box changes shape too
quickly for them to be worth modelling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

# dt fixed at one frame
_F = np.array([[1.0, 0.0, 1.0, 0.0],
               [0.0, 1.0, 0.0, 1.0],
               [0.0, 0.0, 1.0, 0.0],
               [0.0, 0.0, 0.0, 1.0]])
_H = np.array([[1.0, 0.0, 0.0, 0.0],
               [0.0, 1.0, 0.0, 0.0]])

FALLBACK_HEIGHT = 100.0


@dataclass(frozen=True)
class NoiseModel:
    process_position_std: float = FALLBACK_HEIGHT / 20
    process_velocity_std: float = FALLBACK_HEIGHT / 160
    measurement_std: float = FALLBACK_HEIGHT / 20

    def __post_init__(self):
        if not (self.process_position_std > 0 and self.process_velocity_std > 0
                and self.measurement_std > 0):
            raise ValueError("noise standard deviations must be positive")

    @classmethod
    def for_height(cls, height: float, position_weight: float = 1 / 20,
                   velocity_weight: float = 1 / 160, measurement_weight: float = 1 / 20) -> "NoiseModel":
        h = height if height > 0 and math.isfinite(height) else FALLBACK_HEIGHT
        return cls(position_weight * h, velocity_weight * h, measurement_weight * h)

    def process_covariance(self) -> np.ndarray:
        p, v = self.process_position_std ** 2, self.process_velocity_std ** 2
        return np.diag([p, p, v, v])

    def measurement_covariance(self) -> np.ndarray:
        return np.eye(2) * self.measurement_std ** 2


DEFAULT_NOISE = NoiseModel()


@dataclass(frozen=True)
class MotionState:
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def position(self) -> Tuple[float, float]:
        return (float(self.mean[0]), float(self.mean[1]))


def _finite_point(point) -> np.ndarray:
    z = np.asarray(point, dtype=np.float64).reshape(2)
    if not np.all(np.isfinite(z)):
        raise ValueError(f"non-finite coordinates {point!r}")
    return z


def initiate(center, noise: NoiseModel = DEFAULT_NOISE) -> MotionState:
    """Start a track at ``center`` with zero velocity and inflated velocity variance."""
    z = _finite_point(center)
    pos_var = (2 * noise.measurement_std) ** 2
    vel_var = (10 * noise.measurement_std) ** 2
    mean = np.array([z[0], z[1], 0.0, 0.0])
    return MotionState(mean, np.diag([pos_var, pos_var, vel_var, vel_var]))


def predict(state: MotionState, noise: NoiseModel = DEFAULT_NOISE) -> MotionState:
    mean = _F @ state.mean
    cov = _F @ state.covariance @ _F.T + noise.process_covariance()
    return MotionState(mean, 0.5 * (cov + cov.T))


def project(state: MotionState, noise: NoiseModel = DEFAULT_NOISE) -> Tuple[np.ndarray, np.ndarray]:
    """Predicted measurement mean and innovation covariance ``H P H^T + R``."""
    mean = state.mean[:2]
    cov = state.covariance[:2, :2] + noise.measurement_covariance()
    return mean, cov


def _cholesky(s: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("innovation covariance is singular; check the noise model") from None


def update(state: MotionState, measurement, noise: NoiseModel = DEFAULT_NOISE) -> MotionState:
    z = _finite_point(measurement)
    projected_mean, s = project(state, noise)
    chol = _cholesky(s)
    pht = state.covariance @ _H.T
    # K = P H^T S^-1, solved through the Cholesky factor
    gain = np.linalg.solve(chol.T, np.linalg.solve(chol, pht.T)).T
    mean = state.mean + gain @ (z - projected_mean)
    cov = state.covariance - gain @ s @ gain.T
    return MotionState(mean, 0.5 * (cov + cov.T))


def squared_mahalanobis(state: MotionState, measurement, noise: NoiseModel = DEFAULT_NOISE) -> float:
    z = _finite_point(measurement)
    projected_mean, s = project(state, noise)
    chol = _cholesky(s)
    w = np.linalg.solve(chol, z - projected_mean)
    return float(w @ w)

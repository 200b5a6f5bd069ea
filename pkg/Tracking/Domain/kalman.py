# Tracking/Domain/kalman.py
"""
Constant-velocity Kalman filter over the area/aspect box state.

State X = [u, v, s, r, u', v', s'] with dt = 1 frame. The aspect ratio r carries no
velocity and there is no control input. Measurements observe [u, v, s, r].
"""
from __future__ import annotations

import logging
from typing import Any

import filterpy.kalman
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from Tracking.Domain.box_encoding_enum import BoxEncoding
from Tracking.Domain.errors import DegenerateBoxError, InnovationCovarianceError
from Tracking.Domain.geometry import AreaAspect, Box, convert

logger = logging.getLogger(__name__)

STATE_DIM = 7
MEASUREMENT_DIM = 4

TRANSITION = np.eye(STATE_DIM)
TRANSITION[0, 4] = TRANSITION[1, 5] = TRANSITION[2, 6] = 1.0

OBSERVATION = np.zeros((MEASUREMENT_DIM, STATE_DIM))
OBSERVATION[0, 0] = OBSERVATION[1, 1] = OBSERVATION[2, 2] = OBSERVATION[3, 3] = 1.0

_SYMMETRY_TOL = 1e-8


def _as_matrix(value: Any, dim: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=np.float64)
    if arr.ndim == 1:
        arr = np.diag(arr)
    if arr.shape != (dim, dim):
        raise ValueError(f"{name} must be {dim}x{dim} or a length-{dim} diagonal, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if not np.allclose(arr, arr.T, atol=_SYMMETRY_TOL):
        raise ValueError(f"{name} must be symmetric")
    return arr


class FilterConfig(BaseModel):
    """Noise covariances; each may be given as a full matrix or as its diagonal."""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    Q: np.ndarray = Field(default_factory=lambda: np.diag([1.0, 1.0, 1.0, 1e-2, 1e-2, 1e-2, 1e-4]))
    R: np.ndarray = Field(default_factory=lambda: np.diag([1.0, 1.0, 10.0, 1e-2]))
    P0: np.ndarray = Field(default_factory=lambda: np.diag([10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4]))
    s_min: float = Field(default=1.0, gt=0)
    r_min: float = Field(default=1e-3, gt=0)

    @field_validator("Q", "P0", mode="before")
    @classmethod
    def _state_matrix(cls, value: Any, info) -> np.ndarray:
        arr = _as_matrix(value, STATE_DIM, info.field_name)
        if np.linalg.eigvalsh(arr).min() < -_SYMMETRY_TOL:
            raise ValueError(f"{info.field_name} must be positive semidefinite")
        return arr

    @field_validator("R", mode="before")
    @classmethod
    def _measurement_matrix(cls, value: Any) -> np.ndarray:
        arr = _as_matrix(value, MEASUREMENT_DIM, "R")
        if np.linalg.eigvalsh(arr).min() <= 0:
            raise ValueError("R must be positive definite")
        return arr

    @field_serializer("Q", "R", "P0")
    def _dump_matrix(self, value: np.ndarray) -> list:
        # diagonal matrices dump as their diagonal, the form the config docs use
        if np.count_nonzero(value - np.diag(np.diagonal(value))) == 0:
            return np.diagonal(value).tolist()
        return value.tolist()


class EstimationBox(BaseModel):
    """Decoded prior box: center (u, v) with w = sqrt(s * r), h = sqrt(s / r)."""

    model_config = ConfigDict(frozen=True)

    u: float
    v: float
    w: float
    h: float
    clamped: bool = False

    def to_box(self) -> Box:
        return Box(x=self.u - self.w / 2.0, y=self.v - self.h / 2.0, w=self.w, h=self.h)


class TrackState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x_hat: np.ndarray
    P: np.ndarray
    frame_index: int = 0
    config: FilterConfig = Field(default_factory=FilterConfig)
    is_prior: bool = False  # True between predict and update/coast

    @model_validator(mode="after")
    def _shapes(self) -> "TrackState":
        if self.x_hat.shape != (STATE_DIM,) or self.P.shape != (STATE_DIM, STATE_DIM):
            raise ValueError("TrackState needs a 7-vector and a 7x7 covariance")
        return self

    def observed(self) -> AreaAspect:
        u, v, s, r = (float(c) for c in self.x_hat[:4])
        return AreaAspect(u=u, v=v, s=s, r=r)


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return (P + P.T) / 2.0


def _measurement(box: Box) -> np.ndarray:
    if box.is_degenerate:
        raise DegenerateBoxError()
    return np.array(convert(box, BoxEncoding.AREA_ASPECT).as_list(), dtype=np.float64)


def decode(x: np.ndarray, config: FilterConfig) -> EstimationBox:
    s = float(x[2])
    r = float(x[3])
    clamped = False
    if s < config.s_min:
        s, clamped = config.s_min, True
    if r < config.r_min:
        r, clamped = config.r_min, True
    return EstimationBox(u=float(x[0]), v=float(x[1]), w=float(np.sqrt(s * r)), h=float(np.sqrt(s / r)), clamped=clamped)


def init(box: Box, config: FilterConfig | None = None) -> TrackState:
    config = config or FilterConfig()
    z = _measurement(box)
    x_hat = np.concatenate([z, np.zeros(3)])
    return TrackState(x_hat=x_hat, P=config.P0.copy(), frame_index=0, config=config)


def predict(state: TrackState) -> tuple[TrackState, EstimationBox]:
    config = state.config
    x, P = filterpy.kalman.predict(state.x_hat, state.P, F=TRANSITION, Q=config.Q)
    x = np.array(x, dtype=np.float64)
    P = _symmetrize(P)

    estimation = decode(x, config)
    if estimation.clamped:
        # write the clamp back so the next update starts from a decodable prior
        x[2] = max(x[2], config.s_min)
        x[3] = max(x[3], config.r_min)
        logger.debug("frame %d: prior clamped to s=%.3f r=%.4f", state.frame_index + 1, x[2], x[3])

    prior = state.model_copy(update={"x_hat": x, "P": P, "is_prior": True})
    return prior, estimation


def kalman_gain(P_prior: np.ndarray, R: np.ndarray) -> np.ndarray:
    S = OBSERVATION @ P_prior @ OBSERVATION.T + R
    try:
        # K = P H^T S^-1, solved as S K^T = H P for symmetric P and S
        return np.linalg.solve(S, OBSERVATION @ P_prior).T
    except np.linalg.LinAlgError as exc:
        raise InnovationCovarianceError() from exc


def update(state: TrackState, measurement: Box) -> TrackState:
    if not state.is_prior:
        raise ValueError("update requires a predicted state; call predict first")
    z = _measurement(measurement)
    # filterpy does not raise on a singular S
    kalman_gain(state.P, state.config.R)

    # Joseph-form covariance update
    x, P = filterpy.kalman.update(state.x_hat, state.P, z, state.config.R, OBSERVATION)
    P = _symmetrize(P)
    return state.model_copy(update={"x_hat": x, "P": P, "frame_index": state.frame_index + 1, "is_prior": False})


def coast(state: TrackState) -> TrackState:
    """Accept the prior as the posterior for a frame without a trusted measurement."""
    if not state.is_prior:
        raise ValueError("coast requires a predicted state; call predict first")
    return state.model_copy(update={"frame_index": state.frame_index + 1, "is_prior": False})


def joseph_covariance(P_prior: np.ndarray, K: np.ndarray, R: np.ndarray) -> np.ndarray:
    I_KH = np.eye(STATE_DIM) - K @ OBSERVATION
    return I_KH @ P_prior @ I_KH.T + K @ R @ K.T

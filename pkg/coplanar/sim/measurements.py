"""
Measurement synthesis: IMU samples from the analytic trajectory and
feature observations of the room landmarks, with ground truth kept
alongside.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from coplanar.conf import AppSettings, app_settings
from coplanar.core.typing import Matrix, Segment, Vector
from coplanar.geometry.pose import ImuState, Pose

from .camera import PinholeCamera
from .scene import SceneSpec
from .trajectory import TrajectorySpec

logger = logging.getLogger(__name__)

MIN_SEGMENT_PIXELS = 20.0
MIN_CAMERA_DEPTH = 0.1


@dataclass
class MeasurementLog:
    """
    Everything the estimator consumes, plus ground truth. ``imu`` rows are
    ``(t, wx, wy, wz, ax, ay, az)``; observations are normalized-plane
    coordinates keyed by frame id then landmark id.
    """

    imu: Matrix
    frames: list[tuple[float, int]]
    points: dict[int, dict[int, Vector]] = field(default_factory=dict)
    lines: dict[int, dict[int, Segment]] = field(default_factory=dict)
    gt_states: dict[int, ImuState] = field(default_factory=dict)
    gt_points: dict[int, Vector] = field(default_factory=dict)
    gt_lines: dict[int, Segment] = field(default_factory=dict)

    def frame_time(self, frame_id: int) -> float:
        return dict((f, t) for t, f in self.frames)[frame_id]

    def imu_between(self, t0: float, t1: float) -> Matrix:
        """
        IMU rows with ``t0 < t <= t1``.
        """
        t = self.imu[:, 0]
        return self.imu[(t > t0 + 1e-9) & (t <= t1 + 1e-9)]

    def visible_counts(self) -> tuple[float, float]:
        """
        Mean number of observed points and lines per frame.
        """
        n = max(len(self.frames), 1)
        points = sum(len(v) for v in self.points.values()) / n
        lines = sum(len(v) for v in self.lines.values()) / n
        return points, lines


def gen_imu(
    traj: TrajectorySpec,
    conf: AppSettings = app_settings,
    seed: int = 0,
    noise: Optional[bool] = None,
) -> Matrix:
    """
    IMU stream sampled from the analytic trajectory derivatives. With noise
    enabled, white noise of the configured densities and random-walk
    biases starting at zero are added.

    Args:
        traj (TrajectorySpec): Trajectory
        conf (AppSettings, optional): Settings. Defaults to ``app_settings``.
        seed (int, optional): Random seed. Defaults to 0.
        noise (bool, optional): Override ``SIM_IMU_NOISE``

    Returns:
        Matrix: Rows ``(t, wx, wy, wz, ax, ay, az)``
    """
    noise = conf.SIM_IMU_NOISE if noise is None else noise
    rng = np.random.default_rng(seed)
    gravity = np.array([0.0, 0.0, -conf.GRAVITY])
    times = traj.imu_times()
    dt = 1.0 / traj.imu_rate
    rows = np.zeros((len(times), 7))
    ba, bg = np.zeros(3), np.zeros(3)
    for k, t in enumerate(times):
        gyr = traj.angular_velocity(t)
        acc = traj.specific_force(t, gravity)
        if noise:
            gyr = gyr + bg + rng.normal(0.0, conf.GYRO_NOISE_DENSITY / np.sqrt(dt), 3)
            acc = acc + ba + rng.normal(0.0, conf.ACCEL_NOISE_DENSITY / np.sqrt(dt), 3)
            bg = bg + rng.normal(0.0, conf.GYRO_BIAS_WALK * np.sqrt(dt), 3)
            ba = ba + rng.normal(0.0, conf.ACCEL_BIAS_WALK * np.sqrt(dt), 3)
        rows[k] = [t, *gyr, *acc]
    return rows


def project(T_wc: Pose, x: Vector) -> Vector | None:
    """
    Normalized-plane observation of a world point, None behind the camera.
    """
    f = T_wc.inverse().transform(x)
    if f[2] <= MIN_CAMERA_DEPTH:
        return None
    return np.array([f[0] / f[2], f[1] / f[2], 1.0])


def clip_segment(
    T_wc: Pose, segment: Segment, camera: PinholeCamera
) -> Segment | None:
    """
    Part of a 3D segment seen by the camera, as normalized-plane endpoints.
    The segment is cut at the near plane and then against the image
    borders (Liang-Barsky).
    """
    T_cw = T_wc.inverse()
    a, b = T_cw.transform(segment[0]), T_cw.transform(segment[1])
    za, zb = a[2], b[2]
    if za <= MIN_CAMERA_DEPTH and zb <= MIN_CAMERA_DEPTH:
        return None
    if za <= MIN_CAMERA_DEPTH or zb <= MIN_CAMERA_DEPTH:
        t = (MIN_CAMERA_DEPTH - za) / (zb - za)
        cut = a + t * (b - a)
        a, b = (cut, b) if za <= MIN_CAMERA_DEPTH else (a, cut)
    p0, p1 = a[:2] / a[2], b[:2] / b[2]
    xmin, xmax, ymin, ymax = camera.normalized_bounds()
    d = p1 - p0
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-d[0], p0[0] - xmin),
        (d[0], xmax - p0[0]),
        (-d[1], p0[1] - ymin),
        (d[1], ymax - p0[1]),
    ):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        r = q / p
        if p < 0.0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return None
    s, e = p0 + t0 * d, p0 + t1 * d
    if camera.focal * np.linalg.norm(e - s) < MIN_SEGMENT_PIXELS:
        return None
    return np.array([*s, 1.0]), np.array([*e, 1.0])


def _noisy(rng: np.random.Generator, obs: Vector, sigma: float) -> Vector:
    if sigma <= 0.0:
        return obs
    out = obs.copy()
    out[:2] += rng.normal(0.0, sigma, 2)
    return out


def gen_observations(
    scene: SceneSpec,
    traj: TrajectorySpec,
    camera: PinholeCamera,
    conf: AppSettings = app_settings,
    seed: int = 0,
) -> MeasurementLog:
    """
    Observe the scene from every camera pose of the trajectory. A landmark
    is seen when it is in front of the camera, inside the image and within
    ``SIM_MAX_RANGE``; segments are clipped to the image. Gaussian pixel
    noise of ``SIM_PIXEL_NOISE`` pixels is added to points and segment
    endpoints.

    Returns:
        MeasurementLog: Observations and ground truth, without IMU rows
    """
    rng = np.random.default_rng(seed)
    sigma = conf.SIM_PIXEL_NOISE / camera.focal
    max_range = conf.SIM_MAX_RANGE
    log = MeasurementLog(imu=np.zeros((0, 7)), frames=[])
    log.gt_points = {k: v.copy() for k, v in scene.points.items()}
    log.gt_lines = {k: (s.copy(), e.copy()) for k, (s, e) in scene.lines.items()}

    for frame_id, t in enumerate(traj.camera_times()):
        t = float(t)
        state = traj.state(t)
        T_wc = state.pose.compose(camera.extrinsics)
        log.frames.append((t, frame_id))
        log.gt_states[frame_id] = state

        points: dict[int, Vector] = {}
        for point_id, x in scene.points.items():
            if np.linalg.norm(x - T_wc.p) > max_range:
                continue
            obs = project(T_wc, x)
            if obs is not None and camera.in_image(obs):
                points[point_id] = _noisy(rng, obs, sigma)
        lines: dict[int, Segment] = {}
        for line_id, segment in scene.lines.items():
            clipped = clip_segment(T_wc, segment, camera)
            if clipped is not None:
                s, e = clipped
                lines[line_id] = (_noisy(rng, s, sigma), _noisy(rng, e, sigma))
        log.points[frame_id] = points
        log.lines[frame_id] = lines

    mean_points, mean_lines = log.visible_counts()
    logger.debug(
        "Generated %d frames, %.1f points and %.1f lines per frame",
        len(log.frames),
        mean_points,
        mean_lines,
    )
    return log


def generate_log(
    scene: SceneSpec,
    conf: AppSettings = app_settings,
    seed: int = 0,
    camera: PinholeCamera | None = None,
) -> MeasurementLog:
    """
    Full measurement log for a scene. IMU and camera noise use independent
    streams spawned from ``seed``.
    """
    traj = TrajectorySpec.from_settings(conf)
    camera = camera or PinholeCamera.from_settings(conf)
    imu_seed, obs_seed = np.random.SeedSequence(seed).spawn(2)
    log = gen_observations(
        scene, traj, camera, conf, seed=int(obs_seed.generate_state(1)[0])
    )
    log.imu = gen_imu(traj, conf, seed=int(imu_seed.generate_state(1)[0]))
    return log

from __future__ import annotations

import ast
import inspect
import os
from functools import cached_property
from importlib import import_module
from typing import TYPE_CHECKING, Any, Iterator, Mapping, Union

from coplanar.core.exceptions import ImproperlyConfigured

if TYPE_CHECKING:  # pragma: no cover
    from coplanar.factors.builders import FactorBuilder
    from coplanar.factors.loss import RobustLoss

PathOrMapping = Union[str, "os.PathLike[str]", Mapping[str, Any]]


def parse_config(text: str, origin: str = "<config>") -> dict[str, Any]:
    """
    Parse a flat ``key = value`` configuration text. Blank lines and ``#``
    comments are ignored, values are read as Python literals and kept as
    plain strings when they are not one.

    Args:
        text (str): Configuration contents
        origin (str, optional): Name used in error messages.

    Raises:
        ImproperlyConfigured: If a line is not a ``key = value`` pair

    Returns:
        dict: Parsed values keyed by lowercase names
    """
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ImproperlyConfigured(
                f"{origin}:{lineno}: expected `key = value`, got `{raw.strip()}`."
            )
        try:
            values[key.lower()] = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            values[key.lower()] = value
    return values


def load_config(path: str | os.PathLike[str]) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ImproperlyConfigured(f"Unable to read config `{path}`: {e}")
    return parse_config(text, origin=str(path))


class Settings:
    """
    Settings source holding raw configuration values. Keys are case
    insensitive and can be read or assigned as attributes, so
    ``settings.WINDOW_SIZE = 5`` and ``window_size = 5`` in a config file
    refer to the same value.
    """

    def __init__(self, values: Mapping[str, Any] | None = None) -> None:
        object.__setattr__(self, "_values", {})
        if values:
            self.update(values)

    def configure(self, source: PathOrMapping | None = None, **overrides: Any) -> None:
        """
        Replace all values with the ones from a config file or mapping.
        Keyword ``overrides`` are applied last.
        """
        self._values.clear()
        if isinstance(source, (str, os.PathLike)):
            source = load_config(source)
        self.update(source or {})
        self.update(overrides)

    def update(self, values: Mapping[str, Any]) -> None:
        for key, value in values.items():
            self._values[key.lower()] = value

    def get(self, name: str, default: Any = None) -> Any:
        return self._values.get(name.lower(), default)

    def as_dict(self) -> dict[str, Any]:
        return dict(self._values)

    def __contains__(self, name: object) -> bool:
        return isinstance(name, str) and name.lower() in self._values

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __getattr__(self, name: str) -> Any:
        if name.startswith("_"):
            raise AttributeError(name)
        try:
            return self._values[name.lower()]
        except KeyError:
            raise AttributeError(name)

    def __setattr__(self, name: str, value: Any) -> None:
        self._values[name.lower()] = value

    def __delattr__(self, name: str) -> None:
        self._values.pop(name.lower(), None)


settings = Settings()


class AppSettings:
    """
    Typed, validated view over a settings source. Without an explicit
    ``source`` the process-wide :data:`settings` are used.
    """

    def __init__(self, source: Settings | Mapping[str, Any] | None = None) -> None:
        if source is not None and not isinstance(source, Settings):
            source = Settings(source)
        self._source = source

    # Sliding window

    @property
    def WINDOW_SIZE(self) -> int:
        """
        Maximum number of keyframes kept in the sliding window.
        """
        return self._int("WINDOW_SIZE", 10, minimum=2)

    @property
    def KEYFRAME_PARALLAX_PX(self) -> float:
        """
        Mean parallax (pixels) of tracked features above which a new frame
        becomes a keyframe.
        """
        return self._float("KEYFRAME_PARALLAX_PX", 10.0)

    @property
    def KEYFRAME_MIN_TRACKED(self) -> int:
        """
        A frame tracking fewer features than this becomes a keyframe.
        """
        return self._int("KEYFRAME_MIN_TRACKED", 50)

    @property
    def MIN_DEPTH(self) -> float:
        """
        Smallest valid point depth in meters.
        """
        return self._float("MIN_DEPTH", 0.05, strict=True)

    @property
    def MAX_DEPTH(self) -> float:
        """
        Largest valid point depth in meters.
        """
        value = self._float("MAX_DEPTH", 200.0, strict=True)
        if value <= self.MIN_DEPTH:
            self._error("Setting `MAX_DEPTH` must be larger than `MIN_DEPTH`.")
        return value

    @property
    def TRIANGULATION_MIN_PARALLAX_DEG(self) -> float:
        """
        Minimum angle between the first and last viewing rays of a point
        for it to be triangulated.
        """
        return self._float("TRIANGULATION_MIN_PARALLAX_DEG", 1.0)

    @property
    def TRIANGULATION_MIN_DIHEDRAL_DEG(self) -> float:
        """
        Minimum dihedral angle between the two back-projection planes of a
        line for it to be triangulated.
        """
        return self._float("TRIANGULATION_MIN_DIHEDRAL_DEG", 1.0)

    # Solver

    @property
    def LM_INITIAL_DAMPING(self) -> float:
        """
        Initial Levenberg-Marquardt damping.
        """
        return self._float("LM_INITIAL_DAMPING", 1e-4, strict=True)

    @property
    def LM_DAMPING_FACTOR(self) -> float:
        """
        Factor the damping is multiplied by on a rejected step and divided by
        on an accepted one.
        """
        value = self._float("LM_DAMPING_FACTOR", 10.0, strict=True)
        if value <= 1:
            self._error("Setting `LM_DAMPING_FACTOR` must be larger than 1.")
        return value

    @property
    def LM_MAX_ITERATIONS(self) -> int:
        """
        Maximum number of accepted or rejected LM iterations per window.
        """
        return self._int("LM_MAX_ITERATIONS", 10, minimum=1)

    @property
    def LM_RELATIVE_TOLERANCE(self) -> float:
        """
        Relative cost decrease under which the solver stops.
        """
        return self._float("LM_RELATIVE_TOLERANCE", 1e-6)

    @property
    def LM_STEP_TOLERANCE(self) -> float:
        """
        Step norm under which the solver stops.
        """
        return self._float("LM_STEP_TOLERANCE", 1e-8)

    @property
    def LM_MAX_REJECTIONS(self) -> int:
        """
        Consecutive rejected steps after which the window is rolled back and
        ``SolverDiverged`` is raised.
        """
        return self._int("LM_MAX_REJECTIONS", 5, minimum=1)

    @property
    def MAX_DIVERGED_WINDOWS(self) -> int:
        """
        Consecutive diverged windows tolerated by a pipeline run before the
        divergence is reported as an error.
        """
        return self._int("MAX_DIVERGED_WINDOWS", 3, minimum=1)

    @property
    def MARGINALIZATION_EPS(self) -> float:
        """
        Eigenvalues below this are treated as zero when inverting the
        marginalized block.
        """
        return self._float("MARGINALIZATION_EPS", 1e-8, strict=True)

    # Noise models

    @property
    def PIXEL_SIGMA(self) -> float:
        """
        Standard deviation of point and endpoint observations in pixels.
        """
        return self._float("PIXEL_SIGMA", 1.0, strict=True)

    @property
    def FOCAL_LENGTH(self) -> float:
        """
        Pinhole focal length in pixels, used to convert pixel quantities to
        the normalized image plane.
        """
        return self._float("FOCAL_LENGTH", 460.0, strict=True)

    @property
    def PLANE_DISTANCE_SIGMA(self) -> float:
        """
        Standard deviation of point and line distances to their plane (m).
        """
        return self._float("PLANE_DISTANCE_SIGMA", 0.01, strict=True)

    @property
    def PLANE_ANGLE_SIGMA_DEG(self) -> float:
        """
        Standard deviation of the angle between a line and its plane (deg).
        """
        return self._float("PLANE_ANGLE_SIGMA_DEG", 1.0, strict=True)

    @property
    def GYRO_NOISE_DENSITY(self) -> float:
        """
        Gyroscope white noise density, rad/s/sqrt(Hz).
        """
        return self._float("GYRO_NOISE_DENSITY", 1.7e-4, strict=True)

    @property
    def ACCEL_NOISE_DENSITY(self) -> float:
        """
        Accelerometer white noise density, m/s^2/sqrt(Hz).
        """
        return self._float("ACCEL_NOISE_DENSITY", 2e-3, strict=True)

    @property
    def GYRO_BIAS_WALK(self) -> float:
        """
        Gyroscope bias random walk, rad/s^2/sqrt(Hz).
        """
        return self._float("GYRO_BIAS_WALK", 1e-5, strict=True)

    @property
    def ACCEL_BIAS_WALK(self) -> float:
        """
        Accelerometer bias random walk, m/s^3/sqrt(Hz).
        """
        return self._float("ACCEL_BIAS_WALK", 1e-4, strict=True)

    @property
    def GRAVITY(self) -> float:
        """
        Gravity magnitude, pointing along world -z.
        """
        return self._float("GRAVITY", 9.81, strict=True)

    @property
    def PRIOR_POSITION_SIGMA(self) -> float:
        """
        Standard deviation of the gauge prior on the first keyframe position.
        """
        return self._float("PRIOR_POSITION_SIGMA", 1e-3, strict=True)

    @property
    def PRIOR_YAW_SIGMA(self) -> float:
        """
        Standard deviation (rad) of the gauge prior on the first keyframe yaw.
        """
        return self._float("PRIOR_YAW_SIGMA", 1e-3, strict=True)

    @property
    def PRIOR_TILT_SIGMA(self) -> float:
        """
        Standard deviation (rad) of the weak prior on roll and pitch of the
        first keyframe.
        """
        return self._float("PRIOR_TILT_SIGMA", 0.1, strict=True)

    @property
    def PRIOR_VELOCITY_SIGMA(self) -> float:
        """
        Standard deviation of the weak prior on the first keyframe velocity.
        """
        return self._float("PRIOR_VELOCITY_SIGMA", 0.1, strict=True)

    @property
    def PRIOR_ACCEL_BIAS_SIGMA(self) -> float:
        """
        Standard deviation of the weak prior on the initial accelerometer bias.
        """
        return self._float("PRIOR_ACCEL_BIAS_SIGMA", 0.1, strict=True)

    @property
    def PRIOR_GYRO_BIAS_SIGMA(self) -> float:
        """
        Standard deviation of the weak prior on the initial gyroscope bias.
        """
        return self._float("PRIOR_GYRO_BIAS_SIGMA", 0.01, strict=True)

    @property
    def ROBUST_LOSS_SCALE(self) -> float:
        """
        Scale of the robust loss in whitened units.
        """
        return self._float("ROBUST_LOSS_SCALE", 1.0, strict=True)

    @cached_property
    def ROBUST_LOSS(self) -> type[RobustLoss]:
        """
        A dotted path to the robust loss applied to visual and co-planarity
        factors. Must extend ``coplanar.factors.loss.RobustLoss``.
        """
        from coplanar.factors.loss import RobustLoss

        default = "coplanar.factors.loss.CauchyLoss"
        value = self._setting("ROBUST_LOSS", default)
        loss: type[RobustLoss] = self._class(value)

        if not issubclass(loss, RobustLoss):
            self._error(f"Loss `{loss}` must subclass `{RobustLoss}`.")
        return loss

    @cached_property
    def FACTOR_BUILDERS(self) -> list[type[FactorBuilder]]:
        """
        A list of strings formated as ``path.to.CustomBuilder``.
        Builders must extend ``coplanar.factors.builders.FactorBuilder`` class
        and define a unique ``identifier`` attribute.
        """
        from coplanar.factors.builders import FactorBuilder

        default = [
            "coplanar.factors.builders.ImuFactorBuilder",
            "coplanar.factors.builders.PointFactorBuilder",
            "coplanar.factors.builders.LineFactorBuilder",
            "coplanar.factors.builders.CoplanarFactorBuilder",
        ]
        factor_builders = self._setting("FACTOR_BUILDERS", default)
        ret, identifiers = [], []

        for value in factor_builders:
            builder: type[FactorBuilder] = self._class(value)
            identifier = getattr(builder, "identifier", None)

            if not issubclass(builder, FactorBuilder):
                self._error(f"Builder `{builder}` must subclass `{FactorBuilder}`.")

            if not identifier:
                self._error(f"Builder `{builder}` must define a unique `identifier`.")

            if identifier in identifiers:
                self._error(f"Builder `{identifier}` appears more than once.")

            identifiers.append(identifier)
            ret.append(builder)
        return ret

    # Plane lifecycle

    @property
    def PLANE_CULL_THRESHOLD(self) -> int:
        """
        Planes supported by fewer associated landmarks than this are culled.
        Retired landmarks that keep their association count as support.
        """
        return self._int("PLANE_CULL_THRESHOLD", 30)

    @property
    def PLANE_ASSOCIATION_DISTANCE(self) -> float:
        """
        Distance (m) under which a landmark is associated to a plane.
        """
        return self._float("PLANE_ASSOCIATION_DISTANCE", 0.03, strict=True)

    @property
    def PLANE_ASSOCIATION_ANGLE_DEG(self) -> float:
        """
        Maximum angle between a line and a plane for the line to be
        associated to it.
        """
        return self._float("PLANE_ASSOCIATION_ANGLE_DEG", 5.0, strict=True)

    @property
    def PLANE_DEASSOCIATION_DISTANCE(self) -> float:
        """
        Post-optimization distance (m) above which a landmark stops being
        constrained by its plane.
        """
        return self._float("PLANE_DEASSOCIATION_DISTANCE", 0.03, strict=True)

    # Plane detection

    @property
    def HEIGHT_BIN(self) -> float:
        """
        Bin width (m) of the horizontal plane height histogram.
        """
        return self._float("HEIGHT_BIN", 0.05, strict=True)

    @property
    def HEIGHT_RANGE(self) -> float:
        """
        Heights outside ``[-HEIGHT_RANGE, HEIGHT_RANGE]`` are discarded.
        """
        return self._float("HEIGHT_RANGE", 10.0, strict=True)

    @property
    def AZIMUTH_BIN_DEG(self) -> float:
        """
        Azimuth bin size of the vertical plane histogram.
        """
        value = self._float("AZIMUTH_BIN_DEG", 3.0, strict=True)
        if (360.0 / value) % 1 > 1e-9:
            self._error("Setting `AZIMUTH_BIN_DEG` must divide 360.")
        return value

    @property
    def DISTANCE_BIN(self) -> float:
        """
        Distance bin size (m) of the vertical plane histogram.
        """
        return self._float("DISTANCE_BIN", 0.1, strict=True)

    @property
    def DISTANCE_RANGE(self) -> float:
        """
        Distances outside ``[0, DISTANCE_RANGE]`` are discarded.
        """
        return self._float("DISTANCE_RANGE", 20.0, strict=True)

    @property
    def HISTOGRAM_SIGMA_BINS(self) -> float:
        """
        Gaussian smoothing sigma of the detection histograms, in bins.
        """
        return self._float("HISTOGRAM_SIGMA_BINS", 1.0, strict=True)

    @property
    def HISTOGRAM_TRUNCATE(self) -> float:
        """
        Smoothing kernel half width in sigmas.
        """
        return self._float("HISTOGRAM_TRUNCATE", 3.0, strict=True)

    @property
    def PLANE_SCORE_THRESHOLD(self) -> float:
        """
        Smoothed histogram score a peak needs to become a plane.
        """
        return self._float("PLANE_SCORE_THRESHOLD", 20.0, strict=True)

    @property
    def LINE_VOTE_WEIGHT(self) -> float:
        """
        Weight of each line endpoint sample in the detection histograms.
        Patch vertices vote with weight 1.
        """
        return self._float("LINE_VOTE_WEIGHT", 2.0, strict=True)

    @property
    def GRAVITY_GATE_DEG(self) -> float:
        """
        Tolerance used to classify patch normals and line directions as
        parallel or perpendicular to gravity.
        """
        return self._float("GRAVITY_GATE_DEG", 5.0, strict=True)

    @property
    def DEDUP_ANGLE_DEG(self) -> float:
        """
        Normal angle under which a detected plane duplicates an existing one.
        """
        return self._float("DEDUP_ANGLE_DEG", 5.0, strict=True)

    @property
    def DEDUP_DISTANCE(self) -> float:
        """
        Distance difference (m) under which a detected plane duplicates an
        existing one.
        """
        return self._float("DEDUP_DISTANCE", 0.05, strict=True)

    @property
    def MERGE_ANGLE_DEG(self) -> float:
        """
        Direction angle under which two lines may be merged for voting.
        """
        return self._float("MERGE_ANGLE_DEG", 5.0, strict=True)

    @property
    def MERGE_DISTANCE(self) -> float:
        """
        Endpoint-to-line distance (m) under which two lines may be merged.
        """
        return self._float("MERGE_DISTANCE", 0.05, strict=True)

    # Meshing

    @property
    def MESH_MIN_NEIGHBORS(self) -> int:
        """
        Number of adjacent patches with a similar normal a patch needs to be
        kept.
        """
        return self._int("MESH_MIN_NEIGHBORS", 3)

    @property
    def MESH_NORMAL_ANGLE_DEG(self) -> float:
        """
        Angle under which two adjacent patch normals count as similar.
        """
        return self._float("MESH_NORMAL_ANGLE_DEG", 5.0, strict=True)

    @property
    def MESH_COPLANAR_DISTANCE(self) -> float:
        """
        Distance (m) within which the corners of two adjacent patches must
        lie from each other's plane for them to count as similar.
        """
        return self._float("MESH_COPLANAR_DISTANCE", 0.08, strict=True)

    @property
    def MESH_MAX_ASPECT_RATIO(self) -> float:
        """
        Patches with a longest-edge to shortest-altitude ratio above this
        are removed.
        """
        return self._float("MESH_MAX_ASPECT_RATIO", 20.0, strict=True)

    @property
    def MESH_MIN_ANGLE_DEG(self) -> float:
        """
        Patches with an inner angle below this are removed.
        """
        return self._float("MESH_MIN_ANGLE_DEG", 5.0)

    @property
    def MESH_MIN_AREA(self) -> float:
        """
        Patches with an area (m^2) below this are treated as degenerate.
        """
        return self._float("MESH_MIN_AREA", 1e-10)

    # Simulation

    @property
    def ROOM_SIZE(self) -> float:
        """
        Side length (m) of the square synthetic room centered at the origin.
        """
        return self._float("ROOM_SIZE", 8.0, strict=True)

    @property
    def WALL_HEIGHT(self) -> float:
        """
        Height (m) of the synthetic room walls.
        """
        return self._float("WALL_HEIGHT", 3.0, strict=True)

    @property
    def POINTS_PER_WALL(self) -> int:
        """
        Point landmarks scattered on each wall.
        """
        return self._int("POINTS_PER_WALL", 20)

    @property
    def FLOOR_POINTS(self) -> int:
        """
        Point landmarks scattered on the floor.
        """
        return self._int("FLOOR_POINTS", 32)

    @property
    def LINES_PER_WALL(self) -> int:
        """
        Line segments per wall, split between vertical, horizontal and
        diagonal ones.
        """
        return self._int("LINES_PER_WALL", 9)

    @property
    def TRAJECTORY_RADIUS(self) -> float:
        """
        Radius (m) of the horizontal loop followed by the camera.
        """
        return self._float("TRAJECTORY_RADIUS", 1.5, strict=True)

    @property
    def TRAJECTORY_HEIGHT(self) -> float:
        """
        Mean height (m) of the camera trajectory.
        """
        return self._float("TRAJECTORY_HEIGHT", 1.5, strict=True)

    @property
    def TRAJECTORY_VERTICAL_AMPLITUDE(self) -> float:
        """
        Amplitude (m) of the vertical oscillation of the trajectory.
        """
        return self._float("TRAJECTORY_VERTICAL_AMPLITUDE", 0.3)

    @property
    def TRAJECTORY_PERIOD(self) -> float:
        """
        Duration (s) of one loop around the room.
        """
        return self._float("TRAJECTORY_PERIOD", 20.0, strict=True)

    @property
    def DURATION(self) -> float:
        """
        Length (s) of the simulated sequence.
        """
        return self._float("DURATION", 20.0, strict=True)

    @property
    def CAMERA_RATE(self) -> float:
        """
        Camera frame rate (Hz).
        """
        return self._float("CAMERA_RATE", 20.0, strict=True)

    @property
    def IMU_RATE(self) -> float:
        """
        IMU sample rate (Hz). Must be a multiple of ``CAMERA_RATE``.
        """
        value = self._float("IMU_RATE", 200.0, strict=True)
        if abs(value / self.CAMERA_RATE - round(value / self.CAMERA_RATE)) > 1e-9:
            self._error("Setting `IMU_RATE` must be a multiple of `CAMERA_RATE`.")
        return value

    @property
    def IMAGE_WIDTH(self) -> int:
        """
        Image width in pixels.
        """
        return self._int("IMAGE_WIDTH", 640, minimum=1)

    @property
    def IMAGE_HEIGHT(self) -> int:
        """
        Image height in pixels.
        """
        return self._int("IMAGE_HEIGHT", 480, minimum=1)

    @property
    def SIM_PIXEL_NOISE(self) -> float:
        """
        Standard deviation (px) of the noise added to simulated observations.
        """
        return self._float("SIM_PIXEL_NOISE", 1.0)

    @property
    def SIM_IMU_NOISE(self) -> bool:
        """
        Set to ``False`` to generate noise-free and bias-free IMU samples.
        """
        value: bool = bool(self._setting("SIM_IMU_NOISE", True))
        return value

    @property
    def SIM_MAX_RANGE(self) -> float:
        """
        Landmarks further away than this (m) are not observed.
        """
        return self._float("SIM_MAX_RANGE", 12.0, strict=True)

    # Evaluation

    @property
    def ASSOCIATION_TOLERANCE(self) -> float:
        """
        Maximum timestamp difference (s) when associating two trajectories.
        """
        return self._float("ASSOCIATION_TOLERANCE", 0.005, strict=True)

    @property
    def RPE_DELTA(self) -> float:
        """
        Time interval (s) of relative pose errors.
        """
        return self._float("RPE_DELTA", 1.0, strict=True)

    @property
    def MESH_SAMPLE_DENSITY(self) -> float:
        """
        Points sampled per square meter of mesh when evaluating it.
        """
        return self._float("MESH_SAMPLE_DENSITY", 1000.0, strict=True)

    @property
    def GT_CLOUD_SPACING(self) -> float:
        """
        Grid spacing (m) of the ground truth surface cloud of the room.
        """
        return self._float("GT_CLOUD_SPACING", 0.02, strict=True)

    def check(self) -> None:
        """
        Read every setting once so that invalid values fail early.

        Raises:
            ImproperlyConfigured: On the first invalid setting
        """
        for name in self.names():
            getattr(self, name)

    @classmethod
    def names(cls) -> list[str]:
        return sorted(name for name in dir(cls) if name.isupper())

    def unknown(self) -> list[str]:
        """
        Keys of the source that match no setting, usually typos.
        """
        source = settings if self._source is None else self._source
        known = {name.lower() for name in self.names()}
        return sorted(key for key in source if key not in known)

    def reset(self) -> None:
        """
        Drop all cached values so they are read from the source again.
        """
        for name in ("ROBUST_LOSS", "FACTOR_BUILDERS"):
            self.__dict__.pop(name, None)

    def _setting(self, name: str, default: Any = None) -> Any:
        source = settings if self._source is None else self._source
        return source.get(name, default)

    def _error(self, message: str | Exception) -> None:
        raise ImproperlyConfigured(message)

    def _float(
        self,
        name: str,
        default: float,
        strict: bool = False,
    ) -> float:
        value = self._setting(name, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self._error(f"Setting `{name}` must be a number, got `{value!r}`.")
        if value < 0 or (strict and value == 0):
            bound = "positive" if strict else "non-negative"
            self._error(f"Setting `{name}` must be {bound}, got `{value!r}`.")
        return float(value)

    def _int(self, name: str, default: int, minimum: int = 0) -> int:
        value = self._setting(name, default)
        if isinstance(value, bool) or not isinstance(value, int):
            self._error(f"Setting `{name}` must be an integer, got `{value!r}`.")
        if value < minimum:
            self._error(f"Setting `{name}` must be at least {minimum}, got {value}.")
        return int(value)

    def _class(self, path: str) -> Any:
        value = self._import(path)
        if not inspect.isclass(value):
            self._error(f"Specified `{value}` is not a class.")
        return value

    def _import(self, path: str) -> Any:
        try:
            module_path, name = str(path).rsplit(".", 1)
        except ValueError:
            self._error(f"`{path}` doesn't look like a dotted path.")
        try:
            return getattr(import_module(module_path), name)
        except (ImportError, AttributeError) as e:
            self._error(ImportError(f"Unable to import `{path}`: {e}"))


app_settings = AppSettings()

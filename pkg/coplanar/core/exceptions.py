class CoplanarError(Exception):
    """
    Base error for all exceptions raised by this package.
    """


class ImproperlyConfigured(CoplanarError):
    """
    Settings are missing, malformed or inconsistent.
    """


class LogFormatError(CoplanarError):
    """
    A measurement log directory or trajectory file could not be parsed.
    """


class GeometryError(CoplanarError):
    """
    Base error for degenerate geometric configurations.
    """


class DegenerateLine(GeometryError):
    """
    Plücker coordinates do not describe a line (zero direction).
    """


class UnstableEndpoint(GeometryError):
    """
    Viewing ray is nearly parallel to the line, endpoint is ill-defined.
    """


class DegenerateProjection(GeometryError):
    """
    Projected image line has no image part (n1² + n2² ≈ 0).
    """


class FactorError(CoplanarError):
    """
    Base error for residual evaluation failures.
    """


class BehindCamera(FactorError):
    """
    Landmark projects behind the observing camera.
    """


class TriangulationError(CoplanarError):
    """
    Base error for landmark initialization failures.
    """


class InsufficientParallax(TriangulationError):
    """
    Observations lack the baseline needed to recover depth.
    """


class DegenerateConfiguration(TriangulationError):
    """
    Back-projection planes of a line are (nearly) parallel.
    """


class SolverDiverged(CoplanarError):
    """
    Levenberg-Marquardt failed to decrease the cost, state was rolled back.
    """


class MeshError(CoplanarError):
    """
    Base error for mesh generation.
    """


class DegenerateInput(MeshError):
    """
    Triangulation input is collinear or has fewer than three vertices.
    """


class EvaluationError(CoplanarError):
    """
    Base error for metric computation.
    """


class EmptyOverlap(EvaluationError):
    """
    No timestamps could be associated between two trajectories.
    """


class NonMonotonicTimestamps(EvaluationError):
    """
    Trajectory timestamps are not strictly increasing.
    """


class NoMatches(EvaluationError):
    """
    No landmark ids are shared between estimate and ground truth.
    """


class EmptyMesh(EvaluationError):
    """
    Mesh has no patches to sample.
    """

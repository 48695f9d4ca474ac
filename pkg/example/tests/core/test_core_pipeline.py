import pytest

from coplanar.core.exceptions import (
    BehindCamera,
    CoplanarError,
    DegenerateLine,
    EmptyOverlap,
    EvaluationError,
    FactorError,
    GeometryError,
    ImproperlyConfigured,
    InsufficientParallax,
    SolverDiverged,
    TriangulationError,
)
from coplanar.core.pipeline import Pipeline


def test_pipeline_switches():
    assert Pipeline.names() == ["P", "PP", "PL", "PLP"]
    assert not Pipeline.P.uses_lines and not Pipeline.P.uses_planes
    assert Pipeline.PP.uses_planes and not Pipeline.PP.uses_lines
    assert Pipeline.PL.uses_lines and not Pipeline.PL.uses_planes
    assert Pipeline.PLP.uses_lines and Pipeline.PLP.uses_planes
    assert Pipeline("PLP") is Pipeline.PLP
    assert str(Pipeline.PP) == "PP"
    with pytest.raises(ValueError):
        Pipeline("LP")


def test_exception_hierarchy():
    assert issubclass(DegenerateLine, GeometryError)
    assert issubclass(BehindCamera, FactorError)
    assert issubclass(InsufficientParallax, TriangulationError)
    assert issubclass(EmptyOverlap, EvaluationError)
    for exc in (ImproperlyConfigured, SolverDiverged, GeometryError):
        assert issubclass(exc, CoplanarError)

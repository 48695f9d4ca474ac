from __future__ import annotations

from typing import Protocol, Tuple, TypeVar, runtime_checkable

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]

# Pair of normalized-plane or world endpoints of a line segment.
Segment = Tuple[Vector, Vector]

# Mesh vertices reference landmarks as ("point", id), ("line_start", id) or
# ("line_end", id) for the start/end sample of a line segment.
LandmarkRef = Tuple[str, int]

T = TypeVar("T", bound="ParameterBlock")


@runtime_checkable
class ParameterBlock(Protocol):
    """
    Protocol all optimizable states implement (IMU states, inverse depths,
    lines and planes). ``dim`` is the size of the minimal chart.
    """

    dim: int

    def retract(self: T, delta: Vector) -> T:
        """
        Apply a minimal-chart increment and return the updated value.

        Args:
            delta (Vector): Increment of size ``dim``

        Returns:
            ParameterBlock: Updated value, the original is left untouched
        """

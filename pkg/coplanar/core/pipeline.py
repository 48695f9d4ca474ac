from __future__ import annotations

from enum import Enum


class Pipeline(str, Enum):
    """
    Estimator variants. ``P`` uses points only, ``PP`` adds planes, ``PL``
    adds lines and ``PLP`` uses points, lines and planes.
    """

    P = "P"
    PP = "PP"
    PL = "PL"
    PLP = "PLP"

    @classmethod
    def get_line_pipelines(cls) -> list[Pipeline]:
        """
        Returns pipelines that estimate line landmarks.
        """
        return [cls.PL, cls.PLP]

    @classmethod
    def get_plane_pipelines(cls) -> list[Pipeline]:
        """
        Returns pipelines that detect planes and use co-planarity factors.
        """
        return [cls.PP, cls.PLP]

    @classmethod
    def names(cls) -> list[str]:
        return [p.value for p in cls]

    @property
    def uses_lines(self) -> bool:
        return self in self.get_line_pipelines()

    @property
    def uses_planes(self) -> bool:
        return self in self.get_plane_pipelines()

    def __str__(self) -> str:
        return self.value

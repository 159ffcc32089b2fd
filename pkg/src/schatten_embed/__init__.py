"""Schatten-3 planes embedded in L_3, with the supporting trace-derivative,
positivity and even-p moment machinery."""

from .embed_l3 import CircleMeasure, StepFunctionPair, circle_measure, embed_plane, hanner_check, verify_isometry
from .errors import SchattenError
from .matrix_core import dilate, eigh, schatten_norm

__all__ = [
    "CircleMeasure",
    "SchattenError",
    "StepFunctionPair",
    "circle_measure",
    "dilate",
    "eigh",
    "embed_plane",
    "hanner_check",
    "schatten_norm",
    "verify_isometry",
]
__version__ = "0.1.0"

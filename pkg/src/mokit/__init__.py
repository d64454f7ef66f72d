"""mokit: motion quality metrics, curation, flow-matching kernel, and
benchmark aggregation for 3D human motion."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .motion import (
    Frame,
    MotionError,
    MotionSequence,
    Skeleton,
    default_skeleton,
    rest_motion,
)

__version__ = "0.1.0"

__all__ = [
    "Frame",
    "KERNEL_BACKEND",
    "MotionError",
    "MotionSequence",
    "Skeleton",
    "default_skeleton",
    "rest_motion",
    "__version__",
]

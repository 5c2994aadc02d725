"""Guiding-center dynamics as motion on a slow manifold in loop space."""

from .fields import (
    FieldModel,
    FrameData,
    LinearGradBField,
    ScrewPinchField,
    SingularFieldError,
    UniformField,
    frame,
    make_model,
)
from .fastslow import FastState, SlowState, decompose, fast_norm, reconstruct, rhs_split
from .loopspace import (
    PhaseLoop,
    StepFailureError,
    loop_action,
    loop_energy,
    loop_rhs,
    phase_shift,
    step_implicit_midpoint,
    step_rk4_loop,
)
from .slow_manifold import ShapeOrder, build_loop, invariance_residual, y0_star, y1_star

__version__ = "0.1.0"

__all__ = [
    "FieldModel",
    "FrameData",
    "LinearGradBField",
    "ScrewPinchField",
    "SingularFieldError",
    "UniformField",
    "frame",
    "make_model",
    "FastState",
    "SlowState",
    "decompose",
    "fast_norm",
    "reconstruct",
    "rhs_split",
    "PhaseLoop",
    "StepFailureError",
    "loop_action",
    "loop_energy",
    "loop_rhs",
    "phase_shift",
    "step_implicit_midpoint",
    "step_rk4_loop",
    "ShapeOrder",
    "build_loop",
    "invariance_residual",
    "y0_star",
    "y1_star",
    "__version__",
]

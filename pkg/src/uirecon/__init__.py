"""Screenshot-to-UI reconstruction: scaffold IR, grounding, sprite extraction, UXML/USS synthesis."""

from .calibration import CalibrationParams, calibrate, iou
from .diagnostics import Diagnostic, UIReconError
from .evaluation import evaluate, load_ground_truth, match_elements, measure_serialization_efficiency
from .graph import SceneGraph, assign_z_order, build_graph, isomorphic
from .schema import BBox, Label, Scaffold, UIElement, parse_scaffold, serialize_scaffold, validate
from .synthesis import compile, parse_uxml  # noqa: A004

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "CalibrationParams",
    "Diagnostic",
    "Label",
    "Scaffold",
    "SceneGraph",
    "UIElement",
    "UIReconError",
    "assign_z_order",
    "build_graph",
    "calibrate",
    "compile",
    "evaluate",
    "iou",
    "isomorphic",
    "load_ground_truth",
    "match_elements",
    "measure_serialization_efficiency",
    "parse_scaffold",
    "parse_uxml",
    "serialize_scaffold",
    "validate",
]

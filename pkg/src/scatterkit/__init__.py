"""Single-wall diffuse scattering: ray tracing, PDP processing, parameter fitting and ER-BK distillation."""

__version__ = "0.1.0"

from .errors import (AlignmentError, CalibrationError, ConvergenceError, EmptyProfileError, GeometryError,
                     InputError, InvalidSceneError, ParameterError, ParseError, SchemaError, ScatterkitError,
                     SimulationError, SpanError)
from .geometry import Antenna, Point3, Scene, ScatterAngles, Station, SurfacePatch, Wall, place, tessellate
from .scattering import MaterialParams
from .pdp import AngularDataset, FrequencyResponse, Pdp, back_to_back_calibrate, load_measured, threshold_window
from .raytracer import angular_spectra, rmse_spectra, simulate, simulate_metal_plate
from .fitting import FitConfig, FitResult, evaluate_generalization, grid_search_fit, objective, smape_l
from .hybrid import HybridEntry, hybrid_distill
from .presets import MATERIALS, arc_scene, generalization_scene

__all__ = [
    "AlignmentError", "CalibrationError", "ConvergenceError", "EmptyProfileError", "GeometryError", "InputError",
    "InvalidSceneError", "ParameterError", "ParseError", "SchemaError", "ScatterkitError", "SimulationError",
    "SpanError", "Antenna", "Point3", "Scene", "ScatterAngles", "Station", "SurfacePatch", "Wall", "place",
    "tessellate", "MaterialParams", "AngularDataset", "FrequencyResponse", "Pdp", "back_to_back_calibrate",
    "load_measured", "threshold_window", "angular_spectra", "rmse_spectra", "simulate", "simulate_metal_plate",
    "FitConfig", "FitResult", "evaluate_generalization", "grid_search_fit", "objective", "smape_l",
    "HybridEntry", "hybrid_distill", "MATERIALS", "arc_scene", "generalization_scene",
]

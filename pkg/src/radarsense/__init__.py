"""Detection-level automotive radar simulation and eFAST sensitivity analysis."""

from .clustering import ClusterResult, EvalSummary, evaluate_run, kmeans, match_and_distance
from .errors import (
    ConfigError,
    DegenerateVarianceError,
    EvaluationError,
    ExperimentError,
    ParseError,
    ValidationError,
)
from .fast import ParameterSpec, SampleMatrix, SensitivityResult, analyze, efast_samples, search_curve
from .pipeline import ExperimentConfig, build_reference, export_plot_data, load_config, run_experiment
from .radar import (
    Detection,
    DetectionSet,
    RadarConstants,
    RadarParams,
    antenna_gain_db,
    detection_probability,
    generate_detections,
    noise_power,
    rcs_dbsm,
    received_power,
    snr,
)
from .raycast import Ray, RayHit, aspect_angle, cast_fan, ray_rect_intersect
from .scenario import Frame, Pose2D, Scenario, VehicleShape, generate_figure_eight, load_trajectory

__version__ = "0.1.0"

"""Multi-hop relay route planning and evaluation on random satellite shells."""

from .channel import ChannelParams, FadingSample
from .config import ConfigError, ExperimentConfig, from_mapping, load_config, parse_config_text
from .experiments import (
    REFERENCE_CONSTELLATIONS,
    REFERENCE_RESULTS,
    ExperimentResult,
    constellation_overrides,
    run_analyze,
    run_compare,
    run_optimize,
    run_simulate,
    run_sweep,
    run_table2,
)
from .metrics import MetricsReport, RouteSpec, direct_hop_report, metrics_report
from .planner import (
    HopSearchOutcome,
    IdealSolution,
    InfeasibleError,
    RoutePlan,
    UnroutableTopologyError,
    algorithm1,
    algorithm2,
    hop_bounds,
    method2_hop_search,
    solve_ideal,
)
from .simulate import EmpiricalReport, SimulationConfig, Strategy, plan_benchmark, run
from .sphere import (
    CentralAngleLaw,
    ConstellationGeometry,
    NumericsError,
    SphericalPoint,
    Topology,
    central_angle,
    chord_distance,
    sample_topology,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ChannelParams",
    "FadingSample",
    "ConfigError",
    "ExperimentConfig",
    "from_mapping",
    "load_config",
    "parse_config_text",
    "REFERENCE_CONSTELLATIONS",
    "REFERENCE_RESULTS",
    "ExperimentResult",
    "constellation_overrides",
    "run_analyze",
    "run_compare",
    "run_optimize",
    "run_simulate",
    "run_sweep",
    "run_table2",
    "MetricsReport",
    "RouteSpec",
    "direct_hop_report",
    "metrics_report",
    "HopSearchOutcome",
    "IdealSolution",
    "InfeasibleError",
    "RoutePlan",
    "UnroutableTopologyError",
    "algorithm1",
    "algorithm2",
    "hop_bounds",
    "method2_hop_search",
    "solve_ideal",
    "EmpiricalReport",
    "SimulationConfig",
    "Strategy",
    "plan_benchmark",
    "run",
    "CentralAngleLaw",
    "ConstellationGeometry",
    "NumericsError",
    "SphericalPoint",
    "Topology",
    "central_angle",
    "chord_distance",
    "sample_topology",
]

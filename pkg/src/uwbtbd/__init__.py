"""Multi-sensor track-before-detect for UWB radar sensor networks.

Scan-level range profiles are cleaned of static clutter, turned into fused
score maps by multilateration voting, stacked into sliding 3D volumes,
cleaned by region growing and morphological opening, reduced to scored
points, and linked into trajectories through tracklets.
"""
from .evaluation import match_and_score, monte_carlo, ospa
from .pipeline import Pipeline, run
from .scenario import (PipelineParams, ScenarioSpec, bundled_scenarios, load_scenario, load_scenario_file,
                       with_cell_size)
from .synth import EchoModel

__all__ = [
    "EchoModel", "Pipeline", "PipelineParams", "ScenarioSpec", "bundled_scenarios", "load_scenario",
    "load_scenario_file", "match_and_score", "monte_carlo", "ospa", "run", "with_cell_size",
]

"""Configuration, scenario orchestration, reports and verification suites."""
from .config import ScenarioConfig, apply_overrides, expand_sweep, from_dict, load
from .report import AnalysisReport, analyze, format_report, select_root
from .scenarios import RunRecord, SimulationResult, run_analyze, run_average, run_simulate
from .verify import run_verify

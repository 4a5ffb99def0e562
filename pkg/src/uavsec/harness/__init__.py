from .config import ConfigError, Scenario, load_config
from .output import emit_results
from .pipeline import SCHEMES, SchemeResult, run_benchmarks, run_mobility, run_pipeline, run_proposed

__all__ = ["ConfigError", "SCHEMES", "Scenario", "SchemeResult", "emit_results", "load_config",
           "run_benchmarks", "run_mobility", "run_pipeline", "run_proposed"]

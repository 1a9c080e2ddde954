from .basic import baseband_freqs, gen_finite_scatterer, gen_iid_gaussian, gen_keyhole
from .ensemble import EnsembleResult, RunPlan, run_ensemble
from .gscm import ConfigError, GscmConfig, gen_gscm

__all__ = [
    "ConfigError",
    "EnsembleResult",
    "GscmConfig",
    "RunPlan",
    "baseband_freqs",
    "gen_finite_scatterer",
    "gen_gscm",
    "gen_iid_gaussian",
    "gen_keyhole",
    "run_ensemble",
]

"""N-sweeps, lemma verifiers and the oracle suite."""
from .lemmas import LEMMAS, LemmaCheck
from .oracle_suite import OracleResult, oracle_suite
from .scenarios import STANDARD_SCENARIO, SWEEP_SCENARIO, instantiate, scenario
from .sweep import SweepReport, n_sweep

__all__ = [
    "LEMMAS",
    "LemmaCheck",
    "OracleResult",
    "oracle_suite",
    "STANDARD_SCENARIO",
    "SWEEP_SCENARIO",
    "instantiate",
    "scenario",
    "SweepReport",
    "n_sweep",
]

"""flexhammer: resonance-exploiting hammering through a series-elastic tool.

Hammer dynamics and energy analysis, a four-channel bilateral
teleoperation loop with communication delay, swept-sine impedance
identification, strike metrics, and the nonparametric statistics used to
evaluate virtual hammering experiments.
"""

from .dynamics import (FrequencyResponse, HammerParams, NoResonanceError,
                       energy_decomposition, flexible_hammer, optimal_timing,
                       resonance_frequency, rigid_hammer, simulate_hammer,
                       velocity_frequency_response)
from .excitation import (OperatorModel, StrikeProfile, TrackingOperator,
                         ensemble, sine_sweep, strike_profile, tracking_force)
from .experiment import (ConditionSpec, ExperimentConfig, OperatorSettings,
                         RunManifest, load_config, run_experiment)
from .identification import (ImpedanceCurve, LowCoherenceError, ZeModel,
                             estimate_response, resonance_prominence,
                             simulate_ze, ze_response)
from .stats import (TestResult, friedman, mad_sigma, median_difference_ci,
                    minimum_effect_size, wilcoxon_signed_rank)
from .teleop import (ControllerGains, DeviceParams, PiGain,
                     SimulationDiverged, controller_preset,
                     preset_for_condition, simulate_teleop,
                     transmitted_impedance)
from .trace import Trace
from .trials import (ConditionSummary, StrikeMetrics, UnextractableStrike,
                     metrics_from_csv, metrics_to_csv, segment_strikes,
                     strike_metrics, summarize_condition)

__version__ = "0.1.0"

__all__ = [
    "ConditionSpec", "ConditionSummary", "ControllerGains", "DeviceParams",
    "ExperimentConfig", "FrequencyResponse", "HammerParams", "ImpedanceCurve",
    "LowCoherenceError", "NoResonanceError", "OperatorModel",
    "OperatorSettings", "PiGain", "RunManifest", "SimulationDiverged",
    "StrikeMetrics", "StrikeProfile", "TestResult", "Trace",
    "TrackingOperator", "UnextractableStrike", "ZeModel",
    "controller_preset", "energy_decomposition", "ensemble",
    "estimate_response", "flexible_hammer", "friedman", "load_config",
    "mad_sigma", "median_difference_ci", "metrics_from_csv",
    "metrics_to_csv", "minimum_effect_size", "optimal_timing",
    "preset_for_condition", "resonance_frequency", "resonance_prominence",
    "rigid_hammer", "run_experiment", "segment_strikes", "simulate_hammer",
    "simulate_teleop", "simulate_ze", "sine_sweep", "strike_metrics",
    "strike_profile", "summarize_condition", "tracking_force",
    "velocity_frequency_response", "wilcoxon_signed_rank", "ze_response",
]

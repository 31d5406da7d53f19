"""Deterministic simulator for networks of VO2-switch relaxation oscillators."""

__version__ = "0.1.0"

from .analysis import (
    PeakMetrics,
    Regime,
    RegimeThresholds,
    Spectrum,
    SyncReport,
    Window,
    classify_regime,
    count_phase_failures,
    occupancy_fraction,
    peak_metrics,
    phase_difference,
    phase_portrait,
    slew_rate_at_switch,
    spectral_flatness,
    spectrum,
)
from .circuit import (
    CouplingKind,
    CouplingSpec,
    NetworkConfig,
    OscillatorParams,
    SimConfig,
    SimulationError,
    Waveform,
    analytic_period,
    build_system,
    dynamic_iv,
    simulate,
)
from .cpg import (
    Gait,
    GaitSpec,
    classify_gait,
    gait_network,
    gait_spec,
    run_gait,
    shipped_gaits,
)
from .device import (
    FlickerNoise,
    NoiseParams,
    SwitchEvent,
    SwitchParams,
    SwitchPhase,
    SwitchState,
    r_on,
    switch_update,
    threshold_powers,
    validity_check,
)
from .presets import list_presets, load_preset, network_from_config, sim_from_config
from .sweep import SweepPoint, SweepResult, sweep_c, sweep_r

"""Weak-value interferometry bench: simulation, reconstruction, verification."""

__version__ = "0.1.0"

from .qubit_core import (
    NearOrthogonalPostselection,
    WeakValueResult,
    commutator_expectation_direct,
    commutator_via_weak_value,
    relative_phase_state,
    scalar_identity_sides,
    weak_value,
)
from .interferometer import ProtocolParams, SpinChannel
from .signal_gen import (
    CHANNELS,
    BinnedCounts,
    ChannelFlags,
    ConfigError,
    ExperimentConfig,
    default_config,
    generate_dataset,
    load_campaign_csv,
    write_campaign_csv,
)
from .analysis import (
    CampaignAnalysis,
    CommutatorReport,
    WeakValueEstimate,
    analyze_campaign,
    extract_visibility,
    fit_sinusoid,
    reconstruct_weak_value,
    verify_commutator,
)

__all__ = [
    "__version__",
    "NearOrthogonalPostselection",
    "WeakValueResult",
    "commutator_expectation_direct",
    "commutator_via_weak_value",
    "relative_phase_state",
    "scalar_identity_sides",
    "weak_value",
    "ProtocolParams",
    "SpinChannel",
    "CHANNELS",
    "BinnedCounts",
    "ChannelFlags",
    "ConfigError",
    "ExperimentConfig",
    "default_config",
    "generate_dataset",
    "load_campaign_csv",
    "write_campaign_csv",
    "CampaignAnalysis",
    "CommutatorReport",
    "WeakValueEstimate",
    "analyze_campaign",
    "extract_visibility",
    "fit_sinusoid",
    "reconstruct_weak_value",
    "verify_commutator",
]

"""Rate bounds, duty-cycle optimization and receiver simulation for
wideband multipath fading channels with unknown gains and delays."""

__version__ = "0.1.0"

from uwbcap.system import (  # noqa: E402
    ChannelRealization,
    ChipSequence,
    ParameterError,
    SystemParams,
    apply_channel,
    derive_quantities,
    group_resolvable_paths,
    sample_channel,
)
from uwbcap.bounds import (  # noqa: E402
    BoundBreakdown,
    Variants,
    awgn_capacity,
    delay_penalty,
    dsss_lower_known_delays,
    dsss_lower_unknown,
    dsss_upper,
    gain_penalty,
    ppm_upper,
    spectral_efficiency_penalty,
)
from uwbcap.optimize import optimize_theta  # noqa: E402

__all__ = [
    "BoundBreakdown",
    "ChannelRealization",
    "ChipSequence",
    "ParameterError",
    "SystemParams",
    "Variants",
    "apply_channel",
    "awgn_capacity",
    "delay_penalty",
    "derive_quantities",
    "dsss_lower_known_delays",
    "dsss_lower_unknown",
    "dsss_upper",
    "gain_penalty",
    "group_resolvable_paths",
    "optimize_theta",
    "ppm_upper",
    "sample_channel",
    "spectral_efficiency_penalty",
]

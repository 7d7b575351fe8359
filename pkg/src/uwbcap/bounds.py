"""Closed-form rate bounds and channel-uncertainty penalties, in bits/sec.

All rates are computed with natural logarithms and converted once to bits.
Lower bounds may come out negative where they are vacuous; they are
returned unclamped so an optimizer sees the true surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from types import MappingProxyType
from typing import Mapping

from uwbcap.system import LOG2E, ParameterError, SystemParams, derive_quantities

LN2 = math.log(2.0)

DELAY_MODES = ("loose_wtd", "loose_wtc", "exact_entropy")

# above this many positions the binomial is evaluated through lgamma
_EXACT_BINOMIAL_MAX = 100_000

PENALTY_KEYS = ("gain_penalty", "spectral_efficiency_penalty", "delay_penalty")
UPPER_KEYS = ("ub1", "ub_paths", "i1", "i2")


@dataclass(frozen=True)
class Variants:
    """Selects between alternate constants for the bound formulas.

    The defaults give the primary form of each bound.

    Attributes:
        gain_2tc: the known-delay gain penalty uses ``2 (P/N0) T_c / (theta L)``
            inside its logarithm instead of ``(P/N0) T_c / (theta L)``.
        spectral_coeff: coefficient of the spectral-efficiency penalty, 3 or 1.
        unknown_gain_half: the unknown-channel gain term uses the prefactor
            ``theta L / (2 T_c)`` instead of ``theta L / T_c``.
        delay_mode: default delay-penalty form, one of ``DELAY_MODES``.
    """

    gain_2tc: bool = False
    spectral_coeff: float = 3.0
    unknown_gain_half: bool = False
    delay_mode: str = "loose_wtd"

    def __post_init__(self):
        if self.delay_mode not in DELAY_MODES:
            raise ValueError(f"delay_mode must be one of {DELAY_MODES}, got {self.delay_mode!r}")
        if self.spectral_coeff not in (1.0, 3.0):
            raise ValueError(f"spectral_coeff must be 1 or 3, got {self.spectral_coeff!r}")

    def as_flags(self):
        return asdict(self)


DEFAULT_VARIANTS = Variants()

VARIANT_NAMES = {
    "gain_2tc": dict(gain_2tc=True),
    "spectral_coeff_1": dict(spectral_coeff=1.0),
    "unknown_gain_half": dict(unknown_gain_half=True),
    "delay_wtc": dict(delay_mode="loose_wtc"),
    "delay_exact": dict(delay_mode="exact_entropy"),
}


def parse_variants(names) -> Variants:
    """Build :class:`Variants` from flag names such as ``["gain_2tc", "delay_exact"]``."""
    kwargs = {}
    for name in names:
        name = name.strip()
        if not name:
            continue
        if name not in VARIANT_NAMES:
            raise ValueError(f"unknown variant {name!r}; expected one of {sorted(VARIANT_NAMES)}")
        update = VARIANT_NAMES[name]
        for key, value in update.items():
            if key in kwargs and kwargs[key] != value:
                raise ValueError(f"variant {name!r} conflicts with another selected variant")
        kwargs.update(update)
    return Variants(**kwargs)


@dataclass(frozen=True)
class BoundBreakdown:
    """A bound value with its named components.

    ``kind`` is ``"lower"`` (total = awgn_capacity minus the penalties) or
    ``"upper"`` (total = the smallest upper term). ``extras`` carries
    quantities reported alongside but not combined into ``total``.
    """

    total: float
    components: Mapping[str, float]
    theta_used: float
    kind: str
    variant_flags: Mapping[str, object] = field(default_factory=dict)
    extras: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "components", MappingProxyType(dict(self.components)))
        object.__setattr__(self, "variant_flags", MappingProxyType(dict(self.variant_flags)))
        object.__setattr__(self, "extras", MappingProxyType(dict(self.extras)))
        if not math.isfinite(self.total):
            raise ValueError(f"bound total is not finite at theta={self.theta_used}")
        for key in PENALTY_KEYS:
            if key in self.components and self.components[key] < 0:
                raise ValueError(f"negative penalty {key}={self.components[key]}")

    def recompute(self):
        """The total as implied by the components alone."""
        if self.kind == "lower":
            # same subtraction order as the constructors, so the float result matches exactly
            total = self.components["awgn_capacity"]
            for key in PENALTY_KEYS:
                if key in self.components:
                    total -= self.components[key]
            return total
        return min(self.components[k] for k in UPPER_KEYS if k in self.components)

    @property
    def vacuous(self):
        return self.total <= 0


def _check_theta(theta):
    if not (0 < theta <= 1) or not math.isfinite(theta):
        raise ParameterError("duty_cycle_theta", f"must lie in (0, 1], got {theta!r}")


def _log2_1p(x):
    return math.log1p(x) / LN2


def awgn_capacity(params: SystemParams) -> float:
    """Infinite-bandwidth AWGN capacity ``(P/N0) log2 e``."""
    return params.p_over_n0 * LOG2E


def gain_penalty(params: SystemParams, theta: float, variants: Variants = DEFAULT_VARIANTS) -> float:
    """Penalty for unknown path gains when delays are known.

    ``(theta L / 2 T_c) log2(1 + (P/N0) T_c / (theta L))``; with
    ``variants.gain_2tc`` the argument carries an extra factor 2.
    """
    _check_theta(theta)
    tl = theta * params.num_paths_l
    factor = 2.0 if variants.gain_2tc else 1.0
    return tl / (2.0 * params.coherence_time_tc) * _log2_1p(factor * params.p_over_n0 * params.coherence_time_tc / tl)


def spectral_efficiency_penalty(params: SystemParams, theta: float, variants: Variants = DEFAULT_VARIANTS) -> float:
    _check_theta(theta)
    return variants.spectral_coeff * params.p_over_n0**2 / (theta * params.bandwidth_w) * LOG2E


def delay_penalty(params: SystemParams, theta: float, mode: str = "loose_wtd") -> float:
    """Bound on the penalty for unknown path delays, via the delay-set entropy.

    ``loose_wtd``: ``(theta L / T_c) log2(W T_d)``;
    ``loose_wtc``: ``(theta L / T_c) log2(W T_c)``;
    ``exact_entropy``: ``(theta / T_c) log2 binomial(L_m, L)``.
    """
    _check_theta(theta)
    l = params.num_paths_l
    l_m = derive_quantities(params, theta).l_m
    if l > l_m:
        raise ParameterError("num_paths_l", f"L={l} exceeds L_m={l_m}")
    rate = theta / params.coherence_time_tc
    if mode == "loose_wtd":
        return rate * l * math.log2(params.bandwidth_w * params.delay_spread_td)
    if mode == "loose_wtc":
        return rate * l * math.log2(params.bandwidth_w * params.coherence_time_tc)
    if mode == "exact_entropy":
        if l_m <= _EXACT_BINOMIAL_MAX:
            return rate * math.log2(math.comb(l_m, l))
        ln_binom = math.lgamma(l_m + 1) - math.lgamma(l + 1) - math.lgamma(l_m - l + 1)
        return rate * max(ln_binom, 0.0) / LN2
    raise ValueError(f"unknown delay mode {mode!r}; expected one of {DELAY_MODES}")


def dsss_lower_known_delays(params: SystemParams, theta: float, variants: Variants = DEFAULT_VARIANTS) -> BoundBreakdown:
    """Lower bound on the DSSS rate when the receiver knows the path delays."""
    c = awgn_capacity(params)
    gain = gain_penalty(params, theta, variants)
    spectral = spectral_efficiency_penalty(params, theta, variants)
    return BoundBreakdown(
        total=c - gain - spectral,
        components={"awgn_capacity": c, "gain_penalty": gain, "spectral_efficiency_penalty": spectral},
        theta_used=theta,
        kind="lower",
        variant_flags=variants.as_flags(),
    )


def unknown_gain_term(params: SystemParams, theta: float, variants: Variants = DEFAULT_VARIANTS) -> float:
    """Gain term of the no-channel-knowledge bound, ``(theta L / T_c) log2(1 + SNR_est)``."""
    _check_theta(theta)
    tl = theta * params.num_paths_l
    prefactor = tl / (2.0 * params.coherence_time_tc) if variants.unknown_gain_half else tl / params.coherence_time_tc
    return prefactor * _log2_1p(params.p_over_n0 * params.coherence_time_tc / tl)


def dsss_lower_unknown(
    params: SystemParams,
    theta: float,
    delay_mode: str | None = None,
    variants: Variants = DEFAULT_VARIANTS,
) -> BoundBreakdown:
    """Lower bound on the DSSS rate with neither gains nor delays known."""
    mode = variants.delay_mode if delay_mode is None else delay_mode
    c = awgn_capacity(params)
    gain = unknown_gain_term(params, theta, variants)
    spectral = spectral_efficiency_penalty(params, theta, variants)
    delay = delay_penalty(params, theta, mode)
    flags = variants.as_flags()
    flags["delay_mode"] = mode
    return BoundBreakdown(
        total=c - gain - spectral - delay,
        components={
            "awgn_capacity": c,
            "gain_penalty": gain,
            "spectral_efficiency_penalty": spectral,
            "delay_penalty": delay,
        },
        theta_used=theta,
        kind="lower",
        variant_flags=flags,
    )


def dsss_upper_asymptote(params: SystemParams) -> float:
    """Limit of the path-count bound as ``theta L`` grows: ``C_AWGN 2 T_d B^2 d / T_c``."""
    b2d = params.gain_bound_b**2 * params.pseudo_random_d
    return awgn_capacity(params) * 2.0 * params.delay_spread_td * b2d / params.coherence_time_tc


def dsss_upper(params: SystemParams, theta: float) -> BoundBreakdown:
    """Upper bounds on the DSSS rate with duty cycle ``theta``.

    ``ub1`` is the capacity of an AWGN channel used a fraction ``theta`` of the
    time; ``ub_paths`` grows with the number of paths through ``1/L``.
    """
    _check_theta(theta)
    snr = params.p_over_n0
    w_theta = params.bandwidth_w * theta
    ub1 = w_theta * _log2_1p(snr / w_theta)
    b2d = params.gain_bound_b**2 * params.pseudo_random_d
    ub_paths = (
        8.0 * snr**2 * params.coherence_time_tc / (theta * params.num_paths_l) * LOG2E
        + 4.0 * snr * params.delay_spread_td * b2d / params.coherence_time_tc * LOG2E
    )
    return BoundBreakdown(
        total=min(ub1, ub_paths),
        components={"ub1": ub1, "ub_paths": ub_paths},
        theta_used=theta,
        kind="upper",
        extras={"asymptote": dsss_upper_asymptote(params), "awgn_capacity": awgn_capacity(params)},
    )


def ppm_upper(params: SystemParams, theta: float) -> BoundBreakdown:
    """Upper bound on the PPM rate, ``min(i1, i2)``.

    ``i1`` is the uncoded PPM bit rate. ``i2`` compares with an ISI-free
    system and subtracts the gain-estimation penalty; it can be negative,
    which makes the bound vacuous-zero.
    """
    _check_theta(theta)
    t_symb = params.ppm_symbol_time_ts + params.ppm_guard_time
    w = params.bandwidth_w
    if w * t_symb <= 1:
        raise ParameterError("ppm_symbol_time_ts", f"W T_symb = {w * t_symb} must exceed 1")
    snr = params.p_over_n0
    td = params.delay_spread_td
    tl = theta * params.num_paths_l
    tc = params.coherence_time_tc
    i1 = theta * math.log2(w * t_symb) / t_symb
    span = theta * w * (td + t_symb)
    signal_term = span / (2.0 * t_symb) * _log2_1p(2.0 * snr * t_symb / span)
    estimation_term = tl / (2.0 * tc) * _log2_1p(2.0 * snr * tc / tl)
    i2 = signal_term - estimation_term
    return BoundBreakdown(
        total=min(i1, i2),
        components={"i1": i1, "i2": i2},
        theta_used=theta,
        kind="upper",
        extras={"i2_signal": signal_term, "i2_estimation": estimation_term, "awgn_capacity": awgn_capacity(params)},
    )

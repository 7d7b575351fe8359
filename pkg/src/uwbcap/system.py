"""System parameters, derived quantities and the discrete block-fading channel.

The channel is real valued. Over one coherence period it has ``L``
resolvable paths at integer chip delays drawn uniformly among the
``binomial(L_m, L)`` delay sets, with IID zero-mean gains of variance ``1/L``.
The received chip sequence is

    Y_i = sqrt(E / K_c) * sum_l G_l X_{(i - D_l) mod n} + Z_i,

with unit-variance real Gaussian noise ``Z_i`` and ``E = 2 P T_c / (N0 theta)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from uwbcap._rng import make_rng

LOG2E = math.log2(math.e)

# relative slack when a product like T_c * W is meant to be an integer
_INTEGER_RTOL = 1e-9


class ParameterError(ValueError):
    """An invalid parameter value; ``field`` names the offending field."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(value):
    return 10.0 * math.log10(value)


def chip_floor(x):
    """``floor(x)`` that tolerates floating error in products meant to be whole.

    ``1e-4 * 2e10`` is not exactly ``2e6`` in binary floating point; a plain
    floor could lose a chip.
    """
    nearest = round(x)
    if abs(x - nearest) <= _INTEGER_RTOL * max(1.0, abs(x)):
        return int(nearest)
    return int(math.floor(x))


@dataclass(frozen=True)
class SystemParams:
    """Physical and protocol constants.

    Times are in seconds, the bandwidth in Hz and ``p_over_n0`` (P/N0) in 1/sec.
    Use :meth:`reference_defaults` for the reference operating point
    (W = 20 GHz, P/N0 = 53 dB, T_c = 0.1 ms, T_d = 200 ns, T_s = 800 ns,
    200 ns guard, B^2 d = 1, L = 100).
    """

    bandwidth_w: float
    p_over_n0: float
    coherence_time_tc: float
    delay_spread_td: float
    ppm_symbol_time_ts: float
    ppm_guard_time: float
    num_paths_l: int
    duty_cycle_theta: float = 1.0
    gain_bound_b: float = 1.0
    pseudo_random_d: float = 1.0
    threshold_alpha: float = 0.5

    def __post_init__(self):
        for name in ("bandwidth_w", "coherence_time_tc", "delay_spread_td", "p_over_n0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(name, f"must be finite and > 0, got {value!r}")
        for name in ("ppm_symbol_time_ts", "ppm_guard_time"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(name, f"must be finite and >= 0, got {value!r}")
        if self.delay_spread_td >= self.coherence_time_tc:
            raise ParameterError(
                "delay_spread_td",
                f"channel must be underspread: T_d={self.delay_spread_td} >= T_c={self.coherence_time_tc}",
            )
        if not (0 < self.duty_cycle_theta <= 1):
            raise ParameterError("duty_cycle_theta", f"must lie in (0, 1], got {self.duty_cycle_theta!r}")
        if not (0 < self.threshold_alpha < 1):
            raise ParameterError("threshold_alpha", f"must lie in (0, 1), got {self.threshold_alpha!r}")
        if self.gain_bound_b <= 0 or self.pseudo_random_d <= 0:
            raise ParameterError("gain_bound_b" if self.gain_bound_b <= 0 else "pseudo_random_d", "must be > 0")
        if isinstance(self.num_paths_l, bool) or int(self.num_paths_l) != self.num_paths_l:
            raise ParameterError("num_paths_l", f"must be an integer, got {self.num_paths_l!r}")
        object.__setattr__(self, "num_paths_l", int(self.num_paths_l))

        k_c = chip_floor(self.coherence_time_tc * self.bandwidth_w)
        l_m = chip_floor(self.delay_spread_td * self.bandwidth_w)
        if k_c < 1:
            raise ParameterError("coherence_time_tc", f"K_c = floor(T_c W) = {k_c} < 1")
        if l_m < 1:
            raise ParameterError("delay_spread_td", f"L_m = floor(T_d W) = {l_m} < 1")
        if not (1 <= self.num_paths_l <= l_m):
            raise ParameterError("num_paths_l", f"must satisfy 1 <= L <= floor(W T_d) = {l_m}, got {self.num_paths_l}")
        period = self.ppm_symbol_time_ts + self.ppm_guard_time
        if period <= 0:
            raise ParameterError("ppm_symbol_time_ts", "PPM symbol period T_s + guard must be > 0")
        n = self.coherence_time_tc / period
        if abs(n - round(n)) > _INTEGER_RTOL * max(1.0, n) or round(n) < 1:
            raise ParameterError(
                "coherence_time_tc",
                f"N = T_c / (T_s + guard) = {n!r} must be a whole number >= 1",
            )

    @classmethod
    def reference_defaults(cls, **overrides) -> "SystemParams":
        values = dict(
            bandwidth_w=20e9,
            p_over_n0=db_to_linear(53.0),
            coherence_time_tc=0.1e-3,
            delay_spread_td=200e-9,
            ppm_symbol_time_ts=800e-9,
            ppm_guard_time=200e-9,
            num_paths_l=100,
            duty_cycle_theta=1.0,
            gain_bound_b=1.0,
            pseudo_random_d=1.0,
            threshold_alpha=0.5,
        )
        values.update(overrides)
        return cls(**values)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    @property
    def p_over_n0_db(self):
        return linear_to_db(self.p_over_n0)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class DerivedQuantities:
    k_c: int  # chips per coherence period
    l_m: int  # resolvable delay positions
    n_symbols: int  # PPM symbols per coherence period
    energy: float  # received energy per active coherence period, noise units
    snr_est: float
    c_awgn: float  # bits/sec
    ppm_positions: int
    ppm_guard_chips: int

    @property
    def ppm_span(self):
        return self.ppm_positions + self.ppm_guard_chips

    @property
    def energy_per_symbol(self):
        return self.energy / self.n_symbols


def derive_quantities(params: SystemParams, theta: Optional[float] = None) -> DerivedQuantities:
    """Chip counts, energy per coherence period, SNR_est and C_AWGN.

    ``theta`` overrides ``params.duty_cycle_theta`` when given.
    """
    if theta is None:
        theta = params.duty_cycle_theta
    elif not (0 < theta <= 1):
        raise ParameterError("duty_cycle_theta", f"must lie in (0, 1], got {theta!r}")
    w = params.bandwidth_w
    l = params.num_paths_l
    snr_est = params.p_over_n0 * params.coherence_time_tc / (theta * l)
    return DerivedQuantities(
        k_c=chip_floor(params.coherence_time_tc * w),
        l_m=chip_floor(params.delay_spread_td * w),
        n_symbols=int(round(params.coherence_time_tc / (params.ppm_symbol_time_ts + params.ppm_guard_time))),
        # 2 (P/N0) T_c / theta, written so the identity E = 2 L SNR_est is exact
        energy=2.0 * l * snr_est,
        snr_est=snr_est,
        c_awgn=params.p_over_n0 * LOG2E,
        ppm_positions=chip_floor(params.ppm_symbol_time_ts * w),
        ppm_guard_chips=chip_floor(params.ppm_guard_time * w),
    )


def _readonly(values, dtype):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChannelRealization:
    """Resolvable paths of one coherence period (delays in chips)."""

    delays: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        delays = _readonly(self.delays, np.int64).reshape(-1)
        gains = _readonly(self.gains, float).reshape(-1)
        if delays.shape != gains.shape:
            raise ValueError(f"{delays.size} delays but {gains.size} gains")
        if delays.size and (delays[0] < 0 or np.any(np.diff(delays) <= 0)):
            raise ValueError("delays must be non-negative and strictly increasing")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "gains", gains)

    @property
    def num_paths(self):
        return int(self.delays.size)

    @property
    def energy(self):
        """E_G, the sum of squared gains."""
        return float(np.dot(self.gains, self.gains))


@dataclass(frozen=True)
class ChipSequence:
    samples: np.ndarray
    active: bool = True

    def __post_init__(self):
        object.__setattr__(self, "samples", _readonly(self.samples, float).reshape(-1))

    def __len__(self):
        return int(self.samples.size)


GainSampler = Callable[[np.random.Generator, int], np.ndarray]


def gaussian_gains(rng: np.random.Generator, num_paths: int) -> np.ndarray:
    """IID N(0, 1/L) gains."""
    return rng.normal(0.0, 1.0 / math.sqrt(num_paths), size=num_paths)


def unit_gains(rng: np.random.Generator, num_paths: int) -> np.ndarray:
    """Deterministic equal gains ``1/sqrt(L)``, so ``sum G^2 = 1`` exactly."""
    return np.full(num_paths, 1.0 / math.sqrt(num_paths))


def sample_delays(rng: np.random.Generator, l_m: int, l: int) -> np.ndarray:
    """Uniform random ``l``-subset of ``{0, ..., l_m - 1}``, sorted."""
    if not (1 <= l <= l_m):
        raise ValueError(f"need 1 <= L <= L_m, got L={l}, L_m={l_m}")
    return np.sort(rng.choice(l_m, size=l, replace=False)).astype(np.int64)


def sample_channel(params: SystemParams, seed, gain_sampler: GainSampler = gaussian_gains, index=0) -> ChannelRealization:
    """Draw one coherence period's resolvable paths.

    Args:
        params: system parameters; ``num_paths_l`` paths over ``L_m`` positions.
        seed: master seed (int or ``SeedSequence``).
        gain_sampler: ``(rng, L) -> gains``. Any zero-mean IID law with
            variance ``1/L`` fits the model; Gaussian by default.
        index: realization index, so that a sequence of channels can be drawn
            from one master seed.
    """
    d = derive_quantities(params)
    l = params.num_paths_l
    if l > d.l_m:
        raise ParameterError("num_paths_l", f"L={l} exceeds L_m={d.l_m}")
    rng = make_rng(seed, "channel", index)
    delays = sample_delays(rng, d.l_m, l)
    gains = np.asarray(gain_sampler(rng, l), dtype=float)
    return ChannelRealization(delays, gains)


def group_resolvable_paths(physical_gains, physical_delays, params: SystemParams) -> ChannelRealization:
    """Sum physical paths falling in the same ``1/W`` delay bin.

    Physical delays are in seconds and must lie in ``[0, T_d)``. Bins whose
    summed gain is exactly zero are dropped.
    """
    gains = np.asarray(physical_gains, dtype=float).reshape(-1)
    taus = np.asarray(physical_delays, dtype=float).reshape(-1)
    if gains.shape != taus.shape:
        raise ValueError("physical_gains and physical_delays differ in length")
    if np.any(taus < 0) or np.any(taus >= params.delay_spread_td):
        bad = taus[(taus < 0) | (taus >= params.delay_spread_td)]
        raise ParameterError("physical_delays", f"delays must lie in [0, T_d={params.delay_spread_td}); got {bad.tolist()}")
    l_m = derive_quantities(params).l_m
    bins = np.minimum(np.floor(taus * params.bandwidth_w).astype(np.int64), l_m - 1)
    summed = np.zeros(l_m)
    np.add.at(summed, bins, gains)
    keep = np.flatnonzero(summed != 0.0)
    return ChannelRealization(keep, summed[keep])


def channel_scale(params: SystemParams) -> float:
    """Amplitude factor ``sqrt(E / K_c)``."""
    d = derive_quantities(params)
    return math.sqrt(d.energy / d.k_c)


def apply_channel(
    x: ChipSequence,
    ch: ChannelRealization,
    params: SystemParams,
    noise_seed=None,
    noiseless: bool = False,
    noise_index: int = 0,
) -> ChipSequence:
    """Pass ``x`` through the circular channel and add unit-variance noise.

    ``x`` is either a full coherence period (``K_c`` chips) or a single PPM
    symbol span (``floor(W T_s) + floor(W guard)`` chips). With the guard
    time at least the delay spread, the circular and linear forms coincide
    for the latter.
    """
    d = derive_quantities(params)
    n = len(x)
    if n not in (d.k_c, d.ppm_span):
        raise ValueError(f"input length {n} matches neither K_c={d.k_c} nor the PPM symbol span {d.ppm_span}")
    if ch.num_paths and ch.delays[-1] >= n:
        raise ValueError(f"delay {int(ch.delays[-1])} does not fit a frame of {n} chips")
    y = np.zeros(n)
    for delay, gain in zip(ch.delays, ch.gains):
        y += gain * np.roll(x.samples, int(delay))
    y *= channel_scale(params)
    if not noiseless:
        if noise_seed is None:
            raise ValueError("noise_seed is required unless noiseless=True")
        y += make_rng(noise_seed, "noise", noise_index).standard_normal(n)
    return ChipSequence(y, active=x.active)

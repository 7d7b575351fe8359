"""PPM matched-filter threshold receiver: symbols, statistics, decisions,
the three-term union bound and a Monte Carlo error-rate simulator.

The receiver knows the channel. For each candidate position ``i`` it forms

    s_i = sum_j G_j Y[i + D_j]

and decodes ``i`` only if ``s_i`` is the single statistic above the threshold
``A = alpha sqrt(E / N)``. Anything else is an erasure.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional

import numpy as np

from uwbcap._rng import make_rng
from uwbcap.system import (
    ChannelRealization,
    ChipSequence,
    GainSampler,
    ParameterError,
    SystemParams,
    channel_scale,
    derive_quantities,
    sample_delays,
)

DECODED = "decoded"
ERASURE_NONE = "erasure_none_above"
ERASURE_MULTIPLE = "erasure_multiple_above"

BREAKDOWN_KEYS = ("missed_true", "overlap_false_alarm", "noise_false_alarm", "multiple_above")

_Z95 = NormalDist().inv_cdf(0.975)

# gathered (trials x paths x positions) elements per simulation block
_BLOCK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class Decision:
    kind: str
    position: Optional[int] = None

    @classmethod
    def decoded(cls, position):
        return cls(DECODED, int(position))

    def __str__(self):
        return f"{self.kind}({self.position})" if self.kind == DECODED else self.kind


@dataclass(frozen=True)
class MatchedFilterFrame:
    statistics: np.ndarray
    channel_energy_eg: float
    threshold_a: float
    true_symbol: Optional[int] = None
    decision: Optional[Decision] = None

    def __post_init__(self):
        stats = np.array(self.statistics, dtype=float).reshape(-1)
        stats.setflags(write=False)
        object.__setattr__(self, "statistics", stats)
        if not self.threshold_a > 0:
            raise ValueError(f"threshold must be > 0, got {self.threshold_a}")
        if self.decision is None:
            object.__setattr__(self, "decision", decide_statistics(stats, self.threshold_a))


@dataclass(frozen=True)
class ErrorStats:
    trials: int
    errors: int
    breakdown: dict = field(default_factory=dict)
    desired_output_mean: float = float("nan")
    desired_output_var: float = float("nan")

    @property
    def error_rate(self):
        return self.errors / self.trials

    @property
    def wilson_interval(self):
        return wilson_interval(self.errors, self.trials)


def wilson_interval(successes, trials, z=_Z95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _check_ppm_geometry(params: SystemParams):
    d = derive_quantities(params)
    if d.ppm_positions < 1:
        raise ParameterError("ppm_symbol_time_ts", f"floor(W T_s) = {d.ppm_positions} leaves no PPM positions")
    if d.ppm_guard_chips < d.l_m:
        raise ParameterError(
            "ppm_guard_time",
            f"guard of {d.ppm_guard_chips} chips is shorter than the delay spread of {d.l_m} chips",
        )
    return d


def threshold(params: SystemParams, theta: Optional[float] = None) -> float:
    """Decision threshold ``A = alpha sqrt(E / N)``."""
    d = derive_quantities(params, theta)
    return params.threshold_alpha * math.sqrt(d.energy_per_symbol)


def build_ppm_symbol(params: SystemParams, position: int) -> ChipSequence:
    """One PPM symbol followed by its guard interval.

    A single chip of amplitude ``sqrt(W (T_s + guard))`` sits at ``position``;
    every other chip of the span, guard included, is zero.
    """
    d = derive_quantities(params)
    if not (0 <= position < d.ppm_positions):
        raise ValueError(f"position must lie in [0, {d.ppm_positions}), got {position}")
    samples = np.zeros(d.ppm_span)
    samples[position] = math.sqrt(params.bandwidth_w * (params.ppm_symbol_time_ts + params.ppm_guard_time))
    return ChipSequence(samples, active=True)


def matched_filter_outputs(
    received: ChipSequence,
    ch: ChannelRealization,
    params: SystemParams,
    true_symbol: Optional[int] = None,
) -> MatchedFilterFrame:
    """Correlate the received span with the L-finger channel template.

    ``statistics[i] = sum_j gains[j] * received[i + delays[j]]`` for every
    candidate position ``i`` (0-based form of the 1-based ``Y_{i + D_j - 1}``).
    """
    d = derive_quantities(params)
    y = received.samples
    positions = d.ppm_positions
    max_delay = int(ch.delays[-1]) if ch.num_paths else 0
    if y.size < positions + max_delay:
        raise ValueError(
            f"received span of {y.size} chips is shorter than {positions} positions + max delay {max_delay}"
        )
    stats = np.zeros(positions)
    for delay, gain in zip(ch.delays, ch.gains):
        stats += gain * y[delay : delay + positions]
    return MatchedFilterFrame(
        statistics=stats,
        channel_energy_eg=ch.energy,
        threshold_a=threshold(params),
        true_symbol=true_symbol,
    )


def decide_statistics(statistics, threshold_a) -> Decision:
    # ties at exactly A are not above
    above = np.flatnonzero(np.asarray(statistics) > threshold_a)
    if above.size == 1:
        return Decision.decoded(above[0])
    return Decision(ERASURE_NONE if above.size == 0 else ERASURE_MULTIPLE)


def decide(frame: MatchedFilterFrame) -> Decision:
    return decide_statistics(frame.statistics, frame.threshold_a)


def normal_tail_bound(x: float) -> float:
    """Upper bound ``exp(-x^2/2) / (sqrt(2 pi) x)`` on ``P(Z > x)``, ``x > 0``."""
    if not x > 0:
        raise ValueError(f"x must be > 0, got {x!r}")
    return math.exp(-0.5 * x * x) / (math.sqrt(2.0 * math.pi) * x)


def normal_tail(x: float) -> float:
    """Exact ``P(Z > x)`` for a standard normal."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


@dataclass(frozen=True)
class UnionBound:
    """Three error-event terms of the union bound and their sum.

    ``missed_true`` (Chebyshev on the desired output), ``overlap`` (``L^2``
    single-overlap terms, worst-cased to ``P(Z >= A/4)``) and ``noise``
    (``W T_s`` noise-only outputs). ``total`` is unclamped.
    """

    missed_true: float
    overlap: float
    noise: float
    threshold_a: float
    energy_per_symbol: float

    @property
    def total(self):
        return self.missed_true + self.overlap + self.noise

    @property
    def clamped(self):
        return min(1.0, self.total)


def union_bound_error(params: SystemParams, theta: Optional[float] = None, channel_energy: float = 1.0) -> UnionBound:
    """Analytic union bound on the symbol error probability.

    The channel energy ``E_G`` is taken at its mean, 1, unless given.
    """
    d = derive_quantities(params, theta)
    alpha = params.threshold_alpha
    if alpha >= channel_energy:
        raise ParameterError("threshold_alpha", f"alpha={alpha} must be below E_G={channel_energy}")
    snr_symbol = d.energy_per_symbol
    a = alpha * math.sqrt(snr_symbol)
    missed = channel_energy / ((channel_energy - alpha) ** 2 * snr_symbol)
    overlap = params.num_paths_l**2 * normal_tail_bound(a / 4.0)
    noise = params.bandwidth_w * params.ppm_symbol_time_ts * normal_tail_bound(a / math.sqrt(channel_energy))
    return UnionBound(missed, overlap, noise, a, snr_symbol)


@dataclass
class _Block:
    delays: np.ndarray  # (n, L)
    gains: np.ndarray  # (n, L)
    positions: np.ndarray  # (n,)
    noise: Optional[np.ndarray]  # (n, span) or None


def _draw_block(rng, n, l_m, l, positions, span, noiseless, gain_sampler=None) -> _Block:
    delays = np.stack([sample_delays(rng, l_m, l) for _ in range(n)])
    if gain_sampler is None:
        # vectorized form of gaussian_gains
        gains = rng.normal(0.0, 1.0 / math.sqrt(l), size=(n, l))
    else:
        gains = np.stack([np.asarray(gain_sampler(rng, l), dtype=float) for _ in range(n)])
    pos = rng.integers(0, positions, size=n)
    noise = None if noiseless else rng.standard_normal((n, span))
    return _Block(delays, gains, pos, noise)


def _block_statistics(block: _Block, amplitude, positions, span):
    """Matched-filter statistics for a batch of independent symbols."""
    n, l = block.gains.shape
    rows = np.arange(n)[:, None]
    y = np.zeros((n, span)) if block.noise is None else block.noise.copy()
    # pos + delay < span thanks to the guard, so no wrap-around occurs
    y[rows, block.positions[:, None] + block.delays] += amplitude * block.gains
    idx = np.arange(positions)[None, None, :] + block.delays[:, :, None]
    gathered = y[np.arange(n)[:, None, None], idx]
    return np.einsum("nl,nlp->np", block.gains, gathered)


def _overlap_mask(block: _Block, positions):
    """Positions whose filter shares at least one chip with the sent symbol."""
    n, l = block.delays.shape
    diffs = block.delays[:, :, None] - block.delays[:, None, :]
    off = ~np.eye(l, dtype=bool)
    cand = block.positions[:, None] + diffs[:, off]
    rows = np.broadcast_to(np.arange(n)[:, None], cand.shape)
    valid = (cand >= 0) & (cand < positions)
    mask = np.zeros((n, positions), dtype=bool)
    mask[rows[valid], cand[valid]] = True
    return mask


def _run_block(args):
    seed, index, n, params, noiseless, gain_sampler = args
    d = derive_quantities(params)
    rng = make_rng(seed, "ppm-trials", index)
    block = _draw_block(rng, n, d.l_m, params.num_paths_l, d.ppm_positions, d.ppm_span, noiseless, gain_sampler)
    amplitude = channel_scale(params) * math.sqrt(
        params.bandwidth_w * (params.ppm_symbol_time_ts + params.ppm_guard_time)
    )
    stats = _block_statistics(block, amplitude, d.ppm_positions, d.ppm_span)
    a = threshold(params)
    rows = np.arange(n)
    above = stats > a
    true_above = above[rows, block.positions]
    count_above = above.sum(axis=1)
    errors = ~(true_above & (count_above == 1))
    wrong = above.copy()
    wrong[rows, block.positions] = False
    overlap = _overlap_mask(block, d.ppm_positions)
    desired = stats[rows, block.positions]
    return {
        "errors": int(errors.sum()),
        "missed_true": int((~true_above).sum()),
        "overlap_false_alarm": int((wrong & overlap).any(axis=1).sum()),
        "noise_false_alarm": int((wrong & ~overlap).any(axis=1).sum()),
        "multiple_above": int((count_above >= 2).sum()),
        "desired_sum": float(desired.sum()),
        "desired_sq_sum": float(np.dot(desired, desired)),
    }


def simulation_block_size(params: SystemParams) -> int:
    d = derive_quantities(params)
    return max(1, min(4096, _BLOCK_ELEMENTS // (params.num_paths_l * d.ppm_positions)))


def simulate_error_rate(
    params: SystemParams,
    theta: Optional[float],
    trials: int,
    seed,
    noiseless: bool = False,
    max_workers: Optional[int] = None,
    gain_sampler: Optional[GainSampler] = None,
) -> ErrorStats:
    """Monte Carlo symbol error rate of the threshold receiver.

    Each trial draws a fresh channel and a uniformly random symbol, passes one
    symbol span through the channel, adds unit-variance noise, filters and
    decides. Trials are grouped in fixed-size blocks, each seeded from
    ``(seed, block index)``, so the result does not depend on ``max_workers``.

    The breakdown counts trials in which each error event occurred; one trial
    can contribute to several events. ``gain_sampler`` replaces the default
    IID N(0, 1/L) gains (e.g. ``unit_gains``).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if theta is not None:
        params = params.replace(duty_cycle_theta=theta)
    d = _check_ppm_geometry(params)
    if d.ppm_positions < 2:
        raise ParameterError("ppm_symbol_time_ts", "need at least 2 PPM positions")
    size = simulation_block_size(params)
    jobs = []
    start = 0
    index = 0
    while start < trials:
        n = min(size, trials - start)
        jobs.append((seed, index, n, params, noiseless, gain_sampler))
        start += n
        index += 1
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_run_block, jobs))
    else:
        results = [_run_block(job) for job in jobs]
    totals = {key: sum(r[key] for r in results) for key in ("errors",) + BREAKDOWN_KEYS}
    desired_sum = math.fsum(r["desired_sum"] for r in results)
    desired_sq = math.fsum(r["desired_sq_sum"] for r in results)
    mean = desired_sum / trials
    var = desired_sq / trials - mean * mean
    return ErrorStats(
        trials=trials,
        errors=totals["errors"],
        breakdown={k: totals[k] for k in BREAKDOWN_KEYS},
        desired_output_mean=mean,
        desired_output_var=var * trials / (trials - 1) if trials > 1 else float("nan"),
    )

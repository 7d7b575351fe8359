import math

import numpy as np
import pytest

from uwbcap import ppm
from uwbcap.ppm import (
    DECODED,
    ERASURE_MULTIPLE,
    ERASURE_NONE,
    MatchedFilterFrame,
    build_ppm_symbol,
    decide,
    decide_statistics,
    matched_filter_outputs,
    normal_tail,
    normal_tail_bound,
    simulate_error_rate,
    threshold,
    union_bound_error,
    wilson_interval,
)
from uwbcap.system import (
    ChannelRealization,
    ParameterError,
    apply_channel,
    derive_quantities,
    sample_channel,
    unit_gains,
)
from uwbcap.verify import desk_params


def _desk(l=4, alpha=0.5, theta=0.05, a=4.0, w=1e8):
    return desk_params(w, l, alpha, theta, a)


def test_symbol_shape():
    p = _desk()
    x = build_ppm_symbol(p, 10)
    assert len(x) == 100
    assert np.flatnonzero(x.samples).tolist() == [10]
    assert x.samples[10] == pytest.approx(10.0)
    y = build_ppm_symbol(p, 11)
    assert np.dot(x.samples, y.samples) == 0.0
    with pytest.raises(ValueError):
        build_ppm_symbol(p, 80)


def test_decide_examples():
    assert decide_statistics([0.1, 5.0, 0.2], 1.0) == ppm.Decision.decoded(1)
    assert decide_statistics([0.1, 0.2], 1.0).kind == ERASURE_NONE
    assert decide_statistics([2.0, 3.0], 1.0).kind == ERASURE_MULTIPLE
    # exactly at the threshold is not above
    assert decide_statistics([1.0, 0.0], 1.0).kind == ERASURE_NONE
    assert str(ppm.Decision.decoded(3)) == "decoded(3)"


def test_decide_scale_invariant():
    rng = np.random.default_rng(3)
    for _ in range(50):
        s = rng.standard_normal(20)
        a = abs(rng.standard_normal()) + 0.1
        assert decide_statistics(s, a) == decide_statistics(7.5 * s, 7.5 * a)


def test_frame_is_immutable_and_decided():
    f = MatchedFilterFrame([0.0, 3.0], 1.0, 1.0)
    assert f.decision.kind == DECODED and decide(f) == f.decision
    with pytest.raises(ValueError):
        f.statistics[0] = 1.0
    with pytest.raises(ValueError):
        MatchedFilterFrame([0.0], 1.0, 0.0)


def test_single_path_filter_output():
    p = _desk(l=1)
    d = derive_quantities(p)
    ch = ChannelRealization([5], [1.0])
    y = apply_channel(build_ppm_symbol(p, 30), ch, p, noiseless=True)
    frame = matched_filter_outputs(y, ch, p, true_symbol=30)
    assert frame.statistics[30] == pytest.approx(math.sqrt(d.energy_per_symbol), rel=1e-12)
    assert np.count_nonzero(frame.statistics) == 1
    assert frame.decision == ppm.Decision.decoded(30)


def test_multipath_filter_output_scales_with_channel_energy():
    p = _desk(l=4)
    d = derive_quantities(p)
    ch = sample_channel(p, seed=4)
    y = apply_channel(build_ppm_symbol(p, 17), ch, p, noiseless=True)
    frame = matched_filter_outputs(y, ch, p)
    assert frame.statistics[17] == pytest.approx(math.sqrt(d.energy_per_symbol) * ch.energy, rel=1e-12)


def test_noise_only_statistic_variance():
    p = _desk(l=4)
    ch = ChannelRealization([0, 2, 5, 11], unit_gains(None, 4) * np.array([1.2, 0.4, 0.9, 1.1]))
    zero = build_ppm_symbol(p, 0)
    zero = type(zero)(np.zeros(len(zero)))
    values = []
    for i in range(4000):
        values.append(matched_filter_outputs(apply_channel(zero, ch, p, noise_seed=8, noise_index=i), ch, p).statistics)
    values = np.concatenate(values)
    assert values.var() == pytest.approx(ch.energy, rel=0.03)


def test_batched_matches_scalar_pipeline():
    # replay the first block's draws through the one-symbol functions
    p = _desk(l=3, a=3.0)
    d = derive_quantities(p)
    n = 64
    rng = ppm.make_rng(21, "ppm-trials", 0)
    block = ppm._draw_block(rng, n, d.l_m, 3, d.ppm_positions, d.ppm_span, noiseless=False)
    amplitude = ppm.channel_scale(p) * math.sqrt(p.bandwidth_w * (p.ppm_symbol_time_ts + p.ppm_guard_time))
    batched = ppm._block_statistics(block, amplitude, d.ppm_positions, d.ppm_span)
    for k in range(n):
        ch = ChannelRealization(block.delays[k], block.gains[k])
        x = build_ppm_symbol(p, int(block.positions[k]))
        y = apply_channel(x, ch, p, noiseless=True)
        y = type(y)(y.samples + block.noise[k])
        scalar = matched_filter_outputs(y, ch, p).statistics
        assert np.allclose(batched[k], scalar, rtol=1e-12, atol=1e-12)


def test_tail_bound_values():
    for x in (0.5, 1.0, 2.0, 3.0, 6.0):
        assert normal_tail_bound(x) >= normal_tail(x)
    assert normal_tail_bound(1.0) == pytest.approx(0.24197, rel=1e-4)
    assert normal_tail_bound(6.0) / normal_tail(6.0) == pytest.approx(1.0, abs=0.03)
    with pytest.raises(ValueError):
        normal_tail_bound(0.0)


def test_union_bound_golden():
    p = _desk(l=4, alpha=0.5, theta=0.05, a=8.0)
    ub = union_bound_error(p)
    assert ub.threshold_a == pytest.approx(8.0, rel=1e-12)
    assert ub.missed_true == pytest.approx(0.015624999999999997, rel=1e-12)
    assert ub.overlap == pytest.approx(0.4319277321055045, rel=1e-12)
    assert ub.noise == pytest.approx(5.0522710835368926e-14, rel=1e-9)
    assert ub.total == pytest.approx(0.447552732105555, rel=1e-12)
    assert ub.clamped == ub.total
    loose = union_bound_error(_desk(l=8, a=1.0))
    assert loose.total > 1 and loose.clamped == 1.0


def test_union_bound_rejects_alpha_above_energy():
    with pytest.raises(ParameterError):
        union_bound_error(_desk(), channel_energy=0.4)


def test_threshold_formula():
    p = _desk(a=5.0)
    assert threshold(p) == pytest.approx(5.0, rel=1e-12)


def test_noiseless_single_path_no_errors():
    p = _desk(l=1, a=8.0)
    stats = simulate_error_rate(p, None, 5000, seed=2, noiseless=True, gain_sampler=unit_gains)
    assert stats.errors == 0
    assert stats.breakdown["overlap_false_alarm"] == 0


def test_high_alpha_misses_true_symbol():
    p = _desk(l=2, alpha=0.95, a=4.0)
    stats = simulate_error_rate(p, None, 10_000, seed=5)
    assert stats.breakdown["missed_true"] > 0


def test_single_path_has_no_overlap_alarms():
    stats = simulate_error_rate(_desk(l=1, a=3.0), None, 5000, seed=6)
    assert stats.breakdown["overlap_false_alarm"] == 0


def test_desired_output_mean():
    p = _desk(l=4, a=4.0)
    stats = simulate_error_rate(p, None, 20_000, seed=9)
    expected = math.sqrt(derive_quantities(p).energy_per_symbol)  # E[E_G] = 1
    sigma = math.sqrt(stats.desired_output_var / stats.trials)
    assert abs(stats.desired_output_mean - expected) <= 3 * sigma


def test_error_rate_below_union_bound():
    p = _desk(l=4, alpha=0.45, theta=0.1, a=4.5)
    stats = simulate_error_rate(p, None, 20_000, seed=1)
    assert stats.error_rate <= union_bound_error(p).total


def test_seed_and_worker_invariance():
    p = _desk(l=5, a=3.5)
    a = simulate_error_rate(p, None, 9000, seed=13)
    b = simulate_error_rate(p, None, 9000, seed=13, max_workers=3)
    c = simulate_error_rate(p, None, 9000, seed=14)
    assert a == b
    assert a != c


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0.03 < hi < 0.04
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    with pytest.raises(ValueError):
        wilson_interval(0, 0)

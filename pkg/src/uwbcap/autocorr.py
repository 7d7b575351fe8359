"""Empirical autocorrelation of IID Gaussian chip sequences.

For chips ``r_i ~ N(0, 1/theta)`` the sample correlation

    C(m, n) = theta / K_c * sum_{i=0}^{K_c-1} r_{i-m} r_{i-n}

concentrates around ``delta_mn``. The central limit theorem predicts
``E|C(m,m) - 1| = 2 / sqrt(pi K_c)`` and ``E|C(m,n)| = sqrt(2 / (pi K_c))``
for ``m != n``. A nominal off-diagonal value of ``1 / K_c`` is reported next
to the measurement; it understates the truth by a factor ``sqrt(K_c)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from uwbcap._rng import make_rng

# floats per Monte Carlo block
_BLOCK_FLOATS = 2_000_000


def empirical_autocorr(r, m, n, theta, k_c) -> float:
    """Sample correlation ``C(m, n)`` of one chip sequence.

    ``r`` holds ``context`` predecessor samples followed by ``r_0 ... r_{K_c-1}``,
    where ``context = len(r) - k_c`` must be at least ``max(m, n)``.
    """
    r = np.asarray(r, dtype=float).reshape(-1)
    if not (0 <= m < k_c and 0 <= n < k_c):
        raise ValueError(f"lags must lie in [0, {k_c}), got m={m}, n={n}")
    context = r.size - k_c
    if context < max(m, n):
        raise ValueError(f"need {max(m, n)} predecessor samples, got {max(context, 0)}")
    a = r[context - m : context - m + k_c]
    b = r[context - n : context - n + k_c]
    return theta / k_c * float(np.dot(a, b))


def appendix_bound(l, k_c):
    """``2L / sqrt(pi K_c) + (L^2 - L) / K_c``."""
    return 2.0 * l / math.sqrt(math.pi * k_c) + (l * l - l) / k_c


def appendix_bound_alt(l, k_c):
    """The same bound with the diagonal term written as ``2L / (pi sqrt(K_c))``."""
    return 2.0 * l / (math.pi * math.sqrt(k_c)) + (l * l - l) / k_c


def clt_summed_prediction(l, k_c):
    """CLT value of the summed deviation: ``L 2/sqrt(pi K_c) + (L^2 - L) sqrt(2/(pi K_c))``."""
    return l * 2.0 / math.sqrt(math.pi * k_c) + (l * l - l) * math.sqrt(2.0 / (math.pi * k_c))


@dataclass(frozen=True)
class AutocorrReport:
    k_c: int
    l: int
    trials: int
    theta: float
    diag_mean_abs_dev: float
    offdiag_mean_abs: float
    summed_deviation: float
    diag_std_error: float
    offdiag_std_error: float
    appendix_bound: float
    appendix_bound_alt: float
    clt_prediction_diag: float
    clt_prediction_offdiag: float
    clt_prediction_summed: float
    nominal_offdiag_value: float

    @property
    def offdiag_exceeds_nominal(self):
        """The measured ``E|C(m,n)|`` is above the nominal ``1/K_c``."""
        return self.offdiag_mean_abs > self.nominal_offdiag_value

    @property
    def summed_within_appendix_bound(self):
        return self.summed_deviation <= self.appendix_bound

    def to_dict(self):
        out = asdict(self)
        out["offdiag_exceeds_nominal"] = self.offdiag_exceeds_nominal
        out["summed_within_appendix_bound"] = self.summed_within_appendix_bound
        return out


def mc_autocorr_deviation(k_c, l, theta, trials, seed) -> AutocorrReport:
    """Monte Carlo estimates of the correlation deviations over lags ``1..L``.

    Each trial draws ``K_c + L`` fresh chips, so the ``L`` predecessors of
    ``r_0`` are independent of the window rather than wrapped around.
    """
    if l < 1 or k_c < l:
        raise ValueError(f"need 1 <= l <= k_c, got l={l}, k_c={k_c}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not (0 < theta <= 1):
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    scale = 1.0 / math.sqrt(theta)
    block = max(1, min(trials, _BLOCK_FLOATS // (k_c + l)))
    eye = np.eye(l, dtype=bool)
    diag_vals, off_vals, summed_vals = [], [], []
    done = 0
    index = 0
    while done < trials:
        n = min(block, trials - done)
        rng = make_rng(seed, "autocorr", index)
        r = scale * rng.standard_normal((n, k_c + l))
        # windows at offsets 0..l-1 are the lags l..1
        shifted = sliding_window_view(r, k_c, axis=1)[:, :l, :]
        c = theta / k_c * np.matmul(shifted, shifted.transpose(0, 2, 1))
        dev = np.abs(c - eye)
        diag_vals.append(dev[:, eye].mean(axis=1))
        if l > 1:
            off_vals.append(dev[:, ~eye].mean(axis=1))
        summed_vals.append(dev.sum(axis=(1, 2)))
        done += n
        index += 1
    diag = np.concatenate(diag_vals)
    summed = np.concatenate(summed_vals)
    if l > 1:
        off = np.concatenate(off_vals)
        off_mean = float(off.mean())
        off_se = float(off.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    else:
        off_mean, off_se = 0.0, 0.0
    return AutocorrReport(
        k_c=k_c,
        l=l,
        trials=trials,
        theta=theta,
        diag_mean_abs_dev=float(diag.mean()),
        offdiag_mean_abs=off_mean,
        summed_deviation=float(summed.mean()),
        diag_std_error=float(diag.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan"),
        offdiag_std_error=off_se,
        appendix_bound=appendix_bound(l, k_c),
        appendix_bound_alt=appendix_bound_alt(l, k_c),
        clt_prediction_diag=2.0 / math.sqrt(math.pi * k_c),
        clt_prediction_offdiag=math.sqrt(2.0 / (math.pi * k_c)),
        clt_prediction_summed=clt_summed_prediction(l, k_c),
        nominal_offdiag_value=1.0 / k_c,
    )

"""Overlaps between a random delay set and its translates.

A delay set ``S`` of ``L`` positions out of ``L_m`` is drawn uniformly. The
event of interest is that some translate ``S + t`` (``t != 0``) shares more
than one element with ``S``; equivalently, some positive difference
``a - b`` (``a, b`` in ``S``) occurs twice. The probability is bounded by
``4 L^4 / L_m``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from uwbcap._rng import make_rng
from uwbcap.system import sample_delays

ENUMERATION_BUDGET = 10**7


class BudgetExceeded(ValueError):
    def __init__(self, count, budget):
        super().__init__(f"enumeration of {count} subsets exceeds the budget of {budget}")
        self.count = count
        self.budget = budget


@dataclass(frozen=True)
class OverlapExperiment:
    l_m: int
    l: int
    multi_overlap_probability: float
    method: str  # "exact_enumeration" or "monte_carlo"
    theorem_bound: float
    exact: Optional[Fraction] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
    hits: Optional[int] = None

    @property
    def std_error(self):
        if self.method != "monte_carlo":
            return 0.0
        p = self.multi_overlap_probability
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def confidence_interval(self):
        half = 1.959963984540054 * self.std_error
        p = self.multi_overlap_probability
        return max(0.0, p - half), min(1.0, p + half)


def theorem_bound(l_m, l):
    """``4 L^4 / L_m``, not clamped."""
    return 4.0 * l**4 / l_m


def overlap_count(s, t) -> int:
    """``|s ∩ (s + t)|``."""
    s = set(int(v) for v in s)
    if not s:
        raise ValueError("s must be nonempty")
    return sum(1 for v in s if v - t in s)


def max_translate_overlap(s, l_m) -> int:
    """Largest ``|s ∩ (s + t)|`` over ``0 < |t| < l_m``."""
    s = sorted(set(int(v) for v in s))
    if s and (s[0] < 0 or s[-1] >= l_m):
        raise ValueError(f"s must be a subset of [0, {l_m})")
    best = 0
    for t in range(1, l_m):
        # |s ∩ (s - t)| = |s ∩ (s + t)|
        best = max(best, overlap_count(s, t))
    return best


def has_multi_overlap(s) -> bool:
    """True when some nonzero translate meets ``s`` in two or more points."""
    seen = set()
    s = sorted(s)
    for i, a in enumerate(s):
        for b in s[:i]:
            diff = a - b
            if diff in seen:
                return True
            seen.add(diff)
    return False


def falling_factorial(x, a):
    out = 1
    for k in range(a):
        out *= x - k
    return out


def lemma_subset_probability(l_m, l, a_set, t) -> Fraction:
    """Exact ``P(A ⊆ S ∩ (S + t))`` for a uniform ``l``-subset ``S`` of ``[0, l_m)``.

    Equals ``[l]_a / [l_m]_a`` with ``a = |A ∪ (A - t)|``, and 0 when
    ``A ∪ (A - t)`` leaves the universe or has more than ``l`` elements.
    """
    if t == 0:
        raise ValueError("t must be nonzero")
    a_set = set(int(v) for v in a_set)
    union = a_set | {v - t for v in a_set}
    if any(v < 0 or v >= l_m for v in union) or len(a_set) > l:
        return Fraction(0)
    a = len(union)
    if a > l:
        return Fraction(0)
    return Fraction(falling_factorial(l, a), falling_factorial(l_m, a))


def _count_first(args):
    l_m, l, first = args
    hits = 0
    for rest in itertools.combinations(range(first + 1, l_m), l - 1):
        if has_multi_overlap((first,) + rest):
            hits += 1
    return hits


def exact_multi_overlap_probability(l_m, l, max_workers=None, budget=ENUMERATION_BUDGET) -> OverlapExperiment:
    """Enumerate every ``l``-subset of ``[0, l_m)`` and count multi-overlaps.

    The subset space is partitioned by smallest element; partial counts are
    exact integers, so the merge is order independent.
    """
    if not (1 <= l <= l_m):
        raise ValueError(f"need 1 <= l <= l_m, got l={l}, l_m={l_m}")
    total = math.comb(l_m, l)
    if total > budget:
        raise BudgetExceeded(total, budget)
    jobs = [(l_m, l, first) for first in range(l_m - l + 1)]
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            hits = sum(pool.map(_count_first, jobs))
    else:
        hits = sum(map(_count_first, jobs))
    exact = Fraction(hits, total)
    return OverlapExperiment(
        l_m=l_m,
        l=l,
        multi_overlap_probability=float(exact),
        method="exact_enumeration",
        theorem_bound=theorem_bound(l_m, l),
        exact=exact,
        hits=hits,
    )


def _sorted_differences_repeat(sets):
    """Row-wise multi-overlap test for an ``(n, l)`` array of sorted sets."""
    n, l = sets.shape
    if l < 3:
        return np.zeros(n, dtype=bool)
    i, j = np.triu_indices(l, k=1)
    diffs = np.sort(sets[:, j] - sets[:, i], axis=1)
    return np.any(diffs[:, 1:] == diffs[:, :-1], axis=1)


def mc_multi_overlap_probability(l_m, l, trials, seed, block_size=8192) -> OverlapExperiment:
    """Monte Carlo estimate of the multi-overlap probability.

    Delay sets come from the channel sampler's delay draw. Blocks of trials
    are seeded from ``(seed, block index)``.
    """
    if not (1 <= l <= l_m):
        raise ValueError(f"need 1 <= l <= l_m, got l={l}, l_m={l_m}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = 0
    done = 0
    index = 0
    while done < trials:
        n = min(block_size, trials - done)
        rng = make_rng(seed, "overlap-mc", index)
        sets = np.stack([sample_delays(rng, l_m, l) for _ in range(n)])
        hits += int(_sorted_differences_repeat(sets).sum())
        done += n
        index += 1
    return OverlapExperiment(
        l_m=l_m,
        l=l,
        multi_overlap_probability=hits / trials,
        method="monte_carlo",
        theorem_bound=theorem_bound(l_m, l),
        trials=trials,
        seed=int(seed),
        hits=hits,
    )

"""Truncated power-series evaluation with a rigorous enclosure of the full sum.

Every evaluation returns a value plus two one-sided error budgets: a geometric
tail radius max|d| * x^(N+1)/(1-x) covering the unsummed terms of *any*
coefficient sequence, and a rounding slack covering accumulated float error.
The true series value is certified to lie in [value - tail - slack,
value + tail + slack].
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate
from typing import Optional

import numpy as np

from .coefficients import FinitePrefix
from .errors import BudgetExceededError

__all__ = [
    "BoundedValue",
    "DEFAULT_TERM_BUDGET",
    "TERM_BUDGET_ENV",
    "WalkLowerBound",
    "eval_abel_form",
    "eval_prefix",
    "eval_to_eps",
    "eval_truncated",
    "lower_bound_from_positive_walk",
    "partial_sums",
    "required_terms",
    "tail_bound",
    "term_budget",
]

DEFAULT_TERM_BUDGET = 50_000_000
TERM_BUDGET_ENV = "RANDSERIES_TERM_BUDGET"

_EPS = 2.0 ** -52
_CHUNK = 1 << 20
# Outward inflation for tail bounds: generously covers libm pow slop even for
# exponents ~1e8, while perturbing only the 13th digit of the bound.
_INFLATE = 1.0 + 2.0 ** -40
_TINY = 1e-300


def term_budget(override: Optional[int] = None) -> int:
    """Resolve the per-evaluation term budget (override > env var > default)."""
    if override is not None:
        return int(override)
    env = os.environ.get(TERM_BUDGET_ENV)
    if env:
        return int(float(env))
    return DEFAULT_TERM_BUDGET


@dataclass(frozen=True)
class BoundedValue:
    """A truncated series value with certified two-sided error radii."""

    x: float
    n_terms: int
    value: float
    tail_radius: float
    rounding_slack: float

    @property
    def lower(self) -> float:
        return self.value - self.tail_radius - self.rounding_slack

    @property
    def upper(self) -> float:
        return self.value + self.tail_radius + self.rounding_slack

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, y: float) -> bool:
        return self.lower <= y <= self.upper


def _check_x(x: float) -> float:
    x = float(x)
    if not (0.0 <= x < 1.0) or math.isnan(x):
        raise ValueError(f"x must lie in [0, 1), got {x!r}")
    return x


def tail_bound(max_abs: float, x: float, n_terms: int) -> float:
    """Outward-rounded bound max|d| * x^(N+1) / (1-x) on the unsummed tail."""
    if x <= 0.0 or max_abs == 0.0:
        return 0.0
    return max_abs * x ** (n_terms + 1) / (1.0 - x) * _INFLATE + _TINY


def _power_sum(coeffs: np.ndarray, x: float) -> tuple[float, float]:
    """Return (sum of a_n x^n, sum of |a_n| x^n) for n = 1..len(coeffs).

    Chunked so arbitrarily long evaluations never materialise more than one
    ~1M-element power block; each chunk restarts its power ladder from a
    direct pow, so cumulative-product drift cannot build up across chunks.
    """
    n = coeffs.shape[0]
    sums: list[float] = []
    abs_sums: list[float] = []
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        powers = np.cumprod(np.full(stop - start, x))
        if start:
            powers *= x ** start
        block = coeffs[start:stop] * powers
        sums.append(float(block.sum()))
        abs_sums.append(float(np.abs(block).sum()))
    return math.fsum(sums), math.fsum(abs_sums)


def eval_truncated(stream, x: float, n_terms: int) -> BoundedValue:
    """Evaluate the first N terms of the stream's series at x with certified radii.

    The rounding slack 4 * N * eps_machine * sum|a_n x^n| dominates every float
    error source here: coefficient mirroring, per-chunk power drift, products,
    and pairwise/compensated accumulation.
    """
    x = _check_x(x)
    n_terms = int(n_terms)
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    max_abs = stream.model.max_abs_float
    if x == 0.0:
        return BoundedValue(x, n_terms, 0.0, 0.0, 0.0)
    coeffs = stream.float_coefficients(n_terms)
    value, abs_sum = _power_sum(coeffs, x)
    slack = 4.0 * n_terms * _EPS * abs_sum + _TINY
    return BoundedValue(x, n_terms, value, tail_bound(max_abs, x, n_terms), slack)


def eval_prefix(prefix: FinitePrefix, x: float) -> BoundedValue:
    """Evaluate a finite prefix polynomial (no tail: the series stops at N)."""
    x = _check_x(x)
    if x == 0.0:
        return BoundedValue(x, len(prefix), 0.0, 0.0, 0.0)
    value, abs_sum = _power_sum(prefix.floats, x)
    slack = 4.0 * len(prefix) * _EPS * abs_sum + _TINY
    return BoundedValue(x, len(prefix), value, 0.0, slack)


def required_terms(max_abs: float, x: float, eps: float) -> int:
    """Minimal N with the certified tail bound at most eps."""
    x = _check_x(x)
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if x == 0.0 or max_abs == 0.0:
        return 1
    target = eps * (1.0 - x) / max_abs
    if target >= 1.0:
        n = 1
    else:
        n = max(math.ceil(math.log(target) / math.log(x)) - 1, 1)
    # the log formula is float-approximate; settle against the outward bound
    while tail_bound(max_abs, x, n) > eps:
        n += 1
    while n > 1 and tail_bound(max_abs, x, n - 1) <= eps:
        n -= 1
    return n


def eval_to_eps(stream, x: float, eps: float, *, budget: Optional[int] = None) -> BoundedValue:
    """Evaluate with the minimal truncation whose tail radius is at most eps.

    Raises:
        BudgetExceededError: if the required truncation exceeds the term
            budget; the error reports the required N instead of silently
            truncating.
    """
    n = required_terms(stream.model.max_abs_float, x, eps)
    limit = term_budget(budget)
    if n > limit:
        raise BudgetExceededError(n, limit, context=f"eval_to_eps at x={x!r}")
    return eval_truncated(stream, x, n)


def partial_sums(prefix: FinitePrefix) -> tuple[Fraction, ...]:
    """Exact partial sums S_1..S_N of the prefix coordinates."""
    return tuple(accumulate(prefix.values))


def eval_abel_form(prefix: FinitePrefix, x):
    """Partial-summation form sum S_n (x^n - x^(n+1)) + S_N x^(N+1).

    Algebraically identical to the direct truncated sum; with a Fraction
    argument the identity is exact, with a float argument both forms agree to
    rounding error.
    """
    n = len(prefix)
    if isinstance(x, Fraction):
        if not (0 <= x < 1):
            raise ValueError(f"x must lie in [0, 1), got {x}")
        s = partial_sums(prefix)
        total = sum((s[i] * (x ** (i + 1) - x ** (i + 2)) for i in range(n)), Fraction(0))
        return total + s[-1] * x ** (n + 1)
    x = _check_x(x)
    if x == 0.0:
        return 0.0
    sums = np.cumsum(prefix.floats)
    powers = np.cumprod(np.full(n, x))
    core = float(np.sum(sums * powers)) * (1.0 - x)
    return core + float(sums[-1]) * x ** (n + 1)


@dataclass(frozen=True)
class WalkLowerBound:
    """Outcome of the partial-sum positivity check behind the Abel lower bound."""

    threshold: Fraction
    bound: float
    holds: bool
    first_violation: Optional[int]


def lower_bound_from_positive_walk(
    prefix: FinitePrefix, x: float, m: int, min_value=None
) -> WalkLowerBound:
    """Certified lower bound m*minD*x for the Abel form, when every S_l > m*minD.

    The partial-sum comparison is exact (rationals); the returned bound is
    rounded downward.  If the precondition fails, ``first_violation`` is the
    first index l with S_l <= m*minD and the bound is not certified.
    """
    x = float(x)
    if not (0.0 < x < 1.0):
        raise ValueError(f"x must lie in (0, 1), got {x!r}")
    threshold = m * (Fraction(min_value) if min_value is not None else prefix.model.min_value)
    first_violation = None
    s = Fraction(0)
    for l, a in enumerate(prefix.values, start=1):
        s += a
        if s <= threshold:
            first_violation = l
            break
    bound = float(threshold) * x
    bound = math.nextafter(math.nextafter(bound, -math.inf), -math.inf)
    return WalkLowerBound(threshold, bound, first_violation is None, first_violation)

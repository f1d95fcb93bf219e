"""Finite coefficient sets with exact rational weights, and reproducible streams.

Values are parsed from exact decimal (or ``p/q``) strings into rationals; all
sign classifications use rational arithmetic while series evaluation uses the
float mirrors.  Streams are counter-based: the n-th coefficient is a pure
function of (master_seed, sample_index, n), so any coefficient is computable
in O(1) without replaying the stream, and parallel workers cannot perturb it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ConfigError

__all__ = [
    "CoefficientModel",
    "FinitePrefix",
    "MeanSign",
    "PatchedStream",
    "PatternStream",
    "SequenceStream",
    "parse_model",
]

RationalLike = Union[int, str, Fraction]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xD1B54A32D192ED03


def _mix64(z: int) -> int:
    """SplitMix64 finalizer; bijective on 64-bit integers."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def _to_fraction(v: RationalLike, what: str) -> Fraction:
    if isinstance(v, float):
        raise ConfigError(
            f"{what}: pass exact decimal strings (or Fractions), not floats: {v!r}"
        )
    try:
        return Fraction(str(v).strip()) if isinstance(v, str) else Fraction(v)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{what}: cannot parse {v!r} as an exact rational") from exc


class MeanSign(enum.Enum):
    POSITIVE = "Positive"
    ZERO = "Zero"
    NEGATIVE = "Negative"


@dataclass(frozen=True)
class CoefficientModel:
    """A finite coefficient set d_1..d_k with positive weights summing to 1.

    ``values`` keeps the user's listing order, which fixes both the cyclic
    permutation used by :mod:`randseries.symmetry` and the distinguished pair
    (d_1, d_2) used by the sum-shifting matchings.
    """

    values: tuple[Fraction, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.values) < 2:
            raise ConfigError("need at least two coefficient values (k >= 2)")
        if len(set(self.values)) != len(self.values):
            raise ConfigError("coefficient values must be pairwise distinct")
        if len(self.weights) != len(self.values):
            raise ConfigError("need exactly one weight per value")
        if any(w <= 0 for w in self.weights):
            raise ConfigError("all weights must be positive")
        if sum(self.weights) != 1:
            raise ConfigError("weights must sum to 1 exactly")

    @classmethod
    def create(
        cls,
        values: Iterable[RationalLike],
        weights: Iterable[RationalLike] | None = None,
    ) -> "CoefficientModel":
        vals = tuple(_to_fraction(v, "value") for v in values)
        if weights is None:
            k = len(vals)
            if k == 0:
                raise ConfigError("empty value list")
            wts = (Fraction(1, k),) * k
        else:
            wts = tuple(_to_fraction(w, "weight") for w in weights)
        return cls(vals, wts)

    # -- basic structure ---------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.values)

    @cached_property
    def floats(self) -> np.ndarray:
        """Float mirrors of the exact values (read-only)."""
        arr = np.array([float(v) for v in self.values], dtype=np.float64)
        arr.flags.writeable = False
        return arr

    @cached_property
    def is_uniform(self) -> bool:
        return len(set(self.weights)) == 1

    @cached_property
    def max_abs(self) -> Fraction:
        return max(abs(v) for v in self.values)

    @property
    def max_abs_float(self) -> float:
        return float(self.max_abs)

    @cached_property
    def min_value(self) -> Fraction:
        return min(self.values)

    @cached_property
    def max_value(self) -> Fraction:
        return max(self.values)

    @cached_property
    def coefficient_sum(self) -> Fraction:
        return sum(self.values, Fraction(0))

    def mean(self) -> Fraction:
        """Expected value of one coefficient, exactly."""
        return sum((w * v for v, w in zip(self.values, self.weights)), Fraction(0))

    def mean_sign(self) -> MeanSign:
        m = self.mean()
        if m > 0:
            return MeanSign.POSITIVE
        if m < 0:
            return MeanSign.NEGATIVE
        return MeanSign.ZERO

    @cached_property
    def _index_map(self) -> dict:
        m: dict = {}
        for j, v in enumerate(self.values):
            m[v] = j
        for j, v in enumerate(self.values):
            fm = float(v)
            if fm in m and m[fm] != j:
                raise ConfigError(
                    f"float mirror of value {v} collides with another value"
                )
            m[fm] = j
        return m

    def index_of(self, value) -> int:
        """Index of a value given exactly or as its float mirror."""
        try:
            return self._index_map[value]
        except (KeyError, TypeError):
            raise ConfigError(f"{value!r} is not a member of the coefficient set")

    def integer_scaled(self) -> tuple[tuple[int, ...], int]:
        """Values scaled by a common denominator, for exact integer partial sums."""
        den = 1
        for v in self.values:
            den = den * v.denominator // math.gcd(den, v.denominator)
        return tuple(int(v * den) for v in self.values), den

    # -- sampling ----------------------------------------------------------

    @cached_property
    def _thresholds(self) -> tuple[int, ...]:
        """Cumulative-weight boundaries on the 64-bit dyadic grid.

        A uniform draw u picks index ``#{t : t <= u}``; strict comparison
        against ceil(cum * 2^64) realises ``u/2^64 < cum`` exactly, so the
        selection is a pure function of u with no float rounding involved.
        """
        ts = []
        cum = Fraction(0)
        for w in self.weights[:-1]:
            cum += w
            ts.append(-((-cum.numerator << 64) // cum.denominator))
        if any(b <= a for a, b in zip([0] + ts, ts + [1 << 64])):
            raise ConfigError("weights are finer than the 64-bit sampling grid")
        return tuple(ts)

    @cached_property
    def _thresholds_array(self) -> np.ndarray:
        return np.array(self._thresholds, dtype=np.uint64)

    def _index_from_draw(self, u: int) -> int:
        j = 0
        for t in self._thresholds:
            if u >= t:
                j += 1
        return j

    def spec_string(self) -> str:
        return ",".join(str(v) for v in self.values)

    def weights_string(self) -> str:
        return ",".join(str(w) for w in self.weights)


def parse_model(set_spec: str, weights_spec: str | None = None) -> CoefficientModel:
    """Parse ``--set "-1,1"`` / ``--weights "1/4,3/4"`` style specifications."""
    values = [s for s in (p.strip() for p in set_spec.split(",")) if s]
    if not values:
        raise ConfigError("empty coefficient set specification")
    weights = None
    if weights_spec is not None:
        weights = [s for s in (p.strip() for p in weights_spec.split(",")) if s]
    return CoefficientModel.create(values, weights)


@dataclass(frozen=True)
class FinitePrefix:
    """The first N coordinates of a coefficient sequence, stored as value indices."""

    model: CoefficientModel
    indices: tuple[int, ...]

    def __post_init__(self):
        k = self.model.k
        if any(not (0 <= i < k) for i in self.indices):
            raise ConfigError("prefix index outside the coefficient set")

    def __len__(self) -> int:
        return len(self.indices)

    @cached_property
    def values(self) -> tuple[Fraction, ...]:
        vals = self.model.values
        return tuple(vals[i] for i in self.indices)

    @cached_property
    def floats(self) -> np.ndarray:
        arr = self.model.floats[np.array(self.indices, dtype=np.intp)]
        arr.flags.writeable = False
        return arr

    def float_coefficients(self, n_terms: int) -> np.ndarray:
        if n_terms > len(self.indices):
            raise ValueError(f"prefix has only {len(self.indices)} coordinates")
        return self.floats[:n_terms]

    def head(self, n_terms: int) -> "FinitePrefix":
        return FinitePrefix(self.model, self.indices[:n_terms])

    @classmethod
    def from_values(cls, model: CoefficientModel, values: Sequence) -> "FinitePrefix":
        return cls(model, tuple(model.index_of(v) for v in values))


class SequenceStream:
    """Deterministic infinite coefficient sequence keyed by (seed, sample index).

    Immutable apart from an internal, monotonically growing cache of float
    coefficients; regenerating any prefix yields bit-identical values.
    """

    def __init__(self, model: CoefficientModel, master_seed: int, sample_index: int = 0):
        if sample_index < 0:
            raise ConfigError("sample_index must be nonnegative")
        self.model = model
        self.master_seed = int(master_seed)
        self.sample_index = int(sample_index)
        self._key = _mix64(_mix64(self.master_seed) ^ ((self.sample_index * _STREAM_SALT) & _MASK64))
        self._floats = np.empty(0, dtype=np.float64)

    def __repr__(self):
        return (
            f"SequenceStream(set=[{self.model.spec_string()}], "
            f"seed={self.master_seed}, index={self.sample_index})"
        )

    def draw_at(self, n: int) -> int:
        """Raw 64-bit uniform draw behind the n-th coefficient (n >= 1)."""
        return _mix64((self._key + n * _GOLDEN) & _MASK64)

    def index_at(self, n: int) -> int:
        return self.model._index_from_draw(self.draw_at(n))

    def value_at(self, n: int) -> Fraction:
        return self.model.values[self.index_at(n)]

    def _indices_range(self, lo: int, hi: int) -> np.ndarray:
        """Value indices for coefficients lo..hi-1 (1-based, half-open)."""
        ns = np.arange(lo, hi, dtype=np.uint64)
        u = _mix64_array(np.uint64(self._key) + ns * np.uint64(_GOLDEN))
        return np.searchsorted(self.model._thresholds_array, u, side="right")

    def index_array(self, n_terms: int) -> np.ndarray:
        """Value indices of coefficients a_1..a_N as an array."""
        return self._indices_range(1, n_terms + 1)

    def float_coefficients(self, n_terms: int) -> np.ndarray:
        """Float mirrors of coefficients a_1..a_N as a read-only array view."""
        have = self._floats.shape[0]
        if n_terms > have:
            idx = self._indices_range(have + 1, n_terms + 1)
            grown = np.concatenate([self._floats, self.model.floats[idx]])
            grown.flags.writeable = False
            self._floats = grown
        return self._floats[:n_terms]

    def index_prefix(self, n_terms: int) -> tuple[int, ...]:
        return tuple(int(i) for i in self._indices_range(1, n_terms + 1))

    def prefix(self, n_terms: int) -> FinitePrefix:
        if n_terms < 1:
            raise ConfigError("prefix length must be >= 1")
        return FinitePrefix(self.model, self.index_prefix(n_terms))


class PatternStream:
    """Deterministic stream cycling a fixed pattern of value indices (test helper)."""

    def __init__(self, model: CoefficientModel, pattern: Sequence[int]):
        if not pattern:
            raise ConfigError("empty pattern")
        if any(not (0 <= i < model.k) for i in pattern):
            raise ConfigError("pattern index outside the coefficient set")
        self.model = model
        self.pattern = tuple(int(i) for i in pattern)

    def index_at(self, n: int) -> int:
        return self.pattern[(n - 1) % len(self.pattern)]

    def index_prefix(self, n_terms: int) -> tuple[int, ...]:
        reps = -(-n_terms // len(self.pattern))
        return (self.pattern * reps)[:n_terms]

    def float_coefficients(self, n_terms: int) -> np.ndarray:
        idx = np.array(self.index_prefix(n_terms), dtype=np.intp)
        return self.model.floats[idx]

    def prefix(self, n_terms: int) -> FinitePrefix:
        return FinitePrefix(self.model, self.index_prefix(n_terms))


class PatchedStream:
    """A stream whose first coordinates are overridden by a fixed head."""

    def __init__(self, base, head_indices: Sequence[int]):
        self.model = base.model
        self.base = base
        self.head_indices = tuple(int(i) for i in head_indices)
        if any(not (0 <= i < self.model.k) for i in self.head_indices):
            raise ConfigError("head index outside the coefficient set")

    def index_at(self, n: int) -> int:
        if n <= len(self.head_indices):
            return self.head_indices[n - 1]
        return self.base.index_at(n)

    def index_prefix(self, n_terms: int) -> tuple[int, ...]:
        head = self.head_indices[:n_terms]
        if n_terms <= len(head):
            return head
        return head + self.base.index_prefix(n_terms)[len(head):]

    def float_coefficients(self, n_terms: int) -> np.ndarray:
        out = np.array(self.base.float_coefficients(n_terms), dtype=np.float64, copy=True)
        h = min(len(self.head_indices), n_terms)
        if h:
            out[:h] = self.model.floats[np.array(self.head_indices[:h], dtype=np.intp)]
        return out

    def prefix(self, n_terms: int) -> FinitePrefix:
        return FinitePrefix(self.model, self.index_prefix(n_terms))

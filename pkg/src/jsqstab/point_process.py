"""Governing sequences and the point processes built from them.

Every model in the package is driven by finite, horizon-truncated event
streams.  A stream is the partial-sum image of a governing sequence of
durations; counting, thinning and superposition act on streams.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError

KINDS = ("exponential", "deterministic", "uniform", "empirical")


def derive_seed(root: int, label: str) -> int:
    """Sub-seed for the stream ``label`` of an experiment seeded with ``root``.

    ``sha256(f"{root}:{label}")`` truncated to 64 bits.  Labels used by the
    simulator are e.g. ``"dedicated"``, ``"service:0"``, ``"route:1"``.
    """
    digest = hashlib.sha256(f"{int(root)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Distribution:
    """A law for i.i.d. positive durations.

    ``params`` depends on ``kind``:

    * exponential: ``(rate,)``
    * deterministic: ``(period,)``
    * uniform: ``(low, high)``
    * empirical: ``(values, probs)`` as tuples
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        p = self.params
        if self.kind == "exponential":
            if len(p) != 1 or not p[0] > 0 or not math.isfinite(p[0]):
                raise ParameterError("exponential needs rate > 0")
        elif self.kind == "deterministic":
            if len(p) != 1 or not p[0] > 0 or not math.isfinite(p[0]):
                raise ParameterError("deterministic needs period > 0")
        elif self.kind == "uniform":
            if len(p) != 2 or not 0 < p[0] < p[1] or not math.isfinite(p[1]):
                raise ParameterError("uniform needs 0 < low < high")
        else:
            values, probs = p
            if len(values) == 0 or len(values) != len(probs):
                raise ParameterError("empirical needs matching non-empty values/probs")
            if min(values) <= 0:
                raise ParameterError("empirical values must be positive")
            if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-12:
                raise ParameterError("empirical probs must be a probability vector")

    @property
    def mean(self) -> float:
        p = self.params
        if self.kind == "exponential":
            return 1.0 / p[0]
        if self.kind == "deterministic":
            return float(p[0])
        if self.kind == "uniform":
            return 0.5 * (p[0] + p[1])
        return float(np.dot(p[0], p[1]))

    @property
    def rate(self) -> float:
        """Long-run event rate of the renewal stream, ``1 / mean``."""
        return 1.0 / self.mean

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        p = self.params
        if self.kind == "exponential":
            return rng.exponential(1.0 / p[0], size=n)
        if self.kind == "deterministic":
            return np.full(n, float(p[0]))
        if self.kind == "uniform":
            return rng.uniform(p[0], p[1], size=n)
        idx = np.searchsorted(np.cumsum(p[1]), rng.random(n), side="right")
        return np.asarray(p[0], dtype=float)[np.minimum(idx, len(p[0]) - 1)]

    def to_dict(self) -> dict:
        p = self.params
        if self.kind == "exponential":
            return {"kind": "exponential", "rate": p[0]}
        if self.kind == "deterministic":
            return {"kind": "deterministic", "period": p[0]}
        if self.kind == "uniform":
            return {"kind": "uniform", "low": p[0], "high": p[1]}
        return {"kind": "empirical", "values": list(p[0]), "probs": list(p[1])}

    @classmethod
    def from_dict(cls, d: dict) -> "Distribution":
        kind = d.get("kind")
        try:
            if kind == "exponential":
                return exponential(d["rate"])
            if kind == "deterministic":
                return deterministic(d["period"])
            if kind == "uniform":
                return uniform(d["low"], d["high"])
            if kind == "empirical":
                return empirical(d["values"], d["probs"])
        except KeyError as exc:
            raise ParameterError(f"{kind} distribution is missing {exc}") from None
        raise ParameterError(f"unknown distribution kind {kind!r}")


def exponential(rate: float) -> Distribution:
    return Distribution("exponential", (float(rate),))


def deterministic(period: float) -> Distribution:
    return Distribution("deterministic", (float(period),))


def uniform(low: float, high: float) -> Distribution:
    return Distribution("uniform", (float(low), float(high)))


def empirical(values: Sequence[float], probs: Sequence[float]) -> Distribution:
    return Distribution(
        "empirical", (tuple(float(v) for v in values), tuple(float(q) for q in probs))
    )


@dataclass(frozen=True)
class GoverningSequence:
    """Raw durations from which epochs are built by partial sums.

    ``kind`` names the generating law.  Difference sequences (which may be
    negative) carry a kind ending in ``"-difference"``.
    """

    durations: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "durations", _frozen(self.durations))
        if self.durations.ndim != 1:
            raise ParameterError("durations must be one-dimensional")
        if not self.is_difference and np.any(self.durations <= 0):
            raise DomainError("arrival/service durations must be positive")

    @property
    def is_difference(self) -> bool:
        return self.kind.endswith("-difference")

    def __len__(self) -> int:
        return len(self.durations)


@dataclass(frozen=True)
class EventStream:
    """Sorted event epochs with optional positive integer marks.

    Epochs are non-decreasing and strictly after ``origin``.  Streams built
    from a single governing sequence are strictly increasing; ties only
    arise from :func:`superpose`.
    """

    epochs: np.ndarray
    marks: np.ndarray | None = None
    origin: float = 0.0
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        epochs = _frozen(self.epochs)
        object.__setattr__(self, "epochs", epochs)
        if epochs.ndim != 1:
            raise ParameterError("epochs must be one-dimensional")
        if len(epochs):
            if np.any(np.diff(epochs) < 0):
                raise ParameterError("epochs must be sorted")
            if epochs[0] <= self.origin:
                raise ParameterError("epochs must lie after the origin")
        if self.marks is not None:
            marks = _frozen(self.marks, dtype=np.int64)
            if marks.shape != epochs.shape:
                raise ParameterError("marks must match epochs in length")
            if len(marks) and marks.min() < 1:
                raise ParameterError("marks must be >= 1")
            object.__setattr__(self, "marks", marks)
            object.__setattr__(self, "_cum", _frozen(np.cumsum(marks), dtype=np.int64))
        else:
            object.__setattr__(self, "_cum", None)
        object.__setattr__(self, "origin", float(self.origin))

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def weights(self) -> np.ndarray:
        """Marks, or ones for an unmarked stream."""
        if self.marks is None:
            return np.ones(len(self.epochs), dtype=np.int64)
        return self.marks

    def count_at(self, t: float) -> int:
        return count_at(self, t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        if self.origin != other.origin or not np.array_equal(self.epochs, other.epochs):
            return False
        return np.array_equal(self.weights, other.weights)

    __hash__ = None


@dataclass(frozen=True)
class RateEstimate:
    horizon: float
    count: int
    rate: float


def gen_renewal(dist: Distribution, horizon: float, seed: int, origin: float = 0.0) -> EventStream:
    """Renewal stream with i.i.d. ``dist`` gaps, truncated at ``origin + horizon``."""
    if not horizon > 0 or not math.isfinite(horizon):
        raise ParameterError("horizon must be a positive finite number")
    rng = np.random.default_rng(seed)
    expected = horizon / dist.mean
    chunk = int(expected + 6.0 * math.sqrt(expected) + 16)
    parts = []
    total = 0.0
    while total <= horizon:
        gaps = dist.sample(rng, chunk)
        sums = total + np.cumsum(gaps)
        parts.append(sums)
        total = sums[-1]
        chunk = max(16, chunk // 4)
    epochs = np.concatenate(parts)
    epochs = epochs[: np.searchsorted(epochs, horizon, side="right")]
    return EventStream(origin + epochs, origin=origin)


def gen_alternating_uniform(
    b: float,
    n: int,
    variant: str = "plain",
    seed: int = 0,
    first: float | None = None,
) -> GoverningSequence:
    """Sign-alternating difference sequence with a uniform first term.

    ``X_1 ~ U[-b, b]`` (or ``first`` if given) and ``X_{i+1} = -X_i``.  The
    ``"repeated-first"`` variant sets ``X_2 = X_1`` before alternating.
    """
    if not b > 0:
        raise ParameterError("b must be positive")
    if n < 1:
        raise ParameterError("n must be >= 1")
    if variant not in ("plain", "repeated-first"):
        raise ParameterError(f"unknown variant {variant!r}")
    x1 = float(np.random.default_rng(seed).uniform(-b, b)) if first is None else float(first)
    if abs(x1) > b:
        raise ParameterError("first term must lie in [-b, b]")
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    if variant == "repeated-first" and n > 1:
        signs[1:] = -signs[1:]
        signs[1] = 1.0
    return GoverningSequence(x1 * signs, kind=f"alternating-uniform-{variant}-difference")


def cumulate(seq: GoverningSequence, origin: float = 0.0) -> EventStream:
    if seq.is_difference or np.any(seq.durations <= 0):
        raise DomainError("only positive durations can be cumulated into epochs")
    return EventStream(origin + np.cumsum(seq.durations), origin=origin)


def count_at(stream: EventStream, t: float) -> int:
    """``A(t)``: number (or mark-sum) of epochs ``<= t``."""
    k = int(np.searchsorted(stream.epochs, t, side="right"))
    if stream.marks is None or k == 0:
        return k
    return int(stream._cum[k - 1])


def thin(stream: EventStream, probs: Sequence[float], seed: int) -> list[EventStream]:
    """Split ``stream`` by independent categorical draws over ``probs``."""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or len(probs) == 0 or np.any(probs < 0):
        raise ParameterError("probs must be a non-negative vector")
    if abs(probs.sum() - 1.0) > 1e-12:
        raise ParameterError(f"probs sum to {probs.sum()!r}, not 1")
    labels = categorical(np.random.default_rng(seed).random(len(stream)), probs)
    out = []
    for j in range(len(probs)):
        sel = labels == j
        marks = None if stream.marks is None else stream.marks[sel]
        out.append(EventStream(stream.epochs[sel], marks, stream.origin))
    return out


def categorical(u: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Inverse-CDF categorical labels for uniforms ``u``; zero-probability
    categories are never chosen."""
    cdf = np.cumsum(probs)
    labels = np.searchsorted(cdf, u, side="right")
    # guard against cdf[-1] < 1 from rounding
    last = int(np.flatnonzero(probs > 0)[-1])
    return np.minimum(labels, last)


def superpose(streams: Sequence[EventStream]) -> EventStream:
    """Sorted merge; ties across inputs are kept, ordered by input index."""
    if not streams:
        return EventStream(np.empty(0))
    origin = streams[0].origin
    if any(s.origin != origin for s in streams):
        raise ParameterError("superposed streams must share an origin")
    epochs = np.concatenate([s.epochs for s in streams])
    order = np.argsort(epochs, kind="stable")
    marks = None
    if any(s.marks is not None for s in streams):
        marks = np.concatenate([s.weights for s in streams])[order]
    return EventStream(epochs[order], marks, origin)


def estimate_rate(stream: EventStream, t: float) -> RateEstimate:
    if not t > stream.origin:
        raise ParameterError("rate needs t after the stream origin")
    horizon = t - stream.origin
    count = count_at(stream, t)
    return RateEstimate(horizon, count, count / horizon)

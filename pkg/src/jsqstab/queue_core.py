"""Single-queue sample paths.

Three disciplines share one arrival stream and one governing service
sequence:

* autonomous service (Q1): the server acts at its own epochs and removes a
  customer only if one is present;
* the usual FIFO single-server queue (Q2);
* delayed departures (Q3): service points mark service *starts*, so a
  customer arriving to an empty system waits until the next point.

At an epoch shared by an arrival and a departure point the departure is
processed first, so it sees the left limit ``Q(s-)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError
from .point_process import EventStream, GoverningSequence, cumulate

_DEP, _ARR = 0, 1


@dataclass(frozen=True)
class QueuePath:
    """Right-continuous piecewise-constant integer path.

    The level ``levels[k]`` holds on ``[times[k], times[k + 1])``.  The first
    breakpoint is the origin with level 0 and consecutive levels differ.
    """

    times: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        levels = np.array(self.levels, dtype=np.int64)
        if times.shape != levels.shape or times.ndim != 1 or len(times) == 0:
            raise ParameterError("a path needs matching, non-empty times and levels")
        if np.any(np.diff(times) <= 0):
            raise ParameterError("breakpoint times must be strictly increasing")
        if levels[0] != 0 or np.any(levels < 0):
            raise ParameterError("paths start at level 0 and stay non-negative")
        if np.any(np.diff(levels) == 0):
            raise ParameterError("redundant breakpoint")
        times.setflags(write=False)
        levels.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "levels", levels)

    @property
    def origin(self) -> float:
        return float(self.times[0])

    @classmethod
    def from_steps(cls, origin: float, times, levels) -> "QueuePath":
        """Build a path from the level after each processed event.

        Several events may share an epoch; the last level recorded there is
        the right-continuous value.  Steps that leave the level unchanged are
        dropped.
        """
        times = np.concatenate([[origin], np.asarray(times, dtype=float)])
        levels = np.concatenate([[0], np.asarray(levels, dtype=np.int64)])
        last = np.ones(len(times), dtype=bool)
        last[:-1] = times[1:] != times[:-1]
        times, levels = times[last], levels[last]
        if len(times) and times[0] != origin:
            times = np.concatenate([[origin], times])
            levels = np.concatenate([[0], levels])
        keep = np.ones(len(times), dtype=bool)
        keep[1:] = levels[1:] != levels[:-1]
        return cls(times[keep], levels[keep])

    def level_at(self, t) -> np.ndarray | int:
        idx = np.searchsorted(self.times, t, side="right") - 1
        out = np.where(idx >= 0, self.levels[np.maximum(idx, 0)], 0)
        return int(out) if np.ndim(out) == 0 else out

    def level_left(self, t) -> np.ndarray | int:
        """Left limit ``Q(t-)``."""
        idx = np.searchsorted(self.times, t, side="left") - 1
        out = np.where(idx >= 0, self.levels[np.maximum(idx, 0)], 0)
        return int(out) if np.ndim(out) == 0 else out

    def __eq__(self, other) -> bool:
        if not isinstance(other, QueuePath):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(
            self.levels, other.levels
        )

    __hash__ = None


@dataclass
class CoupledComparison:
    epochs: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    max_q3_minus_q1: int
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    paths: tuple = field(default=(), repr=False)

    def summary(self) -> dict:
        return {
            "max_q3_minus_q1": int(self.max_q3_minus_q1),
            "violations": [[float(t), d] for t, d in self.violations],
            "notes": list(self.notes),
        }


def _check_pair(arrivals: EventStream, departures: EventStream):
    if arrivals.origin != departures.origin:
        raise ParameterError("arrival and departure streams must share an origin")


def _truncate(stream: EventStream, horizon: float | None) -> EventStream:
    if horizon is None:
        return stream
    k = int(np.searchsorted(stream.epochs, horizon, side="right"))
    marks = None if stream.marks is None else stream.marks[:k]
    return EventStream(stream.epochs[:k], marks, stream.origin)


def merge_events(arr_epochs: np.ndarray, dep_epochs: np.ndarray):
    """Merged ``(times, kinds, index)`` with departures first at shared epochs.

    ``kinds`` is 0 for a departure point and 1 for an arrival; ``index`` is
    the position within the originating stream.
    """
    times = np.concatenate([dep_epochs, arr_epochs])
    kinds = np.concatenate(
        [np.full(len(dep_epochs), _DEP), np.full(len(arr_epochs), _ARR)]
    )
    index = np.concatenate([np.arange(len(dep_epochs)), np.arange(len(arr_epochs))])
    order = np.lexsort((kinds, times))
    return times[order], kinds[order], index[order]


def simulate_autonomous(
    arrivals: EventStream, departures: EventStream, horizon: float | None = None
) -> QueuePath:
    """Queue with autonomous service: ``Q(t) = A(t) - int 1{Q(s-)>0} dD(s)``."""
    _check_pair(arrivals, departures)
    if arrivals.marks is not None or departures.marks is not None:
        raise ParameterError("autonomous simulator takes unmarked streams")
    arrivals, departures = _truncate(arrivals, horizon), _truncate(departures, horizon)
    times, kinds, _ = merge_events(arrivals.epochs, departures.epochs)
    levels = np.empty(len(times), dtype=np.int64)
    q = 0
    for k, kind in enumerate(kinds.tolist()):
        if kind == _ARR:
            q += 1
        elif q > 0:
            q -= 1
        levels[k] = q
    return QueuePath.from_steps(arrivals.origin, times, levels)


def fifo_departures(arrival_epochs: np.ndarray, services: np.ndarray) -> np.ndarray:
    """Departure epochs of a FIFO single server, ``d_n = max(t_n, d_{n-1}) + s_n``.

    Customers without a service duration never leave (``inf``).
    """
    n = len(arrival_epochs)
    out = np.full(n, np.inf)
    d = -np.inf
    for k in range(min(n, len(services))):
        d = max(arrival_epochs[k], d) + services[k]
        out[k] = d
    return out


def _path_from_departures(origin: float, arrival_epochs, dep_epochs) -> QueuePath:
    dep_epochs = np.asarray(dep_epochs)
    dep_epochs = dep_epochs[np.isfinite(dep_epochs)]
    times, kinds, _ = merge_events(np.asarray(arrival_epochs), np.sort(dep_epochs))
    steps = np.where(kinds == _ARR, 1, -1)
    return QueuePath.from_steps(origin, times, np.cumsum(steps))


def simulate_standard(
    interarrivals: GoverningSequence, services: GoverningSequence
) -> QueuePath:
    """Usual FIFO queue: the n-th customer served receives ``services[n]``."""
    for seq in (interarrivals, services):
        if seq.is_difference or np.any(seq.durations <= 0):
            raise DomainError("durations must be positive")
    arr = cumulate(interarrivals).epochs
    return _path_from_departures(0.0, arr, fifo_departures(arr, services.durations))


def _delayed_run(arr: np.ndarray, pts: np.ndarray):
    """Delayed-departure dynamics.

    Returns per-event levels, the merged event arrays, and per-customer
    service (start, end) epochs (``nan`` where not reached).
    """
    times, kinds, _ = merge_events(arr, pts)
    levels = np.empty(len(times), dtype=np.int64)
    start = np.full(len(arr), np.nan)
    end = np.full(len(arr), np.nan)
    q = 0
    waiting_start = False  # head customer arrived to an empty system, not yet in service
    head = 0  # index of the customer at the head of the line
    for k, kind in enumerate(kinds.tolist()):
        t = times[k]
        if kind == _ARR:
            if q == 0:
                waiting_start = True
            q += 1
        elif waiting_start:
            waiting_start = False
            start[head] = t
        elif q > 0:
            end[head] = t
            head += 1
            q -= 1
            if q > 0:
                start[head] = t
        levels[k] = q
    return times, levels, start, end


def simulate_delayed(
    arrivals: EventStream, service_points: EventStream, horizon: float | None = None
) -> QueuePath:
    """Queue whose service points start services instead of ending them.

    A point is skipped (no decrement) when it is the first point after an
    arrival into an empty system; otherwise the level drops by one if
    positive.
    """
    _check_pair(arrivals, service_points)
    if arrivals.marks is not None or service_points.marks is not None:
        raise ParameterError("delayed simulator takes unmarked streams")
    arrivals = _truncate(arrivals, horizon)
    service_points = _truncate(service_points, horizon)
    times, levels, _, _ = _delayed_run(arrivals.epochs, service_points.epochs)
    return QueuePath.from_steps(arrivals.origin, times, levels)


def reflect(arrivals: EventStream, departures: EventStream, c: int = 1) -> QueuePath:
    """Skorokhod reflection ``X(t) - min(0, inf_{s<=t} X(s))`` of ``X = A - cD``.

    The running infimum is taken over every processed event, in the same
    departure-first order as the simulators.  For ``c > 1`` this path is a
    diagnostic only; it need not coincide with the batch simulator.
    """
    _check_pair(arrivals, departures)
    if c < 1:
        raise ParameterError("c must be >= 1")
    times, kinds, idx = merge_events(arrivals.epochs, departures.epochs)
    steps = np.full(len(times), -int(c), dtype=np.int64)
    is_arr = kinds == _ARR
    steps[is_arr] = arrivals.weights[idx[is_arr]]
    if len(steps) == 0:
        return QueuePath.from_steps(arrivals.origin, [], [])
    x = np.cumsum(steps)
    running_inf = np.minimum(np.minimum.accumulate(x), 0)
    return QueuePath.from_steps(arrivals.origin, times, x - running_inf)


def simulate_batch_autonomous(
    arrivals: EventStream,
    departures: EventStream,
    c: int,
    horizon: float | None = None,
) -> QueuePath:
    """Autonomous queue where each departure epoch removes up to ``c`` customers
    and each arrival adds its mark."""
    if int(c) != c or c < 1:
        raise ParameterError("batch size c must be a positive integer")
    _check_pair(arrivals, departures)
    if departures.marks is not None:
        raise ParameterError("departure stream must be unmarked; c is the batch size")
    arrivals, departures = _truncate(arrivals, horizon), _truncate(departures, horizon)
    times, kinds, idx = merge_events(arrivals.epochs, departures.epochs)
    weights = arrivals.weights.tolist()
    levels = np.empty(len(times), dtype=np.int64)
    q = 0
    c = int(c)
    for k, (kind, i) in enumerate(zip(kinds.tolist(), idx.tolist())):
        if kind == _ARR:
            q += weights[i]
        else:
            q -= min(c, q)
        levels[k] = q
    return QueuePath.from_steps(arrivals.origin, times, levels)


def compare_coupled(
    interarrivals: GoverningSequence, services: GoverningSequence
) -> CoupledComparison:
    """Run Q1, Q2 and Q3 on common governing sequences and check the ordering
    ``Q2 <= Q3`` and ``Q3 - Q1 in {0, 1}`` at every event epoch.

    Q1 and Q3 use the partial sums of ``services`` as service points.  Q2 is
    coupled to Q3 busy period by busy period: each customer receives in Q2
    the service duration it received in Q3, the only difference being that
    Q2 starts a service as soon as the server frees up.  Customers that Q3
    never serves keep their own ``services`` entry.
    """
    for seq in (interarrivals, services):
        if seq.is_difference or np.any(seq.durations <= 0):
            raise DomainError("durations must be positive")
    A = cumulate(interarrivals)
    D = cumulate(services)
    q1 = simulate_autonomous(A, D)
    _, _, start3, end3 = _delayed_run(A.epochs, D.epochs)
    q3 = simulate_delayed(A, D)

    n = len(A)
    chi = services.durations
    dep2 = np.full(n, np.inf)
    prev = -np.inf
    for k in range(n):
        begin2 = max(A.epochs[k], prev)
        if np.isfinite(end3[k]):
            # d3 - lag never exceeds d3 under rounding, unlike begin2 + (end3 - start3)
            lag = start3[k] - begin2
            prev = end3[k] - lag
        elif k < len(chi):
            prev = begin2 + chi[k]
        else:
            break
        dep2[k] = prev
    q2 = _path_from_departures(0.0, A.epochs, dep2)

    epochs = np.unique(np.concatenate([q1.times, q2.times, q3.times]))
    l1, l2, l3 = q1.level_at(epochs), q2.level_at(epochs), q3.level_at(epochs)
    violations = []
    for t in epochs[l2 > l3]:
        violations.append((float(t), "Q2 exceeds Q3"))
    diff = l3 - l1
    for t in epochs[(diff < 0) | (diff > 1)]:
        violations.append((float(t), "Q3 - Q1 outside {0, 1}"))
    violations.sort()
    notes = []
    if len(np.intersect1d(A.epochs, D.epochs)):
        notes.append(
            "arrival and service epochs coincide; departures processed before arrivals"
        )
    return CoupledComparison(
        epochs=epochs,
        q1=l1,
        q2=l2,
        q3=l3,
        max_q3_minus_q1=int(diff.max()) if len(diff) else 0,
        violations=violations,
        notes=notes,
        paths=(q1, q2, q3),
    )

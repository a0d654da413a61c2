"""Event-driven simulator for parallel autonomous servers with JSQ routing.

One engine covers the symmetric, split, per-queue-arrival and
load-balanced models: dedicated external traffic goes to a fixed queue,
opportunistic external traffic joins a currently shortest queue, and a
customer completing service either leaves, moves to a fixed queue, or
joins a shortest queue.

Order of processing at a shared epoch: service epochs (ascending server
index), then dedicated arrivals, then opportunistic arrivals.  A routed
customer arrives at the epoch of its service completion, after the
decrement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, ParameterError
from .point_process import (
    Distribution,
    EventStream,
    derive_seed,
    gen_renewal,
    superpose,
    thin,
)
from .queue_core import QueuePath

_DEP, _DED, _OPP = 0, 1, 2


@dataclass(frozen=True)
class NetworkConfig:
    """Full description of a network run.

    Either ``arrival`` with ``split`` (one dedicated stream thinned over the
    queues) or ``arrivals`` (one dedicated stream per queue) is given.
    ``routing[j][i]`` is the probability that a customer finishing at queue
    ``j`` moves to queue ``i``; ``jsq[j]`` that it joins a shortest queue.
    """

    m: int
    service: Distribution
    horizon: float
    seed: int = 0
    arrival: Distribution | None = None
    split: tuple | None = None
    arrivals: tuple | None = None
    opportunistic: Distribution | None = None
    routing: np.ndarray | None = None
    jsq: np.ndarray | None = None

    def __post_init__(self):
        m = self.m
        if int(m) != m or m < 1:
            raise ConfigurationError("m must be a positive integer")
        routing = np.zeros((m, m)) if self.routing is None else np.array(self.routing, dtype=float)
        jsq = np.zeros(m) if self.jsq is None else np.array(self.jsq, dtype=float)
        routing.setflags(write=False)
        jsq.setflags(write=False)
        object.__setattr__(self, "routing", routing)
        object.__setattr__(self, "jsq", jsq)
        if self.split is not None:
            object.__setattr__(self, "split", tuple(float(p) for p in self.split))
        if self.arrivals is not None:
            object.__setattr__(self, "arrivals", tuple(self.arrivals))
        self.validate()

    def validate(self):
        m = self.m
        if not self.horizon > 0 or not np.isfinite(self.horizon):
            raise ConfigurationError("horizon must be positive")
        if (self.arrival is None) == (self.arrivals is None):
            raise ConfigurationError("give exactly one of arrival+split or arrivals")
        if self.arrival is not None:
            split = self.split if self.split is not None else (1.0 / m,) * m
            object.__setattr__(self, "split", tuple(split))
            if len(split) != m or min(split) < 0 or abs(sum(split) - 1.0) > 1e-12:
                raise ConfigurationError(f"split must be a probability vector of length {m}")
        elif len(self.arrivals) != m:
            raise ConfigurationError(f"arrivals must list {m} distributions")
        if self.routing.shape != (m, m) or np.any(self.routing < 0):
            raise ConfigurationError("routing must be a non-negative m x m matrix")
        if self.jsq.shape != (m,) or np.any(self.jsq < 0):
            raise ConfigurationError("jsq must be a non-negative vector of length m")
        if np.any(self.routing.sum(axis=1) + self.jsq > 1.0 + 1e-12):
            raise ConfigurationError("routing row sum plus jsq probability exceeds 1")

    @property
    def symmetric(self) -> bool:
        return self.arrival is not None and np.allclose(self.split, 1.0 / self.m)


class Route(NamedTuple):
    kind: str  # "leave" | "queue" | "shortest"
    queue: int | None


def _pick_shortest(levels: Sequence[int], u: float) -> int:
    low = min(levels)
    ties = [k for k, q in enumerate(levels) if q == low]
    return ties[int(u * len(ties))] if len(ties) > 1 else ties[0]


def shortest_queue(levels: Sequence[int], rng: np.random.Generator) -> int:
    """Index of a shortest queue, uniform over ties."""
    if len(levels) == 0:
        raise ParameterError("no queues to choose from")
    return _pick_shortest(list(levels), float(rng.random()))


def _route_thresholds(routing_row, p_sh: float) -> np.ndarray:
    return np.cumsum(np.append(np.asarray(routing_row, dtype=float), p_sh))


def _resolve(cum: Sequence[float], levels, u: float, u_tie: float) -> Route:
    for i, c in enumerate(cum):
        if u < c:
            if i == len(cum) - 1:
                return Route("shortest", _pick_shortest(levels, u_tie))
            return Route("queue", i)
    return Route("leave", None)


def route_on_completion(
    j: int, levels, routing_row, p_sh_j: float, rng: np.random.Generator
) -> Route:
    """Destination of a customer completing service at queue ``j``.

    ``levels`` are the queue lengths after the departing customer has been
    removed.  Draws one uniform for the destination and one for tie-breaks.
    """
    if sum(routing_row) + p_sh_j > 1.0 + 1e-12:
        raise ParameterError(f"routing probabilities for queue {j} exceed 1")
    u, u_tie = rng.random(2)
    return _resolve(_route_thresholds(routing_row, p_sh_j), list(levels), u, u_tie)


@dataclass
class NetworkTrajectory:
    """Paths and logged point processes of one network run (0-based queues)."""

    horizon: float
    paths: list
    dedicated: list  # external dedicated arrival epochs per queue
    opportunistic: list  # external opportunistic arrival epochs per queue
    internal: list  # per destination: (epochs, source) of fixed-route arrivals
    internal_opp: list  # per destination: (epochs, source) of JSQ-routed arrivals
    departures: list  # effective departure epochs per queue
    service_epochs: list  # all service epochs per server up to the horizon
    routing_tally: np.ndarray  # m x (m + 2): to queue i, to shortest, leave
    jsq_log: dict = field(repr=False, default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.paths)

    @property
    def busy_fraction(self) -> np.ndarray:
        """Used service opportunities over all service opportunities."""
        used = np.array([len(d) for d in self.departures], dtype=float)
        total = np.array([len(s) for s in self.service_epochs], dtype=float)
        return np.divide(used, total, out=np.zeros_like(used), where=total > 0)

    def arrivals_into(self, j: int) -> np.ndarray:
        parts = [self.dedicated[j], self.opportunistic[j], self.internal[j][0], self.internal_opp[j][0]]
        return np.sort(np.concatenate(parts))


def _service_streams(cfg: NetworkConfig):
    return [
        gen_renewal(cfg.service, cfg.horizon, derive_seed(cfg.seed, f"service:{j}"))
        for j in range(cfg.m)
    ]


def _dedicated_streams(cfg: NetworkConfig) -> list[EventStream]:
    if cfg.arrivals is not None:
        return [
            gen_renewal(d, cfg.horizon, derive_seed(cfg.seed, f"dedicated:{j}"))
            for j, d in enumerate(cfg.arrivals)
        ]
    base = gen_renewal(cfg.arrival, cfg.horizon, derive_seed(cfg.seed, "dedicated"))
    return thin(base, cfg.split, derive_seed(cfg.seed, "split"))


def simulate_network(cfg: NetworkConfig) -> NetworkTrajectory:
    m = cfg.m
    services = _service_streams(cfg)
    dedicated = _dedicated_streams(cfg)
    if cfg.opportunistic is not None:
        opp = gen_renewal(cfg.opportunistic, cfg.horizon, derive_seed(cfg.seed, "opportunistic"))
    else:
        opp = EventStream(np.empty(0))
    opp_tie = np.random.default_rng(derive_seed(cfg.seed, "jsq:external")).random(len(opp))
    route_u = [
        np.random.default_rng(derive_seed(cfg.seed, f"route:{j}")).random((len(services[j]), 2))
        for j in range(m)
    ]

    t_parts, k_parts, q_parts, i_parts = [], [], [], []
    for kind, streams in ((_DEP, services), (_DED, dedicated)):
        for j, s in enumerate(streams):
            t_parts.append(s.epochs)
            k_parts.append(np.full(len(s), kind))
            q_parts.append(np.full(len(s), j))
            i_parts.append(np.arange(len(s)))
    t_parts.append(opp.epochs)
    k_parts.append(np.full(len(opp), _OPP))
    q_parts.append(np.full(len(opp), -1))
    i_parts.append(np.arange(len(opp)))
    times = np.concatenate(t_parts)
    kinds = np.concatenate(k_parts)
    queues = np.concatenate(q_parts)
    index = np.concatenate(i_parts)
    order = np.lexsort((queues, kinds, times))
    times, kinds, queues, index = times[order], kinds[order], queues[order], index[order]

    cum = [_route_thresholds(cfg.routing[j], cfg.jsq[j]).tolist() for j in range(m)]
    has_route = [cum[j][-1] > 0 for j in range(m)]
    u_route = [u.tolist() for u in route_u]
    opp_tie = opp_tie.tolist()

    q = [0] * m
    step_t = [[] for _ in range(m)]
    step_q = [[] for _ in range(m)]
    opp_ext = [[] for _ in range(m)]
    internal = [([], []) for _ in range(m)]
    internal_opp = [([], []) for _ in range(m)]
    dep = [[] for _ in range(m)]
    tally = np.zeros((m, m + 2), dtype=np.int64)
    jsq_t, jsq_choice, jsq_level, jsq_min = [], [], [], []

    for t, kind, j, i in zip(times.tolist(), kinds.tolist(), queues.tolist(), index.tolist()):
        if kind == _DEP:
            if q[j] == 0:
                continue
            q[j] -= 1
            step_t[j].append(t)
            step_q[j].append(q[j])
            dep[j].append(t)
            if not has_route[j]:
                tally[j, m + 1] += 1
                continue
            u, u_tie = u_route[j][i]
            route = _resolve(cum[j], q, u, u_tie)
            if route.kind == "leave":
                tally[j, m + 1] += 1
                continue
            k = route.queue
            if route.kind == "shortest":
                tally[j, m] += 1
                jsq_t.append(t)
                jsq_choice.append(k)
                jsq_level.append(q[k])
                jsq_min.append(min(q))
                internal_opp[k][0].append(t)
                internal_opp[k][1].append(j)
            else:
                tally[j, k] += 1
                internal[k][0].append(t)
                internal[k][1].append(j)
            q[k] += 1
            step_t[k].append(t)
            step_q[k].append(q[k])
        elif kind == _DED:
            q[j] += 1
            step_t[j].append(t)
            step_q[j].append(q[j])
        else:
            k = _pick_shortest(q, opp_tie[i])
            jsq_t.append(t)
            jsq_choice.append(k)
            jsq_level.append(q[k])
            jsq_min.append(min(q))
            opp_ext[k].append(t)
            q[k] += 1
            step_t[k].append(t)
            step_q[k].append(q[k])

    paths = [QueuePath.from_steps(0.0, step_t[j], step_q[j]) for j in range(m)]
    return NetworkTrajectory(
        horizon=float(cfg.horizon),
        paths=paths,
        dedicated=[s.epochs for s in dedicated],
        opportunistic=[np.array(x) for x in opp_ext],
        internal=[(np.array(e), np.array(s, dtype=np.int64)) for e, s in internal],
        internal_opp=[(np.array(e), np.array(s, dtype=np.int64)) for e, s in internal_opp],
        departures=[np.array(d) for d in dep],
        service_epochs=[s.epochs for s in services],
        routing_tally=tally,
        jsq_log={
            "time": np.array(jsq_t),
            "chosen": np.array(jsq_choice, dtype=np.int64),
            "chosen_level": np.array(jsq_level, dtype=np.int64),
            "min_level": np.array(jsq_min, dtype=np.int64),
        },
    )


def measure_internal_rates(traj: NetworkTrajectory):
    """Empirical rates of fixed-route traffic ``(source, destination)`` and of
    JSQ-routed internal traffic into each queue."""
    if not traj.horizon > 0:
        raise ParameterError("horizon must be positive")
    m = traj.m
    fixed = np.zeros((m, m))
    for dest, (_, src) in enumerate(traj.internal):
        fixed[:, dest] = np.bincount(src, minlength=m)
    opp = np.array([len(e) for e, _ in traj.internal_opp], dtype=float)
    return fixed / traj.horizon, opp / traj.horizon


def external_arrivals(traj: NetworkTrajectory, j: int) -> EventStream:
    """External traffic actually delivered to queue ``j`` (dedicated plus
    opportunistic), as a single stream."""
    return superpose([EventStream(traj.dedicated[j]), EventStream(traj.opportunistic[j])])


def service_stream(traj: NetworkTrajectory, j: int) -> EventStream:
    return EventStream(traj.service_epochs[j])


def split_probabilities(cfg: NetworkConfig) -> np.ndarray:
    """``p_j`` of the dedicated traffic (per-queue rates normalised for the
    per-queue-arrival model)."""
    if cfg.split is not None and cfg.arrivals is None:
        return np.asarray(cfg.split)
    rates = np.array([d.rate for d in cfg.arrivals])
    return rates / rates.sum()


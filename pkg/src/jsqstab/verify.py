"""Built-in randomized property suites, run by ``jsqstab verify``.

Each suite draws seeded random instances, checks one invariant per instance
and returns a :class:`SuiteResult` listing the instances that failed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import lp as lpmod
from .point_process import (
    Distribution,
    EventStream,
    GoverningSequence,
    derive_seed,
    deterministic,
    exponential,
    gen_renewal,
    uniform,
)
from .queue_core import compare_coupled, reflect, simulate_autonomous, simulate_batch_autonomous
from .stability import ModelParams, check_lbn_lp, check_wp


@dataclass
class SuiteResult:
    name: str
    instances: int
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        # wall time is left out so that reports are byte-identical across runs
        return {
            "suite": self.name,
            "instances": self.instances,
            "failures": self.failures[:20],
            "n_failures": len(self.failures),
            "ok": self.ok,
        }


def _rng(root: int, suite: str, k: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, f"{suite}:{k}"))


def random_distribution(rng: np.random.Generator, mean: float, continuous=False) -> Distribution:
    kinds = ["exponential", "uniform"] if continuous else ["exponential", "uniform", "deterministic"]
    kind = kinds[rng.integers(len(kinds))]
    if kind == "exponential":
        return exponential(1.0 / mean)
    if kind == "uniform":
        half = mean * rng.uniform(0.05, 0.95)
        return uniform(mean - half, mean + half)
    return deterministic(mean)


def random_coupled_instance(rng: np.random.Generator, n: int = 250):
    """Interarrival and service sequences with load in roughly [0.5, 1.5]."""
    a = random_distribution(rng, 1.0)
    s = random_distribution(rng, rng.uniform(0.5, 1.5))
    return (
        GoverningSequence(a.sample(rng, n), a.kind),
        GoverningSequence(s.sample(rng, n), s.kind),
    )


def random_stream_pair(rng: np.random.Generator, horizon: float = 200.0):
    a = random_distribution(rng, 1.0, continuous=True)
    s = random_distribution(rng, rng.uniform(0.5, 1.5), continuous=True)
    seed = int(rng.integers(2**62))
    return (
        gen_renewal(a, horizon, derive_seed(seed, "arrival")),
        gen_renewal(s, horizon, derive_seed(seed, "service")),
    )


def random_lp_params(rng: np.random.Generator, zero_routing=False) -> ModelParams:
    """Random load-balanced network with ``m <= 4`` and a feasible LP."""
    m = int(rng.integers(1, 5))
    mu = float(rng.uniform(0.5, 2.0))
    lam = rng.uniform(0.0, 1.0, size=m) * mu
    lam_prime = float(rng.uniform(0.0, 1.0) * mu)
    if zero_routing:
        return ModelParams(m, float(lam.sum()), lam_prime, mu, lam_per_queue=tuple(lam))
    routing = rng.uniform(size=(m, m)) * (rng.uniform(size=(m, m)) < 0.5)
    p_sh = rng.uniform(size=m) * (rng.uniform(size=m) < 0.5)
    leave = rng.uniform(0.2, 1.0, size=m)
    total = routing.sum(axis=1) + p_sh
    scale = np.where(total > 0, (1.0 - leave) / np.maximum(total, 1e-300), 0.0)
    routing *= scale[:, None]
    p_sh *= scale
    return ModelParams(
        m, float(lam.sum()), lam_prime, mu,
        lam_per_queue=tuple(lam),
        routing=tuple(map(tuple, routing)),
        p_sh=tuple(p_sh),
    )


def suite_coupling(root: int = 0, instances: int = 1000, n: int = 250) -> SuiteResult:
    """``Q2 <= Q3`` and ``Q3 - Q1 in {0, 1}`` on coupled single queues."""
    res = SuiteResult("coupling", instances)
    for k in range(instances):
        rng = _rng(root, "coupling", k)
        cmp = compare_coupled(*random_coupled_instance(rng, n))
        if cmp.violations:
            res.failures.append({"instance": k, "first": list(cmp.violations[0])})
    return res


def suite_reflection(root: int = 0, instances: int = 1000) -> SuiteResult:
    """Autonomous-service simulator agrees with the reflection map."""
    res = SuiteResult("reflection", instances)
    for k in range(instances):
        arr, dep = random_stream_pair(_rng(root, "reflection", k))
        if simulate_autonomous(arr, dep) != reflect(arr, dep):
            res.failures.append({"instance": k})
    return res


def suite_lp(root: int = 0, instances: int = 500, tol: float = lpmod.TOL) -> SuiteResult:
    """Simplex optimum matches vertex enumeration, residuals within ``tol``."""
    res = SuiteResult("lp", instances)
    for k in range(instances):
        prob = lpmod.build_stability_lp(random_lp_params(_rng(root, "lp", k)))
        a = lpmod.solve_simplex(prob, tol)
        b = lpmod.solve_oracle(prob, tol)
        if a.status != b.status:
            res.failures.append({"instance": k, "simplex": a.status, "oracle": b.status})
        elif a.status == lpmod.OPTIMAL and (
            abs(a.objective - b.objective) > tol or a.residuals > tol
        ):
            res.failures.append({"instance": k, "simplex": a.objective, "oracle": b.objective})
    return res


def suite_bridge(root: int = 0, instances: int = 500, tol: float = lpmod.TOL) -> SuiteResult:
    """Without routing, the split-model verdict equals the LP verdict and the
    LP optimum is ``max(lam_j*, (lam + lam') / m) / mu``."""
    res = SuiteResult("bridge", instances)
    for k in range(instances):
        p = random_lp_params(_rng(root, "bridge", k), zero_routing=True)
        closed = max(float(p.lam_j.max()), (p.lam + p.lam_prime) / p.m) / p.mu
        v_wp, v_lp = check_wp(p), check_lbn_lp(p, solver=lpmod.solve_oracle)
        if v_wp.status != v_lp.status or abs(v_lp.objective - closed) > tol:
            res.failures.append(
                {"instance": k, "wp": v_wp.status, "lp": v_lp.status, "objective": v_lp.objective}
            )
    return res


def suite_batch(root: int = 0, instances: int = 200) -> SuiteResult:
    """Unit batches reproduce the autonomous queue; larger batches keep the
    path nonnegative with down-jumps of at most ``c``."""
    res = SuiteResult("batch", instances)
    for k in range(instances):
        rng = _rng(root, "batch", k)
        arr, dep = random_stream_pair(rng)
        if simulate_batch_autonomous(arr, dep, 1) != simulate_autonomous(arr, dep):
            res.failures.append({"instance": k, "c": 1})
            continue
        marks = rng.integers(1, 4, size=len(arr))
        path = simulate_batch_autonomous(EventStream(arr.epochs, marks), dep, 2)
        jumps = np.diff(np.concatenate([[0], path.levels]))
        if path.levels.min() < 0 or jumps.min() < -2:
            res.failures.append({"instance": k, "c": 2})
    return res


SUITES = {
    "coupling": suite_coupling,
    "reflection": suite_reflection,
    "lp": suite_lp,
    "bridge": suite_bridge,
    "batch": suite_batch,
}


def run_suites(root: int = 0, names=None, tol: float = lpmod.TOL) -> list[SuiteResult]:
    out = []
    for name in names or SUITES:
        fn = SUITES[name]
        t0 = time.perf_counter()
        res = fn(root, tol=tol) if name in ("lp", "bridge") else fn(root)
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out

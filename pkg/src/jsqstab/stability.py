"""Analytic stability verdicts and empirical stability diagnostics.

All analytic criteria compare a load ratio with 1.  A ratio within
``CRITICAL_TOL`` of 1 is reported as ``Critical``: the criteria are strict
inequalities and say nothing about the boundary itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lp as lpmod
from .errors import ParameterError, SolverError, UndefinedSplitError, WrongModelError

CRITICAL_TOL = 1e-9

STABLE, UNSTABLE, CRITICAL, INCONCLUSIVE = "Stable", "Unstable", "Critical", "Inconclusive"


@dataclass(frozen=True)
class ModelParams:
    """Rates and routing of a JSQ model.

    ``p`` splits a dedicated stream of total rate ``lam``; alternatively
    ``lam_per_queue`` gives one dedicated rate per queue (then ``lam`` is
    their sum).  ``routing[i][j]`` is the probability of moving from queue
    ``i`` to queue ``j`` after service, ``p_sh[i]`` of joining a shortest
    queue.
    """

    m: int
    lam: float
    lam_prime: float
    mu: float
    p: tuple | None = None
    lam_per_queue: tuple | None = None
    routing: np.ndarray | None = None
    p_sh: np.ndarray | None = None

    def __post_init__(self):
        m = self.m
        if int(m) != m or m < 1:
            raise ParameterError("m must be a positive integer")
        if self.lam_per_queue is not None:
            per = tuple(float(v) for v in self.lam_per_queue)
            if len(per) != m:
                raise ParameterError(f"lam_per_queue needs {m} entries")
            object.__setattr__(self, "lam_per_queue", per)
            object.__setattr__(self, "lam", float(sum(per)))
            object.__setattr__(self, "p", None)
        else:
            p = (1.0 / m,) * m if self.p is None else tuple(float(v) for v in self.p)
            if len(p) != m or min(p) < 0 or abs(sum(p) - 1.0) > 1e-12:
                raise ParameterError(f"p must be a probability vector of length {m}")
            object.__setattr__(self, "p", p)
        routing = np.zeros((m, m)) if self.routing is None else np.array(self.routing, dtype=float)
        p_sh = np.zeros(m) if self.p_sh is None else np.array(self.p_sh, dtype=float)
        if routing.shape != (m, m) or p_sh.shape != (m,):
            raise ParameterError("routing must be m x m and p_sh of length m")
        if np.any(routing < 0) or np.any(p_sh < 0):
            raise ParameterError("routing probabilities must be non-negative")
        if np.any(routing.sum(axis=1) + p_sh > 1.0 + 1e-12):
            raise ParameterError("routing row sum plus p_sh exceeds 1")
        if min(self.lam, self.lam_prime) < 0 or min(self.lam_j) < 0:
            raise ParameterError("rates must be non-negative")
        if not self.mu > 0:
            raise ParameterError("mu must be positive")
        routing.setflags(write=False)
        p_sh.setflags(write=False)
        object.__setattr__(self, "routing", routing)
        object.__setattr__(self, "p_sh", p_sh)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "lam_prime", float(self.lam_prime))
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def lam_j(self) -> np.ndarray:
        if self.lam_per_queue is not None:
            return np.array(self.lam_per_queue)
        return self.lam * np.array(self.p)

    @property
    def has_routing(self) -> bool:
        return bool(np.any(self.routing) or np.any(self.p_sh))

    def Lambda_j(self, rho=None) -> np.ndarray:
        """Dedicated inflow per queue, ``lam_j + mu sum_i rho_i p_ij``.

        With ``rho=None`` every server is taken as always busy.
        """
        rho = np.ones(self.m) if rho is None else np.asarray(rho, dtype=float)
        return self.lam_j + self.mu * (rho @ self.routing)

    def scaled(self, factor: float) -> "ModelParams":
        per = None if self.lam_per_queue is None else tuple(factor * v for v in self.lam_per_queue)
        return ModelParams(
            self.m,
            factor * self.lam,
            factor * self.lam_prime,
            factor * self.mu,
            p=None if per is not None else self.p,
            lam_per_queue=per,
            routing=self.routing,
            p_sh=self.p_sh,
        )


@dataclass
class Verdict:
    status: str
    theorem: str
    lambda_j: list
    Lambda_j: list | None = None
    j_star: list | None = None
    Delta: float | None = None
    Delta1: float | None = None
    Delta2: float | None = None
    rho: list | None = None
    objective: float | None = None
    q: list | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None else float(f"{float(v):.12g}")

        def vec(v):
            return None if v is None else [num(x) for x in v]

        out = {
            "status": self.status,
            "theorem": self.theorem,
            "lambda_j": vec(self.lambda_j),
            "Lambda_j": vec(self.Lambda_j),
            "j_star": None if self.j_star is None else [int(j) for j in self.j_star],
            "Delta": num(self.Delta),
            "Delta1": num(self.Delta1),
            "Delta2": num(self.Delta2),
            "rho": vec(self.rho),
            "objective": num(self.objective),
            "notes": list(self.notes),
        }
        if self.q is not None:
            out["q"] = vec(self.q)
        return out


def _argmax_set(values, tol: float = 1e-12) -> list:
    values = np.asarray(values, dtype=float)
    top = values.max()
    return [int(j) for j in np.flatnonzero(values >= top - tol * max(1.0, abs(top)))]


def _classify(load: float) -> str:
    if abs(load - 1.0) <= CRITICAL_TOL:
        return CRITICAL
    return STABLE if load < 1.0 else UNSTABLE


def _relation(load: float) -> str:
    return {STABLE: "<", UNSTABLE: ">", CRITICAL: "="}[_classify(load)]


def check_sigma(params: ModelParams) -> Verdict:
    """Symmetric model: stable iff ``(lam + lam') / m < mu``."""
    if params.has_routing:
        raise WrongModelError("routing present; use check_lbn_lp")
    if params.lam_per_queue is not None or not np.allclose(params.p, 1.0 / params.m, atol=1e-12):
        raise WrongModelError("dedicated split is not uniform; use check_wp")
    per_queue = (params.lam + params.lam_prime) / params.m
    load = per_queue / params.mu
    return Verdict(
        _classify(load),
        "T1",
        lambda_j=list(params.lam_j),
        j_star=list(range(params.m)),
        Delta=0.0,
        rho=[min(load, 1.0)] * params.m,
        objective=load,
        notes=[f"(lam + lam')/m = {per_queue:.12g} {_relation(load)} mu = {params.mu:.12g}"],
    )


def _delta(lam_j) -> tuple[list, float]:
    j_star = _argmax_set(lam_j)
    top = float(np.max(lam_j))
    return j_star, float(np.sum(top - np.asarray(lam_j)))


def compute_routing_split(params: ModelParams) -> np.ndarray:
    """Opportunistic split ``q_j = (rho - lam_j) / lam'`` that equalises the
    per-queue arrival rate at ``rho = (lam + lam') / m``."""
    if params.lam_prime <= 0:
        raise UndefinedSplitError("no opportunistic traffic to split")
    lam_j = params.lam_j
    _, delta = _delta(lam_j)
    if delta >= params.lam_prime:
        raise UndefinedSplitError(
            f"Delta = {delta:.12g} >= lam' = {params.lam_prime:.12g}: the longest queue gets q = 0"
        )
    # rho - lam_j = (lam' + sum_k (lam_k - lam_j)) / m, formed from differences
    # so that equal rates give exactly 1/m however small lam' is
    gaps = (lam_j[None, :] - lam_j[:, None]).sum(axis=1)
    return (params.lam_prime + gaps) / (params.m * params.lam_prime)


def check_wp(params: ModelParams) -> Verdict:
    """Split-arrival model without feedback.

    With ``j*`` the queues of largest dedicated rate and
    ``Delta = sum_j (lam_j* - lam_j)``: if ``Delta >= lam'`` the system is
    stable iff ``lam_j* < mu``, otherwise iff ``lam + lam' < m mu``.  At
    ``Delta = lam'`` both thresholds coincide.
    """
    if params.has_routing:
        raise WrongModelError("routing present; use check_lbn_lp")
    lam_j = params.lam_j
    j_star, delta = _delta(lam_j)
    top = float(lam_j.max())
    total = float(lam_j.sum())
    q = None
    if delta >= params.lam_prime:
        load = top / params.mu
        note = f"Delta = {delta:.12g} >= lam'; lam_j* = {top:.12g} {_relation(load)} mu = {params.mu:.12g}"
    else:
        load = (total + params.lam_prime) / (params.m * params.mu)
        note = (
            f"Delta = {delta:.12g} < lam'; lam + lam' = {total + params.lam_prime:.12g} "
            f"{_relation(load)} m mu = {params.m * params.mu:.12g}"
        )
        q = list(compute_routing_split(params))
    return Verdict(
        _classify(load),
        "T2",
        lambda_j=list(lam_j),
        Lambda_j=list(lam_j),
        j_star=j_star,
        Delta=delta,
        objective=load,
        q=q,
        notes=[note],
    )


def check_lbn_sufficient(params: ModelParams) -> Verdict:
    """Sufficient condition for the load-balanced network (never ``Unstable``).

    Uses ``Lambda_j = lam_j + mu sum_i p_ij`` and requires
    ``lam_j* >= Lambda_j`` for all ``j != j*``; otherwise ``Inconclusive``.
    """
    lam_j = params.lam_j
    Lam = params.Lambda_j()
    mu, m = params.mu, params.m
    j_star = _argmax_set(Lam)
    base = dict(lambda_j=list(lam_j), Lambda_j=list(Lam), j_star=j_star)
    chosen = next(
        (j for j in j_star if all(lam_j[j] >= Lam[i] for i in range(m) if i != j)), None
    )
    if chosen is None:
        return Verdict(
            INCONCLUSIVE, "T3", notes=["hypothesis lam_j* >= Lambda_j (j != j*) fails"], **base
        )
    top = float(Lam[chosen])
    delta1 = float(np.sum(top - lam_j))
    delta2 = float(sum(lam_j[chosen] - Lam[i] for i in range(m) if i != chosen))
    jsq_mass = mu * float(params.p_sh.sum())
    base.update(Delta1=delta1, Delta2=delta2)
    if delta2 >= params.lam_prime + jsq_mass:
        load = top / mu
        note = f"Delta2 >= lam' + mu sum p_sh; Lambda_j* = {top:.12g} {_relation(load)} mu"
    elif delta1 < params.lam_prime:
        total = params.lam + params.lam_prime + mu * (float(params.routing.sum()) + float(params.p_sh.sum()))
        load = total / (m * mu)
        note = f"Delta1 < lam'; total inflow bound {total:.12g} {_relation(load)} m mu = {m * mu:.12g}"
    else:
        return Verdict(
            INCONCLUSIVE, "T3", notes=["neither branch condition applies; defer to the LP"], **base
        )
    status = STABLE if _classify(load) == STABLE else INCONCLUSIVE
    return Verdict(status, "T3", objective=load, notes=[note], **base)


def check_lbn_lp(params: ModelParams, solver=None, tol: float = lpmod.TOL) -> Verdict:
    """Necessary and sufficient criterion: stable iff the minimal largest busy
    fraction of the stability LP is below 1."""
    solver = lpmod.solve_simplex if solver is None else solver
    problem = lpmod.build_stability_lp(params)
    sol = solver(problem, tol)
    m = params.m
    lam_j = list(params.lam_j)
    if sol.status == lpmod.UNBOUNDED:
        raise SolverError("stability LP reported unbounded")
    rho = lpmod.rho_from_solution(sol, m)
    Lam = params.Lambda_j(rho)
    common = dict(lambda_j=lam_j, Lambda_j=list(Lam), j_star=_argmax_set(Lam), rho=list(rho))
    if sol.status == lpmod.INFEASIBLE:
        return Verdict(
            UNSTABLE, "T5", notes=["stability LP infeasible; busy fractions set to 1"], **common
        )
    if sol.residuals > tol * 10:
        raise SolverError(f"LP solution residual {sol.residuals:.3g} exceeds tolerance")
    obj = sol.objective
    status = _classify(obj)
    return Verdict(
        status,
        "T5",
        objective=obj,
        notes=[f"max busy fraction x*_(m+1) = {obj:.12g} {_relation(obj)} 1"],
        **common,
    )


def lp_objective(params: ModelParams) -> float:
    """Objective of the stability LP (``inf`` when infeasible)."""
    sol = lpmod.solve_simplex(lpmod.build_stability_lp(params))
    return sol.objective if sol.status == lpmod.OPTIMAL else float("inf")


def path_slope(path, horizon: float, window: float = 0.5) -> float:
    """Continuous-time least-squares slope of a path over the final
    ``window`` fraction of ``[0, horizon]``."""
    t0 = horizon * (1.0 - window)
    times, levels = _clip(path, t0, horizon)
    ends = np.append(times[1:], horizon)
    mid = 0.5 * (t0 + horizon)
    num = 0.5 * np.sum(levels * ((ends - mid) ** 2 - (times - mid) ** 2))
    den = (horizon - t0) ** 3 / 12.0
    return float(num / den)


def _clip(path, t0: float, t1: float):
    inside = (path.times > t0) & (path.times < t1)
    times = np.concatenate([[t0], path.times[inside]])
    levels = np.concatenate([[path.level_at(t0)], path.levels[inside]]).astype(float)
    return times, levels


def empirical_diagnostics(traj, K: int = 100, window: float = 0.5) -> list[dict]:
    """Per-queue ``slope``, ``occupancy`` (time fraction with level <= K over
    the whole horizon) and ``last_return`` (last breakpoint with level <= K)."""
    if K < 1:
        raise ParameterError("K must be >= 1")
    if not 0 < window <= 1:
        raise ParameterError("window must lie in (0, 1]")
    paths = getattr(traj, "paths", None)
    if not paths:
        raise ParameterError("trajectory has no queue paths")
    horizon = traj.horizon
    out = []
    for path in paths:
        times, levels = _clip(path, 0.0, horizon)
        spans = np.diff(np.append(times, horizon))
        low = levels <= K
        held = path.times[(path.levels <= K) & (path.times <= horizon)]
        out.append(
            {
                "slope": path_slope(path, horizon, window),
                "occupancy": float(spans[low].sum() / horizon),
                "last_return": float(held[-1]) if len(held) else 0.0,
            }
        )
    return out


def params_from_config(cfg) -> ModelParams:
    """Rates of a :class:`~jsqstab.network_sim.NetworkConfig`."""
    lam_prime = 0.0 if cfg.opportunistic is None else cfg.opportunistic.rate
    common = dict(lam_prime=lam_prime, mu=cfg.service.rate, routing=cfg.routing, p_sh=cfg.jsq)
    if cfg.arrivals is not None:
        per = tuple(d.rate for d in cfg.arrivals)
        return ModelParams(cfg.m, sum(per), lam_per_queue=per, **common)
    return ModelParams(cfg.m, cfg.arrival.rate, p=cfg.split, **common)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jsqstab import lp
from jsqstab.errors import InconsistencyError, ParameterError
from jsqstab.stability import ModelParams
from jsqstab.verify import random_lp_params

TOL = 1e-9


def routed(lam, lam_prime, mu=1.0):
    return ModelParams(2, lam, lam_prime, mu, p=(0.5, 0.5), routing=[[0, 0.3], [0, 0]])


def both(problem):
    return lp.solve_simplex(problem), lp.solve_oracle(problem)


@st.composite
def lp_params(draw, zero_routing=False):
    seed = draw(st.integers(0, 2**32))
    return random_lp_params(np.random.default_rng(seed), zero_routing=zero_routing)


def test_build_symmetric_zero_routing():
    prob = lp.build_stability_lp(ModelParams(2, 1.0, 0.6, 2.0))
    # flow rows: -mu x_j <= -lam_j, i.e. x_j >= lam_j / mu
    assert prob.A_ub[:2].tolist() == [[-2.0, 0.0, 0.0], [0.0, -2.0, 0.0]]
    assert prob.b_ub[:2].tolist() == [-0.5, -0.5]
    assert prob.A_ub[2:].tolist() == [[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]]
    assert prob.A_eq.tolist() == [[2.0, 2.0, 0.0]]
    assert prob.b_eq.tolist() == [1.6]
    assert prob.c.tolist() == [0.0, 0.0, 1.0]


def test_build_routing_row():
    prob = lp.build_stability_lp(routed(0.6, 0.2))
    # 0.3 + 0.3 x_1 <= x_2
    assert prob.A_ub[1].tolist() == pytest.approx([0.3, -1.0, 0.0])
    assert prob.b_ub[1] == pytest.approx(-0.3)
    assert prob.A_eq[0].tolist() == pytest.approx([0.7, 1.0, 0.0])


def test_build_jsq_equality():
    p = ModelParams(2, 0.4, 0.0, 1.0, p=(0.5, 0.5), p_sh=(0.5, 0.0))
    prob = lp.build_stability_lp(p)
    assert prob.A_eq[0].tolist() == [0.5, 1.0, 0.0]
    assert prob.b_eq[0] == pytest.approx(0.4)
    for sol in both(prob):
        assert sol.objective == pytest.approx(0.4 / 1.5, abs=TOL)


def test_build_rejects_bad_mu():
    class P:
        mu, m, routing, p_sh, lam_j, lam_prime = 0.0, 1, [[0.0]], [0.0], [1.0], 0.0

    with pytest.raises(ParameterError):
        lp.build_stability_lp(P())


@pytest.mark.parametrize(
    "params, objective",
    [
        (ModelParams(2, 1.0, 0.6, 1.0, lam_per_queue=(0.8, 0.2)), 0.8),
        (routed(0.6, 0.2), 0.8 / 1.7),
        (routed(1.6, 0.4), 2.0 / 1.7),
    ],
)
def test_solver_examples(params, objective):
    a, b = both(lp.build_stability_lp(params))
    assert a.status == b.status == lp.OPTIMAL
    assert a.objective == pytest.approx(objective, abs=TOL)
    assert abs(a.objective - b.objective) <= TOL
    assert a.residuals <= TOL


def test_first_example_vertex():
    sol = lp.solve_simplex(lp.build_stability_lp(ModelParams(2, 1.0, 0.6, 1.0, lam_per_queue=(0.8, 0.2))))
    assert sol.x[0] == pytest.approx(0.8) and sol.x[2] == pytest.approx(0.8)
    assert sum(sol.x[:2]) == pytest.approx(1.6)


def test_infeasible_toy():
    prob = lp.LpProblem([0.0, 0.0], [[-1.0, 0.0]], [-2.0], [[1.0, 1.0]], [1.0])
    a, b = both(prob)
    assert a.status == b.status == lp.INFEASIBLE


def test_degenerate_duplicates():
    base = lp.build_stability_lp(routed(0.6, 0.2))
    dup = lp.LpProblem(
        base.c,
        np.vstack([base.A_ub, base.A_ub]),
        np.concatenate([base.b_ub, base.b_ub]),
        np.vstack([base.A_eq, base.A_eq]),
        np.concatenate([base.b_eq, base.b_eq]),
    )
    assert lp.solve_simplex(dup).objective == pytest.approx(0.8 / 1.7, abs=TOL)
    assert lp.solve_oracle(dup).objective == pytest.approx(0.8 / 1.7, abs=TOL)


def test_unbounded_detected():
    prob = lp.LpProblem([-1.0, 0.0], [[-1.0, 1.0]], [0.0], np.zeros((0, 2)), [])
    assert lp.solve_simplex(prob).status == lp.UNBOUNDED


def test_oracle_dimension_cap():
    prob = lp.LpProblem(np.zeros(6), np.zeros((0, 6)), [], np.ones((1, 6)), [1.0])
    with pytest.raises(ParameterError):
        lp.solve_oracle(prob)


def test_bad_tolerance():
    with pytest.raises(ParameterError):
        lp.solve_simplex(lp.build_stability_lp(routed(0.6, 0.2)), tol=0.0)


def test_rho_fallbacks():
    m = 2
    sol = lp.solve_simplex(lp.build_stability_lp(routed(0.6, 0.2)))
    assert lp.rho_from_solution(sol, m) == pytest.approx([0.8 / 1.7] * 2)
    sol = lp.solve_simplex(lp.build_stability_lp(routed(1.6, 0.4)))
    assert lp.rho_from_solution(sol, m).tolist() == [1.0, 1.0]
    assert lp.rho_from_solution(lp.LpSolution(lp.INFEASIBLE), 3).tolist() == [1.0] * 3
    with pytest.raises(InconsistencyError):
        lp.rho_from_solution(lp.LpSolution(lp.UNBOUNDED), m)


def test_json_rendering():
    prob = lp.build_stability_lp(routed(0.6, 0.2))
    d = prob.to_dict()
    assert d["n_vars"] == 3 and len(d["A_ub"]) == 4 and d["lower_bounds"] == [0.0] * 3
    s = lp.solve_simplex(prob).to_dict()
    assert s["objective"] == 0.470588235294


@given(lp_params())
def test_simplex_matches_oracle(p):
    a, b = both(lp.build_stability_lp(p))
    assert a.status == b.status
    if a.status == lp.OPTIMAL:
        assert abs(a.objective - b.objective) <= TOL
        assert a.residuals <= TOL


@given(lp_params())
def test_simplex_matches_scipy(p):
    scipy_opt = pytest.importorskip("scipy.optimize")
    prob = lp.build_stability_lp(p)
    ref = scipy_opt.linprog(prob.c, prob.A_ub, prob.b_ub, prob.A_eq, prob.b_eq, bounds=(0, None), method="highs")
    ours = lp.solve_simplex(prob)
    assert (ref.status == 0) == (ours.status == lp.OPTIMAL)
    if ref.status == 0:
        assert abs(ours.objective - ref.fun) <= 1e-7


@given(lp_params(zero_routing=True))
def test_closed_form_without_routing(p):
    sol = lp.solve_oracle(lp.build_stability_lp(p))
    closed = max(float(p.lam_j.max()), (p.lam + p.lam_prime) / p.m) / p.mu
    assert abs(sol.objective - closed) <= TOL
    assert abs(lp.solve_simplex(lp.build_stability_lp(p)).objective - closed) <= TOL


@given(lp_params(), st.floats(0.1, 10.0))
def test_scaling_covariance(p, factor):
    a = lp.solve_simplex(lp.build_stability_lp(p))
    b = lp.solve_simplex(lp.build_stability_lp(p.scaled(factor)))
    assert a.status == b.status
    if a.status == lp.OPTIMAL:
        assert abs(a.objective - b.objective) <= TOL * max(1.0, a.objective)


def test_inconsistent_equalities():
    prob = lp.LpProblem([1.0, 0.0], np.zeros((0, 2)), [], [[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])
    a, b = both(prob)
    assert a.status == b.status == lp.INFEASIBLE

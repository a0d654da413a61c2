import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from jsqstab.errors import DomainError, ParameterError
from jsqstab.point_process import EventStream, GoverningSequence, cumulate
from jsqstab.queue_core import (
    QueuePath,
    compare_coupled,
    fifo_departures,
    reflect,
    simulate_autonomous,
    simulate_batch_autonomous,
    simulate_delayed,
    simulate_standard,
)

gaps = st.lists(st.floats(0.01, 3.0), min_size=0, max_size=40)
pos_gaps = st.lists(st.floats(0.01, 3.0), min_size=1, max_size=40)
# coarse grid so that arrival and service epochs coincide fairly often
grid_gaps = st.lists(st.integers(1, 6).map(lambda k: k * 0.25), min_size=1, max_size=40)
# dyadic durations: partial sums are exact in any summation order
dyadic = st.integers(1, 192).map(lambda k: k / 64)


def es(values, marks=None):
    return EventStream(np.asarray(values, dtype=float), marks)


def from_gaps(g):
    return EventStream(np.cumsum(g)) if len(g) else EventStream([])


def steps(path):
    return list(zip(path.times.tolist(), path.levels.tolist()))


def merged(arr, dep):
    # departure-first at ties
    ev = [(t, 0) for t in dep] + [(t, 1) for t in arr]
    return sorted(ev)


# ---------------------------------------------------------------- oracles


def sup_formula(arr, dep):
    """Q_k = max(X_k, max_{i<=k} X_k - X_i) with X the free walk; O(n^2)."""
    ev = merged(arr, dep)
    x = np.cumsum([1 if kind else -1 for _, kind in ev])
    out = []
    for k, (t, _) in enumerate(ev):
        out.append((t, int(max(x[k], max(x[k] - x[i] for i in range(k + 1))))))
    return out


def path_from_events(events):
    out, q = [], 0
    for t, dq in events:
        q += dq
        out.append((t, q))
    return QueuePath.from_steps(0.0, [t for t, _ in out], [q for _, q in out])


def busy_period_oracle(tau, chi):
    """Standard queue by stopping times: a busy period opened by customer a at
    t_a runs its customers' services back to back and ends at the first k with
    t_a + (x_k - x_{a-1}) < t_{k+1}."""
    t = np.cumsum(tau)
    n = len(t)
    events = []
    a = 0
    while a < n:
        start, used = t[a], 0.0
        k = a
        while True:
            used += chi[k]
            finish = start + used
            events.append((finish, -1, k))
            if k + 1 >= n or finish < t[k + 1]:
                break
            k += 1
        for i in range(a, k + 1):
            events.append((t[i], +1, i))
        a = k + 1
    events.sort(key=lambda e: (e[0], 0 if e[1] < 0 else 1))
    return path_from_events([(e[0], e[1]) for e in events])


def customer_oracle(arr, pts):
    """Delayed queue, customer by customer: at each service point the customer
    in service leaves and the head of the line starts."""
    waiting, busy, out = 0, 0, []
    for t, kind in merged(arr, pts):
        if kind:
            waiting += 1
        else:
            if busy:
                busy = 0
            if waiting:
                waiting -= 1
                busy = 1
        out.append((t, waiting + busy))
    return out


def skip_rule_oracle(arr, pts):
    """Delayed queue by the skip rule: for every arrival to an empty system,
    the first service point processed after it does not decrement; every
    other point decrements a positive queue."""
    pts_arr = np.asarray(pts, dtype=float)
    q, out, skip = 0, [], set()
    for t, kind, j in sorted([(t, 0, j) for j, t in enumerate(pts)] + [(t, 1, -1) for t in arr]):
        if kind:
            if q == 0:
                # points at t itself were processed before this arrival
                skip.add(int(np.searchsorted(pts_arr, t, side="right")))
            q += 1
        elif j not in skip and q > 0:
            q -= 1
        out.append((t, q))
    return out


def levels_on(path, events):
    ts = np.array([t for t, _ in events])
    return path.level_at(ts).tolist() if len(ts) else []


def last_per_epoch(events):
    d = {}
    for t, q in events:
        d[t] = q
    return d


def assert_matches(path, events):
    for t, q in last_per_epoch(events).items():
        assert path.level_at(t) == q, (t, q)


# ---------------------------------------------------------------- QueuePath


def test_path_validation():
    with pytest.raises(ParameterError):
        QueuePath([0.0, 1.0], [1, 0])
    with pytest.raises(ParameterError):
        QueuePath([0.0, 0.0], [0, 1])
    p = QueuePath.from_steps(0.0, [1.0, 1.0, 2.0, 3.0], [1, 2, 2, 0])
    assert steps(p) == [(0.0, 0), (1.0, 2), (3.0, 0)]
    assert p.level_at(2.999) == 2
    assert p.level_left(3.0) == 2
    assert p.level_at(3.0) == 0


# ---------------------------------------------------------------- Q1


def test_autonomous_hand_trace():
    p = simulate_autonomous(es([1, 2, 3]), es([1.5, 2.5, 3.5, 4.5]))
    assert steps(p) == [(0.0, 0), (1.0, 1), (1.5, 0), (2.0, 1), (2.5, 0), (3.0, 1), (3.5, 0)]


def test_autonomous_degenerate():
    assert steps(simulate_autonomous(es([1, 2]), es([]))) == [(0.0, 0), (1.0, 1), (2.0, 2)]
    assert steps(simulate_autonomous(es([]), es([1, 2]))) == [(0.0, 0)]


def test_autonomous_errors():
    with pytest.raises(ParameterError):
        simulate_autonomous(EventStream([2.0], origin=1.0), es([3.0]))
    with pytest.raises(ParameterError):
        simulate_autonomous(es([1.0], [2]), es([3.0]))


def test_autonomous_horizon():
    p = simulate_autonomous(es([1, 2, 3]), es([1.5, 2.5, 3.5]), horizon=2.2)
    assert steps(p) == [(0.0, 0), (1.0, 1), (1.5, 0), (2.0, 1)]


def test_departure_first_at_ties():
    # departure at 1 precedes the arrival at 1, so it finds an empty queue
    p = simulate_autonomous(es([1.0]), es([1.0, 2.0]))
    assert steps(p) == [(0.0, 0), (1.0, 1), (2.0, 0)]


@given(gaps, gaps)
def test_autonomous_matches_sup_formula(a, d):
    arr, dep = from_gaps(a), from_gaps(d)
    assert_matches(simulate_autonomous(arr, dep), sup_formula(arr.epochs, dep.epochs))


@given(grid_gaps, grid_gaps)
def test_autonomous_equals_reflection(a, d):
    arr, dep = from_gaps(a), from_gaps(d)
    assert simulate_autonomous(arr, dep) == reflect(arr, dep)


@given(gaps, gaps)
def test_autonomous_flow_conservation(a, d):
    arr, dep = from_gaps(a), from_gaps(d)
    assume(not len(np.intersect1d(arr.epochs, dep.epochs)))
    p = simulate_autonomous(arr, dep)
    # effective departures are exactly the down-steps
    jumps = np.diff(p.levels)
    assert set(jumps.tolist()) <= {-1, 1}
    for t, q in zip(p.times, p.levels):
        n_dep = int(np.sum(np.diff(p.levels)[p.times[1:] <= t] < 0))
        assert q == arr.count_at(t) - n_dep
    assert p.levels.min() >= 0


# ---------------------------------------------------------------- reflection


def test_reflect_examples():
    arr, dep = es([1, 2, 3]), es([1.5, 2.5, 3.5, 4.5])
    assert reflect(arr, dep) == simulate_autonomous(arr, dep)
    assert steps(reflect(es([]), es([1, 2]))) == [(0.0, 0)]
    assert steps(reflect(es([1, 2]), es([]))) == [(0.0, 0), (1.0, 1), (2.0, 2)]
    with pytest.raises(ParameterError):
        reflect(arr, dep, c=0)


# ---------------------------------------------------------------- Q2


def test_standard_deterministic():
    p = simulate_standard(GoverningSequence([1.0] * 5), GoverningSequence([0.5] * 5))
    expect = [(0.0, 0)]
    for k in range(1, 6):
        expect += [(float(k), 1), (k + 0.5, 0)]
    assert steps(p) == expect


def test_standard_single_customer():
    p = simulate_standard(GoverningSequence([1.0]), GoverningSequence([10.0]))
    assert steps(p) == [(0.0, 0), (1.0, 1), (11.0, 0)]


def test_standard_instant_service():
    p = simulate_standard(GoverningSequence([1.0, 0.3, 2.0, 0.01]), GoverningSequence([1e-9] * 4))
    assert p.levels.max() == 1


def test_standard_errors():
    with pytest.raises(DomainError):
        simulate_standard(GoverningSequence([1.0]), GoverningSequence([0.0]))
    with pytest.raises(DomainError):
        simulate_standard(GoverningSequence([1.0]), GoverningSequence([-1.0], "x-difference"))


def test_fifo_departures_lindley():
    d = fifo_departures(np.array([1.0, 1.5, 5.0]), np.array([2.0, 1.0, 0.5]))
    assert d.tolist() == [3.0, 4.0, 5.5]


@given(st.lists(dyadic, min_size=1, max_size=40), st.data())
def test_standard_matches_busy_periods(tau, data):
    chi = data.draw(st.lists(dyadic, min_size=len(tau), max_size=len(tau)))
    p = simulate_standard(GoverningSequence(tau), GoverningSequence(chi))
    oracle = busy_period_oracle(tau, chi)
    grid = np.union1d(p.times, oracle.times)
    assert np.array_equal(p.level_at(grid), oracle.level_at(grid))


# ---------------------------------------------------------------- Q3


def test_delayed_skip_example():
    p = simulate_delayed(es([1.0]), es([0.5, 2.0]))
    assert steps(p) == [(0.0, 0), (1.0, 1)]
    q1 = simulate_autonomous(es([1.0]), es([0.5, 2.0]))
    assert p.level_at(2.0) == 1 and q1.level_at(2.0) == 0


def test_delayed_two_arrivals():
    p = simulate_delayed(es([1.0, 1.2]), es([0.5, 2.0, 3.0]))
    assert steps(p) == [(0.0, 0), (1.0, 1), (1.2, 2), (3.0, 1)]


def test_delayed_empty():
    assert steps(simulate_delayed(es([]), es([1.0, 2.0]))) == [(0.0, 0)]


@given(gaps, gaps)
def test_delayed_matches_customer_oracle(a, d):
    arr, pts = from_gaps(a), from_gaps(d)
    assert_matches(simulate_delayed(arr, pts), customer_oracle(arr.epochs, pts.epochs))


@given(grid_gaps, grid_gaps)
def test_delayed_matches_skip_rule(a, d):
    arr, pts = from_gaps(a), from_gaps(d)
    assert_matches(simulate_delayed(arr, pts), skip_rule_oracle(arr.epochs, pts.epochs))


@given(grid_gaps, grid_gaps)
def test_oracles_agree_with_ties(a, d):
    arr, pts = from_gaps(a).epochs, from_gaps(d).epochs
    assert last_per_epoch(customer_oracle(arr, pts)) == last_per_epoch(skip_rule_oracle(arr, pts))


# ---------------------------------------------------------------- batch


def test_batch_examples():
    p = simulate_batch_autonomous(es([1.0, 1.1, 1.2]), es([2.0]), 2)
    assert steps(p) == [(0.0, 0), (1.0, 1), (1.1, 2), (1.2, 3), (2.0, 1)]
    p = simulate_batch_autonomous(es([1.0], [5]), es([2.0, 3.0]), 2)
    assert steps(p) == [(0.0, 0), (1.0, 5), (2.0, 3), (3.0, 1)]
    with pytest.raises(ParameterError):
        simulate_batch_autonomous(es([1.0]), es([2.0]), 0)


@given(gaps, gaps)
def test_batch_unit_reduces(a, d):
    arr, dep = from_gaps(a), from_gaps(d)
    assert simulate_batch_autonomous(arr, dep, 1) == simulate_autonomous(arr, dep)


@given(pos_gaps, gaps, st.integers(1, 4), st.data())
def test_batch_jump_structure(a, d, c, data):
    marks = data.draw(st.lists(st.integers(1, 5), min_size=len(a), max_size=len(a)))
    arr = EventStream(np.cumsum(a), marks)
    dep = from_gaps(d)
    p = simulate_batch_autonomous(arr, dep, c)
    assert p.levels.min() >= 0
    # replay step by step to check each jump
    q = 0
    for t, kind in merged(arr.epochs, dep.epochs):
        if kind:
            i = int(np.searchsorted(arr.epochs, t))
            q += marks[i]
        else:
            q -= min(c, q)
    assert p.levels[-1] == q


# ---------------------------------------------------------------- coupled


def test_coupled_hand_instance():
    cmp = compare_coupled(GoverningSequence([1.0]), GoverningSequence([0.5, 1.5]))
    assert cmp.violations == []
    assert cmp.max_q3_minus_q1 == 1


def test_coupled_empty():
    cmp = compare_coupled(GoverningSequence([]), GoverningSequence([1.0, 1.0]))
    assert cmp.max_q3_minus_q1 == 0
    assert not cmp.q1.any() and not cmp.q2.any() and not cmp.q3.any()


def test_coupled_tie_note():
    cmp = compare_coupled(GoverningSequence([1.0] * 20), GoverningSequence([1.0] * 20))
    assert cmp.violations == []
    assert any("departures processed before arrivals" in n for n in cmp.notes)


@given(pos_gaps, st.data())
def test_coupled_ordering(tau, data):
    chi = data.draw(st.lists(st.floats(0.01, 3.0), min_size=1, max_size=45))
    cmp = compare_coupled(GoverningSequence(tau), GoverningSequence(chi))
    assert cmp.violations == []
    assert np.all(cmp.q2 <= cmp.q3)
    assert set((cmp.q3 - cmp.q1).tolist()) <= {0, 1}


@given(grid_gaps, grid_gaps)
def test_coupled_ordering_with_ties(tau, chi):
    cmp = compare_coupled(GoverningSequence(tau), GoverningSequence(chi))
    assert cmp.violations == []


def test_coupled_paths_are_the_simulators():
    tau, chi = GoverningSequence([0.7, 0.2, 1.1, 0.4]), GoverningSequence([0.5, 0.9, 0.3, 0.6, 0.8])
    cmp = compare_coupled(tau, chi)
    A, D = cumulate(tau), cumulate(chi)
    assert cmp.paths[0] == simulate_autonomous(A, D)
    assert cmp.paths[2] == simulate_delayed(A, D)

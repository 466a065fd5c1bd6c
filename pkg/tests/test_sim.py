import warnings

import numpy as np
import pytest

from ecnstar import _jit
from ecnstar.model import forward_bruteforce, probabilities_from_distribution
from ecnstar.scenario import (PAPER_QUEUE_TARGETS, PAPER_THEORETICAL_RATES, BernoulliMarker, Flow, PathScenario,
                              RedQueue, Router, paper_scenario)
from ecnstar.sim import (bernoulli_marks, calibrate_windows, export_distribution, red_mark_probability,
                         simulate_bernoulli, simulate_red_path)
from ecnstar.simkernel import uniform_stream

needs_numba = pytest.mark.skipif(not _jit.HAVE_NUMBA, reason="numba not installed")


def single_queue(load, window=None, budget=5000, seed=3, cross_load=20.0):
    flows = [Flow("probe", ("Q",), load, measured=True)]
    if window is not None:
        flows.append(Flow("cross", ("Q",), cross_load, window=window))
    return PathScenario((Router("Q", RedQueue()),), tuple(flows), packet_budget=budget, seed=seed)


def bernoulli_chain(rates, budget=2000, seed=1):
    routers = tuple(Router(f"R{i}", BernoulliMarker(r)) for i, r in enumerate(rates))
    flows = (Flow("f", tuple(r.name for r in routers), 3.0, measured=True),)
    return PathScenario(routers, flows, packet_budget=budget, seed=seed, warmup=0)


def test_bernoulli_trivial_rates():
    assert simulate_bernoulli((0.0, 0.0), 1000, seed=0).counts == {0: 1000}
    assert simulate_bernoulli((1.0,), 1000, seed=0).counts == {1: 1000}


def test_bernoulli_law_of_large_numbers():
    rates = (0.11, 0.21, 0.44, 0.55)
    p = probabilities_from_distribution(simulate_bernoulli(rates, 50000, seed=7))
    oracle = forward_bruteforce(rates)
    assert np.max(np.abs(p.full() - oracle.full())) < 0.01


def test_bernoulli_seeded_and_validated():
    assert np.array_equal(bernoulli_marks((0.3, 0.6), 500, 4), bernoulli_marks((0.3, 0.6), 500, 4))
    with pytest.raises(ValueError):
        bernoulli_marks((0.3, 1.5), 10)
    with pytest.raises(ValueError):
        bernoulli_marks((0.3,), 0)


@pytest.mark.parametrize("queue", sorted(PAPER_QUEUE_TARGETS))
def test_red_law_reproduces_table(queue):
    got = red_mark_probability(PAPER_QUEUE_TARGETS[queue], RedQueue())
    expected = 0.31 if queue == "Q5" else PAPER_THEORETICAL_RATES[queue]
    assert got == pytest.approx(expected, abs=1e-12)


def test_red_law_edges():
    q = RedQueue()
    assert red_mark_probability(50.0, q) == 0.0
    assert red_mark_probability(10.0, q) == 0.0
    assert red_mark_probability(100.0, q) == 1.0
    assert red_mark_probability(75.0, RedQueue(max_p=0.5)) == 0.25
    with pytest.raises(ValueError):
        red_mark_probability(-1.0, q)


def test_below_capacity_no_marks():
    out = simulate_red_path(single_queue(3.0))
    st = out.routers["Q"]
    assert st.marks == 0 and st.drops == 0
    assert st.avg_queue < RedQueue().min_th / 10  # no excess over min_th
    assert out.distributions["probe"].counts == {0: 5000}


def test_conservation_and_counter_bounds():
    out = simulate_red_path(paper_scenario(seed=2, packet_budget=3000))
    for name, fs in out.flows.items():
        assert fs.injected == fs.delivered + fs.dropped + fs.in_network
        assert fs.in_network >= 0
    for name, dist in out.distributions.items():
        assert dist.total == 3000
        assert dist.max_count <= len(out.scenario.flow(name).route)
    for st in out.routers.values():
        assert 0.0 <= st.mark_fraction <= 1.0
        assert st.marks <= st.arrivals


def test_bernoulli_routers_mark_every_hop_at_most_once():
    out = simulate_red_path(bernoulli_chain((1.0, 1.0, 1.0)))
    assert out.distributions["f"].counts == {3: 2000}
    out = simulate_red_path(bernoulli_chain((0.0, 1.0, 0.0)))
    assert out.distributions["f"].counts == {1: 2000}


def test_mark_stream_matches_histogram():
    out = simulate_red_path(bernoulli_chain((0.2, 0.5)), record_marks=True)
    stream = out.mark_streams["f"]
    assert stream.size == 2000
    assert np.bincount(stream).tolist() == out.distributions["f"].dense().tolist()


def test_determinism():
    sc = paper_scenario(seed=5, packet_budget=2000)
    a, b = simulate_red_path(sc), simulate_red_path(sc)
    assert a.distributions == b.distributions
    for name in a.series:
        assert np.array_equal(a.series[name], b.series[name])
    c = simulate_red_path(sc, seed=6)
    assert c.distributions != a.distributions


@needs_numba
def test_numba_and_interpreter_identical():
    sc = single_queue(1.0, window=55.0, budget=300, seed=9)
    a = simulate_red_path(sc, use_numba=True)
    b = simulate_red_path(sc, use_numba=False)
    assert a.distributions == b.distributions
    assert a.routers == b.routers
    assert a.ticks == b.ticks
    assert np.array_equal(a.series["Q"], b.series["Q"])


def mrg32k3a_reference(seed, count):
    # the recurrence written out with Python integers
    m1, m2 = 2 ** 32 - 209, 2 ** 32 - 22853
    x, y = list(seed[:3]), list(seed[3:])
    out = []
    for _ in range(count):
        xn = (1403580 * x[1] - 810728 * x[0]) % m1
        yn = (527612 * y[2] - 1370589 * y[0]) % m2
        x, y = [x[1], x[2], xn], [y[1], y[2], yn]
        out.append(((xn - yn) % m1 or m1) / (m1 + 1))
    return out


def test_generator_matches_recurrence():
    seed = [12345] * 6
    assert np.allclose(uniform_stream(seed, 2000), mrg32k3a_reference(seed, 2000), rtol=0, atol=1e-15)
    u = uniform_stream(123, 20000)
    assert 0.0 < u.min() and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


def test_calibrated_queue_marks_like_bernoulli():
    base = single_queue(1.0, window=50.0, budget=50000, seed=0)
    cal = calibrate_windows(base, {"Q": 60.5}, {"Q": "cross"}, tolerance=0.5, ticks=20000)
    assert cal.converged
    assert 60.0 <= cal.averages["Q"] <= 61.0
    out = simulate_red_path(base.with_windows(cal.windows))
    st = out.routers["Q"]
    assert abs(st.mark_fraction - 0.21) <= 0.02
    # the measured probe sees the same rate
    p = probabilities_from_distribution(out.distributions["probe"])
    assert abs(p.p[0] - red_mark_probability(st.avg_queue, RedQueue())) <= 0.02


def test_divergence_warning():
    # open-loop overload: the queue keeps filling for the whole short run
    sc = PathScenario((Router("Q", RedQueue(ewma_weight=0.0005)),),
                      (Flow("probe", ("Q",), 12.0, measured=True),), packet_budget=3000, warmup=0,
                      series_interval=10)
    with pytest.warns(RuntimeWarning, match="not stabilised"):
        out = simulate_red_path(sc)
    assert out.warnings


def test_export_files(tmp_path):
    out = simulate_red_path(paper_scenario(packet_budget=1000))
    written = export_distribution(out, tmp_path / "run")
    names = sorted(p.name for p in written)
    assert names == sorted([f"{q}.series.csv" for q in PAPER_QUEUE_TARGETS] + ["flow1.hist.csv", "flow2.hist.csv"])
    lines = (tmp_path / "run" / "flow1.hist.csv").read_text().splitlines()
    assert lines[0] == "mark_count,packets"
    assert [int(l.split(",")[0]) for l in lines[1:]] == [0, 1, 2, 3, 4]
    assert (tmp_path / "run" / "Q1.series.csv").read_text().startswith("tick,avg_queue,mark_fraction,drops\n")


def test_export_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    out = simulate_red_path(paper_scenario(packet_budget=200))
    with pytest.raises(OSError, match="file"):
        export_distribution(out, blocker / "sub")

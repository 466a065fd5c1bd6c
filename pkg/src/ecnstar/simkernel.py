"""Slotted-time packet loop for paths of RED/ECN* and Bernoulli routers.

Everything lives in flat arrays so the same function runs under numba or the
interpreter. Random numbers come from an MRG32k3a generator kept in an int64
state vector, which makes the compiled and interpreted runs bit-identical.

Tick order: packets forwarded last tick arrive, then sources inject, then
every RED queue serves up to ``service`` packets. A served packet either
leaves the network (last hop) or is held in transit until the next tick.
Bernoulli routers have no queue: they mark and pass the packet on at once.
``marklog`` optionally records measured packets' counters in delivery order
(give it zero columns to skip).
"""
import numpy as np

from . import _jit

KIND_BERNOULLI = 0
KIND_RED = 1

STATUS_DONE = 0
STATUS_MAX_TICKS = 1
STATUS_POOL_EXHAUSTED = 2

_M1 = 4294967087
_M2 = 4294944443


def seed_state(seed: int) -> np.ndarray:
    """Six MRG32k3a seeds derived from ``seed`` through numpy's SeedSequence."""
    words = np.random.SeedSequence(int(seed)).generate_state(6, dtype=np.uint32).astype(np.int64)
    s = np.empty(6, dtype=np.int64)
    s[:3] = words[:3] % (_M1 - 1) + 1
    s[3:] = words[3:] % (_M2 - 1) + 1
    return s


def _make_uniform(decorate):
    @decorate
    def uniform(s):
        # MRG32k3a, L'Ecuyer (1999); all products stay below 2**63
        p1 = (1403580 * s[1] - 810728 * s[0]) % 4294967087
        s[0] = s[1]
        s[1] = s[2]
        s[2] = p1
        p2 = (527612 * s[5] - 1370589 * s[3]) % 4294944443
        s[3] = s[4]
        s[4] = s[5]
        s[5] = p2
        d = p1 - p2
        if d <= 0:
            d += 4294967087
        return d * 2.328306549295727688e-10

    return uniform


def _make_kernel(decorate):
    uniform = _make_uniform(decorate)

    @decorate
    def poisson(s, lam):
        if lam <= 0.0:
            return 0
        u = uniform(s)
        k = 0
        p = np.exp(-lam)
        acc = p
        limit = int(20.0 * lam) + 50
        while u > acc and k < limit:
            k += 1
            p *= lam / k
            acc += p
        return k

    @decorate
    def red_probability(avg, min_th, max_th, max_p):
        if avg < min_th:
            return 0.0
        if avg >= max_th:
            return 1.0
        return max_p * (avg - min_th) / (max_th - min_th)

    def run(
        state,
        # routers
        kind, rate, min_th, max_th, max_p, capacity, weight, service,
        # flows
        routes, route_len, load, window, measured, budget, warmup,
        max_ticks, series_every,
        # packet pool
        pk_flow, pk_hop, pk_marks, free_stack,
        # queues and transit
        qbuf, qhead, qlen, transit, avg,
        # outputs
        hist, marklog, flow_stats, router_stats, avg_sum, series,
    ):
        n_routers = kind.shape[0]
        n_flows = route_len.shape[0]
        pool = pk_flow.shape[0]
        n_free = pool
        for i in range(pool):
            free_stack[i] = pool - 1 - i
        n_transit = 0
        next_transit = np.empty(pool, dtype=np.int64)
        seen = np.zeros(n_flows, dtype=np.int64)
        collected = np.zeros(n_flows, dtype=np.int64)
        inflight = np.zeros(n_flows, dtype=np.int64)
        iv_arrivals = np.zeros(n_routers, dtype=np.int64)
        iv_marks = np.zeros(n_routers, dtype=np.int64)
        iv_drops = np.zeros(n_routers, dtype=np.int64)
        any_measured = False
        for f in range(n_flows):
            if measured[f]:
                any_measured = True
        measuring = not any_measured
        measure_start = 0 if measuring else -1
        avg_samples = 0
        n_series = 0
        arrivals = np.empty(pool, dtype=np.int64)

        tick = 0
        while tick < max_ticks:
            # arrivals for this tick: transit first, then fresh injections
            n_arr = 0
            for i in range(n_transit):
                arrivals[n_arr] = transit[i]
                n_arr += 1
            n_transit = 0
            for f in range(n_flows):
                k = poisson(state, load[f])
                if window[f] > 0.0:
                    allowed = int(window[f])
                    frac = window[f] - allowed
                    if frac > 0.0 and uniform(state) < frac:
                        allowed += 1
                    room = allowed - inflight[f]
                    if room < 0:
                        room = 0
                    if k > room:
                        k = room
                for _ in range(k):
                    if n_free == 0:
                        return STATUS_POOL_EXHAUSTED, tick, measure_start, avg_samples, n_series, n_transit
                    n_free -= 1
                    pid = free_stack[n_free]
                    pk_flow[pid] = f
                    pk_hop[pid] = 0
                    pk_marks[pid] = 0
                    inflight[f] += 1
                    flow_stats[f, 0] += 1
                    arrivals[n_arr] = pid
                    n_arr += 1

            for a in range(n_arr):
                pid = arrivals[a]
                while True:
                    f = pk_flow[pid]
                    h = pk_hop[pid]
                    if h == route_len[f]:
                        # delivered
                        inflight[f] -= 1
                        flow_stats[f, 1] += 1
                        if measured[f]:
                            seen[f] += 1
                            if seen[f] > warmup and collected[f] < budget:
                                hist[f, pk_marks[pid]] += 1
                                if collected[f] < marklog.shape[1]:
                                    marklog[f, collected[f]] = pk_marks[pid]
                                collected[f] += 1
                        free_stack[n_free] = pid
                        n_free += 1
                        break
                    r = routes[f, h]
                    iv_arrivals[r] += 1
                    if measuring:
                        router_stats[r, 0] += 1
                    if kind[r] == 0:
                        if uniform(state) < rate[r]:
                            pk_marks[pid] += 1
                            iv_marks[r] += 1
                            if measuring:
                                router_stats[r, 1] += 1
                        pk_hop[pid] = h + 1
                        continue
                    avg[r] = (1.0 - weight[r]) * avg[r] + weight[r] * qlen[r]
                    if uniform(state) < red_probability(avg[r], min_th[r], max_th[r], max_p[r]):
                        pk_marks[pid] += 1
                        iv_marks[r] += 1
                        if measuring:
                            router_stats[r, 1] += 1
                    if qlen[r] < capacity[r]:
                        qbuf[r, (qhead[r] + qlen[r]) % capacity[r]] = pid
                        qlen[r] += 1
                    else:
                        inflight[f] -= 1
                        flow_stats[f, 2] += 1
                        iv_drops[r] += 1
                        if measuring:
                            router_stats[r, 2] += 1
                        free_stack[n_free] = pid
                        n_free += 1
                    break

            for r in range(n_routers):
                if kind[r] != 1:
                    continue
                s = service[r]
                if s > qlen[r]:
                    s = qlen[r]
                for _ in range(s):
                    pid = qbuf[r, qhead[r]]
                    qhead[r] = (qhead[r] + 1) % capacity[r]
                    qlen[r] -= 1
                    pk_hop[pid] += 1
                    f = pk_flow[pid]
                    if pk_hop[pid] == route_len[f]:
                        inflight[f] -= 1
                        flow_stats[f, 1] += 1
                        if measured[f]:
                            seen[f] += 1
                            if seen[f] > warmup and collected[f] < budget:
                                hist[f, pk_marks[pid]] += 1
                                if collected[f] < marklog.shape[1]:
                                    marklog[f, collected[f]] = pk_marks[pid]
                                collected[f] += 1
                        free_stack[n_free] = pid
                        n_free += 1
                    else:
                        next_transit[n_transit] = pid
                        n_transit += 1
            for i in range(n_transit):
                transit[i] = next_transit[i]

            tick += 1
            if measuring:
                for r in range(n_routers):
                    avg_sum[r] += avg[r]
                avg_samples += 1
            if tick % series_every == 0 and n_series < series.shape[0]:
                for r in range(n_routers):
                    series[n_series, r, 0] = avg[r]
                    series[n_series, r, 1] = iv_marks[r] / iv_arrivals[r] if iv_arrivals[r] > 0 else 0.0
                    series[n_series, r, 2] = iv_drops[r]
                    iv_arrivals[r] = 0
                    iv_marks[r] = 0
                    iv_drops[r] = 0
                n_series += 1

            if not measuring:
                ready = True
                for f in range(n_flows):
                    if measured[f] and seen[f] < warmup:
                        ready = False
                if ready:
                    measuring = True
                    measure_start = tick
            if any_measured:
                finished = True
                for f in range(n_flows):
                    if measured[f] and collected[f] < budget:
                        finished = False
                if finished:
                    return STATUS_DONE, tick, measure_start, avg_samples, n_series, n_transit
        return STATUS_MAX_TICKS, tick, measure_start, avg_samples, n_series, n_transit

    return decorate(run)


run_python = _make_kernel(_jit.identity)
run_numba = _make_kernel(_jit.jit) if _jit.HAVE_NUMBA else None


_uniform_py = _make_uniform(_jit.identity)


def uniform_stream(seed_or_state, count: int) -> np.ndarray:
    """First ``count`` generator outputs, from a seed or an explicit state."""
    if np.ndim(seed_or_state) == 0:
        state = seed_state(int(seed_or_state))
    else:
        state = np.array(seed_or_state, dtype=np.int64)
    return np.array([_uniform_py(state) for _ in range(count)])

"""Plain-text and CSV renderings of estimates and simulation runs."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .model import MarkDistribution, NoCongestionObserved
from .scenario import PAPER_LINKS, PAPER_QUEUE_TARGETS, PAPER_THEORETICAL_RATES, PathScenario, RedQueue
from .sim import RouterStats, SimOutput, red_mark_probability
from .solver import DEFAULT_EPSILON, NoFullSolutionBand, RateEstimate, estimate_rates


def _f(x: float, digits: int = 4) -> str:
    return f"{x:.{digits}f}"


def format_polynomial(coeffs) -> str:
    """Monic polynomial from ascending coefficients a_0..a_n, e.g. ``x^2 - 0.5x + 0.06``."""
    n = len(coeffs) - 1
    parts = []
    for k in range(n, -1, -1):
        a = coeffs[k]
        if k < n and a == 0.0:
            continue
        mono = "" if k == 0 else ("x" if k == 1 else f"x^{k}")
        mag = abs(a)
        body = mono if (mag == 1.0 and k > 0) else f"{mag:.6g}{mono}"
        if not parts:
            parts.append(("-" if a < 0 else "") + body)
        else:
            parts.append(("- " if a < 0 else "+ ") + body)
    return " ".join(parts)


def estimate_text(est: RateEstimate, source: str = "") -> str:
    out = []
    if source:
        out.append(f"source: {source}")
    probs = est.probabilities
    out.append(f"depth n: {probs.n}")
    out.append("ratios p(M_k): " + ", ".join(f"k={k}: {p:.6g}" for k, p in enumerate(probs.p, start=1)))
    out.append("sigmas: " + ", ".join(f"{s:.6g}" for s in est.sigmas.sigma))
    if not est.sigmas.validity.ok:
        out.append("sigma bounds violated: " + "; ".join(est.sigmas.validity.violations))
    out.append("polynomial: " + format_polynomial(est.polynomial.coeffs))
    out.append("coefficients (highest degree first): "
               + ", ".join(f"{c:.6g}" for c in est.polynomial.descending))
    areas = est.areas
    lo, hi = areas.epsilon_band
    out.append(f"epsilon band: [{lo:.3g}, {hi:.3g}] over {areas.levels_used} levels")
    if areas.other_bands:
        out.append("other full-solution bands (ignored): "
                   + ", ".join(f"[{a:.3g}, {b:.3g}]" for a, b in areas.other_bands))
    for k, ((a, b), m) in enumerate(zip(areas.areas, areas.midpoints), start=1):
        out.append(f"area {k}: [{_f(a)}, {_f(b)}]  rate {_f(m)}")
    if areas.zero_level_roots is not None:
        out.append("roots at eps=0: " + ", ".join(_f(r) for r in areas.zero_level_roots))
    else:
        out.append("roots at eps=0: fewer than n real roots in [0, 1]")
    return "\n".join(out) + "\n"


def estimate_csv(est: RateEstimate) -> str:
    """Long-format CSV ``quantity,k,value``; floats at full precision."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "k", "value"])
    for k, p in enumerate(est.probabilities.p, start=1):
        w.writerow(["ratio", k, repr(p)])
    for k, s in enumerate(est.sigmas.sigma, start=1):
        w.writerow(["sigma", k, repr(s)])
    for k, a in enumerate(est.polynomial.coeffs):
        w.writerow(["coefficient", k, repr(float(a))])
    w.writerow(["epsilon_min", "", repr(est.areas.epsilon_band[0])])
    w.writerow(["epsilon_max", "", repr(est.areas.epsilon_band[1])])
    for k, ((a, b), m) in enumerate(zip(est.areas.areas, est.areas.midpoints), start=1):
        w.writerow(["area_lo", k, repr(a)])
        w.writerow(["area_hi", k, repr(b)])
        w.writerow(["rate", k, repr(m)])
    return buf.getvalue()


@dataclass(frozen=True)
class FlowEstimate:
    flow: str
    route: tuple[str, ...]
    packets: int
    estimate: RateEstimate | None
    error: str | None = None

    def assignment(self, routers: dict[str, RouterStats]) -> dict[str, int]:
        """Router -> index of its estimate, matched by rank of the theoretical rate."""
        if self.estimate is None or self.estimate.rates.n != len(self.route):
            return {}
        order = sorted(self.route, key=lambda r: (routers[r].theoretical_rate or 0.0, self.route.index(r)))
        return {r: i for i, r in enumerate(order)}


@dataclass(frozen=True)
class RunReport:
    scenario: PathScenario
    seed: int
    ticks: int
    completed: bool
    routers: dict[str, RouterStats]
    flows: tuple[FlowEstimate, ...]
    warnings: tuple[str, ...] = ()


def build_report(output: SimOutput, seed: int, epsilon_limit: float = DEFAULT_EPSILON) -> RunReport:
    flows = []
    for name, dist in output.distributions.items():
        route = output.scenario.flow(name).route
        try:
            est, err = estimate_rates(dist, epsilon_limit), None
        except NoCongestionObserved:
            est, err = None, "no congestion: no packet carries a mark"
        except NoFullSolutionBand as exc:
            est, err = None, f"estimation failed: {exc}"
        flows.append(FlowEstimate(name, route, dist.total, est, err))
    return RunReport(output.scenario, seed, output.ticks, output.completed, dict(output.routers),
                     tuple(flows), tuple(output.warnings))


def queue5_note() -> str:
    q = PAPER_QUEUE_TARGETS["Q5"]
    law = red_mark_probability(q, RedQueue())
    return (f"Note: at an average queue of {q} packets the linear RED law gives {law:.0%} for Q5; "
            f"the reference table lists {PAPER_THEORETICAL_RATES['Q5']:.0%}. This report uses the law.")


def _is_paper_topology(scenario: PathScenario) -> bool:
    return sorted(r.name for r in scenario.routers) == sorted(PAPER_QUEUE_TARGETS)


def render_report(report: RunReport) -> str:
    sc = report.scenario
    out = [
        "ECN* run report",
        f"routers: {len(sc.routers)}  flows: {len(sc.flows)} ({len(sc.measured_flows())} measured)",
        f"seed: {report.seed}  packet budget: {sc.packet_budget}  warmup: {sc.warmup_packets}",
        f"ticks: {report.ticks}  completed: {'yes' if report.completed else 'no (tick cap reached)'}",
        "",
    ]
    for fe in report.flows:
        out.append(f"[{fe.flow}] route {' '.join(fe.route)}, {fe.packets} packets")
        if fe.estimate is None:
            out.append(f"  {fe.error}")
        else:
            est = fe.estimate
            out.append("  sigmas: " + ", ".join(f"{s:.6g}" for s in est.sigmas.sigma))
            lo, hi = est.areas.epsilon_band
            out.append(f"  epsilon band: [{lo:.3g}, {hi:.3g}]")
            for (a, b), m in zip(est.areas.areas, est.areas.midpoints):
                out.append(f"  rate {_f(m)} from [{_f(a)}, {_f(b)}]")
        out.append("")

    paper = _is_paper_topology(sc)
    cols = ["Queue", "Link", "Avg queue", "Theoretical", "Realized"] + [f"{fe.flow} estimate" for fe in report.flows]
    table = []
    assign = [fe.assignment(report.routers) for fe in report.flows]
    for r in sc.routers:
        st = report.routers[r.name]
        row = [
            r.name,
            PAPER_LINKS.get(r.name, "-") if paper else "-",
            "-" if st.avg_queue is None else f"{st.avg_queue:.2f}",
            "-" if st.theoretical_rate is None else f"{st.theoretical_rate:.1%}",
            f"{st.mark_fraction:.1%}",
        ]
        for fe, a in zip(report.flows, assign):
            if r.name in a:
                est = fe.estimate
                i = a[r.name]
                lo, hi = est.areas.areas[i]
                row.append(f"{est.rates.rates[i]:.1%} [{lo:.3f}, {hi:.3f}]")
            else:
                row.append("-")
        table.append(row)
    widths = [max(len(c), *(len(row[i]) for row in table)) for i, c in enumerate(cols)]
    out.append("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
    out.append("  ".join("-" * w for w in widths))
    for row in table:
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    out.append("")
    out.append("Estimates are matched to routers by rank of the theoretical rate; "
               "each is the midpoint of the bracketed root area.")
    if paper:
        out.append(queue5_note())
    for w in report.warnings:
        out.append(f"warning: {w}")
    return "\n".join(out) + "\n"


def histogram_summary(dist: MarkDistribution) -> str:
    return f"{dist.total} packets, deepest counter {dist.max_count}"

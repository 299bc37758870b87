"""Record building and rendering for the command line.

Every command produces a list of flat dict records.  Exact quantities are
stored as strings: rationals as ``"p/q"`` (or an integer string), path counts
as decimal integers.  Records render as text, JSON lines or CSV, and
:func:`read_jsonl` restores exact values.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

from .measurement import BellSum, MeasurementOutcome, TrajectoryEnsemble
from .montecarlo import EstimateReport
from .path_ensemble import ArrivalResult, CountVector
from .statespace import FlipGraph

# fields restored as Fraction / int by read_jsonl
RATIONAL_FIELDS = {"prob", "p_equal", "weight", "total", "exact", "growth_rate"}
INTEGER_FIELDS = {"count", "path_total", "trajectories", "favorable"}


def q(x) -> str:
    return str(Fraction(x))


def _site_cols(graph: FlipGraph) -> list[str]:
    return [str(s) for s in graph.ordering.sites]


# -- records ----------------------------------------------------------------

def evolve_records(graph: FlipGraph, rows: list[CountVector]) -> list[dict]:
    cols = _site_cols(graph)
    out = []
    for cv in rows:
        rec = {"record": "counts", "t": cv.t}
        rec.update({c: str(v) for c, v in zip(cols, cv.counts)})
        rec["path_total"] = str(sum(cv.counts))
        out.append(rec)
    return out


def stationary_records(graph: FlipGraph, arrival: ArrivalResult) -> list[dict]:
    out = []
    for i, (s, p) in enumerate(zip(graph.ordering.sites, arrival.distribution.probs), 1):
        exact = isinstance(p, Fraction)
        out.append({
            "record": "arrival",
            "site": i,
            "state": str(s),
            "prob": q(p) if exact else repr(float(p)),
            "decimal": f"{float(p):.12f}",
        })
    out.append({
        "record": "arrival_summary",
        "growth_rate": q(arrival.growth_rate) if arrival.exact else str(arrival.growth_rate),
        "support": " ".join(str(i) for i in sorted(arrival.support)),
        "exact": arrival.exact,
        "iterations": arrival.iterations,
    })
    if not arrival.exact:
        # float / approximate results are not exact rationals
        out[-1]["growth_rate_approx"] = out[-1].pop("growth_rate")
        for r in out[:-1]:
            r["prob_approx"] = r.pop("prob")
    return out


def _uniform(ens: TrajectoryEnsemble) -> bool:
    return len(set(ens.weights)) == 1


def measure_records(ens: TrajectoryEnsemble, outcome: MeasurementOutcome) -> list[dict]:
    g = ens.graph
    pair = outcome.pair
    out = []
    for (i, j), w in zip(ens.transitions, ens.weights):
        out.append({
            "record": "trajectory",
            "pair": str(pair),
            "from": str(g.state(i)),
            "to": str(g.state(j)),
            "from_site": i,
            "to_site": j,
            "weight": q(w),
            "equal": pair.holds(g.state(i)),
        })
    out.append({
        "record": "outcome",
        "pair": str(pair),
        "trajectories": str(outcome.trajectory_count),
        "favorable": str(outcome.favorable_count),
        "p_equal": q(outcome.p_equal),
        "flat": outcome.flat_ratio if _uniform(ens) else "",
    })
    return out


def _flat_total(bell: BellSum) -> str:
    counts = {o.trajectory_count for o in bell.outcomes}
    if len(counts) != 1:
        return ""
    (n,) = counts
    if any(o.p_equal != Fraction(o.favorable_count, n) for o in bell.outcomes):
        return ""
    return f"{sum(o.favorable_count for o in bell.outcomes)}/{n}"


def bell_records(bell: BellSum, mode: str, mermin: bool) -> list[dict]:
    out = []
    by_pair = {o.pair: o for o in bell.outcomes}
    for pair, p in bell.terms:
        rec = {"record": "term", "mode": mode, "pair": str(pair), "p_equal": q(p)}
        o = by_pair.get(pair)
        rec["flat"] = f"{o.favorable_count}/{o.trajectory_count}" if o and Fraction(o.favorable_count, o.trajectory_count) == p else ""
        out.append(rec)
    if mermin:
        verdict = "violated" if bell.violated else "satisfied"
    else:
        verdict = "n/a"
    out.append({
        "record": "bell",
        "mode": mode,
        "total": q(bell.total),
        "flat": _flat_total(bell) if bell.outcomes else "",
        "verdict": verdict,
    })
    return out


def simulate_records(report: EstimateReport) -> list[dict]:
    out = []
    for r in report.rows:
        out.append({
            "record": "estimate",
            "name": r.name,
            "exact": q(r.exact),
            "estimate": repr(r.estimate),
            "stderr": repr(r.stderr),
            "z": repr(r.z),
            "samples": r.samples,
            "ok": abs(r.z) < report.z_limit,
        })
    for c in report.chi_square:
        out.append({
            "record": "chi_square",
            "name": c.name,
            "statistic": repr(c.statistic),
            "dof": c.dof,
            "p_value": repr(c.p_value),
            "samples": c.samples,
            "ok": c.p_value > report.p_min,
        })
    out.append({
        "record": "summary",
        "seed": str(report.seed),
        "samples": report.samples,
        "workers": report.workers,
        "passed": report.passed,
        "failures": " ".join(report.failures()),
    })
    return out


# -- formats ----------------------------------------------------------------

def to_jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=False) + "\n" for r in records)


def read_jsonl(text: str) -> list[dict]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        for k, v in rec.items():
            if not isinstance(v, str):
                continue
            if k in RATIONAL_FIELDS:
                rec[k] = Fraction(v)
            elif k in INTEGER_FIELDS or (rec["record"] == "counts" and set(k) <= {"0", "1"}):
                rec[k] = int(v)
        out.append(rec)
    return out


def to_csv(records: list[dict], record: str) -> str:
    rows = [{k: v for k, v in r.items() if k != "record"} for r in records if r["record"] == record]
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# table record shown by --format csv for each command
CSV_TABLE = {
    "evolve": "counts",
    "stationary": "arrival",
    "measure": "trajectory",
    "bell": "term",
    "simulate": "estimate",
}


# -- text -------------------------------------------------------------------

def _sites_line(graph: FlipGraph) -> str:
    return "sites: " + " ".join(f"{i}:{s}" for i, s in enumerate(graph.ordering.sites, 1))


def evolve_text(graph: FlipGraph, rows: list[CountVector], label: str) -> str:
    lines = [f"# evolve {label}".rstrip(), _sites_line(graph)]
    for cv in rows:
        lines.append(f"n_{cv.t} = ({', '.join(map(str, cv.counts))})  total {sum(cv.counts)}")
    return "\n".join(lines) + "\n"


def stationary_text(graph: FlipGraph, arrival: ArrivalResult, label: str) -> str:
    lines = [f"# stationary {label}".rstrip(), "site  state  probability  decimal"]
    for i, (s, p) in enumerate(zip(graph.ordering.sites, arrival.distribution.probs), 1):
        shown = q(p) if isinstance(p, Fraction) and arrival.exact else "~"
        lines.append(f"{i:>4}  {s!s:<5}  {shown:<11}  {float(p):.12f}")
    rate = q(arrival.growth_rate) if arrival.exact else f"~{arrival.growth_rate}"
    lines.append(f"growth rate: {rate}")
    lines.append("support: " + " ".join(str(i) for i in sorted(arrival.support)))
    if arrival.iterations:
        lines.append(f"power iterations: {arrival.iterations}")
    return "\n".join(lines) + "\n"


def _pair_label(pair) -> str:
    s = str(pair)
    return f"{s[0]}={s[1]}" if len(s) == 2 else f"p{pair.a}=p{pair.b}"


def measure_text(ens: TrajectoryEnsemble, outcome: MeasurementOutcome, label: str) -> str:
    g = ens.graph
    rel = _pair_label(outcome.pair)
    lines = [
        f"# measure {outcome.pair} {label}".rstrip(),
        f"trajectories: {outcome.trajectory_count}",
        f"favorable ({rel}): {outcome.favorable_count}",
    ]
    if _uniform(ens):
        lines.append(f"P({rel}) = {outcome.flat_ratio} = {q(outcome.p_equal)}")
    else:
        lines.append(f"P({rel}) = {q(outcome.p_equal)}")
    lines.append(f"  {'from':>6}    {'to':<6}  weight  {rel}")
    for (i, j), w in zip(ens.transitions, ens.weights):
        mark = "yes" if outcome.pair.holds(g.state(i)) else "no"
        lines.append(f"  {g.state(i)!s:>6} -> {g.state(j)!s:<6}  {q(w):<6}  {mark}")
    return "\n".join(lines) + "\n"


def bell_text(bell: BellSum, mode: str, mermin: bool, label: str) -> str:
    recs = bell_records(bell, mode, mermin)
    lines = [f"# bell {mode} {label}".rstrip()]
    for (pair, p), rec in zip(bell.terms, recs):
        extra = f"  ({rec['flat']})" if rec["flat"] else ""
        lines.append(f"P({_pair_label(pair)}) = {q(p)}{extra}")
    summary = recs[-1]
    extra = f"  (= {summary['flat']})" if summary["flat"] else ""
    lines.append(f"sum = {q(bell.total)}{extra}")
    if mermin:
        if bell.violated:
            lines.append("verdict: VIOLATED (Mermin bound requires sum >= 1)")
        else:
            lines.append("verdict: satisfied (sum >= 1)")
    else:
        lines.append("verdict: n/a (bound only defined for the three pairs xy, yz, zx)")
    return "\n".join(lines) + "\n"


def simulate_text(report: EstimateReport, label: str) -> str:
    lines = [
        f"# simulate {label}".rstrip(),
        f"seed {report.seed}  samples {report.samples}  workers {report.workers}",
        f"{'quantity':<20} {'exact':>8} {'estimate':>10} {'stderr':>10} {'z':>8}",
    ]
    for r in report.rows:
        flag = "" if abs(r.z) < report.z_limit else "  FAIL"
        lines.append(f"{r.name:<20} {q(r.exact):>8} {r.estimate:>10.6f} {r.stderr:>10.6f} {r.z:>8.3f}{flag}")
    for c in report.chi_square:
        flag = "" if c.p_value > report.p_min else "  FAIL"
        lines.append(f"chi2 {c.name:<24} stat {c.statistic:10.4f}  dof {c.dof:>3}  p {c.p_value:.4f}{flag}")
    lines.append("result: PASS" if report.passed else "result: FAIL (" + ", ".join(report.failures()) + ")")
    return "\n".join(lines) + "\n"

"""Turn an exported response log into the report tables.

Reads the study service's JSONL export (or an equivalent record list),
splits it by task, and applies the statistics module. Emits a single
report dict, plus report.json and three CSV tables when asked to write.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .errors import FormatError, Undefined
from .stats import (
    agreement_matrix,
    difficulty_by_category,
    one_prop_ztest,
    plausibility_summary,
    progression_summary,
    ranking_stats,
    rolling_mean,
    turing_summary,
)


def load_log(source) -> list:
    """Parse a JSONL export into records; lists pass through unchanged."""
    if isinstance(source, (list, tuple)):
        return list(source)
    out = []
    with open(Path(source)) as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"malformed record on line {ln}: {exc}") from exc
    return out


def _test_dict(result) -> dict | None:
    if result is None:
        return None
    return {
        "p_hat": result.p_hat,
        "n": result.n,
        "z": None if math.isnan(result.z) else result.z,
        "p_two_sided": result.p_two_sided,
        "ci95": list(result.ci95),
        "method": result.method,
    }


def analyze(source) -> dict:
    """All paper-style statistics from one exported log."""
    records = [r for r in load_log(source) if r.get("type") == "response"]
    turing = [r for r in records if r.get("task") == "turing"]
    ranking = [r for r in records if r.get("task") == "ranking"]
    progression = [r for r in records if r.get("task") == "progression"]
    report = {"n_responses": len(records)}

    # Task 1: real-vs-generated detection
    if turing:
        truth = {r["stimulus"]: r["ground_truth"]["provenance"] for r in turing}
        categories = {r["stimulus"]: r["ground_truth"].get("category") for r in turing}
        summary = turing_summary(turing, truth)
        per_user = {}
        for user, entry in summary["per_user"].items():
            per_user[user] = dict(entry, test=_test_dict(entry["test"]))
        report["turing"] = {
            "per_user": per_user,
            "overall": _test_dict(summary["overall"]),
            "majority_wrong": summary["majority_wrong"],
        }
        users = {r["user"] for r in turing}
        if len(users) >= 2:
            triples = [{"user": r["user"], "item": r["stimulus"], "value": r["verdict"]}
                       for r in turing]
            try:
                agreement = agreement_matrix(triples, common_only=True)
                report["agreement"] = {
                    "raters": list(agreement.raters),
                    "pairwise": [[float(x) for x in row] for row in agreement.pairwise],
                    "overall": agreement.overall,
                    "n_common_items": agreement.n_common_items,
                }
            except Undefined:
                report["agreement"] = None
        else:
            report["agreement"] = None
        report["difficulty_by_category"] = difficulty_by_category(turing, categories)
        by_user_difficulty = {}
        for r in turing:
            by_user_difficulty.setdefault(r["user"], []).append(r["difficulty"])
        report["rolling_difficulty"] = {
            u: rolling_mean(vals, window=5) for u, vals in sorted(by_user_difficulty.items())
        }
    else:
        report["turing"] = None
        report["agreement"] = None

    # Task 2: ranking
    if ranking:
        image_truth = {}
        for r in ranking:
            image_truth.update(r["ground_truth"])
        report["ranking"] = ranking_stats(ranking, image_truth)
    else:
        report["ranking"] = None

    # Task 3: progressions
    if progression:
        by_user = {}
        plaus = []
        for r in progression:
            seq = r["ground_truth"]["sequence"]
            by_user.setdefault(r["user"], []).append(r["severities"])
            plaus.append({"user": r["user"], "sequence": seq,
                          "plausibility": r["plausibility"]})
        prog_per_user = {}
        for user, sequences in sorted(by_user.items()):
            s = progression_summary(sequences)
            prog_per_user[user] = {
                "n_sequences": len(sequences),
                "mean_slope": s["mean_slope"],
                "mean_angle_deg": s["mean_angle_deg"],
                "per_sequence": [{"slope": r.slope, "angle_deg": r.angle_deg}
                                 for r in s["per_sequence"]],
            }
        report["progression"] = prog_per_user
        report["plausibility"] = plausibility_summary(plaus)
    else:
        report["progression"] = None
        report["plausibility"] = None
    return report


def write_report(report: dict, out_path) -> list:
    """Write report.json plus table1/2/3 CSVs beside it; returns the paths."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    written = [out_path]
    with open(out_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)

    base = out_path.parent

    t1 = base / "table1.csv"
    with open(t1, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user", "images", "n_generates", "proportion", "ci_lo", "ci_hi",
                    "p_value", "accuracy_all"])
        turing = report.get("turing")
        if turing:
            pooled_detected = pooled_generates = 0
            for user, e in turing["per_user"].items():
                t = e["test"]
                w.writerow([
                    user, e["n"], e["n_generates"],
                    _fmt(e["detection_proportion"]),
                    _fmt(t["ci95"][0]) if t else "", _fmt(t["ci95"][1]) if t else "",
                    _fmt(t["p_two_sided"]) if t else "",
                    _fmt(e["accuracy_all"]),
                ])
                pooled_detected += e["n_detected"]
                pooled_generates += e["n_generates"]
            if pooled_generates:
                avg = one_prop_ztest(pooled_detected, pooled_generates)
                w.writerow(["Average", sum(e["n"] for e in turing["per_user"].values()),
                            pooled_generates, _fmt(avg.p_hat), _fmt(avg.ci95[0]),
                            _fmt(avg.ci95[1]), _fmt(avg.p_two_sided), ""])
    written.append(t1)

    t2 = base / "table2.csv"
    with open(t2, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user", "n_sets", "pct_first_generate", "pct_both_generates"])
        for user, e in (report.get("ranking") or {}).items():
            w.writerow([user, e["n_sets"], _fmt(e["pct_first_generate"]),
                        _fmt(e["pct_both_generates"])])
    written.append(t2)

    t3 = base / "table3.csv"
    with open(t3, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user", "n_sequences", "mean_slope", "mean_angle_deg",
                    "mean_plausibility"])
        prog = report.get("progression") or {}
        plaus = (report.get("plausibility") or {}).get("per_user", {})
        for user in sorted(set(prog) | set(plaus)):
            p = prog.get(user, {})
            w.writerow([user, p.get("n_sequences", ""), _fmt(p.get("mean_slope")),
                        _fmt(p.get("mean_angle_deg")), _fmt(plaus.get(user))])
    written.append(t3)
    return written


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.6g}"

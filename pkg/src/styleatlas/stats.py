"""Statistical analyses over exported study response logs.

Proportion tests for the real-vs-generated task, Krippendorff agreement,
ranking percentages, progression monotonicity, plausibility summaries, and
the small helpers the report tables need. Response records are plain dicts
(as exported by the study service); every function also accepts objects with
equivalently named attributes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NoData, Undefined, ValidationError

logger = logging.getLogger(__name__)

Z_95 = 1.96  # two-sided 95% normal quantile as used in the report tables

DIFFICULTY_LABELS = ("Very Difficult", "Difficult", "Neutral", "Easy", "Very Easy")
SEVERITY_LABELS = ("normal", "mild", "moderate", "severe")
PLAUSIBILITY_LABELS = ("Very Unlikely", "Unlikely", "Neutral", "Likely", "Very Likely")

_MISSING = object()


def _field(rec, name, default=_MISSING):
    if isinstance(rec, dict):
        value = rec.get(name, default)
    else:
        value = getattr(rec, name, default)
    if value is _MISSING:
        raise InvalidInput(f"response record is missing field {name!r}")
    return value


def _phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@dataclass(frozen=True)
class ProportionTestResult:
    p_hat: float
    n: int
    z: float
    p_two_sided: float
    ci95: tuple
    method: str

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise InvalidInput(f"p_hat must lie in [0, 1], got {self.p_hat}")
        if self.method not in ("wald_z", "exact_binomial"):
            raise InvalidInput(f"unknown method {self.method!r}")
        lo, hi = self.ci95
        if self.method == "wald_z" and not (lo <= self.p_hat <= hi):
            raise InvalidInput("Wald interval must contain p_hat")
        object.__setattr__(self, "ci95", (float(lo), float(hi)))


def _wald_ci(p_hat: float, n: int) -> tuple:
    half = Z_95 * math.sqrt(p_hat * (1.0 - p_hat) / n)
    return (max(0.0, p_hat - half), min(1.0, p_hat + half))


def _wilson_ci(p_hat: float, n: int) -> tuple:
    z2 = Z_95 * Z_95
    denom = 1.0 + z2 / n
    center = (p_hat + z2 / (2.0 * n)) / denom
    half = Z_95 * math.sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def one_prop_ztest(value=None, n=None, p0: float = 0.5, *, successes=None, p_hat=None,
                   ci_method: str = "wald") -> ProportionTestResult:
    """Two-sided one-proportion z test against p0.

    The first argument is either an integer success count or a proportion in
    [0, 1]; both can also be passed by keyword. z uses the null standard
    error sqrt(p0 (1-p0)/n); the p-value is 2 (1 - Phi(|z|)) computed through
    erfc; the interval is Wald p_hat +/- 1.96 sqrt(p_hat (1-p_hat)/n) clipped
    to [0, 1] (Wilson available via ci_method="wilson").
    """
    if n is None or n < 1:
        raise InvalidInput(f"n must be a positive integer, got {n}")
    n = int(n)
    if successes is None and p_hat is None:
        if value is None:
            raise InvalidInput("provide a success count or a proportion")
        if isinstance(value, bool):
            raise InvalidInput("first argument must be a count or proportion, not a bool")
        if isinstance(value, (int, np.integer)):
            successes = int(value)
        else:
            p_hat = float(value)
    if successes is not None:
        if not 0 <= successes <= n:
            raise InvalidInput(f"successes={successes} outside [0, {n}]")
        p_hat = successes / n
    p_hat = float(p_hat)
    if not 0.0 <= p_hat <= 1.0:
        raise InvalidInput(f"proportion {p_hat} outside [0, 1]")
    if not 0.0 < p0 < 1.0:
        raise InvalidInput(f"p0 must lie strictly inside (0, 1), got {p0}")

    z = (p_hat - p0) / math.sqrt(p0 * (1.0 - p0) / n)
    p_two = math.erfc(abs(z) / math.sqrt(2.0))  # equals 2 (1 - Phi(|z|))
    if ci_method == "wald":
        ci = _wald_ci(p_hat, n)
    elif ci_method == "wilson":
        ci = _wilson_ci(p_hat, n)
    else:
        raise InvalidInput(f"unknown ci_method {ci_method!r}")
    return ProportionTestResult(p_hat=p_hat, n=n, z=z, p_two_sided=min(1.0, p_two),
                                ci95=ci, method="wald_z")


def exact_binomial_test(k: int, n: int, p0: float = 0.5) -> ProportionTestResult:
    """Two-sided exact binomial test by pmf comparison.

    p = sum of Binomial(n, p0) pmf over all outcomes no more likely than k
    (with a (1 + 1e-12) slack for ties). Log-space pmf keeps this stable up
    to n around 1e5. The reported z and interval are the Wald quantities for
    reference alongside the exact p-value.
    """
    if n < 1:
        raise InvalidInput(f"n must be a positive integer, got {n}")
    if not 0 <= k <= n:
        raise InvalidInput(f"k={k} outside [0, {n}]")
    if not 0.0 <= p0 <= 1.0:
        raise InvalidInput(f"p0 must lie in [0, 1], got {p0}")
    p_hat = k / n
    if p0 in (0.0, 1.0):
        expected = 0 if p0 == 0.0 else n
        p_two = 1.0 if k == expected else 0.0
    else:
        log_p0, log_q0 = math.log(p0), math.log(1.0 - p0)

        def logpmf(i):
            return (math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
                    + i * log_p0 + (n - i) * log_q0)

        cutoff = logpmf(k) + math.log1p(1e-12)
        p_two = min(1.0, sum(math.exp(lp) for i in range(n + 1)
                             if (lp := logpmf(i)) <= cutoff))
    z = (p_hat - p0) / math.sqrt(p0 * (1.0 - p0) / n) if 0.0 < p0 < 1.0 else math.nan
    return ProportionTestResult(p_hat=p_hat, n=n, z=z, p_two_sided=p_two,
                                ci95=_wald_ci(p_hat, n), method="exact_binomial")


# ---------------------------------------------------------------------------
# agreement


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def krippendorff_alpha(ratings, level: str = "nominal") -> float:
    """Krippendorff's alpha over an items x raters table with missing cells.

    Coincidence-matrix formulation with the nominal delta; items carrying
    fewer than two ratings are excluded. A table with a single observed
    category returns 1.0 by convention (logged); a table with nothing
    pairable raises Undefined.
    """
    if level != "nominal":
        raise InvalidInput(f"only nominal level is supported, got {level!r}")
    pairable = []
    for row in ratings:
        vals = [v for v in row if not _is_missing(v)]
        if len(vals) >= 2:
            pairable.append(vals)
    if not pairable:
        raise Undefined("no item carries two or more ratings; alpha is undefined")
    categories = sorted({v for vals in pairable for v in vals}, key=repr)
    if len(categories) == 1:
        logger.info("all pairable ratings identical; returning alpha=1.0 by convention")
        return 1.0
    index = {c: i for i, c in enumerate(categories)}
    k = len(categories)
    o = np.zeros((k, k))
    for vals in pairable:
        m = len(vals)
        for i, a in enumerate(vals):
            for j, b in enumerate(vals):
                if i != j:
                    o[index[a], index[b]] += 1.0 / (m - 1)
    n_total = o.sum()
    n_c = o.sum(axis=1)
    denom = n_total * n_total - float(n_c @ n_c)
    if denom <= 0:
        raise Undefined("degenerate coincidence matrix; alpha is undefined")
    return 1.0 - (n_total - 1.0) * (n_total - float(np.trace(o))) / denom


@dataclass(frozen=True)
class AgreementMatrix:
    raters: tuple
    pairwise: np.ndarray
    overall: float
    n_common_items: int

    def __post_init__(self):
        p = np.asarray(self.pairwise, dtype=np.float64)
        r = len(self.raters)
        if p.shape != (r, r):
            raise InvalidInput(f"pairwise matrix must be ({r}, {r}), got {p.shape}")
        if not np.allclose(p, p.T, equal_nan=True):
            raise InvalidInput("pairwise matrix must be symmetric")
        if not np.allclose(np.diag(p), 1.0):
            raise InvalidInput("diagonal must be 1 by convention")
        object.__setattr__(self, "pairwise", p)
        object.__setattr__(self, "raters", tuple(self.raters))


def agreement_matrix(responses, common_only: bool = True) -> AgreementMatrix:
    """Pairwise and overall Krippendorff alpha between raters.

    responses: records with fields user, item, value. With common_only, both
    the pairwise entries and the overall coefficient are computed on the
    items every rater answered.
    """
    table = {}
    for rec in responses:
        user = _field(rec, "user")
        item = _field(rec, "item")
        table.setdefault(item, {})[user] = _field(rec, "value")
    raters = tuple(sorted({u for row in table.values() for u in row}))
    if len(raters) < 2:
        raise Undefined("need at least two raters for an agreement matrix")
    common = sorted((i for i, row in table.items() if all(u in row for u in raters)), key=repr)
    if common_only and not common:
        raise Undefined("no items are common to all raters")
    items = common if common_only else sorted(table, key=repr)

    def alpha_for(pair):
        rows = [[table[i].get(u) for u in pair] for i in items]
        return krippendorff_alpha(rows)

    r = len(raters)
    pairwise = np.eye(r)
    for a in range(r):
        for b in range(a + 1, r):
            pairwise[a, b] = pairwise[b, a] = alpha_for((raters[a], raters[b]))
    overall = alpha_for(raters)
    return AgreementMatrix(raters=raters, pairwise=pairwise, overall=overall,
                           n_common_items=len(common))


# ---------------------------------------------------------------------------
# task summaries


def turing_summary(responses, ground_truth) -> dict:
    """Per-user detection stats on generated stimuli plus majority-wrong list.

    ground_truth maps stimulus id to provenance. Detection proportion is
    defined over generated stimuli only; whole-pool accuracy is reported
    separately. majority_wrong collects stimuli where more than half of the
    responding users picked the wrong provenance.
    """
    per_user_counts = {}
    by_stimulus = {}
    for rec in responses:
        user = _field(rec, "user")
        stim = _field(rec, "stimulus")
        verdict = _field(rec, "verdict")
        difficulty = int(_field(rec, "difficulty"))
        if stim not in ground_truth:
            raise InvalidInput(f"no ground truth for stimulus {stim!r}")
        if verdict not in ("real", "generated"):
            raise ValidationError(f"verdict must be real or generated, got {verdict!r}")
        if not 1 <= difficulty <= 5:
            raise ValidationError(f"difficulty {difficulty} outside 1..5")
        truth = ground_truth[stim]
        u = per_user_counts.setdefault(user, {
            "n": 0, "n_correct": 0, "n_generates": 0, "n_detected": 0,
            "difficulty_hist": {i: 0 for i in range(1, 6)},
        })
        u["n"] += 1
        u["n_correct"] += verdict == truth
        u["difficulty_hist"][difficulty] += 1
        if truth == "generated":
            u["n_generates"] += 1
            u["n_detected"] += verdict == "generated"
        by_stimulus.setdefault(stim, []).append(verdict == truth)

    per_user = {}
    pooled_detected = pooled_generates = 0
    for user, c in sorted(per_user_counts.items(), key=lambda kv: repr(kv[0])):
        entry = dict(c)
        entry["accuracy_all"] = c["n_correct"] / c["n"]
        if c["n_generates"] > 0:
            entry["detection_proportion"] = c["n_detected"] / c["n_generates"]
            entry["test"] = one_prop_ztest(c["n_detected"], c["n_generates"])
        else:
            entry["detection_proportion"] = None
            entry["test"] = None
        per_user[user] = entry
        pooled_detected += c["n_detected"]
        pooled_generates += c["n_generates"]

    majority_wrong = []
    for stim in sorted(by_stimulus, key=repr):
        marks = by_stimulus[stim]
        wrong = sum(1 for ok in marks if not ok)
        if wrong * 2 > len(marks):
            majority_wrong.append({"stimulus": stim, "n_wrong": wrong,
                                   "n_responses": len(marks),
                                   "truth": ground_truth[stim]})
    overall = one_prop_ztest(pooled_detected, pooled_generates) if pooled_generates else None
    return {"per_user": per_user, "majority_wrong": majority_wrong, "overall": overall}


def ranking_stats(responses, ground_truth) -> dict:
    """Per-user ranking percentages.

    Each response's order lists 4 image ids, most realistic first; the ids
    must split 2 real + 2 generated under ground_truth. Returns, per user,
    the percentage of sets where a generate was ranked first and where both
    generates took the top two places.
    """
    per_user = {}
    for rec in responses:
        user = _field(rec, "user")
        order = list(_field(rec, "order"))
        if len(order) != 4 or len(set(order)) != 4:
            raise ValidationError(f"order must be a permutation of 4 image ids, got {order}")
        try:
            provs = [ground_truth[i] for i in order]
        except KeyError as exc:
            raise ValidationError(f"unknown image id in ranking order: {exc}") from exc
        if provs.count("real") != 2 or provs.count("generated") != 2:
            raise ValidationError("ranking set must contain exactly 2 real and 2 generated images")
        u = per_user.setdefault(user, {"n_sets": 0, "first_count": 0, "both_count": 0})
        u["n_sets"] += 1
        u["first_count"] += provs[0] == "generated"
        u["both_count"] += provs[0] == "generated" and provs[1] == "generated"

    out = {}
    for user, c in sorted(per_user.items(), key=lambda kv: repr(kv[0])):
        out[user] = {
            "n_sets": c["n_sets"],
            "pct_first_generate": 100.0 * c["first_count"] / c["n_sets"],
            "pct_both_generates": 100.0 * c["both_count"] / c["n_sets"],
        }
    return out


@dataclass(frozen=True)
class MonotonicityResult:
    """Least-squares slope of ratings vs image index, plus its angle."""

    slope: float
    angle_deg: float
    per_sequence: tuple

    def __post_init__(self):
        expected = math.degrees(math.atan(self.slope))
        if abs(expected - self.angle_deg) > 1e-9:
            raise InvalidInput("angle_deg must equal degrees(atan(slope))")


def progression_slope(severities) -> MonotonicityResult:
    """OLS slope of severity ratings against image index 1..n.

    Ratings must lie in 1..4; ties are fine (the scale is coarser than the
    sequence length by design).
    """
    vals = [float(v) for v in severities]
    if len(vals) < 2:
        raise InvalidInput(f"need at least 2 ratings, got {len(vals)}")
    if any(not 1.0 <= v <= 4.0 for v in vals):
        raise ValidationError(f"severity ratings must lie in 1..4, got {severities}")
    x = np.arange(1, len(vals) + 1, dtype=np.float64)
    y = np.asarray(vals)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    angle = math.degrees(math.atan(slope))
    return MonotonicityResult(slope=slope, angle_deg=angle,
                              per_sequence=((slope, angle),))


def progression_summary(sequences) -> dict:
    """Arithmetic means of per-sequence slopes and angles.

    mean_angle_deg averages the per-sequence angles directly (it is not the
    angle of the mean slope); that is the figure comparable across raters.
    """
    results = [progression_slope(s) for s in sequences]
    if not results:
        raise NoData("no progression sequences to summarize")
    return {
        "per_sequence": results,
        "mean_slope": float(np.mean([r.slope for r in results])),
        "mean_angle_deg": float(np.mean([r.angle_deg for r in results])),
    }


def plausibility_summary(responses) -> dict:
    """Plausibility means and per-sequence histograms.

    responses: records with user, sequence, plausibility in 1..5. The overall
    mean averages the per-user means so raters with different workloads weigh
    equally.
    """
    per_user_vals = {}
    per_seq = {}
    count = 0
    for rec in responses:
        user = _field(rec, "user")
        seq = _field(rec, "sequence")
        rating = int(_field(rec, "plausibility"))
        if not 1 <= rating <= 5:
            raise ValidationError(f"plausibility {rating} outside 1..5")
        per_user_vals.setdefault(user, []).append(rating)
        hist = per_seq.setdefault(seq, {label: 0 for label in PLAUSIBILITY_LABELS})
        hist[PLAUSIBILITY_LABELS[rating - 1]] += 1
        count += 1
    if count == 0:
        raise NoData("no plausibility responses")
    per_user = {u: float(np.mean(v)) for u, v in
                sorted(per_user_vals.items(), key=lambda kv: repr(kv[0]))}
    return {
        "per_user": per_user,
        "overall_mean": float(np.mean(list(per_user.values()))),
        "per_sequence": {k: per_seq[k] for k in sorted(per_seq, key=repr)},
        "labels": PLAUSIBILITY_LABELS,
    }


def rolling_mean(series, window: int = 5):
    """Trailing mean; the first window-1 entries average the available prefix."""
    if window < 1:
        raise InvalidInput(f"window must be at least 1, got {window}")
    vals = [float(v) for v in series]
    if not vals:
        raise NoData("empty series")
    cs = np.concatenate([[0.0], np.cumsum(vals)])
    out = []
    for i in range(len(vals)):
        start = max(0, i + 1 - window)
        out.append((cs[i + 1] - cs[start]) / (i + 1 - start))
    return out


def difficulty_by_category(responses, stimulus_categories) -> dict:
    """Difficulty histograms per generate category plus the outlier list.

    Outliers are the individual responses rated 1 ("Very Difficult").
    Responses whose stimulus has no category are excluded and logged.
    """
    hists = {}
    outliers = []
    excluded = []
    for rec in responses:
        user = _field(rec, "user")
        stim = _field(rec, "stimulus")
        difficulty = int(_field(rec, "difficulty"))
        if not 1 <= difficulty <= 5:
            raise ValidationError(f"difficulty {difficulty} outside 1..5")
        cat = stimulus_categories.get(stim)
        if cat is None:
            excluded.append(stim)
            continue
        hist = hists.setdefault(cat, {i: 0 for i in range(1, 6)})
        hist[difficulty] += 1
        if difficulty == 1:
            outliers.append({"stimulus": stim, "user": user})
    if excluded:
        logger.info("excluded %d responses with uncategorized stimuli", len(excluded))
    return {"histograms": hists, "outliers": outliers, "excluded": excluded}

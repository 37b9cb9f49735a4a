"""Descriptive and inferential statistics for small Likert questionnaires.

Scores live in a complete participants x items matrix (1..5 integers).
Per-construct analyses operate on per-participant construct means, not on
pooled item scores, so a participant contributes one observation per
construct. The Wilcoxon and Spearman routines use the classic normal / t
approximations with average ranks for ties; with a handful of participants
these p-values are coarse screens, not precision instruments.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from scipy import stats as sps

CSV_HEADER = ("participant", "item", "construct", "score")

SCORE_MIN = 1
SCORE_MAX = 5

# Mean-score adjective bins; the upper bin is closed because 5.0 is attainable.
_ADJECTIVE_BINS = (
    (1.0, 1.25, "Very Poor"),
    (1.25, 2.5, "Poor"),
    (2.5, 3.5, "Acceptable"),
    (3.5, 4.0, "Good"),
    (4.0, 4.5, "Excellent"),
    (4.5, 5.0, "Best"),
)


class SurveyDataError(ValueError):
    """Raised when survey input is structurally invalid."""


@dataclass(frozen=True, eq=False)
class LikertMatrix:
    """Complete response matrix: participants x items, integer scores 1..5."""

    participants: tuple[str, ...]
    items: tuple[tuple[str, str], ...]  # (item_id, construct)
    scores: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LikertMatrix):
            return NotImplemented
        return (
            self.participants == other.participants
            and self.items == other.items
            and np.array_equal(self.scores, other.scores)
        )

    def __post_init__(self):
        p, i = len(self.participants), len(self.items)
        if p == 0 or i == 0:
            raise SurveyDataError("matrix needs at least one participant and one item")
        if len(set(self.participants)) != p:
            raise SurveyDataError("duplicate participant ids")
        if len({item for item, _ in self.items}) != i:
            raise SurveyDataError("duplicate item ids")
        arr = np.asarray(self.scores)
        if arr.shape != (p, i):
            raise SurveyDataError(f"scores must be {p}x{i}, got {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                raise SurveyDataError("scores must be integers")
            arr = arr.astype(np.int64)
        if arr.min() < SCORE_MIN or arr.max() > SCORE_MAX:
            raise SurveyDataError(f"scores must lie in [{SCORE_MIN}, {SCORE_MAX}]")
        object.__setattr__(self, "scores", arr.astype(np.int64))

    @property
    def constructs(self) -> tuple[str, ...]:
        seen: list[str] = []
        for _, construct in self.items:
            if construct not in seen:
                seen.append(construct)
        return tuple(seen)

    def item_scores(self, item_id: str) -> np.ndarray:
        for idx, (item, _) in enumerate(self.items):
            if item == item_id:
                return self.scores[:, idx]
        raise KeyError(item_id)

    def construct_matrix(self, construct: str) -> np.ndarray:
        cols = [idx for idx, (_, c) in enumerate(self.items) if c == construct]
        if not cols:
            raise KeyError(construct)
        return self.scores[:, cols]

    def construct_means(self, construct: str) -> np.ndarray:
        """Per-participant mean over the construct's items."""
        return self.construct_matrix(construct).mean(axis=1)

    @classmethod
    def from_long_records(
        cls, records: Iterable[tuple[str, str, str, int]]
    ) -> "LikertMatrix":
        participants: list[str] = []
        items: list[tuple[str, str]] = []
        cells: dict[tuple[str, str], int] = {}
        item_construct: dict[str, str] = {}
        for participant, item, construct, score in records:
            if participant not in participants:
                participants.append(participant)
            if item in item_construct:
                if item_construct[item] != construct:
                    raise SurveyDataError(
                        f"item {item!r} mapped to both {item_construct[item]!r} "
                        f"and {construct!r}"
                    )
            else:
                item_construct[item] = construct
                items.append((item, construct))
            key = (participant, item)
            if key in cells:
                raise SurveyDataError(f"duplicate response for {key}")
            cells[key] = score
        if not cells:
            raise SurveyDataError("no records")
        scores = np.empty((len(participants), len(items)), dtype=np.int64)
        for pi, participant in enumerate(participants):
            for ii, (item, _) in enumerate(items):
                key = (participant, item)
                if key not in cells:
                    raise SurveyDataError(f"missing response for {key}")
                scores[pi, ii] = cells[key]
        return cls(tuple(participants), tuple(items), scores)

    @classmethod
    def load_csv(cls, path: str | Path) -> "LikertMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SurveyDataError("empty csv") from None
            if tuple(h.strip() for h in header) != CSV_HEADER:
                raise SurveyDataError(
                    f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}"
                )
            records = []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != 4:
                    raise SurveyDataError(f"line {lineno}: expected 4 fields")
                participant, item, construct, score_text = (c.strip() for c in row)
                try:
                    score = int(score_text)
                except ValueError:
                    raise SurveyDataError(
                        f"line {lineno}: score {score_text!r} is not an integer"
                    ) from None
                records.append((participant, item, construct, score))
        return cls.from_long_records(records)


# -- scalar statistics ---------------------------------------------------------


@dataclass(frozen=True)
class Descriptive:
    n: int
    mean: float
    sd: float
    median: float
    iqr: float
    minimum: float
    maximum: float


def describe(values: Sequence[float]) -> Descriptive:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("describe expects a non-empty 1-d sample")
    q25, q75 = np.percentile(arr, [25.0, 75.0])
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return Descriptive(
        n=int(arr.size),
        mean=float(arr.mean()),
        sd=sd,
        median=float(np.median(arr)),
        iqr=float(q75 - q25),
        minimum=float(arr.min()),
        maximum=float(arr.max()),
    )


def adjective_rating(mean_score: float) -> str:
    if not (SCORE_MIN <= mean_score <= SCORE_MAX):
        raise ValueError(f"mean score {mean_score} outside [{SCORE_MIN}, {SCORE_MAX}]")
    for low, high, label in _ADJECTIVE_BINS:
        if low <= mean_score < high:
            return label
    return _ADJECTIVE_BINS[-1][2]  # exactly 5.0


def bootstrap_ci(
    values: Sequence[float],
    resamples: int = 2000,
    seed: int | np.random.Generator = 0,
    alpha: float = 0.05,
) -> tuple[float, float]:
    """Percentile bootstrap CI for the mean."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("bootstrap expects a non-empty 1-d sample")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(resamples, arr.size))
    means = arr[idx].mean(axis=1)
    lo, hi = np.quantile(means, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(lo), float(hi)


def cronbach_alpha(item_matrix: np.ndarray) -> float:
    """Internal consistency over a participants x items block; nan if degenerate."""
    arr = np.asarray(item_matrix, dtype=float)
    if arr.ndim != 2:
        raise ValueError("cronbach_alpha expects a 2-d participants x items matrix")
    n, k = arr.shape
    if k < 2 or n < 2:
        return float("nan")
    item_vars = arr.var(axis=0, ddof=1)
    total_var = arr.sum(axis=1).var(ddof=1)
    if total_var == 0.0:
        return float("nan")
    return float(k / (k - 1) * (1.0 - item_vars.sum() / total_var))


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Paired Wilcoxon (W+ statistic, two-sided p).

    Zero differences are dropped, tied absolute differences get averaged
    ranks, and the p-value comes from the tie-corrected normal
    approximation. All-zero differences give (0.0, 1.0) by convention.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("wilcoxon expects two equal-length 1-d samples")
    diff = xa - ya
    diff = diff[diff != 0.0]
    n = diff.size
    if n == 0:
        return 0.0, 1.0
    ranks = sps.rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(ranks, return_counts=True)
    var -= ((counts.astype(float) ** 3 - counts).sum()) / 48.0
    if var <= 0.0:
        return w_plus, 1.0
    z = (w_plus - mean) / math.sqrt(var)
    p = 2.0 * sps.norm.sf(abs(z))
    return w_plus, float(min(p, 1.0))


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Spearman correlation with averaged ranks; p from the t approximation."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1 or xa.size < 2:
        raise ValueError("spearman expects two equal-length 1-d samples, n >= 2")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        return float("nan"), float("nan")
    rx = sps.rankdata(xa)
    ry = sps.rankdata(ya)
    # Perfectly concordant/discordant rankings are exactly +/-1; don't let the
    # rank-Pearson arithmetic smear that into 0.999... and a nonzero p.
    if np.array_equal(rx, ry):
        rho = 1.0
    elif np.array_equal(rx, rx.size + 1.0 - ry):
        rho = -1.0
    else:
        rho = float(np.corrcoef(rx, ry)[0, 1])
    n = xa.size
    if n < 3 or abs(rho) >= 1.0:
        return rho, 0.0 if abs(rho) >= 1.0 else float("nan")
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * sps.t.sf(abs(t), df=n - 2)
    return rho, float(min(p, 1.0))


# -- whole-survey analysis -----------------------------------------------------


@dataclass(frozen=True)
class RowSummary:
    label: str
    construct: str
    n: int
    mean: float
    sd: float
    median: float
    iqr: float
    ci_low: float
    ci_high: float
    adjective: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "construct": self.construct,
            "n": self.n,
            "mean": self.mean,
            "sd": self.sd,
            "median": self.median,
            "iqr": self.iqr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "adjective": self.adjective,
        }


@dataclass(frozen=True)
class SurveyAnalysis:
    items: tuple[RowSummary, ...]
    constructs: tuple[RowSummary, ...]
    alphas: dict[str, float]
    wilcoxon_pu_peou: Optional[tuple[float, float]]
    spearman_vs_bi: dict[str, tuple[float, float]]
    top_bi_correlate: Optional[str]
    resamples: int
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "items": [r.to_dict() for r in self.items],
            "constructs": [r.to_dict() for r in self.constructs],
            "alphas": dict(self.alphas),
            "wilcoxon_pu_peou": list(self.wilcoxon_pu_peou)
            if self.wilcoxon_pu_peou is not None
            else None,
            "spearman_vs_bi": {k: list(v) for k, v in self.spearman_vs_bi.items()},
            "top_bi_correlate": self.top_bi_correlate,
            "resamples": self.resamples,
            "seed": self.seed,
        }


def _row(label: str, construct: str, values: np.ndarray,
         resamples: int, rng: np.random.Generator) -> RowSummary:
    desc = describe(values)
    lo, hi = bootstrap_ci(values, resamples=resamples, seed=rng)
    return RowSummary(
        label=label,
        construct=construct,
        n=desc.n,
        mean=desc.mean,
        sd=desc.sd,
        median=desc.median,
        iqr=desc.iqr,
        ci_low=lo,
        ci_high=hi,
        adjective=adjective_rating(desc.mean),
    )


def analyze(
    matrix: LikertMatrix,
    resamples: int = 2000,
    seed: int = 0,
    comparison: tuple[str, str] = ("PU", "PEOU"),
    outcome: str = "BI",
) -> SurveyAnalysis:
    """Full questionnaire summary. Each row's bootstrap draws come from an
    independent generator spawned off the one seed, so rows don't share or
    steal randomness from each other."""
    constructs = matrix.constructs
    n_rows = len(matrix.items) + len(constructs)
    children = np.random.SeedSequence(seed).spawn(n_rows)
    rngs = [np.random.default_rng(c) for c in children]

    item_rows = []
    for idx, (item, construct) in enumerate(matrix.items):
        values = matrix.scores[:, idx].astype(float)
        item_rows.append(_row(item, construct, values, resamples, rngs[idx]))

    construct_rows = []
    means_by_construct: dict[str, np.ndarray] = {}
    for cidx, construct in enumerate(constructs):
        means = matrix.construct_means(construct)
        means_by_construct[construct] = means
        construct_rows.append(
            _row(construct, construct, means, resamples, rngs[len(matrix.items) + cidx])
        )

    alphas = {c: cronbach_alpha(matrix.construct_matrix(c)) for c in constructs}

    wilcoxon_result = None
    a, b = comparison
    if a in means_by_construct and b in means_by_construct:
        wilcoxon_result = wilcoxon_signed_rank(means_by_construct[a], means_by_construct[b])

    spearman_vs_bi: dict[str, tuple[float, float]] = {}
    top: Optional[str] = None
    if outcome in means_by_construct:
        bi = means_by_construct[outcome]
        best = -1.0
        for construct in constructs:
            if construct == outcome:
                continue
            rho, p = spearman_rho(means_by_construct[construct], bi)
            spearman_vs_bi[construct] = (rho, p)
            if not math.isnan(rho) and abs(rho) > best:
                best = abs(rho)
                top = construct
    return SurveyAnalysis(
        items=tuple(item_rows),
        constructs=tuple(construct_rows),
        alphas=alphas,
        wilcoxon_pu_peou=wilcoxon_result,
        spearman_vs_bi=spearman_vs_bi,
        top_bi_correlate=top,
        resamples=resamples,
        seed=seed,
    )


def render_text(analysis: SurveyAnalysis) -> str:
    def fmt_rows(rows: Iterable[RowSummary]) -> list[str]:
        out = [
            f"{'label':<10}{'construct':<10}{'mean':>6}{'sd':>6}{'median':>8}"
            f"{'iqr':>6}{'95% ci':>16}  rating"
        ]
        for r in rows:
            ci = f"[{r.ci_low:.2f}, {r.ci_high:.2f}]"
            out.append(
                f"{r.label:<10}{r.construct:<10}{r.mean:>6.2f}{r.sd:>6.2f}"
                f"{r.median:>8.2f}{r.iqr:>6.2f}{ci:>16}  {r.adjective}"
            )
        return out

    lines = ["ITEMS"]
    lines += fmt_rows(analysis.items)
    lines.append("")
    lines.append("CONSTRUCTS (per-participant means)")
    lines += fmt_rows(analysis.constructs)
    lines.append("")
    lines.append("RELIABILITY (Cronbach's alpha)")
    for construct, alpha in analysis.alphas.items():
        shown = "nan" if math.isnan(alpha) else f"{alpha:.2f}"
        lines.append(f"  {construct:<8}{shown}")
    if analysis.wilcoxon_pu_peou is not None:
        w, p = analysis.wilcoxon_pu_peou
        lines.append("")
        lines.append(f"Wilcoxon PU vs PEOU: W+={w:.1f}, p={p:.3f}")
    if analysis.spearman_vs_bi:
        lines.append("")
        lines.append("Spearman vs BI")
        for construct, (rho, p) in analysis.spearman_vs_bi.items():
            mark = "  <-- strongest" if construct == analysis.top_bi_correlate else ""
            lines.append(f"  {construct:<8}rho={rho:+.3f}  p={p:.3f}{mark}")
    return "\n".join(lines)

"""
Questionnaire analysis end to end
=================================

Loads a long-format CSV of Likert responses (participant, item, construct,
score), then runs the whole reporting pipeline: per-item and per-construct
descriptives with bootstrap confidence intervals and adjective labels,
Cronbach's alpha per construct, a Wilcoxon signed-rank comparison between
the usefulness and ease-of-use constructs, and Spearman correlations of
every construct against behavioral intention.
"""
from pathlib import Path

from hapticseek.surveystats import (
    LikertMatrix,
    adjective_rating,
    analyze,
    bootstrap_ci,
    cronbach_alpha,
    render_text,
)

matrix = LikertMatrix.load_csv(Path(__file__).parent / "data" / "responses.csv")
print(f"{len(matrix.participants)} participants x {len(matrix.items)} items, "
      f"constructs: {', '.join(matrix.constructs)}\n")

# The full report in one call. Bootstrap resampling is seeded, so the
# intervals below are reproducible.
report = analyze(matrix, resamples=2000, seed=7)
print(render_text(report))

# The same pieces are available a la carte:
pu = matrix.construct_means("PU")
lo, hi = bootstrap_ci(pu, resamples=2000, seed=7)
print(f"\nPU construct mean {pu.mean():.2f} "
      f"[{lo:.2f}, {hi:.2f}] -> \"{adjective_rating(pu.mean())}\"")
print(f"PU internal consistency: alpha = {cronbach_alpha(matrix.construct_matrix('PU')):.3f}")

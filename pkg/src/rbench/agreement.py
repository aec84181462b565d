"""Human-preference agreement statistics.

Pairwise votes are folded into per-model human scores; agreement with the
benchmark is quantified by tie-aware Spearman correlation (exact permutation
p-value for small n), leave-one-out linear calibration, and Bland-Altman
limits of agreement on the calibrated scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import stdtr

from .errors import (
    ConstantInputError,
    InsufficientDataError,
    MissingModelError,
    SchemaError,
    SingularFitError,
)

#: Permutation counts stay enumerable up to this length; beyond it the
#: Student-t approximation takes over.
EXACT_PERMUTATION_MAX_N = 10

#: Win/tie/loss contributions on the five-point vote scale.
WIN_POINTS, TIE_POINTS, LOSS_POINTS = 5.0, 3.0, 1.0


class VoteOutcome(str, Enum):
    A_BETTER = "a_better"
    B_BETTER = "b_better"
    TIE = "tie"


@dataclass(frozen=True)
class PairwiseVote:
    annotator_id: str
    prompt_id: str
    model_a: str
    model_b: str
    outcome: VoteOutcome

    def __post_init__(self):
        if self.model_a == self.model_b:
            raise SchemaError(f"vote compares {self.model_a!r} with itself")

    @classmethod
    def from_dict(cls, payload: Mapping) -> "PairwiseVote":
        try:
            outcome = VoteOutcome(payload["outcome"])
        except (KeyError, ValueError):
            raise SchemaError(f"invalid vote outcome {payload.get('outcome')!r}") from None
        try:
            return cls(
                annotator_id=str(payload["annotator_id"]),
                prompt_id=str(payload["prompt_id"]),
                model_a=str(payload["model_a"]),
                model_b=str(payload["model_b"]),
                outcome=outcome,
            )
        except KeyError as exc:
            raise SchemaError(f"vote missing field {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "prompt_id": self.prompt_id,
            "model_a": self.model_a,
            "model_b": self.model_b,
            "outcome": self.outcome.value,
        }


def load_votes(path) -> list[PairwiseVote]:
    """Read a JSONL votes file."""
    from .records import _iter_jsonl

    return [PairwiseVote.from_dict(payload) for _, payload in _iter_jsonl(path)]


def aggregate_votes(
    votes: Sequence[PairwiseVote], models: Iterable[str] | None = None
) -> dict[str, float]:
    """Fold pairwise votes into per-model scores on [0, 1].

    Each comparison contributes 5 for a win, 3 for a tie (to both models) and
    1 for a loss; a model's score is its mean contribution divided by 5. The
    result is independent of vote order and annotator partitioning.
    """
    if not votes:
        raise ValueError("no votes given")
    points: dict[str, list[float]] = {}
    for vote in votes:
        if vote.outcome is VoteOutcome.TIE:
            a_points = b_points = TIE_POINTS
        elif vote.outcome is VoteOutcome.A_BETTER:
            a_points, b_points = WIN_POINTS, LOSS_POINTS
        else:
            a_points, b_points = LOSS_POINTS, WIN_POINTS
        points.setdefault(vote.model_a, []).append(a_points)
        points.setdefault(vote.model_b, []).append(b_points)
    if models is not None:
        missing = sorted(set(models) - set(points))
        if missing:
            raise MissingModelError(f"models with zero comparisons: {missing}")
        points = {m: points[m] for m in models}
    return {
        model: (sum(vals) / len(vals)) / WIN_POINTS for model, vals in sorted(points.items())
    }


def average_ranks(values: Sequence[float], *, descending: bool = True) -> np.ndarray:
    """Rank values (1 = best by default), assigning tied values their average rank."""
    v = np.asarray(values, dtype=float)
    key = -v if descending else v
    order = np.argsort(key, kind="stable")
    ranks = np.empty(len(v), dtype=float)
    i = 0
    sorted_key = key[order]
    while i < len(v):
        j = i
        while j + 1 < len(v) and sorted_key[j + 1] == sorted_key[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RankRow:
    model_id: str | None
    human_rank: float
    bench_rank: float
    rank_delta: float  # bench rank minus human rank


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_two_sided: float
    rank_table: tuple[RankRow, ...]


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    return float(xc @ yc) / denom


def _exact_permutation_p(rank_x: np.ndarray, rank_y: np.ndarray, s_obs: int) -> float:
    """Two-sided permutation p-value for rank correlation, by exact counting.

    Doubled (mid)ranks are integers, so the cross-sum S = sum u_i * v_perm(i)
    with u = 2*rank_x, v = 2*rank_y is an integer and the correlation is an
    increasing affine function of S. A subset DP counts, for every achievable
    S, the number of the n! pairings attaining it: state = set of used v
    entries (its size says which u entry is assigned next). |rho| >= |rho_obs|
    then corresponds to S at or beyond s_obs and its reflection around the
    zero-correlation point n(n+1)^2.
    """
    n = len(rank_x)
    u = np.rint(2 * rank_x).astype(np.int64)
    v = np.rint(2 * rank_y).astype(np.int64)
    size = int(np.sort(u) @ np.sort(v)) + 1  # sorted-together cross-sum is maximal
    full = (1 << n) - 1
    dp: list[np.ndarray | None] = [None] * (full + 1)
    dp[0] = np.zeros(size, dtype=np.int64)
    dp[0][0] = 1
    for mask in range(full):
        counts = dp[mask]
        if counts is None:
            continue
        u_next = int(u[bin(mask).count("1")])
        for j in range(n):
            bit = 1 << j
            if mask & bit:
                continue
            shift = u_next * int(v[j])
            target = dp[mask | bit]
            if target is None:
                target = np.zeros(size, dtype=np.int64)
                dp[mask | bit] = target
            if shift:
                target[shift:] += counts[: size - shift]
            else:
                target += counts
        dp[mask] = None  # free as we go; masks are visited in increasing order
    distribution = dp[full]
    center = n * (n + 1) ** 2
    reflected = 2 * center - s_obs
    if s_obs == center:
        return 1.0
    hi, lo = (s_obs, reflected) if s_obs > center else (reflected, s_obs)
    count = int(distribution[hi:].sum()) + int(distribution[: lo + 1].sum())
    return count / math.factorial(n)


def spearman(
    h: Sequence[float], b: Sequence[float], model_ids: Sequence[str] | None = None
) -> CorrelationResult:
    """Tie-aware Spearman correlation with a two-sided significance level.

    Without ties, rho uses the classic 1 - 6*sum(d^2)/(n(n^2-1)) form;
    with ties it falls back to the Pearson correlation of average ranks. The
    p-value is an exact permutation count for n <= 10 and a Student-t
    approximation beyond that.
    """
    hv = np.asarray(h, dtype=float)
    bv = np.asarray(b, dtype=float)
    if hv.shape != bv.shape or hv.ndim != 1:
        raise ValueError(f"score vectors must share a 1-D shape, got {hv.shape} vs {bv.shape}")
    n = hv.shape[0]
    if n < 3:
        raise InsufficientDataError(f"need at least 3 paired scores, got {n}")
    if not (np.all(np.isfinite(hv)) and np.all(np.isfinite(bv))):
        raise ValueError("scores must be finite")
    if np.ptp(hv) == 0 or np.ptp(bv) == 0:
        raise ConstantInputError("correlation undefined for a constant score vector")
    if model_ids is not None and len(model_ids) != n:
        raise ValueError("model_ids length must match the score vectors")

    rank_h = average_ranks(hv)
    rank_b = average_ranks(bv)
    has_ties = len(set(rank_h.tolist())) < n or len(set(rank_b.tolist())) < n
    if has_ties:
        rho = _pearson(rank_h, rank_b)
    else:
        d2 = float(np.sum((rank_h - rank_b) ** 2))
        rho = 1.0 - 6.0 * d2 / (n * (n * n - 1))

    if n <= EXACT_PERMUTATION_MAX_N:
        s_obs = int(np.rint(2 * rank_h) @ np.rint(2 * rank_b))
        p = _exact_permutation_p(rank_h, rank_b, s_obs)
    elif 1.0 - rho * rho < 1e-15:
        p = 0.0
    else:
        t_stat = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = 2.0 * float(stdtr(n - 2, -abs(t_stat)))

    table = tuple(
        RankRow(
            model_id=model_ids[i] if model_ids is not None else None,
            human_rank=float(rank_h[i]),
            bench_rank=float(rank_b[i]),
            rank_delta=float(rank_b[i] - rank_h[i]),
        )
        for i in range(n)
    )
    return CorrelationResult(rho=rho, p_two_sided=p, rank_table=table)


@dataclass(frozen=True)
class CalibrationFit:
    """One leave-one-out fit: intercept, slope, and the held-out calibrated score."""

    alpha: float
    beta: float
    calibrated: float


def loo_calibrate(pairs: Sequence[tuple[float, float]]) -> list[CalibrationFit]:
    """Leave-one-out linear calibration of benchmark scores against human scores.

    For each held-out point i, ordinary least squares fits bench = alpha +
    beta * human over the remaining points; the calibrated score applies that
    fit to the held-out benchmark value. Requires n >= 4 so every fit has at
    least three points.
    """
    n = len(pairs)
    if n < 4:
        raise InsufficientDataError(f"leave-one-out calibration needs n >= 4, got {n}")
    human = np.asarray([p[0] for p in pairs], dtype=float)
    bench = np.asarray([p[1] for p in pairs], dtype=float)
    if not (np.all(np.isfinite(human)) and np.all(np.isfinite(bench))):
        raise ValueError("scores must be finite")
    fits = []
    for i in range(n):
        keep = np.arange(n) != i
        h_sub, b_sub = human[keep], bench[keep]
        if np.ptp(h_sub) == 0:
            raise SingularFitError(f"zero human-score variance when holding out point {i}")
        design = np.column_stack([np.ones(n - 1), h_sub])
        (alpha, beta), *_ = np.linalg.lstsq(design, b_sub, rcond=None)
        fits.append(
            CalibrationFit(
                alpha=float(alpha),
                beta=float(beta),
                calibrated=float(alpha + beta * bench[i]),
            )
        )
    return fits


@dataclass(frozen=True)
class BlandAltmanResult:
    bias: float
    loa_low: float
    loa_high: float
    means: tuple[float, ...]
    diffs: tuple[float, ...]


def bland_altman(points: Sequence[tuple[float, float]]) -> BlandAltmanResult:
    """Bland-Altman agreement between benchmark and calibrated human scores.

    Each point is (benchmark, calibrated); differences are benchmark minus
    calibrated. Limits of agreement use bias +/- 1.96 times the sample
    (n-1 denominator) standard deviation of the differences.
    """
    if len(points) < 3:
        raise InsufficientDataError(f"Bland-Altman needs at least 3 points, got {len(points)}")
    bench = np.asarray([p[0] for p in points], dtype=float)
    calibrated = np.asarray([p[1] for p in points], dtype=float)
    diffs = bench - calibrated
    means = (bench + calibrated) / 2.0
    bias = float(diffs.mean())
    spread = 1.96 * float(diffs.std(ddof=1))
    return BlandAltmanResult(
        bias=bias,
        loa_low=bias - spread,
        loa_high=bias + spread,
        means=tuple(float(x) for x in means),
        diffs=tuple(float(x) for x in diffs),
    )


@dataclass(frozen=True)
class AgreementPoint:
    """Per-model agreement row, in published column order (mean, diff, alpha, beta)."""

    model_id: str
    human_score: float
    bench_score: float
    calibrated: float
    mean: float
    diff: float
    alpha_loo: float
    beta_loo: float


@dataclass(frozen=True)
class AgreementReport:
    correlation: CorrelationResult
    bland_altman: BlandAltmanResult | None
    points: tuple[AgreementPoint, ...]

    def to_dict(self) -> dict:
        payload: dict = {
            "correlation": {
                "rho": self.correlation.rho,
                "p_two_sided": self.correlation.p_two_sided,
                "rank_table": [
                    {
                        "model_id": row.model_id,
                        "human_rank": row.human_rank,
                        "bench_rank": row.bench_rank,
                        "rank_delta": row.rank_delta,
                    }
                    for row in self.correlation.rank_table
                ],
            },
            "bland_altman": None,
            "points": [
                {
                    "model_id": p.model_id,
                    "mean": p.mean,
                    "diff": p.diff,
                    "alpha_loo": p.alpha_loo,
                    "beta_loo": p.beta_loo,
                    "human_score": p.human_score,
                    "bench_score": p.bench_score,
                    "calibrated": p.calibrated,
                }
                for p in self.points
            ],
        }
        if self.bland_altman is not None:
            payload["bland_altman"] = {
                "bias": self.bland_altman.bias,
                "loa_low": self.bland_altman.loa_low,
                "loa_high": self.bland_altman.loa_high,
            }
        return payload


def build_agreement_report(
    human_scores: Mapping[str, float], bench_scores: Mapping[str, float]
) -> AgreementReport:
    """Full agreement analysis over the models scored by both systems.

    Correlation always runs; calibration and Bland-Altman are skipped (with
    the table omitted) when fewer than four models are available.
    """
    common = sorted(set(human_scores) & set(bench_scores))
    if len(common) < 3:
        raise InsufficientDataError(f"need at least 3 common models, got {len(common)}")
    h = [human_scores[m] for m in common]
    b = [bench_scores[m] for m in common]
    correlation = spearman(h, b, model_ids=common)
    if len(common) < 4:
        return AgreementReport(correlation=correlation, bland_altman=None, points=())
    fits = loo_calibrate(list(zip(h, b)))
    ba = bland_altman([(b[i], fits[i].calibrated) for i in range(len(common))])
    points = [
        AgreementPoint(
            model_id=common[i],
            human_score=h[i],
            bench_score=b[i],
            calibrated=fits[i].calibrated,
            mean=ba.means[i],
            diff=ba.diffs[i],
            alpha_loo=fits[i].alpha,
            beta_loo=fits[i].beta,
        )
        for i in range(len(common))
    ]
    points.sort(key=lambda p: (-p.diff, p.model_id))
    return AgreementReport(correlation=correlation, bland_altman=ba, points=tuple(points))

"""Dot-product retrieval and ranking metrics.

Everything here is brute force by design: corpora are desk-scale and the
metric oracles need exact scores, so there is no approximate index.  All
rankings use one deterministic tie-break — descending score, then
ascending document ID — which makes runs reproducible bit for bit and
lets "identical rankings" be asserted exactly in tests.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import solvers
from .ops import apply_transform, zero_pad
from .types import EmbeddingMatrix, LinearTransform, OrthogonalTransform
from .validation import ValidationError, check_positive_int, seeded_rng


class TruncationWarning(UserWarning):
    """A requested cutoff exceeded the corpus size and was truncated."""


@dataclass(frozen=True, eq=False)
class RelevanceJudgments:
    """Graded relevance labels: query ID -> document ID -> grade >= 0."""

    grades: dict[str, dict[str, float]]

    def __post_init__(self):
        clean: dict[str, dict[str, float]] = {}
        for qid, docs in self.grades.items():
            qid = str(qid)
            if not qid:
                raise ValidationError("empty query ID in judgments")
            per_doc: dict[str, float] = {}
            for did, grade in docs.items():
                did = str(did)
                if not did:
                    raise ValidationError(f"empty document ID for query {qid!r}")
                grade = float(grade)
                if not math.isfinite(grade) or grade < 0.0:
                    raise ValidationError(
                        f"grade for ({qid!r}, {did!r}) must be a finite "
                        f"nonnegative real, got {grade}"
                    )
                per_doc[did] = grade
            clean[qid] = per_doc
        object.__setattr__(self, "grades", clean)

    @classmethod
    def from_tsv(cls, path) -> "RelevanceJudgments":
        """Load judgments from a headerless ``query_id\\tdoc_id\\tgrade`` file."""
        grades: dict[str, dict[str, float]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValidationError(
                        f"{path}:{lineno}: expected 3 tab-separated fields, "
                        f"got {len(parts)}"
                    )
                qid, did, grade_text = parts
                try:
                    grade = float(grade_text)
                except ValueError:
                    raise ValidationError(
                        f"{path}:{lineno}: bad grade {grade_text!r}"
                    ) from None
                grades.setdefault(qid, {})[did] = grade
        return cls(grades)

    def to_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for qid in self.grades:
                for did, grade in self.grades[qid].items():
                    fh.write(f"{qid}\t{did}\t{grade!r}\n")


@dataclass(frozen=True, eq=False)
class RetrievalRun:
    """Ranked results per query: tuples of (document ID, score), best first.

    ``k`` is the cutoff the run was produced with; no list is longer.
    Each list must be strictly ordered under the deterministic tie-break
    (descending score, ascending document ID).
    """

    rankings: dict[str, tuple[tuple[str, float], ...]]
    k: int

    def __post_init__(self):
        k = check_positive_int(self.k, "k")
        clean: dict[str, tuple[tuple[str, float], ...]] = {}
        for qid, ranked in self.rankings.items():
            ranked = tuple((str(d), float(s)) for d, s in ranked)
            if len(ranked) > k:
                raise ValidationError(
                    f"query {qid!r} has {len(ranked)} results for cutoff {k}"
                )
            for (d1, s1), (d2, s2) in zip(ranked, ranked[1:]):
                if not (s1 > s2 or (s1 == s2 and d1 < d2)):
                    raise ValidationError(
                        f"query {qid!r} results are not in canonical order "
                        f"at {d1!r} -> {d2!r}"
                    )
            clean[str(qid)] = ranked
        object.__setattr__(self, "rankings", clean)
        object.__setattr__(self, "k", k)


class MetricResult(NamedTuple):
    mean: float
    per_query: dict[str, float]


def top_k(queries: EmbeddingMatrix, documents: EmbeddingMatrix, k: int,
          exclude_self: bool = False) -> RetrievalRun:
    """Exact dot-product retrieval of the best ``k`` documents per query.

    Ties are broken by ascending document ID.  With ``exclude_self``, a
    document sharing the query's own ID is skipped (the self-retrieval
    protocol).  A cutoff beyond the corpus size is truncated with a
    :class:`TruncationWarning`.
    """
    k = check_positive_int(k, "k")
    if queries.dims != documents.dims:
        raise ValidationError(
            f"dimension mismatch: queries {queries.dims} vs documents "
            f"{documents.dims}; zero_pad the narrower set first"
        )
    if documents.count < 1:
        raise ValidationError("document corpus is empty")
    if k > documents.count:
        warnings.warn(
            f"cutoff {k} exceeds corpus size {documents.count}; truncating",
            TruncationWarning,
            stacklevel=2,
        )
        k = documents.count

    doc_ids = documents.ids
    # Lexicographic rank per document, so ascending-ID tie-break is a
    # single secondary sort key.
    id_rank = np.empty(len(doc_ids), dtype=np.int64)
    id_rank[np.argsort(np.asarray(doc_ids))] = np.arange(len(doc_ids))
    doc_index = {d: i for i, d in enumerate(doc_ids)}

    scores = queries.vectors @ documents.vectors.T
    rankings: dict[str, tuple[tuple[str, float], ...]] = {}
    for qi, qid in enumerate(queries.ids):
        row = scores[qi]
        order = np.lexsort((id_rank, -row))
        if exclude_self and qid in doc_index:
            order = order[order != doc_index[qid]]
        chosen = order[:k]
        rankings[qid] = tuple((doc_ids[j], float(row[j])) for j in chosen)
    return RetrievalRun(rankings, k)


def _require_judged(run: RetrievalRun, truth: RelevanceJudgments, qid: str) -> dict[str, float]:
    if qid not in truth.grades:
        raise ValidationError(f"query {qid!r} missing from judgments")
    return truth.grades[qid]


def recall_at_k(run: RetrievalRun, truth: RelevanceJudgments, k: int) -> MetricResult:
    """Fraction of relevant documents retrieved in the top ``k``.

    The denominator is ``min(k, n_relevant)``, so a perfect ranking always
    scores 1 even when more relevant documents exist than fit in ``k``.
    Queries with no relevant documents score 0 and stay in the mean.
    """
    k = check_positive_int(k, "k")
    per_query: dict[str, float] = {}
    for qid, ranked in run.rankings.items():
        judged = _require_judged(run, truth, qid)
        relevant = {d for d, g in judged.items() if g > 0.0}
        if not relevant:
            per_query[qid] = 0.0
            continue
        hits = sum(1 for d, _ in ranked[:k] if d in relevant)
        per_query[qid] = hits / min(k, len(relevant))
    mean = sum(per_query.values()) / len(per_query) if per_query else 0.0
    return MetricResult(mean, per_query)


def _dcg(gains) -> float:
    return sum(g / math.log2(r + 2) for r, g in enumerate(gains))


def ndcg_at_k(run: RetrievalRun, truth: RelevanceJudgments, k: int = 10) -> MetricResult:
    """Normalized discounted cumulative gain at cutoff ``k``.

    Gains are exponential, ``2**grade - 1`` (binary judgments reduce to
    0/1), discounted by ``log2(rank + 1)``; the normalizer is the ideal
    ordering of the query's judged documents.  Queries whose judged set
    has no positive grade score 0 and are counted in the mean — dropping
    them would silently change what the mean measures.
    """
    k = check_positive_int(k, "k")
    per_query: dict[str, float] = {}
    for qid, ranked in run.rankings.items():
        judged = _require_judged(run, truth, qid)
        dcg = _dcg(2.0 ** judged.get(d, 0.0) - 1.0 for d, _ in ranked[:k])
        ideal = sorted(judged.values(), reverse=True)[:k]
        idcg = _dcg(2.0 ** g - 1.0 for g in ideal)
        per_query[qid] = dcg / idcg if idcg > 0.0 else 0.0
    mean = sum(per_query.values()) / len(per_query) if per_query else 0.0
    return MetricResult(mean, per_query)


@dataclass(frozen=True)
class EvalResult:
    """Mean and per-query retrieval metrics for one configuration."""

    config: str
    k: int
    ndcg: MetricResult
    recall: MetricResult


def cross_model_eval(doc_embeds: EmbeddingMatrix, query_embeds: EmbeddingMatrix,
                     transform: OrthogonalTransform | LinearTransform | None,
                     truth: RelevanceJudgments, k: int = 10, *,
                     exclude_self: bool = False) -> EvalResult:
    """Retrieval quality of (optionally aligned) queries against documents.

    When ``transform`` is given it is applied to the queries first — the
    "aligned" configuration; without it the queries are used raw.  If the
    two sides have different widths after that, the narrower one is
    zero-padded (which changes no dot product).  Both nDCG@k and recall@k
    are reported.
    """
    if transform is not None:
        query_embeds = apply_transform(transform, query_embeds)
    width = max(doc_embeds.dims, query_embeds.dims)
    doc_embeds = zero_pad(doc_embeds, width)
    query_embeds = zero_pad(query_embeds, width)
    run = top_k(query_embeds, doc_embeds, k, exclude_self=exclude_self)
    return EvalResult(
        config="raw" if transform is None else "aligned",
        k=run.k,
        ndcg=ndcg_at_k(run, truth, run.k),
        recall=recall_at_k(run, truth, run.k),
    )


def sample_complexity_sweep(source: EmbeddingMatrix, target: EmbeddingMatrix,
                            sizes, holdout: tuple[EmbeddingMatrix, EmbeddingMatrix],
                            seeds: int, *, base_seed: int = 0
                            ) -> list[tuple[int, int, float]]:
    """Holdout alignment error as a function of fitting-set size.

    For each size ``n`` (ascending) and each repetition, fits the
    orthogonal alignment on ``n`` pool pairs sampled uniformly without
    replacement and records the normalized residual on the holdout pair:
    rows are ``(n, repetition_index, residual)``.  Streams are keyed by
    (size index, repetition index), so any subset of cells can be
    recomputed independently.
    """
    if source.ids != target.ids:
        raise ValidationError("pool ID-order mismatch; use pair_by_id first")
    if source.dims != target.dims:
        raise ValidationError(
            f"pool dimension mismatch: {source.dims} vs {target.dims}"
        )
    hold_x, hold_y = holdout
    if hold_x.ids != hold_y.ids:
        raise ValidationError("holdout ID-order mismatch; use pair_by_id first")
    if hold_x.dims != source.dims or hold_y.dims != source.dims:
        raise ValidationError("holdout dims differ from pool dims")
    if hold_x.count < 1:
        raise ValidationError("holdout is empty")
    seeds = check_positive_int(seeds, "seeds")
    sizes = sorted(check_positive_int(n, "size") for n in sizes)
    if not sizes:
        raise ValidationError("sizes must be non-empty")
    if sizes[-1] > source.count:
        raise ValidationError(
            f"size {sizes[-1]} exceeds pool of {source.count} pairs"
        )

    hx, hy = hold_x.vectors.T, hold_y.vectors.T
    hy_norm = float(np.linalg.norm(hy))
    rows = []
    for zi, n in enumerate(sizes):
        for si in range(seeds):
            rng = seeded_rng(base_seed, zi, si)
            idx = rng.choice(source.count, size=n, replace=False)
            q = solvers.procrustes_rotation(source.vectors[idx].T,
                                            target.vectors[idx].T)
            residual = float(np.linalg.norm(q @ hx - hy))
            rows.append((n, si, residual / hy_norm if hy_norm > 0.0 else 0.0))
    return rows

"""Evaluation: span / head-word / coreference F1, distance and error breakdowns.

All scores are micro-averaged over events with multiset matching: a gold
argument can satisfy at most one prediction and vice versa, and repeated
(role, span) pairs must each be predicted to count. Identification variants
ignore the role and match on position alone.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Corpus, Document, EventInstance, Span, span_head
from .errors import EvaluationError
from .fusion_head import EventPrediction, RolePrediction

logger = logging.getLogger(__name__)

DISTANCE_BINS = (-2, -1, 0, 1, 2)


@dataclass
class ScoreReport:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }

    def __add__(self, other: "ScoreReport") -> "ScoreReport":
        return ScoreReport(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def _multiset_counts(gold_keys: Iterable, pred_keys: Iterable) -> ScoreReport:
    gold = Counter(gold_keys)
    pred = Counter(pred_keys)
    tp = sum((gold & pred).values())
    return ScoreReport(tp=tp, fp=sum(pred.values()) - tp, fn=sum(gold.values()) - tp)


def pair_events(
    corpus: Corpus, predictions: Sequence[EventPrediction], strict: bool = True
) -> list[tuple[Document, int, EventInstance, list[RolePrediction]]]:
    """Align predictions with gold events by (doc_id, event index).

    Events with no prediction record pair with an empty list; prediction
    records that match no gold event raise (or are dropped when not strict).
    """
    by_key: dict[tuple[str, int], list[RolePrediction]] = {}
    for pred in predictions:
        key = (pred.doc_id, pred.event_index)
        if key in by_key:
            raise EvaluationError(f"duplicate prediction record for {key}")
        by_key[key] = pred.predictions
    paired = []
    seen = set()
    for doc, events in corpus:
        for idx, event in enumerate(events):
            key = (doc.doc_id, idx)
            seen.add(key)
            paired.append((doc, idx, event, by_key.get(key, [])))
    if strict:
        unknown = sorted(set(by_key) - seen)
        if unknown:
            raise EvaluationError(
                f"{len(unknown)} prediction records match no gold event, e.g. {unknown[0]}"
            )
    return paired


def span_f1(
    corpus: Corpus,
    predictions: Sequence[EventPrediction],
    role_sensitive: bool = True,
) -> ScoreReport:
    """Micro F1 on exact argument spans, optionally ignoring roles."""
    total = ScoreReport(0, 0, 0)
    for _, _, event, preds in pair_events(corpus, predictions):
        gold_keys = [
            (a.role, a.span.start, a.span.end) if role_sensitive else (a.span.start, a.span.end)
            for a in event.arguments
        ]
        pred_keys = [
            (p.role, p.span.start, p.span.end) if role_sensitive else (p.span.start, p.span.end)
            for p in preds
        ]
        total = total + _multiset_counts(gold_keys, pred_keys)
    return total


def head_f1(
    corpus: Corpus,
    predictions: Sequence[EventPrediction],
    role_sensitive: bool = True,
    fallback_to_span_end: bool = False,
) -> ScoreReport:
    """Micro F1 on argument head words resolved through the dependency parses."""
    total = ScoreReport(0, 0, 0)
    for doc, _, event, preds in pair_events(corpus, predictions):
        def key(role: str, span: Span):
            head = span_head(doc, span, fallback_to_span_end=fallback_to_span_end)
            return (role, head) if role_sensitive else head

        gold_keys = [key(a.role, a.span) for a in event.arguments]
        pred_keys = [key(p.role, p.span) for p in preds]
        total = total + _multiset_counts(gold_keys, pred_keys)
    return total


def _cluster_ids(doc: Document) -> dict[tuple[int, int], int]:
    ids: dict[tuple[int, int], int] = {}
    if doc.coref_clusters is not None:
        for ci, cluster in enumerate(doc.coref_clusters):
            for span in cluster:
                ids[(span.start, span.end)] = ci
    return ids


def coref_f1(
    corpus: Corpus,
    predictions: Sequence[EventPrediction],
    role_sensitive: bool = True,
) -> ScoreReport:
    """Micro F1 where a prediction may match any coreferent mention of a gold span.

    Matching is greedy by prediction score (exact span matches claimed first);
    each gold argument is consumed at most once. Documents without
    coreference clusters fall back to exact-span matching, with a warning.
    """
    missing_clusters = [doc.doc_id for doc, _ in corpus if doc.coref_clusters is None]
    if missing_clusters:
        logger.warning(
            "%d document(s) lack coreference clusters (e.g. %s); scoring them"
            " by exact span match",
            len(missing_clusters),
            missing_clusters[0],
        )
    total = ScoreReport(0, 0, 0)
    for doc, _, event, preds in pair_events(corpus, predictions):
        clusters = _cluster_ids(doc)
        gold = list(event.arguments)
        consumed = [False] * len(gold)

        def claim(pred: RolePrediction, exact: bool) -> bool:
            pkey = (pred.span.start, pred.span.end)
            for i, arg in sorted(
                enumerate(gold), key=lambda t: (t[1].span.start, t[1].span.end)
            ):
                if consumed[i]:
                    continue
                if role_sensitive and arg.role != pred.role:
                    continue
                gkey = (arg.span.start, arg.span.end)
                if exact:
                    hit = pkey == gkey
                else:
                    hit = pkey == gkey or (
                        pkey in clusters and clusters[pkey] == clusters.get(gkey)
                    )
                if hit:
                    consumed[i] = True
                    return True
            return False

        tp = 0
        ordered = sorted(preds, key=lambda p: (-p.score, p.span.start, p.span.end, p.role))
        for pred in ordered:
            if claim(pred, exact=True) or claim(pred, exact=False):
                tp += 1
        total = total + ScoreReport(tp=tp, fp=len(preds) - tp, fn=len(gold) - tp)
    return total


def evaluate_all(
    corpus: Corpus,
    predictions: Sequence[EventPrediction],
    head_fallback_to_span_end: bool = False,
) -> dict:
    """Every matching regime at once, classification and identification."""
    report = {
        "span": span_f1(corpus, predictions).as_dict(),
        "span_identification": span_f1(corpus, predictions, role_sensitive=False).as_dict(),
        "coref": coref_f1(corpus, predictions).as_dict(),
        "coref_identification": coref_f1(corpus, predictions, role_sensitive=False).as_dict(),
    }
    has_parses = all(doc.dep_parents is not None for doc, _ in corpus)
    if has_parses or head_fallback_to_span_end:
        report["head"] = head_f1(
            corpus, predictions, fallback_to_span_end=head_fallback_to_span_end
        ).as_dict()
        report["head_identification"] = head_f1(
            corpus,
            predictions,
            role_sensitive=False,
            fallback_to_span_end=head_fallback_to_span_end,
        ).as_dict()
    report["counts"] = {
        "documents": len(corpus),
        "events": sum(len(events) for _, events in corpus),
        "gold_arguments": sum(
            len(e.arguments) for _, events in corpus for e in events
        ),
        "predicted_arguments": sum(len(p.predictions) for p in predictions),
    }
    report["matching"] = "multiset"
    return report


# ---------------------------------------------------------------------------
# Sentence-distance breakdown.
# ---------------------------------------------------------------------------


def _distance_bin(doc: Document, trigger: Span, span: Span) -> int:
    d = doc.sentence_index(span.start) - doc.sentence_index(trigger.start)
    return max(-2, min(2, d))


def distance_breakdown(
    corpus: Corpus, predictions: Sequence[EventPrediction]
) -> dict[str, dict]:
    """Span F1 split by the argument-to-trigger sentence offset, clamped to ±2."""
    per_bin = {d: ScoreReport(0, 0, 0) for d in DISTANCE_BINS}
    for doc, _, event, preds in pair_events(corpus, predictions):
        for d in DISTANCE_BINS:
            gold_keys = [
                (a.role, a.span.start, a.span.end)
                for a in event.arguments
                if _distance_bin(doc, event.trigger, a.span) == d
            ]
            pred_keys = [
                (p.role, p.span.start, p.span.end)
                for p in preds
                if _distance_bin(doc, event.trigger, p.span) == d
            ]
            per_bin[d] = per_bin[d] + _multiset_counts(gold_keys, pred_keys)
    return {str(d): per_bin[d].as_dict() for d in DISTANCE_BINS}


# ---------------------------------------------------------------------------
# Error taxonomy over false-positive predictions.
# ---------------------------------------------------------------------------


class ErrorCategory(str, Enum):
    WRONG_ROLE = "wrong_role"
    OVER_EXTRACT = "over_extract"
    PARTIAL = "partial"
    OVERLAP = "overlap"
    WRONG_SPAN = "wrong_span"


def classify_error(pred: RolePrediction, gold: Sequence) -> ErrorCategory:
    """Bucket one unmatched prediction against the event's gold arguments.

    Checked in order: exact span but wrong role; a role absent from the gold
    set entirely; strictly inside a same-role gold span; any overlap with a
    same-role gold span; otherwise a wrong span for an attested role.
    """
    same_span = [a for a in gold if (a.span.start, a.span.end) == (pred.span.start, pred.span.end)]
    if any(a.role != pred.role for a in same_span):
        return ErrorCategory.WRONG_ROLE
    gold_roles = {a.role for a in gold}
    if pred.role not in gold_roles:
        return ErrorCategory.OVER_EXTRACT
    same_role = [a for a in gold if a.role == pred.role]
    for a in same_role:
        inside = a.span.start <= pred.span.start and pred.span.end <= a.span.end
        if inside and (pred.span.start, pred.span.end) != (a.span.start, a.span.end):
            return ErrorCategory.PARTIAL
    if any(pred.span.overlaps(a.span) for a in same_role):
        return ErrorCategory.OVERLAP
    return ErrorCategory.WRONG_SPAN


def _iter_false_positives(corpus: Corpus, predictions: Sequence[EventPrediction]):
    """Yield (doc, event_index, pred, category) for every non-TP prediction."""
    for doc, idx, event, preds in pair_events(corpus, predictions):
        gold_counter = Counter(
            (a.role, a.span.start, a.span.end) for a in event.arguments
        )
        for pred in sorted(preds, key=lambda p: (p.span.start, p.span.end, p.role)):
            key = (pred.role, pred.span.start, pred.span.end)
            if gold_counter[key] > 0:
                gold_counter[key] -= 1
                continue
            yield doc, idx, pred, classify_error(pred, event.arguments)


def error_taxonomy(
    corpus: Corpus, predictions: Sequence[EventPrediction]
) -> dict[str, int]:
    """Counts per error category over all false-positive predictions."""
    counts = {cat.value: 0 for cat in ErrorCategory}
    total_fp = 0
    for _, _, _, category in _iter_false_positives(corpus, predictions):
        counts[category.value] += 1
        total_fp += 1
    counts["total"] = total_fp
    return counts


def error_examples(
    corpus: Corpus, predictions: Sequence[EventPrediction]
) -> list[dict]:
    """Per-example listing of every false positive with its category and text."""
    listing = []
    for doc, idx, pred, category in _iter_false_positives(corpus, predictions):
        listing.append(
            {
                "doc_id": doc.doc_id,
                "event_index": idx,
                "role": pred.role,
                "span": pred.span.to_wire(),
                "text": " ".join(doc.words[pred.span.start - 1 : pred.span.end]),
                "score": pred.score,
                "category": category.value,
            }
        )
    return listing


# ---------------------------------------------------------------------------
# Report rendering.
# ---------------------------------------------------------------------------


def write_report_json(path: str | Path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")


def format_report_text(report: dict) -> str:
    """Fixed-width table over every ScoreReport-shaped entry in the report."""
    rows = []
    header = f"{'metric':<24}{'P':>9}{'R':>9}{'F1':>9}{'TP':>7}{'FP':>7}{'FN':>7}"
    rows.append(header)
    rows.append("-" * len(header))

    def emit(name: str, entry: dict) -> None:
        rows.append(
            f"{name:<24}"
            f"{entry['precision']:>9.4f}{entry['recall']:>9.4f}{entry['f1']:>9.4f}"
            f"{entry['tp']:>7d}{entry['fp']:>7d}{entry['fn']:>7d}"
        )

    for name, entry in report.items():
        if isinstance(entry, dict) and {"precision", "recall", "f1"} <= set(entry):
            emit(name, entry)
        elif isinstance(entry, dict) and name == "distance":
            for bin_name, sub in entry.items():
                emit(f"distance[{bin_name}]", sub)
    if "errors" in report:
        rows.append("")
        rows.append("error taxonomy:")
        for cat, count in report["errors"].items():
            rows.append(f"  {cat:<20}{count:>7d}")
    if "counts" in report:
        rows.append("")
        for what, count in report["counts"].items():
            rows.append(f"  {what:<20}{count:>7d}")
    return "\n".join(rows) + "\n"

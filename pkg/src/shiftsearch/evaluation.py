"""Assessment workflow and retrieval evaluation.

Feedback events carry per-assessor judgments on two levels (term and phrase);
fusing them counts relevant votes into graded qrels, so two assessors marking
both levels yields grade 4. Precision-family metrics (P@N, AP@N, MRR) binarize
at grade >= 1; nDCG@N uses the graded values with linear gain. AP@N is
normalized by min(N, total relevant) so a perfect top-N page scores 1.

File formats (all UTF-8): run lines "query_id Q0 record_id rank score tag",
qrel lines "query_id 0 record_id grade", feedback logs as JSON lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

LEVELS = ("term", "phrase")


@dataclass(frozen=True)
class FeedbackEvent:
    """One judgment toggle; later timestamps overwrite earlier ones per key."""

    assessor_id: str
    query_id: str
    record_id: str
    level: str
    relevant: bool
    timestamp: float

    def __post_init__(self) -> None:
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {self.level!r}")
        for name in ("assessor_id", "query_id", "record_id"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")

    def key(self) -> tuple[str, str, str, str]:
        return (self.assessor_id, self.query_id, self.record_id, self.level)

    def as_dict(self) -> dict:
        return {
            "assessor_id": self.assessor_id,
            "query_id": self.query_id,
            "record_id": self.record_id,
            "level": self.level,
            "relevant": self.relevant,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class QrelSet:
    """Graded relevance per (query_id, record_id); grade 0 means judged irrelevant."""

    grades: Mapping[tuple[str, str], int]

    def __post_init__(self) -> None:
        for key, grade in self.grades.items():
            if grade < 0:
                raise ValueError(f"negative grade for {key}")

    def grade(self, query_id: str, record_id: str) -> int:
        return self.grades.get((query_id, record_id), 0)

    def queries(self) -> list[str]:
        return sorted({qid for qid, _ in self.grades})

    def for_query(self, query_id: str) -> dict[str, int]:
        return {
            rid: grade for (qid, rid), grade in self.grades.items() if qid == query_id
        }


@dataclass(frozen=True)
class RunFile:
    """Ranked output of one system: per query an ordered (record_id, score) list."""

    tag: str
    rankings: Mapping[str, tuple[tuple[str, float], ...]]

    def __post_init__(self) -> None:
        for qid, ranked in self.rankings.items():
            seen: set[str] = set()
            previous = math.inf
            for rid, score in ranked:
                if rid in seen:
                    raise ValueError(f"query {qid!r}: duplicate record {rid!r}")
                seen.add(rid)
                if score > previous:
                    raise ValueError(
                        f"query {qid!r}: scores increase at record {rid!r}"
                    )
                previous = score


@dataclass(frozen=True)
class MetricReport:
    tag: str
    query_count: int
    cutoffs: tuple[int, ...]
    mrr: float
    precision: Mapping[int, float]
    mean_ap: Mapping[int, float]
    ndcg: Mapping[int, float]
    avg_retrieved: float
    unjudged_queries: int

    def as_dict(self) -> dict:
        return {
            "tag": self.tag,
            "query_count": self.query_count,
            "cutoffs": list(self.cutoffs),
            "mrr": self.mrr,
            "precision": {str(n): v for n, v in self.precision.items()},
            "mean_ap": {str(n): v for n, v in self.mean_ap.items()},
            "ndcg": {str(n): v for n, v in self.ndcg.items()},
            "avg_retrieved": self.avg_retrieved,
            "unjudged_queries": self.unjudged_queries,
        }


def run_from_results(tag: str, results_by_query: Mapping[str, Sequence]) -> RunFile:
    """Build a RunFile from per-query result sequences.

    Items may be (record_id, score) pairs or objects with record_id/score
    attributes (search results).
    """
    rankings: dict[str, tuple[tuple[str, float], ...]] = {}
    for qid, items in results_by_query.items():
        ranked = []
        for item in items:
            if hasattr(item, "record_id"):
                ranked.append((item.record_id, float(item.score)))
            else:
                rid, score = item
                ranked.append((str(rid), float(score)))
        rankings[qid] = tuple(ranked)
    return RunFile(tag=tag, rankings=rankings)


def assign_queries(
    query_ids: Sequence[str],
    assessor_ids: Sequence[str],
    per_assessor: int,
    redundancy: int,
) -> dict[str, list[str]]:
    """Deterministic round-robin assignment.

    Every query goes to `redundancy` distinct assessors; nobody receives more
    than `per_assessor` queries.
    """
    if redundancy < 1:
        raise ValueError("redundancy must be >= 1")
    if per_assessor < 1:
        raise ValueError("per_assessor must be >= 1")
    if len(set(assessor_ids)) != len(assessor_ids):
        raise ValueError("assessor ids must be unique")
    if redundancy > len(assessor_ids):
        raise ValueError(
            f"redundancy {redundancy} exceeds the {len(assessor_ids)} available assessors"
        )
    capacity = len(assessor_ids) * per_assessor
    required = len(query_ids) * redundancy
    if capacity < required:
        raise ValueError(
            f"infeasible assignment: capacity {capacity} "
            f"({len(assessor_ids)} assessors x {per_assessor}) is below the "
            f"required {required} ({len(query_ids)} queries x redundancy {redundancy})"
        )
    assignments: dict[str, list[str]] = {a: [] for a in assessor_ids}
    holders: dict[str, set[str]] = {a: set() for a in assessor_ids}
    pointer = 0
    n = len(assessor_ids)
    for qid in query_ids:
        given = 0
        skipped = 0
        while given < redundancy:
            assessor = assessor_ids[pointer % n]
            pointer += 1
            if qid in holders[assessor] or len(assignments[assessor]) >= per_assessor:
                skipped += 1
                if skipped > n:
                    raise ValueError(
                        f"infeasible assignment: no assessor left for query {qid!r}"
                    )
                continue
            assignments[assessor].append(qid)
            holders[assessor].add(qid)
            given += 1
            skipped = 0
    return assignments


def dedup_events(events: Iterable[FeedbackEvent]) -> list[FeedbackEvent]:
    """Resolve duplicate keys last-write-wins by timestamp.

    Equal timestamps favor relevant=True so the outcome is independent of
    input order.
    """
    latest: dict[tuple[str, str, str, str], FeedbackEvent] = {}
    for event in events:
        key = event.key()
        held = latest.get(key)
        if (
            held is None
            or event.timestamp > held.timestamp
            or (event.timestamp == held.timestamp and event.relevant and not held.relevant)
        ):
            latest[key] = event
    return [latest[key] for key in sorted(latest)]


def fuse_votes(events: Iterable[FeedbackEvent]) -> QrelSet:
    """grade(q, d) = number of (assessor, level) pairs voting relevant."""
    grades: dict[tuple[str, str], int] = {}
    for event in dedup_events(events):
        key = (event.query_id, event.record_id)
        grades.setdefault(key, 0)
        if event.relevant:
            grades[key] += 1
    return QrelSet(grades=grades)


def cohens_kappa(labels_a: Sequence[bool], labels_b: Sequence[bool]) -> float:
    if len(labels_a) != len(labels_b):
        raise ValueError(
            f"label lists differ in length ({len(labels_a)} vs {len(labels_b)})"
        )
    if not labels_a:
        raise ValueError("label lists must be non-empty")
    n = len(labels_a)
    observed = sum(1 for a, b in zip(labels_a, labels_b) if bool(a) == bool(b)) / n
    p_a = sum(map(bool, labels_a)) / n
    p_b = sum(map(bool, labels_b)) / n
    expected = p_a * p_b + (1 - p_a) * (1 - p_b)
    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1 - expected)


def _average_precision(relevant_flags: Sequence[bool], cutoff: int, total_relevant: int) -> float:
    if total_relevant == 0:
        return 0.0
    hits = 0
    total = 0.0
    for i, flag in enumerate(relevant_flags[:cutoff], 1):
        if flag:
            hits += 1
            total += hits / i
    return total / min(cutoff, total_relevant)


def _dcg(gains: Sequence[int], cutoff: int) -> float:
    return sum(g / math.log2(i + 1) for i, g in enumerate(gains[:cutoff], 1))


def evaluate_run(
    run: RunFile,
    qrels: QrelSet,
    cutoffs: Sequence[int] = (5, 20),
) -> MetricReport:
    """Macro-averaged MRR, P@N, mAP@N, nDCG@N over the run's queries.

    Run queries missing from the qrels count as zero-relevance and are
    reported in unjudged_queries. Ideal nDCG ordering draws on every graded
    record for the query, retrieved or not.
    """
    if not run.rankings:
        raise ValueError("empty run")
    cutoffs = tuple(sorted(set(int(n) for n in cutoffs)))
    if any(n < 1 for n in cutoffs):
        raise ValueError("cutoffs must be >= 1")
    judged_queries = set(qrels.queries())

    query_ids = sorted(run.rankings)
    rr_sum = 0.0
    precision_sum = {n: 0.0 for n in cutoffs}
    ap_sum = {n: 0.0 for n in cutoffs}
    ndcg_sum = {n: 0.0 for n in cutoffs}
    retrieved_sum = 0
    unjudged = 0

    for qid in query_ids:
        ranked = [rid for rid, _ in run.rankings[qid]]
        retrieved_sum += len(ranked)
        if qid not in judged_queries:
            unjudged += 1
        query_grades = qrels.for_query(qid)
        grades = [query_grades.get(rid, 0) for rid in ranked]
        flags = [g >= 1 for g in grades]
        total_relevant = sum(1 for g in query_grades.values() if g >= 1)

        rr = 0.0
        for i, flag in enumerate(flags, 1):
            if flag:
                rr = 1.0 / i
                break
        rr_sum += rr

        ideal = sorted(query_grades.values(), reverse=True)
        for n in cutoffs:
            precision_sum[n] += sum(flags[:n]) / n
            ap_sum[n] += _average_precision(flags, n, total_relevant)
            ideal_dcg = _dcg(ideal, n)
            ndcg_sum[n] += (_dcg(grades, n) / ideal_dcg) if ideal_dcg > 0 else 0.0

    count = len(query_ids)
    return MetricReport(
        tag=run.tag,
        query_count=count,
        cutoffs=cutoffs,
        mrr=rr_sum / count,
        precision={n: precision_sum[n] / count for n in cutoffs},
        mean_ap={n: ap_sum[n] / count for n in cutoffs},
        ndcg={n: ndcg_sum[n] / count for n in cutoffs},
        avg_retrieved=retrieved_sum / count,
        unjudged_queries=unjudged,
    )


# --------------------------------------------------------------------------
# File IO
# --------------------------------------------------------------------------

def write_run(run: RunFile, path: str | Path) -> None:
    lines = []
    for qid in sorted(run.rankings):
        for i, (rid, score) in enumerate(run.rankings[qid], 1):
            lines.append(f"{qid} Q0 {rid} {i} {score:.6f} {run.tag}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_run(path: str | Path) -> RunFile:
    rankings: dict[str, list[tuple[str, float]]] = {}
    tag = "run"
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 6:
            raise ValueError(f"line {lineno}: expected 6 fields, got {len(fields)}")
        qid, _, rid, rank_str, score_str, tag = fields
        try:
            rank = int(rank_str)
            score = float(score_str)
        except ValueError:
            raise ValueError(f"line {lineno}: malformed rank or score") from None
        ranked = rankings.setdefault(qid, [])
        if rank != len(ranked) + 1:
            raise ValueError(
                f"line {lineno}: rank {rank} for query {qid!r} is not consecutive"
            )
        ranked.append((rid, score))
    return RunFile(
        tag=tag, rankings={qid: tuple(items) for qid, items in rankings.items()}
    )


def write_qrels(qrels: QrelSet, path: str | Path) -> None:
    lines = [
        f"{qid} 0 {rid} {qrels.grades[(qid, rid)]}"
        for qid, rid in sorted(qrels.grades)
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_qrels(path: str | Path) -> QrelSet:
    grades: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(fields)}")
        qid, _, rid, grade_str = fields
        try:
            grade = int(grade_str)
        except ValueError:
            raise ValueError(f"line {lineno}: malformed grade {grade_str!r}") from None
        grades[(qid, rid)] = grade
    return QrelSet(grades=grades)


def event_from_dict(obj: Mapping) -> FeedbackEvent:
    return FeedbackEvent(
        assessor_id=str(obj["assessor_id"]),
        query_id=str(obj["query_id"]),
        record_id=str(obj["record_id"]),
        level=str(obj["level"]),
        relevant=bool(obj["relevant"]),
        timestamp=float(obj["timestamp"]),
    )


def load_feedback_log(path: str | Path) -> list[FeedbackEvent]:
    events = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            events.append(event_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: malformed feedback event ({exc})") from None
    return events


def write_feedback_log(events: Iterable[FeedbackEvent], path: str | Path) -> None:
    Path(path).write_text(
        "".join(json.dumps(e.as_dict(), ensure_ascii=False) + "\n" for e in events),
        encoding="utf-8",
    )

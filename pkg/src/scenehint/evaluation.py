"""Retrieval quality evaluation over interaction event logs.

The service writes one JSON line per user action. Selections are insert
events made from the suggestion panel or after a text search; each is
scored by the rank its category held in the most recent suggestion list for
that session. Reciprocal ranks are accumulated as exact rationals and only
converted to float for display.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

logger = logging.getLogger(__name__)

# Benchmark MRR from the original interactive user study of this technique.
# Those numbers came from human participants; logs produced by this package
# cannot reproduce them and they are shown for orientation only.
REFERENCE_MRR = (("none", 0.353), ("basic", 0.785), ("full", 0.769))

RANK_BUCKETS = ("1", "2", "3", "4+")


@dataclass(frozen=True)
class SelectionRecord:
    query_id: str
    ranked_categories: tuple[str, ...]
    selected_category: str
    used_text_search: bool

    @property
    def rank(self) -> int | None:
        try:
            return self.ranked_categories.index(self.selected_category) + 1
        except ValueError:
            return None


@dataclass(frozen=True)
class EvalReport:
    selection_count: int
    ranked_count: int
    unranked_count: int
    text_query_count: int
    skipped_lines: int
    mrr: float | None  # over all ranked selections
    mrr_no_search: float | None  # text-search selections excluded
    rank_distribution: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "selections": self.selection_count,
            "rankedSelections": self.ranked_count,
            "unrankedSelections": self.unranked_count,
            "textQueryCount": self.text_query_count,
            "skippedLines": self.skipped_lines,
            "mrr": self.mrr,
            "mrrExcludingTextSearch": self.mrr_no_search,
            "rankDistribution": dict(self.rank_distribution),
            "referenceMrr": {
                "values": dict(REFERENCE_MRR),
                "note": (
                    "benchmark from the original interactive user study; "
                    "not reproducible from these logs"
                ),
            },
        }


def parse_event_log(path: str | Path) -> tuple[list[SelectionRecord], int, int]:
    """Selections from a JSONL event log: (records, skipped lines, text queries).

    Auto-placed inserts are not user choices and are skipped; malformed
    lines are skipped with a warning.
    """
    records: list[SelectionRecord] = []
    skipped = 0
    text_queries = 0
    last_suggest: dict[str, tuple[str, tuple[str, ...]]] = {}
    search_since: dict[str, bool] = {}
    suggest_seq: dict[str, int] = {}

    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                event = json.loads(line)
                op = event["op"]
                session = event["sessionId"]
                payload = event.get("payload", {})
            except (json.JSONDecodeError, TypeError, KeyError) as e:
                logger.warning("line %d: skipping malformed event: %s", lineno, e)
                skipped += 1
                continue

            if op == "suggest":
                ranked = tuple(payload.get("rankedCategories", ()))
                seq = suggest_seq.get(session, 0) + 1
                suggest_seq[session] = seq
                last_suggest[session] = (f"{session}:{seq}", ranked)
                search_since[session] = False
            elif op == "search":
                text_queries += 1
                search_since[session] = True
            elif op == "insert":
                if payload.get("source") == "auto":
                    continue
                if session not in last_suggest:
                    continue
                category = payload.get("category")
                if not category:
                    logger.warning("line %d: insert without category", lineno)
                    skipped += 1
                    continue
                query_id, ranked = last_suggest[session]
                records.append(
                    SelectionRecord(
                        query_id=query_id,
                        ranked_categories=ranked,
                        selected_category=category,
                        used_text_search=(
                            payload.get("source") == "search"
                            or search_since.get(session, False)
                        ),
                    )
                )
    return records, skipped, text_queries


def _mrr(records: list[SelectionRecord]) -> float | None:
    ranks = [r.rank for r in records if r.rank is not None]
    if not ranks:
        return None
    return float(sum(Fraction(1, r) for r in ranks) / len(ranks))


def evaluate(
    records: list[SelectionRecord],
    text_query_count: int = 0,
    skipped_lines: int = 0,
) -> EvalReport:
    """Mean reciprocal rank and the rank histogram over selection records."""
    ranked = [r for r in records if r.rank is not None]
    distribution = {bucket: 0 for bucket in RANK_BUCKETS}
    for r in ranked:
        distribution["4+" if r.rank >= 4 else str(r.rank)] += 1
    return EvalReport(
        selection_count=len(records),
        ranked_count=len(ranked),
        unranked_count=len(records) - len(ranked),
        text_query_count=text_query_count,
        skipped_lines=skipped_lines,
        mrr=_mrr(records),
        mrr_no_search=_mrr([r for r in records if not r.used_text_search]),
        rank_distribution=distribution,
    )


def format_report(report: EvalReport) -> str:
    def fmt(v: float | None) -> str:
        return "n/a (no ranked selections)" if v is None else f"{v:.4f}"

    lines = [
        f"selections: {report.selection_count} "
        f"(ranked {report.ranked_count}, unranked {report.unranked_count})",
        f"text queries: {report.text_query_count}",
        f"skipped log lines: {report.skipped_lines}",
        f"MRR over ranked selections: {fmt(report.mrr)}",
        f"MRR excluding text-search selections: {fmt(report.mrr_no_search)}",
        "rank distribution: "
        + "  ".join(f"{b}: {report.rank_distribution[b]}" for b in RANK_BUCKETS),
        "reference MRR from the original interactive user study "
        "(not reproducible from these logs): "
        + "  ".join(f"{name}={value}" for name, value in REFERENCE_MRR),
    ]
    return "\n".join(lines)

"""Ingestion, grouping, the subject cap, and subject-disjoint splits."""

import json
import random

import pytest

from chronoqa import TimePoint, build_groups, ingest, load_fact_file, split_subjects
from chronoqa.facts import FactValidationError, group_stats

from conftest import synth_rows

MESSI_ROW = {
    "subject": "Lionel Messi", "subject_id": "QM1", "relation": "P54",
    "object": "FC Barcelona", "object_id": "OM1", "start": "2004", "end": "2021",
}


class TestIngest:
    def test_year_only_defaults(self):
        store = ingest([MESSI_ROW])
        assert len(store.facts) == 1
        interval = store.facts[0].interval
        assert interval.start == TimePoint(2004, 1)
        assert interval.end == TimePoint(2021, 12)

    def test_unsupported_relation_rejected(self):
        row = dict(MESSI_ROW, relation="P999")
        store = ingest([row])
        assert not store.facts
        assert len(store.diagnostics) == 1
        assert "unsupported relation" in store.diagnostics[0].message

    def test_empty_stream(self):
        store = ingest([])
        assert store.facts == ()
        assert build_groups(store) == []

    def test_missing_field_reported_with_line(self):
        row = {k: v for k, v in MESSI_ROW.items() if k != "object"}
        store = ingest([MESSI_ROW, row])
        assert len(store.facts) == 1
        assert store.diagnostics[0].line == 2
        assert "object" in store.diagnostics[0].message

    def test_unparseable_time_reported(self):
        store = ingest([dict(MESSI_ROW, start="xyz 2004")])
        assert not store.facts
        assert "xyz" in store.diagnostics[0].message

    def test_strict_mode_raises(self):
        with pytest.raises(FactValidationError, match="line 1"):
            ingest([dict(MESSI_ROW, relation="P999")], strict=True)

    def test_open_end_closed_at_snapshot(self):
        row = dict(MESSI_ROW, end=None)
        store = ingest([row], snapshot=TimePoint(2022, 11))
        assert store.facts[0].interval.end == TimePoint(2022, 11)

    def test_ongoing_fact_after_snapshot_rejected(self):
        row = dict(MESSI_ROW, start="Jan 2023", end=None)
        store = ingest([row], snapshot=TimePoint(2022, 11))
        assert not store.facts
        assert "snapshot" in store.diagnostics[0].message

    def test_start_after_end_rejected(self):
        store = ingest([dict(MESSI_ROW, start="Jul 2021", end="Jan 2021")])
        assert not store.facts

    def test_duplicates_dropped(self):
        store = ingest([MESSI_ROW, dict(MESSI_ROW)])
        assert len(store.facts) == 1
        assert store.duplicates_dropped == 1

    def test_load_fact_file_reports_bad_json_lines(self, tmp_path):
        path = tmp_path / "facts.jsonl"
        path.write_text(json.dumps(MESSI_ROW) + "\nnot json\n", encoding="utf-8")
        store = load_fact_file(str(path))
        assert len(store.facts) == 1
        assert store.diagnostics[0].line == 2
        assert "invalid JSON" in store.diagnostics[0].message


class TestBuildGroups:
    def test_small_groups_dropped(self):
        rows = synth_rows(1, facts_per_subject=(2, 2), seed=1)
        assert build_groups(ingest(rows)) == []

    def test_groups_sorted_chronologically(self):
        rows = synth_rows(1, facts_per_subject=(5, 5), seed=2)
        random.Random(0).shuffle(rows)
        groups = build_groups(ingest(rows))
        starts = [f.interval.start for f in groups[0].facts]
        assert starts == sorted(starts)

    def test_subject_cap_exact_and_deterministic(self):
        rows = synth_rows(2500, facts_per_subject=(3, 3), seed=3)
        store = ingest(rows)
        first = build_groups(store, seed=42)
        assert len({g.subject_id for g in first}) == 2000
        again = build_groups(store, seed=42)
        assert [g.key for g in first] == [g.key for g in again]
        other_seed = build_groups(store, seed=43)
        assert {g.subject_id for g in other_seed} != {g.subject_id for g in first}

    def test_order_insensitive_to_input_rows(self):
        rows = synth_rows(40, seed=4)
        shuffled = list(rows)
        random.Random(9).shuffle(shuffled)
        a = build_groups(ingest(rows), seed=7)
        b = build_groups(ingest(shuffled), seed=7)
        assert a == b

    def test_no_group_below_minimum(self):
        rows = synth_rows(30, facts_per_subject=(3, 8), seed=5)
        rows += synth_rows(10, facts_per_subject=(3, 8), seed=6, subject_prefix="extra-")
        # drop one fact from some subjects to create undersized groups
        trimmed = [r for r in rows if not (r["subject_id"].startswith("extra-") and r["object_id"].endswith("-0"))]
        groups = build_groups(ingest(trimmed))
        assert all(len(g.facts) >= 3 for g in groups)


class TestSplits:
    def test_exact_counts_and_disjointness(self):
        rows = []
        for relation in ("P39", "P54"):
            rows += synth_rows(300, relation=relation, seed=8)
        groups = build_groups(ingest(rows), seed=1)
        parts = split_subjects(groups, counts={"train": 300, "dev": 100, "test": 100}, seed=1)
        subject_sets = {name: {g.subject_id for g in part} for name, part in parts.items()}
        assert len(subject_sets["train"]) == 300
        assert len(subject_sets["dev"]) == 100
        assert len(subject_sets["test"]) == 100
        assert not subject_sets["train"] & subject_sets["dev"]
        assert not subject_sets["train"] & subject_sets["test"]
        assert not subject_sets["dev"] & subject_sets["test"]

    def test_deterministic_under_seed(self):
        groups = build_groups(ingest(synth_rows(50, seed=9)), seed=0)
        a = split_subjects(groups, ratios={"train": 0.6, "dev": 0.2, "test": 0.2}, seed=5)
        b = split_subjects(groups, ratios={"train": 0.6, "dev": 0.2, "test": 0.2}, seed=5)
        assert a == b

    def test_ratios_cover_all_subjects(self):
        groups = build_groups(ingest(synth_rows(53, seed=10)), seed=0)
        parts = split_subjects(groups, ratios={"train": 0.6, "dev": 0.2, "test": 0.2}, seed=5)
        total = sum(len({g.subject_id for g in part}) for part in parts.values())
        assert total == len({g.subject_id for g in groups})

    def test_counts_exceeding_available_raise(self):
        groups = build_groups(ingest(synth_rows(10, seed=11)), seed=0)
        with pytest.raises(ValueError, match="available"):
            split_subjects(groups, counts={"train": 11}, seed=0)

    def test_exactly_one_spec_required(self):
        with pytest.raises(ValueError):
            split_subjects([], seed=0)
        with pytest.raises(ValueError):
            split_subjects([], counts={"train": 1}, ratios={"train": 1.0}, seed=0)


class TestStats:
    def test_facts_per_subject_matches_recount(self):
        rows = synth_rows(120, facts_per_subject=(3, 8), seed=12)
        groups = build_groups(ingest(rows), seed=0)
        stats = group_stats(groups)
        facts = sum(len(g.facts) for g in groups)
        subjects = len({g.subject_id for g in groups})
        assert stats["facts"] == facts
        assert stats["subjects"] == subjects
        assert stats["facts_per_subject"] == round(facts / subjects, 2)

"""Match records on disk: append-only writes, replay verification, harvest."""

import filecmp
import os

import pytest

from mutantduel.bots import run_bot_match
from mutantduel.errors import StoreError
from mutantduel.match import Match, MatchConfig
from mutantduel.store import (list_matches, load_harvest, read_record,
                              verify_record, write_record)


def finished_match(seed=3):
    return run_bot_match(MatchConfig(), match_seed=seed)


class TestWriteRead:
    def test_round_trip(self, tmp_path):
        match, log = finished_match()
        write_record(tmp_path, "m0", match, log, labels={"bots": "greedy,greedy"})
        rec = read_record(tmp_path, "m0")
        assert rec.match_id == "m0"
        assert rec.match_seed == 3
        assert rec.labels == {"bots": "greedy,greedy"}
        assert rec.commands == tuple(log)
        assert rec.state_hash == match.state_hash()
        assert rec.final_state == match.state_text()
        assert rec.config == match.config
        assert len(rec.traces) == (0 if match.winner is None
                                   else len(match.players[match.winner].traces))

    def test_append_only(self, tmp_path):
        match, log = finished_match()
        write_record(tmp_path, "m0", match, log)
        with pytest.raises(StoreError, match="append-only"):
            write_record(tmp_path, "m0", match, log)

    def test_unfinished_match_rejected(self, tmp_path):
        with pytest.raises(StoreError, match="finished"):
            write_record(tmp_path, "m0", Match(MatchConfig()), [])

    def test_bad_match_id_rejected(self, tmp_path):
        match, log = finished_match()
        with pytest.raises(StoreError):
            write_record(tmp_path, "a/b", match, log)

    def test_missing_record(self, tmp_path):
        with pytest.raises(StoreError, match="no record"):
            read_record(tmp_path, "ghost")

    def test_missing_file_detected(self, tmp_path):
        match, log = finished_match()
        write_record(tmp_path, "m0", match, log)
        os.remove(tmp_path / "m0" / "config.txt")
        with pytest.raises(StoreError, match="missing config.txt"):
            read_record(tmp_path, "m0")

    def test_list_matches_sorted(self, tmp_path):
        match, log = finished_match()
        for mid in ("mB", "mA"):
            write_record(tmp_path, mid, match, log)
        assert list_matches(tmp_path) == ["mA", "mB"]

    def test_list_matches_needs_directory(self, tmp_path):
        with pytest.raises(StoreError):
            list_matches(tmp_path / "nowhere")


class TestVerify:
    def test_intact_record_verifies(self, tmp_path):
        match, log = finished_match()
        write_record(tmp_path, "m0", match, log)
        verify_record(tmp_path, "m0")

    def test_tampered_log_detected(self, tmp_path):
        match, log = finished_match()
        write_record(tmp_path, "m0", match, log)
        log_path = tmp_path / "m0" / "commands.log"
        lines = log_path.read_text().splitlines()
        purchases = [i for i, ln in enumerate(lines)
                     if ln.startswith("purchase")]
        del lines[purchases[0]]
        log_path.write_text("".join(ln + "\n" for ln in lines))
        with pytest.raises(StoreError):
            verify_record(tmp_path, "m0")

    def test_tampered_hash_detected(self, tmp_path):
        match, log = finished_match()
        write_record(tmp_path, "m0", match, log)
        (tmp_path / "m0" / "state_hash.txt").write_text("0" * 64 + "\n")
        with pytest.raises(StoreError, match="hash"):
            verify_record(tmp_path, "m0")

    def test_tampered_harvest_detected(self, tmp_path):
        match, log = finished_match(seed=6)
        assert match.winner is not None
        write_record(tmp_path, "m0", match, log)
        apath = tmp_path / "m0" / "harvest" / "assertions.txt"
        text = apath.read_text()
        assert text
        apath.write_text(text + "0\t0\tGLOBAL IF Touching(Player, Goal) "
                         "THEN GameOver\n")
        with pytest.raises(StoreError, match="harvest"):
            verify_record(tmp_path, "m0")


class TestHarvestAggregation:
    def test_rebased_source_indices(self, tmp_path):
        seeds = [6, 10]
        locals_ = []
        for n, seed in enumerate(seeds):
            match, log = finished_match(seed=seed)
            assert match.winner is not None
            write_record(tmp_path, f"m{n}", match, log)
            locals_.append(read_record(tmp_path, f"m{n}"))
        assert all(r.assertions for r in locals_)
        traces, assertions, provenance = load_harvest(tmp_path)
        assert len(traces) == sum(len(r.traces) for r in locals_)
        assert len(provenance) == len(traces)
        for a in assertions:
            src = int(a.source_trace)
            assert 0 <= src < len(traces)
        base = len(locals_[0].traces)
        for local, combined in zip(locals_[1].assertions,
                                   assertions[len(locals_[0].assertions):]):
            assert int(combined.source_trace) == int(local.source_trace) + base
        for n, r in enumerate(locals_):
            for i in range(len(r.traces)):
                assert provenance.count(f"m{n}/trace_{i}") == 1

    def test_empty_store(self, tmp_path):
        traces, assertions, provenance = load_harvest(tmp_path)
        assert (traces, assertions, provenance) == ([], [], [])

    def test_missing_store_raises(self, tmp_path):
        with pytest.raises(StoreError):
            load_harvest(tmp_path / "nowhere")


class TestDeterminism:
    def test_same_seed_byte_identical_records(self, tmp_path):
        for root in ("a", "b"):
            match, log = run_bot_match(MatchConfig(), match_seed=6)
            os.makedirs(tmp_path / root)
            write_record(tmp_path / root, "m0", match, log,
                         labels={"bots": "greedy,greedy"})
        cmp = filecmp.dircmp(tmp_path / "a" / "m0", tmp_path / "b" / "m0")
        mismatch = []

        def walk(dcmp):
            mismatch.extend(dcmp.diff_files)
            mismatch.extend(dcmp.left_only)
            mismatch.extend(dcmp.right_only)
            for sub in dcmp.subdirs.values():
                walk(sub)

        walk(cmp)
        assert mismatch == []

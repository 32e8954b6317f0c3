"""Record log and profile store persistence tests."""

import json

import pytest

from safewatch.store import ProfileStore, RecordLog


class TestRecordLog:
    def test_sequences_assigned_globally_and_per_device(self, tmp_path):
        log = RecordLog(tmp_path / "records.log")
        a = log.append("watch-1", "vitals", 100, {"bpm": 72})
        b = log.append("watch-2", "fix", 150, {"lat": 1.0})
        c = log.append("watch-1", "fix", 200, {"lat": 2.0})
        assert (a.seq, b.seq, c.seq) == (1, 2, 3)
        assert (a.dseq, b.dseq, c.dseq) == (1, 1, 2)
        log.close()

    def test_roundtrip_n_records(self, tmp_path):
        path = tmp_path / "records.log"
        log = RecordLog(path)
        for i in range(50):
            log.append("watch-1", "vitals", i * 10, {"n": i})
        log.close()
        reopened = RecordLog(path)
        records = reopened.read_all()
        assert len(records) == 50
        assert [r.seq for r in records] == list(range(1, 51))
        assert records[49].payload == {"n": 49}
        reopened.close()

    def test_reopen_resumes_sequences(self, tmp_path):
        path = tmp_path / "records.log"
        log = RecordLog(path)
        log.append("watch-1", "vitals", 0, {})
        log.close()
        log = RecordLog(path)
        rec = log.append("watch-1", "ack", 1, {})
        assert rec.seq == 2
        assert rec.dseq == 2
        log.close()

    def test_read_since_filters(self, tmp_path):
        log = RecordLog(tmp_path / "records.log")
        for device in ("a", "b", "a", "b"):
            log.append(device, "vitals", 0, {})
        assert [r.seq for r in log.read_since(2)] == [3, 4]
        assert [r.seq for r in log.read_since(0, device="a")] == [1, 3]
        log.close()

    def test_torn_trailing_line_dropped(self, tmp_path):
        path = tmp_path / "records.log"
        log = RecordLog(path)
        log.append("watch-1", "vitals", 0, {"ok": True})
        log.close()
        with open(path, "a", encoding="utf-8") as fh:
            fh.write('{"seq": 2, "dseq": 2, "device": "watch-1", "kind": "vit')
        reopened = RecordLog(path)
        assert len(reopened.read_all()) == 1
        assert reopened.append("watch-1", "ack", 5, {}).seq == 2
        reopened.close()

    def test_mid_file_corruption_raises(self, tmp_path):
        path = tmp_path / "records.log"
        log = RecordLog(path)
        log.append("watch-1", "vitals", 0, {})
        log.append("watch-1", "vitals", 1, {})
        log.close()
        lines = path.read_text().splitlines()
        lines[0] = "garbage"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError):
            RecordLog(path)

    def test_unknown_kind_rejected(self, tmp_path):
        log = RecordLog(tmp_path / "records.log")
        with pytest.raises(ValueError):
            log.append("watch-1", "bogus", 0, {})
        log.close()

    def test_lines_are_sorted_key_json(self, tmp_path):
        path = tmp_path / "records.log"
        log = RecordLog(path)
        log.append("watch-1", "vitals", 0, {"z": 1, "a": 2})
        log.close()
        line = path.read_text().strip()
        assert line == json.dumps(json.loads(line), sort_keys=True)


class TestProfileStore:
    def test_missing_file_is_empty(self, tmp_path):
        assert ProfileStore(tmp_path / "profiles.json").load() == {}

    def test_save_load_roundtrip(self, tmp_path):
        store = ProfileStore(tmp_path / "profiles.json")
        data = {"watch-1": {"name": "Dana", "contacts": []}}
        store.save(data)
        assert store.load() == data

    def test_save_replaces_whole_snapshot(self, tmp_path):
        store = ProfileStore(tmp_path / "profiles.json")
        store.save({"watch-1": {"name": "A"}})
        store.save({"watch-2": {"name": "B"}})
        assert store.load() == {"watch-2": {"name": "B"}}

    def test_non_object_rejected(self, tmp_path):
        path = tmp_path / "profiles.json"
        path.write_text("[1,2,3]")
        with pytest.raises(ValueError):
            ProfileStore(path).load()

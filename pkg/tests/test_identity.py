import math
import random

import pytest

from wolly.identity import (
    DimensionMismatch,
    IdentityRegistry,
    Match,
    UnknownProfile,
)

D = 8  # small dimension keeps unit tests quick; acceptance uses 128


def vec(rng, dim=D):
    return [rng.uniform(-1, 1) for _ in range(dim)]


def linear_scan(registry, probe):
    """Brute-force nearest neighbor over the stored profiles."""
    probe = registry.canonicalize(probe)
    best = None
    best_d = None
    for p in registry.profiles():
        d = math.dist(p.embedding, probe)
        if best_d is None or d < best_d:
            best, best_d = p.id, d
    if best is None or best_d > registry.match_threshold:
        return None
    return Match(best, best_d)


class TestEnrollRecognize:
    def test_self_match_distance_zero(self):
        reg = IdentityRegistry(dim=D)
        e = vec(random.Random(1))
        pid = reg.enroll("Ada", 9, e)
        m = reg.recognize(e)
        assert m == Match(pid, 0.0)

    def test_wrong_dimension(self):
        reg = IdentityRegistry(dim=D)
        with pytest.raises(DimensionMismatch):
            reg.enroll("Ada", 9, [0.0] * (D + 1))
        with pytest.raises(DimensionMismatch):
            reg.recognize([0.0] * (D - 1))

    def test_two_enrollments_distinct_ids(self):
        reg = IdentityRegistry(dim=D)
        rng = random.Random(2)
        a = reg.enroll("Ada", 9, vec(rng))
        b = reg.enroll("Bob", 8, vec(rng))
        assert a != b

    def test_empty_registry_unknown(self):
        reg = IdentityRegistry(dim=D)
        assert reg.recognize([0.0] * D) is None

    def test_nearest_of_two(self):
        reg = IdentityRegistry(dim=D, match_threshold=10.0)
        first = reg.enroll("far", 9, [1.0] * D)
        second = reg.enroll("near", 9, [0.1] * D)
        m = reg.recognize([0.0] * D)
        assert m is not None and m.profile_id == second

    def test_threshold_boundary_inclusive(self):
        reg = IdentityRegistry(dim=D, match_threshold=0.5)
        pid = reg.enroll("Ada", 9, [0.0] * D)
        probe = [0.5] + [0.0] * (D - 1)  # distance exactly 0.5
        m = reg.recognize(probe)
        assert m is not None and m.profile_id == pid
        assert m.distance == pytest.approx(0.5, abs=1e-12)

    def test_beyond_threshold_unknown(self):
        reg = IdentityRegistry(dim=D, match_threshold=0.5)
        reg.enroll("Ada", 9, [0.0] * D)
        assert reg.recognize([0.6] + [0.0] * (D - 1)) is None

    def test_tie_breaks_to_earliest(self):
        reg = IdentityRegistry(dim=D, match_threshold=10.0)
        e = [0.25] * D
        first = reg.enroll("first", 9, e)
        reg.enroll("second", 9, e)
        m = reg.recognize(e)
        assert m is not None and m.profile_id == first

    def test_validation(self):
        reg = IdentityRegistry(dim=D)
        with pytest.raises(ValueError):
            reg.enroll("", 9, [0.0] * D)
        with pytest.raises(ValueError):
            reg.enroll("Ada", -1, [0.0] * D)


class TestOracleEquivalence:
    def test_random_registries(self):
        rng = random.Random(2026)
        for _ in range(30):
            reg = IdentityRegistry(dim=D, match_threshold=rng.uniform(0.2, 2.0))
            for i in range(rng.randint(0, 60)):
                reg.enroll(f"user{i}", rng.randint(5, 80), vec(rng))
            for _ in range(10):
                probe = vec(rng)
                got = reg.recognize(probe)
                want = linear_scan(reg, probe)
                if want is None:
                    assert got is None
                else:
                    assert got is not None
                    assert got.profile_id == want.profile_id
                    assert got.distance == pytest.approx(want.distance, abs=1e-9)

    def test_threshold_monotone(self):
        rng = random.Random(7)
        reg = IdentityRegistry(dim=D, match_threshold=0.8)
        for i in range(40):
            reg.enroll(f"user{i}", 10, vec(rng))
        for _ in range(50):
            probe = vec(rng)
            m = reg.recognize(probe)
            if m is not None:
                reg_wider = IdentityRegistry(dim=D, match_threshold=reg.match_threshold * 2)
                for p in reg.profiles():
                    reg_wider.enroll(p.name, p.age, p.embedding)
                assert reg_wider.recognize(probe) is not None


class TestInteractions:
    def test_interest_dedup(self):
        reg = IdentityRegistry(dim=D)
        pid = reg.enroll("Ada", 9, [0.0] * D)
        reg.record_interaction(pid, ["movies"])
        reg.record_interaction(pid, ["movies", "cartoons"])
        assert reg.get(pid).interests == ["movies", "cartoons"]

    def test_emotion_log_appends(self):
        reg = IdentityRegistry(dim=D, clock=lambda: 1000.0)
        pid = reg.enroll("Ada", 9, [0.0] * D)
        reg.record_interaction(pid, [], (["Happiness"], (6.4, 4.9, 6.8)))
        log = reg.get(pid).emotion_log
        assert len(log) == 1
        assert log[0].timestamp == 1000.0
        assert log[0].categories == ("Happiness",)

    def test_unknown_profile(self):
        reg = IdentityRegistry(dim=D)
        with pytest.raises(UnknownProfile):
            reg.record_interaction("nope", ["x"])


class TestPersistence:
    def test_round_trip_byte_identical(self, tmp_path):
        path = tmp_path / "registry.jsonl"
        rng = random.Random(11)
        reg = IdentityRegistry(path, dim=D, clock=lambda: 42.5)
        ids = [reg.enroll(f"user{i}", 6 + i, vec(rng)) for i in range(10)]
        for pid in ids[:4]:
            reg.record_interaction(pid, ["movies"], (["Engagement"], (5.0, 5.0, 5.0)))
        before = reg.snapshot_bytes()
        file_before = path.read_bytes()
        reg.close()

        reopened = IdentityRegistry(path, dim=D)
        assert reopened.snapshot_bytes() == before
        assert path.read_bytes() == file_before  # reopening never rewrites
        reopened.close()

    def test_recognizable_after_reopen(self, tmp_path):
        path = tmp_path / "registry.jsonl"
        e = vec(random.Random(3))
        reg = IdentityRegistry(path, dim=D)
        pid = reg.enroll("Ada", 9, e)
        reg.close()
        reopened = IdentityRegistry(path, dim=D)
        m = reopened.recognize(e)
        assert m == Match(pid, 0.0)
        reopened.close()

    def test_compaction_preserves_state(self, tmp_path):
        path = tmp_path / "registry.jsonl"
        rng = random.Random(5)
        reg = IdentityRegistry(path, dim=D, clock=lambda: 7.0)
        pid = reg.enroll("Ada", 9, vec(rng))
        for _ in range(5):
            reg.record_interaction(pid, ["movies"], (["Engagement"], (5.0, 5.0, 5.0)))
        before = reg.snapshot_bytes()
        size_before = path.stat().st_size
        reg.compact()
        assert reg.snapshot_bytes() == before
        assert path.stat().st_size < size_before
        reg.close()
        reopened = IdentityRegistry(path, dim=D)
        assert reopened.snapshot_bytes() == before
        reopened.close()

    def test_interaction_durable_after_return(self, tmp_path):
        path = tmp_path / "registry.jsonl"
        reg = IdentityRegistry(path, dim=D)
        pid = reg.enroll("Ada", 9, [0.0] * D)
        reg.record_interaction(pid, ["space"])
        # A second handle opened without closing the first sees the write.
        other = IdentityRegistry(path, dim=D)
        assert other.get(pid).interests == ["space"]
        other.close()
        reg.close()

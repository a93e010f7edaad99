"""Round trips and corruption detection for every on-disk format.

Each writer/reader pair must reproduce arrays bitwise (masks, flow, depth,
trace) or value-exact records (events, manifest), and each reader must
reject wrong magic bytes, truncated bodies, and tampered hashes with
FormatError rather than returning garbage.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import box, scene, sphere
from physcene import simulate
from physcene.events import MotionEvent
from physcene.formats import (
    FormatError,
    manifest_bytes,
    read_depth,
    read_events,
    read_flow,
    read_manifest,
    read_mask,
    read_trace,
    write_depth,
    write_events,
    write_flow,
    write_manifest,
    write_mask,
    write_trace,
)


class TestMask:
    def test_round_trip_bitwise(self, tmp_path):
        ids = np.arange(48, dtype=np.uint8).reshape(6, 8) % 7
        write_mask(tmp_path / "m.pgm", ids)
        assert np.array_equal(read_mask(tmp_path / "m.pgm"), ids)

    def test_header_is_plain_p5(self, tmp_path):
        write_mask(tmp_path / "m.pgm", np.zeros((2, 3), dtype=np.uint8))
        raw = (tmp_path / "m.pgm").read_bytes()
        assert raw.startswith(b"P5\n3 2\n255\n")
        assert len(raw) == len(b"P5\n3 2\n255\n") + 6

    def test_comments_in_header_are_skipped(self, tmp_path):
        body = bytes(range(6))
        (tmp_path / "m.pgm").write_bytes(b"P5\n# made elsewhere\n3 2\n255\n" + body)
        assert np.array_equal(read_mask(tmp_path / "m.pgm"), np.frombuffer(body, np.uint8).reshape(2, 3))

    def test_rejects_wrong_dtype_and_rank(self, tmp_path):
        with pytest.raises(FormatError, match="2-d uint8"):
            write_mask(tmp_path / "m.pgm", np.zeros((2, 3), dtype=np.int32))
        with pytest.raises(FormatError, match="2-d uint8"):
            write_mask(tmp_path / "m.pgm", np.zeros((2, 3, 1), dtype=np.uint8))

    def test_rejects_bad_magic(self, tmp_path):
        (tmp_path / "m.pgm").write_bytes(b"P6\n3 2\n255\n" + bytes(18))
        with pytest.raises(FormatError, match="not a P5"):
            read_mask(tmp_path / "m.pgm")

    def test_rejects_wrong_maxval(self, tmp_path):
        (tmp_path / "m.pgm").write_bytes(b"P5\n3 2\n65535\n" + bytes(12))
        with pytest.raises(FormatError, match="maxval"):
            read_mask(tmp_path / "m.pgm")

    def test_rejects_truncation(self, tmp_path):
        (tmp_path / "m.pgm").write_bytes(b"P5\n3 2\n255\n" + bytes(5))
        with pytest.raises(FormatError, match="truncated"):
            read_mask(tmp_path / "m.pgm")

    @settings(max_examples=25, deadline=None)
    @given(ids=hnp.arrays(np.uint8, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=12)))
    def test_any_uint8_grid_round_trips(self, ids, tmp_path_factory):
        path = tmp_path_factory.mktemp("pgm") / "m.pgm"
        write_mask(path, ids)
        assert np.array_equal(read_mask(path), ids)


class TestFlowAndDepth:
    def test_flow_round_trip_bitwise(self, tmp_path):
        flow = np.random.default_rng(0).normal(size=(5, 7, 2)).astype(np.float32)
        write_flow(tmp_path / "f.dflo", flow)
        back = read_flow(tmp_path / "f.dflo")
        assert back.dtype == np.float32
        assert np.array_equal(back, flow)

    def test_depth_round_trip_keeps_infinities(self, tmp_path):
        depth = np.full((4, 6), np.inf, dtype=np.float32)
        depth[2, 3] = 1.25
        write_depth(tmp_path / "d.ddep", depth)
        back = read_depth(tmp_path / "d.ddep")
        assert np.array_equal(np.isinf(back), np.isinf(depth))
        assert back[2, 3] == 1.25

    def test_header_layout(self, tmp_path):
        write_flow(tmp_path / "f.dflo", np.zeros((2, 3, 2), dtype=np.float32))
        raw = (tmp_path / "f.dflo").read_bytes()
        assert raw[:4] == b"DFLO"
        assert raw[4:12] == (3).to_bytes(4, "little") + (2).to_bytes(4, "little")
        assert len(raw) == 12 + 2 * 3 * 2 * 4

    def test_wrong_magic_rejected(self, tmp_path):
        write_depth(tmp_path / "d.ddep", np.zeros((2, 3), dtype=np.float32))
        with pytest.raises(FormatError, match="bad magic"):
            read_flow(tmp_path / "d.ddep")

    def test_truncated_body_rejected(self, tmp_path):
        write_flow(tmp_path / "f.dflo", np.zeros((2, 3, 2), dtype=np.float32))
        raw = (tmp_path / "f.dflo").read_bytes()
        (tmp_path / "f.dflo").write_bytes(raw[:-4])
        with pytest.raises(FormatError, match="expected 12 floats"):
            read_flow(tmp_path / "f.dflo")

    def test_shape_validation_on_write(self, tmp_path):
        with pytest.raises(FormatError, match=r"\(H, W, 2\)"):
            write_flow(tmp_path / "f.dflo", np.zeros((2, 3), dtype=np.float32))
        with pytest.raises(FormatError, match=r"\(H, W\)"):
            write_depth(tmp_path / "d.ddep", np.zeros((2, 3, 1), dtype=np.float32))


class TestTrace:
    def test_round_trip_of_a_real_simulation(self, tmp_path):
        cfg = scene(
            sphere(velocity=(1.0, 0.2, 0.0)),
            box(position=(1.2, 0.8, 0.3), angular=(0.0, 0.0, 1.0)),
        )
        trace = simulate(cfg, duration=0.3)
        write_trace(tmp_path / "t.dtrc", trace)
        data = read_trace(tmp_path / "t.dtrc")
        assert data.names == ("sphere_0", "box_0")
        assert data.times.shape == (10,)
        assert np.array_equal(data.times, np.array(trace.times))
        for f, (_, state) in enumerate(trace.frames):
            assert np.array_equal(data.states[f, :, 0:3], state.positions)
            assert np.array_equal(data.states[f, :, 3:7], state.orientations)
            assert np.array_equal(data.states[f, :, 7:10], state.linear_velocities)
            assert np.array_equal(data.states[f, :, 10:13], state.angular_velocities)

    def test_bad_magic_rejected(self, tmp_path):
        (tmp_path / "t.dtrc").write_bytes(b"NOPE" + bytes(32))
        with pytest.raises(FormatError, match="bad magic"):
            read_trace(tmp_path / "t.dtrc")

    def test_truncated_frames_rejected(self, tmp_path):
        cfg = scene(sphere())
        trace = simulate(cfg, duration=0.2)
        write_trace(tmp_path / "t.dtrc", trace)
        raw = (tmp_path / "t.dtrc").read_bytes()
        (tmp_path / "t.dtrc").write_bytes(raw[:-8])
        with pytest.raises(FormatError, match="truncated at frame"):
            read_trace(tmp_path / "t.dtrc")


class TestEvents:
    def test_round_trip_values(self, tmp_path):
        events = [
            MotionEvent("stop", 0.5, ("sphere_0",), {"speed": 0.049}),
            MotionEvent("pair_collision", 0.1, ("a", "b"), {"impulse": 2.5}),
        ]
        write_events(tmp_path / "e.ndrec", events)
        records = read_events(tmp_path / "e.ndrec")
        assert records == [
            {"kind": "stop", "time": 0.5, "participants": ["sphere_0"], "payload": {"speed": 0.049}},
            {"kind": "pair_collision", "time": 0.1, "participants": ["a", "b"], "payload": {"impulse": 2.5}},
        ]

    def test_empty_event_list(self, tmp_path):
        write_events(tmp_path / "e.ndrec", [])
        assert read_events(tmp_path / "e.ndrec") == []

    def test_blank_lines_are_skipped(self, tmp_path):
        (tmp_path / "e.ndrec").write_text(
            '{"kind": "stop", "time": 0.5, "participants": [], "payload": {}}\n\n', "utf-8"
        )
        assert len(read_events(tmp_path / "e.ndrec")) == 1

    def test_bad_json_line_rejected_with_location(self, tmp_path):
        (tmp_path / "e.ndrec").write_text("{not json}\n", "utf-8")
        with pytest.raises(FormatError, match=r"e\.ndrec:1: bad record"):
            read_events(tmp_path / "e.ndrec")

    def test_missing_keys_rejected(self, tmp_path):
        (tmp_path / "e.ndrec").write_text('{"kind": "stop", "time": 0.5}\n', "utf-8")
        with pytest.raises(FormatError, match=r"missing \['participants', 'payload'\]"):
            read_events(tmp_path / "e.ndrec")


class TestManifest:
    RECORDS = [
        {"seed": 0, "status": "accepted", "id": "00000", "hash": "abc"},
        {"seed": 1, "status": "rejected", "reason": "overlap"},
    ]

    def test_round_trip_and_hash(self, tmp_path):
        digest = write_manifest(tmp_path / "m.jsonl", self.RECORDS)
        records, stated = read_manifest(tmp_path / "m.jsonl")
        assert records == self.RECORDS
        assert stated == digest
        assert len(digest) == 64

    def test_hash_depends_only_on_record_bytes(self):
        a = manifest_bytes(self.RECORDS)
        b = manifest_bytes(self.RECORDS)
        assert a == b
        c = manifest_bytes(self.RECORDS[:1])
        assert a != c

    def test_tampered_body_rejected(self, tmp_path):
        write_manifest(tmp_path / "m.jsonl", self.RECORDS)
        raw = (tmp_path / "m.jsonl").read_text("utf-8")
        (tmp_path / "m.jsonl").write_text(raw.replace("overlap", "OVERLAP"), "utf-8")
        with pytest.raises(FormatError, match="hash mismatch"):
            read_manifest(tmp_path / "m.jsonl")

    def test_absent_hash_line_rejected(self, tmp_path):
        # without the sha256 marker the whole body hashes against nothing
        (tmp_path / "m.jsonl").write_text('{"seed": 0}\n', "utf-8")
        with pytest.raises(FormatError, match="hash"):
            read_manifest(tmp_path / "m.jsonl")

    def test_empty_file_rejected(self, tmp_path):
        (tmp_path / "m.jsonl").write_bytes(b"")
        with pytest.raises(FormatError, match="missing trailing hash"):
            read_manifest(tmp_path / "m.jsonl")

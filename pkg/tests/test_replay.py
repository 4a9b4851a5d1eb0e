import pytest

from gazescape.config import config_from_dict
from gazescape.events import read_event_log
from gazescape.replay import (ReplayDivergence, load_gaze_file, recorded_hashes,
                              run_replay, verify_replay)
from gazescape.gaze import MalformedRecord

import scenarios

CFG = config_from_dict({
    "canvas": {"width": 128, "height": 128},
    "attention": {"grid_w": 32, "grid_h": 32},
    "mask": {"min_side_px": 48, "feather_px": 8, "pad_px": 8},
})


class TestGazeFile:
    def test_round_trip(self, tmp_path):
        samples = scenarios.build("dwell_hops", 1, 3000)
        path = tmp_path / "gaze.jsonl"
        scenarios.write_gaze_file(str(path), samples)
        assert load_gaze_file(str(path)) == samples

    def test_malformed_line_reports_position(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"t":0,"x":0.5,"y":0.5,"v":true,"s":0}\nnot json\n')
        with pytest.raises(MalformedRecord, match="bad.jsonl:2"):
            load_gaze_file(str(path))


class TestReplayDeterminism:
    @pytest.mark.parametrize("name", sorted(scenarios.SCENARIOS))
    def test_same_inputs_same_hashes(self, name):
        samples = scenarios.build(name, seed=7, duration_ms=15000)
        a = run_replay(CFG, samples)
        b = run_replay(CFG, samples)
        assert a.hashes, f"scenario {name} should publish at least a boot canvas"
        assert a.hashes == b.hashes

    def test_silent_stream_timeout_count_oracle(self):
        # oracle: floor(duration / absence_timeout) idle regenerations
        for duration in (12000, 30000, 47000):
            r = run_replay(CFG, [], duration_ms=duration)
            triggers = [e for e in r.log.of_kind("CycleStarted")
                        if e.payload["kind"] == "full_scene"
                        and e.payload["regen_index"] > 0]
            assert len(triggers) == duration // 5000, f"duration {duration}"

    def test_zero_valid_samples_behaves_as_silent(self):
        invalid = [s for s in scenarios.build("presence_gaps", 3, 20000)]
        invalid = [type(s)(s.t_ms, s.x, s.y, False, s.source_id)
                   for s in invalid]
        r = run_replay(CFG, invalid)
        assert r.log.of_kind("CycleCompleted") == []
        regen_triggers = [e for e in r.log.of_kind("CycleStarted")
                          if e.payload["kind"] == "full_scene"]
        assert len(regen_triggers) == 1 + (invalid[-1].t_ms // 5000)


class TestRecordedVsReplayed:
    def test_verify_accepts_identical_run(self, tmp_path):
        samples = scenarios.build("dwell_hops", 11, 12000)
        log_dir = str(tmp_path / "rec")
        from gazescape.events import EventLog
        first = run_replay(CFG, samples, log=EventLog(log_dir=log_dir))
        first.log.close()
        recorded = read_event_log(f"{log_dir}/events.jsonl")
        again = run_replay(CFG, samples)
        verify_replay(again, recorded)  # must not raise
        assert recorded_hashes(recorded) == again.hashes

    def test_verify_detects_divergence(self):
        samples = scenarios.build("dwell_hops", 11, 12000)
        base = run_replay(CFG, samples)
        other_cfg = config_from_dict({
            "canvas": {"width": 128, "height": 128},
            "attention": {"grid_w": 32, "grid_h": 32},
            "mask": {"min_side_px": 48, "feather_px": 8, "pad_px": 8},
            "session_seed": 999,
        })
        diverged = run_replay(other_cfg, samples)
        with pytest.raises(ReplayDivergence):
            verify_replay(diverged, base.log.events)


class TestReplayFromEventLog:
    def test_event_log_alone_reproduces_session(self, tmp_path):
        from gazescape.events import EventLog
        from gazescape.replay import load_replay_source

        samples = scenarios.build("blink_dropouts", 17, 14000)
        log_dir = str(tmp_path / "rec")
        first = run_replay(CFG, samples, log=EventLog(log_dir=log_dir))
        first.log.close()

        loaded, duration = load_replay_source(f"{log_dir}/events.jsonl")
        assert duration is not None
        # the event log carries the exact delivered stream
        assert loaded == sorted(samples, key=lambda s: s.t_ms)
        again = run_replay(CFG, loaded, duration_ms=duration)
        assert again.hashes == first.hashes

    def test_source_detection_raw_vs_events(self, tmp_path):
        from gazescape.replay import load_replay_source
        raw = tmp_path / "gaze.jsonl"
        scenarios.write_gaze_file(str(raw), scenarios.build("dwell_hops", 1, 2000))
        samples, duration = load_replay_source(str(raw))
        assert duration is None and len(samples) == 61


class TestReplayMechanics:
    def test_stop_after_cycles(self):
        samples = scenarios.build("dwell_hops", 5, 60000)
        r = run_replay(CFG, samples, stop_after_cycles=3)
        assert len(r.log.of_kind("CycleCompleted")) == 3

    def test_on_action_sees_masks(self):
        samples = scenarios.build("dwell_hops", 5, 12000)
        seen = []

        def spy(now_ms, action):
            from gazescape.engine import StartGeneration
            if isinstance(action, StartGeneration) and \
                    action.pending.kind == "inpaint":
                seen.append(action.pending.mask)

        run_replay(CFG, samples, on_action=spy)
        assert seen and all(m.coverage.max() == 1.0 for m in seen)

    def test_final_canvas_matches_last_hash(self):
        from gazescape.imgio import image_hash
        samples = scenarios.build("slow_sweep", 2, 15000)
        r = run_replay(CFG, samples)
        assert image_hash(r.final_canvas) == r.hashes[-1]

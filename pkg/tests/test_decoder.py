import math

import numpy as np
import pytest
from dataclasses import replace

from hybridbci.decoder import (
    AnalysisWindow,
    DecoderParams,
    NoMarkersError,
    bandpass,
    classify_p300,
    classify_ssvep,
    fuse,
    p300_scores,
    ssvep_scores,
)
from hybridbci.model import Channel, Decision, EegRecord, MarkerEvent, Source, StimulusConfig
from hybridbci.stimulus import Flash, FlashSchedule, schedule_flashes
from hybridbci.synth import AttentionSchedule, Segment, SynthParams, protocol_to_schedule, synthesize
from hybridbci.model import SessionProtocol

FS = 128.0
QUIET = SynthParams(noise_white_sigma=0.0, noise_pink_sigma=0.0)


@pytest.fixture
def config():
    return StimulusConfig.default()


@pytest.fixture
def params():
    return DecoderParams()


def sinusoid(freq, duration=3.0, fs=FS, amplitude=1.0):
    t = np.arange(int(duration * fs)) / fs
    return amplitude * np.sin(2 * np.pi * freq * t)


def trimmed_var(x, fs=FS, trim=0.5):
    n = int(trim * fs)
    return np.var(x[n:-n])


def test_bandpass_passes_center():
    y = bandpass(sinusoid(9.0), FS, center=9.0, halfwidth=1.0)
    # analytic variance of a unit sinusoid is 0.5
    assert 0.475 <= trimmed_var(y) <= 0.525


def test_bandpass_rejects_offband():
    y = bandpass(sinusoid(12.0), FS, center=9.0, halfwidth=1.0)
    assert trimmed_var(y) <= 1e-3  # ≥ 30 dB power rejection


def test_bandpass_zero_in_zero_out():
    y = bandpass(np.zeros(384), FS, center=9.0, halfwidth=1.0)
    assert np.allclose(y, 0.0)


def test_bandpass_preserves_length():
    y = bandpass(sinusoid(9.0), FS, 9.0, 1.0)
    assert len(y) == 384


def test_bandpass_band_outside_nyquist_rejected():
    with pytest.raises(ValueError, match="Nyquist"):
        bandpass(sinusoid(9.0), FS, center=64.0, halfwidth=1.0)
    with pytest.raises(ValueError, match="Nyquist"):
        bandpass(sinusoid(9.0), FS, center=0.5, halfwidth=1.0)


def test_bandpass_linearity():
    x, y = sinusoid(9.0), sinusoid(9.5)
    lhs = bandpass(2.0 * x + 3.0 * y, FS, 9.0, 1.0)
    rhs = 2.0 * bandpass(x, FS, 9.0, 1.0) + 3.0 * bandpass(y, FS, 9.0, 1.0)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)


def test_bandpass_zero_phase():
    x = sinusoid(9.0, duration=6.0)
    y = bandpass(x, FS, 9.0, 1.0)
    n = int(1.0 * FS)
    xc, yc = x[n:-n], y[n:-n]
    corr = np.correlate(yc - yc.mean(), xc - xc.mean(), mode="full")
    lag = int(np.argmax(corr)) - (len(xc) - 1)
    assert lag == 0


def test_bandpass_causal_mode():
    y = bandpass(sinusoid(9.0), FS, 9.0, 1.0, zero_phase=False)
    assert len(y) == 384
    assert trimmed_var(y) == pytest.approx(0.5, rel=0.2)


def make_record(o2, f4=None, markers=()):
    f4 = f4 if f4 is not None else np.zeros_like(o2)
    return EegRecord(FS, (Channel("O2", o2), Channel("F4", f4)), tuple(markers))


def test_ssvep_scores_pick_attended(config, params):
    sched = AttentionSchedule((Segment(0.0, 3.0, 2),))
    record = synthesize(sched, FlashSchedule((), seed=0), QUIET, config)
    scores = ssvep_scores(record, AnalysisWindow(0.0, 3.0), config, params)
    assert max(scores, key=scores.get) == 2
    assert all(v >= 0 for v in scores.values())


def test_ssvep_scores_quadratic_in_amplitude(config, params):
    x = sinusoid(9.0)
    w = AnalysisWindow(0.0, 3.0)
    s1 = ssvep_scores(make_record(x), w, config, params)
    s3 = ssvep_scores(make_record(3.0 * x), w, config, params)
    for sid in s1:
        assert s3[sid] == pytest.approx(9.0 * s1[sid], rel=1e-9, abs=1e-18)


def test_ssvep_scores_zero_signal(config, params):
    scores = ssvep_scores(make_record(np.zeros(384)), AnalysisWindow(0.0, 3.0), config, params)
    assert all(v == pytest.approx(0.0, abs=1e-20) for v in scores.values())


def test_classify_ssvep_examples(config):
    d = classify_ssvep({0: 1.0, 1: 0.2, 2: 0.1, 3: 0.1}, config)
    assert d.class_id == 0
    assert d.margin == pytest.approx(4.0)
    assert d.source == Source.SSVEP
    assert not d.low_confidence


def test_classify_ssvep_tie_break(config):
    d = classify_ssvep({0: 1.0, 1: 1.0, 2: 1.0, 3: 1.0}, config)
    assert d.class_id == 0  # lowest frequency
    assert d.low_confidence


def test_classify_ssvep_scale_invariant(config):
    scores = {0: 0.3, 1: 2.4, 2: 0.9, 3: 0.1}
    a = classify_ssvep(scores, config)
    b = classify_ssvep({k: 17.0 * v for k, v in scores.items()}, config)
    assert a.class_id == b.class_id
    assert a.margin == pytest.approx(b.margin)


def test_classify_monotone_transform_invariance(config):
    scores = {0: 0.3, 1: 2.4, 2: 0.9, 3: 0.1}
    transformed = {k: math.exp(v) for k, v in scores.items()}
    assert classify_ssvep(scores, config).class_id == classify_ssvep(transformed, config).class_id


def single_flash_record(config, attended=1, flash_stim=1, onset=1.0):
    sched = AttentionSchedule((Segment(0.0, 3.0, attended),))
    flashes = FlashSchedule((Flash(flash_stim, onset, 0.1),), seed=0)
    return synthesize(sched, flashes, QUIET, config)


def test_p300_single_flash_recovery(config, params):
    record = single_flash_record(config)
    scores, details, skipped = p300_scores(record, AnalysisWindow(0.0, 3.0), config, params)
    assert skipped == 0
    assert 4.9 <= scores[1] <= 5.1
    assert details[0].latency == pytest.approx(0.300, abs=2 / FS)


def test_p300_no_markers(config, params):
    record = make_record(np.zeros(384))
    with pytest.raises(NoMarkersError):
        p300_scores(record, AnalysisWindow(0.0, 3.0), config, params)


def test_p300_mean_of_identical_flashes(config, params):
    sched = AttentionSchedule((Segment(0.0, 6.0, 1),))
    one = FlashSchedule((Flash(1, 1.0, 0.1),), seed=0)
    two = FlashSchedule((Flash(1, 1.0, 0.1), Flash(1, 4.0, 0.1)), seed=0)
    w1 = AnalysisWindow(0.0, 6.0)
    s1, _, _ = p300_scores(synthesize(sched, one, QUIET, config), w1, config, params)
    s2, _, _ = p300_scores(synthesize(sched, two, QUIET, config), w1, config, params)
    assert s2[1] == pytest.approx(s1[1], rel=1e-9)


def test_p300_window_confinement(config, params):
    record = single_flash_record(config)
    onset = record.markers[0].timestamp
    scores, _, _ = p300_scores(record, AnalysisWindow(0.0, 3.0), config, params)

    f4 = record.channel("F4").samples.copy()
    keep = np.zeros(len(f4), dtype=bool)
    i0 = int(np.ceil((onset - 0.100) * FS))
    i1 = int(np.floor((onset + 0.600) * FS))
    keep[max(i0, 0) : i1 + 1] = True
    f4[~keep] = 1e6  # corrupt everything outside the per-flash union
    corrupted = EegRecord(FS, (record.channels[0], Channel("F4", f4)), record.markers)
    scores2, _, _ = p300_scores(corrupted, AnalysisWindow(0.0, 3.0), config, params)
    assert scores2 == scores


def test_p300_incomplete_window_skipped(config, params):
    # flash too close to the record end: no complete 600 ms window
    record = single_flash_record(config, onset=2.7)
    with pytest.raises(NoMarkersError):
        p300_scores(record, AnalysisWindow(0.0, 3.0), config, params)


def test_classify_p300_examples(config):
    d = classify_p300({0: 0.4, 1: 4.8, 2: 0.5, 3: 0.3}, config)
    assert d.class_id == 1
    assert d.source == Source.P300


def test_classify_p300_negative_runner_up(config):
    d = classify_p300({0: 1.0, 1: -0.5, 2: -0.1, 3: -0.2}, config)
    assert d.class_id == 0
    # runner-up clamped to ε = 1e-12 before the ratio
    assert d.margin == pytest.approx(1.0 / 1e-12, rel=1e-6)


def test_p300_margin_synth_oracle(config, params):
    # target bump 5.0 µV vs non-target 0.5 µV: margin (5−0.5)/0.5 = 9
    sched = AttentionSchedule((Segment(0.0, 3.0, 1),))
    flashes = FlashSchedule((Flash(1, 0.5, 0.1), Flash(3, 1.8, 0.1)), seed=0)
    record = synthesize(sched, flashes, QUIET, config)
    scores, _, _ = p300_scores(record, AnalysisWindow(0.0, 3.0), config, params)
    d = classify_p300(scores, config)
    assert d.class_id == 1
    assert d.margin == pytest.approx(9.0, rel=0.05)


def _decision(class_id, margin, source):
    return Decision(class_id, {}, margin, source)


def test_fuse_ssvep_confident(params):
    ssvep = _decision(0, 0.5, Source.SSVEP)
    p300 = _decision(2, 0.9, Source.P300)
    fused = fuse(ssvep, p300, params)
    assert fused.class_id == 0 and fused.source == Source.FUSED
    assert not fused.low_confidence


def test_fuse_p300_corrects(params):
    fused = fuse(_decision(0, 0.05, Source.SSVEP), _decision(2, 0.4, Source.P300), params)
    assert fused.class_id == 2
    assert not fused.low_confidence


def test_fuse_fallback_low_confidence(params):
    fused = fuse(_decision(0, 0.05, Source.SSVEP), None, params)
    assert fused.class_id == 0
    assert fused.low_confidence


def test_fuse_never_invents_class(params):
    for sm in (0.0, 0.1, 0.2, 1.0):
        for pm in (0.0, 0.1, 0.2, 1.0):
            fused = fuse(_decision(1, sm, Source.SSVEP), _decision(3, pm, Source.P300), params)
            assert fused.class_id in (1, 3)


def test_end_to_end_oracle_noise_free(config, params):
    # one default 32 s session, noise disabled: every method decodes every window
    protocol = SessionProtocol(sessions=1)
    sched = protocol_to_schedule(protocol, config)
    flashes = schedule_flashes(config, sched.duration, seed=0)
    record = synthesize(sched, flashes, QUIET, config)
    for seg in sched.focus_segments():
        w = AnalysisWindow(seg.start, seg.end)
        ssvep = classify_ssvep(ssvep_scores(record, w, config, params), config)
        scores, _, _ = p300_scores(record, w, config, params)
        p300 = classify_p300(scores, config)
        fused = fuse(ssvep, p300, params)
        assert ssvep.class_id == seg.attended
        assert p300.class_id == seg.attended
        assert fused.class_id == seg.attended


def test_decoder_params_validation():
    with pytest.raises(ValueError):
        DecoderParams(filter_order=3)
    with pytest.raises(ValueError):
        DecoderParams(band_halfwidth=0.0)
    with pytest.raises(ValueError):
        DecoderParams(p300_min_latency=0.7)

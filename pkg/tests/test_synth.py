import json
import random

import pytest

from subfuse.model import dumps, parse_asr_document, parse_ocr_video, write_timeline
from subfuse.synth import (BACKGROUND_TEXTS, NoiseProfile, generate_corpus, lm_corpus,
                           make_corpus, phrase_bank, profile_from_json, sample_lines)
from subfuse.textsim import char_similarity
from subfuse.tracker import band_of

LINES = ["今天天气不错", "我们出去走走吧", "好的没问题"]


def test_noiseless_frames_and_asr_equal_truth():
    ocr, asr, truth = generate_corpus(LINES, NoiseProfile(seed=1))
    video = parse_ocr_video(json.dumps(ocr))
    texts = {d.text for f in video.frames for d in f.detections}
    assert texts == set(LINES)
    _, segs = parse_asr_document(json.dumps(asr))
    assert [s.text for s in segs] == LINES
    assert [s.text for s in truth.segments] == LINES


def test_background_on_every_frame_off_the_subtitle_band():
    ocr, _, truth = generate_corpus(LINES, NoiseProfile(seed=2, bg_text_rate=1.0))
    video = parse_ocr_video(json.dumps(ocr))
    _, H = video.dims()
    sub_band = None
    for f in video.frames:
        bg = [d for d in f.detections if d.text in BACKGROUND_TEXTS]
        assert bg, f"frame {f.frame_index} has no background text"
        for d in f.detections:
            if d.text in LINES:
                sub_band = band_of(d, H, 20)
    for f in video.frames:
        for d in f.detections:
            if d.text in BACKGROUND_TEXTS:
                assert abs(band_of(d, H, 20) - sub_band) > 1


def test_same_seed_same_bytes():
    p = NoiseProfile(seed=9, char_sub_rate=0.1, bg_text_rate=0.3, merge_fault_rate=0.5,
                     asr_sub_rate=0.1, det_drop_rate=0.1)
    a = generate_corpus(LINES * 3, p)
    b = generate_corpus(LINES * 3, p)
    assert dumps(a[0]) == dumps(b[0]) and dumps(a[1]) == dumps(b[1])
    assert write_timeline(a[2]) == write_timeline(b[2])
    c = generate_corpus(LINES * 3, NoiseProfile(seed=10, char_sub_rate=0.1))
    assert dumps(c[0]) != dumps(a[0])


def test_truth_count_preserved_under_noise():
    p = NoiseProfile(seed=4, char_sub_rate=0.3, det_drop_rate=0.5, merge_fault_rate=1.0,
                     bg_text_rate=0.5, asr_sub_rate=0.5)
    _, asr, truth = generate_corpus(LINES * 2, p)
    assert len(truth.segments) == 6 and len(asr["segments"]) == 6


def test_merge_fault_reuses_the_box_without_a_gap():
    ocr, _, truth = generate_corpus(LINES[:2], NoiseProfile(seed=0, merge_fault_rate=1.0))
    video = parse_ocr_video(json.dumps(ocr))
    boxes = {d.text: d.quad.envelope for f in video.frames for d in f.detections}
    assert boxes[LINES[0]] == boxes[LINES[1]]
    a, b = truth.segments
    assert b.start_ms - a.end_ms == 40  # consecutive frames


def test_homophone_noise_keeps_syllables():
    from subfuse.textsim import default_syllable_table, to_syllables
    table = default_syllable_table()
    ocr, _, _ = generate_corpus(["他们都是好人"], NoiseProfile(seed=3, char_homophone_rate=1.0))
    video = parse_ocr_video(json.dumps(ocr))
    for f in video.frames:
        for d in f.detections:
            assert to_syllables(d.text, table) == to_syllables("他们都是好人", table)


def test_empty_lines_rejected():
    with pytest.raises(ValueError):
        generate_corpus([], NoiseProfile())


def test_profile_validation():
    with pytest.raises(ValueError):
        NoiseProfile(char_sub_rate=1.5)
    with pytest.raises(ValueError):
        profile_from_json('{"seed": 1, "typo_rate": 0.1}')
    assert profile_from_json('{"seed": 3, "asr_sub_rate": 0.2}') == \
        NoiseProfile(seed=3, asr_sub_rate=0.2)


def test_sample_lines_similar_pairs():
    rng = random.Random(0)
    lines = sample_lines(rng, 200, similar_rate=0.5)
    assert len(lines) == 200
    close = sum(1 for a, b in zip(lines, lines[1:]) if 0.6 <= char_similarity(a, b) < 0.8)
    assert close > 40


def test_make_corpus_is_seeded():
    a = make_corpus(NoiseProfile(seed=5), n_videos=3, lines_per_video=4)
    b = make_corpus(NoiseProfile(seed=5), n_videos=3, lines_per_video=4)
    assert [v.video_id for v in a] == ["v000", "v001", "v002"]
    assert [dumps(v.ocr) for v in a] == [dumps(v.ocr) for v in b]


def test_lm_corpus_and_phrase_bank():
    assert len(phrase_bank()) > 100
    assert lm_corpus(1, 50) == lm_corpus(1, 50) and len(lm_corpus(1, 50)) == 50

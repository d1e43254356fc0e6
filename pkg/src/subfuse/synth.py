"""Deterministic synthetic OCR/ASR corpora with known ground truth."""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

from .model import (AsrSegment, BoundingQuad, Candidate, Frame, FrameDetection, OcrVideo,
                    SubtitleSegment, Timeline, asr_to_dict, ocr_video_to_dict)
from .textsim import char_similarity, default_syllable_table

BACKGROUND_TEXTS = ("频道标志", "热门推荐", "独家播出", "高清", "新闻直播", "关注我们",
                    "点赞收藏转发", "购买链接见评论区")

SUB_CHAR_W = 36
SUB_H = 44
GAP_FRAMES = 15  # longer than the tracker's default gap bridge
# background text is placed outside the subtitle's vertical band and its two
# neighbours, with the frame cut into this many bands
BG_CLEARANCE_BANDS = 20


@dataclass(frozen=True)
class NoiseProfile:
    seed: int = 0
    char_sub_rate: float = 0.0
    char_homophone_rate: float = 0.0
    det_drop_rate: float = 0.0
    bg_text_rate: float = 0.0
    asr_sub_rate: float = 0.0
    merge_fault_rate: float = 0.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if k != "seed" and not 0.0 <= v <= 1.0:
                raise ValueError(f"{k} must be in [0, 1]")

    @classmethod
    def from_dict(cls, data: Mapping) -> "NoiseProfile":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown noise profile keys: {sorted(unknown)}")
        return cls(**data)


@lru_cache(maxsize=1)
def phrase_bank() -> tuple[str, ...]:
    text = resources.files("subfuse").joinpath("data/phrases.txt").read_text(encoding="utf-8")
    return tuple(ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#"))


def _homophones(table: Mapping[str, str]) -> dict[str, list[str]]:
    by_syl: dict[str, list[str]] = {}
    for ch, syl in sorted(table.items()):
        by_syl.setdefault(syl, []).append(ch)
    return {ch: [o for o in by_syl[syl] if o != ch] for ch, syl in table.items()
            if len(by_syl[syl]) > 1}


def sample_lines(rng: random.Random, n: int, similar_rate: float = 0.3) -> list[str]:
    """Subtitle-like lines from the phrase bank.

    With probability ``similar_rate`` a line re-uses most of the previous one,
    which is what makes back-to-back subtitles prone to being merged.
    """
    bank = phrase_bank()
    lines: list[str] = []
    while len(lines) < n:
        if lines and rng.random() < similar_rate:
            prev = lines[-1]
            for _ in range(20):
                cut = rng.randint(2, max(2, len(prev) // 2))
                cand = rng.choice(bank)[:cut + 1] + prev[cut:]
                if 0.6 <= char_similarity(cand, prev) < 0.8:
                    lines.append(cand)
                    break
            else:
                continue
            continue
        line = ""
        while len(line) < 6:
            line += rng.choice(bank)
        if len(line) < 16 and rng.random() < 0.5:
            line += rng.choice(bank)
        lines.append(line[:18])
    return lines


def _corrupt(text: str, rng: random.Random, sub_rate: float, homo_rate: float,
             pool: Sequence[str], homophones: Mapping[str, list[str]]) -> str:
    out = []
    for ch in text:
        r = rng.random()
        if r < sub_rate:
            out.append(rng.choice([c for c in pool if c != ch] or [ch]))
        elif r < sub_rate + homo_rate and ch in homophones:
            out.append(rng.choice(homophones[ch]))
        else:
            out.append(ch)
    return "".join(out)


def generate_corpus(truth_lines: Sequence[str], profile: NoiseProfile, fps: float = 25.0,
                    frame_dims: tuple[int, int] = (1280, 720), video_id: str = "v000",
                    syllables: Mapping[str, str] | None = None) -> tuple[dict, dict, Timeline]:
    """Render ``truth_lines`` as OCR frames and ASR segments.

    Returns ``(ocr_document, asr_document, truth_timeline)`` where the two
    documents follow the OCR and ASR JSON schemas.
    """
    if not truth_lines:
        raise ValueError("truth_lines is empty")
    table = default_syllable_table() if syllables is None else syllables
    homophones = _homophones(table)
    pool = sorted(table)
    rng = random.Random(f"{profile.seed}:{video_id}")
    W, H = frame_dims
    sub_y0 = round(0.86 * H)

    def t_of(fi: int) -> int:
        return round(fi * 1000 / fps)

    # lay out subtitles on the frame axis
    spans = []  # (first_frame, last_frame, box, text)
    fi = GAP_FRAMES
    prev_box = None
    merged_prev = False
    for i, line in enumerate(truth_lines):
        n = min(max(len(line) * 6, 25), 100)
        fault = (i > 0 and not merged_prev and rng.random() < profile.merge_fault_rate)
        if fault:
            fi -= GAP_FRAMES
            box = prev_box
        else:
            w = min(W - 20, len(line) * SUB_CHAR_W)
            x0 = (W - w) // 2
            box = (x0, sub_y0, x0 + w, sub_y0 + SUB_H)
        spans.append((fi, fi + n - 1, box, line))
        merged_prev = fault
        prev_box = box
        fi += n + GAP_FRAMES
    total_frames = fi

    frame_dets: list[list[FrameDetection]] = [[] for _ in range(total_frames)]
    for first, last, box, line in spans:
        for f in range(first, last + 1):
            if rng.random() < profile.det_drop_rate:
                continue
            text = _corrupt(line, rng, profile.char_sub_rate, profile.char_homophone_rate,
                            pool, homophones)
            frame_dets[f].append(FrameDetection(
                f, t_of(f), BoundingQuad.from_box(*box), text, round(rng.uniform(0.85, 0.99), 3)))

    # background scene text: short-lived objects at fixed spots off the subtitle rows
    bg = None  # [text, box, frames_left]
    for f in range(total_frames):
        if bg is not None:
            bg[2] -= 1
            if bg[2] <= 0:
                bg = None
        if rng.random() >= profile.bg_text_rate:
            continue
        if bg is None:
            text = rng.choice(BACKGROUND_TEXTS)
            bw, bh = len(text) * 28, 30
            band_h = H / BG_CLEARANCE_BANDS
            sub_band = int((sub_y0 + SUB_H / 2) // band_h)
            while True:
                y0 = rng.randint(0, H - bh - 1)
                if abs(int((y0 + bh / 2) // band_h) - sub_band) > 1:
                    break
            x0 = rng.randint(0, W - bw - 1)
            bg = [text, (x0, y0, x0 + bw, y0 + bh), rng.randint(10, 60)]
        x0, y0, x1, y1 = bg[1]
        jx, jy = rng.randint(-2, 2), rng.randint(-2, 2)
        frame_dets[f].append(FrameDetection(
            f, t_of(f),
            BoundingQuad.from_box(max(0, x0 + jx), max(0, y0 + jy), x1 + jx, y1 + jy),
            bg[0], round(rng.uniform(0.6, 0.95), 3)))

    video = OcrVideo(video_id, tuple(Frame(f, t_of(f), tuple(d)) for f, d in enumerate(frame_dets)),
                     float(W), float(H))

    asr, truth = [], []
    for first, last, _, line in spans:
        start, end = t_of(first), t_of(last)
        noisy = _corrupt(line, rng, profile.asr_sub_rate / 2, profile.asr_sub_rate / 2,
                         pool, homophones)
        asr.append(AsrSegment(start, end, noisy, 0.9))
        truth.append(SubtitleSegment(start, end, line, "visual", (Candidate(line, 1, 1.0),)))
    return ocr_video_to_dict(video), asr_to_dict(video_id, asr), Timeline(video_id, tuple(truth))


@dataclass(frozen=True)
class SynthVideo:
    video_id: str
    ocr: dict
    asr: dict
    truth: Timeline


def make_corpus(profile: NoiseProfile, n_videos: int = 50, lines_per_video: int = 12,
                similar_rate: float = 0.3, fps: float = 25.0,
                frame_dims: tuple[int, int] = (1280, 720)) -> list[SynthVideo]:
    """A seed-determined corpus of ``n_videos`` videos."""
    rng = random.Random(f"lines:{profile.seed}")
    out = []
    for v in range(n_videos):
        vid = f"v{v:03d}"
        lines = sample_lines(rng, lines_per_video, similar_rate)
        ocr, asr, truth = generate_corpus(lines, profile, fps, frame_dims, vid)
        out.append(SynthVideo(vid, ocr, asr, truth))
    return out


def lm_corpus(seed: int, n_lines: int = 2000) -> list[str]:
    """Training text drawn from the same phrase distribution but a separate stream."""
    return sample_lines(random.Random(f"lm:{seed}"), n_lines, similar_rate=0.3)


def profile_from_json(document: bytes | str) -> NoiseProfile:
    return NoiseProfile.from_dict(json.loads(document))

"""Visual subtitle extraction: tracks in, timeline out."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Callable, Protocol, Sequence

from .model import (BoundingQuad, Candidate, Frame, FrameDetection, OcrVideo,
                    SubtitleSegment, Timeline, normalize_segments)
from .textsim import char_similarity
from .tracker import TextTrack, TrackerParams, position_filter, run_tracker


@dataclass(frozen=True)
class ExtractorParams:
    image_score_threshold: float = 0.05
    merge_similarity_threshold: float = 0.6
    min_track_frames: int = 3
    keep_threshold: float = 0.5
    # OCR flicker: shorter segments fold into a similar neighbour from the same track
    min_segment_frames: int = 5
    absorb_similarity: float = 0.3

    def __post_init__(self):
        for name in ("image_score_threshold", "merge_similarity_threshold", "keep_threshold",
                     "absorb_similarity"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.min_track_frames < 1 or self.min_segment_frames < 1:
            raise ValueError("frame counts must be >= 1")


class ImageScorer(Protocol):
    def __call__(self, det: FrameDetection, frame_w: float, frame_h: float) -> float: ...


TextClassifier = Callable[[Sequence[str]], float]


def default_image_score(d: FrameDetection, frame_w: float, frame_h: float) -> float:
    """Box-shape heuristic standing in for an image classifier.

    Wide boxes in the bottom 40% of the frame score high; the OCR confidence
    scales the result.
    """
    ratio = d.quad.width / d.quad.height
    aspect = 1.0 if ratio >= 2 else ratio / 2
    vertical = 1.0 if d.quad.center[1] >= 0.6 * frame_h else 0.2
    return aspect * vertical * d.conf


def filter_detections(frames: Sequence[Frame], scorer: ImageScorer | None = None,
                      threshold: float = 0.05, frame_w: float | None = None,
                      frame_h: float | None = None) -> list[Frame]:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    scorer = scorer or default_image_score
    if frame_w is None or frame_h is None:
        w, h = OcrVideo("", tuple(frames)).dims()
        frame_w = w if frame_w is None else frame_w
        frame_h = h if frame_h is None else frame_h
    return [
        replace(fr, detections=tuple(d for d in fr.detections
                                     if scorer(d, frame_w, frame_h) >= threshold))
        for fr in frames
    ]


def _majority(texts: Sequence[str], confs: Sequence[float]) -> str:
    """Most frequent text; ties -> higher mean conf, then earliest occurrence."""
    stats: dict[str, list] = {}
    for i, (t, c) in enumerate(zip(texts, confs)):
        s = stats.setdefault(t, [0, 0.0, i])
        s[0] += 1
        s[1] += c
    return min(stats, key=lambda t: (-stats[t][0], -stats[t][1] / stats[t][0], stats[t][2]))


def _candidates(texts: Sequence[str], confs: Sequence[float]) -> tuple[Candidate, ...]:
    support: dict[str, int] = defaultdict(int)
    total: dict[str, float] = defaultdict(float)
    for t, c in zip(texts, confs):
        support[t] += 1
        total[t] += c
    # first-occurrence order
    return tuple(Candidate(t, support[t], min(1.0, total[t] / support[t])) for t in support)


def _segment(entries: Sequence[FrameDetection]) -> SubtitleSegment:
    texts = [d.text for d in entries]
    confs = [d.conf for d in entries]
    return SubtitleSegment(
        entries[0].time_ms, entries[-1].time_ms, _majority(texts, confs), "visual",
        _candidates(texts, confs), tuple((d.time_ms, d.text) for d in entries))


def merge_track_text(track: TextTrack | Sequence[FrameDetection],
                     merge_similarity_threshold: float = 0.6, min_segment_frames: int = 1,
                     absorb_similarity: float = 0.3) -> list[SubtitleSegment]:
    """Cut a track into segments wherever the frame text departs from the current one.

    With ``min_segment_frames > 1`` a clean-up pass follows: adjacent runs
    whose majority texts pass the merge threshold are joined, and runs
    shorter than ``min_segment_frames`` fold into the more similar adjacent
    run when that similarity reaches ``absorb_similarity``.
    """
    dets = track.detections if isinstance(track, TextTrack) else list(track)
    if not dets:
        raise ValueError("track is empty")
    runs: list[list[FrameDetection]] = []
    cur = [dets[0]]
    rep = dets[0].text
    for d in dets[1:]:
        if char_similarity(rep, d.text) < merge_similarity_threshold:
            runs.append(cur)
            cur = [d]
        else:
            cur.append(d)
        rep = _majority([x.text for x in cur], [x.conf for x in cur])
    runs.append(cur)
    if min_segment_frames > 1:
        runs = _absorb_flicker(runs, min_segment_frames, absorb_similarity,
                               merge_similarity_threshold)
    return [_segment(r) for r in runs]


def _absorb_flicker(runs, min_frames: int, min_sim: float, merge_threshold: float):
    runs = [list(r) for r in runs]

    def rep(r):
        return _majority([d.text for d in r], [d.conf for d in r])

    reps = [rep(r) for r in runs]
    changed = True
    while changed:
        changed = False
        # neighbours that agree once their noise is voted out are one segment
        i = 0
        while i + 1 < len(runs):
            if char_similarity(reps[i], reps[i + 1]) >= merge_threshold:
                runs[i:i + 2] = [runs[i] + runs[i + 1]]
                reps[i:i + 2] = [rep(runs[i])]
                changed = True
            else:
                i += 1
        # then fold the shortest flicker run into its most similar neighbour
        best = None
        for i, r in enumerate(runs):
            if len(r) >= min_frames:
                continue
            for j in (i - 1, i + 1):
                if 0 <= j < len(runs):
                    sim = char_similarity(reps[i], reps[j])
                    if sim >= min_sim:
                        key = (len(r), -sim, i, j)
                        if best is None or key < best:
                            best = key
        if best is not None:
            _, _, i, j = best
            lo, hi = min(i, j), max(i, j)
            runs[lo:hi + 1] = [runs[lo] + runs[hi]]
            reps[lo:hi + 1] = [rep(runs[lo])]
            changed = True
    return runs


def make_default_classifier(min_track_frames: int = 3) -> TextClassifier:
    def classify(texts: Sequence[str]) -> float:
        if len(texts) < min_track_frames:
            return 0.0
        majority = _majority(texts, [0.0] * len(texts))
        return 1.0 if len(majority) >= 2 else 0.0
    return classify


def classify_track(track: TextTrack, text_classifier: TextClassifier | None = None,
                   keep_threshold: float = 0.5, min_track_frames: int = 3) -> bool:
    """True to keep the track."""
    clf = text_classifier or make_default_classifier(min_track_frames)
    return clf([d.text for d in track.detections]) >= keep_threshold


@dataclass
class Hooks:
    image_scorer: ImageScorer | None = None
    text_classifier: TextClassifier | None = None


def extract_segments(video: OcrVideo, tracker_params: TrackerParams | None = None,
                     extractor_params: ExtractorParams | None = None,
                     hooks: Hooks | None = None) -> list[SubtitleSegment]:
    tp = tracker_params or TrackerParams()
    ep = extractor_params or ExtractorParams()
    hooks = hooks or Hooks()
    w, h = video.dims()
    frames = [replace(fr, detections=tuple(d for d in fr.detections if d.text.strip()))
              for fr in video.frames]
    frames = filter_detections(frames, hooks.image_scorer, ep.image_score_threshold, w, h)
    tracks = run_tracker(frames, tp)
    if tp.position_filter:
        tracks = position_filter(tracks, h, tp)
    clf = hooks.text_classifier or make_default_classifier(ep.min_track_frames)
    segments: list[SubtitleSegment] = []
    for t in tracks:
        if classify_track(t, clf, ep.keep_threshold):
            segments.extend(merge_track_text(t, ep.merge_similarity_threshold,
                                             ep.min_segment_frames, ep.absorb_similarity))
    return segments


def build_visual_timeline(video: OcrVideo, tracker_params: TrackerParams | None = None,
                          extractor_params: ExtractorParams | None = None,
                          hooks: Hooks | None = None) -> Timeline:
    segments = extract_segments(video, tracker_params, extractor_params, hooks)
    return Timeline(video.video_id, tuple(normalize_segments(segments)))


def assign_weak_labels(recognized: Sequence[tuple[str, BoundingQuad]] | Sequence[str],
                       weak_transcripts: Sequence[str],
                       match_threshold: float = 0.9) -> list[tuple[int, int]]:
    """Greedy max-similarity pairing of weak transcripts to recognized boxes.

    Returns ``(weak_index, recognized_index)`` pairs in the order chosen.
    """
    rec_texts = [r if isinstance(r, str) else r[0] for r in recognized]
    scored = []
    for wi, w in enumerate(weak_transcripts):
        for ri, r in enumerate(rec_texts):
            s = char_similarity(w, r)
            if s >= match_threshold:
                scored.append((-s, wi, ri))
    scored.sort()
    used_w: set[int] = set()
    used_r: set[int] = set()
    out = []
    for _, wi, ri in scored:
        if wi in used_w or ri in used_r:
            continue
        used_w.add(wi)
        used_r.add(ri)
        out.append((wi, ri))
    return out

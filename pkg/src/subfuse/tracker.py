"""Link OCR detections across frames into text tracks."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .assignment import solve_assignment
from .model import BoundingQuad, Frame, FrameDetection


class TrackerInputError(ValueError):
    pass


@dataclass(frozen=True)
class TrackerParams:
    gate_cost: float = 0.7
    max_gap_frames: int = 10
    band_count: int = 20
    min_band_fraction: float = 0.5
    position_filter: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gate_cost <= 1.0:
            raise ValueError("gate_cost must be in [0, 1]")
        if self.max_gap_frames < 0:
            raise ValueError("max_gap_frames must be >= 0")
        if self.band_count < 2:
            raise ValueError("band_count must be >= 2")
        if not 0.0 <= self.min_band_fraction <= 1.0:
            raise ValueError("min_band_fraction must be in [0, 1]")


@dataclass
class TextTrack:
    track_id: int
    entries: list[tuple[int, FrameDetection]] = field(default_factory=list)
    state: str = "open"

    @property
    def last_frame(self) -> int:
        return self.entries[-1][0]

    @property
    def last_quad(self) -> BoundingQuad:
        return self.entries[-1][1].quad

    @property
    def detections(self) -> list[FrameDetection]:
        return [d for _, d in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def iou(a: BoundingQuad, b: BoundingQuad) -> float:
    """Intersection over union of the axis-aligned envelopes."""
    ax0, ay0, ax1, ay1 = a.envelope
    bx0, by0, bx1, by1 = b.envelope
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def _det_key(d: FrameDetection):
    return (d.quad.envelope, d.quad.points, d.text, d.conf)


class Tracker:
    """Incremental tracker; ``step`` consumes one frame's detections."""

    def __init__(self, params: TrackerParams | None = None):
        self.params = params or TrackerParams()
        self.open: list[TextTrack] = []
        self.closed: list[TextTrack] = []
        self._next_id = 0
        self._last_frame = -1

    def _close(self, track: TextTrack) -> None:
        track.state = "closed"
        self.closed.append(track)

    def step(self, frame_index: int, detections: Sequence[FrameDetection]) -> None:
        if frame_index <= self._last_frame:
            raise TrackerInputError(
                f"frame {frame_index} does not follow frame {self._last_frame}")
        if any(d.frame_index != frame_index for d in detections):
            raise TrackerInputError(f"detections at frame {frame_index} disagree on frame_index")
        self._last_frame = frame_index
        p = self.params
        # tracks that already missed more than max_gap frames cannot be matched
        still_open = []
        for t in self.open:
            if frame_index - t.last_frame - 1 > p.max_gap_frames:
                self._close(t)
            else:
                still_open.append(t)
        # canonical detection order makes the result permutation-invariant
        dets = sorted(detections, key=_det_key)
        matched_tracks: set[int] = set()
        matched_dets: set[int] = set()
        if still_open and dets:
            cost = np.empty((len(still_open), len(dets)))
            for i, t in enumerate(still_open):
                q = t.last_quad
                for j, d in enumerate(dets):
                    cost[i, j] = 1.0 - iou(q, d.quad)
            for i, j in solve_assignment(cost):
                if cost[i, j] <= p.gate_cost:
                    still_open[i].entries.append((frame_index, dets[j]))
                    matched_tracks.add(i)
                    matched_dets.add(j)
        self.open = []
        for i, t in enumerate(still_open):
            if i not in matched_tracks and frame_index - t.last_frame > p.max_gap_frames:
                self._close(t)
            else:
                self.open.append(t)
        for j, d in enumerate(dets):
            if j not in matched_dets:
                self.open.append(TextTrack(self._next_id, [(frame_index, d)]))
                self._next_id += 1

    def finish(self) -> list[TextTrack]:
        for t in self.open:
            self._close(t)
        self.open = []
        return sorted(self.closed, key=lambda t: t.track_id)


def track_step(open_tracks: list[TextTrack], detections: Sequence[FrameDetection],
               params: TrackerParams | None = None, next_id: int | None = None
               ) -> tuple[list[TextTrack], list[TextTrack]]:
    """One tracking step: returns ``(open_tracks, newly_closed)``.

    The input tracks are extended in place.
    """
    if not detections and not open_tracks:
        return [], []
    frame_index = detections[0].frame_index if detections else None
    last = max((t.last_frame for t in open_tracks), default=-1)
    if frame_index is None:
        frame_index = last + 1
    if frame_index <= last:
        raise TrackerInputError(f"frame {frame_index} is not after open tracks' last frame {last}")
    tr = Tracker(params)
    tr.open = list(open_tracks)
    tr._last_frame = last
    if next_id is None:
        next_id = max((t.track_id for t in open_tracks), default=-1) + 1
    tr._next_id = next_id
    tr.step(frame_index, detections)
    return tr.open, tr.closed


def run_tracker(frames: Iterable[Frame], params: TrackerParams | None = None) -> list[TextTrack]:
    tr = Tracker(params)
    for fr in frames:
        dets = [d for d in fr.detections]
        tr.step(fr.frame_index, dets)
    return tr.finish()


def band_of(det: FrameDetection, frame_height: float, band_count: int) -> int:
    y = det.quad.center[1]
    band = math.floor(y / (frame_height / band_count))
    return min(max(band, 0), band_count - 1)


def position_filter(tracks: Sequence[TextTrack], frame_height: float,
                    params: TrackerParams | None = None) -> list[TextTrack]:
    """Keep tracks that mostly sit within one band of the busiest vertical band."""
    if frame_height <= 0:
        raise ValueError("frame_height must be positive")
    p = params or TrackerParams()
    if not tracks:
        return []
    bands = [[band_of(d, frame_height, p.band_count) for d in t.detections] for t in tracks]
    hist = Counter(b for bs in bands for b in bs)
    top = max(hist.values())
    modal = min(b for b, c in hist.items() if c == top)
    kept = []
    for t, bs in zip(tracks, bands):
        near = sum(1 for b in bs if abs(b - modal) <= 1)
        if near >= p.min_band_fraction * len(bs):
            kept.append(t)
    return kept


def tracks_to_dict(tracks: Sequence[TextTrack]) -> list[dict]:
    return [
        {
            "track_id": t.track_id,
            "state": t.state,
            "entries": [
                {"frame_index": fi, "time_ms": d.time_ms, "text": d.text, "conf": d.conf,
                 "quad": [list(pt) for pt in d.quad.points]}
                for fi, d in t.entries
            ],
        }
        for t in tracks
    ]

"""Domain types plus OCR/ASR/timeline JSON ingestion and SRT emission."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

SOURCES = ("visual", "audio_pad", "fused")


class ParseError(ValueError):
    """Document is not well-formed JSON (or ARPA, or config text)."""


class ValidationError(ValueError):
    """Document parsed but violates a type invariant."""


@dataclass(frozen=True)
class BoundingQuad:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if len(pts) != 4:
            raise ValidationError(f"quad needs exactly 4 points, got {len(pts)}")
        for x, y in pts:
            if not (math.isfinite(x) and math.isfinite(y)) or x < 0 or y < 0:
                raise ValidationError(f"quad coordinate out of range: {(x, y)}")
        object.__setattr__(self, "points", pts)
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("quad envelope has zero area")

    @classmethod
    def from_box(cls, x0: float, y0: float, x1: float, y1: float) -> "BoundingQuad":
        return cls(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    @property
    def envelope(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        return min(xs), min(ys), max(xs), max(ys)

    @property
    def width(self) -> float:
        x0, _, x1, _ = self.envelope
        return x1 - x0

    @property
    def height(self) -> float:
        _, y0, _, y1 = self.envelope
        return y1 - y0

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.envelope
        return (x0 + x1) / 2, (y0 + y1) / 2


@dataclass(frozen=True)
class FrameDetection:
    frame_index: int
    time_ms: int
    quad: BoundingQuad
    text: str
    conf: float

    def __post_init__(self):
        if self.frame_index < 0 or self.time_ms < 0:
            raise ValidationError("frame_index and time_ms must be >= 0")
        if not (0.0 <= self.conf <= 1.0):
            raise ValidationError(f"conf {self.conf} outside [0, 1]")


@dataclass(frozen=True)
class Frame:
    """All detections of one video frame."""

    frame_index: int
    time_ms: int
    detections: tuple[FrameDetection, ...] = ()


@dataclass(frozen=True)
class OcrVideo:
    video_id: str
    frames: tuple[Frame, ...]
    frame_width: float | None = None
    frame_height: float | None = None

    def dims(self) -> tuple[float, float]:
        """Frame size; inferred from the detection envelopes when not declared."""
        w, h = self.frame_width, self.frame_height
        if w is None or h is None:
            mx = my = 1.0
            for fr in self.frames:
                for d in fr.detections:
                    x0, y0, x1, y1 = d.quad.envelope
                    mx, my = max(mx, x1), max(my, y1)
            w = w if w is not None else mx
            h = h if h is not None else my
        return float(w), float(h)


@dataclass(frozen=True)
class AsrSegment:
    start_ms: int
    end_ms: int
    text: str
    conf: float | None = None

    def __post_init__(self):
        if self.start_ms > self.end_ms:
            raise ValidationError(f"ASR segment start {self.start_ms} > end {self.end_ms}")
        if not self.text.strip():
            raise ValidationError("ASR segment text is empty")
        if self.conf is not None and not (0.0 <= self.conf <= 1.0):
            raise ValidationError(f"ASR conf {self.conf} outside [0, 1]")


@dataclass(frozen=True)
class Candidate:
    text: str
    support: int
    mean_conf: float

    def __post_init__(self):
        if self.support < 1:
            raise ValidationError("candidate support must be >= 1")
        if not (0.0 <= self.mean_conf <= 1.0):
            raise ValidationError("candidate mean_conf outside [0, 1]")


@dataclass(frozen=True)
class SubtitleSegment:
    start_ms: int
    end_ms: int
    text: str
    source: str = "visual"
    candidates: tuple[Candidate, ...] = ()
    # per-frame (time_ms, text) observations; lets the splitter cut at frame boundaries
    frames: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        if self.start_ms > self.end_ms:
            raise ValidationError(f"segment start {self.start_ms} > end {self.end_ms}")
        if self.source not in SOURCES:
            raise ValidationError(f"unknown source {self.source!r}")
        if self.candidates and self.text not in {c.text for c in self.candidates}:
            raise ValidationError(f"segment text {self.text!r} is not among its candidates")


@dataclass(frozen=True)
class Timeline:
    video_id: str
    segments: tuple[SubtitleSegment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        max_end = None
        for prev, seg in zip(self.segments, self.segments[1:]):
            if seg.start_ms < prev.start_ms:
                raise ValidationError("timeline segments not sorted by start_ms")
        for seg in self.segments:
            if max_end is not None and seg.start_ms < max_end:
                raise ValidationError(f"segments overlap at {seg.start_ms} ms")
            max_end = seg.end_ms if max_end is None else max(max_end, seg.end_ms)

    def text(self) -> str:
        return "".join(s.text for s in self.segments)


def normalize_segments(segments: Iterable[SubtitleSegment]) -> list[SubtitleSegment]:
    """Sort by start and clip each segment's start to the running max end."""
    out: list[SubtitleSegment] = []
    max_end = None
    for seg in sorted(segments, key=lambda s: s.start_ms):
        if max_end is not None and seg.start_ms < max_end:
            start = max_end
            end = max(seg.end_ms, start)
            seg = replace(seg, start_ms=start, end_ms=end)
        out.append(seg)
        max_end = seg.end_ms if max_end is None else max(max_end, seg.end_ms)
    return out


# ---------------------------------------------------------------- JSON input


def _load_json(document: bytes | str) -> Any:
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"invalid UTF-8 at byte offset {e.start}") from e
    try:
        return json.loads(document)
    except json.JSONDecodeError as e:
        offset = len(document[: e.pos].encode("utf-8"))
        raise ParseError(f"malformed JSON at byte offset {offset}: {e.msg}") from e


def _require(obj: Any, key: str, kind, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError(f"{where}: missing field {key!r}")
    val = obj[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise ValidationError(f"{where}: field {key!r} must be an integer")
    if kind is float and (isinstance(val, bool) or not isinstance(val, (int, float))):
        raise ValidationError(f"{where}: field {key!r} must be a number")
    if kind is str and not isinstance(val, str):
        raise ValidationError(f"{where}: field {key!r} must be a string")
    if kind is list and not isinstance(val, list):
        raise ValidationError(f"{where}: field {key!r} must be a list")
    return val


def parse_ocr_video(document: bytes | str) -> OcrVideo:
    data = _load_json(document)
    if not isinstance(data, dict):
        raise ValidationError("OCR document must be a JSON object")
    video_id = str(data.get("video_id", ""))
    frames = []
    for raw in _require(data, "frames", list, "document"):
        fi = _require(raw, "frame_index", int, "frame")
        where = f"frame_index {fi}"
        try:
            t = _require(raw, "time_ms", int, where)
            dets = []
            for rd in _require(raw, "detections", list, where):
                quad = BoundingQuad(tuple(tuple(p) for p in _require(rd, "quad", list, where)))
                text = _require(rd, "text", str, where)
                conf = float(_require(rd, "conf", float, where))
                dets.append(FrameDetection(fi, t, quad, text, conf))
            frames.append(Frame(fi, t, tuple(dets)))
        except (ValidationError, TypeError, ValueError) as e:
            raise ValidationError(f"{where}: {e}") from e
    frames.sort(key=lambda f: f.frame_index)
    for a, b in zip(frames, frames[1:]):
        if a.frame_index == b.frame_index:
            raise ValidationError(f"frame_index {b.frame_index}: duplicate frame")
        if b.time_ms < a.time_ms:
            raise ValidationError(f"frame_index {b.frame_index}: time_ms decreases")
    w, h = data.get("frame_width"), data.get("frame_height")
    return OcrVideo(video_id, tuple(frames),
                    None if w is None else float(w), None if h is None else float(h))


def parse_ocr_frames(document: bytes | str) -> list[Frame]:
    """Per-frame detection groups sorted by frame_index."""
    return list(parse_ocr_video(document).frames)


def parse_asr_document(document: bytes | str) -> tuple[str, list[AsrSegment]]:
    data = _load_json(document)
    if isinstance(data, list):
        video_id, raw_segments = "", data
    elif isinstance(data, dict):
        video_id = str(data.get("video_id", ""))
        raw_segments = _require(data, "segments", list, "document")
    else:
        raise ValidationError("ASR document must be a JSON object or list")
    segs = []
    for i, raw in enumerate(raw_segments):
        where = f"segment {i}"
        conf = raw.get("conf") if isinstance(raw, dict) else None
        segs.append(AsrSegment(
            _require(raw, "start_ms", int, where),
            _require(raw, "end_ms", int, where),
            _require(raw, "text", str, where),
            None if conf is None else float(conf),
        ))
    segs.sort(key=lambda s: (s.start_ms, s.end_ms))
    return video_id, segs


def parse_asr_segments(document: bytes | str) -> list[AsrSegment]:
    return parse_asr_document(document)[1]


# ------------------------------------------------------------ timeline JSON


def segment_to_dict(seg: SubtitleSegment) -> dict:
    d = {
        "start_ms": seg.start_ms,
        "end_ms": seg.end_ms,
        "text": seg.text,
        "source": seg.source,
        "candidates": [
            {"text": c.text, "support": c.support, "mean_conf": c.mean_conf}
            for c in seg.candidates
        ],
    }
    if seg.frames:
        d["frames"] = [[t, s] for t, s in seg.frames]
    return d


def timeline_to_dict(tl: Timeline) -> dict:
    return {"video_id": tl.video_id, "segments": [segment_to_dict(s) for s in tl.segments]}


def dumps(obj: Any) -> bytes:
    """Canonical JSON bytes: stable key order, UTF-8, trailing newline."""
    return (json.dumps(obj, ensure_ascii=False, indent=1, sort_keys=True) + "\n").encode("utf-8")


def write_timeline(tl: Timeline) -> bytes:
    return dumps(timeline_to_dict(tl))


def timeline_from_dict(data: Any) -> Timeline:
    if not isinstance(data, dict):
        raise ValidationError("timeline must be a JSON object")
    segs = []
    for i, raw in enumerate(_require(data, "segments", list, "timeline")):
        where = f"segment {i}"
        cands = tuple(
            Candidate(_require(c, "text", str, where), _require(c, "support", int, where),
                      float(_require(c, "mean_conf", float, where)))
            for c in raw.get("candidates", [])
        )
        frames = tuple((int(t), str(s)) for t, s in raw.get("frames", []))
        segs.append(SubtitleSegment(
            _require(raw, "start_ms", int, where),
            _require(raw, "end_ms", int, where),
            _require(raw, "text", str, where),
            raw.get("source", "visual"),
            cands,
            frames,
        ))
    return Timeline(str(data.get("video_id", "")), tuple(segs))


def parse_timeline(document: bytes | str) -> Timeline:
    return timeline_from_dict(_load_json(document))


# ---------------------------------------------------------------------- SRT


def format_srt_time(ms: int) -> str:
    h, rem = divmod(ms, 3_600_000)
    m, rem = divmod(rem, 60_000)
    s, ms = divmod(rem, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{ms:03d}"


def write_srt(timeline: Timeline) -> bytes:
    cues = []
    for i, seg in enumerate(timeline.segments, 1):
        text = "\n".join(seg.text.splitlines()) or seg.text
        cues.append(f"{i}\n{format_srt_time(seg.start_ms)} --> {format_srt_time(seg.end_ms)}\n{text}\n\n")
    return "".join(cues).encode("utf-8")


def ocr_video_to_dict(video: OcrVideo) -> dict:
    d: dict[str, Any] = {"video_id": video.video_id, "frames": []}
    if video.frame_width is not None:
        d["frame_width"] = video.frame_width
    if video.frame_height is not None:
        d["frame_height"] = video.frame_height
    for fr in video.frames:
        d["frames"].append({
            "frame_index": fr.frame_index,
            "time_ms": fr.time_ms,
            "detections": [
                {"quad": [list(p) for p in det.quad.points], "text": det.text, "conf": det.conf}
                for det in fr.detections
            ],
        })
    return d


def asr_to_dict(video_id: str, segments: Sequence[AsrSegment]) -> dict:
    return {
        "video_id": video_id,
        "segments": [
            {"start_ms": s.start_ms, "end_ms": s.end_ms, "text": s.text, "conf": s.conf}
            for s in segments
        ],
    }

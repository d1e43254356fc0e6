"""Character error rate over subtitle timelines."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .model import Timeline
from .textsim import edit_distance


def cer(ref: str, hyp: str) -> float:
    ref, hyp = ref.strip(), hyp.strip()
    if not ref:
        raise ValueError("reference is empty")
    return edit_distance(ref, hyp) / len(ref)


@dataclass(frozen=True)
class VideoScore:
    video_id: str
    edits: int
    ref_chars: int
    cer: float


@dataclass(frozen=True)
class EvalReport:
    per_video: tuple[VideoScore, ...]
    aggregate_cer: float
    mode: str = "pooled"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "aggregate_cer": self.aggregate_cer,
            "per_video": [
                {"video_id": v.video_id, "edits": v.edits, "ref_chars": v.ref_chars, "cer": v.cer}
                for v in self.per_video
            ],
        }

    def table(self) -> str:
        total = f"ALL ({self.mode})"
        width = max([len("video_id"), len(total)] + [len(v.video_id) for v in self.per_video])
        rows = [f"{'video_id':<{width}}  {'edits':>7}  {'ref':>7}  {'cer':>8}"]
        for v in self.per_video:
            rows.append(f"{v.video_id:<{width}}  {v.edits:>7}  {v.ref_chars:>7}  {v.cer:>8.4f}")
        rows.append(f"{total:<{width}}  "
                    f"{sum(v.edits for v in self.per_video):>7}  "
                    f"{sum(v.ref_chars for v in self.per_video):>7}  {self.aggregate_cer:>8.4f}")
        return "\n".join(rows) + "\n"


def timeline_text(tl: Timeline) -> str:
    # sorted() is stable: equal starts keep timeline order
    return "".join(s.text for s in sorted(tl.segments, key=lambda s: s.start_ms)).strip()


def eval_timelines(refs: Mapping[str, Timeline], hyps: Mapping[str, Timeline],
                   macro: bool = False) -> EvalReport:
    unknown = sorted(set(hyps) - set(refs))
    if unknown:
        raise KeyError(f"hypothesis video_id not in references: {unknown[0]}")
    scores = []
    for vid in sorted(refs):
        ref = timeline_text(refs[vid])
        if not ref:
            raise ValueError(f"reference for video {vid!r} is empty")
        hyp = timeline_text(hyps[vid]) if vid in hyps else ""
        edits = edit_distance(ref, hyp)
        scores.append(VideoScore(vid, edits, len(ref), edits / len(ref)))
    if not scores:
        agg = 0.0
    elif macro:
        agg = sum(s.cer for s in scores) / len(scores)
    else:
        agg = sum(s.edits for s in scores) / sum(s.ref_chars for s in scores)
    return EvalReport(tuple(scores), agg, "macro" if macro else "pooled")

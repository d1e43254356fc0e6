"""Result-level fusion of the visual timeline with ASR segments.

Stage order: split over-merged segments, pick the best candidate text, drop
segments the audio contradicts, then pad subtitles only the audio heard.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .lm import DualLm, DualLmConfig, NGramModel
from .model import (AsrSegment, Candidate, SubtitleSegment, Timeline,
                    normalize_segments)
from .textsim import (best_window_match, char_similarity, default_syllable_table,
                      lcs_length, syllable_similarity, window_text)


@dataclass(frozen=True)
class FusionConfig:
    theta_same: float = 0.8
    theta_split: float = 0.6
    theta_remove: float = 0.3
    theta_pad: float = 0.5
    w_char: float = 0.4
    w_syl: float = 0.4
    w_lm: float = 0.2
    overlap_slack_ms: int = 500
    # when set, a low-similarity segment survives removal if its LM score reaches this floor
    remove_lm_floor: float | None = None

    def __post_init__(self):
        for name in ("theta_same", "theta_split", "theta_remove", "theta_pad"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        ws = (self.w_char, self.w_syl, self.w_lm)
        if min(ws) < 0 or abs(sum(ws) - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        if self.overlap_slack_ms < 0:
            raise ValueError("overlap_slack_ms must be >= 0")


def asr_context(asr: Sequence[AsrSegment], seg: SubtitleSegment, slack_ms: int = 500) -> str:
    lo, hi = seg.start_ms - slack_ms, seg.end_ms + slack_ms
    hits = [a for a in asr if a.start_ms <= hi and a.end_ms >= lo]
    hits.sort(key=lambda a: (a.start_ms, a.end_ms))
    return "".join(a.text for a in hits)


# ------------------------------------------------------------------ splitter


def _clusters(cands: Sequence[Candidate], theta_same: float) -> list[list[int]]:
    parent = list(range(len(cands)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(cands)):
        for j in range(i + 1, len(cands)):
            if char_similarity(cands[i].text, cands[j].text) >= theta_same:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(len(cands)):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups)]


def _representative(cands: Sequence[Candidate], members: Sequence[int]) -> int:
    return min(members, key=lambda i: (-cands[i].support, -cands[i].mean_conf, i))


def _segment_frames(labels: Sequence[int], k: int) -> list[int]:
    """Start indices of ``k`` contiguous runs minimizing label mismatches.

    Run ``r`` is meant to hold label ``r``; returns ``k`` start positions
    (the first is always 0).
    """
    n = len(labels)
    inf = float("inf")
    # cost[r][i]: best mismatches covering frames[:i] with runs 0..r-1
    cost = [[inf] * (n + 1) for _ in range(k + 1)]
    back = [[0] * (n + 1) for _ in range(k + 1)]
    cost[0][0] = 0
    for r in range(1, k + 1):
        for i in range(r, n - (k - r) + 1):
            # run r-1 covers frames[j:i]; extend from the best split j
            best, arg = inf, 0
            miss = 0
            for j in range(i - 1, r - 2, -1):
                miss += labels[j] != r - 1
                c = cost[r - 1][j] + miss
                if c <= best:
                    best, arg = c, j
            cost[r][i], back[r][i] = best, arg
    starts = []
    i = n
    for r in range(k, 0, -1):
        i = back[r][i]
        starts.append(i)
    return starts[::-1]


def _distinct_anchors(survivors, cands, groups, context):
    """Fold clusters that anchor on the same stretch of ASR text into one.

    Noisy OCR variants of one subtitle form their own clusters but all match
    the same context window; only clusters with disjoint-enough windows are
    distinct subtitles. Returns ``(start, group, rep)`` triples.
    """
    def weight(s):
        start, gi, rep, score = s
        return (-score, -sum(cands[i].support for i in groups[gi]), gi)

    kept: list[tuple[int, int, int, int]] = []  # start, end, gi, rep
    for start, gi, rep, _ in sorted(survivors, key=weight):
        end = min(start + len(cands[rep].text), len(context))
        clash = False
        for ks, ke, _, _ in kept:
            inter = min(end, ke) - max(start, ks)
            if inter > 0 and 2 * inter > min(end - start, ke - ks):
                clash = True
                break
        if not clash:
            kept.append((start, end, gi, rep))
    return [(start, gi, rep) for start, _, gi, rep in kept]


def split_merged(seg: SubtitleSegment, context: str, cfg: FusionConfig | None = None
                 ) -> list[SubtitleSegment]:
    cfg = cfg or FusionConfig()
    cands = seg.candidates
    if len(cands) < 2:
        return [seg]
    groups = _clusters(cands, cfg.theta_same)
    if len(groups) <= 1:
        return [seg]
    survivors = []
    for gi, members in enumerate(groups):
        rep = _representative(cands, members)
        start, score = best_window_match(cands[rep].text, context) if context else (0, 0.0)
        if score >= cfg.theta_split:
            survivors.append((start, gi, rep, score))
    survivors = _distinct_anchors(survivors, cands, groups, context)
    if len(survivors) < 2:
        return [seg]
    survivors.sort()
    k = len(survivors)
    cluster_of_text = {cands[i].text: gi for gi, ms in enumerate(groups) for i in ms}
    pos_of_cluster = {gi: p for p, (_, gi, _) in enumerate(survivors)}
    reps = [cands[rep].text for _, _, rep in survivors]

    bounds: list[int]
    frames = sorted(seg.frames)
    if len(frames) >= k:
        labels = []
        for _, text in frames:
            gi = cluster_of_text.get(text)
            if gi in pos_of_cluster:
                labels.append(pos_of_cluster[gi])
            else:
                sims = [char_similarity(text, r) for r in reps]
                labels.append(sims.index(max(sims)))
        starts = _segment_frames(labels, k)
        bounds = [seg.start_ms] + [frames[s][0] for s in starts[1:]] + [seg.end_ms]
    else:
        support = [sum(cands[i].support for i in groups[gi]) for _, gi, _ in survivors]
        total = sum(support)
        dur = seg.end_ms - seg.start_ms
        acc, bounds = 0, [seg.start_ms]
        for s in support[:-1]:
            acc += s
            bounds.append(seg.start_ms + round(dur * acc / total))
        bounds.append(seg.end_ms)
    # keep boundaries monotone and inside the parent span
    for i in range(1, len(bounds)):
        bounds[i] = min(max(bounds[i], bounds[i - 1]), seg.end_ms)

    out = []
    for p, (_, gi, rep) in enumerate(survivors):
        lo, hi = bounds[p], bounds[p + 1]
        child_frames = tuple(f for f in frames if lo <= f[0] < hi or (p == k - 1 and f[0] == hi))
        out.append(SubtitleSegment(
            lo, hi, cands[rep].text, "fused",
            tuple(cands[i] for i in groups[gi]), child_frames))
    return out


# -------------------------------------------------------------------- filter


def _lm_scorer(universal: NGramModel | None, domain: NGramModel | None,
               lm_config: DualLmConfig | None):
    if universal is None and domain is None:
        return None
    u = universal or domain
    d = domain or universal
    return DualLm(u, d, lm_config or DualLmConfig()).score


def select_candidate(seg: SubtitleSegment, context: str, universal_lm: NGramModel | None = None,
                     domain_lm: NGramModel | None = None, cfg: FusionConfig | None = None,
                     syllables: Mapping[str, str] | None = None,
                     lm_config: DualLmConfig | None = None) -> SubtitleSegment:
    cfg = cfg or FusionConfig()
    cands = seg.candidates
    if len(cands) <= 1:
        return seg
    table = default_syllable_table() if syllables is None else syllables
    lm = _lm_scorer(universal_lm, domain_lm, lm_config)
    lm_raw = [lm(c.text) if lm and c.text.strip() else 0.0 for c in cands]
    lo, hi = min(lm_raw), max(lm_raw)
    lm_norm = [1.0 if hi == lo else (x - lo) / (hi - lo) for x in lm_raw]
    scored = []
    for i, c in enumerate(cands):
        win = window_text(c.text, context) if c.text else context
        s = (cfg.w_char * char_similarity(c.text, win)
             + cfg.w_syl * syllable_similarity(c.text, win, table)
             + cfg.w_lm * lm_norm[i])
        scored.append((-s, -c.support, -c.mean_conf, c.text, i))
    best = cands[min(scored)[-1]]
    if best.text == seg.text:
        return seg
    return replace(seg, text=best.text, source="fused")


# ------------------------------------------------------------------- remover


def context_similarity(text: str, context: str, syllables: Mapping[str, str]) -> float:
    win = window_text(text, context) if text else context
    return max(char_similarity(text, win), syllable_similarity(text, win, syllables))


def remove_nonsubtitles(timeline: Timeline, asr: Sequence[AsrSegment],
                        cfg: FusionConfig | None = None,
                        syllables: Mapping[str, str] | None = None,
                        lm=None) -> Timeline:
    return Timeline(timeline.video_id,
                    tuple(_remove(list(timeline.segments), asr, cfg or FusionConfig(),
                                  syllables, lm)[0]))


def _remove(segments, asr, cfg, syllables, lm):
    table = default_syllable_table() if syllables is None else syllables
    kept, removed = [], []
    for seg in segments:
        ctx = asr_context(asr, seg, cfg.overlap_slack_ms)
        if ctx and context_similarity(seg.text, ctx, table) < cfg.theta_remove:
            rescued = (cfg.remove_lm_floor is not None and lm is not None and seg.text.strip()
                       and lm(seg.text) >= cfg.remove_lm_floor)
            if not rescued:
                removed.append(seg)
                continue
        kept.append(seg)
    return kept, removed


# -------------------------------------------------------------------- padder


def containment(asr_text: str, subtitle: str) -> float:
    """Share of the ASR text found, in order, inside the subtitle."""
    return lcs_length(asr_text, subtitle) / len(asr_text) if asr_text else 0.0


def pad_missing(asr: Sequence[AsrSegment], visual: Timeline | Sequence[SubtitleSegment],
                cfg: FusionConfig | None = None) -> list[SubtitleSegment]:
    cfg = cfg or FusionConfig()
    segs = visual.segments if isinstance(visual, Timeline) else visual
    segs = sorted(segs, key=lambda s: s.start_ms)
    slack = cfg.overlap_slack_ms
    pads = []
    for a in asr:
        covered = any(s.start_ms - slack <= a.end_ms and s.end_ms + slack >= a.start_ms
                      for s in segs)
        if covered:
            continue
        nxt = next((s for s in segs if s.start_ms >= a.start_ms), None)
        if nxt is not None and containment(a.text, nxt.text) >= cfg.theta_pad:
            continue
        conf = 1.0 if a.conf is None else a.conf
        pads.append(SubtitleSegment(a.start_ms, a.end_ms, a.text, "audio_pad",
                                    (Candidate(a.text, 1, conf),)))
    return pads


# ---------------------------------------------------------------------- fuse


@dataclass
class FusionAudit:
    video_id: str
    input_count: int = 0
    post_split_count: int = 0
    split_added: int = 0
    replaced: list[dict] = field(default_factory=list)
    removed: list[dict] = field(default_factory=list)
    padded: list[dict] = field(default_factory=list)
    output_count: int = 0

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "input_count": self.input_count,
            "post_split_count": self.post_split_count,
            "split_added": self.split_added,
            "replaced_count": len(self.replaced),
            "removed_count": len(self.removed),
            "padded_count": len(self.padded),
            "output_count": self.output_count,
            "replaced": self.replaced,
            "removed": self.removed,
            "padded": self.padded,
        }


def _brief(seg: SubtitleSegment) -> dict:
    return {"start_ms": seg.start_ms, "end_ms": seg.end_ms, "text": seg.text}


def fuse(visual: Timeline, asr: Sequence[AsrSegment], universal_lm: NGramModel | None = None,
         domain_lm: NGramModel | None = None, cfg: FusionConfig | None = None,
         syllables: Mapping[str, str] | None = None,
         lm_config: DualLmConfig | None = None) -> tuple[Timeline, FusionAudit]:
    cfg = cfg or FusionConfig()
    table = default_syllable_table() if syllables is None else syllables
    asr = sorted(asr, key=lambda a: (a.start_ms, a.end_ms))
    audit = FusionAudit(visual.video_id, input_count=len(visual.segments))
    slack = cfg.overlap_slack_ms

    split: list[SubtitleSegment] = []
    for seg in visual.segments:
        split.extend(split_merged(seg, asr_context(asr, seg, slack), cfg))
    audit.post_split_count = len(split)
    audit.split_added = len(split) - len(visual.segments)

    selected = []
    for seg in split:
        new = select_candidate(seg, asr_context(asr, seg, slack), universal_lm, domain_lm,
                               cfg, table, lm_config)
        if new.text != seg.text:
            audit.replaced.append({**_brief(seg), "new_text": new.text})
        selected.append(new)

    lm = _lm_scorer(universal_lm, domain_lm, lm_config)
    kept, removed = _remove(selected, asr, cfg, table, lm)
    audit.removed = [_brief(s) for s in removed]

    pads = pad_missing(asr, kept, cfg)
    audit.padded = [_brief(s) for s in pads]
    segments = normalize_segments(kept + pads)
    audit.output_count = len(segments)
    return Timeline(visual.video_id, tuple(segments)), audit

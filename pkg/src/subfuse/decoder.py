"""CTC prefix beam search with dual-LM shallow fusion and n-best rescoring."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .lm import DualLm, NGramModel, score_text
from .model import ParseError, ValidationError

NEG_INF = -math.inf
BLANK = 0


def logaddexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@dataclass(frozen=True)
class EmissionMatrix:
    log_probs: np.ndarray  # T x V natural-log probabilities, column 0 is blank
    tokens: tuple[str, ...]

    def __post_init__(self):
        lp = np.asarray(self.log_probs, dtype=np.float64)
        if lp.ndim != 2:
            raise ValidationError("emission matrix must be 2-D")
        T, V = lp.shape
        if T < 1 or V < 2:
            raise ValidationError("emission matrix needs T >= 1 and V >= 2")
        if len(self.tokens) != V:
            raise ValidationError(f"token table has {len(self.tokens)} entries for V={V}")
        if np.any(np.isnan(lp)) or np.any(lp > 0):
            raise ValidationError("log probabilities must be <= 0")
        with np.errstate(divide="ignore"):
            norms = np.logaddexp.reduce(lp, axis=1)
        bad = np.flatnonzero(np.abs(norms) > 1e-6)
        if bad.size:
            raise ValidationError(f"frame {int(bad[0])} is not a normalized distribution")
        object.__setattr__(self, "log_probs", lp)
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def T(self) -> int:
        return self.log_probs.shape[0]

    @property
    def V(self) -> int:
        return self.log_probs.shape[1]


def parse_emissions(document: bytes | str) -> EmissionMatrix:
    try:
        data = json.loads(document)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON at offset {e.pos}: {e.msg}") from e
    if not isinstance(data, dict) or "tokens" not in data or "log_probs" not in data:
        raise ValidationError("emission file needs 'tokens' and 'log_probs'")
    try:
        lp = np.array(data["log_probs"], dtype=np.float64)
    except ValueError as e:
        raise ValidationError(f"log_probs is not a rectangular numeric matrix: {e}") from e
    return EmissionMatrix(lp, tuple(str(t) for t in data["tokens"]))


@dataclass(frozen=True)
class Hypothesis:
    labels: tuple[int, ...]
    log_prob: float  # exact CTC log probability of the labeling (given the beam)
    lm_score: float | None = None  # summed log10 LM score, unweighted
    score: float = 0.0  # fused search score

    def text(self, tokens: Sequence[str]) -> str:
        return "".join(tokens[i] for i in self.labels)


def ctc_collapse(path: Sequence[int], vocab_size: int | None = None) -> tuple[int, ...]:
    out = []
    prev = None
    for k in path:
        if k < 0 or (vocab_size is not None and k >= vocab_size):
            raise ValueError(f"token index {k} out of range")
        if k != prev and k != BLANK:
            out.append(k)
        prev = k
    return tuple(out)


def prefix_beam_search(em: EmissionMatrix, beam_width: int = 10, lms: DualLm | None = None,
                       lm_weight: float = 0.3, n_best: int = 10) -> list[Hypothesis]:
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    if n_best < 1:
        raise ValueError("n_best must be >= 1")
    lp = em.log_probs.tolist()
    tokens = em.tokens
    V = em.V
    lm_cache: dict[tuple[int, ...], float] = {(): 0.0}

    def lm_total(prefix: tuple[int, ...]) -> float:
        got = lm_cache.get(prefix)
        if got is None:
            hist = list("".join(tokens[i] for i in prefix[:-1]))
            got = lm_total(prefix[:-1])
            for ch in tokens[prefix[-1]]:
                if not ch.isspace():
                    got += lms.token_logprob(hist, ch)
                    hist.append(ch)
            lm_cache[prefix] = got
        return got

    def fused(prefix, pb, pnb) -> float:
        s = logaddexp(pb, pnb)
        if lms is not None and prefix:
            s += lm_weight * lm_total(prefix)
        return s

    # prefix -> [log P(ending in blank), log P(ending in non-blank)]
    beam: dict[tuple[int, ...], list[float]] = {(): [0.0, NEG_INF]}
    for t in range(em.T):
        row = lp[t]
        nxt: dict[tuple[int, ...], list[float]] = {}

        def slot(p):
            s = nxt.get(p)
            if s is None:
                s = nxt[p] = [NEG_INF, NEG_INF]
            return s

        for prefix, (pb, pnb) in beam.items():
            total = logaddexp(pb, pnb)
            s = slot(prefix)
            s[0] = logaddexp(s[0], total + row[BLANK])
            last = prefix[-1] if prefix else None
            if last is not None:
                s[1] = logaddexp(s[1], pnb + row[last])
            for c in range(1, V):
                ext = prefix + (c,)
                e = slot(ext)
                if c == last:
                    e[1] = logaddexp(e[1], pb + row[c])
                else:
                    e[1] = logaddexp(e[1], total + row[c])
        ranked = sorted(nxt.items(), key=lambda kv: (-fused(kv[0], *kv[1]), kv[0]))
        beam = dict(ranked[:beam_width])

    hyps = []
    for prefix, (pb, pnb) in beam.items():
        if pb == NEG_INF and pnb == NEG_INF:
            continue  # unreachable labeling
        lm = lm_total(prefix) if lms is not None else None
        hyps.append(Hypothesis(prefix, logaddexp(pb, pnb), lm, fused(prefix, pb, pnb)))
    hyps.sort(key=lambda h: (-h.score, h.labels))
    return hyps[:n_best]


Rescorer = Callable[[Sequence[int]], float]


def lm_rescorer(model: NGramModel, tokens: Sequence[str]) -> Rescorer:
    """Default rescorer: mean log10 domain-LM score of the decoded text."""
    def rescore(labels: Sequence[int]) -> float:
        text = "".join(tokens[i] for i in labels)
        if not text.strip():
            return model.floor_logprob
        return score_text(model, text)
    return rescore


def rescore_nbest(hyps: Sequence[Hypothesis], rescorer: Rescorer,
                  rescore_weight: float = 0.5) -> list[Hypothesis]:
    if not hyps:
        raise ValueError("nothing to rescore")
    scored = [(h.log_prob + rescore_weight * rescorer(h.labels), h) for h in hyps]
    # sorted() is stable, so equal final scores keep the incoming order
    return [h for _, h in sorted(scored, key=lambda sh: -sh[0])]


def hypotheses_to_dict(hyps: Sequence[Hypothesis], tokens: Sequence[str]) -> list[dict]:
    return [
        {"labels": list(h.labels), "text": h.text(tokens), "log_prob": h.log_prob,
         "lm_score": h.lm_score, "score": h.score}
        for h in hyps
    ]

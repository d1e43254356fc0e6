"""Character n-gram language model with stupid-backoff scoring."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .model import ParseError

DEFAULT_ALPHA = 0.4


def tokenize(text: str) -> list[str]:
    return [ch for ch in text if not ch.isspace()]


@dataclass(frozen=True)
class NGramModel:
    order: int
    # n-gram tuple -> log10 P(last token | preceding tokens), maximum likelihood
    logprobs: dict[tuple[str, ...], float] = field(repr=False)
    backoff_alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not 0.0 < self.backoff_alpha <= 1.0:
            raise ValueError("backoff_alpha must be in (0, 1]")

    @cached_property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(k[0] for k in self.logprobs if len(k) == 1)

    @cached_property
    def floor_logprob(self) -> float:
        return math.log10(self.backoff_alpha / (len(self.vocabulary) + 1))

    def token_logprob(self, history: Sequence[str], token: str) -> float:
        """Stupid-backoff log10 score of ``token`` after ``history``."""
        k = min(self.order - 1, len(history))
        ctx = tuple(history[len(history) - k:]) if k else ()
        penalty = 0.0
        log_alpha = math.log10(self.backoff_alpha)
        while True:
            lp = self.logprobs.get(ctx + (token,))
            if lp is not None:
                return penalty + lp
            penalty += log_alpha
            if not ctx:
                # unseen unigram: alpha / (V + 1), on top of the backoffs so far
                return penalty - log_alpha + self.floor_logprob
            ctx = ctx[1:]

    def token_logprobs(self, text: str) -> list[float]:
        toks = tokenize(text)
        return [self.token_logprob(toks[:i], t) for i, t in enumerate(toks)]


def train_lm(lines: Iterable[str], order: int = 4, backoff_alpha: float = DEFAULT_ALPHA) -> NGramModel:
    if order < 1:
        raise ValueError("order must be >= 1")
    counts: Counter = Counter()
    for line in lines:
        toks = tokenize(line)
        for n in range(1, order + 1):
            for i in range(len(toks) - n + 1):
                counts[tuple(toks[i:i + n])] += 1
    if not counts:
        raise ValueError("cannot train a language model on an empty corpus")
    # context totals: how often each prefix is followed by some token
    ctx_total: Counter = Counter()
    for gram, c in counts.items():
        ctx_total[gram[:-1]] += c
    logprobs = {gram: math.log10(c / ctx_total[gram[:-1]]) for gram, c in counts.items()}
    return NGramModel(order, logprobs, backoff_alpha)


def score_text(model: NGramModel, text: str) -> float:
    """Mean log10 probability per token."""
    lps = model.token_logprobs(text)
    if not lps:
        raise ValueError("cannot score empty text")
    return sum(lps) / len(lps)


@dataclass(frozen=True)
class DualLmConfig:
    lambda_domain: float = 0.5
    mode: str = "linear"  # or "loglinear"

    def __post_init__(self):
        if not 0.0 <= self.lambda_domain <= 1.0:
            raise ValueError("lambda_domain must be in [0, 1]")
        if self.mode not in ("linear", "loglinear"):
            raise ValueError(f"unknown interpolation mode {self.mode!r}")


@dataclass(frozen=True)
class DualLm:
    universal: NGramModel
    domain: NGramModel
    config: DualLmConfig = DualLmConfig()

    def token_logprob(self, history: Sequence[str], token: str) -> float:
        lam = self.config.lambda_domain
        lu = self.universal.token_logprob(history, token)
        ld = self.domain.token_logprob(history, token)
        if self.config.mode == "loglinear":
            return (1 - lam) * lu + lam * ld
        if lam == 0.0:
            return lu
        if lam == 1.0:
            return ld
        return math.log10((1 - lam) * 10.0 ** lu + lam * 10.0 ** ld)

    def score(self, text: str) -> float:
        toks = tokenize(text)
        if not toks:
            raise ValueError("cannot score empty text")
        return sum(self.token_logprob(toks[:i], t) for i, t in enumerate(toks)) / len(toks)


def dual_score(universal: NGramModel, domain: NGramModel, config: DualLmConfig | None,
               text: str) -> float:
    return DualLm(universal, domain, config or DualLmConfig()).score(text)


# --------------------------------------------------------------------- ARPA


def write_arpa(model: NGramModel) -> bytes:
    if not model.logprobs:
        raise ValueError("refusing to write an empty model")
    by_order: dict[int, list] = {n: [] for n in range(1, model.order + 1)}
    for gram, lp in model.logprobs.items():
        by_order[len(gram)].append((gram, lp))
    bow = repr(math.log10(model.backoff_alpha))
    lines = ["\\data\\"]
    lines += [f"ngram {n}={len(by_order[n])}" for n in range(1, model.order + 1)]
    for n in range(1, model.order + 1):
        lines += ["", f"\\{n}-grams:"]
        with_bow = n < model.order or model.order == 1
        for gram, lp in sorted(by_order[n]):
            row = f"{lp!r}\t{' '.join(gram)}"
            lines.append(row + f"\t{bow}" if with_bow else row)
    lines += ["", "\\end\\", ""]
    return "\n".join(lines).encode("utf-8")


def read_arpa(document: bytes | str) -> NGramModel:
    text = document.decode("utf-8") if isinstance(document, bytes) else document
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].strip() != "\\data\\":
        i += 1
    if i == len(lines):
        raise ParseError("line 1: missing \\data\\ header")
    i += 1
    declared: dict[int, int] = {}
    while i < len(lines) and lines[i].strip().startswith("ngram "):
        try:
            k, v = lines[i].strip()[6:].split("=")
            declared[int(k)] = int(v)
        except ValueError:
            raise ParseError(f"line {i + 1}: malformed ngram count") from None
        i += 1
    if not declared:
        raise ParseError(f"line {i + 1}: no ngram counts in header")
    order = max(declared)
    logprobs: dict[tuple[str, ...], float] = {}
    alpha = None
    current = None
    seen_end = False
    for j in range(i, len(lines)):
        line = lines[j].strip()
        if not line:
            continue
        if line == "\\end\\":
            seen_end = True
            break
        if line.startswith("\\") and line.endswith("-grams:"):
            try:
                current = int(line[1:-7])
            except ValueError:
                raise ParseError(f"line {j + 1}: malformed section header") from None
            if current not in declared:
                raise ParseError(f"line {j + 1}: undeclared section {current}-grams")
            continue
        if current is None:
            raise ParseError(f"line {j + 1}: entry outside any n-gram section")
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise ParseError(f"line {j + 1}: expected 'logprob<TAB>tokens[<TAB>backoff]'")
        try:
            lp = float(parts[0])
            gram = tuple(parts[1].split(" "))
            if len(parts) == 3 and alpha is None:
                alpha = 10.0 ** float(parts[2])
        except ValueError:
            raise ParseError(f"line {j + 1}: malformed number") from None
        if len(gram) != current:
            raise ParseError(f"line {j + 1}: {len(gram)} tokens in {current}-gram section")
        logprobs[gram] = lp
    if not seen_end:
        raise ParseError(f"line {len(lines)}: missing \\end\\ marker")
    for n, c in declared.items():
        got = sum(1 for g in logprobs if len(g) == n)
        if got != c:
            raise ParseError(f"header declares {c} {n}-grams but {got} were read")
    if not logprobs:
        raise ParseError("ARPA model is empty")
    return NGramModel(order, logprobs, DEFAULT_ALPHA if alpha is None else alpha)

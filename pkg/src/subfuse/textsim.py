"""String DP kernels at character and syllable level.

All similarities are Dice-over-LCS: ``2 * lcs(a, b) / (len(a) + len(b))``.
"""
from __future__ import annotations

from array import array
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

from . import kernels

SyllableTable = Mapping[str, str]


def _codes(s: str) -> array:
    return array("q", map(ord, s))


_token_ids: dict[str, int] = {}


def _token_codes(tokens: Sequence) -> array:
    if isinstance(tokens, str):
        return _codes(tokens)
    ids = _token_ids
    out = array("q")
    for t in tokens:
        i = ids.get(t)
        if i is None:
            i = ids.setdefault(t, len(ids))
        out.append(i)
    return out


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance over code points with unit costs."""
    return kernels.edit_distance(_codes(a), _codes(b))


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Length of the longest common subsequence of two strings or token lists."""
    return kernels.lcs_length(_token_codes(a), _token_codes(b))


def _dice(lcs: int, n: int, m: int) -> float:
    if n + m == 0:
        return 1.0
    return 2.0 * lcs / (n + m)


def char_similarity(a: str, b: str) -> float:
    return _dice(kernels.lcs_length(_codes(a), _codes(b)), len(a), len(b))


def to_syllables(text: str, table: SyllableTable) -> list[str]:
    # unknown characters stand for themselves
    return [table.get(ch, ch) for ch in text]


def syllable_similarity(a: str, b: str, table: SyllableTable) -> float:
    sa, sb = to_syllables(a, table), to_syllables(b, table)
    return _dice(lcs_length(sa, sb), len(sa), len(sb))


def best_window_match(needle: str, haystack: str) -> tuple[int, float]:
    """Best ``(start, char_similarity)`` over windows of ``len(needle)``.

    Ties on similarity go to the window with the smaller edit distance, then
    to the smallest start.
    """
    if not needle:
        raise ValueError("needle must be non-empty")
    start, lcs, wlen = kernels.best_window(_codes(needle), _codes(haystack))
    if wlen == 0:
        return 0, 0.0
    return start, _dice(lcs, len(needle), wlen)


def window_text(needle: str, haystack: str) -> str:
    """The haystack region that ``best_window_match`` selects (whole haystack if empty)."""
    if not haystack or not needle:
        return haystack
    start, _ = best_window_match(needle, haystack)
    return haystack[start:start + len(needle)]


def parse_syllable_table(text: str) -> dict[str, str]:
    table: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or len(parts[0]) != 1 or not parts[1]:
            raise ValueError(f"syllable table line {lineno}: expected 'char<TAB>syllable'")
        syl = parts[1].strip()
        if not (syl.isascii() and syl.isalpha() and syl.islower()):
            raise ValueError(f"syllable table line {lineno}: syllable {syl!r} not lowercase ASCII")
        table[parts[0]] = syl
    return table


def load_syllable_table(path: str | Path | None = None) -> dict[str, str]:
    """Load a TSV syllable table; ``None`` loads the bundled table."""
    if path is None:
        return dict(default_syllable_table())
    return parse_syllable_table(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def default_syllable_table() -> Mapping[str, str]:
    text = resources.files("subfuse").joinpath("data/syllables.tsv").read_text(encoding="utf-8")
    return MappingProxyType(parse_syllable_table(text))

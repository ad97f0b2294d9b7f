"""Levenshtein distance, WER/CER and corpus-level evaluation reports.

Distances are computed over Unicode scalars (combining marks count
individually) with a two-row dynamic program; word error rates tokenize on
single spaces after collapsing whitespace runs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

_WS_RUN = re.compile(r"\s+")


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Unit-cost insert/delete/substitute distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance over Unicode scalars."""
    return edit_distance(a, b)


def alignment(a: Sequence, b: Sequence) -> list[tuple[str, int, int]]:
    """Debug mode: full-table traceback as (op, i, j) steps.

    op is one of match/sub/del/ins; i and j index into a and b.
    """
    n, m = len(a), len(b)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dist[i][j] = min(dist[i - 1][j] + 1, dist[i][j - 1] + 1, dist[i - 1][j - 1] + cost)
    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (0 if a[i - 1] == b[j - 1] else 1):
            ops.append(("match" if a[i - 1] == b[j - 1] else "sub", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append(("del", i - 1, j))
            i -= 1
        else:
            ops.append(("ins", i, j - 1))
            j -= 1
    ops.reverse()
    return ops


def _words(s: str) -> list[str]:
    return [w for w in _WS_RUN.sub(" ", s).strip().split(" ") if w]


def wer(ref: str, hyp: str) -> float:
    """Word-level edit distance over the reference word count."""
    ref_words = _words(ref)
    if not ref_words:
        raise ValueError("reference has no words; WER is undefined")
    return edit_distance(ref_words, _words(hyp)) / len(ref_words)


def cer(ref: str, hyp: str) -> float:
    """Character-level edit distance over the reference character count."""
    if not ref:
        raise ValueError("empty reference; CER is undefined")
    return edit_distance(ref, hyp) / len(ref)


@dataclass(frozen=True)
class UtteranceScore:
    clip_id: str
    levenshtein: int
    wer: float
    cer: float


@dataclass(frozen=True)
class EvalReport:
    """Per-utterance scores plus micro-averaged corpus aggregates."""

    per_utterance: tuple[UtteranceScore, ...]
    mean_levenshtein: float
    corpus_wer: float
    corpus_cer: float

    def summary_line(self) -> str:
        return (
            f"mean_lev={self.mean_levenshtein:.6f} "
            f"wer={self.corpus_wer:.6f} cer={self.corpus_cer:.6f}"
        )

    def to_tsv(self) -> str:
        lines = ["clip_id\tlevenshtein\twer\tcer"]
        for u in self.per_utterance:
            lines.append(f"{u.clip_id}\t{u.levenshtein}\t{u.wer:.6f}\t{u.cer:.6f}")
        return "\n".join(lines) + "\n"


def evaluate_corpus(pairs: list[tuple[str, str, str]]) -> EvalReport:
    """Score (clip_id, ref, hyp) triples; aggregates are micro-averaged.

    corpus_wer = total word edits / total reference words, and likewise for
    corpus_cer over characters.
    """
    if not pairs:
        raise ValueError("no utterances to evaluate")
    seen = set()
    scores = []
    word_edits = word_count = char_edits = char_count = lev_total = 0
    for clip_id, ref, hyp in pairs:
        if clip_id in seen:
            raise ValueError(f"duplicate clip_id {clip_id!r}")
        seen.add(clip_id)
        ref_words = _words(ref)
        if not ref_words:
            raise ValueError(f"clip {clip_id!r}: empty reference")
        lev = levenshtein(ref, hyp)
        w_edits = edit_distance(ref_words, _words(hyp))
        scores.append(
            UtteranceScore(
                clip_id=clip_id,
                levenshtein=lev,
                wer=w_edits / len(ref_words),
                cer=lev / len(ref),
            )
        )
        lev_total += lev
        word_edits += w_edits
        word_count += len(ref_words)
        char_edits += lev
        char_count += len(ref)
    return EvalReport(
        per_utterance=tuple(scores),
        mean_levenshtein=lev_total / len(scores),
        corpus_wer=word_edits / word_count,
        corpus_cer=char_edits / char_count,
    )

"""CTC prefix beam search with word-level n-gram shallow fusion.

Hypotheses are collapsed prefixes; each carries separate log-probabilities
for paths ending in blank vs. non-blank, so prefixes reached along many
frame paths merge exactly.  The language model contributes
alpha * ln(10) * log10 P(word | history) plus a flat per-word bonus beta
whenever a word completes (a delimiter is emitted, or decoding ends on a
partial word); end of decoding also charges P(</s> | history).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Vocabulary
from .ctc import collapse, log_softmax_rows
from .lm import EOS, ArpaModel, ngram_logprob

LN10 = math.log(10.0)
NEG_INF = -np.inf


@dataclass(frozen=True)
class DecoderConfig:
    beam_width: int = 32
    alpha: float = 0.5
    beta: float = 1.0
    blank_id: int = 0
    word_delim_id: int = 1

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be at least 1")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


@dataclass
class Hypothesis:
    """One beam entry: a collapsed prefix with its path-probability split."""

    prefix: tuple[int, ...]
    logp_blank: float
    logp_nonblank: float
    lm_accum: float  # completed-word LM mass (natural log) + beta bonuses
    word_history: tuple[str, ...]
    partial: tuple[int, ...]  # ids of the in-progress word

    @property
    def logp_total(self) -> float:
        return float(np.logaddexp(self.logp_blank, self.logp_nonblank))


def _word_of(ids: tuple[int, ...], id_to_char: dict[int, str]) -> str:
    return "".join(id_to_char[i] for i in ids)


class _Fusion:
    """Incremental LM bookkeeping for a prefix; inert when lm is None."""

    def __init__(self, lm: ArpaModel | None, cfg: DecoderConfig, id_to_char: dict[int, str]):
        self.lm = lm
        self.cfg = cfg
        self.id_to_char = id_to_char
        self.max_history = (lm.order - 1) if lm is not None else 1

    def start(self) -> tuple[float, tuple[str, ...], tuple[int, ...]]:
        return 0.0, (), ()

    def extend(
        self, accum: float, history: tuple[str, ...], partial: tuple[int, ...], char_id: int
    ) -> tuple[float, tuple[str, ...], tuple[int, ...]]:
        if char_id != self.cfg.word_delim_id:
            return accum, history, partial + (char_id,)
        if not partial:  # delimiter with no word in progress: nothing completes
            return accum, history, ()
        return self._complete(accum, history, partial) + ((),)

    def _complete(
        self, accum: float, history: tuple[str, ...], partial: tuple[int, ...]
    ) -> tuple[float, tuple[str, ...]]:
        word = _word_of(partial, self.id_to_char)
        accum += self.cfg.beta
        if self.lm is not None:
            accum += self.cfg.alpha * LN10 * ngram_logprob(self.lm, history, word)
        history = (history + (word,))[-self.max_history :]
        return accum, history

    def final_score(
        self, accum: float, history: tuple[str, ...], partial: tuple[int, ...]
    ) -> float:
        if partial:
            accum, history = self._complete(accum, history, partial)
        if self.lm is not None:
            accum += self.cfg.alpha * LN10 * ngram_logprob(self.lm, history, EOS)
        return accum


def beam_decode_nbest(
    m: np.ndarray,
    v: Vocabulary,
    lm: ArpaModel | None,
    cfg: DecoderConfig,
    n: int | None = None,
) -> list[tuple[list[int], float]]:
    """Final beam after T frames, best first; ties break on the smaller prefix."""
    logp = log_softmax_rows(m)
    T, V = logp.shape
    id_to_char = v.id_to_char
    fusion = _Fusion(lm, cfg, id_to_char)

    root = Hypothesis(
        prefix=(),
        logp_blank=0.0,
        logp_nonblank=NEG_INF,
        lm_accum=fusion.start()[0],
        word_history=(),
        partial=(),
    )
    beam: dict[tuple[int, ...], Hypothesis] = {(): root}

    for t in range(T):
        row = logp[t]
        next_beam: dict[tuple[int, ...], Hypothesis] = {}

        def bucket(parent: Hypothesis, char_id: int) -> Hypothesis:
            prefix = parent.prefix + (char_id,)
            hyp = next_beam.get(prefix)
            if hyp is None:
                accum, history, partial = fusion.extend(
                    parent.lm_accum, parent.word_history, parent.partial, char_id
                )
                hyp = Hypothesis(prefix, NEG_INF, NEG_INF, accum, history, partial)
                next_beam[prefix] = hyp
            return hyp

        for prefix in sorted(beam):
            hyp = beam[prefix]
            # blank keeps the prefix
            kept = next_beam.get(prefix)
            if kept is None:
                kept = Hypothesis(
                    prefix, NEG_INF, NEG_INF, hyp.lm_accum, hyp.word_history, hyp.partial
                )
                next_beam[prefix] = kept
            kept.logp_blank = np.logaddexp(kept.logp_blank, hyp.logp_total + row[cfg.blank_id])

            last = prefix[-1] if prefix else None
            for k in range(V):
                if k == cfg.blank_id:
                    continue
                p_k = row[k]
                if k == last:
                    # repeat without separator extends the same final symbol
                    kept.logp_nonblank = np.logaddexp(
                        kept.logp_nonblank, hyp.logp_nonblank + p_k
                    )
                    ext = bucket(hyp, k)
                    ext.logp_nonblank = np.logaddexp(ext.logp_nonblank, hyp.logp_blank + p_k)
                else:
                    ext = bucket(hyp, k)
                    ext.logp_nonblank = np.logaddexp(ext.logp_nonblank, hyp.logp_total + p_k)

        ranked = sorted(
            next_beam.values(), key=lambda h: (-(h.logp_total + h.lm_accum), h.prefix)
        )
        beam = {h.prefix: h for h in ranked[: cfg.beam_width]}

    scored = [
        (list(h.prefix), h.logp_total + fusion.final_score(h.lm_accum, h.word_history, h.partial))
        for h in beam.values()
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored if n is None else scored[:n]


def beam_decode(
    m: np.ndarray, v: Vocabulary, lm: ArpaModel | None, cfg: DecoderConfig
) -> tuple[list[int], float]:
    """Highest-scoring collapsed prefix and its total fused score."""
    return beam_decode_nbest(m, v, lm, cfg, n=1)[0]


def brute_force_best(
    m: np.ndarray, blank_id: int, max_len: int
) -> tuple[list[int], float]:
    """Exact CTC argmax by enumerating every frame path (test oracle).

    Sums linear-space path probabilities per collapsed label sequence,
    keeps sequences up to max_len, and breaks ties toward the
    lexicographically smaller sequence.
    """
    logp = log_softmax_rows(m)
    T, V = logp.shape
    if V**T > 10**7:
        raise ValueError(f"instance too large to enumerate: V^T = {V}^{T}")
    probs = np.exp(logp)
    mass: dict[tuple[int, ...], float] = {}
    for path in itertools.product(range(V), repeat=T):
        seq = tuple(collapse(list(path), blank_id))
        if len(seq) > max_len:
            continue
        p = 1.0
        for t, k in enumerate(path):
            p *= probs[t, k]
        mass[seq] = mass.get(seq, 0.0) + p
    best = min(mass.items(), key=lambda item: (-item[1], item[0]))
    return list(best[0]), float(np.log(best[1]))

"""Connectionist temporal classification: loss, gradient, greedy decoding.

All probability arithmetic runs in natural-log space.  A logit matrix is a
T x V numpy array of unnormalized per-frame scores; column blank_id is the
CTC blank.  The forward/backward tables are indexed by the blank-extended
label sequence [blank, y1, blank, y2, ..., yL, blank] of length S = 2L+1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

LOGITS_MAGIC = b"CTCL"
LOGITS_VERSION = 1

NEG_INF = -np.inf


def collapse(path: list[int], blank_id: int) -> list[int]:
    """CTC collapse: merge consecutive duplicates, then drop blanks."""
    out = []
    prev = None
    for p in path:
        if p != prev:
            out.append(p)
        prev = p
    return [p for p in out if p != blank_id]


def log_softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax with max subtraction; each row logsumexps to 0."""
    m = np.asarray(m, dtype=np.float64)
    shifted = m - m.max(axis=1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))


def min_frames(labels: list[int]) -> int:
    """Fewest frames that can emit `labels`: L plus one per adjacent repeat."""
    repeats = sum(1 for i in range(1, len(labels)) if labels[i] == labels[i - 1])
    return len(labels) + repeats


def _extended(labels: list[int], blank_id: int) -> np.ndarray:
    ext = np.empty(2 * len(labels) + 1, dtype=np.int64)
    ext[0::2] = blank_id
    ext[1::2] = labels
    return ext


@dataclass(frozen=True)
class CtcLoss:
    """Forward-pass result: the loss, its alpha table, and a feasibility flag.

    Infeasible instances (T below min_frames) report loss = +inf with
    feasible=False instead of raising, so training loops can skip them.
    """

    loss: float
    log_alpha: np.ndarray  # (2L+1, T)
    feasible: bool


def _validate(m: np.ndarray, labels: list[int], blank_id: int) -> None:
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 2:
        raise ValueError(f"logit matrix must be T>=1 by V>=2, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("logit matrix contains non-finite entries")
    for y in labels:
        if y == blank_id:
            raise ValueError("label sequence may not contain the blank id")
        if not 0 <= y < m.shape[1]:
            raise ValueError(f"label id {y} outside vocabulary of size {m.shape[1]}")


def ctc_loss(m: np.ndarray, labels: list[int], blank_id: int) -> CtcLoss:
    """-log P(labels | softmax(m)) summed over all collapsing paths.

    Forward recursion over the blank-extended sequence; alpha[s, t] is the
    log-probability of emitting the extension prefix through state s using
    frames 0..t.
    """
    m = np.asarray(m, dtype=np.float64)
    _validate(m, labels, blank_id)
    T = m.shape[0]
    ext = _extended(labels, blank_id)
    S = len(ext)
    if T < min_frames(labels):
        return CtcLoss(loss=np.inf, log_alpha=np.full((S, T), NEG_INF), feasible=False)

    logp = log_softmax_rows(m)
    alpha = np.full((S, T), NEG_INF)
    alpha[0, 0] = logp[0, ext[0]]
    if S > 1:
        alpha[1, 0] = logp[0, ext[1]]
    # ext[s] can hop from ext[s-2] when they differ and ext[s] is not blank
    can_skip = np.zeros(S, dtype=bool)
    can_skip[2:] = (ext[2:] != blank_id) & (ext[2:] != ext[:-2])
    for t in range(1, T):
        stay = alpha[:, t - 1]
        step = np.concatenate(([NEG_INF], alpha[:-1, t - 1]))
        acc = np.logaddexp(stay, step)
        skip = np.concatenate(([NEG_INF, NEG_INF], alpha[:-2, t - 1]))
        acc = np.where(can_skip, np.logaddexp(acc, skip), acc)
        alpha[:, t] = acc + logp[t, ext]
    log_p = np.logaddexp(alpha[S - 1, T - 1], alpha[S - 2, T - 1] if S > 1 else NEG_INF)
    return CtcLoss(loss=float(-log_p), log_alpha=alpha, feasible=True)


def _log_beta(logp: np.ndarray, ext: np.ndarray, blank_id: int) -> np.ndarray:
    """Backward table; beta[s, t] covers frames t+1..T-1 (emission at t excluded)."""
    T = logp.shape[0]
    S = len(ext)
    can_skip = np.zeros(S, dtype=bool)
    can_skip[: S - 2] = (ext[: S - 2] != blank_id) & (ext[: S - 2] != ext[2:])
    beta = np.full((S, T), NEG_INF)
    beta[S - 1, T - 1] = 0.0
    if S > 1:
        beta[S - 2, T - 1] = 0.0
    for t in range(T - 2, -1, -1):
        emit = beta[:, t + 1] + logp[t + 1, ext]
        stay = emit
        step = np.concatenate((emit[1:], [NEG_INF]))
        acc = np.logaddexp(stay, step)
        skip = np.concatenate((emit[2:], [NEG_INF, NEG_INF]))
        acc = np.where(can_skip, np.logaddexp(acc, skip), acc)
        beta[:, t] = acc
    return beta


def ctc_grad(m: np.ndarray, labels: list[int], blank_id: int) -> np.ndarray:
    """d loss / d logits: softmax(m) minus the forward-backward posterior."""
    m = np.asarray(m, dtype=np.float64)
    result = ctc_loss(m, labels, blank_id)
    if not result.feasible:
        raise ValueError(
            f"infeasible CTC instance: {m.shape[0]} frames < {min_frames(labels)} required"
        )
    logp = log_softmax_rows(m)
    ext = _extended(labels, blank_id)
    beta = _log_beta(logp, ext, blank_id)
    occupancy = result.log_alpha + beta  # log P(paths through state s at t)
    log_p = -result.loss

    T, V = m.shape
    log_gamma = np.full((T, V), NEG_INF)
    for s, k in enumerate(ext):
        log_gamma[:, k] = np.logaddexp(log_gamma[:, k], occupancy[s, :])
    gamma = np.exp(log_gamma - log_p)
    return np.exp(logp) - gamma


def greedy_decode(m: np.ndarray, blank_id: int) -> list[int]:
    """Per-frame argmax (ties to the lowest id) followed by collapse."""
    m = np.asarray(m, dtype=np.float64)
    path = np.argmax(m, axis=1).tolist()
    return collapse(path, blank_id)


def write_logits(m: np.ndarray) -> bytes:
    """Logit file: magic CTCL, u32 version=1, u32 T, u32 V, f32 row-major."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("logit matrix must be 2-D")
    T, V = m.shape
    header = LOGITS_MAGIC + struct.pack("<III", LOGITS_VERSION, T, V)
    return header + np.ascontiguousarray(m, dtype="<f4").tobytes()


def read_logits(data: bytes) -> np.ndarray:
    if len(data) < 16 or data[:4] != LOGITS_MAGIC:
        raise ValueError("not a logit matrix file (bad magic)")
    version, T, V = struct.unpack_from("<III", data, 4)
    if version != LOGITS_VERSION:
        raise ValueError(f"unsupported logit file version {version}")
    expected = 16 + 4 * T * V
    if len(data) != expected:
        raise ValueError(f"logit file length {len(data)} != expected {expected}")
    values = np.frombuffer(data, dtype="<f4", offset=16).reshape(T, V)
    return values.astype(np.float64)


def load_logits(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        return read_logits(f.read())


def save_logits(path: str, m: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(write_logits(m))

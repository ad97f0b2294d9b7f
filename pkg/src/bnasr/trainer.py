"""Desk-scale CTC training: a per-frame linear model under AdamW.

The model scores each feature frame independently (logits = frames @ W + b),
which is enough to exercise the loss, gradient and optimizer end to end in
seconds.  Training follows an explicit phase plan; each phase pins its own
learning rate and weight decay, mirroring a long high-rate phase followed
by a short low-rate one.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .ctc import ctc_grad, ctc_loss, greedy_decode
from .metrics import edit_distance
from .rng import SplitMix64

CHECKPOINT_MAGIC = b"TACM"
CHECKPOINT_VERSION = 1


@dataclass
class ToyAcousticModel:
    W: np.ndarray  # (F, V)
    b: np.ndarray  # (V,)

    @classmethod
    def zeros(cls, n_features: int, n_vocab: int) -> "ToyAcousticModel":
        return cls(W=np.zeros((n_features, n_vocab)), b=np.zeros(n_vocab))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.b])

    def load_flat(self, params: np.ndarray) -> None:
        n_w = self.W.size
        self.W = params[:n_w].reshape(self.W.shape).copy()
        self.b = params[n_w:].copy()


def forward(model: ToyAcousticModel, frames: np.ndarray) -> np.ndarray:
    """Per-frame logits: row t = frames[t] @ W + b."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != model.W.shape[0]:
        raise ValueError(
            f"frames shape {frames.shape} incompatible with W {model.W.shape}"
        )
    return frames @ model.W + model.b


@dataclass
class OptimizerState:
    """AdamW accumulators over a flat parameter vector."""

    m: np.ndarray
    v: np.ndarray
    step_count: int
    lr: float
    weight_decay: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(
        cls,
        n_params: int,
        lr: float,
        weight_decay: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> "OptimizerState":
        if lr <= 0:
            raise ValueError("lr must be positive")
        if weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        return cls(
            m=np.zeros(n_params),
            v=np.zeros(n_params),
            step_count=0,
            lr=lr,
            weight_decay=weight_decay,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def adamw_step(state: OptimizerState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One decoupled-weight-decay Adam update; returns the new parameters.

    p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
    """
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("params, grads and optimizer state must share a shape")
    bad = np.flatnonzero(~np.isfinite(grads))
    if bad.size:
        raise ValueError(f"non-finite gradient at index {int(bad[0])}")
    state.step_count += 1
    t = state.step_count
    state.m = state.beta1 * state.m + (1 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1 - state.beta2) * grads**2
    m_hat = state.m / (1 - state.beta1**t)
    v_hat = state.v / (1 - state.beta2**t)
    return params - state.lr * (m_hat / (np.sqrt(v_hat) + state.epsilon) + state.weight_decay * params)


@dataclass(frozen=True)
class Phase:
    epochs: int
    lr: float
    weight_decay: float

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("each phase needs at least one epoch")


@dataclass(frozen=True)
class PhasePlan:
    phases: tuple[Phase, ...]

    def __post_init__(self):
        if not self.phases:
            raise ValueError("plan needs at least one phase")


@dataclass(frozen=True)
class EpochLog:
    phase: int  # 1-based
    epoch: int  # 1-based within the phase
    train_loss: float
    eval_wer: float


def _dataset_loss_and_grad(
    model: ToyAcousticModel,
    batch: list[tuple[np.ndarray, list[int]]],
    blank_id: int,
) -> tuple[float, np.ndarray, int]:
    """Mean CTC loss over the batch and its gradient w.r.t. flat params.

    Infeasible utterances (loss +inf) are skipped; the count of scored
    utterances comes back so epoch means stay exact.
    """
    dW = np.zeros_like(model.W)
    db = np.zeros_like(model.b)
    total = 0.0
    scored = 0
    for frames, labels in batch:
        logits = forward(model, frames)
        result = ctc_loss(logits, labels, blank_id)
        if not result.feasible:
            continue
        dlogits = ctc_grad(logits, labels, blank_id)
        dW += frames.T @ dlogits
        db += dlogits.sum(axis=0)
        total += result.loss
        scored += 1
    if scored:
        dW /= scored
        db /= scored
    return total, np.concatenate([dW.ravel(), db]), scored


def _token_wer(
    model: ToyAcousticModel,
    dataset: list[tuple[np.ndarray, list[int]]],
    blank_id: int,
    word_delim_id: int | None,
) -> float:
    """Greedy-decode WER; ids are split into words on word_delim_id when given,
    otherwise every id counts as its own token."""

    def tokens(ids: list[int]) -> list[tuple[int, ...]]:
        if word_delim_id is None:
            return [(i,) for i in ids]
        words, current = [], []
        for i in ids:
            if i == word_delim_id:
                if current:
                    words.append(tuple(current))
                current = []
            else:
                current.append(i)
        if current:
            words.append(tuple(current))
        return words

    edits = count = 0
    for frames, labels in dataset:
        hyp = greedy_decode(forward(model, frames), blank_id)
        ref_tokens = tokens(labels)
        edits += edit_distance(ref_tokens, tokens(hyp))
        count += max(1, len(ref_tokens))
    return edits / count if count else 0.0


def train(
    model: ToyAcousticModel,
    dataset: list[tuple[np.ndarray, list[int]]],
    plan: PhasePlan,
    seed: int,
    *,
    eval_set: list[tuple[np.ndarray, list[int]]] | None = None,
    batch_size: int = 4,
    blank_id: int = 0,
    word_delim_id: int | None = None,
) -> tuple[ToyAcousticModel, list[EpochLog]]:
    """Run the phase plan with seeded shuffling; returns the model and log.

    Each epoch shuffles the dataset (one shared splitmix64 stream, so runs
    with equal seeds are identical), steps AdamW once per batch on the mean
    CTC loss, and records the epoch's mean train loss plus greedy WER on
    eval_set (the training set when eval_set is None).
    """
    if not dataset:
        raise ValueError("dataset is empty")
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    eval_data = dataset if eval_set is None else eval_set

    params = model.flat()
    logs: list[EpochLog] = []
    rng = SplitMix64(seed)
    state: OptimizerState | None = None
    for phase_idx, phase in enumerate(plan.phases, start=1):
        if state is None:
            state = OptimizerState.fresh(len(params), phase.lr, phase.weight_decay)
        else:
            state.lr = phase.lr
            state.weight_decay = phase.weight_decay
        for epoch in range(1, phase.epochs + 1):
            order = list(range(len(dataset)))
            for i in range(len(order) - 1, 0, -1):
                j = rng.next_below(i + 1)
                order[i], order[j] = order[j], order[i]
            epoch_loss = 0.0
            epoch_scored = 0
            for start in range(0, len(order), batch_size):
                batch = [dataset[i] for i in order[start : start + batch_size]]
                total, grads, scored = _dataset_loss_and_grad(model, batch, blank_id)
                if scored == 0:
                    continue
                params = adamw_step(state, params, grads)
                model.load_flat(params)
                epoch_loss += total
                epoch_scored += scored
            mean_loss = epoch_loss / epoch_scored if epoch_scored else float("inf")
            eval_wer = _token_wer(model, eval_data, blank_id, word_delim_id)
            logs.append(EpochLog(phase=phase_idx, epoch=epoch, train_loss=mean_loss, eval_wer=eval_wer))
    return model, logs


def format_log(logs: list[EpochLog]) -> str:
    """Training log TSV with columns phase, epoch, train_loss, eval_wer."""
    lines = ["phase\tepoch\ttrain_loss\teval_wer"]
    for entry in logs:
        lines.append(
            f"{entry.phase}\t{entry.epoch}\t{entry.train_loss:.6f}\t{entry.eval_wer:.6f}"
        )
    return "\n".join(lines) + "\n"


def save_checkpoint(model: ToyAcousticModel) -> bytes:
    """Checkpoint: magic TACM, u32 version, u32 F, u32 V, f32 W row-major, f32 b."""
    F, V = model.W.shape
    header = CHECKPOINT_MAGIC + struct.pack("<III", CHECKPOINT_VERSION, F, V)
    return header + model.W.astype("<f4").tobytes() + model.b.astype("<f4").tobytes()


def load_checkpoint(data: bytes) -> ToyAcousticModel:
    if len(data) < 16 or data[:4] != CHECKPOINT_MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    version, F, V = struct.unpack_from("<III", data, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    expected = 16 + 4 * (F * V + V)
    if len(data) != expected:
        raise ValueError(f"checkpoint length {len(data)} != expected {expected}")
    W = np.frombuffer(data, dtype="<f4", count=F * V, offset=16).reshape(F, V).astype(np.float64)
    b = np.frombuffer(data, dtype="<f4", count=V, offset=16 + 4 * F * V).astype(np.float64)
    return ToyAcousticModel(W=W, b=b)


def make_separable_dataset(
    n_utts: int,
    n_vocab: int,
    n_frames: int,
    seed: int,
    feature_scale: float = 8.0,
    max_label_len: int = 3,
) -> list[tuple[np.ndarray, list[int]]]:
    """Synthetic utterances a per-frame linear model can fit.

    Each utterance stretches a short random label sequence across the
    frames (blank-padded at the end) and one-hot encodes that frame path as
    features, scaled so AdamW's bounded per-step movement reaches confident
    logits within a few hundred updates.
    """
    rng = SplitMix64(seed)
    dataset = []
    for _ in range(n_utts):
        label_len = 1 + rng.next_below(max_label_len)
        labels = []
        for _ in range(label_len):
            c = 1 + rng.next_below(n_vocab - 1)
            if labels and c == labels[-1]:  # avoid repeats: keeps min_frames small
                c = 1 + (c % (n_vocab - 1))
            labels.append(c)
        span = n_frames // (label_len + 1)
        path = []
        for y in labels:
            path.extend([y] * span)
        path.extend([0] * (n_frames - len(path)))
        frames = np.zeros((n_frames, n_vocab))
        frames[np.arange(n_frames), path] = feature_scale
        dataset.append((frames, labels))
    return dataset

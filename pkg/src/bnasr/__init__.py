"""Bengali ASR pipeline toolkit.

Curation, audio preprocessing, CTC loss/decoding, n-gram LM shallow
fusion, Bengali text normalization and edit-distance evaluation, built
around a pluggable per-frame acoustic front end.
"""

from .audio import Waveform, duration_ok, load_wav, resample_linear, save_wav, trim_silence
from .corpus import (
    ClipRecord,
    Manifest,
    SplitSpec,
    Vocabulary,
    build_vocab,
    encode_transcript,
    decode_ids,
    filter_clips,
    merge_and_split,
    parse_manifest,
)
from .ctc import CtcLoss, collapse, ctc_grad, ctc_loss, greedy_decode, log_softmax_rows
from .decoder import DecoderConfig, beam_decode, beam_decode_nbest, brute_force_best
from .lm import ArpaModel, ngram_logprob, parse_arpa, score_sentence, serialize_arpa
from .metrics import EvalReport, cer, evaluate_corpus, levenshtein, wer
from .textnorm import NormRules, append_danda, default_rules, normalize_bn, strip_punct
from .trainer import (
    OptimizerState,
    Phase,
    PhasePlan,
    ToyAcousticModel,
    adamw_step,
    forward,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ArpaModel",
    "ClipRecord",
    "CtcLoss",
    "DecoderConfig",
    "EvalReport",
    "Manifest",
    "NormRules",
    "OptimizerState",
    "Phase",
    "PhasePlan",
    "SplitSpec",
    "ToyAcousticModel",
    "Vocabulary",
    "Waveform",
    "adamw_step",
    "append_danda",
    "beam_decode",
    "beam_decode_nbest",
    "brute_force_best",
    "build_vocab",
    "cer",
    "collapse",
    "ctc_grad",
    "ctc_loss",
    "decode_ids",
    "default_rules",
    "duration_ok",
    "encode_transcript",
    "evaluate_corpus",
    "filter_clips",
    "forward",
    "greedy_decode",
    "levenshtein",
    "load_wav",
    "log_softmax_rows",
    "merge_and_split",
    "ngram_logprob",
    "normalize_bn",
    "parse_arpa",
    "parse_manifest",
    "resample_linear",
    "save_wav",
    "score_sentence",
    "serialize_arpa",
    "strip_punct",
    "train",
    "trim_silence",
    "wer",
]

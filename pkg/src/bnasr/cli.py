"""Command-line pipeline driver.

One executable, subcommand per pipeline stage:

    curate | trim | vocab | encode | decode | score | lm-score | train-toy | eval

Every run echoes its resolved configuration to stderr (`# config:` lines);
stdout carries data only.  Options come from defaults, then an optional
`key=value` config file, then flags (flags win).  Exit codes: 0 success,
1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import audio, corpus, ctc, decoder, lm, metrics, textnorm, trainer
from .rng import shuffled

LOGITS_SUFFIX = ".ctcl"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's 2
        raise UsageError(f"{message}\n{self.format_usage()}")


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def _load_config_file(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _coerce(key: str, raw: str, default):
    if isinstance(default, bool):
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"config key {key}: expected a boolean, got {raw!r}")
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise UsageError(f"config key {key}: bad numeric value {raw!r}") from None
    return raw


def _resolve(defaults: dict, config_path: str | None, flags: dict) -> dict:
    resolved = dict(defaults)
    if config_path:
        for key, raw in _load_config_file(config_path).items():
            if key in resolved:
                resolved[key] = _coerce(key, raw, defaults[key])
    resolved.update(flags)
    return resolved


def _echo_config(command: str, cfg: dict) -> None:
    print(f"# config: command={command}", file=sys.stderr)
    for key in sorted(cfg):
        print(f"# config: {key}={cfg[key]}", file=sys.stderr)


def _require(cfg: dict, *keys: str) -> None:
    for key in keys:
        if cfg[key] is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")


def _read_pairs_tsv(path: str) -> list[tuple[str, str]]:
    lines = _read_text(path).splitlines()
    if not lines or lines[0].split("\t") != ["clip_id", "text"]:
        raise ValueError(f"{path}: expected header 'clip_id<TAB>text'")
    pairs = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 fields, found {len(fields)}")
        pairs.append((fields[0], fields[1]))
    return pairs


def _map_ordered(fn, items: list, workers: int) -> list:
    """Apply fn preserving input order, optionally across threads."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- subcommands -----------------------------------------------------------


CURATE_DEFAULTS = {
    "manifest": None,
    "out": None,
    "net_positive": False,
    "min_sec": 0.0,
    "max_sec": math.inf,
    "durations": None,
    "workers": 1,
}


def _cmd_curate(cfg: dict) -> int:
    _require(cfg, "manifest")
    manifest = corpus.parse_manifest(_read_text(cfg["manifest"]))
    if cfg["durations"]:
        table = {}
        for lineno, line in enumerate(_read_text(cfg["durations"]).splitlines(), start=1):
            if lineno == 1 and line.startswith("path\t"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ValueError(f"durations line {lineno}: expected 'path<TAB>seconds'")
            table[fields[0]] = float(fields[1])
        manifest = corpus.with_durations(manifest, table)
    summary = corpus.summarize_votes(manifest)
    filtered = corpus.filter_clips(
        manifest,
        require_net_positive_votes=cfg["net_positive"],
        min_s=cfg["min_sec"],
        max_s=cfg["max_sec"],
    )
    _write_output(corpus.serialize_manifest(filtered), cfg["out"])
    print(
        f"total={summary.total} up>down={summary.up_gt_down} up<down={summary.up_lt_down} "
        f"up=down=0={summary.both_zero} up=down!=0={summary.equal_nonzero} "
        f"retained={len(filtered)}",
        file=sys.stderr,
    )
    return 0


TRIM_DEFAULTS = {
    "in_path": None,
    "out": None,
    "divisor": 30.0,
    "resample_hz": 16000,
    "durations_out": None,
    "workers": 1,
}


def _cmd_trim(cfg: dict) -> int:
    _require(cfg, "in_path", "out")
    src = Path(cfg["in_path"])
    dst = Path(cfg["out"])
    if src.is_dir():
        files = sorted(p for p in src.iterdir() if p.suffix == ".wav")
        dst.mkdir(parents=True, exist_ok=True)
        targets = [dst / p.name for p in files]
    else:
        files = [src]
        targets = [dst]

    def process(pair: tuple[Path, Path]) -> tuple[str, float]:
        in_file, out_file = pair
        wave = audio.load_wav(in_file.read_bytes())
        if cfg["resample_hz"] > 0:
            wave = audio.resample_linear(wave, cfg["resample_hz"])
        wave = audio.trim_silence(wave, divisor=cfg["divisor"])
        out_file.write_bytes(audio.save_wav(wave))
        return in_file.name, wave.duration_s

    results = _map_ordered(process, list(zip(files, targets)), cfg["workers"])
    if cfg["durations_out"]:
        lines = ["path\tduration_s"]
        lines += [f"{name}\t{dur!r}" for name, dur in results]
        Path(cfg["durations_out"]).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"trimmed={len(results)}", file=sys.stderr)
    return 0


VOCAB_DEFAULTS = {"manifest": None, "out": None, "workers": 1}


def _cmd_vocab(cfg: dict) -> int:
    _require(cfg, "manifest")
    manifest = corpus.parse_manifest(_read_text(cfg["manifest"]))
    cleaned = corpus.Manifest(
        records=tuple(
            corpus.ClipRecord(
                clip_id=r.clip_id,
                audio_path=r.audio_path,
                sentence=textnorm.strip_punct(r.sentence),
                upvotes=r.upvotes,
                downvotes=r.downvotes,
                duration_s=r.duration_s,
            )
            for r in manifest.records
        )
    )
    vocab = corpus.build_vocab(cleaned)
    _write_output(corpus.save_vocab(vocab), cfg["out"])
    print(f"vocab_size={vocab.size}", file=sys.stderr)
    return 0


ENCODE_DEFAULTS = {"manifest": None, "vocab": None, "out": None, "workers": 1}


def _cmd_encode(cfg: dict) -> int:
    _require(cfg, "manifest", "vocab")
    manifest = corpus.parse_manifest(_read_text(cfg["manifest"]))
    vocab = corpus.load_vocab(_read_text(cfg["vocab"]))
    lines = []
    for r in manifest.records:
        ids = corpus.encode_transcript(textnorm.strip_punct(r.sentence), vocab)
        lines.append(f"{r.clip_id}\t{' '.join(map(str, ids))}")
    _write_output("\n".join(lines) + "\n", cfg["out"])
    return 0


DECODE_DEFAULTS = {
    "logits": None,
    "vocab": None,
    "arpa": None,
    "out": None,
    "alpha": 0.5,
    "beta": 1.0,
    "beam_width": 32,
    "nbest": 1,
    "postprocess": True,
    "norm_rules": None,
    "workers": 1,
}


def _cmd_decode(cfg: dict) -> int:
    _require(cfg, "logits", "vocab")
    vocab = corpus.load_vocab(_read_text(cfg["vocab"]))
    model = lm.parse_arpa(_read_text(cfg["arpa"])) if cfg["arpa"] else None
    rules = textnorm.load_rules(cfg["norm_rules"]) if cfg["norm_rules"] else textnorm.default_rules()
    dec_cfg = decoder.DecoderConfig(
        beam_width=cfg["beam_width"],
        alpha=cfg["alpha"],
        beta=cfg["beta"],
        blank_id=vocab.blank_id,
        word_delim_id=vocab.word_delim_id,
    )
    files = sorted(Path(cfg["logits"]).glob(f"*{LOGITS_SUFFIX}"))
    if not files:
        raise ValueError(f"no {LOGITS_SUFFIX} files under {cfg['logits']}")

    def postprocess(text: str) -> str:
        if not cfg["postprocess"]:
            return text
        return textnorm.append_danda(textnorm.normalize_bn(text, rules))

    def decode_one(path: Path) -> list[str]:
        matrix = ctc.read_logits(path.read_bytes())
        clip_id = path.name[: -len(LOGITS_SUFFIX)]
        if cfg["nbest"] > 1:
            beams = decoder.beam_decode_nbest(matrix, vocab, model, dec_cfg, n=cfg["nbest"])
            return [
                f"{clip_id}\t{rank}\t{score:.6f}\t{postprocess(corpus.decode_ids(ids, vocab))}"
                for rank, (ids, score) in enumerate(beams, start=1)
            ]
        ids, _ = decoder.beam_decode(matrix, vocab, model, dec_cfg)
        return [f"{clip_id}\t{postprocess(corpus.decode_ids(ids, vocab))}"]

    chunks = _map_ordered(decode_one, files, cfg["workers"])
    lines = [line for chunk in chunks for line in chunk]
    _write_output("\n".join(lines) + "\n", cfg["out"])
    return 0


SCORE_DEFAULTS = {"logits": None, "vocab": None, "refs": None, "out": None, "workers": 1}


def _cmd_score(cfg: dict) -> int:
    _require(cfg, "logits", "vocab", "refs")
    vocab = corpus.load_vocab(_read_text(cfg["vocab"]))
    refs = dict(_read_pairs_tsv(cfg["refs"]))
    files = sorted(Path(cfg["logits"]).glob(f"*{LOGITS_SUFFIX}"))

    def score_one(path: Path) -> str:
        clip_id = path.name[: -len(LOGITS_SUFFIX)]
        if clip_id not in refs:
            raise ValueError(f"no reference transcript for clip {clip_id!r}")
        labels = corpus.encode_transcript(textnorm.strip_punct(refs[clip_id]), vocab)
        result = ctc.ctc_loss(ctc.read_logits(path.read_bytes()), labels, vocab.blank_id)
        return f"{clip_id}\t{result.loss:.6f}"

    lines = _map_ordered(score_one, files, cfg["workers"])
    _write_output("\n".join(lines) + "\n", cfg["out"])
    return 0


LM_SCORE_DEFAULTS = {"arpa": None, "text": None, "out": None, "workers": 1}


def _cmd_lm_score(cfg: dict) -> int:
    _require(cfg, "arpa", "text")
    model = lm.parse_arpa(_read_text(cfg["arpa"]))
    lines = []
    for sentence in _read_text(cfg["text"]).splitlines():
        logprob = lm.score_sentence(model, sentence.split())
        lines.append(f"{logprob:.6f}\t{sentence}")
    _write_output("\n".join(lines) + "\n", cfg["out"])
    return 0


TRAIN_TOY_DEFAULTS = {
    "out_dir": None,
    "seed": 0,
    "utts": 10,
    "vocab_size": 5,
    "frames": 20,
    "batch_size": 4,
    "epochs1": 20,
    "lr1": 5e-4,
    "wd1": 2.5e-6,
    "epochs2": 5,
    "lr2": 5e-6,
    "wd2": 2.5e-9,
    "train_fraction": 0.85,
    "workers": 1,
}


def _cmd_train_toy(cfg: dict) -> int:
    _require(cfg, "out_dir")
    dataset = trainer.make_separable_dataset(
        n_utts=cfg["utts"], n_vocab=cfg["vocab_size"], n_frames=cfg["frames"], seed=cfg["seed"]
    )
    # mirror the pipeline's merge-and-resplit: seeded shuffle, then 85-15
    pool = shuffled(dataset, cfg["seed"] + 1)
    n_train = int(math.floor(cfg["train_fraction"] * len(pool) + 0.5))
    n_train = min(max(n_train, 1), len(pool))
    train_set, eval_set = pool[:n_train], pool[n_train:]
    plan = trainer.PhasePlan(
        phases=(
            trainer.Phase(epochs=cfg["epochs1"], lr=cfg["lr1"], weight_decay=cfg["wd1"]),
            trainer.Phase(epochs=cfg["epochs2"], lr=cfg["lr2"], weight_decay=cfg["wd2"]),
        )
    )
    model = trainer.ToyAcousticModel.zeros(cfg["vocab_size"], cfg["vocab_size"])
    model, logs = trainer.train(
        model,
        train_set,
        plan,
        seed=cfg["seed"],
        eval_set=eval_set or None,
        batch_size=cfg["batch_size"],
    )
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "train_log.tsv").write_text(trainer.format_log(logs), encoding="utf-8")
    (out_dir / "model.tacm").write_bytes(trainer.save_checkpoint(model))
    print(
        f"epochs={len(logs)} final_loss={logs[-1].train_loss:.6f} final_wer={logs[-1].eval_wer:.6f}",
        file=sys.stderr,
    )
    return 0


EVAL_DEFAULTS = {"refs": None, "hyps": None, "out": None, "workers": 1}


def _cmd_eval(cfg: dict) -> int:
    _require(cfg, "refs", "hyps")
    refs = _read_pairs_tsv(cfg["refs"])
    hyps = dict(_read_pairs_tsv(cfg["hyps"]))
    missing = [clip_id for clip_id, _ in refs if clip_id not in hyps]
    if missing:
        raise ValueError(f"hypotheses missing for clip {missing[0]!r}")
    extra = set(hyps) - {clip_id for clip_id, _ in refs}
    if extra:
        raise ValueError(f"hypothesis for unknown clip {sorted(extra)[0]!r}")
    report = metrics.evaluate_corpus([(cid, ref, hyps[cid]) for cid, ref in refs])
    if cfg["out"]:
        Path(cfg["out"]).write_text(report.to_tsv(), encoding="utf-8")
    sys.stdout.write(report.summary_line() + "\n")
    return 0


# --- argument wiring --------------------------------------------------------


_COMMANDS = {
    "curate": (CURATE_DEFAULTS, _cmd_curate),
    "trim": (TRIM_DEFAULTS, _cmd_trim),
    "vocab": (VOCAB_DEFAULTS, _cmd_vocab),
    "encode": (ENCODE_DEFAULTS, _cmd_encode),
    "decode": (DECODE_DEFAULTS, _cmd_decode),
    "score": (SCORE_DEFAULTS, _cmd_score),
    "lm-score": (LM_SCORE_DEFAULTS, _cmd_lm_score),
    "train-toy": (TRAIN_TOY_DEFAULTS, _cmd_train_toy),
    "eval": (EVAL_DEFAULTS, _cmd_eval),
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="bnasr", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    def add(name: str, defaults: dict, **flag_help) -> argparse.ArgumentParser:
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        p.error = parser.error  # share exit-1 behavior
        p.add_argument("--config", dest="config", help="key=value config file")
        for key, default in defaults.items():
            flag = "--" + key.replace("_", "-")
            if key == "in_path":
                flag = "--in"
            if isinstance(default, bool):
                if default:
                    p.add_argument(
                        "--no-" + key.replace("_", "-"), dest=key, action="store_false"
                    )
                else:
                    p.add_argument(flag, dest=key, action="store_true")
            elif isinstance(default, (int, float)) and not isinstance(default, bool):
                p.add_argument(flag, dest=key, type=type(default))
            else:
                p.add_argument(flag, dest=key)
        return p

    for name, (defaults, _) in _COMMANDS.items():
        add(name, defaults)
    return parser


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as e:
        print(f"bnasr: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    if ns.command is None:
        print(parser.format_usage(), file=sys.stderr)
        return 1
    defaults, handler = _COMMANDS[ns.command]
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    try:
        cfg = _resolve(defaults, getattr(ns, "config", None), flags)
        _echo_config(ns.command, cfg)
        return handler(cfg)
    except UsageError as e:
        print(f"bnasr: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"bnasr: i/o error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"bnasr: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

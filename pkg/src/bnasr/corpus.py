"""Speech-corpus curation: manifests, vote/duration filters, vocabulary.

Manifests are UTF-8 TSV with a header naming at least `path`, `sentence`,
`up_votes`, `down_votes`; an optional `duration_s` column carries measured
clip durations (Common Voice releases do not include them, so they are
filled in from decoded audio and cached as this sidecar column).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

from .rng import shuffled

REQUIRED_COLUMNS = ("path", "sentence", "up_votes", "down_votes")

BLANK_TOKEN = "<blank>"
WORD_DELIM_CHAR = "|"  # stands in for U+0020 in vocabulary files


class ManifestError(ValueError):
    """Malformed manifest input; carries the offending row when known."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class OovError(ValueError):
    """Transcript character missing from the vocabulary."""

    def __init__(self, char: str, offset: int):
        super().__init__(f"out-of-vocabulary character {char!r} at offset {offset}")
        self.char = char
        self.offset = offset


@dataclass(frozen=True)
class ClipRecord:
    clip_id: str
    audio_path: str
    sentence: str
    upvotes: int
    downvotes: int
    duration_s: float | None = None

    def __post_init__(self):
        if self.upvotes < 0 or self.downvotes < 0:
            raise ValueError(f"clip {self.clip_id}: negative vote count")


@dataclass(frozen=True)
class Manifest:
    records: tuple[ClipRecord, ...]
    source_name: str = ""

    def __post_init__(self):
        seen = set()
        for r in self.records:
            if r.clip_id in seen:
                raise ManifestError(f"duplicate clip_id {r.clip_id!r}")
            seen.add(r.clip_id)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Vocabulary:
    """Bijective char<->id map with reserved blank (0) and word delimiter (1).

    Id 1 stands for U+0020; ordinary characters occupy ids 2..V-1 in
    codepoint order.
    """

    char_to_id: dict[str, int]
    blank_id: int = 0
    word_delim_id: int = 1

    @property
    def size(self) -> int:
        return len(self.char_to_id) + 2

    @property
    def id_to_char(self) -> dict[int, str]:
        inv = {i: c for c, i in self.char_to_id.items()}
        inv[self.word_delim_id] = " "
        return inv


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def parse_manifest(data: bytes | str, source_name: str = "") -> Manifest:
    """Parse TSV manifest bytes into a Manifest, preserving row order.

    clip_id is the `path` value (unique per clip in Common Voice exports).
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.reader(io.StringIO(data), delimiter="\t", quoting=csv.QUOTE_NONE)
    try:
        header = next(reader)
    except StopIteration:
        raise ManifestError("empty input: missing header row") from None
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise ManifestError(f"header is missing column {col!r}")
    idx = {name: i for i, name in enumerate(header)}
    dur_idx = idx.get("duration_s")

    records = []
    for rownum, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ManifestError(
                f"expected {len(header)} fields, found {len(row)}", row=rownum
            )
        try:
            up = int(row[idx["up_votes"]])
            down = int(row[idx["down_votes"]])
        except ValueError:
            raise ManifestError("vote counts must be integers", row=rownum) from None
        duration = None
        if dur_idx is not None and row[dur_idx] != "":
            try:
                duration = float(row[dur_idx])
            except ValueError:
                raise ManifestError("duration_s must be numeric", row=rownum) from None
        path = row[idx["path"]]
        records.append(
            ClipRecord(
                clip_id=path,
                audio_path=path,
                sentence=row[idx["sentence"]],
                upvotes=up,
                downvotes=down,
                duration_s=duration,
            )
        )
    return Manifest(records=tuple(records), source_name=source_name)


def serialize_manifest(m: Manifest) -> str:
    """Render a manifest back to the TSV dialect parse_manifest reads."""
    with_duration = any(r.duration_s is not None for r in m.records)
    header = list(REQUIRED_COLUMNS) + (["duration_s"] if with_duration else [])
    lines = ["\t".join(header)]
    for r in m.records:
        fields = [r.audio_path, r.sentence, str(r.upvotes), str(r.downvotes)]
        if with_duration:
            fields.append("" if r.duration_s is None else repr(r.duration_s))
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def with_durations(m: Manifest, durations: dict[str, float]) -> Manifest:
    """Attach measured durations (keyed by clip_id) to a manifest."""
    records = tuple(
        replace(r, duration_s=durations[r.clip_id]) if r.clip_id in durations else r
        for r in m.records
    )
    return Manifest(records=records, source_name=m.source_name)


def filter_clips(
    m: Manifest,
    require_net_positive_votes: bool,
    min_s: float = 0.0,
    max_s: float = math.inf,
) -> Manifest:
    """Keep records with upvotes > downvotes (if flagged) and duration in [min_s, max_s].

    The duration predicate only engages when the window is narrower than
    [0, inf); it then requires every record to carry a measured duration.
    """
    duration_active = min_s > 0.0 or max_s < math.inf
    kept = []
    for r in m.records:
        if require_net_positive_votes and not r.upvotes > r.downvotes:
            continue
        if duration_active:
            if r.duration_s is None:
                raise ValueError(f"clip {r.clip_id!r} has no measured duration")
            if not min_s <= r.duration_s <= max_s:
                continue
        kept.append(r)
    return Manifest(records=tuple(kept), source_name=m.source_name)


@dataclass(frozen=True)
class VoteSummary:
    """Vote-category counts over a manifest, plus the fully filtered count."""

    total: int
    up_gt_down: int
    up_lt_down: int
    both_zero: int
    equal_nonzero: int
    full_filter: int | None  # None when durations are unavailable


def summarize_votes(m: Manifest, min_s: float = 1.0, max_s: float = 10.0) -> VoteSummary:
    up_gt = up_lt = zero = eq_nz = 0
    for r in m.records:
        if r.upvotes > r.downvotes:
            up_gt += 1
        elif r.upvotes < r.downvotes:
            up_lt += 1
        elif r.upvotes == 0:
            zero += 1
        else:
            eq_nz += 1
    full = None
    positives = [r for r in m.records if r.upvotes > r.downvotes]
    if all(r.duration_s is not None for r in positives):
        full = sum(1 for r in positives if min_s <= r.duration_s <= max_s)
    return VoteSummary(
        total=len(m.records),
        up_gt_down=up_gt,
        up_lt_down=up_lt,
        both_zero=zero,
        equal_nonzero=eq_nz,
        full_filter=full,
    )


def build_vocab(m: Manifest) -> Vocabulary:
    """Enumerate all distinct non-space transcript characters, codepoint-sorted.

    Sentences are expected punctuation-free and single-spaced (strip_punct
    output).  blank=0 and the word delimiter=1 are reserved; everything
    else gets ids 2.. in sorted order.
    """
    if not m.records:
        raise ValueError("cannot build a vocabulary from an empty manifest")
    chars = set()
    for r in m.records:
        chars.update(c for c in r.sentence if c != " ")
    char_to_id = {c: i for i, c in enumerate(sorted(chars), start=2)}
    return Vocabulary(char_to_id=char_to_id)


def encode_transcript(s: str, v: Vocabulary) -> list[int]:
    """Map each Unicode scalar of s to its vocabulary id (space -> delimiter)."""
    ids = []
    for offset, c in enumerate(s):
        if c == " ":
            ids.append(v.word_delim_id)
        elif c in v.char_to_id:
            ids.append(v.char_to_id[c])
        else:
            raise OovError(c, offset)
    return ids


def decode_ids(ids: list[int], v: Vocabulary) -> str:
    """Inverse of encode_transcript (blank ids are not expected and rejected)."""
    inv = v.id_to_char
    chars = []
    for i in ids:
        if i == v.blank_id or i not in inv:
            raise ValueError(f"id {i} is not a decodable vocabulary entry")
        chars.append(inv[i])
    return "".join(chars)


def save_vocab(v: Vocabulary) -> str:
    """Vocabulary file: `<char><TAB><id>` lines, blank as <blank>, delim as |."""
    if WORD_DELIM_CHAR in v.char_to_id:
        raise ValueError("'|' is reserved for the word delimiter in vocabulary files")
    lines = [f"{BLANK_TOKEN}\t{v.blank_id}", f"{WORD_DELIM_CHAR}\t{v.word_delim_id}"]
    for c, i in sorted(v.char_to_id.items(), key=lambda kv: kv[1]):
        lines.append(f"{c}\t{i}")
    return "\n".join(lines) + "\n"


def load_vocab(text: str) -> Vocabulary:
    blank_id = word_delim_id = None
    char_to_id: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        try:
            token, id_text = line.split("\t")
            ident = int(id_text)
        except ValueError:
            raise ValueError(f"vocabulary line {lineno}: expected '<token>\\t<id>'") from None
        if token == BLANK_TOKEN:
            blank_id = ident
        elif token == WORD_DELIM_CHAR:
            word_delim_id = ident
        elif len(token) == 1:
            char_to_id[token] = ident
        else:
            raise ValueError(f"vocabulary line {lineno}: bad token {token!r}")
    if blank_id is None or word_delim_id is None:
        raise ValueError("vocabulary file lacks blank or word-delimiter entry")
    return Vocabulary(char_to_id=char_to_id, blank_id=blank_id, word_delim_id=word_delim_id)


def merge_and_split(a: Manifest, b: Manifest, spec: SplitSpec) -> tuple[Manifest, Manifest]:
    """Merge two manifests, shuffle deterministically, split train/dev.

    The train size is round-half-up(train_fraction * n); the two outputs
    partition the merged pool exactly.
    """
    ids_a = {r.clip_id for r in a.records}
    for r in b.records:
        if r.clip_id in ids_a:
            raise ManifestError(f"clip_id {r.clip_id!r} appears in both manifests")
    pool = list(a.records) + list(b.records)
    pool = shuffled(pool, spec.seed)
    n_train = int(math.floor(spec.train_fraction * len(pool) + 0.5))
    train = Manifest(records=tuple(pool[:n_train]), source_name="train")
    dev = Manifest(records=tuple(pool[n_train:]), source_name="dev")
    return train, dev

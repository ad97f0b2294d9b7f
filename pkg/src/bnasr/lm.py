"""ARPA back-off n-gram language models.

Probabilities stay in log10 (the file format's native base) throughout;
the decoder converts to natural log once at its boundary.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"

DEFAULT_UNK_LOG10 = -10.0


class ArpaParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ArpaModel:
    """Tables[k-1] maps k-word tuples to (log10 prob, log10 back-off weight).

    A missing back-off weight is 0.0 (the ARPA convention); the highest
    order never carries one.  `warnings` lists back-off-chain contexts that
    have no (k-1)-gram entry.
    """

    order: int
    tables: tuple[dict[tuple[str, ...], tuple[float, float]], ...]
    unk_log10: float = DEFAULT_UNK_LOG10
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def vocabulary(self) -> list[str]:
        return sorted(w for (w,) in self.tables[0])


_SECTION = re.compile(r"\\(\d+)-grams:$")
_NGRAM_COUNT = re.compile(r"ngram (\d+)\s*=\s*(\d+)$")


def parse_arpa(data: bytes | str, unk_log10: float = DEFAULT_UNK_LOG10) -> ArpaModel:
    """Parse ARPA text; header counts are verified against parsed entries.

    Fields may be separated by a single tab or runs of spaces.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.splitlines()

    counts: dict[int, int] = {}
    tables: dict[int, dict[tuple[str, ...], tuple[float, float]]] = {}
    current_k = None
    in_data = False
    saw_end = False

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "\\data\\":
            in_data = True
            continue
        if line == "\\end\\":
            saw_end = True
            break
        section = _SECTION.match(line)
        if section:
            in_data = False
            current_k = int(section.group(1))
            if current_k not in counts:
                raise ArpaParseError(f"section \\{current_k}-grams: not declared in \\data\\", lineno)
            tables.setdefault(current_k, {})
            continue
        if in_data:
            decl = _NGRAM_COUNT.match(line)
            if not decl:
                raise ArpaParseError(f"bad \\data\\ entry: {line!r}", lineno)
            counts[int(decl.group(1))] = int(decl.group(2))
            continue
        if current_k is None:
            raise ArpaParseError(f"unexpected content outside any section: {line!r}", lineno)

        fields = line.split()
        if len(fields) == current_k + 1:
            backoff_text = None
        elif len(fields) == current_k + 2:
            backoff_text = fields[-1]
        else:
            raise ArpaParseError(
                f"expected {current_k + 1} or {current_k + 2} fields, found {len(fields)}", lineno
            )
        try:
            logprob = float(fields[0])
        except ValueError:
            raise ArpaParseError(f"non-numeric log-probability {fields[0]!r}", lineno) from None
        backoff = 0.0
        if backoff_text is not None:
            try:
                backoff = float(backoff_text)
            except ValueError:
                raise ArpaParseError(f"non-numeric back-off weight {backoff_text!r}", lineno) from None
        words = tuple(fields[1 : current_k + 1])
        tables[current_k][words] = (logprob, backoff)

    if not counts:
        raise ArpaParseError("no \\data\\ section found", len(lines))
    if not saw_end:
        raise ArpaParseError("missing \\end\\ marker", len(lines))
    order = max(counts)
    for k in range(1, order + 1):
        declared = counts.get(k, 0)
        parsed = len(tables.get(k, {}))
        if declared != parsed:
            raise ArpaParseError(
                f"\\data\\ declares {declared} {k}-grams but {parsed} were parsed", len(lines)
            )

    table_tuple = tuple(tables.get(k, {}) for k in range(1, order + 1))
    warnings = []
    for k in range(2, order + 1):
        for words in table_tuple[k - 1]:
            prefix = words[:-1]
            if prefix not in table_tuple[k - 2]:
                warnings.append(
                    f"{k}-gram {' '.join(words)!r} has no {k - 1}-gram prefix entry"
                )
    return ArpaModel(
        order=order,
        tables=table_tuple,
        unk_log10=unk_log10,
        warnings=tuple(sorted(warnings)),
    )


def serialize_arpa(m: ArpaModel) -> str:
    """Inverse of parse_arpa; floats are written with round-trip-exact repr."""
    out = ["", "\\data\\"]
    for k in range(1, m.order + 1):
        out.append(f"ngram {k}={len(m.tables[k - 1])}")
    for k in range(1, m.order + 1):
        out.append("")
        out.append(f"\\{k}-grams:")
        for words in sorted(m.tables[k - 1]):
            logprob, backoff = m.tables[k - 1][words]
            line = f"{logprob!r}\t{' '.join(words)}"
            if k < m.order and backoff != 0.0:
                line += f"\t{backoff!r}"
            out.append(line)
    out.extend(["", "\\end\\", ""])
    return "\n".join(out)


def _backoff_weight(m: ArpaModel, context: tuple[str, ...]) -> float:
    entry = m.tables[len(context) - 1].get(context)
    return entry[1] if entry is not None else 0.0


def ngram_logprob(m: ArpaModel, context: tuple[str, ...], w: str) -> float:
    """log10 P(w | context) with Katz back-off.

    Total over all words: unknown unigrams fall back to <unk> when present,
    otherwise to the configured floor.
    """
    context = tuple(context)[-(m.order - 1) :] if m.order > 1 else ()
    if context:
        entry = m.tables[len(context)].get(context + (w,))
        if entry is not None:
            return entry[0]
        return _backoff_weight(m, context) + ngram_logprob(m, context[1:], w)
    entry = m.tables[0].get((w,))
    if entry is not None:
        return entry[0]
    unk = m.tables[0].get((UNK,))
    return unk[0] if unk is not None else m.unk_log10


def score_sentence(m: ArpaModel, words: list[str]) -> float:
    """log10 probability of the word sequence framed by <s> ... </s>."""
    history = [BOS]
    total = 0.0
    for w in list(words) + [EOS]:
        context = tuple(history[-(m.order - 1) :]) if m.order > 1 else ()
        total += ngram_logprob(m, context, w)
        history.append(w)
    return total

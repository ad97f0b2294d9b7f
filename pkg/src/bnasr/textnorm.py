"""Bengali transcript text processing.

Two stages share this module: transcript preprocessing before vocabulary
building (punctuation removal, whitespace canonicalization) and hypothesis
post-processing after decoding (script normalization plus sentence-final
danda).
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources

DANDA = "।"          # devanagari danda, also closes Bengali sentences
DOUBLE_DANDA = "॥"

# Fixed set: dandas, ASCII sentence punctuation, brackets, dash family,
# ellipsis and curly quotes.
PUNCTUATION = frozenset(
    "।॥,.?!;:\"'()[]{}"
    "-–—…‘’“”"
)

_WS_RUN = re.compile(r"\s+")


class RuleError(ValueError):
    """Raised for malformed rule files or non-converging rule sets."""


def strip_punct(s: str) -> str:
    """Remove punctuation, collapse whitespace runs to single spaces, trim."""
    cleaned = "".join(c for c in s if c not in PUNCTUATION)
    return _WS_RUN.sub(" ", cleaned).strip()


@dataclass(frozen=True)
class NormRules:
    """Ordered codepoint rewrite rules, optionally preceded by NFC.

    Each rule maps a match of at most 4 codepoints to a replacement
    (possibly empty, for removals).  Rules are applied in file order,
    left to right, repeatedly until a fixpoint.
    """

    rules: tuple[tuple[str, str], ...] = ()
    apply_canonical_composition: bool = True

    def __post_init__(self):
        for match, _ in self.rules:
            if not match:
                raise RuleError("rule match must be non-empty")
            if len(match) > 4:
                raise RuleError(f"rule match longer than 4 codepoints: {_format_rule_side(match)}")


def _parse_codepoints(text: str) -> str:
    text = text.strip()
    if not text:
        return ""
    chars = []
    for part in text.split(","):
        part = part.strip()
        if not re.fullmatch(r"U\+[0-9A-Fa-f]{4,6}", part):
            raise RuleError(f"bad codepoint token: {part!r}")
        chars.append(chr(int(part[2:], 16)))
    return "".join(chars)


def _format_rule_side(s: str) -> str:
    return ",".join(f"U+{ord(c):04X}" for c in s)


def parse_rules(text: str, apply_canonical_composition: bool = True) -> NormRules:
    """Parse a rule file: one `U+XXXX[,U+XXXX...] -> [U+XXXX[,U+XXXX...]]` per line.

    `#` starts a comment; an empty right-hand side deletes the match.
    """
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise RuleError(f"line {lineno}: missing '->'")
        lhs, rhs = line.split("->", 1)
        try:
            match = _parse_codepoints(lhs)
            replace = _parse_codepoints(rhs)
        except RuleError as e:
            raise RuleError(f"line {lineno}: {e}") from None
        if not match:
            raise RuleError(f"line {lineno}: empty match")
        rules.append((match, replace))
    return NormRules(rules=tuple(rules), apply_canonical_composition=apply_canonical_composition)


def load_rules(path: str) -> NormRules:
    with open(path, encoding="utf-8") as f:
        return parse_rules(f.read())


def default_rules() -> NormRules:
    """The Bengali rule table shipped with the package."""
    text = resources.files("bnasr").joinpath("data/bengali_norm_rules.txt").read_text("utf-8")
    return parse_rules(text)


def normalize_bn(s: str, rules: NormRules | None = None) -> str:
    """Normalize Bengali text: NFC (if enabled), then rewrite rules to fixpoint.

    The pass budget is len(s) * len(rules); a rule set still rewriting past
    that bound raises RuleError naming the offending rule.
    """
    if rules is None:
        rules = default_rules()
    if rules.apply_canonical_composition:
        s = unicodedata.normalize("NFC", s)
    if not rules.rules:
        return s
    max_passes = max(1, len(s)) * len(rules.rules)
    for _ in range(max_passes):
        changed_by = None
        for match, replace in rules.rules:
            rewritten = s.replace(match, replace)
            if rewritten != s:
                changed_by = (match, replace)
                s = rewritten
        if changed_by is None:
            return s
    match, replace = changed_by
    raise RuleError(
        "rules did not converge within "
        f"{max_passes} passes; last active rule: "
        f"{_format_rule_side(match)} -> {_format_rule_side(replace)}"
    )


def append_danda(s: str) -> str:
    """Append U+0964 unless the string is empty or already danda-terminated."""
    if not s or s.endswith(DANDA) or s.endswith(DOUBLE_DANDA):
        return s
    return s + DANDA

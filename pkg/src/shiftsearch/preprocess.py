"""Tokenization, token classification, normalization, and dictionary-based context expansion.

Context expansion injects the human-readable description of a functional
location into the text right before the location ID, so that a query phrased
with descriptions ("Reaktor Leckage") can match records that only mention the
coded ID ("R105.12 Leckage").
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping

if TYPE_CHECKING:
    from .corpus import FunctionalLocationEntry

# A token is a maximal run of letters/digits; the characters . - _ / stay
# inside a token only when flanked by alphanumerics on both sides.
_TOKEN_RE = re.compile(r"[^\W_]+(?:[.\-_/][^\W_]+)*", re.UNICODE)

# Minimal built-in German function-word list: articles, prepositions and
# coordinating conjunctions. Matching is case-insensitive.
GERMAN_STOPWORDS = frozenset(
    """
    der die das dem den des
    ein eine einem einen einer eines
    ab an am ans auf aus bei bis durch fuer für gegen hinter in im ins
    mit nach neben ohne seit über ueber um unter vom von vor zu zum zur zwischen
    und oder aber denn sondern sowie
    """.split()
)


class TokenKind(str, Enum):
    WORD = "word"
    CODE = "code"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class Token:
    """One token with its original surface, normalized form and source span."""

    surface: str
    normalized: str
    kind: TokenKind
    start: int
    end: int


def classify_token(surface: str) -> TokenKind:
    """Classify a token surface: digit+letter -> CODE, digit only -> NUMERIC, else WORD."""
    if not surface:
        raise ValueError("cannot classify an empty token")
    has_digit = any(c.isdigit() for c in surface)
    if not has_digit:
        return TokenKind.WORD
    if any(c.isalpha() for c in surface):
        return TokenKind.CODE
    return TokenKind.NUMERIC


def tokenize(text: str) -> list[Token]:
    """Split text into tokens with ascending, non-overlapping source spans.

    Leading/trailing punctuation never belongs to a token, so shortenings such
    as "Temp.Schwank." tokenize to "Temp.Schwank" (the internal dot survives).
    """
    out = []
    for m in _TOKEN_RE.finditer(text):
        s = m.group()
        out.append(Token(s, s, classify_token(s), m.start(), m.end()))
    return out


@dataclass(frozen=True)
class NormalizationConfig:
    """Stopword filtering and lemma mapping applied after tokenization.

    Stopword comparison is case-insensitive. CODE and NUMERIC tokens are never
    stopword-filtered or lemmatized.
    """

    stopword_set: frozenset[str] = GERMAN_STOPWORDS
    lemma_table: Mapping[str, str] = field(default_factory=dict)
    preserve_case: bool = True

    def __post_init__(self) -> None:
        folded = frozenset(w.casefold() for w in self.stopword_set)
        object.__setattr__(self, "_stopwords_folded", folded)

    def is_stopword(self, surface: str) -> bool:
        return surface.casefold() in self._stopwords_folded  # type: ignore[attr-defined]


def normalize(tokens: Iterable[Token], config: NormalizationConfig) -> list[Token]:
    """Drop stopwords and apply the lemma table to WORD tokens; surfaces are kept."""
    out = []
    for tok in tokens:
        if tok.kind is not TokenKind.WORD:
            out.append(tok)
            continue
        if config.is_stopword(tok.surface):
            continue
        lemma = config.lemma_table.get(tok.surface, tok.surface)
        if not config.preserve_case:
            lemma = lemma.lower()
        if lemma != tok.normalized:
            tok = dataclasses.replace(tok, normalized=lemma)
        out.append(tok)
    return out


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file: one term per line, UTF-8, '#' starts a comment."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        term = line.split("#", 1)[0].strip()
        if term:
            words.add(term)
    return frozenset(words)


def load_lemma_table(path: str | Path, delimiter: str = "\t") -> dict[str, str]:
    """Read a two-column surface->lemma file."""
    table = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split(delimiter)
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ValueError(f"lemma table line {lineno}: expected 'surface{delimiter}lemma'")
        table[parts[0]] = parts[1]
    return table


class LocationLookup:
    """Case-folded lookup over functional-location entries.

    When several entries share a short ID, the first one wins.
    """

    def __init__(self, entries: Iterable["FunctionalLocationEntry"]):
        self.by_long: dict[str, "FunctionalLocationEntry"] = {}
        self.by_short: dict[str, "FunctionalLocationEntry"] = {}
        for e in entries:
            self.by_long.setdefault(e.long_id.casefold(), e)
            self.by_short.setdefault(e.short_id.casefold(), e)

    def __len__(self) -> int:
        return len(self.by_long)


def _as_lookup(dictionary) -> LocationLookup:
    if isinstance(dictionary, LocationLookup):
        return dictionary
    return LocationLookup(dictionary)


@dataclass(frozen=True)
class ExpansionReport:
    """Per-record outcome of context expansion."""

    record_id: str
    missing_attributes: tuple[str, ...] = ()
    insertions: int = 0


def _expand_text(text: str, lookup: LocationLookup) -> tuple[str, int]:
    """Insert location descriptions before in-text ID mentions.

    Short IDs gain "description", long IDs gain "description short_id". The
    insertion is skipped when the immediately preceding tokens already spell
    the insertion, which makes the operation idempotent.
    """
    tokens = tokenize(text)
    folded = [t.surface.casefold() for t in tokens]
    insertions: list[tuple[int, str]] = []
    for i, tok in enumerate(tokens):
        key = folded[i]
        entry = lookup.by_short.get(key)
        if entry is not None:
            inserted = entry.description
        else:
            entry = lookup.by_long.get(key)
            if entry is None:
                continue
            inserted = f"{entry.description} {entry.short_id}"
        needed = [t.surface.casefold() for t in tokenize(inserted)]
        if needed and folded[max(0, i - len(needed)):i] == needed:
            continue
        insertions.append((tok.start, inserted))
    for pos, inserted in reversed(insertions):
        text = text[:pos] + inserted + " " + text[pos:]
    return text, len(insertions)


def _contains_phrase(text: str, phrase: str) -> bool:
    hay = [t.surface.casefold() for t in tokenize(text)]
    needle = [t.surface.casefold() for t in tokenize(phrase)]
    if not needle:
        return True
    for i in range(len(hay) - len(needle) + 1):
        if hay[i:i + len(needle)] == needle:
            return True
    return False


def expand_record(record, dictionary) -> tuple["object", ExpansionReport]:
    """Context-expand one record against the functional-location dictionary.

    Attribute long IDs prepend "description short_id" to the title; in-text ID
    mentions gain their description right before the occurrence. Returns the
    expanded record plus a report listing attribute IDs missing from the
    dictionary. Original characters are never removed and re-expanding the
    result inserts nothing new.
    """
    lookup = _as_lookup(dictionary)
    title, n_title = _expand_text(record.title, lookup)
    body = []
    n_body = 0
    for name, text in record.body:
        new_text, n = _expand_text(text, lookup)
        body.append((name, new_text))
        n_body += n

    missing = []
    prefix_parts = []
    seen_attrs = set()
    for long_id in record.attributes:
        if long_id in seen_attrs:
            continue
        seen_attrs.add(long_id)
        entry = lookup.by_long.get(long_id.casefold())
        if entry is None:
            missing.append(long_id)
            continue
        phrase = f"{entry.description} {entry.short_id}"
        if _contains_phrase(title, phrase) or any(_contains_phrase(p, phrase) for p in prefix_parts):
            continue
        prefix_parts.append(phrase)
    if prefix_parts:
        joined = " ".join(prefix_parts)
        title = f"{joined} {title}" if title else joined

    expanded = dataclasses.replace(record, title=title, body=tuple(body))
    report = ExpansionReport(
        record_id=record.id,
        missing_attributes=tuple(missing),
        insertions=n_title + n_body + len(prefix_parts),
    )
    return expanded, report


def expand_query_text(text: str, dictionary) -> str:
    """Apply the in-text expansion rule of expand_record to a query string."""
    expanded, _ = _expand_text(text, _as_lookup(dictionary))
    return expanded

"""Record collections and functional-location dictionaries: loading, validation,
profiling, and a seeded synthetic benchmark generator.

File ingestion replaces any live database: collections travel as delimited
tables (default tab) or JSON lines, dictionaries as delimited tables with a
long_id/short_id/description header.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .preprocess import TokenKind, classify_token, tokenize

DELIMITED = "delimited-table"
JSON_LINES = "json-lines"
_FORMAT_ALIASES = {
    DELIMITED: DELIMITED,
    "tsv": DELIMITED,
    JSON_LINES: JSON_LINES,
    "jsonl": JSON_LINES,
}

_FIXED_COLUMNS = ("id", "timestamp", "title", "attributes")


class CorpusError(ValueError):
    """Raised when a collection or dictionary file violates its contract."""


@dataclass(frozen=True)
class Record:
    """One semi-structured log entry.

    body holds named free-text fields in order; attributes are functional
    location long IDs attached to the record.
    """

    id: str
    timestamp: int
    attributes: tuple[str, ...] = ()
    title: str = ""
    body: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("record id must be non-empty")
        if self.timestamp < 0:
            raise CorpusError(f"invalid timestamp {self.timestamp!r} for record {self.id!r}")


@dataclass(frozen=True)
class FunctionalLocationEntry:
    """Dictionary row mapping a long location ID to its short ID and description."""

    long_id: str
    short_id: str
    description: str

    def __post_init__(self) -> None:
        if not self.long_id:
            raise CorpusError("long_id must be non-empty")
        if not self.short_id:
            raise CorpusError(f"short_id missing for {self.long_id!r}")
        if not self.description:
            raise CorpusError(f"description missing for {self.long_id!r}")


def record_text(record: Record) -> str:
    """Title and body fields joined into one text, empty parts skipped."""
    parts = [record.title] + [text for _, text in record.body]
    return " ".join(p for p in parts if p)


def _validate_unique_ids(records: Sequence[Record], rows: Sequence[int] | None = None) -> None:
    seen: dict[str, int] = {}
    for i, rec in enumerate(records):
        row = rows[i] if rows else i + 1
        if rec.id in seen:
            raise CorpusError(f"duplicate id {rec.id!r} (rows {seen[rec.id]} and {row})")
        seen[rec.id] = row


def _canonical_format(fmt: str) -> str:
    try:
        return _FORMAT_ALIASES[fmt]
    except KeyError:
        raise CorpusError(f"unknown corpus format {fmt!r}; use {DELIMITED!r} or {JSON_LINES!r}") from None


def _record_from_json(obj: dict, row: int) -> Record:
    try:
        body = tuple((str(name), str(text)) for name, text in obj.get("body", []))
        ts_raw = obj["timestamp"]
        if not isinstance(ts_raw, int) or isinstance(ts_raw, bool) or ts_raw < 0:
            raise CorpusError(f"row {row}: invalid timestamp {ts_raw!r}")
        return Record(
            id=str(obj["id"]),
            timestamp=ts_raw,
            attributes=tuple(str(a) for a in obj.get("attributes", [])),
            title=str(obj.get("title", "")),
            body=body,
        )
    except KeyError as exc:
        raise CorpusError(f"row {row}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CorpusError):
            raise
        raise CorpusError(f"row {row}: malformed record ({exc})") from None


def _parse_timestamp(raw: str, row: int) -> int:
    try:
        ts = int(raw)
    except ValueError:
        raise CorpusError(f"row {row}: invalid timestamp {raw!r}") from None
    if ts < 0:
        raise CorpusError(f"row {row}: invalid timestamp {raw!r}")
    return ts


def load_corpus(path: str | Path, format: str = JSON_LINES, delimiter: str = "\t") -> list[Record]:
    """Load and validate a record collection, preserving row order.

    Delimited files need a header with id, timestamp, title, attributes; every
    further column is a named body field. The attributes cell joins long IDs
    with semicolons.
    """
    fmt = _canonical_format(format)
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    records: list[Record] = []
    rows: list[int] = []

    if fmt == JSON_LINES:
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"row {lineno}: invalid JSON ({exc.msg})") from None
            records.append(_record_from_json(obj, lineno))
            rows.append(lineno)
    else:
        lines = text.splitlines()
        if not lines:
            raise CorpusError("empty file: missing header row")
        header = lines[0].split(delimiter)
        for col in _FIXED_COLUMNS:
            if col not in header:
                raise CorpusError(f"missing column {col!r} in header")
        idx = {name: header.index(name) for name in header}
        body_cols = [c for c in header if c not in _FIXED_COLUMNS]
        for lineno, line in enumerate(lines[1:], 2):
            if not line:
                continue
            cells = line.split(delimiter)
            if len(cells) != len(header):
                raise CorpusError(f"row {lineno}: expected {len(header)} cells, got {len(cells)}")
            attrs_cell = cells[idx["attributes"]]
            attributes = tuple(a for a in attrs_cell.split(";") if a) if attrs_cell else ()
            rec = Record(
                id=cells[idx["id"]] or _fail_empty_id(lineno),
                timestamp=_parse_timestamp(cells[idx["timestamp"]], lineno),
                attributes=attributes,
                title=cells[idx["title"]],
                body=tuple((c, cells[idx[c]]) for c in body_cols),
            )
            records.append(rec)
            rows.append(lineno)

    _validate_unique_ids(records, rows)
    return records


def _fail_empty_id(row: int) -> str:
    raise CorpusError(f"row {row}: record id must be non-empty")


def _record_to_json(rec: Record) -> str:
    obj = {
        "id": rec.id,
        "timestamp": rec.timestamp,
        "attributes": list(rec.attributes),
        "title": rec.title,
        "body": [[name, text] for name, text in rec.body],
    }
    return json.dumps(obj, ensure_ascii=False)


def save_corpus(
    records: Sequence[Record],
    path: str | Path,
    format: str = JSON_LINES,
    delimiter: str = "\t",
) -> None:
    """Write a collection so that load_corpus round-trips it exactly.

    The delimited format requires every record to share one body-field schema
    and rejects field values containing the delimiter or newlines.
    """
    fmt = _canonical_format(format)
    path = Path(path)
    if fmt == JSON_LINES:
        path.write_text("".join(_record_to_json(r) + "\n" for r in records), encoding="utf-8")
        return

    body_cols: list[str] | None = None
    for rec in records:
        cols = [name for name, _ in rec.body]
        if body_cols is None:
            body_cols = cols
        elif cols != body_cols:
            raise CorpusError(
                f"record {rec.id!r}: delimited format needs a uniform body schema "
                f"({cols} != {body_cols}); use json-lines instead"
            )
    body_cols = body_cols or []
    header = list(_FIXED_COLUMNS) + body_cols
    lines = [delimiter.join(header)]
    for rec in records:
        cells = [rec.id, str(rec.timestamp), rec.title, ";".join(rec.attributes)]
        cells += [text for _, text in rec.body]
        for cell in cells:
            if delimiter in cell or "\n" in cell or "\r" in cell:
                raise CorpusError(
                    f"record {rec.id!r}: value contains the delimiter or a newline; "
                    "use json-lines instead"
                )
        lines.append(delimiter.join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dictionary(path: str | Path, delimiter: str = "\t") -> list[FunctionalLocationEntry]:
    """Load a functional-location dictionary (header long_id/short_id/description)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CorpusError("empty dictionary file: missing header row")
    header = lines[0].split(delimiter)
    for col in ("long_id", "short_id", "description"):
        if col not in header:
            raise CorpusError(f"missing column {col!r} in dictionary header")
    idx = {name: header.index(name) for name in header}
    entries: list[FunctionalLocationEntry] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        cells = line.split(delimiter)
        if len(cells) != len(header):
            raise CorpusError(f"row {lineno}: expected {len(header)} cells, got {len(cells)}")
        try:
            entry = FunctionalLocationEntry(
                long_id=cells[idx["long_id"]],
                short_id=cells[idx["short_id"]],
                description=cells[idx["description"]],
            )
        except CorpusError as exc:
            raise CorpusError(f"row {lineno}: {exc}") from None
        if entry.long_id in seen:
            raise CorpusError(
                f"duplicate long_id {entry.long_id!r} (rows {seen[entry.long_id]} and {lineno})"
            )
        seen[entry.long_id] = lineno
        entries.append(entry)
    return entries


def save_dictionary(
    entries: Sequence[FunctionalLocationEntry], path: str | Path, delimiter: str = "\t"
) -> None:
    lines = [delimiter.join(("long_id", "short_id", "description"))]
    lines += [delimiter.join((e.long_id, e.short_id, e.description)) for e in entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class KindShares:
    """Fractions of WORD / CODE / NUMERIC tokens; zero everywhere for an empty corpus."""

    word: float = 0.0
    code: float = 0.0
    numeric: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {"word": self.word, "code": self.code, "numeric": self.numeric}


@dataclass(frozen=True)
class CorpusStats:
    """Char-length histogram and token-kind composition of a collection."""

    record_count: int
    bucket_width: int
    length_histogram: Mapping[int, int]
    token_kind_shares: KindShares


def corpus_stats(records: Sequence[Record], bucket_width: int = 100) -> CorpusStats:
    """Profile record lengths (concatenated title+body) and token-kind shares.

    Histogram keys are bucket starts (0, bucket_width, ...); only non-empty
    buckets appear.
    """
    if bucket_width < 1:
        raise ValueError("bucket_width must be >= 1")
    histogram: dict[int, int] = {}
    counts = {TokenKind.WORD: 0, TokenKind.CODE: 0, TokenKind.NUMERIC: 0}
    for rec in records:
        text = record_text(rec)
        bucket = (len(text) // bucket_width) * bucket_width
        histogram[bucket] = histogram.get(bucket, 0) + 1
        for tok in tokenize(text):
            counts[tok.kind] += 1
    total = sum(counts.values())
    if total:
        shares = KindShares(
            word=counts[TokenKind.WORD] / total,
            code=counts[TokenKind.CODE] / total,
            numeric=counts[TokenKind.NUMERIC] / total,
        )
    else:
        shares = KindShares()
    return CorpusStats(
        record_count=len(records),
        bucket_width=bucket_width,
        length_histogram=dict(sorted(histogram.items())),
        token_kind_shares=shares,
    )


# --------------------------------------------------------------------------
# Synthetic benchmark
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticBenchmark:
    """Seeded stand-in for a plant corpus: records, dictionary, queries, graded truth.

    Truth grades follow the two-level assessment scheme: every simulated
    assessor adds one vote when all query terms are covered anywhere in a
    record (literal, generated shortening, or coded location reference) and a
    second vote when the coverage falls inside a single field.
    """

    seed: int
    records: tuple[Record, ...]
    dictionary: tuple[FunctionalLocationEntry, ...]
    queries: tuple[tuple[str, str], ...]
    truth: Mapping[tuple[str, str], int]


# Word pools for generated records. Equipment nouns double as location
# descriptions, so description-based queries arise naturally.
EQUIPMENT_NOUNS = (
    "Reaktor", "Pumpe", "Ventil", "Kessel", "Kolonne", "Behälter",
    "Wärmetauscher", "Rührwerk", "Verdichter", "Zentrifuge", "Abscheider",
    "Vorlage",
)

# distinctive descriptions for part of the locations; these words occur
# nowhere else in the generated prose, so an expanded description token
# pinpoints records referencing that location
DISTINCT_DESCRIPTIONS = (
    "Abwasserbecken", "Notkühlsystem", "Fackelanlage", "Salzlager",
    "Neutralisation", "Brüdenwäscher", "Stickstoffstation", "Löschwassertank",
    "Granulattrockner", "Schlammpresse", "Abluftkamin", "Katalysatorbett",
    "Druckluftstation", "Siebmaschine", "Kristallisator", "Extruderkopf",
    "Waschturm", "Dekanter", "Elektrolyse", "Pelletpresse",
)

TOPIC_NOUNS = (
    "Leckage", "Dichtung", "Störung", "Wartung", "Reinigung", "Prüfung",
    "Austausch", "Reparatur", "Kalibrierung", "Messung", "Abweichung",
    "Verstopfung", "Überdruck", "Vibration", "Geräusch", "Korrosion",
    "Inspektion", "Spülung", "Entleerung", "Befüllung", "Probenahme",
    "Analyse", "Freigabe", "Sperrung", "Abschaltung", "Anfahren",
    "Dosierung", "Kühlwasser", "Schmierung", "Entlüftung", "Begehung",
    "Umstellung", "Nachfüllung", "Absicherung", "Erneuerung", "Undichtigkeit",
    "Überhitzung", "Verschleiß", "Blockade", "Fehlermeldung",
)

COMPOUND_PARTS = (
    ("Temperatur", "Schwankung"), ("Druck", "Abfall"), ("Füllstand", "Messung"),
    ("Sicherheit", "Ventil"), ("Kühlwasser", "Pumpe"), ("Dampf", "Leitung"),
    ("Motor", "Lager"), ("Dichtung", "Wechsel"), ("Filter", "Reinigung"),
    ("Drehzahl", "Regelung"), ("Niveau", "Sonde"), ("Probe", "Entnahme"),
    ("Rühr", "Geschwindigkeit"), ("Heizung", "Ausfall"), ("Dosier", "Anlage"),
    ("Konzentration", "Messung"), ("Vakuum", "Störung"), ("Kondensat", "Ableiter"),
    ("Umwälz", "Pumpe"), ("Sicherung", "Kasten"),
)

MODIFIERS = (
    "defekt", "undicht", "erneuert", "geprüft", "behoben", "gereinigt",
    "ausgetauscht", "blockiert", "gemeldet", "beobachtet", "dokumentiert",
    "abgeschlossen", "gestartet", "gestoppt", "auffällig",
)

FILLERS = (
    "Anlage", "Betrieb", "Schicht", "Bereich", "Produktion", "Kontrolle",
    "System", "Protokoll", "Meldung", "Auftrag", "Übergabe", "Rundgang",
    "Bericht", "Hinweis", "Zustand", "heute", "erneut", "weiterhin",
    "planmäßig", "kurzfristig",
)

_FIELD_NAMES = ("ereignis", "massnahme")


def make_shortening(word: str) -> str:
    """Deterministic truncation-plus-dot shortening, e.g. Leckage -> Lecka."""
    cut = 4 + (len(word) % 3)
    if cut >= len(word):
        return word + "."
    return word[:cut] + "."


def compound_word(parts: tuple[str, str]) -> str:
    return parts[0] + parts[1].lower()


def compound_shortening(parts: tuple[str, str]) -> str:
    a, b = parts
    return make_shortening(a) + make_shortening(b)


def _shortening_token(term: str) -> str:
    """Token form of a shortening (trailing dot is stripped by the tokenizer)."""
    compact = _COMPOUND_SHORT.get(term)
    if compact is None:
        compact = make_shortening(term)
    return compact.rstrip(".")


_COMPOUND_SHORT = {compound_word(p): compound_shortening(p) for p in COMPOUND_PARTS}


def _make_locations(rng: random.Random, n_locations: int) -> list[FunctionalLocationEntry]:
    prefixes = "RPVKBWTZ"
    entries: list[FunctionalLocationEntry] = []
    used: set[str] = set()
    while len(entries) < n_locations:
        short = f"{rng.choice(prefixes)}{rng.randint(100, 999)}"
        if rng.random() < 0.5:
            short += f".{rng.randint(1, 99):02d}"
        if short in used:
            continue
        used.add(short)
        i = len(entries)
        if i % 2 == 0:
            desc = EQUIPMENT_NOUNS[(i // 2) % len(EQUIPMENT_NOUNS)]
        else:
            desc = DISTINCT_DESCRIPTIONS[(i // 2) % len(DISTINCT_DESCRIPTIONS)]
        # Long-ID surface syntax is an invented convention (prefix + short ID).
        entries.append(FunctionalLocationEntry(f"PLANT1-{short}", short, desc))
    return entries


def _field_tokens(rng: random.Random, n: int, plain: bool = False) -> list[str]:
    # plain drafts avoid equipment nouns so they cannot cover a location
    # description by accident
    toks = []
    for _ in range(n):
        roll = rng.random()
        if roll < 0.45:
            toks.append(rng.choice(FILLERS))
        elif roll < 0.70:
            toks.append(rng.choice(MODIFIERS))
        elif roll < 0.82:
            toks.append(rng.choice(("und", "im", "an", "der", "nach")))
        elif roll < 0.92 and not plain:
            toks.append(rng.choice(EQUIPMENT_NOUNS))
        else:
            toks.append(str(rng.randint(2, 9500)) if rng.random() < 0.6
                        else f"{rng.randint(10, 99)}.{rng.randint(0, 9)}")
    return toks


@dataclass
class _DraftRecord:
    title: list[str] = field(default_factory=list)
    fields: list[list[str]] = field(default_factory=list)
    attributes: list[str] = field(default_factory=list)


def _assemble(draft: _DraftRecord, rec_id: str, timestamp: int) -> Record:
    body = tuple(
        (_FIELD_NAMES[i % len(_FIELD_NAMES)], " ".join(toks))
        for i, toks in enumerate(draft.fields)
    )
    return Record(
        id=rec_id,
        timestamp=timestamp,
        attributes=tuple(draft.attributes),
        title=" ".join(draft.title),
        body=body,
    )


def _new_draft(rng: random.Random, plain: bool = False) -> _DraftRecord:
    draft = _DraftRecord()
    draft.title = _field_tokens(rng, rng.randint(2, 4), plain)
    for _ in range(rng.randint(1, 2)):
        draft.fields.append(_field_tokens(rng, rng.randint(4, 10), plain))
    return draft


def _place(rng: random.Random, draft: _DraftRecord, tokens: list[str], same_field: bool) -> None:
    """Insert coverage tokens, either into one field (phrase level) or spread out."""
    targets = list(range(len(draft.fields)))
    if same_field or len(targets) == 1:
        f = rng.choice(targets)
        for tok in tokens:
            draft.fields[f].insert(rng.randint(0, len(draft.fields[f])), tok)
    else:
        for tok in tokens:
            f = rng.choice(targets)
            draft.fields[f].insert(rng.randint(0, len(draft.fields[f])), tok)


def generate_synthetic_corpus(
    seed: int,
    n_records: int,
    n_locations: int,
    n_queries: int | None = None,
) -> SyntheticBenchmark:
    """Deterministically generate a benchmark collection with graded truth.

    Records mix full words, truncation-plus-dot shortenings, functional
    location short/long IDs, and numeric terms. Queries come in four flavors:
    plain word pairs, description-based location queries, shortening-heavy
    topics (relevant records carry only the shortened form), and code queries.
    """
    if n_records < 10:
        raise ValueError("n_records must be >= 10")
    if n_locations < 2:
        raise ValueError("n_locations must be >= 2")
    rng = random.Random(seed)
    if n_queries is None:
        n_queries = max(3, min(50, n_records // 10))

    locations = _make_locations(rng, n_locations)
    by_desc: dict[str, list[FunctionalLocationEntry]] = {}
    for loc in locations:
        by_desc.setdefault(loc.description.casefold(), []).append(loc)
    distinct_locs = [
        loc for loc in locations if loc.description in DISTINCT_DESCRIPTIONS
    ] or list(locations)

    rare_pool = [compound_word(p) for p in COMPOUND_PARTS] + list(TOPIC_NOUNS)
    rng.shuffle(rare_pool)
    long_rares = [w for w in rare_pool if len(_shortening_token(w)) < len(w)]
    common_pool = list(EQUIPMENT_NOUNS[: max(4, len(EQUIPMENT_NOUNS) // 2)])

    # q_kinds cycle: A word pair, B location description, C shortening-only,
    # D code query.
    pattern = "AABBCABCDA"
    q_kinds = [pattern[i % len(pattern)] for i in range(n_queries)]

    budget = int(n_records * 0.6)
    drafts: list[tuple[_DraftRecord, int]] = []  # (draft, query index or -1)
    queries: list[tuple[str, str]] = []
    query_terms: list[list[str]] = []

    rare_iter = iter(rare_pool * ((n_queries // len(rare_pool)) + 1))
    long_iter = iter(long_rares * ((n_queries // max(1, len(long_rares))) + 1))

    for qi, kind in enumerate(q_kinds):
        remaining_queries = n_queries - qi
        per_query = max(1, (budget - len(drafts)) // remaining_queries)
        n_rel = min(rng.randint(4, 7), per_query)

        common = rng.choice(common_pool)
        if kind == "C":
            rare = next(long_iter)
        else:
            rare = next(rare_iter)
        if kind == "B":
            loc = distinct_locs[qi % len(distinct_locs)]
        else:
            loc = locations[qi % len(locations)]

        if kind == "D":
            terms = [loc.short_id, rng.choice(MODIFIERS)]
        elif kind == "B":
            terms = [loc.description, rare]
        else:
            terms = [rare, common]
        queries.append((f"q{qi + 1:02d}", " ".join(terms)))
        query_terms.append(terms)

        rare_short = _shortening_token(rare)
        common_short = _shortening_token(common)
        no_full_literal = kind == "A" and qi % 3 != 0

        for d in range(n_rel):
            draft = _new_draft(rng)
            same_field = rng.random() < 0.6
            if kind == "A":
                if no_full_literal:
                    mode = "ii" if d % 2 == 0 else "iii"
                else:
                    mode = ("i", "ii", "iii", "iii", "ii", "i", "iii")[d % 7]
                if mode == "i":
                    _place(rng, draft, [rare, common], same_field)
                elif mode == "ii":
                    _place(rng, draft, [rare, common_short], same_field)
                else:
                    _place(rng, draft, [rare_short, common], same_field)
            elif kind == "B":
                literal_desc = qi % 3 == 0 and d == 0
                rare_form = rare_short if d % 3 == 1 else rare
                if literal_desc:
                    _place(rng, draft, [loc.description, rare_form], same_field)
                elif d % 2 == 0:
                    _place(rng, draft, [loc.short_id, rare_form], same_field)
                else:
                    draft.attributes.append(loc.long_id)
                    _place(rng, draft, [rare_form], same_field)
            elif kind == "C":
                common_form = common if d % 2 else common_short
                _place(rng, draft, [rare_short, common_form], same_field)
            else:  # D
                modifier = terms[1]
                if d % 5 == 3:
                    draft.attributes.append(loc.long_id)
                    _place(rng, draft, [modifier], same_field)
                else:
                    _place(rng, draft, [loc.short_id, modifier], same_field)
            drafts.append((draft, qi))

        if kind == "B":
            # distractors sharing the rare term but lacking any location
            # reference: without expansion the rare term alone cannot
            # separate relevant records from these
            for _ in range(3 + qi % 3):
                if len(drafts) >= n_records:
                    break
                draft = _new_draft(rng, plain=True)
                _place(rng, draft, [rare], True)
                drafts.append((draft, -1))

    while len(drafts) < n_records:
        draft = _new_draft(rng)
        if rng.random() < 0.10:
            _place(rng, draft, [rng.choice(rare_pool)], True)
        if rng.random() < 0.20:
            _place(rng, draft, [rng.choice(locations).short_id], True)
        if rng.random() < 0.15:
            draft.attributes.append(rng.choice(locations).long_id)
        drafts.append((draft, -1))

    rng.shuffle(drafts)
    offsets = rng.sample(range(n_records * 1000), n_records)
    width = max(4, len(str(n_records)))
    records = tuple(
        _assemble(draft, f"r{i + 1:0{width}d}", 1_700_000_000 + offsets[i])
        for i, (draft, _) in enumerate(drafts)
    )

    truth = _grade_truth(records, query_terms, queries, by_desc, locations)
    return SyntheticBenchmark(
        seed=seed,
        records=records,
        dictionary=tuple(locations),
        queries=tuple(queries),
        truth=truth,
    )


def _coverage_sets(record: Record) -> list[set[str]]:
    """Case-folded token sets per field; attributes fold into the title set."""
    sets = []
    title_set = {t.surface.casefold() for t in tokenize(record.title)}
    title_set.update(a.casefold() for a in record.attributes)
    sets.append(title_set)
    for _, text in record.body:
        sets.append({t.surface.casefold() for t in tokenize(text)})
    return sets


def _term_covered(
    term: str,
    tokens: set[str],
    by_desc: Mapping[str, list[FunctionalLocationEntry]],
    by_short: Mapping[str, FunctionalLocationEntry],
) -> bool:
    folded = term.casefold()
    if folded in tokens:
        return True
    if _shortening_token(term).casefold() in tokens:
        return True
    for loc in by_desc.get(folded, ()):
        if loc.short_id.casefold() in tokens or loc.long_id.casefold() in tokens:
            return True
    loc = by_short.get(folded)
    if loc is not None and loc.long_id.casefold() in tokens:
        return True
    return False


def _grade_truth(
    records: Sequence[Record],
    query_terms: Sequence[list[str]],
    queries: Sequence[tuple[str, str]],
    by_desc: Mapping[str, list[FunctionalLocationEntry]],
    locations: Sequence[FunctionalLocationEntry],
) -> dict[tuple[str, str], int]:
    """Apply the generation rules as two deterministic assessors would.

    Both assessors vote term-level relevant when every query term is covered
    anywhere, and phrase-level relevant when one field covers all terms, so
    grades land in {0, 2, 4}.
    """
    by_short = {loc.short_id.casefold(): loc for loc in locations}
    truth: dict[tuple[str, str], int] = {}
    for rec in records:
        field_sets = _coverage_sets(rec)
        all_tokens = set().union(*field_sets)
        for (query_id, _), terms in zip(queries, query_terms):
            if not all(_term_covered(t, all_tokens, by_desc, by_short) for t in terms):
                continue
            grade = 2
            if any(
                all(_term_covered(t, fs, by_desc, by_short) for t in terms)
                for fs in field_sets
            ):
                grade = 4
            truth[(query_id, rec.id)] = grade
    return truth

"""Publication records, institution geodata and per-institution statistics.

Publications arrive as line-delimited JSON, one object per line::

    {"id": "p1", "year": 2015, "field": "pharma", "citations": 3,
     "altmetrics": 0, "affiliations": [["a", true], ["b", false]]}

Institutions arrive as CSV with the header ``id,name,lat,lon,country``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import TextIO

from .errors import InputError

DROP_UNKNOWN = "unknown-institution"
DROP_SINGLE = "single-institution"
DROP_NO_CORRESPONDING = "no-corresponding"


@dataclass(frozen=True)
class Institution:
    id: str
    name: str
    lat: float
    lon: float
    country: str

    def __post_init__(self):
        if not self.id:
            raise InputError("institution id must be non-empty")
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise InputError(f"institution {self.id!r}: latitude {self.lat} outside [-90, 90]")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise InputError(f"institution {self.id!r}: longitude {self.lon} outside [-180, 180]")
        if not self.country:
            raise InputError(f"institution {self.id!r}: empty country code")


def collapse_affiliations(affiliations: Iterable[tuple[str, bool]]) -> tuple[tuple[str, bool], ...]:
    """Merge repeated institutions, OR-ing their corresponding flags.

    First-appearance order is kept.
    """
    merged: dict[str, bool] = {}
    for inst, corresponding in affiliations:
        merged[inst] = merged.get(inst, False) or bool(corresponding)
    return tuple(merged.items())


@dataclass(frozen=True)
class PublicationRecord:
    id: str
    year: int
    field: str
    citations: int
    altmetrics: int
    affiliations: tuple[tuple[str, bool], ...]

    def __post_init__(self):
        object.__setattr__(self, "affiliations", collapse_affiliations(self.affiliations))

    @property
    def institutions(self) -> tuple[str, ...]:
        return tuple(inst for inst, _ in self.affiliations)

    @property
    def leaders(self) -> tuple[str, ...]:
        return tuple(inst for inst, corresponding in self.affiliations if corresponding)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "year": self.year,
            "field": self.field,
            "citations": self.citations,
            "altmetrics": self.altmetrics,
            "affiliations": [[inst, flag] for inst, flag in self.affiliations],
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> PublicationRecord:
        if not isinstance(obj, Mapping):
            raise InputError("record must be a JSON object")
        missing = [k for k in ("id", "year", "field", "citations", "altmetrics", "affiliations") if k not in obj]
        if missing:
            raise InputError(f"missing keys: {', '.join(missing)}")
        rid = obj["id"]
        if not isinstance(rid, str) or not rid:
            raise InputError("id must be a non-empty string")
        for key in ("year", "citations", "altmetrics"):
            if not _is_int(obj[key]):
                raise InputError(f"{key} must be an integer")
        for key in ("citations", "altmetrics"):
            if obj[key] < 0:
                raise InputError(f"{key} must be non-negative")
        if not isinstance(obj["field"], str):
            raise InputError("field must be a string")
        raw = obj["affiliations"]
        if not isinstance(raw, list) or not raw:
            raise InputError("affiliations must be a non-empty array")
        affiliations = []
        for entry in raw:
            if (
                not isinstance(entry, (list, tuple))
                or len(entry) != 2
                or not isinstance(entry[0], str)
                or not entry[0]
                or not isinstance(entry[1], bool)
            ):
                raise InputError(f"bad affiliation entry {entry!r}; expected [institution_id, is_corresponding]")
            affiliations.append((entry[0], entry[1]))
        return cls(rid, obj["year"], obj["field"], obj["citations"], obj["altmetrics"], tuple(affiliations))


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class ParseError:
    line: int
    message: str


def parse_publications(stream: TextIO | str) -> tuple[list[PublicationRecord], list[ParseError]]:
    """Parse line-delimited publication records.

    Blank lines are skipped. A malformed line produces a :class:`ParseError`
    (1-based line number) and parsing continues with the next line.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    records: list[PublicationRecord] = []
    errors: list[ParseError] = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(ParseError(lineno, f"parse failure: {exc.msg}"))
            continue
        try:
            records.append(PublicationRecord.from_dict(obj))
        except InputError as exc:
            errors.append(ParseError(lineno, str(exc)))
    return records, errors


def serialize_publications(records: Iterable[PublicationRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), separators=(",", ":")) + "\n" for r in records)


def load_institutions(stream: TextIO | str) -> dict[str, Institution]:
    """Read the institutions CSV into an id-keyed table.

    Raises :class:`InputError` on a bad header, a malformed row or a
    duplicated id.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return {}
    if [h.strip() for h in header] != ["id", "name", "lat", "lon", "country"]:
        raise InputError(f"institutions header must be id,name,lat,lon,country (got {','.join(header)})")
    table: dict[str, Institution] = {}
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 5:
            raise InputError(f"institutions line {lineno}: expected 5 columns, got {len(row)}")
        iid, name, lat, lon, country = (cell.strip() for cell in row)
        try:
            inst = Institution(iid, name, float(lat), float(lon), country)
        except ValueError as exc:
            raise InputError(f"institutions line {lineno}: {exc}") from exc
        if iid in table:
            raise InputError(f"institutions line {lineno}: duplicate id {iid!r}")
        table[iid] = inst
    return table


def dump_institutions(table: Mapping[str, Institution]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "name", "lat", "lon", "country"])
    for inst in table.values():
        writer.writerow([inst.id, inst.name, repr(inst.lat), repr(inst.lon), inst.country])
    return buf.getvalue()


@dataclass
class ValidationReport:
    record_count: int
    dropped: list[tuple[str, str]] = field(default_factory=list)
    distinct_institutions: int = 0

    @property
    def accepted_count(self) -> int:
        return self.record_count - len(self.dropped)


def drop_reason(record: PublicationRecord, institutions: Mapping[str, Institution]) -> str | None:
    if any(inst not in institutions for inst in record.institutions):
        return DROP_UNKNOWN
    if len(record.institutions) < 2:
        return DROP_SINGLE
    if not record.leaders:
        return DROP_NO_CORRESPONDING
    return None


def validate_corpus(
    records: Iterable[PublicationRecord], institutions: Mapping[str, Institution]
) -> tuple[list[PublicationRecord], ValidationReport]:
    """Keep records with >= 2 known institutions and a corresponding affiliation.

    Every other record lands in ``report.dropped`` with the first failing
    reason, checked in the order unknown, single, no-corresponding.
    """
    accepted: list[PublicationRecord] = []
    dropped: list[tuple[str, str]] = []
    seen: set[str] = set()
    count = 0
    for record in records:
        count += 1
        reason = drop_reason(record, institutions)
        if reason is None:
            accepted.append(record)
            seen.update(record.institutions)
        else:
            dropped.append((record.id, reason))
    return accepted, ValidationReport(count, dropped, len(seen))


def filter_records(
    records: Iterable[PublicationRecord],
    years: tuple[int, int] | None = None,
    field_name: str | None = None,
) -> list[PublicationRecord]:
    out = []
    for r in records:
        if years is not None and not (years[0] <= r.year <= years[1]):
            continue
        if field_name is not None and r.field != field_name:
            continue
        out.append(r)
    return out


@dataclass(frozen=True)
class InstitutionStats:
    institution_id: str
    publication_count: int
    citation_list: tuple[int, ...]
    altmetrics_list: tuple[int, ...]


def institution_stats(records: Iterable[PublicationRecord]) -> dict[str, InstitutionStats]:
    citations: dict[str, list[int]] = {}
    altmetrics: dict[str, list[int]] = {}
    for record in records:
        for inst in record.institutions:
            citations.setdefault(inst, []).append(record.citations)
            altmetrics.setdefault(inst, []).append(record.altmetrics)
    return {
        inst: InstitutionStats(inst, len(citations[inst]), tuple(citations[inst]), tuple(altmetrics[inst]))
        for inst in sorted(citations)
    }

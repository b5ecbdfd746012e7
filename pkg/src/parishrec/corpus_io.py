"""Register and export documents: XML (canonical interchange) and JSONL mirror.

Schema version 1. A register document is `<register>` -> `<page>` ->
`<line points=".." text="..">` with `<entity tag start end>` children, plus
`<act class="start|center|end|full">` block elements referencing line ids.
An export document carries merged acts with their Act_Class fragments,
Act_Type, slotted fields, and validity status, with a recomputed summary.

Writers are deterministic: same document, same bytes. Acts are ordered by id;
pages and lines keep scan order, which is semantic. All text is UTF-8 and is
NFC-normalized on read.
"""
from __future__ import annotations

import io
import json
import unicodedata
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .model import (Act, ActFragment, Entity, FieldValue, PersonName, Polygon,
                    RecognizedPage, StructuredDate, StructuredRecord, TextLine,
                    ValidityStatus, validate_page)

SCHEMA_VERSION = "1"


class CorpusIOError(ValueError):
    pass


class ParseError(CorpusIOError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(CorpusIOError):
    """Structural violations; carries at most the first 20."""

    def __init__(self, violations):
        self.violations = list(violations)[:20]
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class RegisterDocument:
    register_id: str
    pages: tuple[RecognizedPage, ...]
    fragments: tuple[ActFragment, ...] = ()
    parish: str | None = None
    religion: str | None = None
    language_hint: str = "unset"
    extensions: dict = field(default_factory=dict)

    def __init__(self, register_id, pages, fragments=(), parish=None, religion=None,
                 language_hint="unset", extensions=None):
        object.__setattr__(self, "register_id", register_id)
        object.__setattr__(self, "pages", tuple(pages))
        object.__setattr__(self, "fragments", tuple(fragments))
        object.__setattr__(self, "parish", parish)
        object.__setattr__(self, "religion", religion)
        object.__setattr__(self, "language_hint", language_hint)
        object.__setattr__(self, "extensions", dict(extensions or {}))


@dataclass(frozen=True)
class ExportDocument:
    register_id: str
    acts: tuple[tuple[Act, StructuredRecord], ...]
    summary: dict
    config_hash: str = ""

    def __init__(self, register_id, acts, summary=None, config_hash=""):
        object.__setattr__(self, "register_id", register_id)
        object.__setattr__(self, "acts", tuple(acts))
        object.__setattr__(self, "config_hash", config_hash)
        computed = compute_summary(self.acts)
        if summary is not None and summary != computed:
            raise SchemaError([f"summary mismatch: stored {summary}, recomputed {computed}"])
        object.__setattr__(self, "summary", computed)


def compute_summary(acts) -> dict:
    by_type = {t: 0 for t in ("birth", "death", "marriage", "undefined")}
    by_status = {s: 0 for s in ("valid", "invalid", "fusion", "special_case", "pending")}
    for act, record in acts:
        by_type[act.act_type] += 1
        by_status[record.status.status] += 1
    return {"acts_by_type": by_type, "records_by_status": by_status}


# ---------------------------------------------------------------------------
# shared encoding helpers

def _nfc(s: str) -> str:
    return unicodedata.normalize("NFC", s)


def _points_attr(polygon: Polygon) -> str:
    return " ".join(f"{_num(x)},{_num(y)}" for x, y in polygon.points)


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(v)


def _parse_points(attr: str) -> Polygon:
    pts = []
    for pair in attr.split():
        x, y = pair.split(",")
        pts.append((float(x), float(y)))
    return Polygon(pts)


def _xml_safe(text: str, context: str) -> str:
    for ch in text:
        code = ord(ch)
        if code < 0x20 and ch not in "\t\n\r":
            raise CorpusIOError(f"{context}: unrepresentable character U+{code:04X}")
    return text


def standardized_to_obj(value) -> object:
    if value is None:
        return None
    if isinstance(value, StructuredDate):
        return {"kind": "date", "year": value.year, "month": value.month,
                "day": value.day, "relative_anchor": value.relative_anchor}
    if isinstance(value, PersonName):
        return {"kind": "name", "first": list(value.first_names),
                "last": list(value.last_names), "corrected": value.corrected,
                "candidates": [[n, s] for n, s in value.correction_candidates]}
    return {"kind": "text", "value": value}


def standardized_from_obj(obj) -> object:
    if obj is None:
        return None
    kind = obj.get("kind")
    if kind == "date":
        return StructuredDate(obj["year"], obj["month"], obj["day"],
                              obj.get("relative_anchor"))
    if kind == "name":
        return PersonName(obj["first"], obj["last"], obj["corrected"],
                          [(n, s) for n, s in obj["candidates"]])
    if kind == "text":
        return obj["value"]
    raise SchemaError([f"unknown standardized kind {kind!r}"])


def field_to_obj(fv: FieldValue) -> dict:
    return {"raw": fv.raw, "standardized": standardized_to_obj(fv.standardized),
            "provenance": list(fv.provenance)}


def field_from_obj(obj) -> FieldValue:
    return FieldValue(obj["raw"], standardized_from_obj(obj["standardized"]),
                      obj["provenance"])


# ---------------------------------------------------------------------------
# register documents

def read_register(source) -> RegisterDocument:
    """Parse a register from a path, bytes, or text; XML or JSONL.

    Raises ParseError on malformed input and SchemaError (first 20 findings)
    when the parsed document violates the domain invariants.
    """
    data = _slurp(source)
    if data.lstrip().startswith("<"):
        return _register_from_xml(data)
    return _register_from_jsonl(data)


def _slurp(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str) and ("<" in source or "\n" in source or "{" in source):
        return source
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    with open(source, "r", encoding="utf-8") as fh:
        return fh.read()


def _parse_xml(text: str) -> ET.Element:
    try:
        return ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ParseError(f"malformed XML: {exc.msg.split(':')[0]}", line, column) from exc


_PAGE_KEYS = {"page_id", "width", "height", "orientation", "page_class"}
_LINE_KEYS = {"id", "points", "text", "confidence", "date_line", "zone_label"}


def _register_from_xml(text: str) -> RegisterDocument:
    root = _parse_xml(text)
    if root.tag != "register":
        raise SchemaError([f"expected <register>, found <{root.tag}>"])
    if root.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError([f"unsupported schema_version {root.get('schema_version')!r}"])
    violations: list[str] = []
    register_id = root.get("register_id") or ""
    if not register_id:
        violations.append("register_id missing")
    pages: list[RecognizedPage] = []
    fragments: list[ActFragment] = []
    extensions: dict = {}
    ext_index = 0
    for child in root:
        if child.tag != "page":
            extensions[f"xml:{ext_index}"] = ET.tostring(child, encoding="unicode").strip()
            ext_index += 1
            continue
        lines: list[TextLine] = []
        entities: list[Entity] = []
        for el in child:
            if el.tag == "line":
                text_attr = _nfc(el.get("text", ""))
                conf = el.get("confidence")
                line = TextLine(
                    id=el.get("id", ""),
                    polygon=_parse_points(el.get("points", "")),
                    text=text_attr,
                    confidence=float(conf) if conf is not None else None,
                    is_date_line={"true": True, "false": False}.get(el.get("date_line")),
                    zone_label=el.get("zone_label"),
                )
                lines.append(line)
                for ent in el:
                    if ent.tag != "entity":
                        continue
                    start, end = int(ent.get("start")), int(ent.get("end"))
                    entities.append(Entity(ent.get("tag", ""), line.id, start, end,
                                           text_attr[start:end]))
            elif el.tag == "act":
                fragments.append(ActFragment(
                    fragment_id=el.get("id", ""),
                    page_id=child.get("page_id", ""),
                    act_class=el.get("class", ""),
                    polygon=_parse_points(el.get("points", "")),
                    line_ids=el.get("lines", "").split(),
                    sequence_index=int(el.get("seq", "0")),
                ))
        page = RecognizedPage(
            page_id=child.get("page_id", ""),
            register_id=register_id,
            width=int(child.get("width", "0")),
            height=int(child.get("height", "0")),
            lines=lines,
            entities=entities,
            orientation=child.get("orientation", "portrait"),
            page_class=child.get("page_class", "unset"),
        )
        pages.append(page)
    doc = RegisterDocument(register_id, pages, fragments,
                           parish=root.get("parish"), religion=root.get("religion"),
                           language_hint=root.get("language_hint", "unset"),
                           extensions=extensions)
    _check_register(doc, violations)
    return doc


def _check_register(doc: RegisterDocument, violations: list[str]) -> None:
    seen = set()
    for page in doc.pages:
        if page.page_id in seen:
            violations.append(f"duplicate page_id {page.page_id!r}")
        seen.add(page.page_id)
        violations.extend(f"page {page.page_id}: {v}" for v in validate_page(page))
    for frag in doc.fragments:
        violations.extend(frag.violations())
        if frag.page_id not in seen:
            violations.append(f"fragment {frag.fragment_id}: unknown page {frag.page_id!r}")
    if doc.language_hint not in ("fr", "en", "unset"):
        violations.append(f"language_hint unknown: {doc.language_hint!r}")
    if violations:
        raise SchemaError(violations)


def write_register(doc: RegisterDocument, format: str = "xml") -> bytes:
    """Serialize a register; provided for fixtures and tooling symmetry."""
    if format == "jsonl":
        return _register_to_jsonl(doc)
    root = ET.Element("register", {"schema_version": SCHEMA_VERSION,
                                   "register_id": doc.register_id})
    if doc.parish is not None:
        root.set("parish", doc.parish)
    if doc.religion is not None:
        root.set("religion", doc.religion)
    root.set("language_hint", doc.language_hint)
    frags_by_page: dict[str, list[ActFragment]] = {}
    for frag in doc.fragments:
        frags_by_page.setdefault(frag.page_id, []).append(frag)
    for page in doc.pages:
        p = ET.SubElement(root, "page", {
            "page_id": page.page_id, "width": str(page.width),
            "height": str(page.height), "orientation": page.orientation,
            "page_class": page.page_class})
        ents_by_line: dict[str, list[Entity]] = {}
        for ent in page.entities:
            ents_by_line.setdefault(ent.line_id, []).append(ent)
        for line in page.lines:
            attrs = {"id": line.id, "points": _points_attr(line.polygon),
                     "text": _xml_safe(line.text, f"line {line.id}")}
            if line.confidence is not None:
                attrs["confidence"] = repr(line.confidence)
            if line.is_date_line is not None:
                attrs["date_line"] = "true" if line.is_date_line else "false"
            if line.zone_label is not None:
                attrs["zone_label"] = line.zone_label
            l_el = ET.SubElement(p, "line", attrs)
            for ent in ents_by_line.get(line.id, []):
                ET.SubElement(l_el, "entity", {"tag": ent.tag,
                                               "start": str(ent.char_start),
                                               "end": str(ent.char_end)})
        for frag in sorted(frags_by_page.get(page.page_id, []),
                           key=lambda f: f.sequence_index):
            ET.SubElement(p, "act", {"id": frag.fragment_id, "class": frag.act_class,
                                     "seq": str(frag.sequence_index),
                                     "points": _points_attr(frag.polygon),
                                     "lines": " ".join(frag.line_ids)})
    for key in sorted(doc.extensions):
        root.append(ET.fromstring(doc.extensions[key]))
    return _xml_bytes(root)


def _xml_bytes(root: ET.Element) -> bytes:
    tree = ET.ElementTree(root)
    ET.indent(tree)
    buf = io.BytesIO()
    tree.write(buf, encoding="utf-8", xml_declaration=True)
    buf.write(b"\n")
    return buf.getvalue()


def _register_to_jsonl(doc: RegisterDocument) -> bytes:
    header = {"kind": "register", "schema_version": SCHEMA_VERSION,
              "register_id": doc.register_id, "parish": doc.parish,
              "religion": doc.religion, "language_hint": doc.language_hint,
              "extensions": doc.extensions}
    rows = [header]
    frags_by_page: dict[str, list[ActFragment]] = {}
    for frag in doc.fragments:
        frags_by_page.setdefault(frag.page_id, []).append(frag)
    for page in doc.pages:
        rows.append({
            "kind": "page", "page_id": page.page_id, "width": page.width,
            "height": page.height, "orientation": page.orientation,
            "page_class": page.page_class,
            "lines": [{
                "id": ln.id, "points": [[x, y] for x, y in ln.polygon.points],
                "text": ln.text, "confidence": ln.confidence,
                "date_line": ln.is_date_line, "zone_label": ln.zone_label,
            } for ln in page.lines],
            "entities": [{"tag": e.tag, "line": e.line_id, "start": e.char_start,
                          "end": e.char_end} for e in page.entities],
            "acts": [{"id": f.fragment_id, "class": f.act_class,
                      "seq": f.sequence_index,
                      "points": [[x, y] for x, y in f.polygon.points],
                      "lines": list(f.line_ids)}
                     for f in sorted(frags_by_page.get(page.page_id, []),
                                     key=lambda f: f.sequence_index)],
        })
    return _jsonl_bytes(rows)


def _jsonl_bytes(rows) -> bytes:
    out = "\n".join(json.dumps(r, sort_keys=True, ensure_ascii=False) for r in rows)
    return (out + "\n").encode("utf-8")


def _register_from_jsonl(text: str) -> RegisterDocument:
    rows = _parse_jsonl(text)
    if not rows or rows[0].get("kind") != "register":
        raise SchemaError(["first JSONL row must have kind=register"])
    header = rows[0]
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError([f"unsupported schema_version {header.get('schema_version')!r}"])
    register_id = header.get("register_id", "")
    known = {"kind", "schema_version", "register_id", "parish", "religion",
             "language_hint", "extensions"}
    extensions = dict(header.get("extensions", {}))
    for key in header:
        if key not in known:
            extensions[key] = json.dumps(header[key], sort_keys=True)
    pages, fragments = [], []
    violations: list[str] = []
    for row in rows[1:]:
        if row.get("kind") != "page":
            violations.append(f"unexpected row kind {row.get('kind')!r}")
            continue
        lines = [TextLine(ln["id"], Polygon(ln["points"]), _nfc(ln.get("text", "")),
                          ln.get("confidence"), ln.get("date_line"), ln.get("zone_label"))
                 for ln in row.get("lines", [])]
        text_by_id = {ln.id: ln.text for ln in lines}
        entities = [Entity(e["tag"], e["line"], e["start"], e["end"],
                           text_by_id.get(e["line"], "")[e["start"]:e["end"]])
                    for e in row.get("entities", [])]
        pages.append(RecognizedPage(row["page_id"], register_id, row["width"],
                                    row["height"], lines, entities,
                                    row.get("orientation", "portrait"),
                                    row.get("page_class", "unset")))
        fragments.extend(ActFragment(f["id"], row["page_id"], f["class"],
                                     Polygon(f["points"]), f["lines"], f["seq"])
                         for f in row.get("acts", []))
    doc = RegisterDocument(register_id, pages, fragments,
                           parish=header.get("parish"), religion=header.get("religion"),
                           language_hint=header.get("language_hint", "unset"),
                           extensions=extensions)
    _check_register(doc, violations)
    return doc


def _parse_jsonl(text: str) -> list[dict]:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rows.append(json.loads(raw))
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSONL: {exc.msg}", lineno, exc.colno) from exc
    return rows


# ---------------------------------------------------------------------------
# export documents

def write_export(doc: ExportDocument, format: str = "xml") -> bytes:
    """Deterministic export bytes; round-trips through read_export."""
    acts = sorted(doc.acts, key=lambda pair: pair[0].act_id)
    if format == "jsonl":
        rows: list[dict] = [{"kind": "export", "schema_version": SCHEMA_VERSION,
                             "register_id": doc.register_id, "summary": doc.summary,
                             "config_hash": doc.config_hash}]
        for act, record in acts:
            rows.append({"kind": "act", **_act_to_obj(act, record)})
        return _jsonl_bytes(rows)
    if format != "xml":
        raise ValueError(f"unknown format {format!r}")

    root = ET.Element("export", {"schema_version": SCHEMA_VERSION,
                                 "register_id": doc.register_id,
                                 "config_hash": doc.config_hash})
    summary = ET.SubElement(root, "summary")
    ET.SubElement(summary, "acts_by_type",
                  {k: str(v) for k, v in sorted(doc.summary["acts_by_type"].items())})
    ET.SubElement(summary, "records_by_status",
                  {k: str(v) for k, v in sorted(doc.summary["records_by_status"].items())})
    for act, record in acts:
        context = f"act {act.act_id}"
        a = ET.SubElement(root, "act", {
            "id": act.act_id, "type": act.act_type, "mould": record.mould,
            "status": record.status.status, "reason": record.status.reason,
            "flags": " ".join(act.flags)})
        for frag in act.fragments:
            ET.SubElement(a, "fragment", {
                "id": frag.fragment_id, "page_id": frag.page_id,
                "class": frag.act_class, "seq": str(frag.sequence_index),
                "points": _points_attr(frag.polygon),
                "lines": " ".join(frag.line_ids)})
        ET.SubElement(a, "text").text = _xml_safe(act.full_text, context)
        for ent in act.entities:
            ET.SubElement(a, "entity", {"tag": ent.tag, "line": ent.line_id,
                                        "start": str(ent.char_start),
                                        "end": str(ent.char_end),
                                        "surface": _xml_safe(ent.surface, context)})
        for role in sorted(record.slots):
            fv = record.slots[role]
            ET.SubElement(a, "field", {
                "role": role, "raw": _xml_safe(fv.raw, context),
                "standardized": json.dumps(standardized_to_obj(fv.standardized),
                                           sort_keys=True, ensure_ascii=False),
                "provenance": " ".join(fv.provenance)})
        for fv in record.overflow:
            ET.SubElement(a, "overflow", {
                "raw": _xml_safe(fv.raw, context),
                "standardized": json.dumps(standardized_to_obj(fv.standardized),
                                           sort_keys=True, ensure_ascii=False),
                "provenance": " ".join(fv.provenance)})
    return _xml_bytes(root)


def _act_to_obj(act: Act, record: StructuredRecord) -> dict:
    return {
        "id": act.act_id, "type": act.act_type, "flags": list(act.flags),
        "fragments": [{"id": f.fragment_id, "page_id": f.page_id,
                       "class": f.act_class, "seq": f.sequence_index,
                       "points": [[x, y] for x, y in f.polygon.points],
                       "lines": list(f.line_ids)} for f in act.fragments],
        "text": act.full_text,
        "entities": [{"tag": e.tag, "line": e.line_id, "start": e.char_start,
                      "end": e.char_end, "surface": e.surface} for e in act.entities],
        "record": {
            "mould": record.mould,
            "slots": {role: field_to_obj(fv) for role, fv in sorted(record.slots.items())},
            "overflow": [field_to_obj(fv) for fv in record.overflow],
            "status": record.status.status, "reason": record.status.reason,
        },
    }


def _act_from_obj(obj: dict) -> tuple[Act, StructuredRecord]:
    fragments = [ActFragment(f["id"], f["page_id"], f["class"], Polygon(f["points"]),
                             f["lines"], f["seq"]) for f in obj["fragments"]]
    entities = [Entity(e["tag"], e["line"], e["start"], e["end"], e["surface"])
                for e in obj["entities"]]
    act = Act(obj["id"], fragments, obj["type"], obj["text"], entities, obj["flags"])
    rec = obj["record"]
    record = StructuredRecord(
        act.act_id, rec["mould"],
        {role: field_from_obj(fv) for role, fv in rec["slots"].items()},
        tuple(field_from_obj(fv) for fv in rec["overflow"]),
        ValidityStatus(rec["status"], rec["reason"]))
    _check_record(record)
    return act, record


def _check_record(record: StructuredRecord) -> None:
    if record.status.status not in ("valid", "invalid", "fusion", "special_case", "pending"):
        raise SchemaError([f"unknown status {record.status.status!r}"])
    if record.mould not in ("birth", "death_married", "death_single", "marriage"):
        raise SchemaError([f"unknown mould {record.mould!r}"])


def read_export(source) -> ExportDocument:
    data = _slurp(source)
    if data.lstrip().startswith("<"):
        return _export_from_xml(data)
    return _export_from_jsonl(data)


def _export_from_xml(text: str) -> ExportDocument:
    root = _parse_xml(text)
    if root.tag != "export":
        raise SchemaError([f"expected <export>, found <{root.tag}>"])
    if root.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError([f"unsupported schema_version {root.get('schema_version')!r}"])
    stored_summary = None
    acts: list[tuple[Act, StructuredRecord]] = []
    for child in root:
        if child.tag == "summary":
            by_type = {k: int(v) for k, v in child.find("acts_by_type").attrib.items()}
            by_status = {k: int(v) for k, v in child.find("records_by_status").attrib.items()}
            stored_summary = {"acts_by_type": by_type, "records_by_status": by_status}
        elif child.tag == "act":
            fragments, entities, slots, overflow = [], [], {}, []
            full_text = ""
            for el in child:
                if el.tag == "fragment":
                    fragments.append(ActFragment(el.get("id"), el.get("page_id"),
                                                 el.get("class"),
                                                 _parse_points(el.get("points", "")),
                                                 el.get("lines", "").split(),
                                                 int(el.get("seq", "0"))))
                elif el.tag == "text":
                    full_text = _nfc(el.text or "")
                elif el.tag == "entity":
                    entities.append(Entity(el.get("tag"), el.get("line"),
                                           int(el.get("start")), int(el.get("end")),
                                           _nfc(el.get("surface", ""))))
                elif el.tag == "field":
                    slots[el.get("role")] = FieldValue(
                        _nfc(el.get("raw", "")),
                        standardized_from_obj(json.loads(el.get("standardized", "null"))),
                        el.get("provenance", "").split())
                elif el.tag == "overflow":
                    overflow.append(FieldValue(
                        _nfc(el.get("raw", "")),
                        standardized_from_obj(json.loads(el.get("standardized", "null"))),
                        el.get("provenance", "").split()))
            act = Act(child.get("id"), fragments, child.get("type"), full_text,
                      entities, tuple(child.get("flags", "").split()))
            record = StructuredRecord(act.act_id, child.get("mould"), slots,
                                      tuple(overflow),
                                      ValidityStatus(child.get("status"),
                                                     child.get("reason", "")))
            _check_record(record)
            acts.append((act, record))
    return ExportDocument(root.get("register_id", ""), acts, stored_summary,
                          root.get("config_hash", ""))


def _export_from_jsonl(text: str) -> ExportDocument:
    rows = _parse_jsonl(text)
    if not rows or rows[0].get("kind") != "export":
        raise SchemaError(["first JSONL row must have kind=export"])
    header = rows[0]
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError([f"unsupported schema_version {header.get('schema_version')!r}"])
    acts = [_act_from_obj(row) for row in rows[1:] if row.get("kind") == "act"]
    return ExportDocument(header.get("register_id", ""), acts, header.get("summary"),
                          header.get("config_hash", ""))

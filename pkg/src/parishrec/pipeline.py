"""End-to-end register processing.

One register is one unit of work: classify its pages, score line quality,
gate and merge act fragments, type the acts, standardize dates and names,
validate against the moulds, and emit an export document. Registers are
independent, so a worker pool maps over them; results are merged in register
order, which makes the outputs a pure function of (config, inputs) regardless
of worker count. A register that fails to parse yields an error record and
never takes the corpus down with it.

Design note: pages classified no_act still flow through every stage; their
acts are exported flagged "no_act_page" rather than dropped, so no early hard
decision is irreversible.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import act_types, assembly, corpus_io, dates, line_quality, names, outliers, validation
from .model import FieldValue, StructuredDate, StructuredRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    # page classification
    classify_pages: bool = True
    detector: str = "isolation_forest"
    feature_kind: str = "line_count"
    grid_rows: int = 8
    grid_columns: int = 6
    seed: int = 42
    num_trees: int = 100
    subsample: int = 256
    lof_k: int = 10
    model_path: str | None = None  # fit on the input corpus when absent
    # line quality
    alpha: float = line_quality.DEFAULT_ALPHA
    # assembly
    date_word_count: int = assembly.DEFAULT_DATE_WORD_COUNT
    gate_enabled: bool = True
    min_lines: int = 2
    max_lines: int = 80
    min_area_ratio: float = 0.02
    max_area_ratio: float = 0.98
    # classification / standardization
    min_keyword_score: float | None = None
    correct_names: bool = True
    name_radius: int = names.DEFAULT_RADIUS
    accept_threshold: float = names.DEFAULT_ACCEPT_THRESHOLD
    age_floor_years: float = validation.DEFAULT_MARRIAGEABLE_AGE_YEARS
    # resource overrides (shipped defaults when None)
    thesaurus_path: str | None = None
    cost_table_path: str | None = None
    special_cases_path: str | None = None
    relative_rules_path: str | None = None
    keyword_paths: dict | None = None
    # execution
    workers: int = 1
    output_format: str = "xml"

    def config_hash(self) -> str:
        """Hash of the processing semantics; worker count and output format
        cannot change results, so they stay out of the hash."""
        payload = {k: v for k, v in self.__dict__.items()
                   if k not in ("workers", "output_format")}
        blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        text = Path(path).read_text(encoding="utf-8")
        if str(path).endswith(".toml"):
            try:
                import tomllib
            except ImportError as exc:
                raise ValueError("TOML configs need Python 3.11+; use JSON") from exc
            doc = tomllib.loads(text)
        else:
            doc = json.loads(text)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**doc)
        for key in ("model_path", "thesaurus_path", "cost_table_path",
                    "special_cases_path", "relative_rules_path"):
            value = getattr(config, key)
            if value is not None and not Path(value).exists():
                raise ValueError(f"{key} does not exist: {value}")
        return config


class Runtime:
    """Loaded, immutable resources shared by all workers."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.grammar = dates.NumeralGrammar.bilingual()
        self.months = dates.month_lexicon("both")
        self.date_lexicon = assembly.DateLexicon.default()
        self.gate = assembly.LayoutGate(config.min_lines, config.max_lines,
                                        config.min_area_ratio, config.max_area_ratio)
        self.thesaurus = (names.NameThesaurus.load(config.thesaurus_path)
                          if config.thesaurus_path else names.NameThesaurus.shipped_sample())
        self.costs = (names.VisualCostTable.load(config.cost_table_path)
                      if config.cost_table_path else names.VisualCostTable.shipped_default())
        self.special_cases = (validation.SpecialCaseLexicon.load(config.special_cases_path)
                              if config.special_cases_path
                              else validation.SpecialCaseLexicon.shipped_default())
        self.relative_rules = (dates.load_relative_rules(config.relative_rules_path)
                               if config.relative_rules_path else dates.DEFAULT_RELATIVE_RULES)
        self.keywords = (act_types.KeywordTable.load(config.keyword_paths)
                         if config.keyword_paths else act_types.KeywordTable.shipped_default())
        self.model = None
        if config.model_path:
            self.model = outliers.model_from_json(Path(config.model_path).read_text("utf-8"))

    def fit_model(self, pages) -> None:
        """One-class fit on the input corpus's non-empty pages (assumed act pages)."""
        spec = outliers.GridSpec(self.config.grid_rows, self.config.grid_columns)
        feats = []
        for page in pages:
            for half in outliers.split_landscape(page):
                if half.lines:
                    feats.append(outliers.extract_features(half, self.config.feature_kind, spec))
        if len(feats) < 2:
            return
        if self.config.detector == "isolation_forest":
            self.model = outliers.if_fit(feats, self.config.num_trees,
                                         self.config.subsample, self.config.seed)
        else:
            self.model = outliers.lof_fit(feats, min(self.config.lof_k, len(feats) - 1))


@dataclass
class CorpusStats:
    pages_by_class: dict = field(default_factory=dict)
    quality_classes: dict = field(default_factory=dict)
    acts_by_type: dict = field(default_factory=dict)
    records_by_status: dict = field(default_factory=dict)
    registers_processed: int = 0
    registers_failed: int = 0
    fragments_gated: int = 0
    pages_per_second: float = 0.0

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        def add(a: dict, b: dict) -> dict:
            out = dict(a)
            for k, v in b.items():
                out[k] = out.get(k, 0) + v
            return out
        return CorpusStats(add(self.pages_by_class, other.pages_by_class),
                           add(self.quality_classes, other.quality_classes),
                           add(self.acts_by_type, other.acts_by_type),
                           add(self.records_by_status, other.records_by_status),
                           self.registers_processed + other.registers_processed,
                           self.registers_failed + other.registers_failed,
                           self.fragments_gated + other.fragments_gated,
                           0.0)


def _standardize_record(record: StructuredRecord, act_type: str, rt: Runtime) -> StructuredRecord:
    """Fill FieldValue.standardized per role kind; record date anchors event date."""
    slots = dict(record.slots)

    def std(role: str, value) -> None:
        fv = slots[role]
        slots[role] = FieldValue(fv.raw, value, fv.provenance)

    anchor = None
    if "record_date" in slots:
        try:
            anchor = dates.parse_date(slots["record_date"].raw, rt.grammar,
                                      rules=rt.relative_rules, months=rt.months)
            std("record_date", anchor)
        except dates.CalendarError:
            pass
    if "event_date" in slots:
        try:
            std("event_date", dates.parse_date(slots["event_date"].raw, rt.grammar,
                                               anchor=anchor, rules=rt.relative_rules,
                                               months=rt.months))
        except dates.CalendarError:
            pass
    for role, fv in slots.items():
        if role == "witness_names":
            # a "; "-joined list of surfaces, not a single person
            slots[role] = FieldValue(fv.raw, " ".join(fv.raw.split()), fv.provenance)
        elif role.endswith("_name"):
            person = names.standardize_person(
                fv.raw, rt.thesaurus, rt.costs, act_type, role,
                radius=rt.config.name_radius,
                accept_threshold=rt.config.accept_threshold,
                correct_unknown=rt.config.correct_names)
            slots[role] = FieldValue(fv.raw, person, fv.provenance)
        elif role.endswith("_occupation") or role.endswith("_residence") or role == "record_place":
            slots[role] = FieldValue(fv.raw, " ".join(fv.raw.split()).lower(), fv.provenance)
    return StructuredRecord(record.act_id, record.mould, slots, record.overflow,
                            record.status)


def process_register(doc: corpus_io.RegisterDocument, rt: Runtime,
                     model=None) -> tuple[corpus_io.ExportDocument, CorpusStats]:
    """Run every stage over one register; returns its export and local stats."""
    stats = CorpusStats(registers_processed=1)
    model = model if model is not None else rt.model

    pages = []
    for page in doc.pages:
        if rt.config.classify_pages and model is not None:
            cls, _ = outliers.classify_page(page, model)
            page = page.with_page_class(cls)
        page = assembly.tag_date_lines(page, rt.date_lexicon, rt.config.date_word_count)
        stats.pages_by_class[page.page_class] = stats.pages_by_class.get(page.page_class, 0) + 1
        if page.lines:
            report = line_quality.page_quality(page.lines, rt.config.alpha)
            key = report.quality_class
        else:
            key = "no_lines"
        stats.quality_classes[key] = stats.quality_classes.get(key, 0) + 1
        pages.append(page)

    kept = []
    for frag in doc.fragments:
        page = next(p for p in pages if p.page_id == frag.page_id)
        if rt.config.gate_enabled and not assembly.gate_fragment(frag, page, rt.gate).keep:
            stats.fragments_gated += 1
        else:
            kept.append(frag)

    acts = assembly.merge_fragments(pages, kept)
    page_class = {p.page_id: p.page_class for p in pages}
    pages_by_id = {p.page_id: p for p in pages}

    results = []
    last_dated: tuple[str, StructuredDate] | None = None
    for act in acts:
        fragment_types = []
        for frag in act.fragments:
            page = pages_by_id[frag.page_id]
            text = "\n".join((page.line_by_id(lid).text if page.line_by_id(lid) else "")
                             for lid in frag.line_ids)
            fragment_types.append(act_types.classify_text(text, rt.keywords,
                                                          rt.config.min_keyword_score)[0])
        act_type = act_types.merged_type(fragment_types)
        flags = act.flags
        if any(page_class.get(f.page_id) == "no_act" for f in act.fragments):
            flags = flags + ("no_act_page",)
        act = replace(act, act_type=act_type, flags=flags)
        record = validation.validate_act(act, rt.special_cases,
                                         rt.config.age_floor_years, rt.grammar)
        record = _standardize_record(record, act_type, rt)
        # record dates should not run backwards within a register; warn only
        current = record.slots.get("record_date")
        if current is not None and isinstance(current.standardized, StructuredDate) \
                and current.standardized.complete:
            d = current.standardized
            if last_dated is not None and (d.year, d.month, d.day) < \
                    (last_dated[1].year, last_dated[1].month, last_dated[1].day):
                logger.warning("register %s: record date goes backwards: %s (%s) "
                               "after %s (%s)", doc.register_id, d.iso(), act.act_id,
                               last_dated[1].iso(), last_dated[0])
            last_dated = (act.act_id, d)
        stats.acts_by_type[act_type] = stats.acts_by_type.get(act_type, 0) + 1
        status = record.status.status
        stats.records_by_status[status] = stats.records_by_status.get(status, 0) + 1
        results.append((act, record))

    export = corpus_io.ExportDocument(doc.register_id, results,
                                      config_hash=rt.config.config_hash())
    return export, stats


@dataclass
class RunResult:
    exports: dict  # register_id -> ExportDocument
    errors: list   # (source name, message)
    stats: CorpusStats

    @property
    def exit_code(self) -> int:
        return 3 if self.errors else 0


def run(config: PipelineConfig, inputs) -> RunResult:
    """Process a corpus of register files; per-register failures are isolated."""
    started = time.monotonic()
    rt = Runtime(config)
    inputs = [Path(p) for p in inputs]

    docs: list[tuple[str, corpus_io.RegisterDocument | None, str | None]] = []
    for path in inputs:
        try:
            docs.append((path.name, corpus_io.read_register(path), None))
        except Exception as exc:
            docs.append((path.name, None, f"{type(exc).__name__}: {exc}"))

    if config.classify_pages and rt.model is None:
        rt.fit_model([p for _, doc, _ in docs if doc is not None for p in doc.pages])

    def work(item):
        name, doc, error = item
        if error is not None:
            return name, None, None, error
        try:
            export, stats = process_register(doc, rt)
            return name, export, stats, None
        except Exception as exc:
            return name, None, None, f"{type(exc).__name__}: {exc}"

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(work, docs))
    else:
        outcomes = [work(item) for item in docs]

    exports: dict = {}
    errors = []
    stats = CorpusStats()
    for name, export, local, error in sorted(outcomes, key=lambda o: o[0]):
        if error is not None:
            errors.append((name, error))
            stats = stats.merge(CorpusStats(registers_failed=1))
        else:
            exports[export.register_id] = export
            stats = stats.merge(local)
    elapsed = time.monotonic() - started
    total_pages = sum(stats.pages_by_class.values())
    stats.pages_per_second = total_pages / elapsed if elapsed > 0 else 0.0
    return RunResult(exports, errors, stats)


def write_outputs(result: RunResult, out_dir, config: PipelineConfig) -> list[Path]:
    """Write one export per register plus stats.csv and errors.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    suffix = "jsonl" if config.output_format == "jsonl" else "xml"
    for register_id in sorted(result.exports):
        path = out / f"{register_id}.{suffix}"
        path.write_bytes(corpus_io.write_export(result.exports[register_id],
                                                config.output_format))
        written.append(path)
    stats_path = out / "stats.csv"
    stats_path.write_text(stats_csv(result.stats), encoding="utf-8")
    written.append(stats_path)
    if result.errors:
        err_path = out / "errors.json"
        err_path.write_text(json.dumps([{"register": n, "error": e}
                                        for n, e in result.errors],
                                       indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
        written.append(err_path)
    return written


# ---------------------------------------------------------------------------
# reports

_SECTIONS = (
    ("pages_by_class", ("act", "no_act", "unset")),
    ("quality_classes", line_quality.CLASS_LABELS + ("no_lines",)),
    ("acts_by_type", ("birth", "death", "marriage", "undefined")),
    ("records_by_status", ("valid", "fusion", "invalid", "special_case", "pending")),
)


def _section_rows(stats: CorpusStats, section: str, keys) -> list[tuple[str, int, float]]:
    table = getattr(stats, section)
    total = sum(table.values())
    rows = []
    for key in keys:
        count = table.get(key, 0)
        pct = 100.0 * count / total if total else 0.0
        rows.append((key, count, pct))
    for key in sorted(set(table) - set(keys)):
        rows.append((key, table[key], 100.0 * table[key] / total if total else 0.0))
    rows.append(("total", total, 100.0 if total else 0.0))
    return rows


def stats_csv(stats: CorpusStats) -> str:
    """Deterministic CSV: throughput is deliberately not an artifact column."""
    lines = ["section,key,count,percentage"]
    for section, keys in _SECTIONS:
        for key, count, pct in _section_rows(stats, section, keys):
            lines.append(f"{section},{key},{count},{pct:.1f}")
    lines.append(f"registers,processed,{stats.registers_processed},")
    lines.append(f"registers,failed,{stats.registers_failed},")
    lines.append(f"fragments,gated,{stats.fragments_gated},")
    return "\n".join(lines) + "\n"


def stats_table(stats: CorpusStats) -> str:
    """Human-readable per-section tables with counts, percentages, and totals."""
    blocks = []
    for section, keys in _SECTIONS:
        rows = _section_rows(stats, section, keys)
        width = max(len(k) for k, _, _ in rows)
        header = section.replace("_", " ")
        lines = [header, "-" * len(header)]
        for key, count, pct in rows:
            lines.append(f"{key:<{width}}  {count:>9,}  {pct:>5.1f}%")
        blocks.append("\n".join(lines))
    blocks.append(f"registers processed: {stats.registers_processed}, "
                  f"failed: {stats.registers_failed}; "
                  f"fragments gated: {stats.fragments_gated}; "
                  f"throughput: {stats.pages_per_second:.1f} pages/s")
    return "\n\n".join(blocks) + "\n"

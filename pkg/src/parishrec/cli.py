"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 input error, 3 run completed with
per-register failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import (act_types, assembly, corpus_io, dates, line_quality, metrics,
               names, outliers, pipeline, validation)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_PARTIAL = 3


def _read_registers(paths):
    for path in paths:
        yield path, corpus_io.read_register(path)


def cmd_fit_pages(args) -> int:
    spec = outliers.GridSpec(args.rows, args.columns)
    feats = []
    for _, doc in _read_registers(args.inputs):
        for page in doc.pages:
            for half in outliers.split_landscape(page):
                if half.lines:
                    feats.append(outliers.extract_features(half, args.kind, spec))
    if args.detector == "isolation_forest":
        model = outliers.if_fit(feats, num_trees=args.num_trees,
                                subsample=args.subsample, seed=args.seed)
    else:
        model = outliers.lof_fit(feats, k=min(args.k, len(feats) - 1))
    Path(args.out).write_text(outliers.model_to_json(model), encoding="utf-8")
    print(f"fitted {args.detector} on {len(feats)} pages -> {args.out}")
    return EXIT_OK


def cmd_classify_pages(args) -> int:
    model = outliers.model_from_json(Path(args.model).read_text("utf-8"))
    print("register_id,page_id,class,score")
    for _, doc in _read_registers(args.inputs):
        for page in doc.pages:
            cls, score = outliers.classify_page(page, model, args.threshold)
            print(f"{doc.register_id},{page.page_id},{cls},{score:.4f}")
    return EXIT_OK


def cmd_eval_pages(args) -> int:
    """Grid search over feature kinds and grids against labeled pages."""
    train = [p for _, doc in _read_registers(args.train)
             for page in doc.pages for p in outliers.split_landscape(page) if p.lines]
    labeled = [(page, "act") for _, doc in _read_registers(args.act)
               for page in doc.pages]
    labeled += [(page, "no_act") for _, doc in _read_registers(args.no_act)
                for page in doc.pages]
    best, table = outliers.grid_search(train, labeled, detector=args.detector,
                                       seed=args.seed)
    print("kind,rows,columns,act_precision,act_recall,act_f1,no_act_f1,f1")
    for row in table:
        spec = row["spec"]
        print(f"{row['kind']},{spec.rows},{spec.columns},"
              f"{row['act']['precision']:.3f},{row['act']['recall']:.3f},"
              f"{row['act']['f1']:.3f},{row['no_act']['f1']:.3f},{row['f1']:.3f}")
    spec = best["spec"]
    print(f"# best: {best['kind']} {spec.rows}x{spec.columns} f1={best['f1']:.3f}",
          file=sys.stderr)
    if args.out:
        Path(args.out).write_text(outliers.model_to_json(best["model"]),
                                  encoding="utf-8")
    return EXIT_OK


def cmd_quality(args) -> int:
    histogram = {label: 0 for label in line_quality.CLASS_LABELS}
    no_lines = 0
    print("register_id,page_id,q_line,bad_ratio,class,median_height")
    for _, doc in _read_registers(args.inputs):
        for page in doc.pages:
            if not page.lines:
                no_lines += 1
                continue
            r = line_quality.page_quality(page.lines, args.alpha)
            histogram[r.quality_class] += 1
            print(f"{doc.register_id},{page.page_id},{r.q_line:.4f},"
                  f"{r.bad_ratio:.4f},{r.quality_class},{r.median_height:g}")
    print("\nbad-line class histogram:", file=sys.stderr)
    for label in line_quality.CLASS_LABELS:
        print(f"  {label:>7}  {histogram[label]}", file=sys.stderr)
    if no_lines:
        print(f"  (no lines: {no_lines})", file=sys.stderr)
    return EXIT_OK


def cmd_assemble(args) -> int:
    gate = assembly.LayoutGate(args.min_lines, args.max_lines,
                               args.min_area_ratio, args.max_area_ratio)
    for _, doc in _read_registers(args.inputs):
        kept, gated = [], 0
        for frag in doc.fragments:
            page = next(p for p in doc.pages if p.page_id == frag.page_id)
            decision = assembly.gate_fragment(frag, page, gate)
            if decision.keep:
                kept.append(frag)
            else:
                gated += 1
                print(f"# gated {frag.fragment_id}: {decision.violated}",
                      file=sys.stderr)
        for act in assembly.merge_fragments(doc.pages, kept):
            print(json.dumps({
                "register_id": doc.register_id, "act_id": act.act_id,
                "fragments": [f.fragment_id for f in act.fragments],
                "classes": [f.act_class for f in act.fragments],
                "flags": list(act.flags),
            }, ensure_ascii=False))
    return EXIT_OK


def cmd_classify_acts(args) -> int:
    table = act_types.KeywordTable.shipped_default()
    print("register_id,act_id,type,birth,marriage,death")
    for _, doc in _read_registers(args.inputs):
        for act in assembly.merge_fragments(doc.pages, doc.fragments):
            act_type, scores = act_types.classify_act(act, table, args.min_score)
            print(f"{doc.register_id},{act.act_id},{act_type},"
                  f"{scores['birth']:.3f},{scores['marriage']:.3f},{scores['death']:.3f}")
    return EXIT_OK


def cmd_standardize_date(args) -> int:
    grammar = dates.NumeralGrammar.bilingual()
    anchor = None
    if args.anchor:
        y, m, d = (int(x) for x in args.anchor.split("-"))
        anchor = dates.StructuredDate(y, m, d)
    for raw in sys.stdin:
        raw = raw.strip()
        if not raw:
            continue
        try:
            parsed = dates.parse_date(raw, grammar, anchor=anchor, fuzzy=not args.strict)
            print(json.dumps({"input": raw, "year": parsed.year, "month": parsed.month,
                              "day": parsed.day, "complete": parsed.complete,
                              "iso": parsed.iso()}, ensure_ascii=False))
        except dates.CalendarError as exc:
            print(json.dumps({"input": raw, "error": str(exc)}, ensure_ascii=False))
    return EXIT_OK


def cmd_standardize_name(args) -> int:
    thesaurus = (names.NameThesaurus.load(args.thesaurus) if args.thesaurus
                 else names.NameThesaurus.shipped_sample())
    costs = (names.VisualCostTable.load(args.costs) if args.costs
             else names.VisualCostTable.shipped_default())
    for raw in sys.stdin:
        raw = raw.strip()
        if not raw:
            continue
        person = names.standardize_person(raw, thesaurus, costs,
                                          act_type=args.act_type, role=args.role,
                                          radius=args.radius,
                                          accept_threshold=args.accept_threshold)
        print(json.dumps({"input": raw, "first_names": list(person.first_names),
                          "last_names": list(person.last_names),
                          "corrected": person.corrected,
                          "candidates": [[n, round(s, 4)] for n, s
                                         in person.correction_candidates]},
                         ensure_ascii=False))
    return EXIT_OK


def cmd_validate(args) -> int:
    table = act_types.KeywordTable.shipped_default()
    print("register_id,act_id,type,mould,status,reason")
    for _, doc in _read_registers(args.inputs):
        for act in assembly.merge_fragments(doc.pages, doc.fragments):
            act_type, _ = act_types.classify_act(act, table)
            record = validation.validate_act(replace(act, act_type=act_type))
            print(f"{doc.register_id},{act.act_id},{act_type},{record.mould},"
                  f"{record.status.status},{record.status.reason}")
    return EXIT_OK


def _paired_pages(gt_doc, pred_doc):
    pred_pages = {p.page_id: p for p in pred_doc.pages}
    for page in gt_doc.pages:
        if page.page_id in pred_pages:
            yield page, pred_pages[page.page_id]


def cmd_evaluate(args) -> int:
    gt_doc = corpus_io.read_register(args.gt)
    pred_doc = corpus_io.read_register(args.pred)
    if args.task == "text":
        print("page_id,line_id,cer,wer")
        total_c, total_w, n = 0.0, 0.0, 0
        for gt_page, pred_page in _paired_pages(gt_doc, pred_doc):
            pred_lines = {ln.id: ln.text for ln in pred_page.lines}
            for line in gt_page.lines:
                hyp = pred_lines.get(line.id, "")
                c, w = metrics.cer(line.text, hyp), metrics.wer(line.text, hyp)
                total_c, total_w, n = total_c + c, total_w + w, n + 1
                print(f"{gt_page.page_id},{line.id},{c:.4f},{w:.4f}")
        if n:
            print(f"mean,,{total_c / n:.4f},{total_w / n:.4f}")
    elif args.task == "entities":
        print("page_id,precision,recall,f1")
        for gt_page, pred_page in _paired_pages(gt_doc, pred_doc):
            gt_text = "\n".join(ln.text for ln in gt_page.lines)
            pred_text = "\n".join(ln.text for ln in pred_page.lines)
            scores = metrics.ner_eval(
                _page_spans(gt_page), gt_text, _page_spans(pred_page), pred_text,
                threshold=args.threshold)
            print(f"{gt_page.page_id},{scores.precision:.4f},"
                  f"{scores.recall:.4f},{scores.f1:.4f}")
    else:
        print("page_id,iou,ap50,ap75,map")
        for gt_page, pred_page in _paired_pages(gt_doc, pred_doc):
            result = metrics.evaluate_detection(
                [ln.polygon for ln in gt_page.lines],
                [(ln.polygon, ln.confidence if ln.confidence is not None else 1.0)
                 for ln in pred_page.lines])
            print(f"{gt_page.page_id},{result.iou:.4f},{result.ap50:.4f},"
                  f"{result.ap75:.4f},{result.mean_ap:.4f}")
    return EXIT_OK


def _page_spans(page):
    """Entity spans rebased onto the newline-joined page text."""
    offsets, pos = {}, 0
    for line in page.lines:
        offsets[line.id] = pos
        pos += len(line.text) + 1
    return [(e.tag, offsets[e.line_id] + e.char_start, offsets[e.line_id] + e.char_end)
            for e in page.entities if e.line_id in offsets]


def cmd_run(args) -> int:
    config = pipeline.PipelineConfig.load(args.config) if args.config \
        else pipeline.PipelineConfig()
    if args.workers is not None:
        config = pipeline.PipelineConfig(**{**config.__dict__, "workers": args.workers})
    result = pipeline.run(config, args.inputs)
    written = pipeline.write_outputs(result, args.out, config)
    print(f"wrote {len(written)} files to {args.out}", file=sys.stderr)
    for name, error in result.errors:
        print(f"error: {name}: {error}", file=sys.stderr)
    print(pipeline.stats_table(result.stats), file=sys.stderr)
    return EXIT_PARTIAL if result.errors else EXIT_OK


def cmd_stats(args) -> int:
    stats = pipeline.CorpusStats()
    for path in args.exports:
        doc = corpus_io.read_export(Path(path).read_bytes())
        local = pipeline.CorpusStats(acts_by_type=dict(doc.summary["acts_by_type"]),
                                     records_by_status=dict(doc.summary["records_by_status"]),
                                     registers_processed=1)
        stats = stats.merge(local)
    if args.csv:
        print(pipeline.stats_csv(stats), end="")
    else:
        print(pipeline.stats_table(stats), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parishrec",
        description="Post-recognition extraction and validation for parish registers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-pages", help="fit a one-class page model on act pages")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--detector", choices=["isolation_forest", "lof"],
                   default="isolation_forest")
    p.add_argument("--kind", choices=list(outliers.FEATURE_KINDS), default="line_count")
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--columns", type=int, default=6)
    p.add_argument("--num-trees", type=int, default=100)
    p.add_argument("--subsample", type=int, default=256)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_fit_pages)

    p = sub.add_parser("classify-pages", help="score pages act / no_act")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_classify_pages)

    p = sub.add_parser("eval-pages",
                       help="grid-search detector configs on labeled pages")
    p.add_argument("--train", nargs="+", required=True)
    p.add_argument("--act", nargs="+", required=True)
    p.add_argument("--no-act", nargs="+", required=True)
    p.add_argument("--detector", choices=["isolation_forest", "lof"],
                   default="isolation_forest")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="write the winning model here")
    p.set_defaults(func=cmd_eval_pages)

    p = sub.add_parser("quality", help="line-detection quality per page")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--alpha", type=float, default=line_quality.DEFAULT_ALPHA)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("assemble", help="gate fragments and merge them into acts")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--min-lines", type=int, default=2)
    p.add_argument("--max-lines", type=int, default=80)
    p.add_argument("--min-area-ratio", type=float, default=0.02)
    p.add_argument("--max-area-ratio", type=float, default=0.98)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("classify-acts", help="assign act types by keyword ratio")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--min-score", type=float, default=None)
    p.set_defaults(func=cmd_classify_acts)

    p = sub.add_parser("standardize-date", help="parse dates from stdin lines")
    p.add_argument("--anchor", help="YYYY-MM-DD record date for relative phrases")
    p.add_argument("--strict", action="store_true", help="disable fuzzy numerals")
    p.set_defaults(func=cmd_standardize_date)

    p = sub.add_parser("standardize-name", help="split/correct names from stdin")
    p.add_argument("--thesaurus")
    p.add_argument("--costs")
    p.add_argument("--act-type")
    p.add_argument("--role")
    p.add_argument("--radius", type=int, default=names.DEFAULT_RADIUS)
    p.add_argument("--accept-threshold", type=float,
                   default=names.DEFAULT_ACCEPT_THRESHOLD)
    p.set_defaults(func=cmd_standardize_name)

    p = sub.add_parser("validate", help="validate acts against their moulds")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="CER/WER, entity, or zone metrics")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--task", choices=["text", "entities", "zones"], default="text")
    p.add_argument("--threshold", type=float, default=metrics.NER_THRESHOLD)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline over register files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("stats", help="summarize previously written exports")
    p.add_argument("exports", nargs="+")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (corpus_io.CorpusIOError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

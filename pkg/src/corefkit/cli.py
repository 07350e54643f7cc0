"""Command-line interface: ``corefkit <command> ...``.

Exit status is 0 on success, 1 on a usage error and 2 when input data
cannot be processed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .align import AlignmentError, MatchStrategy
from .conllu import ConlluError, read_conllu, write_conllu
from .harness import (
    VARIANTS,
    DataError,
    corpus_stats,
    format_stats,
    pair_documents,
    sample_mini,
    score_dataset,
    upos_factorized_score,
)
from .mentions import EntityError, extract_entities
from .metrics import METRICS, SCHEMA_VERSION, MetricReport
from .textcoref import PlainTextError, clean, deserialize, serialize

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
DATA_ERRORS = (ConlluError, EntityError, PlainTextError, AlignmentError, DataError, OSError, UnicodeDecodeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _strategy(args) -> MatchStrategy:
    return MatchStrategy(
        kind=args.match,
        include_singletons=args.keep_singletons,
        zero_mode="dependency" if args.zero_match == "dep" else "strict",
    )


def _emit(text: str, out: Optional[str]) -> None:
    if not text.endswith("\n") and text:
        text += "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _selected(metrics: Optional[str]) -> list[str]:
    names = list(METRICS) + ["conll"]
    if not metrics:
        return names
    chosen = [m.strip() for m in metrics.split(",") if m.strip()]
    bad = [m for m in chosen if m not in names]
    if bad:
        raise UsageError(f"unknown metric {', '.join(bad)}; choose from {','.join(names)}")
    return chosen


def _rows(report: MetricReport, names: list[str]) -> list[tuple[str, Optional[float], Optional[float], Optional[float]]]:
    rows = []
    for n in names:
        if n == "conll":
            rows.append(("conll", None, None, report.conll_f1))
            continue
        prf = getattr(report, n)
        rows.append((n, None, None, None) if prf is None else (n, prf.recall, prf.precision, prf.f1))
    return rows


def _render_reports(reports: dict[str, MetricReport], names: list[str], fmt: str, meta: dict) -> str:
    if fmt == "json":
        payload = {"schema_version": SCHEMA_VERSION, **meta, "reports": {}}
        for variant, rep in reports.items():
            d = rep.to_dict()
            keep = {"conll_f1" if n == "conll" else n for n in names}
            payload["reports"][variant] = {k: v for k, v in d.items() if k in keep}
        return json.dumps(payload, indent=2, sort_keys=True)
    lines = []

    def cell(v: Optional[float], width: int = 0) -> str:
        s = "-" if v is None else f"{100 * v:.2f}"
        return s.rjust(width) if width else s

    if fmt == "tsv":
        lines.append("variant\tmetric\trecall\tprecision\tf1")
        for variant, rep in reports.items():
            for n, r, p, f in _rows(rep, names):
                lines.append("\t".join([variant, n, cell(r), cell(p), cell(f)]))
        return "\n".join(lines)
    for variant, rep in reports.items():
        lines.append(f"{variant}")
        lines.append(f"  {'metric':<14}{'R':>8}{'P':>8}{'F1':>8}")
        for n, r, p, f in _rows(rep, names):
            lines.append(f"  {n:<14}{cell(r, 8)}{cell(p, 8)}{cell(f, 8)}")
    return "\n".join(lines)


# -- commands -------------------------------------------------------------------


def cmd_score(args) -> int:
    names = _selected(args.metrics)
    gold = [extract_entities(d) for d in read_conllu(args.gold)]
    pred = [extract_entities(d) for d in read_conllu(args.pred)]
    variants = VARIANTS if args.all_variants else {"selected": _strategy(args)}
    result = score_dataset(gold, pred, variants, dataset_id=args.dataset or Path(args.gold).stem)
    meta = {"gold": args.gold, "pred": args.pred, "dataset_id": result.dataset_id}
    if not args.all_variants:
        s = _strategy(args)
        meta["strategy"] = {"match": s.kind, "keep_singletons": s.include_singletons, "zero_match": args.zero_match}
    _emit(_render_reports(result.reports, names, args.format, meta), args.out)
    return EXIT_OK


def cmd_to_text(args) -> int:
    docs = read_conllu(args.input, strip_empty_forms=args.strip_empty_forms)
    lines = [
        serialize(extract_entities(d), include_annotations=not args.no_annotations, mwt_surface=args.mwt_surface)
        for d in docs
    ]
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def _read_lines(path: str, n: int) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8-sig").replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != n:
        raise DataError(f"{path}: {len(lines)} lines but the skeleton has {n} documents")
    return lines


def cmd_to_conllu(args) -> int:
    skeleton = read_conllu(args.skeleton)
    lines = _read_lines(args.input, len(skeleton))
    out = []
    for line, doc in zip(lines, skeleton):
        try:
            out.append(deserialize(line, doc, mwt_surface=args.mwt_surface).document)
        except PlainTextError as exc:
            raise PlainTextError(f"document {doc.doc_id}: {exc}") from None
    _emit(write_conllu(out), args.out)
    return EXIT_OK


def cmd_clean(args) -> int:
    skeleton = read_conllu(args.skeleton)
    lines = _read_lines(args.input, len(skeleton))
    _emit("\n".join(clean(line, doc, mwt_surface=args.mwt_surface) for line, doc in zip(lines, skeleton)), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.cap <= 0:
        raise UsageError("--cap must be positive")
    docs = sample_mini(read_conllu(args.input), args.cap, args.seed)
    _emit(write_conllu(docs), args.out)
    return EXIT_OK


def cmd_stats(args) -> int:
    stats = corpus_stats(extract_entities(d) for d in read_conllu(args.input))
    if args.format == "json":
        text = json.dumps({"schema_version": SCHEMA_VERSION, **stats}, indent=2, sort_keys=True)
    elif args.format == "tsv":
        rows = ["section\tkey\tvalue"]
        for block, values in stats.items():
            if not isinstance(values, dict):
                rows.append(f"corpus\t{block}\t{values}")
                continue
            for k, v in values.items():
                if isinstance(v, dict):
                    rows.extend(f"{block}\t{k}:{kk}\t{vv:.1f}" for kk, vv in v.items())
                else:
                    rows.append(f"{block}\t{k}\t{v:.1f}" if isinstance(v, float) else f"{block}\t{k}\t{v}")
        text = "\n".join(rows)
    else:
        text = format_stats(stats)
    _emit(text, args.out)
    return EXIT_OK


def cmd_upos(args) -> int:
    gold = [extract_entities(d) for d in read_conllu(args.gold)]
    pred = [extract_entities(d) for d in read_conllu(args.pred)]
    pair_documents(gold, pred)
    tags = [t.strip() for t in args.upos.split(",") if t.strip()]
    results = {}
    for tag in tags:
        try:
            results[tag] = upos_factorized_score(gold, pred, tag, args.mode, _strategy(args))
        except ValueError as exc:
            if isinstance(exc, DATA_ERRORS):
                raise
            raise UsageError(str(exc)) from None
    if args.format == "json":
        text = json.dumps({"schema_version": SCHEMA_VERSION, "mode": args.mode, "conll_f1": results}, indent=2)
    else:
        sep = "\t" if args.format == "tsv" else "  "
        text = "\n".join(f"{t}{sep}{'-' if v is None else f'{100 * v:.2f}'}" for t, v in results.items())
    _emit(text, args.out)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def _match_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--match", choices=["head", "partial", "exact"], default="head", help="mention matching")
    p.add_argument("--keep-singletons", action="store_true", help="score singleton entities too")
    p.add_argument("--zero-match", choices=["dep", "strict"], default="dep", help="zero mention alignment")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corefkit", description="Coreference data conversion and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="score a prediction against gold CoNLL-U")
    p.add_argument("gold")
    p.add_argument("pred")
    _match_flags(p)
    p.add_argument("--all-variants", action="store_true", help="report all four matching variants")
    p.add_argument("--metrics", help="comma-separated subset of " + ",".join([*METRICS, "conll"]))
    p.add_argument("--format", choices=["json", "tsv", "text"], default="text")
    p.add_argument("--dataset", help="dataset ID for the report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    conv = sub.add_parser("convert", help="convert between CoNLL-U and plaintext")
    csub = conv.add_subparsers(dest="direction", required=True, parser_class=_Parser)
    t = csub.add_parser("to-text", help="CoNLL-U to one line per document")
    t.add_argument("input")
    t.add_argument("--no-annotations", action="store_true", help="bare tokens, no empty nodes")
    t.add_argument("--mwt-surface", action="store_true", help="write multi-word tokens as one token")
    t.add_argument("--strip-empty-forms", action="store_true", help="drop forms and lemmas of empty nodes")
    t.add_argument("--out")
    t.set_defaults(func=cmd_to_text)
    c = csub.add_parser("to-conllu", help="plaintext back onto a CoNLL-U skeleton")
    c.add_argument("input")
    c.add_argument("--skeleton", required=True)
    c.add_argument("--mwt-surface", action="store_true")
    c.add_argument("--out")
    c.set_defaults(func=cmd_to_conllu)

    p = sub.add_parser("clean", help="repair model output so that it restores onto the skeleton")
    p.add_argument("input")
    p.add_argument("--skeleton", required=True)
    p.add_argument("--mwt-surface", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("sample-mini", help="sample complete documents under a word cap")
    p.add_argument("input")
    p.add_argument("--cap", type=int, default=25_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("stats", help="entity and mention statistics")
    p.add_argument("input")
    p.add_argument("--format", choices=["json", "tsv", "text"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("upos-factor", help="CoNLL F1 restricted by head UPOS")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--upos", required=True, help="tag or comma-separated tags")
    p.add_argument("--mode", choices=["entity", "mention"], default="entity")
    _match_flags(p)
    p.add_argument("--format", choices=["json", "tsv", "text"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_upos)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"corefkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"corefkit: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands wire the pipeline end to end: prep, split, train, eval,
explain, analyze, freq, sample-150, gen-demo. Exit codes: 0 success,
1 usage error, 2 data error, 3 black-box protocol error. All
randomness flows from --seed; a TOML config file can supply defaults
that command-line flags override.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import (
    analysis_report,
    confusion,
    error_breakdown,
    frequency_svg,
    render_confusion_text,
    render_explanation_report,
    sample_per_class,
    to_json,
    top_frequent_words,
)
from .baseline import (
    ClassReport,
    TrainConfig,
    evaluate,
    labels_array,
    load_model,
    save_model,
    train_baseline,
)
from .blackbox import PROTOCOL_VERSION, InProcessHandle, open_external
from .corpus import (
    CLASS_NAMES,
    ClassLabel,
    ColumnMapping,
    load_corpus,
    preprocess_corpus,
    read_jsonl,
    stratified_split,
    write_jsonl,
)
from .engine import (
    KernelConfig,
    SurrogateConfig,
    derive_seed,
    explain_all_classes,
)
from .errors import LimelightError, UsageError
from .synthetic import write_keyword_csv
from .text import preprocess, preprocess_light

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse maps its own failures to exit 2; this toolkit uses 1."""

    def error(self, message):
        raise UsageError(message)


def _load_config_defaults(argv: list[str]) -> dict:
    """Pre-scan for --config and load TOML values as parse defaults."""
    for i, arg in enumerate(argv):
        if arg == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file path")
            path = Path(argv[i + 1])
        elif arg.startswith("--config="):
            path = Path(arg.split("=", 1)[1])
        else:
            continue
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            return tomllib.loads(path.read_text(encoding="utf-8"))
        except Exception as exc:
            raise UsageError(f"cannot parse config file {path}: {exc}") from None
    return {}


def _build_parser() -> tuple[_Parser, list[argparse.ArgumentParser]]:
    parser = _Parser(prog="limelight",
                     description="Local explanations for text classifiers")
    parser.add_argument("--version", action="version",
                        version=f"limelight {__version__} (protocol {PROTOCOL_VERSION})")
    parser.add_argument("--config", metavar="FILE", help="TOML file with flag defaults")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("prep", help="CSV corpus -> preprocessed JSONL")
    p.add_argument("--in", dest="input", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="JSONL")
    p.add_argument("--text-col", default="tweet")
    p.add_argument("--label-col", default="class")
    p.add_argument("--id-col", default=None)
    p.add_argument("--label-map", default="0=Hate,1=Offensive,2=None",
                   help="integer=class pairs, comma separated")
    p.add_argument("--strict", action="store_true",
                   help="abort on any malformed row instead of skipping")
    p.set_defaults(func=_cmd_prep)

    p = sub.add_parser("split", help="stratified 70:20:10 split")
    p.add_argument("--in", dest="input", required=True, metavar="JSONL")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ratios", default="0.7,0.2,0.1")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="fit the TF-IDF + softmax baseline")
    p.add_argument("--train", required=True, metavar="JSONL")
    p.add_argument("--eval", dest="eval_set", metavar="JSONL",
                   help="split to report per-epoch metrics on")
    p.add_argument("--out", required=True, metavar="MODEL_JSON")
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--report", metavar="FILE",
                   help="also write the report (.json or text)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="classification report for a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True, metavar="JSONL")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("explain", help="explain texts against a classifier")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", help="saved baseline model (in-process)")
    group.add_argument("--blackbox", metavar="CMD",
                       help="external adapter command line")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--text")
    source.add_argument("--batch", metavar="FILE", help="one text per line")
    p.add_argument("--classes", default="all",
                   help="'all' or one of " + "/".join(CLASS_NAMES))
    p.add_argument("--format", choices=("json", "html", "text"), default="json")
    p.add_argument("--out", metavar="FILE", help="default: stdout")
    p.add_argument("--sigma", type=float, default=25.0)
    p.add_argument("--num-samples", type=int, default=1000)
    p.add_argument("--ridge-lambda", type=float, default=1.0)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--selection", choices=("highest_weight", "forward_selection"),
                   default="highest_weight")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel explanations in batch mode")
    p.add_argument("--timeout", type=float, default=30.0,
                   help="seconds per black-box batch")
    p.add_argument("--token-mode", choices=("pipeline", "light"), default=None,
                   help="pipeline: preprocessed tokens (default for --model); "
                        "light: raw-text tokens (default for --blackbox)")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp footer in HTML output")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("analyze", help="confusion matrix and error breakdown")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model")
    group.add_argument("--blackbox", metavar="CMD")
    p.add_argument("--in", dest="input", required=True, metavar="JSONL")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--tie-epsilon", type=float, default=0.0,
                   help="tolerance for the equal-probability tie test "
                        "(0 = bitwise equality)")
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("freq", help="top-k frequent words per class")
    p.add_argument("--in", dest="input", required=True, metavar="JSONL")
    p.add_argument("--class", dest="class_name", default="all",
                   help="'all' or one of " + "/".join(CLASS_NAMES))
    p.add_argument("-k", type=int, default=60)
    p.add_argument("--out", metavar="FILE", help="CSV path (single class)")
    p.add_argument("--out-dir", help="directory for per-class CSVs (class=all)")
    p.add_argument("--svg", action="store_true",
                   help="also write a bar-chart SVG next to each CSV")
    p.set_defaults(func=_cmd_freq)

    p = sub.add_parser("sample-150", help="seeded sample of N docs per class")
    p.add_argument("--in", dest="input", required=True, metavar="JSONL")
    p.add_argument("--out", required=True, metavar="JSONL")
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("gen-demo", help="write the synthetic keyword corpus CSV")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--docs", type=int, default=3000)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_gen_demo)

    return parser, list(sub.choices.values())


def _write_or_print(content: str, path: str | None) -> None:
    if path:
        Path(path).write_text(content, encoding="utf-8")
    else:
        sys.stdout.write(content)


def _cmd_prep(args) -> int:
    label_map = {}
    for pair in args.label_map.split(","):
        try:
            value, name = pair.split("=")
            label_map[int(value)] = ClassLabel.from_name(name)
        except ValueError:
            raise UsageError(f"bad --label-map entry: {pair!r}") from None
    mapping = ColumnMapping(text_column=args.text_col, label_column=args.label_col,
                            id_column=args.id_col, label_map=label_map)
    records = load_corpus(args.input, mapping, strict=args.strict)
    docs = preprocess_corpus(records)
    write_jsonl(docs, args.out)
    print(f"prep: {len(docs)} documents -> {args.out}")
    return 0


def _cmd_split(args) -> int:
    try:
        ratios = tuple(float(r) for r in args.ratios.split(","))
    except ValueError:
        raise UsageError(f"bad --ratios: {args.ratios!r}") from None
    if len(ratios) != 3:
        raise UsageError("--ratios needs exactly three values")
    docs = read_jsonl(args.input)
    split = stratified_split(docs, ratios=ratios, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "test", "validation"), split):
        write_jsonl(part, out_dir / f"{name}.jsonl")
    print(f"split: {len(split.train)}/{len(split.test)}/{len(split.validation)} "
          f"-> {out_dir}")
    return 0


def _cmd_train(args) -> int:
    train_docs = read_jsonl(args.train)
    eval_docs = read_jsonl(args.eval_set) if args.eval_set else None
    config = TrainConfig(epochs=args.epochs, learning_rate=args.learning_rate,
                         l2=args.l2, batch_size=args.batch_size, seed=args.seed)
    classifier, report = train_baseline(train_docs, eval_docs, config)
    save_model(classifier, args.out)
    sys.stdout.write(report.render_text())
    if args.report:
        if args.report.endswith(".json"):
            Path(args.report).write_text(to_json(report.to_dict()), encoding="utf-8")
        else:
            Path(args.report).write_text(report.render_text(), encoding="utf-8")
    print(f"train: model -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    classifier = load_model(args.model)
    docs = read_jsonl(args.input)
    features = classifier.tfidf.transform(docs)
    metrics = evaluate(classifier.softmax, features, labels_array(docs))
    report = ClassReport(rows=[metrics])
    content = (to_json(report.to_dict()) if args.format == "json"
               else report.render_text())
    _write_or_print(content, args.out)
    return 0


def _open_handle(args):
    if args.model:
        return InProcessHandle(load_model(args.model))
    return open_external(args.blackbox, CLASS_NAMES, timeout=args.timeout)


def _cmd_explain(args) -> int:
    surrogate_base = dict(num_samples=args.num_samples,
                          ridge_lambda=args.ridge_lambda, top_k=args.top_k,
                          feature_selection=args.selection)
    kernel = KernelConfig(sigma=args.sigma)
    token_mode = args.token_mode or ("pipeline" if args.model else "light")
    tokenizer = preprocess if token_mode == "pipeline" else preprocess_light
    wanted = None
    if args.classes != "all":
        wanted = ClassLabel.from_name(args.classes)
    timestamp = None if args.no_timestamp else (
        datetime.datetime.now().isoformat(timespec="seconds"))

    with _open_handle(args) as handle:
        if args.text is not None:
            surrogate = SurrogateConfig(seed=args.seed, **surrogate_base)
            explanation = explain_all_classes(handle, args.text, kernel,
                                              surrogate, tokenizer)
            if wanted is not None:
                explanation.fits = tuple(
                    f for f in explanation.fits if f.class_index == int(wanted))
            _write_or_print(
                render_explanation_report(explanation, args.format, timestamp),
                args.out)
            return 0

        # batch mode: JSON lines, written in input order
        if args.format != "json":
            raise UsageError("--batch output is JSON lines; use --format json")
        batch_path = Path(args.batch)
        if not batch_path.exists():
            raise UsageError(f"batch file not found: {batch_path}")
        texts = [line.rstrip("\n") for line in
                 batch_path.read_text(encoding="utf-8").splitlines()]
        texts = [t for t in texts if t.strip()]

        def explain_one(item):
            index, text = item
            surrogate = SurrogateConfig(seed=derive_seed(args.seed, index),
                                        **surrogate_base)
            explanation = explain_all_classes(handle, text, kernel,
                                              surrogate, tokenizer)
            if wanted is not None:
                explanation.fits = tuple(
                    f for f in explanation.fits if f.class_index == int(wanted))
            return explanation.to_json()

        jobs = max(1, args.jobs)
        if jobs == 1:
            lines = [explain_one(item) for item in enumerate(texts)]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                lines = list(pool.map(explain_one, enumerate(texts)))
        content = "".join(line + "\n" for line in lines)
        _write_or_print(content, args.out)
        if args.out:
            print(f"explain: {len(lines)} explanations -> {args.out}")
        return 0


def _cmd_analyze(args) -> int:
    docs = read_jsonl(args.input)
    if not docs:
        raise LimelightError("analyze: no documents in input")
    with _open_handle(args) as handle:
        probabilities = handle.predict_proba_batch([d.raw_text for d in docs])
    matrix = confusion([d.label for d in docs], probabilities,
                       tie_epsilon=args.tie_epsilon)
    breakdown = error_breakdown(matrix)
    if args.format == "json":
        content = to_json(analysis_report(matrix, breakdown))
    else:
        content = render_confusion_text(matrix) + "\n" + breakdown.render_text()
    _write_or_print(content, args.out)
    return 0


def _cmd_freq(args) -> int:
    docs = read_jsonl(args.input)
    if args.class_name == "all":
        if not args.out_dir:
            raise UsageError("freq --class all needs --out-dir")
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for label in ClassLabel:
            table = top_frequent_words(docs, label, k=args.k)
            (out_dir / f"{label.display}.csv").write_text(table.to_csv(),
                                                          encoding="utf-8")
            if args.svg:
                (out_dir / f"{label.display}.svg").write_text(
                    frequency_svg(table), encoding="utf-8")
        print(f"freq: tables -> {out_dir}")
        return 0
    label = ClassLabel.from_name(args.class_name)
    table = top_frequent_words(docs, label, k=args.k)
    _write_or_print(table.to_csv(), args.out)
    if args.svg:
        if not args.out:
            raise UsageError("freq --svg needs --out to name the chart file")
        svg_path = Path(args.out).with_suffix(".svg")
        svg_path.write_text(frequency_svg(table), encoding="utf-8")
    return 0


def _cmd_sample(args) -> int:
    docs = read_jsonl(args.input)
    sampled = sample_per_class(docs, per_class=args.per_class, seed=args.seed)
    write_jsonl(sampled, args.out)
    print(f"sample-150: {len(sampled)} documents -> {args.out}")
    return 0


def _cmd_gen_demo(args) -> int:
    count = write_keyword_csv(args.out, n_docs=args.docs, seed=args.seed)
    print(f"gen-demo: {count} rows -> {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stage = "cli"
    try:
        defaults = _load_config_defaults(argv)
        parser, subparsers = _build_parser()
        if defaults:
            # subcommands parse into their own namespace, so defaults must
            # be installed on every parser; explicit flags still win
            clean = {k: v for k, v in defaults.items()
                     if isinstance(k, str) and k not in ("func", "command")}
            parser.set_defaults(**clean)
            for sub in subparsers:
                sub.set_defaults(**clean)
        args = parser.parse_args(argv)
        if getattr(args, "verbose", False):
            logging.basicConfig(level=logging.INFO, stream=sys.stderr)
        stage = args.command or "cli"
        return args.func(args)
    except SystemExit as exc:  # argparse --help / --version
        code = exc.code
        return code if isinstance(code, int) else 0
    except LimelightError as exc:
        print(f"{stage}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

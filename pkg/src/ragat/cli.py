"""Command-line entry point: train, eval, predict, inspect-graph, gen-corpus.

Exit codes: 0 success, 1 config/checkpoint error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .cograph import format_edges, graph_for
from .config import RunConfig, load_config
from .corpus import write_corpus
from .errors import ConfigError, DimensionError, EmptyInputError, NumericError, ParseError
from .evaluation import format_report
from .model import CheckpointError, init_params, load_checkpoint, predict_proba, save_checkpoint
from .textdata import Vocabulary, build_vocab, encode, load_dataset, split, tokenize
from .training import default_evaluate, fit, prepare

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

CHECKPOINT_NAME = "checkpoint.bin"
VOCAB_NAME = "vocab.tsv"
LOG_NAME = "train_log.tsv"
REPORT_NAME = "report.txt"
CONFIG_NAME = "config.json"


class DataError(Exception):
    pass


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _config(path, seed=None) -> RunConfig:
    config = load_config(path) if path else RunConfig()
    return config if seed is None else config.replace(seed=seed)


def _read_data(path):
    if path is None:
        raise ConfigError("no data path given (--data or data_path in config)")
    if not Path(path).is_file():
        raise DataError(f"data file not found: {path}")
    try:
        examples = load_dataset(path)
    except (ParseError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from None
    if not examples:
        raise DataError(f"{path}: no examples")
    return examples


def _encode_all(examples, vocab, config):
    return [encode(tokenize(ex.text, config.tokenizer), vocab, config.max_len).with_label(ex.label) for ex in examples]


def _run(fn, *args) -> int:
    try:
        return fn(*args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, f"config: {exc}")
    except (CheckpointError, DimensionError) as exc:
        return _fail(EXIT_CONFIG, f"checkpoint: {exc}")
    except (DataError, EmptyInputError) as exc:
        return _fail(EXIT_DATA, str(exc))
    except NumericError as exc:
        return _fail(EXIT_NUMERIC, f"numeric failure: {exc}")


def cmd_train(config_path, data_path, out_dir, seed=None) -> int:
    def run():
        config = _config(config_path, seed)
        data = data_path or config.data_path
        out = out_dir or config.out_dir
        if out is None:
            raise ConfigError("no output directory given (--out or out_dir in config)")
        config = config.replace(data_path=str(data) if data else None, out_dir=str(out))
        examples = _read_data(data)
        if len(examples) < 2:
            raise DataError(f"{data}: need at least two examples to split")
        train_raw, test_raw = split(examples, config.train_ratio, config.seed)
        vocab = build_vocab(train_raw, config.tokenizer, config.min_freq, config.max_vocab)
        train_set = prepare(_encode_all(train_raw, vocab, config), config)
        test_set = prepare(_encode_all(test_raw, vocab, config), config)
        params = init_params(config, len(vocab))
        best, log = fit(params, train_set, test_set, config)
        report = default_evaluate(best, test_set, config)

        out_path = Path(out)
        out_path.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out_path / CHECKPOINT_NAME, best, config, vocab)
        vocab.save(out_path / VOCAB_NAME)
        (out_path / LOG_NAME).write_text(log.to_tsv(), encoding="utf-8")
        text = format_report(report)
        (out_path / REPORT_NAME).write_text(text, encoding="utf-8")
        config.save(out_path / CONFIG_NAME)
        print(log.to_tsv(), end="")
        print(text, end="")
        return EXIT_OK

    return _run(run)


def _load(checkpoint):
    try:
        return load_checkpoint(checkpoint)
    except OSError as exc:
        raise CheckpointError(f"cannot read {checkpoint}: {exc.strerror}") from None


def cmd_eval(checkpoint, data_path, tsv=False, report_path=None) -> int:
    def run():
        params, config, vocab = _load(checkpoint)
        examples = _read_data(data_path)
        dataset = prepare(_encode_all(examples, vocab, config), config)
        text = format_report(default_evaluate(params, dataset, config), tsv=tsv)
        print(text, end="")
        if report_path:
            Path(report_path).write_text(text, encoding="utf-8")
        return EXIT_OK

    return _run(run)


def cmd_predict(checkpoint, text) -> int:
    def run():
        params, config, vocab = _load(checkpoint)
        example = encode(tokenize(text or "", config.tokenizer), vocab, config.max_len)
        p = predict_proba(example, params, config)
        label = 1 if p[1] > p[0] else 0
        print(f"label\t{label}\t{'rumor' if label else 'non-rumor'}")
        print(f"p_non_rumor\t{p[0]:.4f}")
        print(f"p_rumor\t{p[1]:.4f}")
        return EXIT_OK

    return _run(run)


def cmd_inspect_graph(config_path, text) -> int:
    def run():
        config = _config(config_path)
        tokens = tokenize(text or "", config.tokenizer)
        example = encode(tokens, Vocabulary(["<pad>", "<unk>"]), config.max_len)
        adj = graph_for(example, config.window, "raw")
        print(format_edges(adj, tokens[: config.max_len]))
        return EXIT_OK

    return _run(run)


def cmd_gen_corpus(out_path, n_per_class, seed=0) -> int:
    if n_per_class < 1:
        return _fail(EXIT_CONFIG, "--n-per-class must be >= 1")
    try:
        write_corpus(out_path, n_per_class, seed)
    except OSError as exc:
        return _fail(EXIT_DATA, f"cannot write {out_path}: {exc.strerror}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ragat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on an 8:2 split and write a checkpoint")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("eval", help="print a metrics report for a labelled file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--tsv", action="store_true", help="tab-separated output")
    p.add_argument("--report-out", help="also write the report to this file")

    p = sub.add_parser("predict", help="classify one text")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--text", required=True)

    p = sub.add_parser("inspect-graph", help="print the co-occurrence edges of one text")
    p.add_argument("--config")
    p.add_argument("--text", required=True)

    p = sub.add_parser("gen-corpus", help="write a separable synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "train":
        return cmd_train(args.config, args.data, args.out, args.seed)
    if args.command == "eval":
        return cmd_eval(args.checkpoint, args.data, args.tsv, args.report_out)
    if args.command == "predict":
        return cmd_predict(args.checkpoint, args.text)
    if args.command == "inspect-graph":
        return cmd_inspect_graph(args.config, args.text)
    return cmd_gen_corpus(args.out, args.n_per_class, args.seed)


if __name__ == "__main__":
    sys.exit(main())

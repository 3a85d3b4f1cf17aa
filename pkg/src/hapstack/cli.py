"""Command-line entry point: one executable, one subcommand per capability.

Subcommands: score, filter, heatmap, rescore, sample, bench, init-random.
Data records go to stdout (or --output); diagnostics go to stderr. The
model path falls back to the HAPSTACK_MODEL environment variable. Exit
codes: 0 success, 1 runtime/I/O error, 2 usage error or unreadable model.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import bootstrap, heatmap, model_io, pipeline, rescore, wordpiece
from .config import DEFAULT_HAP_THRESHOLD, DEFAULT_MAX_LENGTH, RunConfig
from .encoder import EncoderConfig, forward_batch, init_random
from .model_io import LoadedModel
from .wordpiece import encode

USAGE_ERROR = 2
RUNTIME_ERROR = 1


class CommandError(Exception):
    def __init__(self, message: str, code: int = RUNTIME_ERROR):
        super().__init__(message)
        self.code = code


def _parse_config_spec(spec: str) -> EncoderConfig:
    """Parse 'layers,heads,hidden,intermediate,vocab,positions'."""
    parts = spec.split(",")
    if len(parts) != 6:
        raise CommandError(f"--config expects 6 comma-separated integers, got {spec!r}",
                           USAGE_ERROR)
    try:
        layers, heads, hidden, inter, vocab, positions = (int(p) for p in parts)
        return EncoderConfig(num_layers=layers, num_heads=heads, hidden_size=hidden,
                             intermediate_size=inter, vocab_size=vocab,
                             max_positions=positions)
    except ValueError as exc:
        raise CommandError(f"invalid --config {spec!r}: {exc}", USAGE_ERROR) from exc


def _resolve_model_path(args: argparse.Namespace) -> str:
    path = args.model or os.environ.get("HAPSTACK_MODEL")
    if not path:
        raise CommandError("no model given: pass --model or set HAPSTACK_MODEL",
                           USAGE_ERROR)
    return path


def _load_model(args: argparse.Namespace) -> LoadedModel:
    path = _resolve_model_path(args)
    try:
        return model_io.load_bundle(path)
    except (OSError, model_io.BundleError, wordpiece.VocabularyError, ValueError) as exc:
        raise CommandError(f"cannot load model {path}: {exc}", USAGE_ERROR) from exc


def _read_input_lines(args: argparse.Namespace) -> list[str]:
    if args.input:
        data = Path(args.input).read_text(encoding="utf-8")
    else:
        data = sys.stdin.read()
    if data.endswith("\n"):
        data = data[:-1]
    return data.split("\n") if data else []


def _write_lines(args: argparse.Namespace, lines: list[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_score(args: argparse.Namespace) -> int:
    model = _load_model(args)
    sentences = _read_input_lines(args)
    scores = pipeline.score_sentences(sentences, model, args.batch_size,
                                      max_length=args.max_length)
    _write_lines(args, [f"{s.hap:.6f}\t{s.non_hap:.6f}\t{sentence}"
                        for sentence, s in zip(sentences, scores)])
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    model = _load_model(args)
    run_config = RunConfig(
        model_path=args.model,
        batch_size=args.batch_size,
        max_length=args.max_length,
        hap_threshold=args.threshold,
        max_flagged_fraction=args.max_flagged_fraction,
        workers=args.workers,
        dynamic_batching=args.dynamic_batching,
        token_budget=args.token_budget,
    )
    summary = pipeline.run_corpus(args.input, args.output, model, run_config)
    sys.stdout.write("".join(line + "\n" for line in summary.to_lines()))
    return 0


def cmd_heatmap(args: argparse.Namespace) -> int:
    model = _load_model(args)
    config, weights, vocab = model
    sentences = [line for line in _read_input_lines(args) if line]
    rendered = []
    for sentence in sentences:
        seq = encode(sentence, vocab, min(args.max_length, config.max_positions),
                     pad_to_max=False)
        output = forward_batch([seq], weights, config)[0]
        hm = heatmap.compute_heatmap(output, seq)
        rendered.append(heatmap.render_heatmap(hm, format=args.format).rstrip("\n"))
    _write_lines(args, ["\n\n".join(rendered)] if rendered else [])
    return 0


def cmd_rescore(args: argparse.Namespace) -> int:
    hypotheses = rescore.read_beam_file(args.input)
    model = None
    if any(h.non_hap is None for h in hypotheses):
        model = _load_model(args)
    ranked = rescore.rescore_beam(hypotheses, model, weight=args.rescore_lambda,
                                  batch_size=args.batch_size, max_length=args.max_length)
    _write_lines(args, rescore.format_ranked(ranked))
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    sentences = _read_input_lines(args)
    if args.mine:
        model = _load_model(args)
        mined = bootstrap.mine_high_confidence(
            sentences, model, min_hap=args.min_hap, limit=args.limit,
            seed=args.seed, batch_size=args.batch_size, max_length=args.max_length)
        _write_lines(args, [f"{score.hap:.6f}\t{score.non_hap:.6f}\t{sentence}"
                            for sentence, score in mined])
        return 0
    if not args.lexicon:
        raise CommandError("--lexicon is required unless --mine is given", USAGE_ERROR)
    lexicon = bootstrap.load_lexicon(args.lexicon)
    samples = bootstrap.label_corpus(sentences, lexicon, mode=args.match_mode,
                                     case_fold=args.case_fold)
    if args.target_size is not None:
        samples = bootstrap.balanced_sample(samples, args.target_size, args.seed)
    _write_lines(args, [
        f"{s.label.value}\t{s.sentence}\t{';'.join(s.matched_terms)}"
        for s in samples
    ])
    return 0


def _format_bench_report(report: pipeline.BenchReport) -> list[str]:
    lines = [
        f"model={report.model_label}",
        f"architecture={','.join(str(d) for d in report.architecture)}",
        f"mean_latency_ms={report.mean_latency_ms:.4f}",
        f"stddev_ms={report.stddev_ms:.4f}",
        f"seeds={report.seeds}",
    ]
    if report.throughput_docs_per_s is not None:
        lines.append(f"docs_per_s={report.throughput_docs_per_s:.3f}")
    return lines


def cmd_bench(args: argparse.Namespace) -> int:
    config_a = _parse_config_spec(args.config)
    config_b = _parse_config_spec(args.config_b)
    if args.mode == "latency":
        report_a, report_b, speedup = pipeline.bench_latency(
            config_a, config_b, n_runs=args.runs, n_seeds=args.seeds,
            seq_len=args.seq_len)
    else:
        if not args.corpus:
            raise CommandError("--corpus is required for throughput mode", USAGE_ERROR)
        report_a, report_b, speedup = pipeline.bench_throughput(
            args.corpus, config_a, config_b, workers=args.workers,
            dynamic_batching=args.dynamic_batching, batch_size=args.batch_size,
            seed=args.seed)
    lines = _format_bench_report(report_a) + _format_bench_report(report_b)
    lines.append(f"speedup={speedup:.4f}")
    sys.stdout.write("".join(line + "\n" for line in lines))
    return 0


def cmd_init_random(args: argparse.Namespace) -> int:
    config = _parse_config_spec(args.config)
    if args.vocab:
        vocab = wordpiece.load_vocab(args.vocab)
        if len(vocab) != config.vocab_size:
            raise CommandError(f"vocab file has {len(vocab)} tokens but config "
                               f"declares {config.vocab_size}", USAGE_ERROR)
    else:
        vocab = wordpiece.build_ascii_vocab(config.vocab_size)
    weights = init_random(config, args.seed)
    model_io.save_bundle(config, weights, vocab, args.output)
    print(f"wrote {args.output}", file=sys.stderr)
    return 0


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", "-m", help="model bundle path "
                        "(falls back to $HAPSTACK_MODEL)")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--max-length", type=int, default=DEFAULT_MAX_LENGTH)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapstack",
        description="Score, filter, explain and rescore text for hate/abuse/profanity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score sentences from stdin or --input")
    _add_model_flags(p)
    p.add_argument("--input", help="sentence-per-line input file (default stdin)")
    p.add_argument("--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("filter", help="filter a document corpus")
    _add_model_flags(p)
    p.add_argument("--input", required=True, help="corpus file: <id>\\t<text>")
    p.add_argument("--output", required=True, help="decision records file")
    p.add_argument("--threshold", type=float, default=DEFAULT_HAP_THRESHOLD)
    p.add_argument("--max-flagged-fraction", type=float, default=0.5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dynamic-batching", action="store_true")
    p.add_argument("--token-budget", type=int, default=8192)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("heatmap", help="render attention heatmaps for sentences")
    _add_model_flags(p)
    p.add_argument("--input", help="sentence-per-line input file (default stdin)")
    p.add_argument("--output", help="output file (default stdout)")
    p.add_argument("--format", choices=heatmap.RENDER_FORMATS, default="text-grid")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("rescore", help="re-rank a beam file by combined score")
    _add_model_flags(p)
    p.add_argument("--input", required=True,
                   help="beam file: <original_score>\\t<text>[\\t<non_hap>]")
    p.add_argument("--output", help="output file (default stdout)")
    p.add_argument("--lambda", dest="rescore_lambda", type=float, default=1.0,
                   help="weight on the non-HAP score (default 1.0)")
    p.set_defaults(func=cmd_rescore)

    p = sub.add_parser("sample", help="weakly label sentences against a lexicon")
    _add_model_flags(p)
    p.add_argument("--input", help="sentence-per-line input file (default stdin)")
    p.add_argument("--output", help="output file (default stdout)")
    p.add_argument("--lexicon", help="term-per-line lexicon file")
    p.add_argument("--match-mode", choices=bootstrap.MATCH_MODES,
                   default="word-boundary")
    p.add_argument("--case-fold", action="store_true")
    p.add_argument("--target-size", type=int,
                   help="draw a balanced sample of this size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mine", action="store_true",
                   help="mine high-confidence positives with the model instead")
    p.add_argument("--min-hap", type=float, default=0.5)
    p.add_argument("--limit", type=int, default=100)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("bench", help="latency/throughput comparison of two architectures")
    p.add_argument("--mode", choices=("latency", "throughput"), default="latency")
    p.add_argument("--config", required=True,
                   help="layers,heads,hidden,intermediate,vocab,positions")
    p.add_argument("--config-b", required=True, help="second architecture, same format")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seq-len", type=int, default=32)
    p.add_argument("--corpus", help="corpus file for throughput mode")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--dynamic-batching", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("init-random", help="write a randomly initialized model bundle")
    p.add_argument("--config", required=True,
                   help="layers,heads,hidden,intermediate,vocab,positions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="bundle path to write")
    p.add_argument("--vocab", help="vocab file (default: synthetic ASCII vocab)")
    p.set_defaults(func=cmd_init_random)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"hapstack: {exc}", file=sys.stderr)
        return exc.code
    except (OSError, ValueError) as exc:
        print(f"hapstack: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end scoring, document filtering and benchmark harnesses.

Documents are split into sentences, each sentence scored with a softmax
over the classifier's two logits (index 1 = HAP), and a document is
discarded when too large a fraction of its sentences score at or above
the threshold. Corpus runs stream a line-delimited record format and can
fan work out over threads while keeping output order and bytes identical
to a single-worker run.
"""

from __future__ import annotations

import logging
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .encoder import EncoderConfig, count_parameters, forward, forward_batch, init_random
from .model_io import LoadedModel
from .wordpiece import TokenizedSequence, build_ascii_vocab, encode, pad_sequence

logger = logging.getLogger(__name__)

SENTENCE_TERMINATORS = ".!?"
BENCH_WARMUP_RUNS = 3


@dataclass(frozen=True)
class HapScore:
    """Softmax probability pair; ``hap`` is the probability of toxic content."""

    non_hap: float
    hap: float


@dataclass(frozen=True)
class Document:
    id: str
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")


@dataclass
class FilterDecision:
    doc_id: str
    sentence_scores: list[tuple[str, HapScore]]
    flagged_fraction: float
    kept: bool


@dataclass
class BenchReport:
    model_label: str
    architecture: tuple[int, int, int, int]
    mean_latency_ms: float
    stddev_ms: float
    seeds: int
    throughput_docs_per_s: float | None = None


@dataclass
class CorpusSummary:
    processed: int
    skipped: int
    kept: int
    discarded: int
    wall_ms: float
    docs_per_s: float

    def to_lines(self) -> list[str]:
        return [
            f"processed={self.processed}",
            f"skipped={self.skipped}",
            f"kept={self.kept}",
            f"discarded={self.discarded}",
            f"wall_ms={self.wall_ms:.3f}",
            f"docs_per_s={self.docs_per_s:.3f}",
        ]


def split_sentences(text: str) -> list[str]:
    """Deterministic splitter: newlines always break; ``. ! ?`` break when
    followed by whitespace or end of line. Terminators stay with their
    sentence and empty fragments are dropped."""
    sentences: list[str] = []
    for line in text.split("\n"):
        buf: list[str] = []
        for idx, ch in enumerate(line):
            buf.append(ch)
            if ch in SENTENCE_TERMINATORS and (idx + 1 == len(line) or line[idx + 1].isspace()):
                fragment = "".join(buf).strip()
                if fragment:
                    sentences.append(fragment)
                buf = []
        fragment = "".join(buf).strip()
        if fragment:
            sentences.append(fragment)
    return sentences


def softmax_pair(logits: np.ndarray) -> HapScore:
    """Two-way softmax in float64; index 1 is the HAP label."""
    a, b = float(logits[0]), float(logits[1])
    m = max(a, b)
    ea, eb = math.exp(a - m), math.exp(b - m)
    z = ea + eb
    return HapScore(non_hap=ea / z, hap=eb / z)


def _batch_indices(seqs: list[TokenizedSequence], batch_size: int,
                   dynamic_batching: bool, token_budget: int) -> list[list[int]]:
    n = len(seqs)
    if not dynamic_batching:
        return [list(range(i, min(i + batch_size, n))) for i in range(0, n, batch_size)]
    # Bucket by token length (stable) so batches pad to similar sizes; cap
    # each batch at max(batch_size, token_budget / longest-member-length).
    order = sorted(range(n), key=lambda i: len(seqs[i].ids))
    batches: list[list[int]] = []
    current: list[int] = []
    for idx in order:
        cap = max(batch_size, token_budget // max(1, len(seqs[idx].ids)))
        if current and len(current) >= cap:
            batches.append(current)
            current = []
        current.append(idx)
    if current:
        batches.append(current)
    return batches


def score_sentences(sentences: list[str], model: LoadedModel, batch_size: int,
                    max_length: int = 512, dynamic_batching: bool = False,
                    token_budget: int = 8192) -> list[HapScore]:
    """Score each sentence; output order matches input order and the
    results are independent of batch composition within 1e-5."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    config, weights, vocab = model
    effective_max = min(max_length, config.max_positions)
    seqs = [encode(sentence, vocab, effective_max, pad_to_max=False)
            for sentence in sentences]
    scores: list[HapScore | None] = [None] * len(seqs)
    for batch in _batch_indices(seqs, batch_size, dynamic_batching, token_budget):
        target = max(len(seqs[i].ids) for i in batch)
        padded = [pad_sequence(seqs[i], target, vocab) for i in batch]
        outputs = forward_batch(padded, weights, config)
        for i, output in zip(batch, outputs):
            scores[i] = softmax_pair(output.logits)
    return scores  # type: ignore[return-value]


def decide_from_scores(hap_scores: list[float], hap_threshold: float,
                       max_flagged_fraction: float) -> tuple[float, bool]:
    """Filter rule on raw hap scores: flagged when score >= threshold,
    discarded when the flagged fraction exceeds the allowed maximum."""
    if not hap_scores:
        return 0.0, True
    flagged = sum(1 for s in hap_scores if s >= hap_threshold)
    fraction = flagged / len(hap_scores)
    return fraction, fraction <= max_flagged_fraction


def filter_document(doc: Document, model: LoadedModel, hap_threshold: float,
                    max_flagged_fraction: float, batch_size: int = 32,
                    max_length: int = 512, dynamic_batching: bool = False,
                    token_budget: int = 8192) -> FilterDecision:
    if not 0.0 <= hap_threshold <= 1.0 or not 0.0 <= max_flagged_fraction <= 1.0:
        raise ValueError("thresholds must lie in [0, 1]")
    sentences = split_sentences(doc.text)
    scores = score_sentences(sentences, model, batch_size, max_length=max_length,
                             dynamic_batching=dynamic_batching, token_budget=token_budget)
    fraction, kept = decide_from_scores([s.hap for s in scores],
                                        hap_threshold, max_flagged_fraction)
    return FilterDecision(
        doc_id=doc.id,
        sentence_scores=list(zip(sentences, scores)),
        flagged_fraction=fraction,
        kept=kept,
    )


def unescape_text(text: str) -> str:
    """Undo the corpus format's LF escaping."""
    return text.replace("\\n", "\n")


def escape_text(text: str) -> str:
    return text.replace("\n", "\\n")


def _parse_corpus_line(line: str) -> Document | None:
    tab = line.find("\t")
    if tab <= 0:
        return None
    return Document(id=line[:tab], text=unescape_text(line[tab + 1:]))


def format_decision(decision: FilterDecision) -> str:
    joined = ",".join(f"{score.hap:.6f}" for _, score in decision.sentence_scores)
    return (f"{decision.doc_id}\t{int(decision.kept)}\t"
            f"{decision.flagged_fraction:.6f}\t{joined}")


def run_corpus(input_path: str | Path, output_path: str | Path,
               model: LoadedModel, run_config: RunConfig) -> CorpusSummary:
    """Filter every document in a tab-separated corpus file.

    One decision record per document, in input order regardless of worker
    count; malformed lines are logged, counted and skipped.
    """
    start = time.perf_counter()
    data = Path(input_path).read_text(encoding="utf-8")
    if data.endswith("\n"):
        data = data[:-1]
    lines = data.split("\n") if data else []

    docs: list[Document] = []
    skipped = 0
    for lineno, line in enumerate(lines, start=1):
        doc = _parse_corpus_line(line)
        if doc is None:
            skipped += 1
            logger.warning("skipping malformed corpus line %d", lineno)
        else:
            docs.append(doc)

    def process(doc: Document) -> FilterDecision:
        return filter_document(
            doc, model,
            hap_threshold=run_config.hap_threshold,
            max_flagged_fraction=run_config.max_flagged_fraction,
            batch_size=run_config.batch_size,
            max_length=run_config.max_length,
            dynamic_batching=run_config.dynamic_batching,
            token_budget=run_config.token_budget,
        )

    if run_config.workers > 1 and len(docs) > 1:
        with ThreadPoolExecutor(max_workers=run_config.workers) as pool:
            decisions = list(pool.map(process, docs))
    else:
        decisions = [process(doc) for doc in docs]

    with open(output_path, "w", encoding="utf-8", newline="\n") as out:
        for decision in decisions:
            out.write(format_decision(decision) + "\n")

    wall_s = time.perf_counter() - start
    kept = sum(1 for d in decisions if d.kept)
    return CorpusSummary(
        processed=len(decisions),
        skipped=skipped,
        kept=kept,
        discarded=len(decisions) - kept,
        wall_ms=wall_s * 1000.0,
        docs_per_s=len(decisions) / wall_s if wall_s > 0 else float("inf"),
    )


def _bench_label(config: EncoderConfig) -> str:
    return "x".join(str(d) for d in config.architecture)


def _measure_latency(config: EncoderConfig, n_runs: int, n_seeds: int,
                     seq_len: int) -> BenchReport:
    seed_means = []
    length = min(seq_len, config.max_positions)
    for seed in range(n_seeds):
        weights = init_random(config, seed)
        rng = np.random.default_rng(seed + 1)
        seq = TokenizedSequence(
            ids=rng.integers(0, config.vocab_size, size=length).tolist(),
            attention_mask=[1] * length,
            word_spans=[], original_text="", pieces=[], words=[],
        )
        for _ in range(BENCH_WARMUP_RUNS):
            forward(seq, weights, config)
        times = []
        for _ in range(n_runs):
            t0 = time.perf_counter()
            forward(seq, weights, config)
            times.append(time.perf_counter() - t0)
        seed_means.append(statistics.mean(times))
    return BenchReport(
        model_label=_bench_label(config),
        architecture=config.architecture,
        mean_latency_ms=statistics.mean(seed_means) * 1000.0,
        stddev_ms=statistics.pstdev(seed_means) * 1000.0,
        seeds=n_seeds,
    )


def _ordered_by_size(config_a: EncoderConfig, config_b: EncoderConfig,
                     report_a: BenchReport, report_b: BenchReport) -> tuple[BenchReport, BenchReport]:
    """(smaller-model report, larger-model report) by parameter count."""
    if count_parameters(config_b) < count_parameters(config_a):
        return report_b, report_a
    return report_a, report_b


def bench_latency(config_a: EncoderConfig, config_b: EncoderConfig,
                  n_runs: int = 100, n_seeds: int = 5,
                  seq_len: int = 32) -> tuple[BenchReport, BenchReport, float]:
    """Single-sequence latency comparison on a monotonic clock.

    Per seed: fresh random weights, 3 untimed warm-up runs, then ``n_runs``
    timed forwards; means and stddevs are taken across seeds. Speedup is
    larger-model mean over smaller-model mean.
    """
    if n_runs < 10:
        raise ValueError("n_runs must be >= 10")
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    report_a = _measure_latency(config_a, n_runs, n_seeds, seq_len)
    report_b = _measure_latency(config_b, n_runs, n_seeds, seq_len)
    small, large = _ordered_by_size(config_a, config_b, report_a, report_b)
    speedup = large.mean_latency_ms / small.mean_latency_ms
    return report_a, report_b, speedup


def bench_throughput(corpus_path: str | Path, config_a: EncoderConfig,
                     config_b: EncoderConfig, workers: int = 1,
                     dynamic_batching: bool = True, batch_size: int = 32,
                     seed: int = 0) -> tuple[BenchReport, BenchReport, float]:
    """Time ``run_corpus`` under two architectures with identical settings."""
    if not Path(corpus_path).exists():
        raise FileNotFoundError(f"corpus not found: {corpus_path}")

    def run(config: EncoderConfig) -> BenchReport:
        model = LoadedModel(
            config=config,
            weights=init_random(config, seed),
            vocab=build_ascii_vocab(config.vocab_size),
        )
        run_config = RunConfig(batch_size=batch_size, workers=workers,
                               dynamic_batching=dynamic_batching)
        out_path = Path(corpus_path).with_suffix(f".decisions.{_bench_label(config)}.tsv")
        summary = run_corpus(corpus_path, out_path, model, run_config)
        return BenchReport(
            model_label=_bench_label(config),
            architecture=config.architecture,
            mean_latency_ms=summary.wall_ms,
            stddev_ms=0.0,
            seeds=1,
            throughput_docs_per_s=summary.docs_per_s,
        )

    report_a = run(config_a)
    report_b = run(config_b)
    small, large = _ordered_by_size(config_a, config_b, report_a, report_b)
    speedup = large.mean_latency_ms / small.mean_latency_ms
    return report_a, report_b, speedup

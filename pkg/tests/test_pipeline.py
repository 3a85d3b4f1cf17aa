"""Pipeline tests: splitting, scoring, filtering, corpus runs, benches."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapstack.config import RunConfig
from hapstack.encoder import EncoderConfig, init_random
from hapstack.model_io import LoadedModel
from hapstack.pipeline import (
    Document,
    HapScore,
    bench_latency,
    bench_throughput,
    decide_from_scores,
    escape_text,
    filter_document,
    run_corpus,
    score_sentences,
    softmax_pair,
    split_sentences,
)

from conftest import random_words


class TestSplitSentences:
    def test_two_sentences(self):
        assert split_sentences("A good day. A bad day!") == ["A good day.", "A bad day!"]

    def test_empty(self):
        assert split_sentences("") == []

    def test_no_terminator(self):
        assert split_sentences("no terminator") == ["no terminator"]

    def test_newline_breaks(self):
        assert split_sentences("first line\nsecond line") == ["first line", "second line"]

    def test_terminator_needs_following_space(self):
        assert split_sentences("v1.2 is out. yes?!") == ["v1.2 is out.", "yes?!"]

    def test_question_and_bang(self):
        assert split_sentences("Really? Yes! Fine.") == ["Really?", "Yes!", "Fine."]

    def test_whitespace_only(self):
        assert split_sentences("   \n  ") == []


class TestSoftmaxPair:
    def test_symmetric_logits(self):
        s = softmax_pair(np.array([0.0, 0.0]))
        assert s == HapScore(non_hap=0.5, hap=0.5)

    def test_hand_evaluated(self):
        s = softmax_pair(np.array([0.0, math.log(3.0)]))
        assert s.non_hap == pytest.approx(0.25, abs=1e-12)
        assert s.hap == pytest.approx(0.75, abs=1e-12)

    def test_sums_to_one_extremes(self):
        s = softmax_pair(np.array([50.0, -50.0]))
        assert s.hap + s.non_hap == pytest.approx(1.0, abs=1e-9)
        assert 0.0 <= s.hap <= 1.0


class TestScoreSentences:
    def test_order_and_contract(self, tiny_model):
        sentences = ["one bad thing.", "two fine things.", "three more."]
        scores = score_sentences(sentences, tiny_model, batch_size=2)
        assert len(scores) == 3
        for s in scores:
            assert 0.0 <= s.hap <= 1.0 and 0.0 <= s.non_hap <= 1.0
            assert s.hap + s.non_hap == pytest.approx(1.0, abs=1e-6)

    def test_batch_size_invariance(self, tiny_model):
        rng = np.random.default_rng(11)
        sentences = [random_words(rng, int(rng.integers(1, 9))) for _ in range(12)]
        per_one = score_sentences(sentences, tiny_model, batch_size=1)
        per_five = score_sentences(sentences, tiny_model, batch_size=5)
        per_all = score_sentences(sentences, tiny_model, batch_size=64)
        for a, b, c in zip(per_one, per_five, per_all):
            assert abs(a.hap - b.hap) < 1e-5
            assert abs(a.hap - c.hap) < 1e-5

    def test_dynamic_batching_same_scores(self, tiny_model):
        rng = np.random.default_rng(12)
        sentences = [random_words(rng, int(rng.integers(1, 12))) for _ in range(20)]
        plain = score_sentences(sentences, tiny_model, batch_size=4)
        dynamic = score_sentences(sentences, tiny_model, batch_size=4,
                                  dynamic_batching=True, token_budget=64)
        for a, b in zip(plain, dynamic):
            assert abs(a.hap - b.hap) < 1e-5

    def test_empty_input(self, tiny_model):
        assert score_sentences([], tiny_model, batch_size=4) == []

    def test_bad_batch_size(self, tiny_model):
        with pytest.raises(ValueError):
            score_sentences(["x"], tiny_model, batch_size=0)


class TestFilterDocument:
    def test_decide_from_scores_example(self):
        fraction, kept = decide_from_scores([0.9, 0.2, 0.1], 0.5, 0.25)
        assert fraction == pytest.approx(1 / 3)
        assert kept is False

    def test_decide_no_flags(self):
        fraction, kept = decide_from_scores([0.2, 0.1], 0.5, 0.25)
        assert fraction == 0.0
        assert kept is True

    def test_max_fraction_one_keeps_everything(self):
        _, kept = decide_from_scores([1.0, 1.0, 1.0], 0.0, 1.0)
        assert kept is True

    def test_zero_sentences_kept(self, tiny_model):
        decision = filter_document(Document(id="d0", text="   "), tiny_model, 0.5, 0.5)
        assert decision.kept is True
        assert decision.flagged_fraction == 0.0
        assert decision.sentence_scores == []

    def test_document_records_scores(self, tiny_model):
        decision = filter_document(Document(id="d1", text="One thing. Two things!"),
                                   tiny_model, 0.5, 1.0)
        assert [s for s, _ in decision.sentence_scores] == ["One thing.", "Two things!"]

    def test_empty_doc_id_rejected(self):
        with pytest.raises(ValueError):
            Document(id="", text="x")

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=30),
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_monotonicity(self, scores, threshold, max_fraction, bump):
        _, kept = decide_from_scores(scores, threshold, max_fraction)
        # raising the threshold can only unflag sentences
        _, kept_higher_thr = decide_from_scores(scores, min(1.0, threshold + bump),
                                                max_fraction)
        assert kept_higher_thr >= kept
        # raising the allowed fraction can only keep more documents
        _, kept_higher_frac = decide_from_scores(scores, threshold,
                                                 min(1.0, max_fraction + bump))
        assert kept_higher_frac >= kept


def write_corpus(path, docs):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for doc_id, text in docs:
            f.write(f"{doc_id}\t{escape_text(text)}\n")


class TestRunCorpus:
    def test_empty_corpus(self, tiny_model, tmp_path):
        src, dst = tmp_path / "in.tsv", tmp_path / "out.tsv"
        src.write_text("", encoding="utf-8")
        summary = run_corpus(src, dst, tiny_model, RunConfig())
        assert summary.processed == 0
        assert summary.skipped == 0
        assert dst.read_text(encoding="utf-8") == ""

    def test_worker_count_does_not_change_output(self, tiny_model, tmp_path):
        rng = np.random.default_rng(21)
        docs = [(f"doc{i}", ". ".join(random_words(rng, 4) for _ in range(3)) + ".")
                for i in range(10)]
        src = tmp_path / "in.tsv"
        write_corpus(src, docs)
        out1, out4 = tmp_path / "w1.tsv", tmp_path / "w4.tsv"
        s1 = run_corpus(src, out1, tiny_model, RunConfig(workers=1))
        s4 = run_corpus(src, out4, tiny_model, RunConfig(workers=4))
        assert out1.read_bytes() == out4.read_bytes()
        assert s1.processed == s4.processed == 10

    def test_malformed_line_skipped(self, tiny_model, tmp_path):
        src, dst = tmp_path / "in.tsv", tmp_path / "out.tsv"
        src.write_text("a\tfine day.\nmalformed-no-tab\nb\tanother one.\n",
                       encoding="utf-8")
        summary = run_corpus(src, dst, tiny_model, RunConfig())
        assert summary.processed == 2
        assert summary.skipped == 1
        assert summary.processed + summary.skipped == 3
        lines = dst.read_text(encoding="utf-8").splitlines()
        assert [l.split("\t")[0] for l in lines] == ["a", "b"]

    def test_decision_record_format(self, tiny_model, tmp_path):
        src, dst = tmp_path / "in.tsv", tmp_path / "out.tsv"
        src.write_text("d1\tGood day. Bad day!\n", encoding="utf-8")
        run_corpus(src, dst, tiny_model, RunConfig(max_flagged_fraction=1.0))
        doc_id, kept, fraction, scores = dst.read_text(encoding="utf-8").strip().split("\t")
        assert doc_id == "d1"
        assert kept in ("0", "1")
        float(fraction)
        assert len(scores.split(",")) == 2

    def test_escaped_newlines_round_trip(self, tiny_model, tmp_path):
        src, dst = tmp_path / "in.tsv", tmp_path / "out.tsv"
        write_corpus(src, [("d1", "line one.\nline two.")])
        run_corpus(src, dst, tiny_model, RunConfig(max_flagged_fraction=1.0))
        record = dst.read_text(encoding="utf-8").strip().split("\t")
        assert len(record[3].split(",")) == 2  # both sentences scored

    def test_summary_lines(self, tiny_model, tmp_path):
        src, dst = tmp_path / "in.tsv", tmp_path / "out.tsv"
        write_corpus(src, [("d1", "a day."), ("d2", "b day.")])
        summary = run_corpus(src, dst, tiny_model, RunConfig())
        keys = [line.split("=")[0] for line in summary.to_lines()]
        assert keys == ["processed", "skipped", "kept", "discarded", "wall_ms", "docs_per_s"]
        assert summary.kept + summary.discarded == summary.processed


class TestBenchLatency:
    def test_self_comparison_band(self, tiny_config):
        _, _, speedup = bench_latency(tiny_config, tiny_config, n_runs=30,
                                      n_seeds=2, seq_len=8)
        assert 0.8 <= speedup <= 1.25

    def test_reports_have_stats(self, tiny_config):
        report_a, report_b, _ = bench_latency(tiny_config, tiny_config, n_runs=10,
                                              n_seeds=2, seq_len=8)
        for report in (report_a, report_b):
            assert report.mean_latency_ms > 0
            assert report.stddev_ms >= 0
            assert report.seeds == 2
            assert report.architecture == tiny_config.architecture

    def test_run_count_validated(self, tiny_config):
        with pytest.raises(ValueError):
            bench_latency(tiny_config, tiny_config, n_runs=5, n_seeds=1)

    def test_bigger_model_is_slower(self):
        small = EncoderConfig(num_layers=1, num_heads=2, hidden_size=32,
                              intermediate_size=64, vocab_size=64, max_positions=32)
        large = EncoderConfig(num_layers=8, num_heads=2, hidden_size=128,
                              intermediate_size=512, vocab_size=64, max_positions=32)
        _, _, speedup = bench_latency(small, large, n_runs=20, n_seeds=2, seq_len=16)
        assert speedup > 1.0


class TestBenchThroughput:
    def test_self_comparison_band(self, tiny_config, tmp_path):
        rng = np.random.default_rng(31)
        docs = [(f"d{i}", ". ".join(random_words(rng, 5) for _ in range(12)) + ".")
                for i in range(100)]
        corpus = tmp_path / "corpus.tsv"
        write_corpus(corpus, docs)
        # one untimed pass so numpy/BLAS warmup doesn't skew side a
        bench_throughput(corpus, tiny_config, tiny_config, workers=1,
                         dynamic_batching=True)
        report_a, report_b, speedup = bench_throughput(corpus, tiny_config, tiny_config,
                                                       workers=1, dynamic_batching=True)
        assert 0.8 <= speedup <= 1.25
        assert report_a.throughput_docs_per_s is not None
        assert report_b.throughput_docs_per_s is not None

    def test_missing_corpus(self, tiny_config, tmp_path):
        with pytest.raises(FileNotFoundError):
            bench_throughput(tmp_path / "nope.tsv", tiny_config, tiny_config)

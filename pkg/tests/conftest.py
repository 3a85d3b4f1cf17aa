"""Shared fixtures: tiny vocabularies, configs and models."""

import numpy as np
import pytest

from hapstack.encoder import EncoderConfig, init_random
from hapstack.model_io import LoadedModel
from hapstack.wordpiece import Vocabulary, build_ascii_vocab

TINY_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "shame", "##less", "##ly", "bad")


@pytest.fixture
def tiny_vocab():
    """The 8-token vocabulary used throughout the tokenizer examples."""
    return Vocabulary(TINY_TOKENS)


@pytest.fixture(scope="session")
def ascii_vocab():
    return build_ascii_vocab(256)


@pytest.fixture(scope="session")
def tiny_config(ascii_vocab):
    return EncoderConfig(num_layers=2, num_heads=2, hidden_size=8,
                         intermediate_size=16, vocab_size=len(ascii_vocab),
                         max_positions=64)


@pytest.fixture(scope="session")
def tiny_model(tiny_config, ascii_vocab):
    return LoadedModel(config=tiny_config,
                       weights=init_random(tiny_config, 0),
                       vocab=ascii_vocab)


def random_words(rng: np.random.Generator, n_words: int) -> str:
    """Random lowercase sentence; tokenizes piece-per-character under the
    ASCII vocabulary."""
    words = []
    for _ in range(n_words):
        length = int(rng.integers(1, 8))
        letters = rng.integers(ord("a"), ord("z") + 1, size=length)
        words.append("".join(chr(c) for c in letters))
    return " ".join(words)

import random

import pytest

from docarg.twostream import ChunkTokenizer, DocumentEncoder, EncoderConfig
from synthcorpus import make_schema, single_sentence_doc, three_sentence_doc


@pytest.fixture
def schema():
    return make_schema()


@pytest.fixture
def toy3():
    """(Document, EventInstance) with three sentences, trigger in sentence 2."""
    return three_sentence_doc()


@pytest.fixture
def toy1():
    return single_sentence_doc()


@pytest.fixture
def tiny_cfg():
    return EncoderConfig(
        hidden_dim=32,
        num_layers=2,
        num_heads=2,
        max_positions=64,
        dropout=0.0,
        attention_dropout=0.0,
    )


@pytest.fixture
def tiny_encoder(tiny_cfg):
    import torch

    torch.manual_seed(101)
    enc = DocumentEncoder(tiny_cfg, ChunkTokenizer(vocab_size=tiny_cfg.vocab_size))
    enc.eval()
    return enc


@pytest.fixture
def rng():
    return random.Random(99)

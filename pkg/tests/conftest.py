from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sidsearch.corpus import SidRecord, ingest_corpus, tokenize_sids
from sidsearch.fm_index import FmIndex
from sidsearch.tokenizer import build_vocab

TOY_LINES = [
    '{"product_id": "p1", "caption": "red dress"}',
    '{"product_id": "p2", "caption": "red shoe"}',
]


@pytest.fixture
def toy_corpus():
    return ingest_corpus(TOY_LINES)


@pytest.fixture
def toy_stack(toy_corpus):
    """(corpus, vocab, tokenized sids, index) for the two-product toy."""
    vocab = build_vocab(toy_corpus)
    sids = tokenize_sids(toy_corpus.sids, vocab)
    index = FmIndex.build(sids, vocab)
    return toy_corpus, vocab, sids, index


def random_sid_records(rng: random.Random, n_sids: int, max_tokens: int, alphabet: int):
    """Random tokenized records over token ids 2..alphabet+1."""
    records = []
    for sid_id in range(n_sids):
        length = rng.randint(1, max_tokens)
        tokens = tuple(rng.randint(2, alphabet + 1) for _ in range(length))
        records.append(
            SidRecord(
                sid_id=sid_id,
                product_id=f"p{sid_id % max(1, n_sids // 3)}",
                source_field="caption",
                text=" ".join(f"t{t}" for t in tokens),
                token_ids=tokens,
            )
        )
    return records


def random_pattern(rng: random.Random, records, alphabet: int, max_len: int = 6):
    """Mix of real prefixes, mutated prefixes, and pure noise."""
    kind = rng.random()
    if kind < 0.45:
        seq = rng.choice(records).token_ids
        cut = rng.randint(1, len(seq))
        return list(seq[:cut])
    if kind < 0.75:
        seq = rng.choice(records).token_ids
        cut = rng.randint(1, len(seq))
        pattern = list(seq[:cut])
        pattern[rng.randrange(len(pattern))] = rng.randint(2, alphabet + 1)
        return pattern
    return [rng.randint(2, alphabet + 1) for _ in range(rng.randint(1, max_len))]

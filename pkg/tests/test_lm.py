from __future__ import annotations

import math
import random

import pytest

from sidsearch.errors import EmptyAllowedSet, EmptyCorpus
from sidsearch.lm import BOS, BigramLm, LmContext, UniformLm, train_reference_lm
from sidsearch.tokenizer import END_SID


def _ctx(query=(), prefix=()):
    return LmContext(query_tokens=tuple(query), prefix_tokens=tuple(prefix))


def test_single_allowed_token_is_certain(toy_stack):
    _, vocab, sids, _ = toy_stack
    lm = train_reference_lm(sids, vocab)
    probs = lm.score_next(_ctx(), {7})
    assert probs[7] == pytest.approx(0.0)


def test_uniform_counts_give_half(toy_stack):
    _, vocab, sids, _ = toy_stack
    lm = train_reference_lm(sids, vocab)
    red, dress, shoe = (vocab.symbol_to_id[w] for w in ("red", "dress", "shoe"))
    probs = lm.score_next(_ctx(prefix=[red]), {dress, shoe})
    assert probs[dress] == pytest.approx(math.log(0.5))
    assert probs[shoe] == pytest.approx(math.log(0.5))


def test_empty_allowed_set(toy_stack):
    _, vocab, sids, _ = toy_stack
    lm = train_reference_lm(sids, vocab)
    with pytest.raises(EmptyAllowedSet):
        lm.score_next(_ctx(), set())
    with pytest.raises(EmptyAllowedSet):
        UniformLm().score_next(_ctx(), set())


def test_bigram_counts_hand_checked(toy_stack):
    # Hand count over {"red dress", "red shoe"}: red->dress 1, red->shoe 1,
    # BOS->red 2, dress->END 1, shoe->END 1.
    _, vocab, sids, _ = toy_stack
    lm = train_reference_lm(sids, vocab)
    red, dress, shoe = (vocab.symbol_to_id[w] for w in ("red", "dress", "shoe"))
    assert lm.bigrams[red] == {dress: 1, shoe: 1}
    assert lm.bigrams[BOS] == {red: 2}
    assert lm.bigrams[dress] == {END_SID: 1}
    assert lm.bigrams[shoe] == {END_SID: 1}


def test_query_affinity_raw_margin_is_beta(toy_stack):
    _, vocab, sids, _ = toy_stack
    lm = train_reference_lm(sids, vocab, beta=2.0)
    red, dress, shoe = (vocab.symbol_to_id[w] for w in ("red", "dress", "shoe"))
    query = (dress,)
    raw_dress = lm.raw_score(red, dress, query)
    raw_shoe = lm.raw_score(red, shoe, query)
    assert raw_dress - raw_shoe == pytest.approx(2.0)
    probs = lm.score_next(_ctx(query=query, prefix=[red]), {dress, shoe})
    assert probs[dress] > probs[shoe]


def test_renormalization_sums_to_one(toy_stack):
    _, vocab, sids, _ = toy_stack
    lm = train_reference_lm(sids, vocab)
    rng = random.Random(17)
    ids = list(range(2, vocab.size))
    for _ in range(50):
        allowed = set(rng.sample(ids, rng.randint(1, len(ids)))) | (
            {END_SID} if rng.random() < 0.3 else set()
        )
        prefix = tuple(rng.sample(ids, rng.randint(0, 2)))
        query = tuple(rng.sample(ids, rng.randint(0, 2)))
        probs = lm.score_next(_ctx(query=query, prefix=prefix), allowed)
        assert set(probs.entries) == allowed
        assert sum(math.exp(v) for v in probs.entries.values()) == pytest.approx(1.0, abs=1e-9)
        assert all(v <= 1e-12 for v in probs.entries.values())


def test_query_monotonicity_in_beta(toy_stack):
    # Raising beta never lowers the member token's probability relative
    # to a non-member, all else fixed.
    _, vocab, sids, _ = toy_stack
    red, dress, shoe = (vocab.symbol_to_id[w] for w in ("red", "dress", "shoe"))
    previous = -math.inf
    for beta in (0.0, 0.5, 1.0, 2.0, 4.0):
        lm = train_reference_lm(sids, vocab, beta=beta)
        probs = lm.score_next(_ctx(query=(dress,), prefix=[red]), {dress, shoe})
        margin = probs[dress] - probs[shoe]
        assert margin >= previous
        previous = margin


def test_reference_model_deterministic(toy_stack):
    _, vocab, sids, _ = toy_stack
    a = train_reference_lm(sids, vocab)
    b = train_reference_lm(sids, vocab)
    red = vocab.symbol_to_id["red"]
    ctx = _ctx(query=[red], prefix=[red])
    allowed = {2, 4, END_SID}
    assert a.score_next(ctx, allowed).entries == b.score_next(ctx, allowed).entries
    assert a.vocab_digest == b.vocab_digest


def test_train_empty_corpus(toy_stack):
    _, vocab, _, _ = toy_stack
    with pytest.raises(EmptyCorpus):
        train_reference_lm([], vocab)


def test_context_rejects_end_in_prefix():
    with pytest.raises(ValueError):
        LmContext(query_tokens=(), prefix_tokens=(2, END_SID))

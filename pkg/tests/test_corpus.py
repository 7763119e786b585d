from __future__ import annotations

import random

import pytest

from sidsearch.corpus import (
    Product,
    SidPolicy,
    extract_sids,
    ingest_corpus,
    split_sentences,
    tokenize_sids,
)
from sidsearch.errors import (
    DuplicateProductId,
    EmptyTextFields,
    MalformedRecord,
    ProductNotFound,
)
from sidsearch.synth import generate_products
from sidsearch.tokenizer import build_vocab


def test_ingest_two_valid_lines(toy_corpus):
    assert toy_corpus.size == 2
    assert toy_corpus.get_product("p1").caption == "red dress"


def test_ingest_duplicate_product_id():
    lines = [
        '{"product_id": "p1", "caption": "red dress"}',
        '{"product_id": "p1", "caption": "red shoe"}',
    ]
    with pytest.raises(DuplicateProductId) as err:
        ingest_corpus(lines)
    assert err.value.line == 2


def test_ingest_missing_text_fields():
    with pytest.raises(EmptyTextFields):
        ingest_corpus(['{"product_id": "p1", "title": "no text"}'])


def test_ingest_malformed_json():
    with pytest.raises(MalformedRecord) as err:
        ingest_corpus(['{"product_id": "p1", "caption": "ok"}', "{broken"])
    assert err.value.line == 2


def test_ingest_skip_invalid_collects_report():
    lines = [
        '{"product_id": "p1", "caption": "red dress"}',
        "{broken",
        '{"product_id": "p1", "caption": "dup"}',
        '{"product_id": "p2", "caption": "blue shoe"}',
    ]
    corpus = ingest_corpus(lines, skip_invalid=True)
    assert corpus.size == 2
    assert [line for line, _ in corpus.rejected] == [2, 3]


def test_extract_caption_only():
    product = Product(product_id="p1", caption="red dress")
    records = extract_sids(product)
    assert [(r.source_field, r.text) for r in records] == [("caption", "red dress")]


def test_extract_description_sentences():
    # Derived by hand from the splitting rule: terminal punctuation + whitespace.
    assert split_sentences("A-line cut. Knee length.") == ["A-line cut.", "Knee length."]
    product = Product(product_id="p1", caption="", description="A-line cut. Knee length.")
    records = extract_sids(product)
    assert [r.text for r in records] == ["A-line cut.", "Knee length."]


def test_extract_attribute_pairs():
    product = Product(product_id="p1", caption="x", attributes={"color": "red"})
    records = extract_sids(product, SidPolicy())
    assert ("attribute", "color: red") in [(r.source_field, r.text) for r in records]


def test_extract_caption_fallback_to_description():
    product = Product(product_id="p1", caption="", description="Soft wool coat.")
    records = extract_sids(product, SidPolicy(use_description=False))
    assert [r.text for r in records] == ["Soft wool coat."]


def test_extract_drops_token_empty_pieces():
    product = Product(product_id="p1", caption="!!!", description="Real text here.")
    records = extract_sids(product)
    assert all(r.text != "!!!" for r in records)


def test_get_product_not_found(toy_corpus):
    with pytest.raises(ProductNotFound):
        toy_corpus.get_product("zzz")
    with pytest.raises(ProductNotFound):
        toy_corpus.get_product("")


def test_sid_text_is_verbatim_substring_of_source():
    rng = random.Random(11)
    raw = generate_products(rng, 150)
    import json

    corpus = ingest_corpus([json.dumps(p) for p in raw])
    for record in corpus.sids:
        product = corpus.get_product(record.product_id)
        source = {
            "caption": product.caption,
            "description": product.description,
        }.get(record.source_field)
        if record.source_field == "attribute":
            name, _, value = record.text.partition(": ")
            assert product.attributes.get(name) == value
        else:
            assert record.text in source


def test_ingest_serialize_ingest_idempotent(toy_corpus):
    round1 = ingest_corpus(toy_corpus.serialize().splitlines())
    round2 = ingest_corpus(round1.serialize().splitlines())
    assert round1.content_digest() == toy_corpus.content_digest()
    assert round2.content_digest() == round1.content_digest()


def test_sid_ids_dense(toy_corpus):
    ids = [s.sid_id for s in toy_corpus.sids]
    assert ids == list(range(len(ids)))


def test_tokenize_sids_fills_token_ids(toy_corpus):
    vocab = build_vocab(toy_corpus)
    sids = tokenize_sids(toy_corpus.sids, vocab)
    assert all(s.token_ids for s in sids)
    assert sids[0].token_ids == tuple(vocab.encode(sids[0].text))


def test_save_with_sidecar(tmp_path, toy_corpus):
    path = str(tmp_path / "corpus.jsonl")
    toy_corpus.save(path, sid_sidecar=True)
    again = ingest_corpus(path)
    assert again.content_digest() == toy_corpus.content_digest()
    assert (tmp_path / "corpus.sids.jsonl").exists()

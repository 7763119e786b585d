from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from sidsearch.decoder import DecodeConfig
from sidsearch.dialogue import Engine
from sidsearch.lm import train_reference_lm
from sidsearch.service import create_app
from sidsearch.ttr import TtrSettings


@pytest.fixture
def client(toy_stack):
    corpus, vocab, sids, index = toy_stack
    engine = Engine(
        corpus,
        vocab,
        sids,
        index,
        train_reference_lm(sids, vocab),
        ttr=TtrSettings(evaluator="lexical", parallelism=1),
        decode=DecodeConfig(),
    )
    app = create_app(engine)
    with TestClient(app) as c:
        yield c


def test_healthz(client):
    body = client.get("/v1/healthz").json()
    assert body["status"] == "ok"
    assert body["products"] == 2


def test_create_session_defaults(client):
    response = client.post("/v1/sessions", json={})
    assert response.status_code == 200
    body = response.json()
    assert body["session_id"]
    assert body["config"]["decode"]["beam_width"] == 10
    assert body["config"]["ttr"]["enabled"] is True


def test_create_session_override_reflected(client):
    body = client.post("/v1/sessions", json={"ttr_enabled": False}).json()
    assert body["config"]["ttr"]["enabled"] is False


def test_create_session_invalid_override(client):
    response = client.post("/v1/sessions", json={"beam_width": 0})
    assert response.status_code == 422
    body = response.json()
    assert body["code"] == "invalid_override"
    assert "message" in body


def test_post_turn_payload(client):
    sid = client.post("/v1/sessions", json={}).json()["session_id"]
    response = client.post(f"/v1/sessions/{sid}/turns", json={"user_text": "red dress"})
    assert response.status_code == 200
    body = response.json()
    assert body["turn"] == 1
    assert body["inferred_query"] == "red dress"
    assert 0 < len(body["results"]) <= 10
    top = body["results"][0]
    assert top["product_id"] == "p1"
    assert set(top) >= {"rank", "product_id", "rm_raw", "rm_ttr", "best_sid", "caption", "image_ref"}


def test_post_turn_unknown_session(client):
    response = client.post("/v1/sessions/zzz/turns", json={"user_text": "x"})
    assert response.status_code == 404
    assert response.json()["code"] == "session_not_found"


def test_post_turn_unresolved_reference(client):
    sid = client.post("/v1/sessions", json={}).json()["session_id"]
    response = client.post(
        f"/v1/sessions/{sid}/turns", json={"user_text": "x", "ref_product_id": "zzz"}
    )
    assert response.status_code == 422
    assert response.json()["code"] == "unresolved_reference"


def test_get_product(client):
    body = client.get("/v1/products/p1").json()
    assert body["caption"] == "red dress"
    assert client.get("/v1/products/none").status_code == 404


def test_get_product_echoes_image_ref(toy_stack):
    corpus, vocab, sids, index = toy_stack
    from sidsearch.corpus import Product

    corpus.products["p9"] = Product(product_id="p9", caption="green coat", image_ref="img://x9")
    engine = Engine(corpus, vocab, sids, index, train_reference_lm(sids, vocab))
    with TestClient(create_app(engine)) as client:
        assert client.get("/v1/products/p9").json()["image_ref"] == "img://x9"


def test_identical_session_states_identical_payloads(client):
    payloads = []
    for _ in range(2):
        sid = client.post("/v1/sessions", json={}).json()["session_id"]
        body = client.post(f"/v1/sessions/{sid}/turns", json={"user_text": "red shoe"}).json()
        body.pop("session_id")
        payloads.append(body)
    assert payloads[0] == payloads[1]


def test_get_session_transcript(client):
    sid = client.post("/v1/sessions", json={}).json()["session_id"]
    client.post(f"/v1/sessions/{sid}/turns", json={"user_text": "red dress"})
    body = client.get(f"/v1/sessions/{sid}").json()
    assert body["session_id"] == sid
    assert len(body["turns"]) == 1
    assert body["turns"][0]["results"]
    assert client.get("/v1/sessions/ghost").status_code == 404

"""Product corpus ingestion and semantic-ID (SID) extraction.

A corpus is read from JSONL (one product per line) and is immutable after
ingest. SIDs are the retrievable text units: substrings of a product's
caption, description, or attribute pairs, cut by a deterministic policy.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from .errors import (
    DuplicateProductId,
    EmptyTextFields,
    MalformedRecord,
    ProductNotFound,
)
from .tokenizer import Vocab, normalize
from .util import atomic_write_text, digest_json

# Terminal punctuation followed by whitespace ends a sentence.
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class Product:
    product_id: str
    title: str = ""
    description: str = ""
    caption: str = ""
    attributes: dict[str, str] = field(default_factory=dict)
    image_ref: str = ""  # opaque locator, never interpreted by the core

    def validate(self) -> None:
        if not self.product_id:
            raise ValueError("product_id must be non-empty")
        if not (self.caption or self.description):
            raise ValueError("at least one of caption/description must be non-empty")


@dataclass(frozen=True)
class SidRecord:
    """One semantic-ID substring owned by a product.

    ``text`` is verbatim from the named source field; ``token_ids`` is
    filled once a vocabulary exists (see ``tokenize_sids``).
    """

    sid_id: int
    product_id: str
    source_field: str  # "caption" | "description" | "attribute"
    text: str
    token_ids: tuple[int, ...] | None = None


@dataclass(frozen=True)
class SidPolicy:
    """Which fields contribute SIDs and how they are split.

    Defaults: the full caption is one SID, each description sentence is
    one SID, each "name: value" attribute is one SID. Products lacking a
    caption fall back to description sentences, so the policy never
    hard-requires captions.
    """

    use_caption: bool = True
    use_description: bool = True
    use_attributes: bool = True

    def as_dict(self) -> dict:
        return {
            "use_caption": self.use_caption,
            "use_description": self.use_description,
            "use_attributes": self.use_attributes,
        }


CAPTION_ONLY = SidPolicy(use_caption=True, use_description=False, use_attributes=False)


@dataclass
class Corpus:
    """Immutable after ingest; safe for concurrent readers."""

    products: dict[str, Product]
    sids: list[SidRecord]
    vocab_digest: str = ""
    rejected: list[tuple[int, str]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.products)

    def get_product(self, product_id: str) -> Product:
        try:
            return self.products[product_id]
        except KeyError:
            raise ProductNotFound(f"product {product_id!r} not in corpus") from None

    def content_digest(self) -> str:
        return digest_json(
            {
                "products": sorted(
                    (p.product_id, p.title, p.description, p.caption, sorted(p.attributes.items()), p.image_ref)
                    for p in self.products.values()
                ),
                "sids": [(s.sid_id, s.product_id, s.source_field, s.text) for s in self.sids],
            }
        )

    def serialize(self) -> str:
        """JSONL form compatible with ingest_corpus (round-trips)."""
        lines = []
        for pid in self.products:
            p = self.products[pid]
            lines.append(
                json.dumps(
                    {
                        "product_id": p.product_id,
                        "title": p.title,
                        "description": p.description,
                        "caption": p.caption,
                        "attributes": p.attributes,
                        "image_ref": p.image_ref,
                    },
                    ensure_ascii=False,
                )
            )
        return "\n".join(lines) + "\n"

    def save(self, path: str, sid_sidecar: bool = False) -> None:
        atomic_write_text(path, self.serialize())
        if sid_sidecar:
            stem = path[: -len(".jsonl")] if path.endswith(".jsonl") else path
            rows = [
                json.dumps(
                    {"sid_id": s.sid_id, "product_id": s.product_id, "source_field": s.source_field, "text": s.text},
                    ensure_ascii=False,
                )
                for s in self.sids
            ]
            atomic_write_text(stem + ".sids.jsonl", "\n".join(rows) + "\n")


def split_sentences(text: str) -> list[str]:
    """Split on terminal punctuation (., !, ?) followed by whitespace."""
    return [part for part in (_s.strip() for _s in _SENTENCE_RE.split(text)) if part]


def extract_sids(product: Product, policy: SidPolicy = SidPolicy(), start_id: int = 0) -> list[SidRecord]:
    """Cut a product's text fields into SID records per the policy.

    Deterministic for a fixed policy. Fields that are empty, and pieces
    whose normalized token stream is empty, yield no records.
    """
    pieces: list[tuple[str, str]] = []
    if policy.use_caption and product.caption:
        pieces.append(("caption", product.caption))
    use_description = policy.use_description or (policy.use_caption and not product.caption)
    if use_description and product.description:
        for sentence in split_sentences(product.description):
            pieces.append(("description", sentence))
    if policy.use_attributes:
        for name in product.attributes:
            value = product.attributes[name]
            if value:
                pieces.append(("attribute", f"{name}: {value}"))

    records = []
    next_id = start_id
    for source_field, text in pieces:
        if not normalize(text):
            continue
        records.append(SidRecord(sid_id=next_id, product_id=product.product_id, source_field=source_field, text=text))
        next_id += 1
    return records


def _parse_product(line_no: int, raw: str) -> Product:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or not obj.get("product_id"):
        raise MalformedRecord(line_no, "record must be an object with a product_id")
    product = Product(
        product_id=str(obj["product_id"]),
        title=str(obj.get("title") or ""),
        description=str(obj.get("description") or ""),
        caption=str(obj.get("caption") or ""),
        attributes={str(k): str(v) for k, v in (obj.get("attributes") or {}).items()},
        image_ref=str(obj.get("image_ref") or ""),
    )
    if not (product.caption or product.description):
        raise EmptyTextFields(line_no, f"product {product.product_id!r} has neither caption nor description")
    return product


def ingest_corpus(
    source: Iterable[str] | str,
    policy: SidPolicy = SidPolicy(),
    skip_invalid: bool = False,
) -> Corpus:
    """Ingest a line-delimited JSON product stream and extract SIDs.

    ``source`` is a path or an iterable of lines. Invalid records raise by
    default; with ``skip_invalid`` they are collected on Corpus.rejected as
    (line_number, reason) pairs and ingest continues.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = list(source)

    products: dict[str, Product] = {}
    rejected: list[tuple[int, str]] = []
    for line_no, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            product = _parse_product(line_no, raw)
            if product.product_id in products:
                raise DuplicateProductId(line_no, f"duplicate product_id {product.product_id!r}")
        except (MalformedRecord, DuplicateProductId, EmptyTextFields) as exc:
            if skip_invalid:
                rejected.append((exc.line, str(exc)))
                continue
            raise
        products[product.product_id] = product

    sids: list[SidRecord] = []
    for pid in products:
        sids.extend(extract_sids(products[pid], policy, start_id=len(sids)))
    return Corpus(products=products, sids=sids, rejected=rejected)


def tokenize_sids(sids: list[SidRecord], vocab: Vocab) -> list[SidRecord]:
    """Return records with token_ids filled under ``vocab``.

    Extraction already dropped SIDs whose normalized text is empty, so
    every returned record has a non-empty token sequence.
    """
    return [replace(s, token_ids=tuple(vocab.encode(s.text))) for s in sids]


def iter_jsonl(path: str) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)

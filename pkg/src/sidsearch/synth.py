"""Seeded synthetic corpus and dialogue generator for desk-scale benchmarks.

Products are composed from small attribute vocabularies with templated
captions; dialogues reveal the target's attributes one turn at a time and
sometimes reference another product, standing in for "the one you showed
me". Everything is a pure function of the seed, so two runs write
byte-identical files.

The caption of every product contains its attribute words, and the
dialogue turns reveal exactly those words, so the target always owns a
SID sharing several tokens with the final inferred query. That keeps the
target's normalized reward comfortably above the oracle evaluator's
off-target confidence.
"""

from __future__ import annotations

import json
import random

from .errors import InvalidParameters
from .util import atomic_write_text

CATEGORIES = ["dress", "skirt", "jacket", "sweater", "coat", "blouse", "jumpsuit", "cardigan"]
COLORS = ["red", "blue", "black", "ivory", "olive", "teal", "mustard", "lavender", "coral", "navy"]
STYLES = ["boho", "minimalist", "vintage", "sporty", "classic", "romantic", "edgy", "casual"]
FABRICS = ["silk", "linen", "denim", "wool", "velvet", "cotton", "satin", "tweed"]
DECOR = ["lightweight", "tailored", "relaxed", "structured", "flowy", "cropped"]

_TURN_TEMPLATES = [
    "looking for a {category}",
    "i want it in {color}",
    "something {style} please",
    "ideally made of {fabric}",
    "with a {decor} fit",
]


def _caption(rng: random.Random, combo: dict[str, str]) -> str:
    decor = rng.sample(DECOR, rng.randint(0, 2))
    words = [combo["color"], combo["style"], combo["category"], "in", combo["fabric"]]
    if decor:
        words = decor + words
    return "a " + " ".join(words)


def generate_products(rng: random.Random, n_products: int) -> list[dict]:
    combos = [
        {"category": c, "color": col, "style": s, "fabric": f}
        for c in CATEGORIES
        for col in COLORS
        for s in STYLES
        for f in FABRICS
    ]
    if n_products > len(combos):
        raise InvalidParameters(f"at most {len(combos)} distinct products supported")
    chosen = rng.sample(combos, n_products)
    products = []
    for i, combo in enumerate(chosen):
        pid = f"p{i:05d}"
        products.append(
            {
                "product_id": pid,
                "title": f"{combo['style']} {combo['category']} {i}",
                "caption": _caption(rng, combo),
                "description": f"A {combo['style']} {combo['category']}. Made of {combo['fabric']}.",
                "attributes": combo,
                "image_ref": f"img://{pid}",
            }
        )
    return products


def generate_dialogues(
    rng: random.Random, products: list[dict], n_dialogues: int, turns_per_dialogue: int
) -> list[dict]:
    dialogues = []
    for d in range(n_dialogues):
        target = rng.choice(products)
        combo = target["attributes"]
        decor_pool = [w for w in target["caption"].split() if w in DECOR] or DECOR
        fills = {
            "category": combo["category"],
            "color": combo["color"],
            "style": combo["style"],
            "fabric": combo["fabric"],
            "decor": rng.choice(decor_pool),
        }
        turns = []
        for t in range(turns_per_dialogue):
            template = _TURN_TEMPLATES[t % len(_TURN_TEMPLATES)]
            turn = {
                "user_text": template.format(**fills),
                "target_product_id": target["product_id"],
            }
            # Later turns occasionally point back at a previously shown product.
            if t > 0 and rng.random() < 0.25:
                shown = rng.choice(products)
                turn["ref_product_id"] = shown["product_id"]
            turns.append(turn)
        dialogues.append({"dialogue_id": f"d{d:04d}", "turns": turns})
    return dialogues


def synth_generate(
    seed: int,
    n_products: int,
    n_dialogues: int,
    turns_per_dialogue: int,
    corpus_path: str,
    dialogue_path: str,
) -> None:
    """Write the corpus and dialogue JSONL files for one seed."""
    if n_products < 100:
        raise InvalidParameters("n_products must be >= 100 to support 100-candidate sets")
    if n_dialogues < 1 or turns_per_dialogue < 1:
        raise InvalidParameters("need at least one dialogue and one turn")
    if turns_per_dialogue > len(_TURN_TEMPLATES):
        raise InvalidParameters(f"at most {len(_TURN_TEMPLATES)} turns per dialogue supported")
    rng = random.Random(seed)
    products = generate_products(rng, n_products)
    dialogues = generate_dialogues(rng, products, n_dialogues, turns_per_dialogue)
    atomic_write_text(corpus_path, "\n".join(json.dumps(p, ensure_ascii=False) for p in products) + "\n")
    atomic_write_text(dialogue_path, "\n".join(json.dumps(d, ensure_ascii=False) for d in dialogues) + "\n")

"""Frozen encoders mapping images and class prompts into one embedding space.

The built-in model family is "rp-<dim>": a seeded random-feature encoder
(random projection + tanh, then L2 normalization). Images go through the
projection directly; prompts go through character-trigram hashing into a
pseudo-pixel vector first, so both sides land in the same space. Weights
are derived from a fixed seed and the model name only — no downloads, no
state, and bit-identical output on every run.

It is deliberately not a pretrained network: the tuning core only consumes
geometry, and a frozen random-feature map gives real (if weak) class
structure on pixel datasets while staying fully offline.
"""

import hashlib

import numpy as np

WEIGHT_SEED = 71096253  # frozen; encoder weights must never drift
_TRIGRAM_BUCKETS = 4096


def parse_model(name: str) -> int:
    if not name.startswith("rp-"):
        raise KeyError(f"unknown model {name!r}; available: rp-<dim>, e.g. rp-256")
    try:
        dim = int(name[3:])
    except ValueError:
        raise KeyError(f"bad model name {name!r}") from None
    if not 8 <= dim <= 4096:
        raise KeyError(f"model dimension {dim} out of range [8, 4096]")
    return dim


class RandomFeatureEncoder:
    def __init__(self, model_name: str, input_dim: int):
        self.dim = parse_model(model_name)
        rng = np.random.default_rng([WEIGHT_SEED, self.dim, input_dim])
        scale = 1.0 / np.sqrt(input_dim)
        self.image_weights = rng.standard_normal((input_dim, self.dim)) * scale
        text_scale = 1.0 / np.sqrt(_TRIGRAM_BUCKETS)
        self.text_weights = rng.standard_normal((_TRIGRAM_BUCKETS, self.dim)) * text_scale

    def encode_images(self, images: np.ndarray) -> np.ndarray:
        feats = np.tanh(images @ self.image_weights)
        return _unit(feats)

    def encode_prompts(self, prompts: list[str]) -> np.ndarray:
        rows = np.stack([_trigram_vector(p) for p in prompts])
        feats = np.tanh(rows @ self.text_weights)
        return _unit(feats)


def _trigram_vector(text: str) -> np.ndarray:
    text = f"  {text.lower()}  "
    vec = np.zeros(_TRIGRAM_BUCKETS, dtype=np.float64)
    for i in range(len(text) - 2):
        gram = text[i:i + 3].encode("utf-8")
        bucket = int.from_bytes(hashlib.blake2b(gram, digest_size=4).digest(),
                                "little") % _TRIGRAM_BUCKETS
        vec[bucket] += 1.0
    total = np.linalg.norm(vec)
    return vec / total if total > 0 else vec


def _unit(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("encoder produced a zero-norm embedding")
    return rows / norms

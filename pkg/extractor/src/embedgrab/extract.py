"""The extraction job: dataset -> EMB1/label/name files."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import datasets, emb1
from .encoders import RandomFeatureEncoder

DEFAULT_TEMPLATE = "a photo of a [category]"
PLACEHOLDER = "[category]"


@dataclass(frozen=True)
class ExtractJob:
    dataset_name: str
    model_name: str
    output_directory: str
    prompt_template: str = DEFAULT_TEMPLATE

    def __post_init__(self):
        if self.prompt_template.count(PLACEHOLDER) != 1:
            raise ValueError(
                f"prompt template must contain exactly one {PLACEHOLDER!r}"
            )


def run(job: ExtractJob) -> dict[str, Path]:
    train_x, train_y, test_x, test_y, names = datasets.load(job.dataset_name)
    encoder = RandomFeatureEncoder(job.model_name, train_x.shape[1])

    pool = encoder.encode_images(train_x)
    test = encoder.encode_images(test_x)
    prompts = [job.prompt_template.replace(PLACEHOLDER, name) for name in names]
    classes = encoder.encode_prompts(prompts)
    if classes.shape[1] != pool.shape[1]:
        raise ValueError("image and text embedding dimensions differ")

    out = Path(job.output_directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "pool": out / "pool.emb",
        "pool_labels": out / "pool.labels",
        "test": out / "test.emb",
        "test_labels": out / "test.labels",
        "classes": out / "classes.emb",
        "class_names": out / "classes.names",
    }
    emb1.write_embeddings(pool.astype(np.float32), paths["pool"])
    emb1.write_labels(train_y, paths["pool_labels"])
    emb1.write_embeddings(test.astype(np.float32), paths["test"])
    emb1.write_labels(test_y, paths["test_labels"])
    emb1.write_embeddings(classes.astype(np.float32), paths["classes"])
    emb1.write_class_names(names, paths["class_names"])
    return paths

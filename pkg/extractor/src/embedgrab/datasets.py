"""Dataset registry.

Every loader returns (train_images, train_labels, test_images, test_labels,
class_names) with images as float64 arrays of shape (n, h*w) scaled to
[0, 1]. Splits are deterministic: a fixed-seed stratified shuffle, so
re-running an extraction reproduces the files byte for byte.
"""

import numpy as np

SPLIT_SEED = 20240915  # frozen; changing it would change every output file
TEST_FRACTION = 0.25


def _stratified_split(images, labels, class_count):
    rng = np.random.default_rng(SPLIT_SEED)
    train_idx, test_idx = [], []
    for c in range(class_count):
        members = np.where(labels == c)[0]
        members = members[rng.permutation(members.size)]
        cut = max(1, int(round(members.size * TEST_FRACTION)))
        test_idx.extend(members[:cut])
        train_idx.extend(members[cut:])
    train_idx = np.sort(np.array(train_idx))
    test_idx = np.sort(np.array(test_idx))
    return (images[train_idx], labels[train_idx],
            images[test_idx], labels[test_idx])


def load_digits():
    from sklearn.datasets import load_digits as _load

    bunch = _load()
    images = bunch.data.astype(np.float64) / 16.0
    labels = bunch.target.astype(np.int64)
    names = [f"digit {d}" for d in range(10)]
    return (*_stratified_split(images, labels, 10), names)


def load_digits5():
    """sklearn's digits restricted to the first 5 classes.

    A second registry entry so multi-dataset code paths can be exercised
    without any network access.
    """
    from sklearn.datasets import load_digits as _load

    bunch = _load()
    keep = bunch.target < 5
    images = bunch.data[keep].astype(np.float64) / 16.0
    labels = bunch.target[keep].astype(np.int64)
    names = [f"digit {d}" for d in range(5)]
    return (*_stratified_split(images, labels, 5), names)


REGISTRY = {
    "digits": load_digits,
    "digits5": load_digits5,
}


def load(name: str):
    try:
        loader = REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise KeyError(f"unknown dataset {name!r}; available: {known}") from None
    return loader()

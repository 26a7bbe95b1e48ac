"""Shared fixtures: a small rendered corpus and a model trained on it.

Both are session-scoped; tests must not mutate them.
"""

from __future__ import annotations

import itertools

import pytest

from promocat import (
    Annotation,
    ClassifierModel,
    FeatureExtractorConfig,
    RasterImage,
    SyntheticConfig,
    TrainConfig,
    generate_page,
    postprocess,
    train,
)


def region_samples(cfg: SyntheticConfig, count: int) -> list[tuple[str, set[int]]]:
    """First ``count`` (cleaned text, category set) pairs from the page
    stream, pages generated without rendering."""
    samples: list[tuple[str, set[int]]] = []
    for index in itertools.count():
        _, annotation = generate_page(cfg, index, render=False)
        samples.extend((postprocess(r.text), r.categories) for r in annotation.regions)
        if len(samples) >= count:
            return samples[:count]


@pytest.fixture(scope="session")
def small_cfg() -> SyntheticConfig:
    return SyntheticConfig(
        seed=7,
        image_count=6,
        categories=6,
        multi_label_prob=0.3,
        distractor_density=0.6,
    )


@pytest.fixture(scope="session")
def small_pages(small_cfg) -> list[tuple[RasterImage, Annotation]]:
    return [generate_page(small_cfg, i) for i in range(small_cfg.image_count)]


@pytest.fixture(scope="session")
def small_model(small_cfg) -> ClassifierModel:
    samples = region_samples(small_cfg, 600)
    return train(
        samples,
        TrainConfig(lr=0.1, lr_update_rate=100, epochs=10, dim=40, seed=1),
        FeatureExtractorConfig(ngram_len=3, bucket_count=1 << 15),
    )

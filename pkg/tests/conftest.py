import numpy as np
import pytest

from vlase import AugmentConfig, ClassMask, EdgeFeatureMap


def random_map(
    rng: np.random.Generator,
    image_id: str = "img",
    width: int = 16,
    height: int = 12,
    num_classes: int = 3,
    num_pixels: int | None = None,
) -> EdgeFeatureMap:
    grid = width * height
    if num_pixels is None:
        num_pixels = int(rng.integers(0, min(grid, 40) + 1))
    linear = rng.choice(grid, size=num_pixels, replace=False)
    return EdgeFeatureMap(
        image_id=image_id,
        width=width,
        height=height,
        num_classes=num_classes,
        xs=linear % width,
        ys=linear // width,
        probs=rng.random((num_pixels, num_classes), dtype=np.float32),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)


@pytest.fixture
def basic_cfg() -> AugmentConfig:
    return AugmentConfig(mask=ClassMask.all_classes(3), threshold=0.5, alpha=0.1)

from dataclasses import replace

import numpy as np
import pytest

import oracles
from floss import ConfigError
from floss.synth import SynthConfig, extract_features, generate, generate_one, split

SMALL = SynthConfig(width=16, height=12, n_images=6, seed=3)


def test_generation_is_deterministic():
    a, b = generate(SMALL), generate(SMALL)
    for x, y in zip(a, b):
        assert x.id == y.id
        assert np.array_equal(x.image.values, y.image.values)
        assert np.array_equal(x.mask.values, y.mask.values)


def test_seed_changes_images():
    a = generate_one(SMALL, 0)[0]
    b = generate_one(replace(SMALL, seed=4), 0)[0]
    assert not np.array_equal(a, b)


def test_image_index_is_independent_of_count():
    # image k depends only on (seed, k), not on how many images are generated
    a = generate(SMALL)[2]
    b = generate(replace(SMALL, n_images=3))[2]
    assert np.array_equal(a.image.values, b.image.values)


def test_shapes_and_ranges():
    for s in generate(SMALL):
        assert s.image.shape == (12, 16) and s.mask.shape == (12, 16)
        assert s.features.values.shape == (12, 16, 4)
        v = s.image.values
        assert v.min() >= 0.0 and v.max() <= 1.0
        assert set(np.unique(s.mask.values)) <= {0.0, 1.0}


def test_noiseless_image_is_two_level():
    cfg = replace(SMALL, noise_sigma=0.0, blobs_per_image=(1, 1))
    for k in range(5):
        image, mask = generate_one(cfg, k)
        levels = np.unique(image)
        assert len(levels) == 2
        assert np.array_equal(mask == 1.0, image == levels[1])
        assert 0.6 <= levels[1] <= 0.8 and 0.2 <= levels[0] <= 0.4


def test_foreground_fraction_is_moderate():
    frac = np.array([s.mask.values.mean() for s in generate(SynthConfig(n_images=200))])
    assert frac.min() > 0.0
    assert 0.03 <= frac.mean() <= 0.45


def test_features_on_constant_image():
    f = extract_features(np.full((10, 10), 0.3)).values
    assert np.allclose(f[..., :3], 0.3)
    assert np.all(f[..., 3] == 1.0)


def test_box_means_of_impulse():
    img = np.zeros((15, 15))
    img[7, 7] = 1.0
    f = extract_features(img).values
    assert f[7, 7, 1] == pytest.approx(1 / 25)
    assert f[7, 7, 2] == pytest.approx(1 / 81)
    assert f[7, 10, 1] == 0.0  # outside the 5x5 window


def test_box_means_match_brute_force(rng):
    img = rng.random((9, 11))
    f = extract_features(img).values
    for channel, r in ((1, 2), (2, 4)):
        assert np.allclose(f[..., channel], oracles.box_mean(img.tolist(), r), atol=1e-12)


def test_split():
    samples = generate(replace(SMALL, n_images=9))
    train, test = split(samples, 2 / 3, seed=0)
    assert len(train) == 6 and len(test) == 3
    assert {s.id for s in train}.isdisjoint(s.id for s in test)
    assert [s.id for s in split(samples, 2 / 3, seed=0)[0]] == [s.id for s in train]
    with pytest.raises(ValueError):
        split(samples, 1.0, seed=0)


@pytest.mark.parametrize(
    "overrides",
    [
        {"width": 7},
        {"height": 4},
        {"n_images": 0},
        {"noise_sigma": -0.1},
        {"blobs_per_image": (2, 1)},
        {"fg_intensity": (0.3, 0.5)},
    ],
)
def test_config_validation(overrides):
    with pytest.raises(ConfigError):
        generate(replace(SMALL, **overrides))

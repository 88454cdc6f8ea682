import math

import numpy as np
import pytest

from helpers import splitmix64_reference
from oodmon.errors import IdenticalImagesError
from oodmon.image_io import Image
from oodmon.metrics import mse, psnr
from oodmon.reconstructor import (
    CorpusSpec,
    SplitMix64,
    StandInConfig,
    generate_corpus,
    prng_next,
    reconstruct,
)


# -- prng -------------------------------------------------------------------


def test_prng_matches_published_recurrence():
    state = 0
    ref_state = 0
    for _ in range(100):
        state, value = prng_next(state)
        ref_state, z = splitmix64_reference(ref_state)
        assert state == ref_state
        assert value == (z >> 11) / 2.0**53


def test_prng_first_output_from_seed_zero():
    # first SplitMix64 output for seed 0 is 0xE220A8397B1DCDAF
    _, value = prng_next(0)
    assert value == (0xE220A8397B1DCDAF >> 11) / 2.0**53 == 0.8833108082136426
    _, z = splitmix64_reference(0)
    assert z == 0xE220A8397B1DCDAF


def test_prng_seeds_diverge():
    assert prng_next(0)[1] != prng_next(1)[1]


def test_prng_outputs_in_unit_interval():
    state = 42
    for _ in range(1000):
        state, value = prng_next(state)
        assert 0.0 <= value < 1.0


def test_gaussian_stream_mean_and_spread():
    rng = SplitMix64(9)
    draws = [rng.gaussian() for _ in range(4000)]
    mean = sum(draws) / len(draws)
    var = sum((d - mean) ** 2 for d in draws) / (len(draws) - 1)
    assert abs(mean) < 0.1
    assert 0.85 < var < 1.15


# -- stand-in codec -----------------------------------------------------------


def grid_image(rng, shape):
    raw = rng.integers(0, 256, size=shape)
    if raw.max() == 0:
        raw[0, 0, 0] = 1  # keep one pixel off the zero level so PSNR is defined
    return Image(raw / 255.0)


def test_identity_block_keeps_grid_images_within_quantization():
    # oracle: worst displacement of any 1/255 grid value onto the 2^8 levels
    levels = 256
    worst = max(abs(min(int(k / 255 * levels), levels - 1) / levels - k / 255) for k in range(256))
    floor_db = -20.0 * math.log10(worst)
    assert floor_db >= 48.0
    rng = np.random.default_rng(21)
    cfg = StandInConfig(block=1, quant_bits=8)
    for _ in range(10):
        img = grid_image(rng, (6, 5, 1))
        assert psnr(img, reconstruct(img, cfg)) >= floor_db - 1e-9


def test_block_mean_and_exact_mse():
    img = Image(np.array([[0.0, 0.0], [1.0, 1.0]]).reshape(2, 2, 1))
    out = reconstruct(img, StandInConfig(block=2, quant_bits=8))
    assert out.pixels.ravel().tolist() == [0.5, 0.5, 0.5, 0.5]
    assert mse(img, out) == 0.25


def test_constant_on_quantization_level_reconstructs_exactly():
    img = Image(np.full((4, 4, 1), 0.25))  # 0.25 = 4/16 sits on a 4-bit level
    out = reconstruct(img, StandInConfig(block=2, quant_bits=4))
    assert np.array_equal(out.pixels, img.pixels)
    with pytest.raises(IdenticalImagesError):
        psnr(img, out)


def test_constant_off_level_stays_defined():
    img = Image(np.full((4, 4, 1), 0.3))
    out = reconstruct(img, StandInConfig(block=2, quant_bits=1))
    assert out.pixels.ravel()[0] == 0.0  # floor(0.3 * 2) / 2
    assert psnr(img, out) > 0.0


def test_idempotent_for_identity_block():
    rng = np.random.default_rng(22)
    for bits in (1, 4, 8):
        cfg = StandInConfig(block=1, quant_bits=bits)
        img = Image(rng.random((5, 6, 3)))
        once = reconstruct(img, cfg)
        twice = reconstruct(once, cfg)
        assert np.array_equal(once.pixels, twice.pixels)


def test_edge_padding_hand_case():
    # 1x3 row [0, 1, 0], block 2: pad to 2x4 by edge replication,
    # blocks mean to [0.5, 0.0], upsample, crop back to 1x3
    img = Image(np.array([0.0, 1.0, 0.0]).reshape(1, 3, 1))
    out = reconstruct(img, StandInConfig(block=2, quant_bits=8))
    assert out.pixels.ravel().tolist() == [0.5, 0.5, 0.0]


def test_non_divisible_sizes_keep_shape():
    rng = np.random.default_rng(23)
    img = Image(rng.random((5, 7, 3)))
    out = reconstruct(img, StandInConfig(block=3, quant_bits=6))
    assert out.pixels.shape == img.pixels.shape
    assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0


def test_standin_config_validated():
    with pytest.raises(ValueError):
        StandInConfig(block=0)
    with pytest.raises(ValueError):
        StandInConfig(quant_bits=0)
    with pytest.raises(ValueError):
        StandInConfig(quant_bits=9)
    assert StandInConfig(block=2).compression_ratio == 0.25


# -- corpus ------------------------------------------------------------------


def test_corpus_deterministic():
    spec = CorpusSpec(count=3, width=16, height=12, shift_kind="noise", shift_amount=0.1, seed=77)
    first = generate_corpus(spec)
    second = generate_corpus(spec)
    assert len(first) == 6
    for (img_a, tag_a), (img_b, tag_b) in zip(first, second):
        assert tag_a == tag_b
        assert np.array_equal(img_a.pixels, img_b.pixels)


def test_corpus_seeds_differ():
    make = lambda seed: CorpusSpec(count=1, width=8, height=8, shift_kind="invert", seed=seed)
    a = generate_corpus(make(1))[0][0]
    b = generate_corpus(make(2))[0][0]
    assert not np.array_equal(a.pixels, b.pixels)


def test_invert_shift_exact():
    spec = CorpusSpec(count=2, width=8, height=8, shift_kind="invert", seed=5)
    corpus = generate_corpus(spec)
    for (base, _), (flipped, _) in zip(corpus[:2], corpus[2:]):
        assert np.array_equal(flipped.pixels, 1.0 - base.pixels)


def test_brightness_shift_clamped():
    spec = CorpusSpec(count=2, width=8, height=8, shift_kind="brightness", shift_amount=0.2, seed=5)
    corpus = generate_corpus(spec)
    for (base, _), (shifted, _) in zip(corpus[:2], corpus[2:]):
        assert np.array_equal(shifted.pixels, np.clip(base.pixels + 0.2, 0.0, 1.0))


def test_domain_tags_ordered():
    spec = CorpusSpec(count=2, width=4, height=4, shift_kind="invert", seed=1)
    tags = [tag for _, tag in generate_corpus(spec)]
    assert tags == ["in", "in", "out", "out"]


def test_corpus_spec_validated():
    with pytest.raises(ValueError):
        CorpusSpec(count=0, width=4, height=4, shift_kind="invert")
    with pytest.raises(ValueError):
        CorpusSpec(count=1, width=4, height=4, shift_kind="noise", shift_amount=-1.0)
    with pytest.raises(ValueError):
        CorpusSpec(count=1, width=4, height=4, shift_kind="brightness", shift_amount=1.5)
    with pytest.raises(ValueError):
        CorpusSpec(count=1, width=4, height=4, shift_kind="blur")


def test_noise_shift_separates_mean_psnr():
    # block averaging wipes high-frequency noise: shifted frames must score lower
    spec = CorpusSpec(count=64, width=32, height=32, shift_kind="noise", shift_amount=0.15, seed=13)
    cfg = StandInConfig(block=2, quant_bits=6)
    mean_by_tag = {"in": [], "out": []}
    for img, tag in generate_corpus(spec):
        mean_by_tag[tag].append(psnr(img, reconstruct(img, cfg)))
    mean_in = sum(mean_by_tag["in"]) / len(mean_by_tag["in"])
    mean_out = sum(mean_by_tag["out"]) / len(mean_by_tag["out"])
    assert mean_in > mean_out

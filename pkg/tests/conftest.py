"""Shared fixtures: small codecs and synthetic clips sized for fast tests."""

import numpy as np
import pytest
import torch

from stereocodec.config import CodecConfig
from stereocodec.codec import StereoVideoCodec
from stereocodec.data import SceneParams, generate_clip


@pytest.fixture(scope="session", autouse=True)
def single_thread():
    # The test box exposes one core; torch's default thread count comes
    # from the raw cpu count and oversubscribes it badly.
    torch.set_num_threads(1)


@pytest.fixture()
def tiny_config():
    return CodecConfig.tiny()


@pytest.fixture()
def tiny_codec(tiny_config):
    return StereoVideoCodec.seeded(tiny_config, seed=0)


@pytest.fixture()
def small_clip():
    rng = np.random.default_rng(7)
    params = SceneParams(height=64, width=64, frames=3)
    return generate_clip(rng, params)


def make_clip(seed: int, height: int = 64, width: int = 64, frames: int = 2):
    rng = np.random.default_rng(seed)
    params = SceneParams(height=height, width=width, frames=frames)
    return generate_clip(rng, params)

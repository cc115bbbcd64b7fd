"""Shared synthetic scenes and hypothesis settings for the test suite."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def make_disc_scene(n: int = 64) -> np.ndarray:
    """Two smooth regions separated by one curved edge: a bright disc over a
    gently modulated background."""
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    img = 90.0 + 40.0 * np.sin(2 * np.pi * i / n) * np.cos(2 * np.pi * j / n)
    disc = (i - 0.35 * n) ** 2 + (j - 0.6 * n) ** 2 <= (0.18 * n) ** 2
    img[disc] = 200.0
    return img


def make_shapes_scene(n: int = 64) -> np.ndarray:
    """Disc scene plus a dark square: three regions, curved and straight edges."""
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    img = make_disc_scene(n)
    square = (np.abs(i - 0.7 * n) <= 0.12 * n) & (np.abs(j - 0.25 * n) <= 0.12 * n)
    img[square] = 40.0
    return img


def make_strip_scene(n: int = 64, lo_col: int = 20, hi_col: int = 44) -> np.ndarray:
    """Vertical bright strip on a flat background.

    Both jumps sit inside the frame (columns ``lo_col - 0.5`` and
    ``hi_col - 0.5``), so the image is genuinely edge-free across the
    periodic wrap, unlike a half-plane step.
    """
    img = np.full((n, n), 60.0)
    img[:, lo_col:hi_col] = 200.0
    return img


@pytest.fixture
def disc_scene():
    return make_disc_scene()


@pytest.fixture
def shapes_scene():
    return make_shapes_scene()


@pytest.fixture
def strip_scene():
    return make_strip_scene()

"""Isotropic (joint band) soft shrinkage of framelet coefficients.

At every level and pixel the high-pass coefficients across all bands form a
vector whose Euclidean length ``R`` is shrunk by a threshold ``theta``:

    scale = max(R - theta, 0) / R        (0 where R == 0)

This is the proximal map of ``theta * R`` in the coefficient vector, applied
independently per level and pixel.  Low-pass planes pass through untouched.
Thresholds may vary per level and pixel; they must be nonnegative.
"""

from __future__ import annotations

import numpy as np

from .framelet import FrameCoeffs

__all__ = ["band_magnitude", "isotropic_shrink", "shrink_vector"]


def band_magnitude(high: np.ndarray) -> np.ndarray:
    """Per-pixel Euclidean magnitude across the band axis.

    ``high`` has shape ``(levels, n_bands, N, N)``; the result drops the band
    axis.  Optionally used with weighted coefficients by pre-scaling."""
    return np.sqrt(np.sum(np.square(high), axis=-3))


def shrink_vector(values: np.ndarray, theta) -> np.ndarray:
    """Shrink band vectors ``values`` of shape ``(..., n_bands, N, N)`` by
    ``theta`` (scalar or broadcastable to the magnitude's shape)."""
    theta = np.asarray(theta, dtype=np.float64)
    if np.any(theta < 0):
        raise ValueError("shrinkage threshold must be nonnegative")
    mag = band_magnitude(values)
    scale = np.zeros_like(mag)
    np.divide(np.maximum(mag - theta, 0.0), mag, out=scale, where=mag > 0)
    return values * scale[..., None, :, :]


def isotropic_shrink(coeffs: FrameCoeffs, theta) -> FrameCoeffs:
    """Apply joint-band soft shrinkage to every high-pass level of ``coeffs``.

    ``theta`` is a scalar or an array broadcastable to ``(levels, N, N)``,
    i.e. one threshold per level and pixel shared by all bands.  The low-pass
    plane is returned bit for bit.
    """
    theta = np.asarray(theta, dtype=np.float64)
    levels, _, n1, n2 = coeffs.high.shape
    try:
        np.broadcast_shapes(theta.shape, (levels, n1, n2))
    except ValueError:
        raise ValueError(
            f"threshold shape {theta.shape} does not broadcast to {(levels, n1, n2)}"
        ) from None
    shrunk = shrink_vector(coeffs.high, theta)
    return FrameCoeffs(high=shrunk, low=coeffs.low.copy(),
                       bands=coeffs.bands, levels=coeffs.levels)

"""Measurement operators: identity, pixel masks, and periodic blur.

Every operator exposes ``apply`` / ``adjoint`` plus ``solve_normal`` which
inverts ``(A^T A + penalty I)`` exactly: trivially for the identity,
pointwise for binary masks, and through the 2-D DFT for circulant blur.
A conjugate-gradient fallback on the base class covers any operator that
cannot provide a closed form.
"""

from __future__ import annotations

import numpy as np

from .grid_image import as_pixels, load_image

__all__ = [
    "DegradationOp",
    "Identity",
    "InpaintMask",
    "PeriodicBlur",
    "matlab_gaussian_kernel",
    "freq_symbol",
    "random_mask",
    "rect_mask",
    "mask_from_image",
]


class DegradationOp:
    """Linear measurement operator on square pixel arrays."""

    def apply(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def solve_normal(self, rhs: np.ndarray, penalty: float) -> np.ndarray:
        """Solve ``(A^T A + penalty I) x = rhs`` by conjugate gradients.

        Subclasses override this with exact inverses; the iterative path is
        kept for operators without one (tolerance 1e-10, at most 500 steps).
        """
        if penalty <= 0:
            raise ValueError("penalty must be positive")

        def normal(x):
            return self.adjoint(self.apply(x)) + penalty * x

        x = np.zeros_like(rhs)
        r = rhs - normal(x)
        p = r.copy()
        rs = np.vdot(r, r).real
        for _ in range(500):
            if np.sqrt(rs) <= 1e-10 * max(1.0, np.linalg.norm(rhs)):
                break
            ap = normal(p)
            alpha = rs / np.vdot(p, ap).real
            x = x + alpha * p
            r = r - alpha * ap
            rs_new = np.vdot(r, r).real
            p = r + (rs_new / rs) * p
            rs = rs_new
        return x


class Identity(DegradationOp):
    def apply(self, u):
        return np.asarray(u, dtype=np.float64).copy()

    adjoint = apply

    def solve_normal(self, rhs, penalty):
        return np.asarray(rhs, dtype=np.float64) / (1.0 + penalty)


class InpaintMask(DegradationOp):
    """Projection onto observed pixels: multiplies by a binary mask.

    ``mask`` holds 1 on kept pixels and 0 on lost ones; anything else is
    rejected.  The operator is self-adjoint and idempotent.
    """

    def __init__(self, mask):
        mask = as_pixels(mask)
        if not np.all((mask == 0.0) | (mask == 1.0)):
            raise ValueError("mask entries must be exactly 0 or 1")
        self.mask = mask

    def apply(self, u):
        return self.mask * np.asarray(u, dtype=np.float64)

    adjoint = apply

    def solve_normal(self, rhs, penalty):
        return np.asarray(rhs, dtype=np.float64) / (self.mask + penalty)


class PeriodicBlur(DegradationOp):
    """Circular convolution with a normalized blur kernel.

    The kernel center sits at offset (0, 0); even sizes put the center at
    the top-left of the middle 2x2 block, matching the correlation grid of
    the Gaussian builder below.  ``apply`` uses direct wrapped summation;
    the DFT symbol is only used for the normal-equation solve, and the two
    routes agree to rounding (checked in the tests).
    """

    def __init__(self, kernel):
        kernel = np.asarray(kernel, dtype=np.float64)
        if kernel.ndim != 2:
            raise ValueError("kernel must be 2-D")
        if abs(kernel.sum() - 1.0) > 1e-12:
            raise ValueError(f"kernel must sum to 1, got {kernel.sum()!r}")
        self.kernel = kernel.copy()
        self._symbols: dict[tuple[int, int], np.ndarray] = {}

    def _offsets(self):
        m, n = self.kernel.shape
        c1, c2 = (m - 1) // 2, (n - 1) // 2
        return c1, c2

    def apply(self, u):
        u = np.asarray(u, dtype=np.float64)
        c1, c2 = self._offsets()
        out = np.zeros_like(u)
        for i in range(self.kernel.shape[0]):
            for j in range(self.kernel.shape[1]):
                w = self.kernel[i, j]
                if w == 0.0:
                    continue
                out += w * np.roll(u, (i - c1, j - c2), axis=(0, 1))
        return out

    def adjoint(self, u):
        u = np.asarray(u, dtype=np.float64)
        c1, c2 = self._offsets()
        out = np.zeros_like(u)
        for i in range(self.kernel.shape[0]):
            for j in range(self.kernel.shape[1]):
                w = self.kernel[i, j]
                if w == 0.0:
                    continue
                out += w * np.roll(u, (c1 - i, c2 - j), axis=(0, 1))
        return out

    def symbol(self, shape) -> np.ndarray:
        """DFT of the kernel embedded on an ``shape`` grid, cached per shape."""
        shape = tuple(int(s) for s in shape)
        if shape not in self._symbols:
            self._symbols[shape] = freq_symbol(self.kernel, shape)
        return self._symbols[shape]

    def solve_normal(self, rhs, penalty):
        rhs = np.asarray(rhs, dtype=np.float64)
        sym = self.symbol(rhs.shape)
        den = np.abs(sym) ** 2 + penalty
        return np.fft.ifft2(np.fft.fft2(rhs) / den).real


def freq_symbol(kernel, shape) -> np.ndarray:
    """2-D DFT of ``kernel`` zero-padded to ``shape`` with its center wrapped
    to index (0, 0), so that circular convolution becomes a pointwise product
    in frequency."""
    kernel = np.asarray(kernel, dtype=np.float64)
    n1, n2 = shape
    if kernel.shape[0] > n1 or kernel.shape[1] > n2:
        raise ValueError(f"kernel {kernel.shape} larger than grid {shape}")
    c1 = (kernel.shape[0] - 1) // 2
    c2 = (kernel.shape[1] - 1) // 2
    embedded = np.zeros((n1, n2))
    embedded[: kernel.shape[0], : kernel.shape[1]] = kernel
    embedded = np.roll(embedded, (-c1, -c2), axis=(0, 1))
    return np.fft.fft2(embedded)


def matlab_gaussian_kernel(hsize: int, sigma: float) -> np.ndarray:
    """Normalized Gaussian kernel on the symmetric grid used by MATLAB's
    ``fspecial('gaussian', hsize, sigma)``.

    Coordinates run over ``-(hsize-1)/2 ... (hsize-1)/2`` (half-integers for
    even sizes), the exponential is truncated below machine epsilon times its
    peak, and the result sums to exactly 1.
    """
    if hsize < 1:
        raise ValueError("hsize must be at least 1")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    half = (hsize - 1) / 2.0
    coords = np.arange(hsize) - half
    x, y = np.meshgrid(coords, coords, indexing="ij")
    arg = -(x * x + y * y) / (2.0 * sigma * sigma)
    kernel = np.exp(arg)
    kernel[kernel < np.finfo(np.float64).eps * kernel.max()] = 0.0
    total = kernel.sum()
    if total != 0:
        kernel /= total
    return kernel


# ---------------------------------------------------------------------------
# Mask builders
# ---------------------------------------------------------------------------

def random_mask(n: int, fraction: float, seed: int) -> np.ndarray:
    """Binary mask on an ``n x n`` grid losing each pixel independently with
    probability ``fraction`` (0 marks a lost pixel)."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    return (rng.random((n, n)) >= fraction).astype(np.float64)


def rect_mask(n: int, rects) -> np.ndarray:
    """Mask zeroing axis-aligned rectangles given as (row0, col0, height, width)."""
    mask = np.ones((n, n))
    for r0, c0, h, w in rects:
        if h < 0 or w < 0 or r0 < 0 or c0 < 0 or r0 + h > n or c0 + w > n:
            raise ValueError(f"rectangle {(r0, c0, h, w)} does not fit in {n}x{n}")
        mask[r0:r0 + h, c0:c0 + w] = 0.0
    return mask


def mask_from_image(path, threshold: float = 128.0) -> np.ndarray:
    """Mask from an image file: 0 where intensity >= threshold, 1 elsewhere."""
    img = load_image(path)
    return (img < threshold).astype(np.float64)

"""Grayscale images on square periodic grids: file I/O, noise, and metrics.

Pixel data is kept as float64 ``numpy`` arrays of shape ``(N, N)`` throughout
the package; functions here never mutate their inputs.  Files are read and
written in PGM (P2/P5) or grayscale PNG at 8 or 16 bits.  Float pixels are
clamped to the representable range and rounded only at save time.
"""

from __future__ import annotations

import os
import re

import numpy as np

__all__ = [
    "PEAK",
    "as_pixels",
    "load_image",
    "save_image",
    "add_gaussian_noise",
    "psnr",
]

# Peak signal value used by the PSNR metric, fixed by the 8-bit dynamic range.
PEAK = 255.0


def as_pixels(data, square: bool = False) -> np.ndarray:
    """Validate ``data`` as a 2-D finite float64 pixel array and return a copy.

    Raises ``ValueError`` for wrong dimensionality, empty axes, or
    non-finite entries.  ``square=True`` additionally requires equal sides,
    which the restoration solvers assume.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D pixel array, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("image has an empty axis")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains NaN or infinite values")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square image, got shape {arr.shape}")
    return arr.copy()


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

_PGM_MAGIC = (b"P2", b"P5")


def _read_pgm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    # Header tokens may be separated by whitespace and '#' comments.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        match = re.match(rb"\s*(#[^\n]*\n|\S+)", raw[pos:])
        if match is None:
            raise ValueError(f"{path}: truncated PGM header")
        pos += match.end()
        tok = match.group(1)
        if not tok.startswith(b"#"):
            tokens.append(tok)
    magic = tokens[0]
    if magic not in _PGM_MAGIC:
        raise ValueError(f"{path}: unsupported PGM magic {magic!r}")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"{path}: bad maxval {maxval}")
    count = width * height
    if magic == b"P2":
        flat = np.array(raw[pos:].split(), dtype=np.float64)
        if flat.size != count:
            raise ValueError(f"{path}: expected {count} samples, found {flat.size}")
    else:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        pos += 1  # exactly one whitespace byte separates maxval from the payload
        body = raw[pos:pos + count * dtype.itemsize]
        if len(body) != count * dtype.itemsize:
            raise ValueError(f"{path}: truncated P5 payload")
        flat = np.frombuffer(body, dtype=dtype).astype(np.float64)
    pixels = flat.reshape(height, width)
    if np.any(pixels > maxval):
        raise ValueError(f"{path}: sample exceeds declared maxval {maxval}")
    return pixels


def _write_pgm(path, pixels, depth, ascii_format=False):
    maxval = 255 if depth == 8 else 65535
    quant = np.clip(np.rint(pixels), 0, maxval)
    height, width = quant.shape
    header = f"{'P2' if ascii_format else 'P5'}\n{width} {height}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if ascii_format:
            lines = "\n".join(
                " ".join(str(int(v)) for v in row) for row in quant
            )
            fh.write(lines.encode("ascii"))
            fh.write(b"\n")
        else:
            dtype = np.dtype("u1") if depth == 8 else np.dtype(">u2")
            fh.write(quant.astype(dtype).tobytes())


def _read_png(path):
    from PIL import Image as PILImage

    with PILImage.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.float64)
        elif img.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(img, dtype=np.float64)
        else:
            raise ValueError(
                f"{path}: unsupported PNG mode {img.mode!r}; only grayscale is handled"
            )
    return arr


def _write_png(path, pixels, depth):
    from PIL import Image as PILImage

    if depth == 8:
        quant = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
        PILImage.fromarray(quant, mode="L").save(path)
    else:
        quant = np.clip(np.rint(pixels), 0, 65535).astype(np.uint16)
        PILImage.fromarray(quant).save(path)


def load_image(path) -> np.ndarray:
    """Read a PGM (P2/P5) or grayscale PNG file into a float64 array."""
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if ext == ".pgm":
        pixels = _read_pgm(path)
    elif ext == ".png":
        pixels = _read_png(path)
    else:
        raise ValueError(f"unsupported image extension {ext!r} (use .pgm or .png)")
    return as_pixels(pixels)


def save_image(path, pixels, depth: int = 8, ascii_format: bool = False) -> None:
    """Write ``pixels`` to ``path``, clamping and rounding to the bit depth.

    ``depth`` is 8 or 16.  ``ascii_format`` selects the plain-text P2 variant
    for PGM output and is ignored for PNG.
    """
    pixels = as_pixels(pixels)
    if depth not in (8, 16):
        raise ValueError(f"depth must be 8 or 16, got {depth}")
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pgm":
        _write_pgm(path, pixels, depth, ascii_format=ascii_format)
    elif ext == ".png":
        _write_png(path, pixels, depth)
    else:
        raise ValueError(f"unsupported image extension {ext!r} (use .pgm or .png)")


# ---------------------------------------------------------------------------
# Degradation noise and quality metric
# ---------------------------------------------------------------------------

def add_gaussian_noise(pixels, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) noise with a fixed ``seed``.

    The result is deterministic for a given (shape, sigma, seed) triple and
    is returned unclamped; quantization happens at save time.
    """
    pixels = as_pixels(pixels)
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return pixels
    rng = np.random.default_rng(seed)
    return pixels + sigma * rng.standard_normal(pixels.shape)


def psnr(reference, test) -> float:
    """Peak signal-to-noise ratio in dB against the 8-bit peak value 255.

    Computed as ``-20 log10(||reference - test||_2 / (255 N))`` for ``N x N``
    inputs.  Identical arrays return ``inf``.  Values are used as given:
    out-of-range pixels are NOT clamped here, so raw solver output can be
    scored directly; clamp beforehand if the quantized score is wanted.
    """
    ref = as_pixels(reference)
    tst = as_pixels(test)
    if ref.shape != tst.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {tst.shape}")
    diff = ref - tst
    err = np.linalg.norm(diff.ravel())
    if err == 0.0:
        return float("inf")
    n = np.sqrt(ref.size)
    return float(-20.0 * np.log10(err / (PEAK * n)))

"""Image and k-space primitives.

Images are 2D float64 arrays; k-space grids are 2D complex128 arrays with
the DC sample at index (H//2, W//2). The transforms are unitary (ortho
normalization), so `ifft2(fft2(x)) == x` and energy is preserved. All
arithmetic is double precision.

File formats:
  * native "MCF1": magic, u32 height, u32 width, u8 kind (0 = float64,
    1 = complex as float64 re/im pairs), little-endian payload. Round-trips
    are bit-exact.
  * binary PGM ("P5") import/export for quick visual checks.
"""

import struct

import numpy as np

from .errors import DimensionError, FormatError

_MAGIC = b"MCF1"
_KIND_REAL = 0
_KIND_COMPLEX = 1


def as_image(a):
    """Validate and return `a` as a float64 2D image array."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2D image, got shape {a.shape}")
    return a


def normalize(img):
    """Affinely map an image onto [0, 1]; a constant image maps to all zeros."""
    img = as_image(img)
    lo = img.min()
    hi = img.max()
    if hi == lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def fft2(x):
    """Centered unitary 2D FFT (DC at index (H//2, W//2))."""
    x = np.asarray(x)
    if x.ndim != 2 or x.size == 0:
        raise DimensionError(f"expected a non-empty 2D array, got shape {x.shape}")
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(x), norm="ortho"))


def ifft2(k):
    """Inverse of `fft2` under the same centered unitary convention."""
    k = np.asarray(k)
    if k.ndim != 2 or k.size == 0:
        raise DimensionError(f"expected a non-empty 2D array, got shape {k.shape}")
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(k), norm="ortho"))


def save_image(path, img):
    """Write a real image in the native MCF1 format."""
    img = as_image(img)
    _save_mcf(path, img, _KIND_REAL)


def save_grid(path, grid):
    """Write a complex k-space grid in the native MCF1 format."""
    grid = np.asarray(grid, dtype=np.complex128)
    if grid.ndim != 2 or grid.size == 0:
        raise DimensionError(f"expected a non-empty 2D grid, got shape {grid.shape}")
    _save_mcf(path, grid, _KIND_COMPLEX)


def load_image(path):
    """Read a real image written by `save_image`."""
    data, kind = _load_mcf(path)
    if kind != _KIND_REAL:
        raise FormatError(f"{path}: expected a real image file, found kind {kind}", offset=12)
    return data


def load_grid(path):
    """Read a complex grid written by `save_grid`."""
    data, kind = _load_mcf(path)
    if kind != _KIND_COMPLEX:
        raise FormatError(f"{path}: expected a complex grid file, found kind {kind}", offset=12)
    return data


def _save_mcf(path, arr, kind):
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IIB", h, w, kind))
        if kind == _KIND_REAL:
            payload = arr.astype("<f8", copy=False)
        else:
            payload = np.empty((h, w, 2), dtype="<f8")
            payload[:, :, 0] = arr.real
            payload[:, :, 1] = arr.imag
        f.write(payload.tobytes())


def _load_mcf(path):
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != _MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}", offset=0)
    if len(raw) < 13:
        raise FormatError(f"{path}: truncated header", offset=len(raw))
    h, w, kind = struct.unpack_from("<IIB", raw, 4)
    if h < 1 or w < 1:
        raise FormatError(f"{path}: invalid dimensions {h}x{w}", offset=4)
    if kind not in (_KIND_REAL, _KIND_COMPLEX):
        raise FormatError(f"{path}: unknown kind {kind}", offset=12)
    per = 8 if kind == _KIND_REAL else 16
    expect = 13 + h * w * per
    if len(raw) != expect:
        raise FormatError(
            f"{path}: payload is {len(raw) - 13} bytes, expected {expect - 13}",
            offset=min(len(raw), expect),
        )
    if kind == _KIND_REAL:
        return np.frombuffer(raw, dtype="<f8", offset=13).reshape(h, w).copy(), kind
    flat = np.frombuffer(raw, dtype="<f8", offset=13).reshape(h, w, 2)
    return (flat[:, :, 0] + 1j * flat[:, :, 1]).astype(np.complex128), kind


def save_pgm(path, img):
    """Export an image as 8-bit binary PGM; values quantized by round(v*255)."""
    img = as_image(img)
    q = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        f.write(q.tobytes())


def load_pgm(path):
    """Import an 8- or 16-bit binary PGM, scaled to [0, 1] by its maxval."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM", offset=0)
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated header", offset=pos)
        try:
            fields.append(int(raw[start:pos]))
        except ValueError:
            raise FormatError(f"{path}: bad header token {raw[start:pos]!r}", offset=start)
    w, h, maxval = fields
    pos += 1  # single whitespace after maxval
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise FormatError(f"{path}: invalid header values {w} {h} {maxval}", offset=2)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = h * w * dtype.itemsize
    if len(raw) - pos != need:
        raise FormatError(
            f"{path}: payload is {len(raw) - pos} bytes, expected {need}", offset=pos
        )
    data = np.frombuffer(raw, dtype=dtype, offset=pos).reshape(h, w)
    return data.astype(np.float64) / maxval

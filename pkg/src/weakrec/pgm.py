"""Minimal 8-bit binary PGM (P5) reader/writer for the diffraction demo."""

import numpy as np

__all__ = ["read_pgm", "write_pgm"]


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    # header tokens: magic, width, height, maxval; '#' comments run to newline
    tokens = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise ValueError("truncated PGM header")
        c = data[i:i + 1]
        if c == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if tokens[0] != b"P5":
        raise ValueError("only binary PGM (P5) is supported")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if not 0 < maxval < 256:
        raise ValueError("only 8-bit PGM is supported")
    i += 1  # single whitespace after maxval
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=i)
    return raster.reshape(height, width).astype(float)


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2-D grayscale image")
    lo, hi = float(img.min()), float(img.max())
    scaled = np.zeros_like(img) if hi <= lo else (img - lo) / (hi - lo) * 255.0
    raster = np.round(scaled).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        fh.write(raster.tobytes())

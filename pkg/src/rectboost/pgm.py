"""Binary PGM (P5) reading and writing."""

import numpy as np


class PgmError(ValueError):
    pass


def _tokens(data: bytes):
    """Header tokens: whitespace separated, # starts a comment to EOL."""
    i = 0
    while i < len(data):
        c = data[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            yield data[i:j], j
            i = j


def load_pgm(path) -> np.ndarray:
    """Parse a binary (P5) PGM with maxval <= 255 into a float array."""
    with open(path, "rb") as fh:
        data = fh.read()
    toks = _tokens(data)
    try:
        magic, _ = next(toks)
    except StopIteration:
        raise PgmError(f"{path}: empty file") from None
    if magic != b"P5":
        raise PgmError(f"{path}: unsupported format {magic!r} (expected binary P5)")
    try:
        (w_tok, _), (h_tok, _), (max_tok, end) = next(toks), next(toks), next(toks)
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except (StopIteration, ValueError):
        raise PgmError(f"{path}: malformed header") from None
    if width < 1 or height < 1:
        raise PgmError(f"{path}: invalid dimensions {width}x{height}")
    if maxval > 255 or maxval < 1:
        raise PgmError(f"{path}: maxval {maxval} out of supported range (1..255)")
    payload = data[end + 1 :]  # single whitespace byte after maxval
    need = width * height
    if len(payload) < need:
        raise PgmError(f"{path}: truncated payload, expected {need} bytes got {len(payload)}")
    pixels = np.frombuffer(payload[:need], dtype=np.uint8)
    return pixels.reshape(height, width).astype(np.float64)


def save_pgm(path, img: np.ndarray) -> None:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise PgmError(f"cannot save array of shape {arr.shape} as PGM")
    data = np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())

"""Binary PGM image files and the matrix CSV exchange format."""

from __future__ import annotations

import numpy as np

from .errors import ContractViolationError, PgmFormatError
from .linalg import as_matrix

__all__ = [
    "load_matrix_csv",
    "load_pgm",
    "load_pgm_with_size",
    "save_matrix_csv",
    "save_pgm",
]

_WHITESPACE = frozenset(b" \t\n\r\x0b\x0c")
_COMMENT = ord("#")

PGM_SCALE = 127.5


class _PgmScanner:
    """Token scanner for the PGM header that tracks byte offsets."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_separators(self):
        while self.pos < len(self.data):
            byte = self.data[self.pos]
            if byte == _COMMENT:
                nl = self.data.find(b"\n", self.pos)
                if nl < 0:
                    raise PgmFormatError("unterminated comment", self.pos)
                self.pos = nl + 1
            elif byte in _WHITESPACE:
                self.pos += 1
            else:
                return
        raise PgmFormatError("unexpected end of header", self.pos)

    def token(self) -> bytes:
        self.skip_separators()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos] not in _WHITESPACE:
            self.pos += 1
        return self.data[start : self.pos]

    def integer(self, what: str) -> int:
        tok = self.token()
        try:
            return int(tok)
        except ValueError:
            raise PgmFormatError(
                f"bad {what} token {tok!r}", self.pos - len(tok)
            ) from None


def _parse_pgm(data: bytes):
    scanner = _PgmScanner(data)
    magic = scanner.token()
    if magic != b"P5":
        raise PgmFormatError(f"bad magic {magic!r}, expected b'P5'", 0)
    width = scanner.integer("width")
    height = scanner.integer("height")
    if width < 1 or height < 1:
        raise PgmFormatError(f"bad dimensions {width}x{height}", scanner.pos)
    maxval = scanner.integer("maxval")
    if maxval != 255:
        raise PgmFormatError(f"unsupported maxval {maxval}, expected 255", scanner.pos)
    if scanner.pos >= len(data):
        raise PgmFormatError("missing pixel data", scanner.pos)
    # Exactly one whitespace byte separates the header from the raster.
    if data[scanner.pos] not in _WHITESPACE:
        raise PgmFormatError("missing separator before pixel data", scanner.pos)
    start = scanner.pos + 1
    n_pixels = width * height
    if len(data) - start < n_pixels:
        raise PgmFormatError(
            f"truncated pixel data, expected {n_pixels} bytes", len(data)
        )
    pixels = np.frombuffer(data[start : start + n_pixels], dtype=np.uint8)
    return width, height, pixels


def load_pgm_with_size(path):
    """Load a binary PGM; returns (1 x pixels matrix in [-1, 1], (width, height))."""
    with open(path, "rb") as fh:
        data = fh.read()
    width, height, pixels = _parse_pgm(data)
    row = pixels.astype(np.float64) / PGM_SCALE - 1.0
    return row.reshape(1, width * height), (width, height)


def load_pgm(path) -> np.ndarray:
    """Load a binary PGM image as a single matrix row.

    Pixels are flattened row-major and rescaled to [-1, 1] through
    v / 127.5 - 1.
    """
    matrix, _ = load_pgm_with_size(path)
    return matrix


def save_pgm(matrix, path) -> None:
    """Write a matrix in [-1, 1] as a binary PGM image.

    The matrix shape gives the image dimensions (rows become the height).
    Values are mapped through (v + 1) * 127.5, clipped to [0, 255], and
    rounded half away from zero.
    """
    m = as_matrix(matrix, "matrix")
    scaled = np.clip((m + 1.0) * PGM_SCALE, 0.0, 255.0)
    pixels = np.floor(scaled + 0.5).astype(np.uint8)
    height, width = m.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (width, height))
        fh.write(pixels.tobytes(order="C"))


def save_matrix_csv(matrix, path) -> None:
    """Write a matrix as CSV: a "rows,cols" line, then one line per row.

    Entries carry 17 significant digits, enough to round-trip doubles.
    """
    m = as_matrix(matrix, "matrix")
    lines = [f"{m.shape[0]},{m.shape[1]}"]
    for row in m:
        lines.append(",".join(f"{float(v):.17g}" for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    """Read a matrix written by save_matrix_csv."""
    with open(path, "r") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ContractViolationError(f"{path}: empty matrix file")
    head = lines[0].split(",")
    if len(head) != 2:
        raise ContractViolationError(f"{path}: first line must be 'rows,cols'")
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError:
        raise ContractViolationError(f"{path}: bad header {lines[0]!r}") from None
    if len(lines) - 1 != rows:
        raise ContractViolationError(
            f"{path}: expected {rows} data lines, found {len(lines) - 1}"
        )
    data = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != cols:
            raise ContractViolationError(
                f"{path}: expected {cols} entries per line, found {len(parts)}"
            )
        data.append([float(p) for p in parts])
    return as_matrix(np.array(data, dtype=np.float64), path)

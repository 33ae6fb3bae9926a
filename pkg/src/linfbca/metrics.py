"""Separation quality metrics.

Builds the global (separator times mixing) matrix, scores it with an
intersymbol-interference index, resolves the inherent permutation, sign
and scale ambiguity, and computes symbol error rate and peak
signal-to-noise ratio against the true sources.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .linalg import as_matrix
from .sources import Constellation, SourceEnsemble

__all__ = [
    "ISI_FLOOR_DB",
    "MatchResult",
    "MetricRecord",
    "PSNR_CEILING_DB",
    "global_matrix",
    "isi",
    "match_sources",
    "psnr",
    "symbol_error_rate",
]

ISI_FLOOR_DB = -300.0
PSNR_CEILING_DB = 120.0


def global_matrix(w, b, h) -> np.ndarray:
    """G = W B H; pass b=None on the unwhitened (orthogonal mixing) path."""
    w = as_matrix(w, "w")
    h = as_matrix(h, "h")
    if b is None:
        if w.shape[1] != h.shape[0]:
            raise ContractViolationError(
                f"non-conformable factors {w.shape} @ {h.shape}"
            )
        g = w @ h
    else:
        b = as_matrix(b, "b")
        if w.shape[1] != b.shape[0] or b.shape[1] != h.shape[0]:
            raise ContractViolationError(
                f"non-conformable factors {w.shape} @ {b.shape} @ {h.shape}"
            )
        g = w @ b @ h
    if g.shape[0] != g.shape[1]:
        raise ContractViolationError(f"global matrix must be square, got {g.shape}")
    return g


def isi(g) -> float:
    """Intersymbol interference of a global matrix, in dB (lower is better).

    Each row contributes 10*log10((sum of squared entries minus the
    dominant one) / dominant squared entry); the result is the average
    over rows. A row with no off-dominant energy would be -inf and is
    clamped to -300 dB so aggregation stays well defined.
    """
    g = as_matrix(g, "g")
    if g.shape[0] != g.shape[1]:
        raise ContractViolationError(f"global matrix must be square, got {g.shape}")
    e = g * g
    dominant = e.max(axis=1)
    if np.any(dominant <= 0):
        raise ContractViolationError("global matrix has an all-zero row")
    rest = e.sum(axis=1) - dominant
    ratio = rest / dominant
    per_row = np.where(ratio > 1e-30, 10.0 * np.log10(np.maximum(ratio, 1e-300)), ISI_FLOOR_DB)
    return float(np.mean(per_row))


@dataclass(frozen=True, eq=False)
class MatchResult:
    """Ambiguity resolution for a global matrix.

    ``permutation[i]`` is the estimate row matched to source i, and
    ``gains[i]`` is the signed entry of G realizing the match. ``residual``
    is G with the matched entries zeroed.
    """

    permutation: np.ndarray
    gains: np.ndarray
    residual: np.ndarray


def match_sources(g) -> MatchResult:
    """Greedy dominant-entry assignment of estimate rows to sources.

    Repeatedly takes the largest-magnitude unassigned entry of G and
    pairs its row (estimate) with its column (source). Ties break toward
    the smallest row index, then the smallest column index. The result is
    always a bijection.
    """
    g = as_matrix(g, "g")
    n = g.shape[0]
    if g.shape[0] != g.shape[1]:
        raise ContractViolationError(f"global matrix must be square, got {g.shape}")
    work = np.abs(g).copy()
    permutation = np.full(n, -1, dtype=int)
    gains = np.zeros(n)
    for _ in range(n):
        flat = int(np.argmax(work))
        r, c = divmod(flat, n)
        permutation[c] = r
        gains[c] = g[r, c]
        work[r, :] = -1.0
        work[:, c] = -1.0
    residual = g.copy()
    residual[permutation, np.arange(n)] = 0.0
    return MatchResult(permutation=permutation, gains=gains, residual=residual)


def symbol_error_rate(
    y, sources: SourceEnsemble, match: MatchResult, constellation: Constellation
) -> float:
    """Percent of payload symbols decided incorrectly.

    Each matched estimate row is divided by its gain (undoing scale and
    sign), every sample is decided to the nearest constellation symbol,
    and mismatches against the true symbols are counted. Columns holding
    injected vertices are excluded, so the rate reflects payload symbols
    only.
    """
    y = as_matrix(y, "y")
    n = sources.n_sources
    if y.shape[0] != n or y.shape[1] != sources.n_samples:
        raise ContractViolationError(
            f"estimates {y.shape} do not match sources {sources.s.shape}"
        )
    payload = sources.payload_mask()
    n_payload = int(np.count_nonzero(payload))
    if n_payload == 0:
        raise ContractViolationError("no payload columns to score")
    symbols = np.asarray(constellation.symbols)
    wrong = 0
    for i in range(n):
        gain = float(match.gains[i])
        if gain == 0.0:
            raise ContractViolationError(f"zero gain for source {i}")
        z = y[match.permutation[i]] / gain
        decided = symbols[np.argmin(np.abs(z[:, None] - symbols[None, :]), axis=1)]
        wrong += int(np.count_nonzero((decided != sources.s[i]) & payload))
    return 100.0 * wrong / (n * n_payload)


def psnr(s_true_row, y) -> float:
    """Peak signal-to-noise ratio of the best-matching estimate row, in dB.

    For every estimate row an affine map a*y + c is fitted by least
    squares against the true row (estimates carry arbitrary gain and
    offset), then 10*log10(max(s^2) / MSE) is computed; the maximum over
    rows is returned. An MSE below 1e-12 times the squared peak clamps
    the value to +120 dB.
    """
    s = np.asarray(s_true_row, dtype=np.float64).ravel()
    if s.size < 2 or not np.isfinite(s).all():
        raise ContractViolationError("true source row must be finite with >= 2 samples")
    if s.max() == s.min():
        raise ContractViolationError("true source row is constant")
    y = as_matrix(y, "y")
    if y.shape[1] != s.size:
        raise ContractViolationError(
            f"estimates have {y.shape[1]} samples, expected {s.size}"
        )
    peak = float(np.max(s * s))
    s_mean = float(s.mean())
    best = float("-inf")
    for row in y:
        var = float(row.var())
        if var == 0.0:
            mse = float(np.mean((s - s_mean) ** 2))
        else:
            a = float(np.mean(row * s) - row.mean() * s_mean) / var
            c = s_mean - a * float(row.mean())
            resid = a * row + c - s
            mse = float(np.mean(resid * resid))
        if mse < 1e-12 * peak:
            value = PSNR_CEILING_DB
        else:
            value = 10.0 * np.log10(peak / mse)
        best = max(best, value)
    return float(best)


@dataclass(frozen=True)
class MetricRecord:
    """One scored (method, trial, noise level) cell of a campaign.

    Exactly one of ``ser_percent``, ``psnr_db`` (one value per source) and
    ``isi_db`` is present, matching the scenario being run.
    """

    method: str
    n_sources: int
    snr_db: float | None
    trial: int
    rho: float | None = None
    ser_percent: float | None = None
    psnr_db: tuple | None = None
    isi_db: float | None = None

    def __post_init__(self):
        present = [
            v for v in (self.ser_percent, self.psnr_db, self.isi_db) if v is not None
        ]
        if len(present) != 1:
            raise ContractViolationError(
                "exactly one metric must be present per record"
            )
        if self.ser_percent is not None and not (0.0 <= self.ser_percent <= 100.0):
            raise ContractViolationError(
                f"ser_percent out of range: {self.ser_percent!r}"
            )
        if self.psnr_db is not None:
            object.__setattr__(self, "psnr_db", tuple(float(v) for v in self.psnr_db))

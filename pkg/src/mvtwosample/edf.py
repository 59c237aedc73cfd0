"""Two-sample statistics built on multivariate empirical distribution functions.

The EDF at a point z counts observations that are componentwise <= z (the
lower-orthant EDF), so at d=1 everything reduces to the classical tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import PooledSample

# Hhat values this close to 0 or 1 drop out of the Anderson-Darling sum
AD_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class EdfEvaluation:
    """Fhat, Ghat and Hhat evaluated at each pooled point."""

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray

    @property
    def diff(self) -> np.ndarray:
        return self.F - self.G


def dominance(p: PooledSample) -> np.ndarray:
    """``D[i, j] = 1`` iff pooled point j is componentwise <= pooled point i."""
    pts = np.ascontiguousarray(p.points, dtype=np.float64)
    return _backend.kernels().dominance_matrix(pts)


def edf_evaluate(p: PooledSample, D: np.ndarray | None = None) -> EdfEvaluation:
    if D is None:
        D = dominance(p)
    lab = p.labels
    cx = D[:, lab].sum(axis=1)
    cy = D[:, ~lab].sum(axis=1)
    return EdfEvaluation(cx / p.n, cy / p.m, (cx + cy) / p.N)


def ks_statistic(e: EdfEvaluation) -> float:
    return float(np.max(np.abs(e.diff)))


def kuiper_statistic(e: EdfEvaluation) -> float:
    dif = e.diff
    return float(dif.max() - dif.min())


def cvm_statistic(e: EdfEvaluation) -> float:
    return float(np.sum(e.diff**2))


def ad_statistic(e: EdfEvaluation) -> float:
    keep = (e.H > AD_EDGE_TOL) & (e.H < 1.0 - AD_EDGE_TOL)
    H = e.H[keep]
    return float(np.sum(e.diff[keep] ** 2 / (H * (1.0 - H))))


def batch_statistics(x_counts: np.ndarray, totals: np.ndarray, n: int, m: int) -> dict[str, np.ndarray]:
    """All four EDF statistics for a batch of labelings.

    ``x_counts[r, i]`` is the number of x points dominated by point i under
    labeling r; ``totals[i]`` is the label-free pooled count.
    """
    N = n + m
    F = x_counts / n
    G = (totals[None, :] - x_counts) / m
    dif = F - G
    H = totals / N
    keep = (H > AD_EDGE_TOL) & (H < 1.0 - AD_EDGE_TOL)
    w = np.zeros_like(H)
    w[keep] = 1.0 / (H[keep] * (1.0 - H[keep]))
    sq = dif**2
    return {
        "KS": np.abs(dif).max(axis=1),
        "K": dif.max(axis=1) - dif.min(axis=1),
        "CvM": sq.sum(axis=1),
        "AD": sq @ w,
    }

"""Exact grid solution of the relaxed principal problem.

Choose a distribution of the cost weight ``X = exp(-lambda1 T)`` on a grid in
``(0, 1]`` to minimize ``E X`` subject to ``E loss(X) >= threshold``.  With one
moment constraint an optimum has at most two support points, so scanning all
single points and all pairs is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..errors import InfeasibleConstraint, InvalidParams


@dataclass
class LPResult:
    support: tuple
    probs: tuple
    mean: float
    grid: np.ndarray
    loss: np.ndarray

    @property
    def cost(self) -> float:
        return self.mean / (1 - self.mean)

    @property
    def cell(self) -> float:
        return float(self.grid[1] - self.grid[0]) if len(self.grid) > 1 else 0.0

    def effective_support(self, cells: float = 1.0) -> tuple:
        """Support with points closer than ``cells`` grid cells merged into
        their probability-weighted mean."""
        pts = sorted(zip(self.support, self.probs))
        groups = [[pts[0]]]
        for x, p in pts[1:]:
            if x - groups[-1][-1][0] <= cells * self.cell * (1 + 1e-9):
                groups[-1].append((x, p))
            else:
                groups.append([(x, p)])
        out = []
        for g in groups:
            mass = sum(p for _, p in g)
            out.append(sum(x * p for x, p in g) / mass if mass > 0 else g[0][0])
        return tuple(out)

    def to_dict(self) -> dict:
        return {"support": list(self.support), "probs": list(self.probs), "mean": self.mean,
                "cost": self.cost, "grid_n": len(self.grid)}


def relaxed_lp(loss: Union[Callable[[float], float], Sequence[float]], threshold: float,
               grid_n: int = 10_000, grid: Optional[np.ndarray] = None,
               chunk: int = 512) -> LPResult:
    """Minimize ``E X`` over distributions on the grid with ``E loss(X) >= threshold``.

    ``loss`` is either a callable on ``(0, 1]`` or its values on ``grid``.
    Ties are broken by the smaller mean, then the leftmost support point.
    """
    if grid is None:
        if grid_n < 2:
            raise InvalidParams("grid_n must be >= 2")
        grid = np.arange(1, grid_n + 1) / grid_n
    grid = np.asarray(grid, dtype=float)
    if callable(loss):
        L = np.array([loss(float(x)) for x in grid])
    else:
        L = np.asarray(loss, dtype=float)
        if L.shape != grid.shape:
            raise InvalidParams("loss values must match the grid")
    if not np.all(np.isfinite(L)):
        raise InvalidParams("loss must be finite on the grid")
    feasible = L >= threshold
    if not feasible.any():
        raise InfeasibleConstraint(f"max loss {L.max()} is below the threshold {threshold}")

    # single points
    k = int(np.flatnonzero(feasible)[np.argmin(grid[feasible])])
    best = (grid[k], grid[k], (k,), (1.0,))

    lo_idx = np.flatnonzero(~feasible)
    hi_idx = np.flatnonzero(feasible)
    x_hi, L_hi = grid[hi_idx], L[hi_idx]
    for start in range(0, len(lo_idx), chunk):
        rows = lo_idx[start:start + chunk]
        x_lo, L_lo = grid[rows][:, None], L[rows][:, None]
        w = (threshold - L_lo) / (L_hi[None, :] - L_lo)  # mass on the high-loss point
        mean = x_lo + w * (x_hi[None, :] - x_lo)
        left = np.minimum(x_lo, x_hi[None, :])
        flat = np.lexsort((left.ravel(), mean.ravel()))[0]
        r, c = divmod(int(flat), len(hi_idx))
        m, lft = float(mean[r, c]), float(left[r, c])
        if (m, lft) < (best[0], best[1]):
            i, j = int(rows[r]), int(hi_idx[c])
            wj = float(w[r, c])
            best = (m, lft, (i, j), (1.0 - wj, wj))

    idx, probs = best[2], best[3]
    order = np.argsort([grid[i] for i in idx])
    support = tuple(float(grid[idx[o]]) for o in order)
    probs = tuple(float(probs[o]) for o in order)
    return LPResult(support=support, probs=probs, mean=float(best[0]), grid=grid, loss=L)

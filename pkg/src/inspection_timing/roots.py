"""Bracketing root finders and exact root isolation for sums of exponentials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

from .errors import NonConvergence

XTOL = 1e-12
MAX_ITER = 200


def bisect(pred: Callable[[float], bool], lo: float, hi: float,
           xtol: float = XTOL, max_iter: int = MAX_ITER) -> Tuple[float, float]:
    """Locate the switch of a monotone predicate with ``pred(lo)`` false and
    ``pred(hi)`` true.  Returns the final ``(lo, hi)`` bracket."""
    for _ in range(max_iter):
        if hi - lo <= xtol * max(1.0, abs(lo)):
            return lo, hi
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo, hi
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def bisect_root(f: Callable[[float], float], lo: float, hi: float,
                xtol: float = XTOL, max_iter: int = MAX_ITER) -> float:
    """Root of a continuous ``f`` with a sign change on ``[lo, hi]``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NonConvergence(f"no sign change on [{lo}, {hi}]")
    rising = fhi > 0
    a, b = bisect(lambda x: (f(x) > 0) == rising, lo, hi, xtol, max_iter)
    return 0.5 * (a + b)


def expand_upper(pred: Callable[[float], bool], start: float, factor: float = 2.0,
                 limit: float = 2.0 ** 40) -> float:
    """Grow ``start`` geometrically until ``pred`` holds."""
    x = start
    while not pred(x):
        x *= factor
        if x > limit * start:
            raise NonConvergence(f"no bracket found up to {x:g}")
    return x


@dataclass(frozen=True)
class ExpSum:
    """``f(t) = sum_i coefs[i] * exp(rates[i] * t)``."""

    coefs: Tuple[float, ...]
    rates: Tuple[float, ...]

    @classmethod
    def of(cls, terms: Sequence[Tuple[float, float]]) -> "ExpSum":
        merged: dict = {}
        for c, k in terms:
            if c == 0 or (isinstance(c, float) and math.isnan(c)):
                continue
            merged[k] = merged.get(k, 0.0) + c
        items = sorted((k, c) for k, c in merged.items() if c != 0)
        return cls(tuple(c for _, c in items), tuple(k for k, _ in items))

    def __call__(self, t: float) -> float:
        return math.fsum(c * math.exp(k * t) for c, k in zip(self.coefs, self.rates))

    def derivative(self) -> "ExpSum":
        return ExpSum.of([(c * k, k) for c, k in zip(self.coefs, self.rates)])

    def roots(self, lo: float, hi: float) -> List[float]:
        """All sign changes of ``f`` on ``[lo, hi]``.

        ``f * exp(-k0 t)`` has the sign of ``f`` and its critical points are
        the roots of ``sum_{i>0} c_i (k_i - k0) exp(k_i t)``, a shorter sum on
        the original rates; recursing on it splits ``[lo, hi]`` into pieces
        where ``f`` has at most one sign change.
        """
        n = len(self.coefs)
        if n <= 1:
            return []
        k0 = self.rates[0]
        crit_sum = ExpSum.of([(c * (k - k0), k) for c, k in zip(self.coefs[1:], self.rates[1:])])
        crit = crit_sum.roots(lo, hi)
        knots = [lo] + [c for c in crit if lo < c < hi] + [hi]
        out: List[float] = []
        for a, b in zip(knots, knots[1:]):
            fa, fb = self(a), self(b)
            if fa == 0:
                if not out or abs(out[-1] - a) > XTOL:
                    out.append(a)
                continue
            if (fa > 0) != (fb > 0) and fb != 0:
                out.append(bisect_root(self, a, b))
        if self(hi) == 0 and (not out or out[-1] != hi):
            out.append(hi)
        return out

    def local_maxima(self, lo: float, hi: float) -> List[float]:
        """Interior critical points where the derivative turns from + to -."""
        d = self.derivative()
        out = []
        for c in d.roots(lo, hi):
            if lo < c < hi:
                eps = 1e-7 * max(1.0, c)
                left = d(max(lo, c - eps))
                right = d(min(hi, c + eps))
                if left >= 0 >= right:
                    out.append(c)
        return out

    def max_on(self, lo: float, hi: float) -> Tuple[float, float]:
        """``(argmax, max)`` over ``[lo, hi]`` from endpoints and critical points."""
        cands = [lo, hi] + [c for c in self.derivative().roots(lo, hi) if lo < c < hi]
        best = max(cands, key=lambda t: (self(t), t))
        return best, self(best)

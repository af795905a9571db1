"""Action strategies between inspections and renewal inspection policies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import InvalidParams

INF = math.inf

# (start, end, action) with end possibly inf
Segment = Tuple[float, float, int]


def _check_time(name: str, value: float, allow_inf: bool = True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value):
        raise InvalidParams(f"{name} must be a number, got {value!r}")
    if value < 0 or (not allow_inf and math.isinf(value)):
        raise InvalidParams(f"{name} must be a finite time >= 0, got {value!r}")
    return float(value)


# --- action strategies ------------------------------------------------------

class ActionStrategy:
    """A deterministic work (1) / shirk (0) plan on ``[0, inf)``.

    Subclasses describe the deviation families used in the analysis; all of
    them reduce to a :class:`Step` description.
    """

    def to_step(self) -> "Step":
        raise NotImplementedError

    def segments(self) -> List[Segment]:
        step = self.to_step()
        edges = (0.0,) + step.breakpoints + (INF,)
        return [(edges[i], edges[i + 1], step.actions[i]) for i in range(len(step.actions))]

    def action_at(self, t: float) -> int:
        for start, end, a in self.segments():
            if start <= t < end:
                return a
        return self.segments()[-1][2]

    def shirk_duration(self, t: float) -> float:
        return sum(max(0.0, min(end, t) - start) for start, end, a in self.segments() if a == 0)

    def shifted(self, s: float) -> "Step":
        """The plan followed from time ``s`` on, re-based to start at 0."""
        bps, acts = [], []
        for start, end, a in self.segments():
            if end <= s:
                continue
            if acts and start - s > 0:
                bps.append(start - s)
            acts.append(a)
        return Step(tuple(bps), tuple(acts))


@dataclass(frozen=True)
class AlwaysWork(ActionStrategy):
    def to_step(self) -> "Step":
        return Step((), (1,))


@dataclass(frozen=True)
class ShirkThenWork(ActionStrategy):
    t_switch: float

    def __post_init__(self):
        object.__setattr__(self, "t_switch", _check_time("t_switch", self.t_switch))

    def to_step(self) -> "Step":
        if self.t_switch == 0:
            return Step((), (1,))
        if math.isinf(self.t_switch):
            return Step((), (0,))
        return Step((self.t_switch,), (0, 1))


@dataclass(frozen=True)
class WorkThenShirk(ActionStrategy):
    t_switch: float

    def __post_init__(self):
        object.__setattr__(self, "t_switch", _check_time("t_switch", self.t_switch))

    def to_step(self) -> "Step":
        if self.t_switch == 0:
            return Step((), (0,))
        if math.isinf(self.t_switch):
            return Step((), (1,))
        return Step((self.t_switch,), (1, 0))


@dataclass(frozen=True)
class ShirkWorkShirk(ActionStrategy):
    t_switch: float
    resume_shirk_at: float

    def __post_init__(self):
        t = _check_time("t_switch", self.t_switch)
        s = _check_time("resume_shirk_at", self.resume_shirk_at)
        if t > s:
            raise InvalidParams("ShirkWorkShirk requires t_switch <= resume_shirk_at")
        object.__setattr__(self, "t_switch", t)
        object.__setattr__(self, "resume_shirk_at", s)

    def to_step(self) -> "Step":
        t, s = self.t_switch, self.resume_shirk_at
        if t == s:
            return Step((), (0,))
        if math.isinf(s):
            return ShirkThenWork(t).to_step()
        if t == 0:
            return Step((s,), (1, 0))
        return Step((t, s), (0, 1, 0))


@dataclass(frozen=True)
class Step(ActionStrategy):
    breakpoints: Tuple[float, ...]
    actions: Tuple[int, ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        acts = tuple(int(a) for a in self.actions)
        if len(acts) != len(bps) + 1:
            raise InvalidParams("Step needs exactly one more action than breakpoints")
        if any(a not in (0, 1) for a in acts):
            raise InvalidParams("actions must be 0 or 1")
        if any(not (b > 0 and math.isfinite(b)) for b in bps):
            raise InvalidParams("breakpoints must be finite and > 0")
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise InvalidParams("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "actions", acts)

    def to_step(self) -> "Step":
        return self

    def simplified(self) -> "Step":
        """Merge neighbouring segments with equal actions."""
        bps, acts = [], [self.actions[0]]
        for b, a in zip(self.breakpoints, self.actions[1:]):
            if a != acts[-1]:
                bps.append(b)
                acts.append(a)
        return Step(tuple(bps), tuple(acts))


ALWAYS_SHIRK = ShirkThenWork(INF)


def strategy_to_dict(s: ActionStrategy) -> dict:
    if isinstance(s, AlwaysWork):
        return {"always_work": {}}
    if isinstance(s, ShirkThenWork):
        return {"shirk_then_work": {"t_switch": s.t_switch}}
    if isinstance(s, WorkThenShirk):
        return {"work_then_shirk": {"t_switch": s.t_switch}}
    if isinstance(s, ShirkWorkShirk):
        return {"shirk_work_shirk": {"t_switch": s.t_switch, "resume_shirk_at": s.resume_shirk_at}}
    step = s.to_step()
    return {"step": {"breakpoints": list(step.breakpoints), "actions": list(step.actions)}}


def strategy_from_dict(obj) -> ActionStrategy:
    if isinstance(obj, str):
        obj = {obj: {}}
    if not isinstance(obj, dict) or len(obj) != 1:
        raise InvalidParams("strategy must be an object with exactly one variant key")
    (kind, body), = obj.items()
    body = body or {}
    try:
        if kind == "always_work":
            return AlwaysWork()
        if kind == "shirk_then_work":
            return ShirkThenWork(body["t_switch"])
        if kind == "work_then_shirk":
            return WorkThenShirk(body["t_switch"])
        if kind == "shirk_work_shirk":
            return ShirkWorkShirk(body["t_switch"], body["resume_shirk_at"])
        if kind == "step":
            return Step(tuple(body["breakpoints"]), tuple(body["actions"]))
    except KeyError as exc:
        raise InvalidParams(f"strategy {kind!r} is missing field {exc}") from None
    raise InvalidParams(f"unknown strategy kind {kind!r}")


# --- inspection policies ------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """Interval ``[start, end)`` with no atoms, on which the survival function
    is ``s_start * exp(-hazard * (t - start))``."""
    start: float
    end: float
    s_start: float
    hazard: float


class InspectionPolicy:
    """Distribution of the i.i.d. gap between consecutive inspections."""

    kind: str = ""

    def structure(self) -> Tuple[List[Piece], List[Tuple[float, float]]]:
        """Return (continuous pieces, atoms) describing the gap law.

        Atoms are ``(time, unconditional probability)``.  Pieces tile
        ``[0, end)`` where ``end`` is the last atom or ``inf``.
        """
        raise NotImplementedError

    # generic transforms built on structure()

    def laplace(self, c: float) -> float:
        """E exp(-c T)."""
        return self.laplace_tail(c, 0.0)

    def laplace_tail(self, c: float, t: float) -> float:
        """E[exp(-c (T - t)); T > t]."""
        pieces, atoms = self.structure()
        total = 0.0
        for time, mass in atoms:
            if time > t:
                total += mass * math.exp(-c * (time - t))
        for p in pieces:
            if p.hazard == 0 or p.end <= t:
                continue
            lo = max(p.start, t)
            s_lo = p.s_start * math.exp(-p.hazard * (lo - p.start))
            k = p.hazard + c
            # density hazard*S(s) integrated against exp(-c (s - t))
            span = p.end - lo
            frac = 1.0 if math.isinf(span) else -math.expm1(-k * span)
            total += p.hazard * s_lo * math.exp(-c * (lo - t)) * frac / k
        return total

    def survival(self, t: float) -> float:
        """P(T > t)."""
        pieces, atoms = self.structure()
        for p in pieces:
            if p.start <= t < p.end:
                s = p.s_start * math.exp(-p.hazard * (t - p.start))
                # an atom at the left edge of the piece is already removed from s_start
                return s
        return 0.0

    def cdf(self, t: float) -> float:
        return 1.0 - self.survival(t)

    def mean_gap(self) -> float:
        pieces, atoms = self.structure()
        m = sum(time * mass for time, mass in atoms)
        for p in pieces:
            if p.hazard > 0:
                # E[T; T in piece] for exponential piece, possibly truncated
                L = p.end - p.start
                g = p.hazard
                if math.isinf(L):
                    m += p.s_start * (p.start + 1.0 / g)
                else:
                    e = math.exp(-g * L)
                    m += p.s_start * (p.start * (1 - e) + (1 - e) / g - L * e)
        return m

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Periodic(InspectionPolicy):
    tau: float
    kind = "periodic"

    def __post_init__(self):
        t = _check_time("tau", self.tau, allow_inf=False)
        if t <= 0:
            raise InvalidParams("tau must be > 0")
        object.__setattr__(self, "tau", t)

    def structure(self):
        return [Piece(0.0, self.tau, 1.0, 0.0)], [(self.tau, 1.0)]

    def laplace(self, c: float) -> float:
        return math.exp(-c * self.tau)

    def to_dict(self) -> dict:
        return {"periodic": {"tau": self.tau}}


@dataclass(frozen=True)
class Exponential(InspectionPolicy):
    gamma: float
    kind = "exponential"

    def __post_init__(self):
        g = self.gamma
        if isinstance(g, bool) or not isinstance(g, (int, float)) or not math.isfinite(g) or g <= 0:
            raise InvalidParams(f"gamma must be a finite hazard > 0, got {g!r}")
        object.__setattr__(self, "gamma", float(g))

    def structure(self):
        return [Piece(0.0, INF, 1.0, self.gamma)], []

    def laplace(self, c: float) -> float:
        return self.gamma / (self.gamma + c)

    def to_dict(self) -> dict:
        return {"exponential": {"gamma": self.gamma}}


@dataclass(frozen=True)
class DelayedExponential(InspectionPolicy):
    """No inspection before ``tau_hat``; mass ``pi`` at ``tau_hat``; hazard
    ``gamma`` afterwards."""

    tau_hat: float
    pi: float
    gamma: float
    kind = "delayed_exponential"

    def __post_init__(self):
        object.__setattr__(self, "tau_hat", _check_time("tau_hat", self.tau_hat, allow_inf=False))
        p = self.pi
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not (0.0 <= p <= 1.0):
            raise InvalidParams(f"pi must be a probability, got {p!r}")
        object.__setattr__(self, "pi", float(p))
        Exponential(self.gamma)  # validates gamma
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.tau_hat == 0 and self.pi > 0:
            raise InvalidParams("an atom at a zero gap is not allowed")

    def structure(self):
        pieces = []
        atoms = []
        if self.tau_hat > 0:
            pieces.append(Piece(0.0, self.tau_hat, 1.0, 0.0))
        if self.pi > 0:
            atoms.append((self.tau_hat, self.pi))
        if self.pi < 1:
            pieces.append(Piece(self.tau_hat, INF, 1.0 - self.pi, self.gamma))
        return pieces, atoms

    def laplace(self, c: float) -> float:
        return math.exp(-c * self.tau_hat) * (self.pi + (1 - self.pi) * self.gamma / (self.gamma + c))

    def to_dict(self) -> dict:
        return {"delayed_exponential": {"tau_hat": self.tau_hat, "pi": self.pi, "gamma": self.gamma}}


@dataclass(frozen=True)
class DiscreteGap(InspectionPolicy):
    times: Tuple[float, ...]
    probs: Tuple[float, ...]
    kind = "discrete_gap"

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        probs = tuple(float(p) for p in self.probs)
        if not times or len(times) != len(probs):
            raise InvalidParams("times and probs must be non-empty and of equal length")
        if any(not (t > 0 and math.isfinite(t)) for t in times):
            raise InvalidParams("gap times must be finite and > 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidParams("gap times must be strictly increasing")
        if any(p < 0 for p in probs) or abs(math.fsum(probs) - 1.0) > 1e-12:
            raise InvalidParams("probs must be nonnegative and sum to 1")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "probs", probs)

    def structure(self):
        pieces, atoms = [], []
        start, surv = 0.0, 1.0
        for t, p in zip(self.times, self.probs):
            pieces.append(Piece(start, t, surv, 0.0))
            atoms.append((t, p))
            start, surv = t, max(0.0, surv - p)
        return pieces, atoms

    def laplace(self, c: float) -> float:
        return math.fsum(p * math.exp(-c * t) for t, p in zip(self.times, self.probs))

    def to_dict(self) -> dict:
        return {"discrete_gap": {"times": list(self.times), "probs": list(self.probs)}}


def policy_from_dict(obj) -> InspectionPolicy:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise InvalidParams("policy must be an object with exactly one variant key")
    (kind, body), = obj.items()
    if not isinstance(body, dict):
        raise InvalidParams("policy body must be an object")
    try:
        if kind == "periodic":
            return Periodic(body["tau"])
        if kind == "exponential":
            return Exponential(body["gamma"])
        if kind == "delayed_exponential":
            return DelayedExponential(body["tau_hat"], body["pi"], body["gamma"])
        if kind == "discrete_gap":
            return DiscreteGap(tuple(body["times"]), tuple(body["probs"]))
    except KeyError as exc:
        raise InvalidParams(f"policy {kind!r} is missing field {exc}") from None
    raise InvalidParams(f"unknown policy kind {kind!r}")


def discretize_exponential(gamma: float, dt: float, horizon: float) -> DiscreteGap:
    """Midpoint discretization of Exp(gamma) on a grid; the tail mass goes to
    the last grid point."""
    n = int(math.ceil(horizon / dt))
    edges = np.arange(n + 1) * dt
    cdf = -np.expm1(-gamma * edges)
    probs = np.diff(cdf)
    probs[-1] += 1.0 - cdf[-1]
    times = edges[:-1] + dt / 2
    return DiscreteGap(tuple(times.tolist()), tuple((probs / probs.sum()).tolist()))


def as_sequence(x) -> Sequence[float]:
    return tuple(float(v) for v in x)

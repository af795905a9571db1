"""Model primitives, derived rates, assumption checks and regime labels."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Union

from .errors import InvalidParams

# relative tolerance used to call two rates equal
DEGENERACY_TOL = 1e-12


class Detectability(enum.Enum):
    PERFECT = "perfect"

    def __repr__(self) -> str:
        return "PERFECT"


PERFECT = Detectability.PERFECT

Delta = Union[float, Detectability]


class Regime(str, enum.Enum):
    INNOVATION = "Innovation"
    MAINTENANCE = "Maintenance"
    NEUTRAL = "Neutral"


def is_perfect(delta: Delta) -> bool:
    return delta is PERFECT


def nearly_equal(a: float, b: float, tol: float = DEGENERACY_TOL) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)


@dataclass(frozen=True)
class ModelParams:
    """The primitives of the inspection problem.

    ``delta`` is either a positive detectability rate or :data:`PERFECT`.
    """

    lambda_g: float
    lambda_b: float
    r: float
    delta: Delta
    u0: float
    u1: float
    rho: float = 0.0

    def __post_init__(self):
        for name in ("lambda_g", "lambda_b", "r", "u0", "u1", "rho"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidParams(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidParams(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.r <= 0:
            raise InvalidParams(f"r must be > 0, got {self.r}")
        if self.u0 <= 0 or self.u1 <= 0:
            raise InvalidParams(f"flow utilities must be > 0, got u0={self.u0}, u1={self.u1}")
        for name in ("lambda_g", "lambda_b", "rho"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")
        if self.delta is not PERFECT:
            d = self.delta
            if isinstance(d, bool) or not isinstance(d, (int, float)) or not math.isfinite(d) or d <= 0:
                raise InvalidParams(f"delta must be > 0 or PERFECT, got {d!r}")
            object.__setattr__(self, "delta", float(d))

    @property
    def perfect(self) -> bool:
        return self.delta is PERFECT

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @classmethod
    def from_derived(cls, lambda0: float, lambda1: float, U0: float, U1: float,
                     delta: Delta, r: float = 0.5, rho: float = 0.0) -> "ModelParams":
        """Build params from the reduced rates ``lambda0, lambda1`` and values ``U0, U1``."""
        return cls(lambda_g=lambda1 - r, lambda_b=lambda0 - r, r=r, delta=delta,
                   u0=U0 * lambda0, u1=U1 * lambda1, rho=rho)

    # JSON object form: unknown keys are rejected
    _KEYS = ("lambda_g", "lambda_b", "r", "delta", "rho", "u0", "u1")

    def to_dict(self) -> dict:
        return {
            "lambda_g": self.lambda_g,
            "lambda_b": self.lambda_b,
            "r": self.r,
            "delta": "perfect" if self.perfect else self.delta,
            "rho": self.rho,
            "u0": self.u0,
            "u1": self.u1,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelParams":
        if not isinstance(obj, dict):
            raise InvalidParams("parameter object must be a JSON object")
        unknown = set(obj) - set(cls._KEYS)
        if unknown:
            raise InvalidParams(f"unknown parameter keys: {sorted(unknown)}")
        missing = {"lambda_g", "lambda_b", "r", "delta", "u0", "u1"} - set(obj)
        if missing:
            raise InvalidParams(f"missing parameter keys: {sorted(missing)}")
        delta = obj["delta"]
        if isinstance(delta, str):
            if delta.lower() != "perfect":
                raise InvalidParams(f"delta must be a number or 'perfect', got {delta!r}")
            delta = PERFECT
        return cls(lambda_g=obj["lambda_g"], lambda_b=obj["lambda_b"], r=obj["r"],
                   delta=delta, u0=obj["u0"], u1=obj["u1"], rho=obj.get("rho", 0.0))


@dataclass(frozen=True)
class DerivedParams:
    lambda0: float
    lambda1: float
    U0: float
    U1: float
    mu: float
    lambda_ratio: float
    u0: float = field(repr=False, default=0.0)
    u1: float = field(repr=False, default=0.0)

    @property
    def neutral(self) -> bool:
        return nearly_equal(self.lambda0, self.lambda1)


def derive(params: ModelParams) -> DerivedParams:
    if not isinstance(params, ModelParams):
        raise InvalidParams(f"expected ModelParams, got {type(params).__name__}")
    lambda0 = params.lambda_b + params.r
    lambda1 = params.lambda_g + params.r
    U0 = params.u0 / lambda0
    U1 = params.u1 / lambda1
    return DerivedParams(
        lambda0=lambda0,
        lambda1=lambda1,
        U0=U0,
        U1=U1,
        mu=(U0 - U1) / U0,
        lambda_ratio=lambda1 / lambda0,
        u0=params.u0,
        u1=params.u1,
    )


@dataclass(frozen=True)
class AssumptionReport:
    a1_holds: bool
    a2a_holds: bool
    a2b_holds: bool
    margins: dict

    @property
    def all_hold(self) -> bool:
        return self.a1_holds and self.a2a_holds and self.a2b_holds

    def to_dict(self) -> dict:
        return {
            "a1_holds": self.a1_holds,
            "a2a_holds": self.a2a_holds,
            "a2b_holds": self.a2b_holds,
            "margins": {k: (None if v is None else v) for k, v in self.margins.items()},
        }


def check_assumptions(params: ModelParams) -> AssumptionReport:
    """Evaluate the standing assumptions as signed margins.

    Margins are ``None`` for the detectability conditions when inspections are
    perfect; those conditions then hold trivially.
    """
    d = derive(params)
    a1 = d.U0 - d.U1
    if params.perfect:
        a2a = a2b = None
        a2a_ok = a2b_ok = True
    else:
        a2a = params.delta - d.lambda0 * (d.U0 - d.U1) / d.U1
        a2b = params.delta - (d.lambda1 + (params.lambda_g - params.lambda_b))
        a2a_ok, a2b_ok = a2a > 0, a2b > 0
    return AssumptionReport(
        a1_holds=a1 > 0,
        a2a_holds=a2a_ok,
        a2b_holds=a2b_ok,
        margins={"a1": a1, "a2a": a2a, "a2b": a2b},
    )


def classify_regime(params: ModelParams) -> Regime:
    if nearly_equal(params.lambda_g + params.r, params.lambda_b + params.r):
        return Regime.NEUTRAL
    return Regime.INNOVATION if params.lambda_g > params.lambda_b else Regime.MAINTENANCE


# --- microfoundations -------------------------------------------------------

@dataclass(frozen=True)
class Employment:
    """Flow wage ``w``, effort cost ``c`` and breakthrough bonus ``R``."""
    w: float
    c: float
    R: float


@dataclass(frozen=True)
class Investment:
    """Funding rate ``phi``, breakdown penalty ``C`` and breakthrough reward ``R``."""
    phi: float
    C: float
    R: float


@dataclass(frozen=True)
class Baseline:
    """Action-independent arrival rates folded into the discount rate."""
    ubar_g: float
    ubar_b: float


def microfound(primitives, base: ModelParams) -> ModelParams:
    """Map an application's primitives onto flow utilities (or discounting).

    Rates are taken from ``base``; for the employment and investment stories
    its ``u0``/``u1`` are replaced.
    """
    if isinstance(primitives, Employment):
        u0, u1 = primitives.w, primitives.w - primitives.c + base.lambda_g * primitives.R
    elif isinstance(primitives, Investment):
        u0, u1 = primitives.phi - base.lambda_b * primitives.C, base.lambda_g * primitives.R
    elif isinstance(primitives, Baseline):
        if primitives.ubar_g < 0 or primitives.ubar_b < 0:
            raise InvalidParams("baseline arrival rates must be >= 0")
        return replace(base, r=base.r + primitives.ubar_g + primitives.ubar_b)
    else:
        raise InvalidParams(f"unknown microfoundation {primitives!r}")
    if u0 <= 0 or u1 <= 0:
        raise InvalidParams(f"microfounded flow utilities must be > 0, got u0={u0}, u1={u1}")
    return replace(base, u0=u0, u1=u1)

"""Exponential-smoothing estimators and the capped-geometric goodput formula."""

from __future__ import annotations

from dataclasses import dataclass

ALPHA_MIN = 1e-4
ALPHA_MAX = 1.0 - 1e-4
GOODPUT_FLOOR = 1e-6

__all__ = [
    "ALPHA_MIN",
    "ALPHA_MAX",
    "GOODPUT_FLOOR",
    "SmoothingSchedule",
    "SmoothingParams",
    "ClientEstimates",
    "smoothing_value",
    "update_acceptance",
    "update_goodput",
    "expected_goodput",
]


@dataclass(frozen=True)
class SmoothingSchedule:
    """Constant step, or polynomial decay ``coef / t**exponent`` for t >= 1."""

    kind: str
    value: float = 0.0
    coef: float = 1.0
    exponent: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == "constant":
            if not 0.0 < self.value < 1.0:
                raise ValueError("constant smoothing step must lie in (0, 1)")
        elif self.kind == "decay":
            if not 0.5 < self.exponent <= 1.0:
                raise ValueError("decay exponent must lie in (0.5, 1]")
            if self.coef <= 0.0:
                raise ValueError("decay coefficient must be positive")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float) -> "SmoothingSchedule":
        return cls("constant", value=float(value))

    @classmethod
    def decay(cls, coef: float, exponent: float) -> "SmoothingSchedule":
        return cls("decay", coef=float(coef), exponent=float(exponent))

    def at(self, t: int) -> float:
        """Step value at round t (1-based); decay values are clamped below 1."""
        if t < 1:
            raise ValueError("schedules are indexed from t = 1")
        if self.kind == "constant":
            return self.value
        return min(self.coef / t**self.exponent, 1.0 - 1e-12)


@dataclass(frozen=True)
class SmoothingParams:
    """Step schedules for the acceptance (eta) and goodput (beta) estimators.

    When both decay, the acceptance step must decay strictly faster so their
    ratio vanishes; the acceptance estimate then looks frozen on the timescale
    of the goodput estimate.
    """

    eta: SmoothingSchedule
    beta: SmoothingSchedule

    def __post_init__(self) -> None:
        if self.eta.kind == "decay" and self.beta.kind == "decay":
            if not self.eta.exponent > self.beta.exponent:
                raise ValueError(
                    "eta must decay faster than beta (eta exponent > beta exponent)"
                )


def smoothing_value(params: SmoothingParams, which: str, t: int) -> float:
    if which == "eta":
        return params.eta.at(t)
    if which == "beta":
        return params.beta.at(t)
    raise ValueError(f"unknown smoothing parameter {which!r}")


def update_acceptance(prev: float, ratios, eta_t: float) -> float:
    """One smoothing step toward the round's mean accept ratio.

    An empty ratio list means the client drafted nothing this round; the
    previous estimate is carried forward unchanged.
    """
    if not ratios:
        return prev
    if not 0.0 < eta_t < 1.0:
        raise ValueError("eta_t must lie in (0, 1)")
    mean = sum(ratios) / len(ratios)
    value = (1.0 - eta_t) * prev + eta_t * mean
    return min(max(value, ALPHA_MIN), ALPHA_MAX)


def update_goodput(prev: float, realized: float, beta_t: float) -> float:
    """One smoothing step toward the realized goodput, floored away from 0."""
    if realized < 0.0:
        raise ValueError("realized goodput must be non-negative")
    if not 0.0 < beta_t < 1.0:
        raise ValueError("beta_t must lie in (0, 1)")
    return max((1.0 - beta_t) * prev + beta_t * realized, GOODPUT_FLOOR)


def expected_goodput(alpha: float, slots: int) -> float:
    """Expected emitted tokens per round: 1 + alpha + ... + alpha**slots.

    The accepted prefix is a geometric run of accepts capped at ``slots``, and
    the verifier always contributes one more token, so the mean is the partial
    geometric sum; it always lies in [1, slots + 1].
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    if slots < 0:
        raise ValueError("slots must be non-negative")
    return (1.0 - alpha ** (slots + 1)) / (1.0 - alpha)


@dataclass(frozen=True)
class ClientEstimates:
    """Smoothed acceptance rate and smoothed goodput for one draft client."""

    alpha_hat: float
    goodput_hat: float

    def __post_init__(self) -> None:
        if not ALPHA_MIN <= self.alpha_hat <= ALPHA_MAX:
            raise ValueError("alpha_hat outside its clamp range")
        if self.goodput_hat < GOODPUT_FLOOR:
            raise ValueError("goodput_hat below its floor")

"""Token-budget allocation: greedy gradient scheduler, baselines, exact oracle.

The online scheduler maximizes sum_i w_i * mu(alpha_i, S_i) over integer slot
vectors with sum S_i <= C, where mu is the capped-geometric expected goodput.
Marginal gains w_i * alpha_i**(s+1) are positive and strictly decreasing in s,
so greedy slot-by-slot allocation is exact for this separable concave
objective; a brute-force enumerator certifies that on small instances.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .estimators import expected_goodput

BRUTE_FORCE_MAX_CLIENTS = 6
BRUTE_FORCE_MAX_CAPACITY = 16

__all__ = [
    "BRUTE_FORCE_MAX_CLIENTS",
    "BRUTE_FORCE_MAX_CAPACITY",
    "ScheduleDecision",
    "SchedulerInput",
    "utility_log",
    "gradient_log",
    "allocation_objective",
    "gradient_schedule",
    "brute_force_schedule",
    "fixed_schedule",
    "random_schedule",
    "iter_allocations",
]


@dataclass(frozen=True)
class ScheduleDecision:
    """Integer draft-token allocation, one entry per client."""

    slots: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.slots:
            raise ValueError("decision needs at least one client")
        if any((not isinstance(s, int)) or s < 0 for s in self.slots):
            raise ValueError("slots must be non-negative integers")

    @property
    def total(self) -> int:
        return sum(self.slots)


@dataclass(frozen=True)
class SchedulerInput:
    """Per-client utility gradients and acceptance estimates plus the budget."""

    weights: tuple[float, ...]
    alphas: tuple[float, ...]
    capacity: int

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.alphas) or not self.weights:
            raise ValueError("weights and alphas must be equal-length and non-empty")
        for w in self.weights:
            if not (math.isfinite(w) and w > 0.0):
                raise ValueError("weights must be finite and positive")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ValueError("alphas must lie strictly inside (0, 1)")
        if self.capacity < 1:
            raise ValueError("capacity must be at least 1")


def utility_log(x) -> float:
    """Proportional-fairness utility: sum of log x_i."""
    total = 0.0
    for v in x:
        if v <= 0.0:
            raise ValueError("log utility needs strictly positive goodput")
        total += math.log(v)
    return total


def gradient_log(x) -> tuple[float, ...]:
    """Componentwise 1/x_i; callers must keep x_i at or above the floor."""
    out = []
    for v in x:
        if v <= 0.0:
            raise ValueError("log gradient needs strictly positive goodput")
        out.append(1.0 / v)
    return tuple(out)


def allocation_objective(inp: SchedulerInput, slots) -> float:
    """Objective value of an allocation, accumulated in client order."""
    total = 0.0
    for i in range(len(slots)):
        total += inp.weights[i] * expected_goodput(inp.alphas[i], slots[i])
    return total


def gradient_schedule(inp: SchedulerInput) -> tuple[ScheduleDecision, float]:
    """Exact greedy maximizer of the gradient-weighted expected goodput.

    Grants one slot at a time to the client with the largest marginal gain
    w_i * alpha_i**(s_i + 1); ties go to the lowest client index. Stops early
    only if the best marginal gain underflows to zero.
    """
    n = len(inp.weights)
    slots = [0] * n
    heap = [(-inp.weights[i] * inp.alphas[i], i) for i in range(n)]
    heapq.heapify(heap)
    for _ in range(inp.capacity):
        neg_gain, i = heap[0]
        if neg_gain >= 0.0:
            break
        slots[i] += 1
        heapq.heapreplace(heap, (neg_gain * inp.alphas[i], i))
    decision = ScheduleDecision(tuple(slots))
    return decision, allocation_objective(inp, decision.slots)


def iter_allocations(clients: int, budget: int) -> Iterator[tuple[int, ...]]:
    """All non-negative integer vectors with sum <= budget, lexicographic."""
    if clients < 1 or budget < 0:
        raise ValueError("need clients >= 1 and budget >= 0")
    if clients == 1:
        for s in range(budget + 1):
            yield (s,)
        return
    for s in range(budget + 1):
        for rest in iter_allocations(clients - 1, budget - s):
            yield (s,) + rest


def brute_force_schedule(inp: SchedulerInput) -> tuple[ScheduleDecision, float]:
    """Exhaustive maximizer; ties resolve to the lexicographically smallest slots."""
    n = len(inp.weights)
    if n > BRUTE_FORCE_MAX_CLIENTS or inp.capacity > BRUTE_FORCE_MAX_CAPACITY:
        raise ValueError(
            "instance too large for exhaustive enumeration "
            f"(limits: {BRUTE_FORCE_MAX_CLIENTS} clients, "
            f"capacity {BRUTE_FORCE_MAX_CAPACITY})"
        )
    best_slots: tuple[int, ...] | None = None
    best_value = -math.inf
    for slots in iter_allocations(n, inp.capacity):
        value = allocation_objective(inp, slots)
        if value > best_value:
            best_value = value
            best_slots = slots
    assert best_slots is not None
    return ScheduleDecision(best_slots), best_value


def fixed_schedule(clients: int, capacity: int) -> ScheduleDecision:
    """Even split; the remainder goes one slot each to the lowest indices."""
    if clients < 1:
        raise ValueError("need at least one client")
    if capacity < 0:
        raise ValueError("capacity must be non-negative")
    base, extra = divmod(capacity, clients)
    return ScheduleDecision(tuple(base + (1 if i < extra else 0) for i in range(clients)))


def random_schedule(clients: int, capacity: int, rng: np.random.Generator) -> ScheduleDecision:
    """Uniform draw over all exact-sum compositions of the budget.

    Sampling picks bar positions among capacity + clients - 1 slots, which is
    a bijection with the compositions, so every composition is equally likely.
    """
    if clients < 1:
        raise ValueError("need at least one client")
    if capacity < 0:
        raise ValueError("capacity must be non-negative")
    if clients == 1:
        return ScheduleDecision((capacity,))
    bars = np.sort(rng.choice(capacity + clients - 1, size=clients - 1, replace=False))
    slots: list[int] = []
    prev = -1
    for b in bars:
        slots.append(int(b) - prev - 1)
        prev = int(b)
    slots.append(capacity + clients - 1 - prev - 1)
    return ScheduleDecision(tuple(slots))

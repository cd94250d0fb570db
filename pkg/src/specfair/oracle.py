"""Optimal long-run goodput over the achievable region.

The achievable region is the convex hull of the expected-goodput vectors of
all feasible integer allocations. The proportional-fairness optimum over it
is computed two independent ways:

* conditional-gradient ascent whose linear subproblem is the same greedy
  scheduler used online (so the vertex search never enumerates the region),
  with away steps and a bisection line search for a certified duality gap;
* on small instances, projected-gradient ascent over mixture weights on the
  enumerated vertex set, certified by its own simplex duality gap.

Both report the duality gap ``<grad U(x), v - x>`` at the best vertex v, an
upper bound on suboptimality for this concave objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import expected_goodput
from .scheduling import (
    ScheduleDecision,
    SchedulerInput,
    fixed_schedule,
    gradient_schedule,
    iter_allocations,
    utility_log,
)

ENUMERATION_MAX_CLIENTS = 6
ENUMERATION_MAX_CAPACITY = 16

__all__ = [
    "ENUMERATION_MAX_CLIENTS",
    "ENUMERATION_MAX_CAPACITY",
    "GoodputPoint",
    "RegionSpec",
    "FWSolution",
    "goodput_vertex",
    "enumerate_decisions",
    "solve_fw",
    "solve_optimal_goodput",
    "small_instance_optimum",
]


@dataclass(frozen=True)
class GoodputPoint:
    """Point of the goodput region; carries a duality gap when it is a candidate optimum."""

    values: tuple[float, ...]
    fw_gap: float = 0.0

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("goodput point needs at least one client")
        for v in self.values:
            if not (math.isfinite(v) and v >= 1.0 - 1e-9):
                raise ValueError("goodput coordinates must be finite and at least 1")
        if not (math.isfinite(self.fw_gap) and self.fw_gap >= 0.0):
            raise ValueError("duality gap must be finite and non-negative")


@dataclass(frozen=True)
class RegionSpec:
    """Long-run acceptance rates and the verification budget defining the region."""

    alphas: tuple[float, ...]
    capacity: int

    def __post_init__(self) -> None:
        if not self.alphas:
            raise ValueError("region needs at least one client")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ValueError("acceptance rates must lie strictly inside (0, 1)")
        if self.capacity < 1:
            raise ValueError("capacity must be at least 1")

    @property
    def clients(self) -> int:
        return len(self.alphas)

    def upper_bound(self) -> float:
        """Largest possible goodput coordinate: the best client granted everything."""
        return expected_goodput(max(self.alphas), self.capacity)


def goodput_vertex(decision: ScheduleDecision, region: RegionSpec) -> GoodputPoint:
    """Expected-goodput vector of one feasible allocation."""
    if len(decision.slots) != region.clients:
        raise ValueError("allocation and region have different client counts")
    if decision.total > region.capacity:
        raise ValueError("allocation exceeds the verification budget")
    return GoodputPoint(
        tuple(expected_goodput(a, s) for a, s in zip(region.alphas, decision.slots))
    )


def enumerate_decisions(clients: int, capacity: int) -> list[ScheduleDecision]:
    """All feasible allocations (sum <= capacity), lexicographic order."""
    if clients > ENUMERATION_MAX_CLIENTS or capacity > ENUMERATION_MAX_CAPACITY:
        raise ValueError(
            "instance too large to enumerate "
            f"(limits: {ENUMERATION_MAX_CLIENTS} clients, "
            f"capacity {ENUMERATION_MAX_CAPACITY})"
        )
    return [ScheduleDecision(slots) for slots in iter_allocations(clients, capacity)]


@dataclass(frozen=True)
class FWSolution:
    """Conditional-gradient result: the point, its utility, iterations used."""

    point: GoodputPoint
    utility: float
    iterations: int


def _line_search(x: np.ndarray, d: np.ndarray, hi: float) -> float:
    """Maximize sum(log(x + g*d)) over g in [0, hi] by bisecting the slope."""

    def slope(g: float) -> float:
        return float(np.sum(d / (x + g * d)))

    if slope(0.0) <= 0.0:
        return 0.0
    if slope(hi) >= 0.0:
        return hi
    lo_g, hi_g = 0.0, hi
    for _ in range(60):
        mid = 0.5 * (lo_g + hi_g)
        if slope(mid) > 0.0:
            lo_g = mid
        else:
            hi_g = mid
    return 0.5 * (lo_g + hi_g)


def solve_fw(
    region: RegionSpec, max_iters: int = 100_000, gap_tol: float = 1e-6
) -> FWSolution:
    """Conditional-gradient maximization of sum(log x) over the region.

    The vertex search is the greedy scheduler itself, so no enumeration is
    needed and the solver scales to budgets and client counts the enumerators
    cannot touch. Away steps over the active vertex set avoid the zig-zag
    stall of plain conditional gradient on mixture-valued optima, giving a
    linear rate; the iterate is maintained explicitly as a convex combination
    of vertices. Non-convergence is reported through the returned gap, not an
    error.
    """
    cap = region.capacity
    alphas = region.alphas
    vertex_cache: dict[tuple[int, ...], np.ndarray] = {}

    def vertex(slots: tuple[int, ...]) -> np.ndarray:
        vec = vertex_cache.get(slots)
        if vec is None:
            vec = np.array([expected_goodput(a, s) for a, s in zip(alphas, slots)])
            vertex_cache[slots] = vec
        return vec

    start = fixed_schedule(region.clients, cap).slots
    mixture: dict[tuple[int, ...], float] = {start: 1.0}
    x = vertex(start).copy()
    gap = math.inf
    iterations = 0
    for iterations in range(1, max_iters + 1):
        grad = 1.0 / x
        decision, _ = gradient_schedule(SchedulerInput(tuple(grad), alphas, cap))
        v = vertex(decision.slots)
        gap = float(grad @ (v - x))
        if gap <= gap_tol:
            break
        away_slots = min(mixture, key=lambda s: (float(grad @ vertex(s)), s))
        away_weight = mixture[away_slots]
        away_gain = float(grad @ (x - vertex(away_slots)))
        if gap >= away_gain or away_weight >= 1.0:
            step = _line_search(x, v - x, 1.0)
            if step <= 0.0:
                break
            for s in list(mixture):
                mixture[s] *= 1.0 - step
            mixture[decision.slots] = mixture.get(decision.slots, 0.0) + step
        else:
            hi = away_weight / (1.0 - away_weight)
            step = _line_search(x, x - vertex(away_slots), hi)
            if step <= 0.0:
                break
            for s in list(mixture):
                mixture[s] *= 1.0 + step
            mixture[away_slots] -= step
        # prune dead atoms and rebuild the iterate to keep it an exact mixture
        mixture = {s: w for s, w in mixture.items() if w > 1e-15}
        total = sum(mixture.values())
        x = np.zeros(region.clients)
        for s, w in mixture.items():
            mixture[s] = w / total
            x += mixture[s] * vertex(s)
    point = GoodputPoint(tuple(float(v) for v in x), max(gap, 0.0))
    return FWSolution(point, utility_log(x), iterations)


def solve_optimal_goodput(
    region: RegionSpec, max_iters: int = 100_000, gap_tol: float = 1e-6
) -> GoodputPoint:
    """Optimal goodput allocation with its final duality gap."""
    return solve_fw(region, max_iters, gap_tol).point


def _project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(y) + 1)
    cond = u - css / idx > 0.0
    rho = int(idx[cond][-1])
    tau = css[cond][-1] / rho
    return np.maximum(y - tau, 0.0)


def _ascend_mixture(
    vertices: np.ndarray,
    phi: np.ndarray,
    max_iters: int = 5000,
    gap_tol: float = 1e-9,
) -> tuple[np.ndarray, float]:
    """Projected-gradient ascent of sum(log(phi @ V)) over the simplex.

    Uses backtracking with step regrowth; stops on the simplex duality gap,
    which upper-bounds suboptimality independently of the greedy scheduler.
    """
    x = phi @ vertices
    value = float(np.sum(np.log(x)))
    step = 1.0
    gap = math.inf
    for _ in range(max_iters):
        grad = vertices @ (1.0 / x)
        gap = float(np.max(grad) - grad @ phi)
        if gap <= gap_tol:
            break
        moved = False
        while step > 1e-18:
            cand = _project_simplex(phi + step * grad)
            cand_x = cand @ vertices
            cand_value = float(np.sum(np.log(cand_x)))
            if cand_value > value:
                phi, x, value = cand, cand_x, cand_value
                step = min(step * 2.0, 1e6)
                moved = True
                break
            step *= 0.5
        if not moved:
            break
    return phi, max(gap, 0.0)


def small_instance_optimum(region: RegionSpec, grid: int = 8) -> GoodputPoint:
    """Independent optimum over explicit vertex mixtures (small instances only).

    Enumerates the region's vertices, then runs projected-gradient ascent on
    the mixture weights; ``grid`` controls the number of restarts (the first
    starts uniform, the rest from seeded Dirichlet draws). Returns the best
    point found with its simplex duality gap.
    """
    decisions = enumerate_decisions(region.clients, region.capacity)
    vertices = np.array(
        [
            [expected_goodput(a, s) for a, s in zip(region.alphas, d.slots)]
            for d in decisions
        ]
    )
    count = len(decisions)
    best_x: np.ndarray | None = None
    best_value = -math.inf
    best_gap = math.inf
    for restart in range(max(1, grid)):
        if restart == 0:
            phi = np.full(count, 1.0 / count)
        else:
            rng = np.random.default_rng(np.random.SeedSequence([981274301, restart]))
            phi = rng.dirichlet(np.ones(count))
        phi, gap = _ascend_mixture(vertices, phi)
        x = phi @ vertices
        value = float(np.sum(np.log(x)))
        if value > best_value:
            best_x, best_value, best_gap = x, value, gap
    assert best_x is not None
    return GoodputPoint(tuple(float(v) for v in best_x), best_gap)

"""Per-client acceptance-rate trajectories and the round latency cost model.

Abstract profiles drive the accepted-count law directly with a level
alpha_i(t); the token-model profile instead carries explicit (draft, target)
model pairs whose acceptance behavior emerges from actual verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .seeding import STREAM_WALK, substream
from .tokens import MarkovLM, long_run_acceptance

ALPHA_LEVEL_MIN = 0.05
ALPHA_LEVEL_MAX = 0.95

__all__ = [
    "ALPHA_LEVEL_MIN",
    "ALPHA_LEVEL_MAX",
    "StationaryProfile",
    "PiecewiseProfile",
    "RandomWalkProfile",
    "TokenModelProfile",
    "AcceptanceProfile",
    "LatencyParams",
    "profile_clients",
    "alpha_at",
    "long_run_alphas",
]


def _check_level(value: float, where: str) -> float:
    if not ALPHA_LEVEL_MIN <= value <= ALPHA_LEVEL_MAX:
        raise ValueError(
            f"{where}: acceptance level {value!r} outside "
            f"[{ALPHA_LEVEL_MIN}, {ALPHA_LEVEL_MAX}]"
        )
    return float(value)


@dataclass(frozen=True)
class StationaryProfile:
    """One constant acceptance level per client."""

    levels: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.levels:
            raise ValueError("profile needs at least one client")
        for v in self.levels:
            _check_level(v, "stationary profile")


@dataclass(frozen=True)
class PiecewiseProfile:
    """Per-client step functions: ((start_round, level), ...), first start at 0.

    A switch round is inclusive of the new level: the level listed with start
    round s applies from round s onward.
    """

    segments: tuple[tuple[tuple[int, float], ...], ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("profile needs at least one client")
        for client, segs in enumerate(self.segments):
            if not segs or segs[0][0] != 0:
                raise ValueError(f"client {client}: first segment must start at round 0")
            prev = -1
            for start, level in segs:
                if start <= prev:
                    raise ValueError(f"client {client}: switch rounds must increase strictly")
                prev = start
                _check_level(level, f"client {client} piecewise profile")


class RandomWalkProfile:
    """Reflected symmetric random walks inside per-profile bounds.

    Trajectories are materialized lazily per client from ``seed``, so lookups
    at arbitrary rounds are reproducible regardless of access order.
    """

    def __init__(self, starts, step: float, lo: float, hi: float, seed: int) -> None:
        lo = _check_level(lo, "walk lower bound")
        hi = _check_level(hi, "walk upper bound")
        if not lo < hi:
            raise ValueError("walk bounds must satisfy lo < hi")
        if not 0.0 < step <= hi - lo:
            raise ValueError("walk step must lie in (0, hi - lo]")
        starts = tuple(float(s) for s in starts)
        if not starts:
            raise ValueError("profile needs at least one client")
        for s in starts:
            if not lo <= s <= hi:
                raise ValueError("walk start outside its reflection bounds")
        self.starts = starts
        self.step = float(step)
        self.lo = lo
        self.hi = hi
        self.seed = int(seed)
        self._paths: list[list[float]] = [[s] for s in starts]
        self._rngs = [substream(self.seed, STREAM_WALK, i) for i in range(len(starts))]

    def level(self, client: int, t: int) -> float:
        path = self._paths[client]
        if t >= len(path):
            rng = self._rngs[client]
            step, lo, hi = self.step, self.lo, self.hi
            cur = path[-1]
            while len(path) <= t:
                cur = cur + (step if rng.random() < 0.5 else -step)
                while cur < lo or cur > hi:
                    cur = 2.0 * hi - cur if cur > hi else 2.0 * lo - cur
                path.append(cur)
        return path[t]


class TokenModelProfile:
    """Explicit (draft, target) Markov model pair per client."""

    def __init__(self, pairs) -> None:
        pairs = tuple((d, t) for d, t in pairs)
        if not pairs:
            raise ValueError("profile needs at least one client")
        for draft, target in pairs:
            if not isinstance(draft, MarkovLM) or not isinstance(target, MarkovLM):
                raise TypeError("token-model profile entries must be MarkovLM pairs")
            if draft.vocab_size != target.vocab_size:
                raise ValueError("draft and target vocabularies differ")
        self.pairs = pairs
        self._long_run: list[float | None] = [None] * len(pairs)

    def long_run_rate(self, client: int) -> float:
        cached = self._long_run[client]
        if cached is None:
            draft, target = self.pairs[client]
            cached = long_run_acceptance(draft, target)
            self._long_run[client] = cached
        return cached


AcceptanceProfile = Union[
    StationaryProfile, PiecewiseProfile, RandomWalkProfile, TokenModelProfile
]


def profile_clients(profile: AcceptanceProfile) -> int:
    if isinstance(profile, StationaryProfile):
        return len(profile.levels)
    if isinstance(profile, PiecewiseProfile):
        return len(profile.segments)
    if isinstance(profile, RandomWalkProfile):
        return len(profile.starts)
    if isinstance(profile, TokenModelProfile):
        return len(profile.pairs)
    raise TypeError(f"unknown profile type {type(profile)!r}")


def alpha_at(profile: AcceptanceProfile, client: int, t: int, rng=None) -> float:
    """Acceptance level of one client at round ``t``.

    Random-walk trajectories come from the profile's own seeded streams, so
    the optional ``rng`` is never consumed. For token-model profiles the
    per-round level is not a function of t alone (it depends on the realized
    context), so the stationary-averaged long-run rate is returned.
    """
    if t < 0:
        raise ValueError("round index must be non-negative")
    if isinstance(profile, StationaryProfile):
        return profile.levels[client]
    if isinstance(profile, PiecewiseProfile):
        level = None
        for start, seg_level in profile.segments[client]:
            if start > t:
                break
            level = seg_level
        assert level is not None
        return level
    if isinstance(profile, RandomWalkProfile):
        return profile.level(client, t)
    if isinstance(profile, TokenModelProfile):
        return profile.long_run_rate(client)
    raise TypeError(f"unknown profile type {type(profile)!r}")


def long_run_alphas(profile: AcceptanceProfile, horizon: int) -> tuple[float, ...]:
    """Per-client limiting acceptance rates over a horizon of rounds.

    Stationary levels are their own limit; piecewise profiles average levels
    by segment length over [0, horizon); reflected symmetric walks average to
    the midpoint of their bounds; token-model pairs use the stationary-context
    acceptance rate.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if isinstance(profile, StationaryProfile):
        return profile.levels
    if isinstance(profile, PiecewiseProfile):
        out = []
        for segs in profile.segments:
            total = 0.0
            for idx, (start, level) in enumerate(segs):
                if start >= horizon:
                    break
                end = segs[idx + 1][0] if idx + 1 < len(segs) else horizon
                total += level * (min(end, horizon) - start)
            out.append(total / horizon)
        return tuple(out)
    if isinstance(profile, RandomWalkProfile):
        mid = 0.5 * (profile.lo + profile.hi)
        return (mid,) * len(profile.starts)
    if isinstance(profile, TokenModelProfile):
        return tuple(profile.long_run_rate(i) for i in range(len(profile.pairs)))
    raise TypeError(f"unknown profile type {type(profile)!r}")


@dataclass(frozen=True)
class LatencyParams:
    """Modeled wall-time costs (milliseconds) for one verification round.

    Receive time is the slowest client's uplink plus per-token drafting cost;
    verify time is a fixed cost plus a per-token term over the whole batch;
    send time is a small constant.
    """

    draft_ms_per_token: tuple[float, ...]
    uplink_ms: tuple[float, ...]
    verify_ms_fixed: float
    verify_ms_per_token: float
    send_ms: float

    def __post_init__(self) -> None:
        if len(self.draft_ms_per_token) != len(self.uplink_ms) or not self.uplink_ms:
            raise ValueError("per-client latency vectors must match and be non-empty")
        values = (
            *self.draft_ms_per_token,
            *self.uplink_ms,
            self.verify_ms_fixed,
            self.verify_ms_per_token,
            self.send_ms,
        )
        if any(v < 0.0 for v in values):
            raise ValueError("latency costs must be non-negative")

    @classmethod
    def default(cls, clients: int) -> "LatencyParams":
        """Defaults under which receive and verify dominate and send is <0.1%."""
        return cls(
            draft_ms_per_token=(8.0,) * clients,
            uplink_ms=(5.0,) * clients,
            verify_ms_fixed=20.0,
            verify_ms_per_token=1.0,
            send_ms=0.05,
        )

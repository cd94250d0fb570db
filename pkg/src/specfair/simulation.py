"""Round-based simulation of the draft/verify/update/schedule cycle.

Each round: clients draft their allocated token blocks, the verifier accepts
a prefix per client and contributes one extra token, both smoothed estimators
advance, and the selected scheduler picks the next allocation. Token-model
runs execute exact verification against Markov model pairs; abstract runs
draw the accepted count directly from its capped-geometric law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .config import ExperimentConfig
from .estimators import (
    ClientEstimates,
    SmoothingParams,
    update_acceptance,
    update_goodput,
)
from .oracle import GoodputPoint
from .profiles import (
    AcceptanceProfile,
    LatencyParams,
    TokenModelProfile,
    alpha_at,
    profile_clients,
)
from .scheduling import (
    fixed_schedule,
    gradient_log,
    gradient_schedule,
    random_schedule,
    SchedulerInput,
)
from .seeding import STREAM_CLIENT, STREAM_SCHEDULER, substream
from .tokens import draft_sequence, sample, verify_speculative

__all__ = [
    "ClientState",
    "RoundRecord",
    "sample_accepted_count",
    "run_round",
    "run_experiment",
    "iter_experiment",
    "empirical_average",
    "ma_smooth",
]


# the even split is deterministic and decisions are immutable, so memoize it
_fixed_decision = lru_cache(maxsize=None)(fixed_schedule)


@dataclass(frozen=True)
class ClientState:
    """Mutable-per-round view of one draft client, carried between rounds."""

    estimates: ClientEstimates
    current_slots: int
    prefix_last_token: int
    zero_slot_rounds: int

    def __post_init__(self) -> None:
        if self.current_slots < 0:
            raise ValueError("slot counts must be non-negative")


@dataclass(frozen=True)
class RoundRecord:
    """Everything observable about one round.

    ``slots`` is the allocation executed this round, ``next_slots`` the one the
    scheduler just produced. ``realized`` is accepted count + 1 per client and
    always lies in [1, slots + 1]. The three time components sum to
    ``total_ms`` exactly.
    """

    round_index: int
    slots: tuple[int, ...]
    accepted: tuple[int, ...]
    realized: tuple[float, ...]
    alpha_hat: tuple[float, ...]
    goodput_hat: tuple[float, ...]
    next_slots: tuple[int, ...]
    utility_smoothed: float
    utility_running_avg: float
    receive_ms: float
    verify_ms: float
    send_ms: float
    total_ms: float


def sample_accepted_count(alpha: float, slots: int, rng: np.random.Generator) -> int:
    """Accepted-run length: geometric accept streak capped at ``slots``.

    Inverse-transform draw, so exactly one uniform is consumed per call:
    P(count >= j) = alpha**j for j <= slots.
    """
    if slots < 0:
        raise ValueError("slots must be non-negative")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if slots == 0 or alpha == 0.0:
        # still consume the draw so streams stay aligned across alpha values
        rng.random()
        return 0
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    run = int(math.log(u) / math.log(alpha))
    return run if run < slots else slots


def run_round(
    states: list[ClientState],
    profile: AcceptanceProfile,
    scheduler_kind: str,
    smoothing: SmoothingParams,
    latency: LatencyParams,
    capacity: int,
    round_index: int,
    client_rngs: list[np.random.Generator],
    scheduler_rng: np.random.Generator,
    running_totals: list[float],
) -> tuple[list[ClientState], RoundRecord]:
    """Execute one full round and return the successor states plus its record.

    ``running_totals`` accumulates per-client realized goodput in place so the
    record can report the utility of the running average without rescanning
    the trace.
    """
    n = len(states)
    slots = tuple(st.current_slots for st in states)
    slots_total = sum(slots)
    if slots_total > capacity:
        raise ValueError("allocated slots exceed the verification budget")
    token_mode = isinstance(profile, TokenModelProfile)
    eta_t = smoothing.eta.at(round_index + 1)
    beta_t = smoothing.beta.at(round_index + 1)

    accepted: list[int] = []
    realized: list[float] = []
    alpha_hats: list[float] = []
    goodput_hats: list[float] = []
    prefixes: list[int] = []
    for i, st in enumerate(states):
        s_i = st.current_slots
        rng = client_rngs[i]
        prefix = st.prefix_last_token
        if token_mode:
            draft_lm, target_lm = profile.pairs[i]
            draft = draft_sequence(draft_lm, prefix, s_i, rng)
            ctx = prefix
            p_dists = []
            for tok in draft.tokens:
                p_dists.append(target_lm.transition[ctx])
                ctx = tok
            p_dists.append(target_lm.transition[ctx])
            outcome = verify_speculative(p_dists, draft, rng)
            m = outcome.accepted_count
            ratios = outcome.accept_ratios
            prefix = outcome.emitted_tokens[-1]
        else:
            level = alpha_at(profile, i, round_index)
            m = sample_accepted_count(level, s_i, rng)
            ratios = (level,) * s_i
        x_i = float(m + 1)
        accepted.append(m)
        realized.append(x_i)
        alpha_hats.append(update_acceptance(st.estimates.alpha_hat, ratios, eta_t))
        goodput_hats.append(update_goodput(st.estimates.goodput_hat, x_i, beta_t))
        prefixes.append(prefix)
        running_totals[i] += x_i

    if scheduler_kind == "gradient":
        decision, _ = gradient_schedule(
            SchedulerInput(gradient_log(goodput_hats), tuple(alpha_hats), capacity)
        )
    elif scheduler_kind == "fixed":
        decision = _fixed_decision(n, capacity)
    elif scheduler_kind == "random":
        decision = random_schedule(n, capacity, scheduler_rng)
    else:
        raise ValueError(f"unknown scheduler kind {scheduler_kind!r}")
    next_slots = decision.slots

    receive = max(
        latency.uplink_ms[i] + latency.draft_ms_per_token[i] * slots[i] for i in range(n)
    )
    verify = latency.verify_ms_fixed + latency.verify_ms_per_token * slots_total
    send = latency.send_ms
    rounds_done = round_index + 1
    record = RoundRecord(
        round_index=round_index,
        slots=slots,
        accepted=tuple(accepted),
        realized=tuple(realized),
        alpha_hat=tuple(alpha_hats),
        goodput_hat=tuple(goodput_hats),
        next_slots=next_slots,
        utility_smoothed=sum(math.log(g) for g in goodput_hats),
        utility_running_avg=sum(
            math.log(running_totals[i] / rounds_done) for i in range(n)
        ),
        receive_ms=receive,
        verify_ms=verify,
        send_ms=send,
        total_ms=receive + verify + send,
    )
    new_states = [
        ClientState(
            estimates=ClientEstimates(alpha_hats[i], goodput_hats[i]),
            current_slots=next_slots[i],
            prefix_last_token=prefixes[i],
            zero_slot_rounds=states[i].zero_slot_rounds + (1 if slots[i] == 0 else 0),
        )
        for i in range(n)
    ]
    return new_states, record


def iter_experiment(
    config: ExperimentConfig, scheduler: str | None = None
) -> Iterator[RoundRecord]:
    """Generate round records one at a time (same determinism as run_experiment)."""
    if profile_clients(config.profile) != config.clients:
        raise ValueError("profile client count does not match the configuration")
    kind = scheduler if scheduler is not None else config.schedulers[0]
    n = config.clients
    client_rngs = [substream(config.seed, STREAM_CLIENT, i) for i in range(n)]
    scheduler_rng = substream(config.seed, STREAM_SCHEDULER)
    token_mode = isinstance(config.profile, TokenModelProfile)
    initial_slots = fixed_schedule(n, config.capacity).slots
    states = []
    for i in range(n):
        # token-model prefixes start from the target model's initial law
        prefix = (
            sample(config.profile.pairs[i][1].initial, client_rngs[i]) if token_mode else 0
        )
        states.append(
            ClientState(
                estimates=ClientEstimates(0.5, 1.0),
                current_slots=initial_slots[i],
                prefix_last_token=prefix,
                zero_slot_rounds=0,
            )
        )
    running_totals = [0.0] * n
    for t in range(config.rounds):
        states, record = run_round(
            states,
            config.profile,
            kind,
            config.smoothing,
            config.latency,
            config.capacity,
            t,
            client_rngs,
            scheduler_rng,
            running_totals,
        )
        yield record


def run_experiment(
    config: ExperimentConfig, scheduler: str | None = None
) -> list[RoundRecord]:
    """Run the configured number of rounds deterministically under the seed."""
    return list(iter_experiment(config, scheduler))


def empirical_average(trace, horizon: int) -> GoodputPoint:
    """Per-client mean realized goodput over the first ``horizon`` rounds."""
    if not 1 <= horizon <= len(trace):
        raise ValueError("horizon must lie in [1, len(trace)]")
    n = len(trace[0].realized)
    totals = [0.0] * n
    for record in trace[:horizon]:
        for i in range(n):
            totals[i] += record.realized[i]
    return GoodputPoint(tuple(v / horizon for v in totals))


def ma_smooth(series, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Trailing moving average and sample standard deviation per index.

    Partial windows at the start use the points available; windows holding a
    single point report a standard deviation of zero.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    arr = np.asarray(series, dtype=np.float64)
    means = np.empty_like(arr)
    stds = np.empty_like(arr)
    for i in range(len(arr)):
        chunk = arr[max(0, i - window + 1) : i + 1]
        means[i] = chunk.mean()
        stds[i] = chunk.std(ddof=1) if len(chunk) > 1 else 0.0
    return means, stds

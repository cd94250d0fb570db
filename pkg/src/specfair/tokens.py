"""Exact speculative-sampling primitives over small categorical token models.

A cheap draft model proposes a block of tokens; the target model accepts each
one with probability min(1, p/q) and patches the first rejection with a draw
from the normalized positive part of p - q. The emitted stream is then
distributed exactly as if the target model had decoded alone, which is the
property everything downstream relies on.

Vocabularies stay tiny (V <= 32) so every distributional claim can be checked
by direct summation instead of estimation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-12

__all__ = [
    "PROB_TOL",
    "DistributionError",
    "CategoricalDist",
    "MarkovLM",
    "DraftResult",
    "VerifyOutcome",
    "normalize",
    "sample",
    "draft_sequence",
    "verify_speculative",
    "residual_distribution",
    "analytic_acceptance_rate",
    "emitted_token_oracle",
    "stationary_distribution",
    "long_run_acceptance",
    "random_categorical",
    "random_markov_lm",
    "random_model_pair",
]


class DistributionError(ValueError):
    """A weight or probability vector cannot form a categorical distribution."""


class CategoricalDist:
    """Probability vector over token ids ``0 .. V-1`` (V >= 2).

    Entries are non-negative and sum to one within ``PROB_TOL``. Instances are
    immutable after construction and safe to share across threads.
    """

    __slots__ = ("probs", "_plist", "_residuals")

    def __init__(self, probs) -> None:
        arr = np.array(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise DistributionError("need a 1-d vector with at least two entries")
        if not np.all(np.isfinite(arr)):
            raise DistributionError("probabilities must be finite")
        if np.any(arr < 0.0):
            raise DistributionError("probabilities must be non-negative")
        total = float(arr.sum())
        if abs(total - 1.0) > PROB_TOL:
            raise DistributionError(f"probabilities sum to {total!r}, not 1")
        arr.flags.writeable = False
        self.probs = arr
        self._plist = arr.tolist()
        self._residuals: dict | None = None  # memo for residual_distribution

    @property
    def vocab_size(self) -> int:
        return len(self._plist)

    def __repr__(self) -> str:
        return f"CategoricalDist({self._plist!r})"


def normalize(weights) -> CategoricalDist:
    """Scale non-negative weights into a categorical distribution.

    Raises :class:`DistributionError` when the weights are all zero, negative,
    or non-finite.
    """
    arr = np.array(weights, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise DistributionError("need a 1-d vector with at least two entries")
    if not np.all(np.isfinite(arr)):
        raise DistributionError("weights must be finite")
    if np.any(arr < 0.0):
        raise DistributionError("weights must be non-negative")
    total = float(arr.sum())
    if total <= 0.0:
        raise DistributionError("weights must not be all zero")
    arr = arr / total
    arr /= arr.sum()  # second pass pins the sum to 1 despite rounding
    return CategoricalDist(arr)


def _open_unit(rng: np.random.Generator) -> float:
    # rng.random() covers [0, 1); rejecting 0.0 keeps the draw in (0, 1)
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def sample(dist: CategoricalDist, rng: np.random.Generator) -> int:
    """Draw a token id; only ids with positive probability can come back."""
    u = rng.random()
    acc = 0.0
    hit = -1
    for i, p in enumerate(dist._plist):
        if p <= 0.0:
            continue
        acc += p
        hit = i
        if u < acc:
            return i
    return hit  # u landed in the rounding slack at the top of the scan


@dataclass(frozen=True)
class MarkovLM:
    """First-order Markov token model: one next-token distribution per context."""

    vocab_size: int
    initial: CategoricalDist
    transition: tuple[CategoricalDist, ...]

    def __post_init__(self) -> None:
        if self.vocab_size < 2:
            raise DistributionError("vocabulary needs at least two tokens")
        if self.initial.vocab_size != self.vocab_size:
            raise DistributionError("initial distribution size mismatch")
        if len(self.transition) != self.vocab_size:
            raise DistributionError("need exactly one transition row per token")
        for row in self.transition:
            if row.vocab_size != self.vocab_size:
                raise DistributionError("transition row size mismatch")

    @classmethod
    def from_weights(cls, initial, rows) -> "MarkovLM":
        init = normalize(initial)
        return cls(init.vocab_size, init, tuple(normalize(r) for r in rows))

    @classmethod
    def constant(cls, dist: CategoricalDist) -> "MarkovLM":
        """Context-independent model: every row equals ``dist``."""
        return cls(dist.vocab_size, dist, tuple([dist] * dist.vocab_size))


@dataclass(frozen=True)
class DraftResult:
    """Drafted token block plus the proposal distribution used at each step."""

    tokens: tuple[int, ...]
    q_dists: tuple[CategoricalDist, ...]


@dataclass(frozen=True)
class VerifyOutcome:
    """Verification result: accepted prefix length, emitted tokens, ratios.

    ``emitted_tokens`` always has length ``accepted_count + 1``: the accepted
    prefix plus the one token the verifier contributes (residual draw after a
    rejection, target draw otherwise). ``accept_ratios`` holds min(1, p/q) for
    every drafted position, including positions past the first rejection.
    """

    accepted_count: int
    emitted_tokens: tuple[int, ...]
    accept_ratios: tuple[float, ...]


def draft_sequence(
    lm: MarkovLM, prefix_last_token: int, length: int, rng: np.random.Generator
) -> DraftResult:
    """Autoregressively draft ``length`` tokens conditioned on the prefix."""
    if length < 0:
        raise ValueError("draft length must be non-negative")
    if not 0 <= prefix_last_token < lm.vocab_size:
        raise ValueError("prefix token outside the vocabulary")
    ctx = prefix_last_token
    tokens: list[int] = []
    dists: list[CategoricalDist] = []
    for _ in range(length):
        dist = lm.transition[ctx]
        tok = sample(dist, rng)
        tokens.append(tok)
        dists.append(dist)
        ctx = tok
    return DraftResult(tuple(tokens), tuple(dists))


def verify_speculative(
    p_dists, draft: DraftResult, rng: np.random.Generator
) -> VerifyOutcome:
    """Accept/reject a drafted block against the target distributions.

    ``p_dists`` must hold one target distribution per draft position plus one
    more for the bonus token, each conditioned on the same context as the
    matching draft distribution. Position j is accepted when a (0,1) uniform
    is at most min(1, p_j/q_j); the first rejection is replaced by a draw from
    the normalized positive part of p - q at that position, and a fully
    accepted block is extended with a draw from the final target distribution.
    """
    drafted = len(draft.tokens)
    if len(p_dists) != drafted + 1:
        raise ValueError("need one target distribution per draft position plus one")
    ratios: list[float] = []
    for j, tok in enumerate(draft.tokens):
        q = draft.q_dists[j]._plist[tok]
        if q <= 0.0:
            raise DistributionError("drafted token has zero draft probability")
        p = p_dists[j]._plist[tok]
        ratios.append(min(1.0, p / q))
    accepted = drafted
    for j, ratio in enumerate(ratios):
        if _open_unit(rng) > ratio:
            accepted = j
            break
    if accepted < drafted:
        extra_dist = residual_distribution(p_dists[accepted], draft.q_dists[accepted])
    else:
        extra_dist = p_dists[drafted]
    extra = sample(extra_dist, rng)
    emitted = draft.tokens[:accepted] + (extra,)
    return VerifyOutcome(accepted, emitted, tuple(ratios))


def residual_distribution(p: CategoricalDist, q: CategoricalDist) -> CategoricalDist:
    """Normalized positive part of p - q, the post-rejection correction law.

    Results are memoized per (p, q) object pair because Markov rows are shared
    across rounds; the memo holds a strong reference to q so recycled object
    ids cannot alias.
    """
    cache = p._residuals
    if cache is not None:
        hit = cache.get(id(q))
        if hit is not None and hit[0] is q:
            return hit[1]
    if p.vocab_size != q.vocab_size:
        raise DistributionError("distribution size mismatch")
    gaps = np.maximum(p.probs - q.probs, 0.0)
    if not np.any(gaps > 0.0):
        raise DistributionError("residual undefined: target never exceeds draft")
    result = normalize(gaps)
    if cache is None:
        cache = {}
        p._residuals = cache
    cache[id(q)] = (q, result)
    return result


def analytic_acceptance_rate(p: CategoricalDist, q: CategoricalDist) -> float:
    """Exact single-position acceptance probability: sum of min(p, q)."""
    if p.vocab_size != q.vocab_size:
        raise DistributionError("distribution size mismatch")
    return float(np.minimum(p.probs, q.probs).sum())


def emitted_token_oracle(p: CategoricalDist, q: CategoricalDist) -> CategoricalDist:
    """Exact law of the first emitted token: accept mass plus patched residual.

    Built from the accept/reject decomposition rather than returned as ``p``
    directly, so unbiasedness checks have an independent left-hand side.
    """
    if p.vocab_size != q.vocab_size:
        raise DistributionError("distribution size mismatch")
    overlap = np.minimum(p.probs, q.probs)
    gaps = np.maximum(p.probs - q.probs, 0.0)
    total_gap = float(gaps.sum())
    if total_gap <= 0.0:
        return CategoricalDist(p.probs)
    combined = overlap + (1.0 - float(overlap.sum())) * (gaps / total_gap)
    return CategoricalDist(combined)


def stationary_distribution(
    lm: MarkovLM, tol: float = 1e-13, max_iters: int = 20000
) -> np.ndarray:
    """Long-run context distribution of a Markov model.

    Damped power iteration; assumes a single recurrent class, which holds for
    the dense synthetic models used here.
    """
    matrix = np.stack([row.probs for row in lm.transition])
    pi = lm.initial.probs.copy()
    for _ in range(max_iters):
        nxt = 0.5 * (pi + pi @ matrix)
        nxt /= nxt.sum()
        if float(np.max(np.abs(nxt - pi))) <= tol:
            return nxt
        pi = nxt
    return pi


def long_run_acceptance(draft_lm: MarkovLM, target_lm: MarkovLM) -> float:
    """Stationary-averaged acceptance probability of a draft/target pair.

    Emitted tokens follow the target model exactly (unbiasedness), so contexts
    are weighted by the target chain's stationary distribution.
    """
    if draft_lm.vocab_size != target_lm.vocab_size:
        raise DistributionError("draft and target vocabularies differ")
    pi = stationary_distribution(target_lm)
    rates = [
        analytic_acceptance_rate(target_lm.transition[c], draft_lm.transition[c])
        for c in range(target_lm.vocab_size)
    ]
    return float(np.dot(pi, rates))


def random_categorical(
    vocab: int, rng: np.random.Generator, concentration: float = 1.0
) -> CategoricalDist:
    return normalize(rng.dirichlet(np.full(vocab, concentration)))


def random_markov_lm(
    vocab: int, rng: np.random.Generator, concentration: float = 1.0
) -> MarkovLM:
    init = random_categorical(vocab, rng, concentration)
    rows = tuple(random_categorical(vocab, rng, concentration) for _ in range(vocab))
    return MarkovLM(vocab, init, rows)


def random_model_pair(
    vocab: int, rng: np.random.Generator, mismatch: float = 0.5
) -> tuple[MarkovLM, MarkovLM]:
    """Seeded (draft, target) pair whose rows disagree by roughly ``mismatch``.

    mismatch 0 gives identical models (acceptance 1); mismatch 1 gives
    independent rows. Returned in (draft, target) order.
    """
    if not 0.0 <= mismatch <= 1.0:
        raise ValueError("mismatch must lie in [0, 1]")
    target = random_markov_lm(vocab, rng)
    draft_rows = []
    for c in range(vocab):
        noise = rng.dirichlet(np.full(vocab, 1.0))
        draft_rows.append(
            normalize((1.0 - mismatch) * target.transition[c].probs + mismatch * noise)
        )
    draft = MarkovLM(vocab, target.initial, tuple(draft_rows))
    return draft, target

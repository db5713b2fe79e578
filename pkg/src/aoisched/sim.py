"""Trajectory-level Monte-Carlo simulation of channel, scheduler, and AoI.

The true channel evolves independently of the scheduler. In the no-sensing
case the scheduler tracks a belief that only feedback from its own
transmissions can reset; in the delayed-sensing case it sees the previous
slot's true state. A run is bit-reproducible from its seed: channel noise and
policy randomization draw from separately keyed streams of a counter-based
generator, so the channel path is identical across policies and cases at a
matched seed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, one_step_update, stationary_good_probability
from .mdp import Case, FrameSpec
from .solver import MixturePolicy, PolicyUndefinedError

__all__ = [
    "CHANNEL_STREAM",
    "GENERATOR_NAME",
    "GreedyPolicy",
    "POLICY_STREAM",
    "SimConfig",
    "SimResult",
    "estimate_mixture",
    "make_stream",
    "simulate",
    "simulate_greedy",
    "stationary_belief_value",
]

GENERATOR_NAME = "philox-4x64"
CHANNEL_STREAM = 0
POLICY_STREAM = 1


def make_stream(seed: int, stream: int) -> np.random.Generator:
    """Independent substream of the run's counter-based generator."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclass(frozen=True)
class SimConfig:
    horizon: int
    seed: int
    warmup: int = 1000

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least one slot")
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("warmup must be shorter than the horizon")


@dataclass
class SimResult:
    """Post-warmup averages plus enough metadata to regenerate the run."""

    avg_aoi: float
    avg_energy: float
    aoi_histogram: dict
    delivered_count: float
    aoi_se: float
    metadata: dict
    trace: list | None = field(default=None, repr=False)


@dataclass(frozen=True)
class GreedyPolicy:
    """Transmit whenever the running average energy is under budget and the
    frame's update is still undelivered. Channel-state oblivious."""

    e_max: float

    def __post_init__(self):
        if not 0.0 < self.e_max <= 1.0:
            raise ValueError(f"energy budget must lie in (0, 1], got {self.e_max}")


def stationary_belief_value(ch: ChannelModel) -> float:
    """The belief the scheduler converges to while never observing.

    Iterates the one-step map from p11 until it stops moving, which lands on
    the reachable belief closest to the stationary probability.
    """
    value = ch.p11
    for _ in range(1_000_000):
        nxt = one_step_update(ch, value)
        if abs(nxt - value) < 1e-12:
            return nxt
        value = nxt
    return value


def _batch_se(samples: np.ndarray, n_batches: int = 50) -> float:
    if len(samples) < 2 * n_batches:
        n_batches = max(2, len(samples) // 2)
    if len(samples) < 2:
        return 0.0
    size = len(samples) // n_batches
    means = samples[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def _metadata(case, frame, ch, cfg, policy_name, **extra) -> dict:
    meta = {
        "case": case.value,
        "frame_k": frame.K,
        "p11": ch.p11,
        "p01": ch.p01,
        "horizon": cfg.horizon,
        "warmup": cfg.warmup,
        "seed": cfg.seed,
        "generator": GENERATOR_NAME,
        "streams": {"channel": CHANNEL_STREAM, "policy": POLICY_STREAM},
        "policy": policy_name,
    }
    meta.update(extra)
    return meta


def _run(case, frame, ch, decide, cfg, record_trace, policy_name, meta_extra=None):
    """Common slot loop. ``decide(t, delta, k, omega, g)`` picks the action."""
    rng = make_stream(cfg.seed, CHANNEL_STREAM)
    pi_star = stationary_good_probability(ch)
    h_prev = 1 if rng.random() < pi_star else 0

    delta, k = frame.K, 1
    omega = stationary_belief_value(ch)
    hist: Counter = Counter()
    aoi_samples = np.empty(cfg.horizon - cfg.warmup)
    energy = 0
    delivered = 0
    trace = [] if record_trace else None

    for t in range(1, cfg.horizon + 1):
        u = decide(t, delta, k, omega, h_prev)
        if u not in (0, 1):
            raise PolicyUndefinedError(f"policy returned {u!r} at slot {t}")
        p_good = ch.p11 if h_prev == 1 else ch.p01
        h = 1 if rng.random() < p_good else 0
        theta = 1 if (u == 1 and h == 1) else 0

        if t > cfg.warmup:
            aoi_samples[t - cfg.warmup - 1] = delta
            hist[delta] += 1
            energy += u
            delivered += theta
        if record_trace:
            trace.append((t, delta, k, u, theta, h))

        delta = k if theta == 1 else delta + 1
        omega = ch.p11 if theta == 1 else (ch.p01 if u == 1 else one_step_update(ch, omega))
        k = frame.next_slot(k)
        h_prev = h

    n = cfg.horizon - cfg.warmup
    meta = _metadata(case, frame, ch, cfg, policy_name, **(meta_extra or {}))
    return SimResult(
        avg_aoi=float(aoi_samples.mean()),
        avg_energy=energy / n,
        aoi_histogram=dict(hist),
        delivered_count=delivered,
        aoi_se=_batch_se(aoi_samples),
        metadata=meta,
        trace=trace,
    )


def simulate(
    case: Case,
    frame: FrameSpec,
    ch: ChannelModel,
    policy,
    cfg: SimConfig,
    record_trace: bool = False,
) -> SimResult:
    """Run one policy for the configured horizon and average past the warmup.

    No-sensing policies consume (delta, k, belief) with the belief maintained
    from the scheduler's own feedback; delayed-sensing policies consume
    (delta, k, last-slot channel state).
    """
    if case is Case.NO_SENSING:
        decide = lambda t, delta, k, omega, g: policy.action(delta, k, omega)
    elif case is Case.DELAYED_SENSING:
        decide = lambda t, delta, k, omega, g: policy.action(delta, k, g)
    else:
        raise ValueError(f"unknown case {case!r}")
    return _run(case, frame, ch, decide, cfg, record_trace, type(policy).__name__)


def simulate_greedy(
    case: Case,
    frame: FrameSpec,
    ch: ChannelModel,
    e_max: float,
    cfg: SimConfig,
    record_trace: bool = False,
) -> SimResult:
    """Run the budget-tracking greedy baseline.

    The running average counts from the first slot (warmup included) and is
    defined as zero at t=1, so the first slot transmits whenever its frame's
    update is undelivered.
    """
    policy = GreedyPolicy(e_max)
    spent = 0

    def decide(t, delta, k, omega, g):
        nonlocal spent
        e_bar = 0.0 if t == 1 else spent / (t - 1)
        u = 1 if (e_bar < policy.e_max and delta >= frame.K) else 0
        spent += u
        return u

    return _run(
        case, frame, ch, decide, cfg, record_trace, "GreedyPolicy", {"e_max": e_max}
    )


def estimate_mixture(
    case: Case,
    frame: FrameSpec,
    ch: ChannelModel,
    mixture: MixturePolicy,
    cfg: SimConfig,
    per_slot: bool = False,
) -> SimResult:
    """Empirical averages of a two-policy mixture.

    Default mode simulates each component on the same channel path and
    combines the averages with the mixing weight, matching the
    randomize-once reading. ``per_slot`` instead draws which component acts
    independently every slot, for comparison.
    """
    q = mixture.q
    if per_slot:
        coins = make_stream(cfg.seed, POLICY_STREAM)

        def decide(t, delta, k, omega, g):
            chosen = mixture.pi_minus if coins.random() < q else mixture.pi_plus
            arg = omega if case is Case.NO_SENSING else g
            return chosen.action(delta, k, arg)

        return _run(
            case, frame, ch, decide, cfg, False, "MixturePolicy",
            {"q": q, "mode": "per_slot"},
        )

    if q == 1.0:
        return simulate(case, frame, ch, mixture.pi_minus, cfg)
    if q == 0.0:
        return simulate(case, frame, ch, mixture.pi_plus, cfg)

    r_minus = simulate(case, frame, ch, mixture.pi_minus, cfg)
    r_plus = simulate(case, frame, ch, mixture.pi_plus, cfg)
    hist: dict = {}
    for key, count in r_minus.aoi_histogram.items():
        hist[key] = hist.get(key, 0.0) + q * count
    for key, count in r_plus.aoi_histogram.items():
        hist[key] = hist.get(key, 0.0) + (1.0 - q) * count
    meta = _metadata(
        case, frame, ch, cfg, "MixturePolicy", q=q, mode="initial_randomization",
        components=[r_minus.metadata["policy"], r_plus.metadata["policy"]],
    )
    return SimResult(
        avg_aoi=q * r_minus.avg_aoi + (1.0 - q) * r_plus.avg_aoi,
        avg_energy=q * r_minus.avg_energy + (1.0 - q) * r_plus.avg_energy,
        aoi_histogram=hist,
        delivered_count=q * r_minus.delivered_count + (1.0 - q) * r_plus.delivered_count,
        aoi_se=q * r_minus.aoi_se + (1.0 - q) * r_plus.aoi_se,
        metadata=meta,
    )

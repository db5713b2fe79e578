"""Planning algorithms for the average-cost scheduling problem.

Contains relative value iteration (plain and threshold-aware variants for
both CSI cases), discounted value iteration used by the structural property
checks, exact policy evaluation through the stationary distribution of the
induced chain, bisection on the energy price with the two-policy mixture
construction, a brute-force oracle over all deterministic admissible
policies, and a dual-objective sweep.

All value iteration here applies a relaxation factor to the update. The slot
index cycles deterministically with the frame, so every induced chain is
periodic and the literal synchronous update oscillates instead of settling;
averaging the new iterate with the old one removes the periodicity while
keeping the same fixed point, optimal policy, and average cost.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .mdp import Case, CompiledKernel, DelayedSpace, FrameSpec, NoSensingSpace, TruncationBound, build_case
from .channel import ChannelModel

__all__ = [
    "CapExceededError",
    "MixturePolicy",
    "NonConvergenceError",
    "PolicyUndefinedError",
    "SolveReport",
    "TabularPolicy",
    "ThresholdPolicyAoI",
    "ThresholdPolicyBelief",
    "ThresholdStructureError",
    "average_energy_of_policy",
    "bisect_lambda",
    "belief_mix_inequality_violations",
    "belief_monotonicity_violations",
    "aoi_monotonicity_violations",
    "discounted_vi",
    "dual_value_sweep",
    "enumerate_and_evaluate",
    "enumerate_threshold_optimum",
    "extract_threshold_aoi",
    "extract_threshold_belief",
    "policy_averages",
    "randomization_factor",
    "rvi_plain",
    "rvi_threshold_delayed",
    "rvi_threshold_no_sensing",
    "stationary_distribution",
    "threshold_ordering_violations",
]


class NonConvergenceError(RuntimeError):
    """Iteration budget exhausted before the tolerance was met."""

    def __init__(self, message: str, span: float):
        super().__init__(message)
        self.span = span


class CapExceededError(ValueError):
    """Brute-force enumeration would exceed the configured size cap."""


class ThresholdStructureError(RuntimeError):
    """A converged policy is not of threshold type where it must be."""


class PolicyUndefinedError(KeyError):
    """A policy was queried at a state outside its table; enumeration and
    clamping of the space it was solved on do not cover the query."""


# ---------------------------------------------------------------------------
# policies


@dataclass(eq=False)
class TabularPolicy:
    """Action per enumerated state. The solver-facing policy form."""

    space: object | None
    actions: np.ndarray

    def as_threshold(self):
        if self.space is None:
            raise ValueError("cannot extract thresholds without a state space")
        if self.space.case is Case.NO_SENSING:
            return extract_threshold_belief(self.space, self.actions)
        return extract_threshold_aoi(self.space, self.actions)


@dataclass(eq=False)
class ThresholdPolicyBelief:
    """Transmit at (delta, k) exactly when the belief reaches the cutoff.

    AoI values beyond the truncation cap reuse the cap row of the same slot
    index, and belief comparisons carry a small tolerance so that beliefs
    recomputed incrementally during simulation cannot fall on the wrong side
    of a cutoff they define.
    """

    frame_k: int
    cap: int
    thresholds: Mapping[tuple[int, int], float]
    belief_tol: float = 1e-9
    actions: np.ndarray | None = None
    space: object | None = None

    def cutoff(self, delta: int, k: int) -> float:
        if delta < self.frame_k:
            return np.inf
        key = (delta, k)
        if key not in self.thresholds:
            if delta < self.cap:
                raise PolicyUndefinedError(
                    f"no cutoff for state (delta={delta}, k={k}); "
                    "the queried AoI is incompatible with the solved space"
                )
            key = (self.cap, k)
        return self.thresholds[key]

    def action(self, delta: int, k: int, omega: float) -> int:
        return int(omega >= self.cutoff(delta, k) - self.belief_tol)


@dataclass(eq=False)
class ThresholdPolicyAoI:
    """Transmit at (k, g) exactly when the AoI reaches the cutoff."""

    frame_k: int
    thresholds: Mapping[tuple[int, int], float]
    actions: np.ndarray | None = None
    space: object | None = None

    def action(self, delta: int, k: int, g: int) -> int:
        if delta < self.frame_k:
            return 0
        try:
            cutoff = self.thresholds[(k, g)]
        except KeyError as exc:
            raise PolicyUndefinedError(f"no cutoff for slot (k={k}, g={g})") from exc
        return int(delta >= cutoff)


@dataclass(eq=False)
class MixturePolicy:
    """Randomized mixture of two priced policies meeting the energy budget.

    The scheduler draws one of the two component policies once at the start
    (the minus component with probability q) and follows it forever.
    """

    pi_minus: object
    pi_plus: object
    q: float
    lam_minus: float
    lam_plus: float
    energy_minus: float
    energy_plus: float
    aoi_minus: float
    aoi_plus: float

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"mixing weight must be in [0, 1], got {self.q}")

    def analytic_energy(self) -> float:
        return self.q * self.energy_minus + (1.0 - self.q) * self.energy_plus

    def analytic_aoi(self) -> float:
        return self.q * self.aoi_minus + (1.0 - self.q) * self.aoi_plus


@dataclass(eq=False)
class SolveReport:
    """Converged solve: average cost, bias values, greedy policy, counters.

    ``span_history`` holds the sup-norm change of the bias after every sweep;
    its last entry is ``span`` and sits at or below the requested tolerance.
    """

    gain: float
    bias: np.ndarray
    policy: TabularPolicy
    iterations: int
    span: float
    argmin_evals: int
    span_history: list[float]


# ---------------------------------------------------------------------------
# value iteration


def _bellman(kern: CompiledKernel, h: np.ndarray, lam: float):
    q0 = kern.delta + kern.expected_bias(h, 0)
    q1 = kern.delta + lam + kern.expected_bias(h, 1)
    return q0, np.where(kern.admissible, q1, np.inf)


def _greedy_actions(q0: np.ndarray, q1: np.ndarray, tie_break: str) -> np.ndarray:
    if tie_break == "suspend":
        return (q1 < q0).astype(np.int8)
    if tie_break == "transmit":
        return (q1 <= q0).astype(np.int8)
    raise ValueError(f"unknown tie break {tie_break!r}")


def _finish(space, kern, h, lam, spans, argmin_evals, tie_break) -> SolveReport:
    q0, q1 = _bellman(kern, h, lam)
    gain = float(np.minimum(q0, q1)[kern.reference_index])
    actions = _greedy_actions(q0, q1, tie_break)
    return SolveReport(
        gain, h, TabularPolicy(space, actions), len(spans), spans[-1], argmin_evals, spans
    )


def rvi_plain(
    space,
    kern: CompiledKernel,
    lam: float,
    eps: float = 1e-6,
    max_iters: int = 200_000,
    relaxation: float = 0.5,
    h_init: np.ndarray | None = None,
    tie_break: str = "suspend",
) -> SolveReport:
    """Relative value iteration anchored at the reference state.

    One sweep evaluates both actions at every admissible state, takes the
    minimum, subtracts the reference value, and relaxes toward the result.
    Ties between equal action values resolve to suspension so that all
    solver variants agree action for action.
    """
    if eps <= 0:
        raise ValueError("tolerance must be positive")
    h = np.zeros(kern.n) if h_init is None else np.asarray(h_init, dtype=float).copy()
    ref = kern.reference_index
    n_argmin = int(kern.admissible.sum())
    argmin_evals = 0
    spans: list[float] = []
    for _it in range(max_iters):
        q0, q1 = _bellman(kern, h, lam)
        v = np.minimum(q0, q1)
        h_new = h + relaxation * (v - v[ref] - h)
        spans.append(float(np.abs(h_new - h).max()))
        h = h_new
        argmin_evals += n_argmin
        if spans[-1] <= eps:
            return _finish(space, kern, h, lam, spans, argmin_evals, tie_break)
    raise NonConvergenceError(
        f"relative value iteration did not reach span {eps} in {max_iters} sweeps "
        f"(last span {spans[-1]})",
        spans[-1],
    )


class _ScalarKernel:
    """Plain-python view of the kernel rows for the per-state sweep loops."""

    def __init__(self, kern: CompiledKernel, lam: float):
        self.s0a = kern.succ[:, 0, 0].tolist()
        self.s0b = kern.succ[:, 0, 1].tolist()
        self.p0a = kern.prob[:, 0, 0].tolist()
        self.p0b = kern.prob[:, 0, 1].tolist()
        self.s1a = kern.succ[:, 1, 0].tolist()
        self.s1b = kern.succ[:, 1, 1].tolist()
        self.p1a = kern.prob[:, 1, 0].tolist()
        self.p1b = kern.prob[:, 1, 1].tolist()
        self.c0 = kern.delta.tolist()
        self.c1 = (kern.delta + lam).tolist()

    def q0(self, i: int, h: list[float]) -> float:
        return self.c0[i] + self.p0a[i] * h[self.s0a[i]] + self.p0b[i] * h[self.s0b[i]]

    def q1(self, i: int, h: list[float]) -> float:
        return self.c1[i] + self.p1a[i] * h[self.s1a[i]] + self.p1b[i] * h[self.s1b[i]]


def _dk_groups(space: NoSensingSpace):
    """State indices per (delta, k), ordered by ascending belief value."""
    groups: dict[tuple[int, int], list[int]] = {}
    for i, s in enumerate(space.states):
        groups.setdefault((s.delta, s.k), []).append(i)
    omega = space.omega
    for idxs in groups.values():
        idxs.sort(key=lambda i: omega[i])
    return groups


def _threshold_sweeps(
    space,
    kern: CompiledKernel,
    lam: float,
    eps: float,
    max_iters: int,
    relaxation: float,
    h_init,
    tie_break: str,
    sweep_fn,
) -> SolveReport:
    h_arr = np.zeros(kern.n) if h_init is None else np.asarray(h_init, dtype=float).copy()
    ref = kern.reference_index
    counters = {"argmin": 0}
    spans: list[float] = []
    for _it in range(max_iters):
        h = h_arr.tolist()
        v = sweep_fn(h, counters)
        h_new = h_arr + relaxation * (v - v[ref] - h_arr)
        spans.append(float(np.abs(h_new - h_arr).max()))
        h_arr = h_new
        if spans[-1] <= eps:
            return _finish(space, kern, h_arr, lam, spans, counters["argmin"], tie_break)
    raise NonConvergenceError(
        f"threshold value iteration did not reach span {eps} in {max_iters} sweeps "
        f"(last span {spans[-1]})",
        spans[-1],
    )


def rvi_threshold_no_sensing(
    space: NoSensingSpace,
    kern: CompiledKernel,
    lam: float,
    eps: float = 1e-6,
    max_iters: int = 200_000,
    relaxation: float = 0.5,
    h_init: np.ndarray | None = None,
    tie_break: str = "suspend",
) -> SolveReport:
    """Structure-aware sweep for the belief MDP.

    Per sweep, each (delta, k) group is visited with beliefs in ascending
    order and keeps a per-group cutoff, reset at the start of the sweep. Once
    some belief transmits under the full two-action comparison, every larger
    belief in the group transmits without the comparison. Beliefs at the
    unobserved-step cap are exempt: the boundary clamp hands them a free
    belief upgrade on suspension, which can break the single crossing at
    exactly those symbols, so they always get the full comparison. Converges
    to the same fixed point as the plain sweep while performing strictly
    fewer comparisons whenever any group transmits above its lowest belief.
    """
    sk = _ScalarKernel(kern, lam)
    groups = _dk_groups(space)
    frame_k = space.frame.K
    forced = [idxs for (delta, _k), idxs in groups.items() if delta < frame_k]
    free = [idxs for (delta, _k), idxs in groups.items() if delta >= frame_k]
    omega = space.omega.tolist()
    cap = space.bound.cap
    clamped = [s.belief.steps >= cap for s in space.states]
    n = kern.n
    transmit_beats = (lambda a, b: a < b) if tie_break == "suspend" else (lambda a, b: a <= b)

    def sweep(h: list[float], counters) -> np.ndarray:
        v = np.empty(n)
        argmin = 0
        for idxs in forced:
            for i in idxs:
                v[i] = sk.q0(i, h)
        for idxs in free:
            cutoff = np.inf
            for i in idxs:
                if omega[i] >= cutoff and not clamped[i]:
                    v[i] = sk.q1(i, h)
                else:
                    q0 = sk.q0(i, h)
                    q1 = sk.q1(i, h)
                    argmin += 1
                    if transmit_beats(q1, q0):
                        v[i] = q1
                        if not clamped[i]:
                            cutoff = min(cutoff, omega[i])
                    else:
                        v[i] = q0
        counters["argmin"] += argmin
        return v

    return _threshold_sweeps(
        space, kern, lam, eps, max_iters, relaxation, h_init, tie_break, sweep
    )


def rvi_threshold_delayed(
    space: DelayedSpace,
    kern: CompiledKernel,
    lam: float,
    eps: float = 1e-6,
    max_iters: int = 200_000,
    relaxation: float = 0.5,
    h_init: np.ndarray | None = None,
    tie_break: str = "suspend",
) -> SolveReport:
    """Structure-aware sweep for the delayed-CSI MDP.

    States are visited by (k, delta, g) with per-(k, g) AoI cutoffs reset each
    sweep. A transmission discovered at AoI delta sets the cutoff of its own
    (k, g) and also lowers the good-state cutoff of the same slot to at most
    delta, since the good-state cutoff can never exceed the bad-state one.
    """
    sk = _ScalarKernel(kern, lam)
    frame_k = space.frame.K
    order = sorted(range(kern.n), key=lambda i: (space.states[i].k, space.states[i].delta, space.states[i].g))
    info = [(space.states[i].delta, space.states[i].k, space.states[i].g) for i in range(kern.n)]
    transmit_beats = (lambda a, b: a < b) if tie_break == "suspend" else (lambda a, b: a <= b)

    def sweep(h: list[float], counters) -> np.ndarray:
        v = np.empty(kern.n)
        cutoff: dict[tuple[int, int], float] = {}
        argmin = 0
        for i in order:
            delta, k, g = info[i]
            if delta < frame_k:
                v[i] = sk.q0(i, h)
                continue
            if delta >= cutoff.get((k, g), np.inf):
                v[i] = sk.q1(i, h)
                continue
            q0 = sk.q0(i, h)
            q1 = sk.q1(i, h)
            argmin += 1
            if transmit_beats(q1, q0):
                v[i] = q1
                cutoff[(k, g)] = delta
                cutoff[(k, 1)] = min(cutoff.get((k, 1), np.inf), delta)
            else:
                v[i] = q0
        counters["argmin"] += argmin
        return v

    return _threshold_sweeps(
        space, kern, lam, eps, max_iters, relaxation, h_init, tie_break, sweep
    )


def discounted_vi(
    space,
    kern: CompiledKernel,
    lam: float,
    beta: float,
    n_iters: int | None = None,
    tol: float | None = None,
) -> np.ndarray:
    """Discounted value iteration from the zero function.

    Runs exactly ``n_iters`` sweeps when given, otherwise iterates until the
    sup-norm change drops below ``tol`` (default (1-beta) * 1e-8). Used by the
    structural property checks, which need value functions, not policies.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"discount factor must be in (0, 1), got {beta}")
    if n_iters is None and tol is None:
        tol = (1.0 - beta) * 1e-8
    v = np.zeros(kern.n)
    limit = n_iters if n_iters is not None else 10_000_000
    for _ in range(limit):
        q0 = kern.delta + beta * kern.expected_bias(v, 0)
        q1 = kern.delta + lam + beta * kern.expected_bias(v, 1)
        v_new = np.minimum(q0, np.where(kern.admissible, q1, np.inf))
        change = float(np.abs(v_new - v).max())
        v = v_new
        if n_iters is None and change < tol:
            break
    else:
        if n_iters is None:
            raise NonConvergenceError("discounted value iteration stalled", change)
    return v


# ---------------------------------------------------------------------------
# policy evaluation


def _policy_actions(policy) -> np.ndarray:
    if isinstance(policy, np.ndarray):
        return policy.astype(np.int8)
    actions = getattr(policy, "actions", None)
    if actions is None:
        raise TypeError(f"cannot read an action table from {type(policy).__name__}")
    return np.asarray(actions, dtype=np.int8)


def stationary_distribution(
    kern: CompiledKernel,
    actions: np.ndarray,
    tol: float = 1e-10,
    max_iters: int = 200_000,
) -> np.ndarray:
    """Stationary law of the chain induced by a deterministic policy.

    Damped power iteration (half lazy) because the frame structure makes
    every induced chain periodic; the lazy chain shares its stationary law.
    """
    n = kern.n
    rows = np.arange(n)
    succ = kern.succ[rows, actions, :]
    prob = kern.prob[rows, actions, :]
    flat_succ = succ.ravel()
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        pushed = np.bincount(flat_succ, weights=(pi[:, None] * prob).ravel(), minlength=n)
        pi_new = 0.5 * pi + 0.5 * pushed
        residual = float(np.abs(pi_new - pi).sum())
        pi = pi_new
        if residual <= tol:
            return pi
    raise NonConvergenceError(
        f"power iteration residual {residual} above {tol} after {max_iters} rounds", residual
    )


def policy_averages(kern: CompiledKernel, policy) -> tuple[float, float]:
    """Long-run (average AoI, average energy) of a deterministic policy."""
    actions = _policy_actions(policy)
    if np.any(actions[~kern.admissible] == 1):
        raise ValueError("policy transmits at a state where transmission is inadmissible")
    pi = stationary_distribution(kern, actions)
    return float(pi @ kern.delta), float(pi @ actions)


def average_energy_of_policy(space, kern: CompiledKernel, policy) -> float:
    """Long-run fraction of slots that transmit under the policy."""
    return policy_averages(kern, policy)[1]


# ---------------------------------------------------------------------------
# constrained solve: bisection on the energy price and the policy mixture


def randomization_factor(e_max: float, e_minus: float, e_plus: float) -> float:
    """Weight on the minus component making the mixture spend e_max exactly."""
    if e_minus == e_plus:
        return 1.0
    q = (e_max - e_plus) / (e_minus - e_plus)
    if not -1e-9 <= q <= 1.0 + 1e-9:
        raise ValueError(
            f"energies {e_minus}, {e_plus} do not bracket the budget {e_max}"
        )
    return min(max(q, 0.0), 1.0)


def bisect_lambda(
    case: Case,
    frame: FrameSpec,
    ch: ChannelModel,
    bound: TruncationBound,
    e_max: float,
    eps: float = 1e-6,
    eps_lam: float = 1e-4,
    lam_hi_init: float = 1.0,
    max_doublings: int = 60,
    relaxation: float = 0.5,
    max_iters: int = 200_000,
) -> MixturePolicy:
    """Smallest energy price meeting the budget, plus the two-policy mixture.

    Doubles the price from ``lam_hi_init`` until the priced optimum is
    feasible, then bisects down to width ``eps_lam``. The returned mixture
    pairs the last infeasible price's policy with the last feasible one and
    mixes them so that the average energy equals the budget exactly. A
    feasible unpriced optimum short-circuits to a single-policy mixture.
    """
    if not 0.0 < e_max <= 1.0:
        raise ValueError(f"energy budget must lie in (0, 1], got {e_max}")
    space, kern = build_case(case, frame, ch, bound)

    def solve(lam: float, warm: np.ndarray | None):
        report = rvi_plain(
            space, kern, lam, eps=eps, max_iters=max_iters,
            relaxation=relaxation, h_init=warm,
        )
        aoi, energy = policy_averages(kern, report.policy)
        return report, aoi, energy

    report0, aoi0, energy0 = solve(0.0, None)
    if energy0 <= e_max:
        single = report0.policy.as_threshold()
        return MixturePolicy(single, single, 1.0, 0.0, 0.0, energy0, energy0, aoi0, aoi0)

    lo, report_lo, aoi_lo, energy_lo = 0.0, report0, aoi0, energy0
    hi = lam_hi_init
    report_hi, aoi_hi, energy_hi = solve(hi, report0.bias)
    doublings = 0
    while energy_hi > e_max:
        doublings += 1
        if doublings > max_doublings:
            raise NonConvergenceError(
                f"no feasible price found below {hi} after {max_doublings} doublings",
                energy_hi - e_max,
            )
        lo, report_lo, aoi_lo, energy_lo = hi, report_hi, aoi_hi, energy_hi
        hi *= 2.0
        report_hi, aoi_hi, energy_hi = solve(hi, report_hi.bias)

    while hi - lo > eps_lam:
        mid = 0.5 * (lo + hi)
        report_mid, aoi_mid, energy_mid = solve(mid, report_lo.bias)
        if energy_mid <= e_max:
            hi, report_hi, aoi_hi, energy_hi = mid, report_mid, aoi_mid, energy_mid
        else:
            lo, report_lo, aoi_lo, energy_lo = mid, report_mid, aoi_mid, energy_mid

    q = randomization_factor(e_max, energy_lo, energy_hi)
    return MixturePolicy(
        report_lo.policy.as_threshold(),
        report_hi.policy.as_threshold(),
        q,
        lo,
        hi,
        energy_lo,
        energy_hi,
        aoi_lo,
        aoi_hi,
    )


def dual_value_sweep(
    case: Case,
    frame: FrameSpec,
    ch: ChannelModel,
    bound: TruncationBound,
    e_max: float,
    lam_grid,
    eps: float = 1e-8,
    relaxation: float = 0.5,
    max_iters: int = 200_000,
) -> list[tuple[float, float]]:
    """Dual objective (priced optimum minus priced budget) along a price grid.

    Its maximum lower-bounds the constrained optimum and matches it when the
    grid resolves the optimal price.
    """
    grid = [float(lam) for lam in lam_grid]
    if not grid or any(lam < 0 for lam in grid):
        raise ValueError("price grid must be non-empty and non-negative")
    space, kern = build_case(case, frame, ch, bound)
    out = []
    warm = None
    for lam in grid:
        report = rvi_plain(
            space, kern, lam, eps=eps, max_iters=max_iters,
            relaxation=relaxation, h_init=warm,
        )
        warm = report.bias
        out.append((lam, report.gain - lam * e_max))
    return out


# ---------------------------------------------------------------------------
# brute-force oracle


def _reachable_from(kern: CompiledKernel, start: int) -> list[int]:
    seen = {start}
    frontier = [start]
    while frontier:
        i = frontier.pop()
        for u in (0, 1):
            if u == 1 and not kern.admissible[i]:
                continue
            for b in (0, 1):
                if kern.prob[i, u, b] > 0.0:
                    j = int(kern.succ[i, u, b])
                    if j not in seen:
                        seen.add(j)
                        frontier.append(j)
    return sorted(seen)


def _exact_average_cost(P: np.ndarray, cost: np.ndarray, start: int) -> float:
    """Average cost from ``start`` of a finite chain, via its recurrent classes."""
    n = P.shape[0]
    reach = (P > 0.0) | np.eye(n, dtype=bool)
    for _ in range(max(1, int(np.ceil(np.log2(n))) + 1)):
        reach = reach | (reach @ reach)
    recurrent = np.array([bool(np.all(~reach[i] | reach[:, i])) for i in range(n)])

    classes: list[list[int]] = []
    assigned = np.full(n, -1)
    for i in range(n):
        if not recurrent[i] or assigned[i] >= 0:
            continue
        members = [j for j in range(n) if recurrent[j] and reach[i, j] and reach[j, i]]
        for j in members:
            assigned[j] = len(classes)
        classes.append(members)

    gains = []
    for members in classes:
        sub = P[np.ix_(members, members)]
        m = len(members)
        a = sub.T - np.eye(m)
        a[-1, :] = 1.0
        b = np.zeros(m)
        b[-1] = 1.0
        pi = np.linalg.solve(a, b)
        gains.append(float(pi @ cost[members]))

    if recurrent[start]:
        return gains[int(assigned[start])]

    transient = [i for i in range(n) if not recurrent[i]]
    t_index = {i: t for t, i in enumerate(transient)}
    ptt = P[np.ix_(transient, transient)]
    rhs = np.zeros((len(transient), len(classes)))
    for c, members in enumerate(classes):
        rhs[:, c] = P[np.ix_(transient, members)].sum(axis=1)
    absorb = np.linalg.solve(np.eye(len(transient)) - ptt, rhs)
    return float(absorb[t_index[start]] @ np.array(gains))


class _OracleEnumeration:
    """Shared machinery for the brute-force sweeps over all policies.

    Only the states reachable from the reference matter for the average cost
    from the reference; actions elsewhere are fixed to suspension.
    """

    def __init__(self, space, kern: CompiledKernel, lam: float, cap: int):
        self.space = space
        self.kern = kern
        self.lam = lam
        reachable = _reachable_from(kern, kern.reference_index)
        local = {g: i for i, g in enumerate(reachable)}
        self.free = [g for g in reachable if kern.admissible[g]]
        if len(self.free) > cap:
            raise CapExceededError(
                f"{len(self.free)} free states exceed the cap of {cap} "
                f"(2**{len(self.free)} policies)"
            )
        nr = len(reachable)
        self.start = local[kern.reference_index]
        self.base_cost = kern.delta[reachable]
        self.rows = {}
        for u in (0, 1):
            mat = np.zeros((nr, nr))
            for i, g in enumerate(reachable):
                if u == 1 and not kern.admissible[g]:
                    continue
                for b in (0, 1):
                    p = kern.prob[g, u, b]
                    if p > 0.0:
                        mat[i, local[int(kern.succ[g, u, b])]] += p
            self.rows[u] = mat
        self.free_local = [local[g] for g in self.free]

    def gain_of(self, bits) -> float:
        P = self.rows[0].copy()
        cost = self.base_cost.copy()
        for pos, bit in zip(self.free_local, bits):
            if bit:
                P[pos] = self.rows[1][pos]
                cost[pos] += self.lam
        return _exact_average_cost(P, cost, self.start)

    def gains(self):
        for bits in itertools.product((0, 1), repeat=len(self.free)):
            yield self.gain_of(bits), bits

    def materialize(self, bits: tuple[int, ...]) -> np.ndarray:
        actions = np.zeros(self.kern.n, dtype=np.int8)
        for g, bit in zip(self.free, bits):
            actions[g] = bit
        return actions


def enumerate_and_evaluate(
    space, kern: CompiledKernel, lam: float, cap: int = 14
) -> tuple[float, TabularPolicy]:
    """Exact minimizer over all deterministic admissible policies.

    Evaluates every induced chain exactly through its recurrent classes.
    Independent of the value-iteration machinery; intended as the ground
    truth for it. Ties keep the first policy in enumeration order.
    """
    sweep = _OracleEnumeration(space, kern, lam, cap)
    best_gain = np.inf
    best_bits: tuple[int, ...] | None = None
    for gain, bits in sweep.gains():
        if gain < best_gain - 1e-15:
            best_gain = gain
            best_bits = bits
    return best_gain, TabularPolicy(space, sweep.materialize(best_bits))


def enumerate_threshold_optimum(
    space, kern: CompiledKernel, lam: float, cap: int = 14
) -> tuple[float, TabularPolicy]:
    """Exact minimizer over cutoff rules only.

    A cutoff rule transmits at a (delta, k) group exactly from some belief
    upward, or at a (k, g) group from some AoI upward. When its best gain
    matches ``enumerate_and_evaluate``, restricting the search to threshold
    policies provably loses nothing on that instance. The comparison cannot
    be made through arbitrary minimizers: the average cost is flat across
    states the optimal chain never revisits, so brute-force ties are free to
    look non-threshold there.
    """
    sweep = _OracleEnumeration(space, kern, lam, cap)
    if space.case is Case.NO_SENSING:
        grouped = sorted(_dk_groups(space).items(), key=lambda kv: (kv[0][1], kv[0][0]))
        groups = [idxs for (delta, _k), idxs in grouped if delta >= space.frame.K]
    else:
        by_kg: dict[tuple[int, int], list[int]] = {}
        for i, s in enumerate(space.states):
            if s.delta >= space.frame.K:
                by_kg.setdefault((s.k, s.g), []).append(i)
        for idxs in by_kg.values():
            idxs.sort(key=lambda i: space.states[i].delta)
        groups = [by_kg[key] for key in sorted(by_kg)]

    n_rules = 1
    for idxs in groups:
        n_rules *= len(idxs) + 1
    if n_rules > 2 ** cap:
        raise CapExceededError(f"{n_rules} cutoff rules exceed the cap of 2**{cap}")

    free_pos = {g: i for i, g in enumerate(sweep.free)}
    best_gain, best_actions = np.inf, None
    seen: set[tuple[int, ...]] = set()
    for choice in itertools.product(*[range(len(idxs) + 1) for idxs in groups]):
        actions = np.zeros(kern.n, dtype=np.int8)
        for idxs, start in zip(groups, choice):
            actions[idxs[start:]] = 1
        bits = tuple(int(actions[g]) for g in sweep.free)
        if bits in seen:
            continue
        seen.add(bits)
        gain = sweep.gain_of(bits)
        if gain < best_gain - 1e-15:
            best_gain, best_actions = gain, actions
    return best_gain, TabularPolicy(space, best_actions)


# ---------------------------------------------------------------------------
# threshold extraction and structural checks


def extract_threshold_belief(space: NoSensingSpace, actions) -> ThresholdPolicyBelief:
    """Belief cutoffs of a policy on the belief MDP.

    Fails if any (delta, k) group switches action more than once along
    ascending beliefs; the converged optimum never does, except possibly at
    the belief symbols sitting at the unobserved-step cap, whose suspension
    successor is moved by the boundary clamp. Those symbols are left out of
    the pattern check and the cutoff, mirroring the interior-state scoping of
    the value-function checks; the exact action table is kept regardless.
    """
    acts = _policy_actions(actions if isinstance(actions, np.ndarray) else actions)
    thresholds: dict[tuple[int, int], float] = {}
    omega = space.omega
    cap = space.bound.cap
    for (delta, k), idxs in sorted(_dk_groups(space).items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if delta < space.frame.K:
            if np.any(acts[idxs] == 1):
                raise ThresholdStructureError(
                    f"policy transmits at inadmissible (delta={delta}, k={k})"
                )
            continue
        interior = [i for i in idxs if space.states[i].belief.steps < cap]
        pattern = acts[interior]
        switches = np.flatnonzero(np.diff(pattern.astype(np.int8)))
        if pattern.max(initial=0) == 1 and (len(switches) > 1 or pattern[-1] == 0):
            raise ThresholdStructureError(
                f"actions at (delta={delta}, k={k}) are not of threshold type: "
                f"{pattern.tolist()} along ascending beliefs"
            )
        first = np.flatnonzero(pattern)
        thresholds[(delta, k)] = float(omega[interior[first[0]]]) if len(first) else np.inf
    return ThresholdPolicyBelief(
        frame_k=space.frame.K,
        cap=space.bound.cap,
        thresholds=thresholds,
        actions=acts,
        space=space,
    )


def extract_threshold_aoi(space: DelayedSpace, actions) -> ThresholdPolicyAoI:
    """AoI cutoffs of a policy on the delayed-CSI MDP, one per (k, g)."""
    acts = _policy_actions(actions if isinstance(actions, np.ndarray) else actions)
    groups: dict[tuple[int, int], list[int]] = {}
    for i, s in enumerate(space.states):
        groups.setdefault((s.k, s.g), []).append(i)
    thresholds: dict[tuple[int, int], float] = {}
    for (k, g), idxs in sorted(groups.items()):
        idxs.sort(key=lambda i: space.states[i].delta)
        pattern = acts[idxs]
        deltas = [space.states[i].delta for i in idxs]
        cut = np.inf
        for d, a in zip(deltas, pattern):
            if a == 1 and d < cut:
                cut = d
            if a == 0 and d >= max(cut, space.frame.K):
                raise ThresholdStructureError(
                    f"actions at (k={k}, g={g}) are not of threshold type: "
                    f"{pattern.tolist()} along ascending AoI"
                )
        thresholds[(k, g)] = cut
    return ThresholdPolicyAoI(
        frame_k=space.frame.K, thresholds=thresholds, actions=acts, space=space
    )


def threshold_ordering_violations(policy: ThresholdPolicyAoI) -> list[tuple]:
    """Slots where the good-state cutoff exceeds the bad-state cutoff."""
    out = []
    ks = sorted({k for (k, _g) in policy.thresholds})
    for k in ks:
        good = policy.thresholds.get((k, 1), np.inf)
        bad = policy.thresholds.get((k, 0), np.inf)
        if good > bad:
            out.append((k, good, bad))
    return out


def _interior_mask(space, slack_aoi: int = 1) -> np.ndarray:
    """States whose successors are untouched by the truncation clamps."""
    cap = space.bound.cap
    mask = space.delta + slack_aoi <= cap
    if space.case is Case.NO_SENSING:
        steps = np.array([s.belief.steps for s in space.states])
        mask &= steps + 1 <= cap
    return mask


def aoi_monotonicity_violations(
    space, values: np.ndarray, interior_only: bool = True, slack: float = 1e-7
) -> list[tuple]:
    """Pairs of states equal but for a larger AoI where the value drops."""
    keep = _interior_mask(space) if interior_only else np.ones(space.n, dtype=bool)
    groups: dict[tuple, list[int]] = {}
    for i, s in enumerate(space.states):
        key = (s.k, s.belief) if space.case is Case.NO_SENSING else (s.k, s.g)
        groups.setdefault(key, []).append(i)
    out = []
    for idxs in groups.values():
        idxs.sort(key=lambda i: space.states[i].delta)
        for a, b in zip(idxs, idxs[1:]):
            if keep[a] and keep[b] and values[b] < values[a] - slack:
                out.append((space.states[a], space.states[b], values[a], values[b]))
    return out


def belief_monotonicity_violations(
    space: NoSensingSpace, values: np.ndarray, interior_only: bool = True, slack: float = 1e-7
) -> list[tuple]:
    """Belief pairs at one (delta, k) where a larger belief costs more."""
    keep = _interior_mask(space) if interior_only else np.ones(space.n, dtype=bool)
    out = []
    for idxs in _dk_groups(space).values():
        for a, b in zip(idxs, idxs[1:]):
            if keep[a] and keep[b] and values[b] > values[a] + slack:
                out.append((space.states[a], space.states[b], values[a], values[b]))
    return out


def belief_mix_inequality_violations(
    space: NoSensingSpace,
    values: np.ndarray,
    lam: float,
    interior_only: bool = True,
    slack: float = 1e-7,
) -> list[tuple]:
    """Violations of the mixing bound on value functions.

    For in-space beliefs y <= z <= x at one (delta, k) and the weight w with
    z = w*x + (1-w)*y, checks (1-w)*lam + w*V(x) + (1-w)*V(y) >= V(z).
    """
    keep = _interior_mask(space) if interior_only else np.ones(space.n, dtype=bool)
    omega = space.omega
    out = []
    for (delta, k), idxs in _dk_groups(space).items():
        idxs = [i for i in idxs if keep[i]]
        if len(idxs) < 3:
            continue
        w_vals = omega[idxs]
        v_vals = values[idxs]
        # ascending beliefs: x runs above z, y below
        for zi in range(1, len(idxs) - 1):
            hi = np.arange(zi + 1, len(idxs))
            lo = np.arange(0, zi)
            span = w_vals[hi][:, None] - w_vals[lo][None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                w = (w_vals[zi] - w_vals[lo][None, :]) / span
            lhs = (1.0 - w) * lam + w * v_vals[hi][:, None] + (1.0 - w) * v_vals[lo][None, :]
            bad = (span > 0) & (lhs < v_vals[zi] - slack)
            for hi_i, lo_i in zip(*np.nonzero(bad)):
                out.append(
                    (
                        (delta, k),
                        omega[idxs[hi[hi_i]]],
                        omega[idxs[lo[lo_i]]],
                        w_vals[zi],
                        float(lhs[hi_i, lo_i]),
                        float(v_vals[zi]),
                    )
                )
    return out

"""Exact forward error probability and belief-state backward induction.

The forward pass computes the terminal-error probability of a fixed
strategy by propagating the metric-state distribution conditioned on the
true message (equivariant rules need one pass; others are averaged over
the three conditionings).  The backward pass computes the minimum error
over all metric-state strategies under the bayes transition law; the
value function is permutation symmetric, so it is tabulated on sorted
states.  Arithmetic is exact rational or log-domain float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .belief import MetricState, QuerySet, apply_outcome, leaders, posteriors
from .channel import ChannelParams, Number
from .strategy import StrategyRule, select_query

ARITHMETIC_MODES = ("rational", "log-float")


class ResourceCapError(RuntimeError):
    """Raised when a dynamic program would exceed its configured state cap."""


def _check_mode(ch: ChannelParams, mode: str) -> None:
    if mode not in ARITHMETIC_MODES:
        raise ValueError(f"arithmetic mode must be one of {ARITHMETIC_MODES}, got {mode!r}")
    if mode == "rational":
        ch.require_exact("rational-mode dynamic programming")


def _logadd(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def conditional_decode_error(s: MetricState, true: int, exact: bool = True) -> Number:
    """Error of uniform-tie max-posterior decoding given the true message."""
    lead = leaders(s)
    if true not in lead:
        return Fraction(1) if exact else 1.0
    if exact:
        return 1 - Fraction(1, len(lead))
    return 1.0 - 1.0 / len(lead)


def forward_distribution(
    n: int,
    ch: ChannelParams,
    rule: StrategyRule,
    mode: str = "rational",
    true: int = 1,
) -> dict[MetricState, Number]:
    """State distribution after n uses given the true message.

    Rational mode returns exact probabilities; log-float mode returns
    natural-log probabilities.
    """
    _check_mode(ch, mode)
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    start: MetricState = (0, 0, 0)
    dist: dict[MetricState, Number]
    dist = {start: Fraction(1)} if mode == "rational" else {start: 0.0}
    p, q = ch.p, ch.q
    for _ in range(n):
        nxt: dict[MetricState, Number] = {}
        for s, pr in dist.items():
            for j, w in select_query(rule, s, ch).items():
                q_obj = QuerySet.singleton(j)
                for y in (0, 1):
                    x = 0 if true == j else 1
                    py = q if y == x else p
                    ns = apply_outcome(s, q_obj, y)
                    if mode == "rational":
                        mass = pr * w * py
                        nxt[ns] = nxt.get(ns, Fraction(0)) + mass
                    else:
                        term = pr + math.log(float(w)) + math.log(py)
                        nxt[ns] = _logadd(nxt.get(ns, -math.inf), term)
        dist = nxt
    return dist


def _terminal_error(dist: dict[MetricState, Number], true: int, mode: str) -> Number:
    if mode == "rational":
        return sum(
            pr * conditional_decode_error(s, true) for s, pr in dist.items()
        )
    acc = -math.inf
    for s, logp in dist.items():
        err = conditional_decode_error(s, true, exact=False)
        if err > 0.0:
            acc = _logadd(acc, logp + math.log(err))
    return math.exp(acc)


def forward_error_prob(
    n: int, ch: ChannelParams, rule: StrategyRule, mode: str = "rational"
) -> Number:
    """Terminal decoding-error probability of ``rule`` at horizon n."""
    _check_mode(ch, mode)
    if rule.equivariant:
        dist = forward_distribution(n, ch, rule, mode, true=1)
        return _terminal_error(dist, 1, mode)
    parts = [
        _terminal_error(forward_distribution(n, ch, rule, mode, true=t), t, mode)
        for t in (1, 2, 3)
    ]
    return sum(parts) / 3


@lru_cache(maxsize=200_000)
def _sorted_successors(s: MetricState) -> tuple[tuple[MetricState, MetricState], ...]:
    """Per positional query: (state after y=1, state after y=0), sorted."""
    out = []
    for j in (1, 2, 3):
        q = QuerySet.singleton(j)
        ns1 = tuple(sorted(apply_outcome(s, q, 1)))
        ns0 = tuple(sorted(apply_outcome(s, q, 0)))
        out.append((ns1, ns0))
    return tuple(out)


def sorted_lattice(kmax: int) -> list[MetricState]:
    """All sorted metric states (0, a, b), a <= b <= kmax."""
    return [(0, a, b) for b in range(kmax + 1) for a in range(b + 1)]


def reachable_layers(n: int) -> list[set[MetricState]]:
    """Sorted states reachable from (0,0,0) in exactly k steps, k = 0..n."""
    layers = [{(0, 0, 0)}]
    for _ in range(n):
        nxt: set[MetricState] = set()
        for s in layers[-1]:
            for ns1, ns0 in _sorted_successors(s):
                nxt.add(ns1)
                nxt.add(ns0)
        layers.append(nxt)
    return layers


FLOAT_TIE_TOL = 1e-12


@dataclass
class ValueTable:
    """Backward-induction values V_t(s) and argmax query sets on sorted states."""

    horizon: int
    mode: str
    tie_tolerance: float
    values: dict[tuple[int, MetricState], Number] = field(repr=False)
    argmax: dict[tuple[int, MetricState], frozenset[int]] = field(repr=False)

    def optimal_error(self, t: int | None = None) -> Number:
        """Minimum error probability at horizon t (defaults to the table's)."""
        t = self.horizon if t is None else t
        return 1 - self.values[(t, (0, 0, 0))]


def _query_values(
    s: MetricState,
    prev: dict[MetricState, Number],
    ch: ChannelParams,
) -> list[Number]:
    p, q = ch.p, ch.q
    pi = posteriors(s, ch)
    succ = _sorted_successors(s)
    vals = []
    for j in (1, 2, 3):
        p1 = pi[j - 1] * p + (1 - pi[j - 1]) * q
        ns1, ns0 = succ[j - 1]
        vals.append(p1 * prev[ns1] + (1 - p1) * prev[ns0])
    return vals


def bellman_optimum(
    n: int,
    ch: ChannelParams,
    mode: str = "rational",
    probability_mode: str = "bayes",
    state_cap: int = 2_000_000,
) -> tuple[Number, ValueTable]:
    """Minimum achievable error over all metric-state strategies.

    Backward induction over the sorted-state lattice; values in log-float
    mode are plain doubles (they live in [1/3, 1], no underflow).  Returns
    (optimal error at horizon n, full value table); the table also yields
    every shorter horizon via V_t((0,0,0)).
    """
    _check_mode(ch, mode)
    if probability_mode != "bayes":
        raise ValueError(
            "backward induction needs the bayes transition law; the paper-mode "
            "probabilities are not a coherent chain"
        )
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    exact = mode == "rational"
    total_states = sum((k + 1) * (k + 2) // 2 for k in range(n + 1))
    if total_states > state_cap:
        raise ResourceCapError(
            f"backward induction needs {total_states} state evaluations, cap is {state_cap}"
        )
    tol = 0.0 if exact else FLOAT_TIE_TOL
    values: dict[tuple[int, MetricState], Number] = {}
    argmax: dict[tuple[int, MetricState], frozenset[int]] = {}
    prev: dict[MetricState, Number] = {}
    for s in sorted_lattice(n):
        v = max(posteriors(s, ch))
        prev[s] = v
        values[(0, s)] = v
    for t in range(1, n + 1):
        cur: dict[MetricState, Number] = {}
        for s in sorted_lattice(n - t):
            vals = _query_values(s, prev, ch)
            best = max(vals)
            cur[s] = best
            values[(t, s)] = best
            if exact:
                arg = frozenset(j for j, v in zip((1, 2, 3), vals) if v == best)
            else:
                arg = frozenset(j for j, v in zip((1, 2, 3), vals) if v >= best - tol)
            argmax[(t, s)] = arg
        prev = cur
    table = ValueTable(horizon=n, mode=mode, tie_tolerance=tol, values=values, argmax=argmax)
    return table.optimal_error(), table


def optimal_query_report(
    n: int, ch: ChannelParams, mode: str = "rational", detail: bool = False
) -> dict:
    """Check, state by state, that some fewest-votes query is Bellman-optimal.

    For every reachable (remaining time t, state): the verdict is "member"
    when the argmax query set meets the fewest-votes set; the deficit is
    the value lost by the best fewest-votes query.  Strict multi-step
    dominance is counted but not asserted.  ``detail`` adds one verdict row
    per (t, state).
    """
    pe_star, table = bellman_optimum(n, ch, mode=mode)
    exact = mode == "rational"
    layers = reachable_layers(n)
    per_horizon = []
    per_state = []
    all_member = True
    overall_deficit: Number = Fraction(0) if exact else 0.0
    strict = tied = 0
    for t in range(1, n + 1):
        states = sorted(layers[n - t])
        max_deficit: Number = Fraction(0) if exact else 0.0
        worst_state = None
        members = 0
        prev = {s2: table.values[(t - 1, s2)] for s2 in sorted_lattice(n - t + 1)}
        for s in states:
            vals = _query_values(s, prev, ch)
            best = max(vals)
            lead = leaders(s)
            lead_best = max(vals[j - 1] for j in lead)
            deficit = best - lead_best
            member = bool(set(lead) & set(table.argmax[(t, s)]))
            members += member
            if not member:
                all_member = False
            if deficit > max_deficit:
                max_deficit = deficit
                worst_state = s
            others = [vals[j - 1] for j in (1, 2, 3) if j not in lead]
            if member and others and all(v < best for v in others):
                strict += 1
            else:
                tied += 1
            if detail:
                per_state.append(
                    {
                        "t": t,
                        "state": s,
                        "verdict": "member" if member else "outside",
                        "deficit": deficit,
                        "argmax": sorted(table.argmax[(t, s)]),
                        "fewest_votes": list(lead),
                    }
                )
        if max_deficit > overall_deficit:
            overall_deficit = max_deficit
        per_horizon.append(
            {
                "t": t,
                "states": len(states),
                "members": members,
                "max_deficit": max_deficit,
                "worst_state": worst_state,
            }
        )
    report: dict = {
        "horizon": n,
        "p": ch.p,
        "mode": mode,
        "optimal_error": pe_star,
        "per_horizon": per_horizon,
        "overall": {
            "all_member": all_member,
            "max_deficit": overall_deficit,
            "strict_states": strict,
            "non_strict_states": tied,
        },
    }
    if detail:
        report["per_state"] = per_state
    return report


def _log_of(value: Number, mode: str) -> float:
    if mode == "rational":
        f = Fraction(value)
        return math.log(f.numerator) - math.log(f.denominator)
    return math.log(value)


def error_curve(
    ch: ChannelParams,
    rule: StrategyRule | str,
    n_max: int,
    mode: str = "rational",
) -> list[tuple[int, Number, float]]:
    """Rows (n, P_e, -ln(P_e)/n) for n = 1..n_max, one frontier pass.

    ``rule`` may be a StrategyRule or the string "optimal" for the
    backward-induction minimum.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    rows: list[tuple[int, Number, float]] = []
    if rule == "optimal":
        _, table = bellman_optimum(n_max, ch, mode=mode)
        for n in range(1, n_max + 1):
            pe = table.optimal_error(n)
            rows.append((n, pe, -_log_of(pe, mode) / n))
        return rows
    assert isinstance(rule, StrategyRule)
    _check_mode(ch, mode)
    trues = (1,) if rule.equivariant else (1, 2, 3)
    dists: dict[int, dict[MetricState, Number]]
    if mode == "rational":
        dists = {t: {(0, 0, 0): Fraction(1)} for t in trues}
    else:
        dists = {t: {(0, 0, 0): 0.0} for t in trues}
    p, q = ch.p, ch.q
    for n in range(1, n_max + 1):
        for t in trues:
            dist = dists[t]
            nxt: dict[MetricState, Number] = {}
            for s, pr in dist.items():
                for j, w in select_query(rule, s, ch).items():
                    q_obj = QuerySet.singleton(j)
                    for y in (0, 1):
                        x = 0 if t == j else 1
                        py = q if y == x else p
                        ns = apply_outcome(s, q_obj, y)
                        if mode == "rational":
                            nxt[ns] = nxt.get(ns, Fraction(0)) + pr * w * py
                        else:
                            term = pr + math.log(float(w)) + math.log(py)
                            nxt[ns] = _logadd(nxt.get(ns, -math.inf), term)
            dists[t] = nxt
        parts = [_terminal_error(dists[t], t, mode) for t in trues]
        pe = parts[0] if len(parts) == 1 else sum(parts) / 3
        rows.append((n, pe, -_log_of(pe, mode) / n))
    return rows

"""Query strategies: metric state -> distribution over canonical queries."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .belief import MetricState, QuerySet, apply_outcome, check_state, leaders
from .channel import TAG_NOISE, TAG_TIE, ChannelParams, Seed, bernoulli_bit, counter_hash, uniform_index

QueryWeights = dict[int, Fraction]


@dataclass(frozen=True)
class StrategyRule:
    """A strategy is a pure function of the metric state.

    kinds: ``max-posterior`` queries a fewest-votes message (ties broken by
    ``tie_policy``); ``fixed`` always queries one message; ``round-robin``
    cycles with the vote total (kept a state function on purpose);
    ``table`` looks the state up in an explicit map.
    """

    kind: str = "max-posterior"
    tie_policy: str = "uniform-random"  # or "lowest-index"
    fixed_query: int | None = None
    table: dict[MetricState, QueryWeights] | None = field(default=None, hash=False)

    def __post_init__(self):
        if self.kind not in ("max-posterior", "fixed", "round-robin", "table"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.tie_policy not in ("uniform-random", "lowest-index"):
            raise ValueError(f"unknown tie policy {self.tie_policy!r}")
        if self.kind == "fixed" and self.fixed_query not in (1, 2, 3):
            raise ValueError("fixed strategy needs fixed_query in 1..3")
        if self.kind == "table" and self.table is None:
            raise ValueError("table strategy needs a table")

    @property
    def equivariant(self) -> bool:
        """True when the rule commutes with message relabeling, so the exact
        DP may condition on a single true message."""
        return self.kind == "max-posterior" and self.tie_policy == "uniform-random"


MAX_POSTERIOR = StrategyRule()


def select_query(rule: StrategyRule, s: MetricState, ch: ChannelParams) -> QueryWeights:
    """Distribution over canonical singleton queries for one state.

    The max-posterior rule depends only on the fewest-votes set, never on
    posterior magnitudes (at p = 1/2 all posteriors tie, but the vote
    ordering still defines the rule).
    """
    check_state(s)
    if rule.kind == "max-posterior":
        lead = leaders(s)
        if rule.tie_policy == "lowest-index":
            return {lead[0]: Fraction(1)}
        w = Fraction(1, len(lead))
        return {j: w for j in lead}
    if rule.kind == "fixed":
        return {rule.fixed_query: Fraction(1)}
    if rule.kind == "round-robin":
        return {(sum(s) % 3) + 1: Fraction(1)}
    assert rule.table is not None
    try:
        weights = rule.table[s]
    except KeyError:
        raise ValueError(f"table strategy has no entry for reachable state {s}") from None
    if sum(weights.values()) != 1:
        raise ValueError(f"table weights for state {s} do not sum to 1")
    return weights


def step(
    rule: StrategyRule,
    s: MetricState,
    ch: ChannelParams,
    true: int,
    seed: Seed,
    t: int,
) -> tuple[QuerySet, int, MetricState]:
    """One simulated channel use; fully reproducible from (seed, trial, t)."""
    ch.require_float("step")
    weights = select_query(rule, s, ch)
    choices = sorted(weights)
    if len(choices) == 1:
        j = choices[0]
    else:
        h = counter_hash(seed.value, seed.trial, TAG_TIE, t)
        if all(weights[c] == weights[choices[0]] for c in choices):
            j = choices[uniform_index(h, len(choices))]
        else:
            u = Fraction(h, 1 << 64)
            acc = Fraction(0)
            j = choices[-1]
            for c in choices:
                acc += weights[c]
                if u < acc:
                    j = c
                    break
    q = QuerySet.singleton(j)
    flip = bernoulli_bit(counter_hash(seed.value, seed.trial, TAG_NOISE, t), ch.p)
    x = 0 if true in q.members else 1
    y = x ^ flip
    return q, y, apply_outcome(s, q, y)


def load_table(path: str | Path) -> StrategyRule:
    """Read a table rule from JSON: a list of {state: [i,j,l], query: k} or
    {state: ..., distribution: {"k": [num, den], ...}} entries."""
    entries = json.loads(Path(path).read_text())
    table: dict[MetricState, QueryWeights] = {}
    for entry in entries:
        state = tuple(entry["state"])
        if "query" in entry:
            table[state] = {int(entry["query"]): Fraction(1)}
        else:
            table[state] = {
                int(k): Fraction(v[0], v[1]) for k, v in entry["distribution"].items()
            }
    return StrategyRule(kind="table", table=table)

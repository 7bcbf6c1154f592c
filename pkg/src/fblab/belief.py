"""Vote-count metric states, posteriors, and one-step query analysis.

A metric state is the triple of negative-vote counts above the running
minimum; it is a sufficient statistic for the decoder.  Posteriors follow
pi_i proportional to z**m_i with z = p/q.  Three outcome-probability modes
coexist:

* ``bayes``       -- mix over the queried message's own posterior; this is
                     the coherent transition law (fixed-message posteriors
                     are martingales under it).
* ``conditional`` -- condition on a known true message (used by the exact
                     forward dynamic program and the simulator).
* ``paper``       -- the printed one-step law that always mixes over the
                     *leading* message's posterior, whichever message is
                     queried.  It differs from bayes for queries off the
                     leader; both are kept first-class on purpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .channel import ChannelParams, Number

MetricState = tuple[int, int, int]


@dataclass(frozen=True)
class QuerySet:
    """Canonical yes/no question: "is the true message theta_index?".

    A two-element query is statistically identical to the complementary
    singleton with the answer inverted, so it canonicalizes to
    (complement index, inverted=True).
    """

    index: int  # 1, 2 or 3
    inverted: bool = False

    @staticmethod
    def singleton(index: int) -> "QuerySet":
        if index not in (1, 2, 3):
            raise ValueError(f"message index must be 1..3, got {index}")
        return QuerySet(index)

    @staticmethod
    def from_members(members) -> "QuerySet":
        mem = frozenset(members)
        if not mem or not mem <= {1, 2, 3} or len(mem) == 3:
            raise ValueError(f"query must be a nonempty proper subset of {{1,2,3}}: {set(members)}")
        if len(mem) == 1:
            return QuerySet(next(iter(mem)))
        (missing,) = {1, 2, 3} - mem
        return QuerySet(missing, inverted=True)

    @property
    def members(self) -> frozenset[int]:
        if self.inverted:
            return frozenset({1, 2, 3} - {self.index})
        return frozenset({self.index})


def normalize(votes: tuple[int, int, int]) -> MetricState:
    """Shift a vote triple so its minimum is zero."""
    m = min(votes)
    return (votes[0] - m, votes[1] - m, votes[2] - m)


def check_state(s: MetricState) -> None:
    if len(s) != 3 or any(v < 0 for v in s) or min(s) != 0:
        raise ValueError(f"not a normalized metric state: {s}")


def leaders(s: MetricState) -> tuple[int, ...]:
    """Message indices with the fewest votes (the max-posterior set)."""
    lo = min(s)
    return tuple(i + 1 for i, v in enumerate(s) if v == lo)


def posteriors(s: tuple[int, int, int], ch: ChannelParams) -> tuple[Number, Number, Number]:
    """Posterior triple pi_i = z**m_i / sum_j z**m_j; exact in rational mode.

    Accepts unnormalized vote triples; posteriors are shift-invariant.
    """
    m = normalize(s)
    z = ch.z
    weights = [z**v for v in m]
    total = sum(weights)
    return tuple(wt / total for wt in weights)  # type: ignore[return-value]


def decode_error(s: MetricState, ch: ChannelParams) -> Number:
    """Error of max-posterior decoding with uniform tie randomization: 1 - max pi."""
    return 1 - max(posteriors(s, ch))


def apply_outcome(s: MetricState, q: QuerySet, y: int) -> MetricState:
    """Advance the state one channel use: y=1 votes against the queried side,
    y=0 votes against each non-queried message; then renormalize."""
    check_state(s)
    if y not in (0, 1):
        raise ValueError(f"channel output must be 0 or 1, got {y}")
    j = q.index
    y_eff = y ^ int(q.inverted)
    votes = list(s)
    if y_eff == 1:
        votes[j - 1] += 1
    else:
        for i in range(3):
            if i != j - 1:
                votes[i] += 1
    return normalize(tuple(votes))


def outcome_distribution(
    s: MetricState,
    q: QuerySet,
    ch: ChannelParams,
    mode: str = "bayes",
    true: int | None = None,
) -> dict[int, Number]:
    """Distribution of the channel output y for one query.

    bayes:        P(y=1) = pi_Q p + (1 - pi_Q) q with pi_Q the queried side's
                  posterior mass.
    conditional:  requires ``true``; P(y=0) = q iff the true message is on
                  the queried side.
    paper:        requires a unique leader; the outcome favorable to the
                  leader has probability p + (q - p) * pi_leader.
    """
    check_state(s)
    p, qq = ch.p, ch.q
    j = q.index
    if mode == "bayes":
        pi = posteriors(s, ch)
        pi_q = pi[j - 1]  # canonical singleton side
        p1 = pi_q * p + (1 - pi_q) * qq
        dist = {0: 1 - p1, 1: p1}
    elif mode == "conditional":
        if true not in (1, 2, 3):
            raise ValueError("conditional mode needs the true message index")
        p1 = p if true == j else qq
        dist = {0: 1 - p1, 1: p1}
    elif mode == "paper":
        lead = leaders(s)
        if len(lead) != 1:
            raise ValueError(
                "paper mode needs a unique leading message; tied leaders fall "
                "under the symmetric tie cases handled by the caller"
            )
        pi_lead = posteriors(s, ch)[lead[0] - 1]
        fav = p + (qq - p) * pi_lead
        y_fav = 0 if j == lead[0] else 1  # outcome that widens the leader's gap
        dist = {y_fav: fav, 1 - y_fav: 1 - fav}
    else:
        raise ValueError(f"unknown outcome mode {mode!r}")
    if q.inverted:
        dist = {0: dist[1], 1: dist[0]}
    return {0: dist[0], 1: dist[1]}


@dataclass(frozen=True)
class QueryOutcome:
    """Full one-step breakdown for a single query at a unique-leader state.

    ``prior_ratios`` holds a_j = z**(m_j - m_leader) for the two trailing
    messages; ``b_before`` is their sum (the leader's posterior is then
    1/(1 + b_before)).  Per outcome y: its probability, the gap change
    delta_j for each message, the next state, and b afterwards.
    """

    query: int
    leader: int
    prior_ratios: dict[int, Number]
    b_before: Number
    probs: dict[int, Number]
    deltas: dict[int, dict[int, int]]
    next_states: dict[int, MetricState]
    b_after: dict[int, Number]
    expected_leader_posterior: Number


def query_outcome(s: MetricState, q: QuerySet, ch: ChannelParams, mode: str = "paper") -> QueryOutcome:
    """One-step outcome record for query ``q``; see QueryOutcome."""
    i0, u, v = _leader_and_others(s)
    z = ch.z
    ratios = {j: z ** (s[j - 1] - s[i0 - 1]) for j in (u, v)}
    probs = outcome_distribution(s, q, ch, mode=mode)
    deltas: dict[int, dict[int, int]] = {}
    nexts: dict[int, MetricState] = {}
    b_after: dict[int, Number] = {}
    for y in (0, 1):
        ns = apply_outcome(s, q, y)
        nexts[y] = ns
        deltas[y] = {
            j: (ns[j - 1] - ns[i0 - 1]) - (s[j - 1] - s[i0 - 1]) for j in (1, 2, 3)
        }
        b_after[y] = sum(ratios[j] * z ** deltas[y][j] for j in (u, v))
    expected = sum(probs[y] / (1 + b_after[y]) for y in (0, 1))
    return QueryOutcome(
        query=q.index,
        leader=i0,
        prior_ratios=ratios,
        b_before=sum(ratios.values()),
        probs=probs,
        deltas=deltas,
        next_states=nexts,
        b_after=b_after,
        expected_leader_posterior=expected,
    )


def _leader_and_others(s: MetricState) -> tuple[int, int, int]:
    lead = leaders(s)
    if len(lead) != 1:
        raise ValueError("state has tied leaders; one-step values need a unique leader")
    i0 = lead[0]
    u, v = sorted(set((1, 2, 3)) - {i0})
    return i0, u, v


def one_step_values(s: MetricState, ch: ChannelParams, mode: str = "paper") -> tuple[Number, Number, Number]:
    """Expected next-step posterior of the current leader, per query.

    Returned in role order (query the leader, query the lower-indexed
    other, query the higher-indexed other).  Requires a unique leader.
    """
    check_state(s)
    if mode not in ("paper", "bayes"):
        raise ValueError(f"one_step_values mode must be paper or bayes, got {mode!r}")
    i0, u, v = _leader_and_others(s)
    out = []
    for j in (i0, u, v):
        q = QuerySet.singleton(j)
        dist = outcome_distribution(s, q, ch, mode=mode)
        val = sum(
            dist[y] * posteriors(apply_outcome(s, q, y), ch)[i0 - 1] for y in (0, 1)
        )
        out.append(val)
    return tuple(out)  # type: ignore[return-value]


def one_step_gap(s: MetricState, ch: ChannelParams) -> Number:
    """Closed-form advantage of querying the leader over the lower-indexed
    rival under the paper-mode law; equals one_step_values(paper)[0] - [1]."""
    check_state(s)
    i0, u, v = _leader_and_others(s)
    z = ch.z
    q = ch.q
    a2 = z ** (s[u - 1] - s[i0 - 1])
    a3 = z ** (s[v - 1] - s[i0 - 1])
    pi1 = posteriors(s, ch)[i0 - 1]
    term1 = (z + (1 - z) * pi1) / ((1 + (a2 + a3) * z) * (1 + a2 * z + a3))
    term2 = (1 - (1 - z) * pi1) / ((z + a2 + a3) * (1 + a2 / z + a3))
    return q * a3 * (1 - z) * (term1 - term2)

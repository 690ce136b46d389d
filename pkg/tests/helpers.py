"""Shared test plumbing: tiny builders, naive oracles, random generators.

The oracles here deliberately recompute things from the definitions with
dumb loops so the package's cleverer routines have something independent
to agree with.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import product

from stableprob import (
    AgentId,
    AgentLottery,
    CompactModel,
    Instance,
    JointModel,
    LinearOrder,
    LotteryModel,
    Matching,
    Profile,
    Side,
    TwoSatInstance,
    WeakOrder,
    agent_support,
)


# -- builders ----------------------------------------------------------------


def order(*ranking: int) -> LinearOrder:
    return LinearOrder(tuple(ranking))


def certain(*ranking: int) -> AgentLottery:
    return AgentLottery.certain(order(*ranking))


def lottery(*entries) -> AgentLottery:
    # entries: (ranking tuple, weight) pairs
    return AgentLottery(
        tuple((order(*ranking), Fraction(weight)) for ranking, weight in entries)
    )


def lottery_instance(men, women) -> Instance:
    return Instance(LotteryModel(men=tuple(men), women=tuple(women)))


def compact_instance(men_tiers, women_tiers) -> Instance:
    def build(tiers_list):
        return tuple(
            WeakOrder(tuple(tuple(tier) for tier in tiers)) for tiers in tiers_list
        )

    return Instance(CompactModel(men=build(men_tiers), women=build(women_tiers)))


def joint_instance(entries) -> Instance:
    # entries: ((men rankings, women rankings), weight) pairs
    profiles = []
    for (men, women), weight in entries:
        profile = Profile(
            men=tuple(order(*r) for r in men),
            women=tuple(order(*r) for r in women),
        )
        profiles.append((profile, Fraction(weight)))
    return Instance(JointModel(tuple(profiles)))


def example_market() -> Instance:
    """The running 2x2 market: one flaky man, one flaky woman."""
    men = (
        lottery(((0, 1), "2/5"), ((1, 0), "3/5")),
        certain(1, 0),
    )
    women = (
        certain(0, 1),
        lottery(((0, 1), "4/5"), ((1, 0), "1/5")),
    )
    return lottery_instance(men, women)


MU_IDENTITY = Matching.from_pairs([(0, 0), (1, 1)])
MU_SWAP = Matching.from_pairs([(0, 1), (1, 0)])


# -- naive oracles -----------------------------------------------------------


def naive_has_block(men_orders, women_orders, matching: Matching) -> bool:
    """Quadratic blocking-pair scan straight from the definition."""
    for m, om in enumerate(men_orders):
        for w in om.ranking:
            if m not in women_orders[w].rank:
                continue
            if matching.partner_of_man(m) == w:
                continue
            pm = matching.partner_of_man(m)
            pw = matching.partner_of_woman(w)
            m_wants = pm is None or om.rank[w] < om.rank[pm]
            w_wants = pw is None or women_orders[w].rank[m] < women_orders[w].rank[pw]
            if m_wants and w_wants:
                return True
    return False


def exhaustive_probability(instance: Instance, matching: Matching) -> Fraction:
    """Sum the weight of every realization where the matching survives."""
    if instance.kind == "joint":
        return sum(
            (
                weight
                for profile, weight in instance.model.profiles
                if not naive_has_block(profile.men, profile.women, matching)
            ),
            Fraction(0),
        )
    men_supports = [
        agent_support(instance, AgentId(Side.MEN, m)) for m in range(instance.n_men)
    ]
    women_supports = [
        agent_support(instance, AgentId(Side.WOMEN, w)) for w in range(instance.n_women)
    ]
    total = Fraction(0)
    for men_pick in product(*men_supports):
        men_orders = [o for o, _ in men_pick]
        men_weight = math.prod((p for _, p in men_pick), start=Fraction(1))
        for women_pick in product(*women_supports):
            if naive_has_block(men_orders, [o for o, _ in women_pick], matching):
                continue
            total += men_weight * math.prod(
                (p for _, p in women_pick), start=Fraction(1)
            )
    return total


def truth_table_count(formula: TwoSatInstance) -> int:
    """Model count by enumerating all assignments."""
    count = 0
    for bits in range(1 << formula.num_variables):
        if all(
            ((bits >> v1) & 1 == p1) or ((bits >> v2) & 1 == p2)
            for (v1, p1), (v2, p2) in formula.clauses
        ):
            count += 1
    return count


# -- random generators -------------------------------------------------------


def random_weights(rng: random.Random, k: int) -> list[Fraction]:
    """k positive twelfths summing to 1."""
    assert 1 <= k <= 12
    cuts = sorted(rng.sample(range(1, 12), k - 1))
    bounds = [0] + cuts + [12]
    return [Fraction(bounds[i + 1] - bounds[i], 12) for i in range(k)]


def random_linear_orders(rng, candidates, count: int) -> list[LinearOrder]:
    count = min(count, math.factorial(len(candidates)))
    seen = set()
    while len(seen) < count:
        seen.add(tuple(rng.sample(candidates, len(candidates))))
    return [LinearOrder(ranking) for ranking in sorted(seen)]


def random_agent_lottery(rng, candidates, max_support: int) -> AgentLottery:
    orders = random_linear_orders(rng, candidates, rng.randint(1, max_support))
    weights = random_weights(rng, len(orders))
    return AgentLottery(tuple(zip(orders, weights)))


def random_acceptability(rng, n_men: int, n_women: int, complete: bool):
    if complete:
        return [[True] * n_women for _ in range(n_men)]
    return [[rng.random() < 0.7 for _ in range(n_women)] for _ in range(n_men)]


def random_lottery_instance(
    rng, n_men: int, n_women: int, max_support: int = 3, complete: bool = True
) -> Instance:
    accept = random_acceptability(rng, n_men, n_women, complete)
    men = [
        random_agent_lottery(rng, [w for w in range(n_women) if accept[m][w]], max_support)
        for m in range(n_men)
    ]
    women = [
        random_agent_lottery(rng, [m for m in range(n_men) if accept[m][w]], max_support)
        for w in range(n_women)
    ]
    return lottery_instance(men, women)


def random_weak_order(rng, candidates, max_tie: int = 3) -> WeakOrder:
    perm = rng.sample(candidates, len(candidates))
    tiers = []
    i = 0
    while i < len(perm):
        size = rng.randint(1, min(max_tie, len(perm) - i))
        tiers.append(tuple(perm[i : i + size]))
        i += size
    return WeakOrder(tuple(tiers))


def random_compact_instance(
    rng, n_men: int, n_women: int, max_tie: int = 3, complete: bool = True
) -> Instance:
    accept = random_acceptability(rng, n_men, n_women, complete)
    men = tuple(
        random_weak_order(rng, [w for w in range(n_women) if accept[m][w]], max_tie)
        for m in range(n_men)
    )
    women = tuple(
        random_weak_order(rng, [m for m in range(n_men) if accept[m][w]], max_tie)
        for w in range(n_women)
    )
    return Instance(CompactModel(men=men, women=women))


def random_joint_instance(
    rng, n_men: int, n_women: int, n_profiles: int = 3, complete: bool = True
) -> Instance:
    accept = random_acceptability(rng, n_men, n_women, complete)
    men_cands = [[w for w in range(n_women) if accept[m][w]] for m in range(n_men)]
    women_cands = [[m for m in range(n_men) if accept[m][w]] for w in range(n_women)]

    def rand_profile() -> Profile:
        men = tuple(
            LinearOrder(tuple(rng.sample(c, len(c)))) for c in men_cands
        )
        women = tuple(
            LinearOrder(tuple(rng.sample(c, len(c)))) for c in women_cands
        )
        return Profile(men=men, women=women)

    weights = random_weights(rng, n_profiles)
    # duplicate profiles are merged by the model; that only shrinks the support
    return Instance(
        JointModel(tuple((rand_profile(), w) for w in weights))
    )


def random_maximal_matching(rng, instance: Instance) -> Matching:
    """Greedy over shuffled acceptable pairs; never strands an acceptable pair."""
    pairs = [
        (m, w)
        for m in range(instance.n_men)
        for w in sorted(instance.acceptable_men[m])
    ]
    rng.shuffle(pairs)
    used_m: set[int] = set()
    used_w: set[int] = set()
    chosen = []
    for m, w in pairs:
        if m not in used_m and w not in used_w:
            chosen.append((m, w))
            used_m.add(m)
            used_w.add(w)
    return Matching.from_pairs(chosen)


def random_formula(rng, max_vars: int, max_clauses: int) -> TwoSatInstance:
    n = rng.randint(1, max_vars)
    clauses = []
    for _ in range(rng.randint(0, max_clauses)):
        v1, v2 = rng.randrange(n), rng.randrange(n)
        clauses.append(
            ((v1, rng.random() < 0.5), (v2, rng.random() < 0.5))
        )
    return TwoSatInstance(num_variables=n, clauses=tuple(clauses))

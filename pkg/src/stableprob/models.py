"""The three preference-uncertainty models and their shared plumbing.

A market instance wraps one payload:

- lottery: per agent, a distribution over strict orders (independent draws);
- compact: per agent, a weak order whose linear extensions are equally likely
  (ties broken independently per agent);
- joint: one distribution over whole preference profiles.

All probabilities are exact rationals end to end. Acceptability must be
mutual and identical across every realization of an instance; the JSON layer
intersects one-sided listings before building models, and constructors here
validate strictly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Union

from .core import (
    DEFAULT_CAP,
    AgentId,
    LinearOrder,
    Matching,
    Profile,
    Side,
    WeakOrder,
)
from .errors import ResourceLimitError, ValidationError

ONE = Fraction(1)


def as_probability(value) -> Fraction:
    """Exact probability from Fraction, int, or a "p/q" / decimal string.

    Floats go through their shortest decimal representation so that 0.4
    means exactly 2/5.
    """
    if isinstance(value, Fraction):
        prob = value
    elif isinstance(value, bool):
        raise ValidationError(f"bad probability {value!r}")
    elif isinstance(value, int):
        prob = Fraction(value)
    elif isinstance(value, float):
        prob = Fraction(str(value))
    elif isinstance(value, str):
        try:
            prob = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"bad probability {value!r}") from exc
    else:
        raise ValidationError(f"bad probability {value!r}")
    if not 0 <= prob <= 1:
        raise ValidationError(f"probability {prob} outside [0, 1]")
    return prob


def format_probability(prob: Fraction) -> str:
    return f"{prob.numerator}/{prob.denominator}" if prob.denominator != 1 else str(prob.numerator)


@dataclass(frozen=True)
class AgentLottery:
    """One agent's distribution over strict orders.

    Duplicate orders are merged by summing weights; the support is stored
    sorted by ranking for canonical equality. All orders must list the same
    candidate set, so acceptability is certain even when the order is not.
    """

    support: tuple[tuple[LinearOrder, Fraction], ...]

    def __post_init__(self):
        merged: dict[LinearOrder, Fraction] = {}
        for order, weight in self.support:
            if not isinstance(order, LinearOrder):
                raise ValidationError("lottery support must contain LinearOrder entries")
            weight = as_probability(weight)
            if weight == 0:
                raise ValidationError("lottery weights must be positive")
            merged[order] = merged.get(order, Fraction(0)) + weight
        if not merged:
            raise ValidationError("empty lottery support")
        if sum(merged.values()) != ONE:
            raise ValidationError("lottery weights must sum to exactly 1")
        candidate_sets = {order.candidates for order in merged}
        if len(candidate_sets) != 1:
            raise ValidationError("all support orders must rank the same candidates")
        canonical = tuple(sorted(merged.items(), key=lambda item: item[0].ranking))
        object.__setattr__(self, "support", canonical)

    @classmethod
    def certain(cls, order: LinearOrder) -> "AgentLottery":
        return cls(((order, ONE),))

    @property
    def candidates(self) -> frozenset[int]:
        return self.support[0][0].candidates

    def is_certain(self) -> bool:
        return len(self.support) == 1


@dataclass(frozen=True)
class LotteryModel:
    men: tuple[AgentLottery, ...]
    women: tuple[AgentLottery, ...]

    def __post_init__(self):
        object.__setattr__(self, "men", tuple(self.men))
        object.__setattr__(self, "women", tuple(self.women))


@dataclass(frozen=True)
class CompactModel:
    men: tuple[WeakOrder, ...]
    women: tuple[WeakOrder, ...]

    def __post_init__(self):
        object.__setattr__(self, "men", tuple(self.men))
        object.__setattr__(self, "women", tuple(self.women))


@dataclass(frozen=True)
class JointModel:
    """A distribution over whole profiles; the one dependent model."""

    profiles: tuple[tuple[Profile, Fraction], ...]

    def __post_init__(self):
        merged: dict[Profile, Fraction] = {}
        for profile, weight in self.profiles:
            if not isinstance(profile, Profile):
                raise ValidationError("joint support must contain Profile entries")
            weight = as_probability(weight)
            if weight == 0:
                raise ValidationError("joint weights must be positive")
            merged[profile] = merged.get(profile, Fraction(0)) + weight
        if not merged:
            raise ValidationError("empty joint support")
        if sum(merged.values()) != ONE:
            raise ValidationError("joint weights must sum to exactly 1")
        shapes = {(p.n_men, p.n_women) for p in merged}
        if len(shapes) != 1:
            raise ValidationError("all profiles must have the same agent counts")
        first = next(iter(merged))
        for profile in merged:
            same_men = all(
                a.candidates == b.candidates for a, b in zip(profile.men, first.men)
            )
            same_women = all(
                a.candidates == b.candidates for a, b in zip(profile.women, first.women)
            )
            if not (same_men and same_women):
                raise ValidationError("acceptability must not vary across profiles")
        canonical = tuple(
            sorted(
                merged.items(),
                key=lambda item: tuple(o.ranking for o in item[0].men + item[0].women),
            )
        )
        object.__setattr__(self, "profiles", canonical)


ModelPayload = Union[LotteryModel, CompactModel, JointModel]


@dataclass(frozen=True)
class Instance:
    """A market with one of the three uncertainty payloads."""

    model: ModelPayload

    def __post_init__(self):
        self.kind  # rejects unknown payload types up front
        for m, accepted in enumerate(self.acceptable_men):
            for w in accepted:
                if w >= self.n_women:
                    raise ValidationError(f"man {m} ranks unknown woman {w}")
        for w, accepted in enumerate(self.acceptable_women):
            for m in accepted:
                if m >= self.n_men:
                    raise ValidationError(f"woman {w} ranks unknown man {m}")
        for m, accepted in enumerate(self.acceptable_men):
            for w in accepted:
                if m not in self.acceptable_women[w]:
                    raise ValidationError(
                        f"man {m} lists woman {w} but not vice versa; "
                        "acceptability must be mutual"
                    )
        for w, accepted in enumerate(self.acceptable_women):
            for m in accepted:
                if w not in self.acceptable_men[m]:
                    raise ValidationError(
                        f"woman {w} lists man {m} but not vice versa; "
                        "acceptability must be mutual"
                    )

    @property
    def kind(self) -> str:
        if isinstance(self.model, LotteryModel):
            return "lottery"
        if isinstance(self.model, CompactModel):
            return "compact"
        if isinstance(self.model, JointModel):
            return "joint"
        raise ValidationError(f"unknown model payload {type(self.model).__name__}")

    @property
    def n_men(self) -> int:
        if isinstance(self.model, JointModel):
            return self.model.profiles[0][0].n_men
        return len(self.model.men)

    @property
    def n_women(self) -> int:
        if isinstance(self.model, JointModel):
            return self.model.profiles[0][0].n_women
        return len(self.model.women)

    @cached_property
    def acceptable_men(self) -> tuple[frozenset[int], ...]:
        """Per man, the set of women acceptable to him (constant across realizations)."""
        if isinstance(self.model, JointModel):
            return tuple(o.candidates for o in self.model.profiles[0][0].men)
        return tuple(entry.candidates for entry in self.model.men)

    @cached_property
    def acceptable_women(self) -> tuple[frozenset[int], ...]:
        if isinstance(self.model, JointModel):
            return tuple(o.candidates for o in self.model.profiles[0][0].women)
        return tuple(entry.candidates for entry in self.model.women)

    def acceptable(self, agent: AgentId) -> frozenset[int]:
        table = self.acceptable_men if agent.side is Side.MEN else self.acceptable_women
        if agent.index >= len(table):
            raise ValidationError(f"unknown agent {agent}")
        return table[agent.index]

    def is_complete(self) -> bool:
        return all(len(a) == self.n_women for a in self.acceptable_men) and all(
            len(a) == self.n_men for a in self.acceptable_women
        )

    def validate_matching(self, matching: Matching) -> None:
        for m, w in matching.pairs:
            if m >= self.n_men or w >= self.n_women:
                raise ValidationError(f"pair ({m}, {w}) references unknown agents")
            if w not in self.acceptable_men[m]:
                raise ValidationError(f"pair ({m}, {w}) is not mutually acceptable")

    def transposed(self) -> "Instance":
        if isinstance(self.model, LotteryModel):
            return Instance(LotteryModel(men=self.model.women, women=self.model.men))
        if isinstance(self.model, CompactModel):
            return Instance(CompactModel(men=self.model.women, women=self.model.men))
        flipped = tuple(
            (profile.transposed(), weight) for profile, weight in self.model.profiles
        )
        return Instance(JointModel(flipped))

    def agents(self) -> Iterable[AgentId]:
        for m in range(self.n_men):
            yield AgentId(Side.MEN, m)
        for w in range(self.n_women):
            yield AgentId(Side.WOMEN, w)


@dataclass(frozen=True)
class PartialOrder:
    """A strict partial order over one agent's acceptable candidates.

    ``strictly_before`` holds (a, b) pairs meaning a is ranked above b in
    every realization. Irreflexivity, antisymmetry, and transitivity are
    validated on construction.
    """

    candidates: frozenset[int]
    strictly_before: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "candidates", frozenset(self.candidates))
        object.__setattr__(self, "strictly_before", frozenset(self.strictly_before))
        succ: dict[int, set[int]] = {}
        for a, b in self.strictly_before:
            if a not in self.candidates or b not in self.candidates:
                raise ValidationError(f"pair ({a}, {b}) outside candidate set")
            if a == b:
                raise ValidationError(f"reflexive pair ({a}, {b})")
            succ.setdefault(a, set()).add(b)
        for a, bs in succ.items():
            for b in bs:
                if a in succ.get(b, ()):
                    raise ValidationError(f"antisymmetry violated on ({a}, {b})")
                for c in succ.get(b, ()):
                    if c not in bs:
                        raise ValidationError(
                            f"transitivity violated: ({a}, {b}) and ({b}, {c})"
                        )

    def prefers(self, a: int, b: int) -> bool:
        return (a, b) in self.strictly_before

    def is_total(self) -> bool:
        n = len(self.candidates)
        return len(self.strictly_before) == n * (n - 1) // 2

    def maximal(self, among: Iterable[int] | None = None) -> list[int]:
        """Candidates with nothing above them within ``among``, ascending."""
        pool = sorted(self.candidates if among is None else among)
        return [
            a
            for a in pool
            if not any((b, a) in self.strictly_before for b in pool if b != a)
        ]


def _distinct_orders(instance: Instance, agent: AgentId) -> tuple[LinearOrder, ...]:
    """The set of realizable orders, except for compact agents (too many)."""
    model = instance.model
    if isinstance(model, LotteryModel):
        entries = model.men if agent.side is Side.MEN else model.women
        return tuple(order for order, _ in entries[agent.index].support)
    if isinstance(model, JointModel):
        seen: dict[LinearOrder, None] = {}
        for profile, _ in model.profiles:
            seen.setdefault(profile.order_of(agent))
        return tuple(seen)
    raise ValidationError("compact agents enumerate extensions lazily")


def certainly_preferred(instance: Instance, agent: AgentId) -> PartialOrder:
    """The relation "ranked above in every realization" for one agent."""
    candidates = instance.acceptable(agent)
    if isinstance(instance.model, CompactModel):
        entries = instance.model.men if agent.side is Side.MEN else instance.model.women
        weak = entries[agent.index]
        pairs = frozenset(
            (a, b)
            for a in candidates
            for b in candidates
            if weak.tier_of[a] < weak.tier_of[b]
        )
        return PartialOrder(candidates, pairs)
    orders = _distinct_orders(instance, agent)
    pairs = {
        (orders[0].ranking[i], orders[0].ranking[j])
        for i in range(len(orders[0].ranking))
        for j in range(i + 1, len(orders[0].ranking))
    }
    for order in orders[1:]:
        pairs &= {
            (order.ranking[i], order.ranking[j])
            for i in range(len(order.ranking))
            for j in range(i + 1, len(order.ranking))
        }
    return PartialOrder(candidates, frozenset(pairs))


def dominance_set(instance: Instance, agent: AgentId, candidate: int) -> frozenset[int]:
    """The candidate plus everyone the agent certainly prefers to it."""
    relation = certainly_preferred(instance, agent)
    if candidate not in relation.candidates:
        raise ValidationError(f"candidate {candidate} not acceptable to {agent}")
    return frozenset({candidate}) | {
        a for a, b in relation.strictly_before if b == candidate
    }


def _agent_is_uncertain(instance: Instance, agent: AgentId) -> bool:
    model = instance.model
    if isinstance(model, LotteryModel):
        entries = model.men if agent.side is Side.MEN else model.women
        return not entries[agent.index].is_certain()
    if isinstance(model, CompactModel):
        entries = model.men if agent.side is Side.MEN else model.women
        return not entries[agent.index].is_strict()
    return len(_distinct_orders(instance, agent)) > 1


def uncertain_agents(instance: Instance) -> tuple[AgentId, ...]:
    """Agents whose certainly-preferred relation is not a total order."""
    return tuple(a for a in instance.agents() if _agent_is_uncertain(instance, a))


def certain_order(instance: Instance, agent: AgentId) -> LinearOrder | None:
    """The agent's single realizable order, or None if uncertain."""
    if _agent_is_uncertain(instance, agent):
        return None
    model = instance.model
    entries = model.men if agent.side is Side.MEN else model.women
    if isinstance(model, LotteryModel):
        return entries[agent.index].support[0][0]
    if isinstance(model, CompactModel):
        return LinearOrder(tuple(t[0] for t in entries[agent.index].tiers))
    return _distinct_orders(instance, agent)[0]


def side_is_certain(instance: Instance, side: Side) -> bool:
    count = instance.n_men if side is Side.MEN else instance.n_women
    return all(
        not _agent_is_uncertain(instance, AgentId(side, i)) for i in range(count)
    )


def support_size(instance: Instance, agent: AgentId) -> int:
    """Number of realizable orders for the agent (independent models only)."""
    model = instance.model
    if isinstance(model, LotteryModel):
        entries = model.men if agent.side is Side.MEN else model.women
        return len(entries[agent.index].support)
    if isinstance(model, CompactModel):
        entries = model.men if agent.side is Side.MEN else model.women
        return entries[agent.index].count_linear_extensions()
    raise ValidationError("joint model has no per-agent support")


def agent_support(instance: Instance, agent: AgentId) -> tuple[tuple[LinearOrder, Fraction], ...]:
    """Realizable orders with marginal weights (independent models only)."""
    model = instance.model
    if isinstance(model, LotteryModel):
        entries = model.men if agent.side is Side.MEN else model.women
        return entries[agent.index].support
    if isinstance(model, CompactModel):
        entries = model.men if agent.side is Side.MEN else model.women
        weak = entries[agent.index]
        weight = Fraction(1, weak.count_linear_extensions())
        return tuple((order, weight) for order in weak.linear_extensions())
    raise ValidationError("joint model has no per-agent support")


def expand_compact_to_lottery(instance: Instance, cap: int = DEFAULT_CAP) -> Instance:
    """Replace each weak order by the uniform lottery over its extensions."""
    if not isinstance(instance.model, CompactModel):
        raise ValidationError("expand_compact_to_lottery requires a compact instance")
    for agent in instance.agents():
        count = support_size(instance, agent)
        if count > cap:
            raise ResourceLimitError(
                f"agent {agent} has {count} linear extensions, cap is {cap}"
            )
    men = tuple(
        AgentLottery(agent_support(instance, AgentId(Side.MEN, m)))
        for m in range(instance.n_men)
    )
    women = tuple(
        AgentLottery(agent_support(instance, AgentId(Side.WOMEN, w)))
        for w in range(instance.n_women)
    )
    return Instance(LotteryModel(men=men, women=women))


def lottery_to_joint(instance: Instance, cap: int = DEFAULT_CAP) -> Instance:
    """Expand independent per-agent lotteries into an explicit joint model."""
    if not isinstance(instance.model, LotteryModel):
        raise ValidationError("lottery_to_joint requires a lottery instance")
    total = 1
    for agent in instance.agents():
        total *= support_size(instance, agent)
        if total > cap:
            raise ResourceLimitError(f"joint expansion exceeds cap of {cap} profiles")
    men_supports = [entry.support for entry in instance.model.men]
    women_supports = [entry.support for entry in instance.model.women]
    profiles = []
    for combo in product(*men_supports, *women_supports):
        weight = math.prod((w for _, w in combo), start=ONE)
        orders = tuple(o for o, _ in combo)
        profile = Profile(
            men=orders[: instance.n_men], women=orders[instance.n_men :]
        )
        profiles.append((profile, weight))
    return Instance(JointModel(tuple(profiles)))


def _pick_weighted(rng: random.Random, entries) -> int:
    roll = rng.random()
    cumulative = 0.0
    for i, (_, weight) in enumerate(entries):
        cumulative += float(weight)
        if roll < cumulative:
            return i
    return len(entries) - 1


def sample_profile(instance: Instance, rng: random.Random) -> Profile:
    """Draw one realization; deterministic given the generator state."""
    model = instance.model
    if isinstance(model, JointModel):
        return model.profiles[_pick_weighted(rng, model.profiles)][0]
    if isinstance(model, LotteryModel):
        men = tuple(
            e.support[_pick_weighted(rng, e.support)][0] for e in model.men
        )
        women = tuple(
            e.support[_pick_weighted(rng, e.support)][0] for e in model.women
        )
        return Profile(men=men, women=women)

    def break_ties(weak: WeakOrder) -> LinearOrder:
        ranking = []
        for tier in weak.tiers:
            ranking.extend(rng.sample(tier, len(tier)))
        return LinearOrder(tuple(ranking))

    men = tuple(break_ties(e) for e in model.men)
    women = tuple(break_ties(e) for e in model.women)
    return Profile(men=men, women=women)


@dataclass(frozen=True)
class Padding:
    """Bookkeeping from completing an instance, needed to map matchings back."""

    n_men: int
    n_women: int
    total: int
    acceptable_men: tuple[frozenset[int], ...]

    def is_trivial(self) -> bool:
        return (
            self.n_men == self.n_women == self.total
            and all(len(a) == self.total for a in self.acceptable_men)
        )


def _tail(prefix: tuple[int, ...], total: int) -> tuple[int, ...]:
    missing = sorted(set(range(total)) - set(prefix))
    return tuple(missing)


def _completed_order(order: LinearOrder, total: int) -> LinearOrder:
    return LinearOrder(order.ranking + _tail(order.ranking, total))


def _ascending_order(total: int) -> LinearOrder:
    return LinearOrder(tuple(range(total)))


def complete_instance(instance: Instance) -> tuple[Instance, Padding]:
    """Equalize the sides and complete every list, preserving probabilities.

    Previously unacceptable candidates are appended in ascending index order
    below all original candidates; added agents are certain and rank everyone
    ascending. Probabilities are preserved for matchings that leave no
    mutually acceptable pair unmatched (any other matching is blocked in
    every realization anyway).
    """
    padding = Padding(
        n_men=instance.n_men,
        n_women=instance.n_women,
        total=max(instance.n_men, instance.n_women),
        acceptable_men=instance.acceptable_men,
    )
    if padding.is_trivial():
        return instance, padding
    total = padding.total
    model = instance.model
    if isinstance(model, LotteryModel):
        def complete_side(entries) -> list[AgentLottery]:
            done = [
                AgentLottery(
                    tuple((_completed_order(o, total), w) for o, w in e.support)
                )
                for e in entries
            ]
            done.extend(
                AgentLottery.certain(_ascending_order(total))
                for _ in range(total - len(entries))
            )
            return done

        completed = Instance(
            LotteryModel(
                men=tuple(complete_side(model.men)),
                women=tuple(complete_side(model.women)),
            )
        )
    elif isinstance(model, CompactModel):
        def complete_weak(weak: WeakOrder) -> WeakOrder:
            # the tail is appended as singleton tiers: padding must stay
            # certain or it would add blocking randomness of its own
            flat = tuple(idx for tier in weak.tiers for idx in tier)
            extra = tuple((idx,) for idx in _tail(flat, total))
            return WeakOrder(weak.tiers + extra)

        def complete_side(entries) -> list[WeakOrder]:
            done = [complete_weak(e) for e in entries]
            done.extend(
                WeakOrder(tuple((i,) for i in range(total)))
                for _ in range(total - len(entries))
            )
            return done

        completed = Instance(
            CompactModel(
                men=tuple(complete_side(model.men)),
                women=tuple(complete_side(model.women)),
            )
        )
    else:
        def complete_profile(profile: Profile) -> Profile:
            men = [_completed_order(o, total) for o in profile.men]
            men.extend(_ascending_order(total) for _ in range(total - len(profile.men)))
            women = [_completed_order(o, total) for o in profile.women]
            women.extend(
                _ascending_order(total) for _ in range(total - len(profile.women))
            )
            return Profile(men=tuple(men), women=tuple(women))

        completed = Instance(
            JointModel(
                tuple((complete_profile(p), w) for p, w in model.profiles)
            )
        )
    return completed, padding


def lift_matching(matching: Matching, padding: Padding) -> Matching:
    """Extend a matching of the original instance to the completed one.

    Leftover agents (unmatched originals plus the added padding agents) are
    paired in mutually ascending index order.
    """
    for m, w in matching.pairs:
        if m >= padding.n_men or w >= padding.n_women:
            raise ValidationError(f"pair ({m}, {w}) references unknown agents")
        if w not in padding.acceptable_men[m]:
            raise ValidationError(f"pair ({m}, {w}) is not mutually acceptable")
    total = padding.total
    free_men = [m for m in range(padding.n_men) if matching.partner_of_man(m) is None]
    free_men.extend(range(padding.n_men, total))
    free_women = [
        w for w in range(padding.n_women) if matching.partner_of_woman(w) is None
    ]
    free_women.extend(range(padding.n_women, total))
    return Matching.from_pairs(list(matching.pairs) + list(zip(free_men, free_women)))


def restrict_matching(matching: Matching, padding: Padding) -> Matching:
    """Drop padding pairs; inverse of lift_matching on its image."""
    kept = [
        (m, w)
        for m, w in matching.pairs
        if m < padding.n_men and w < padding.n_women and w in padding.acceptable_men[m]
    ]
    return Matching.from_pairs(kept)

"""Deterministic stable-marriage primitives.

Agents are integer indices on the two sides of a market. Preference lists may
be incomplete: candidates absent from a list are unacceptable, only mutually
acceptable pairs can block, and being unmatched is worse than having any
acceptable partner.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from itertools import combinations, permutations, product
from typing import Iterable, Iterator, Sequence

from .errors import ResourceLimitError, ValidationError

DEFAULT_CAP = 10**6

# brute-force stable-set enumeration is used below this many candidate matchings
_BRUTE_FORCE_LIMIT = 150_000


class Side(Enum):
    """The two sides of the market."""

    MEN = "men"
    WOMEN = "women"

    @property
    def opposite(self) -> "Side":
        return Side.WOMEN if self is Side.MEN else Side.MEN


@dataclass(frozen=True)
class AgentId:
    """One agent, addressed by side and index within that side."""

    side: Side
    index: int

    def __post_init__(self):
        if not isinstance(self.side, Side):
            raise ValidationError(f"bad side {self.side!r}")
        if not isinstance(self.index, int) or self.index < 0:
            raise ValidationError(f"bad agent index {self.index!r}")


@dataclass(frozen=True)
class LinearOrder:
    """Strict preference list over opposite-side indices, best first.

    Candidates absent from ``ranking`` are unacceptable to the owner.
    """

    ranking: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranking", tuple(self.ranking))
        seen = set()
        for idx in self.ranking:
            if not isinstance(idx, int) or idx < 0:
                raise ValidationError(f"bad candidate index {idx!r}")
            if idx in seen:
                raise ValidationError(f"candidate {idx} listed twice")
            seen.add(idx)

    @cached_property
    def rank(self) -> dict[int, int]:
        return {idx: pos for pos, idx in enumerate(self.ranking)}

    @property
    def candidates(self) -> frozenset[int]:
        return frozenset(self.ranking)

    def accepts(self, candidate: int) -> bool:
        return candidate in self.rank

    def prefers(self, a: int, b: int) -> bool:
        """True when acceptable ``a`` ranks strictly above acceptable ``b``."""
        return self.rank[a] < self.rank[b]

    def prefers_over_partner(self, candidate: int, partner: int | None) -> bool:
        """Strictly prefers ``candidate`` to the current partner.

        ``partner is None`` means unmatched, which loses to every acceptable
        candidate. An unacceptable ``candidate`` never wins.
        """
        pos = self.rank.get(candidate)
        if pos is None:
            return False
        return partner is None or pos < self.rank[partner]


@dataclass(frozen=True)
class WeakOrder:
    """Preference with ties: a sequence of tiers, best tier first.

    Tier contents are stored sorted ascending so equal weak orders compare
    equal regardless of input order.
    """

    tiers: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        tiers = tuple(tuple(sorted(tier)) for tier in self.tiers)
        object.__setattr__(self, "tiers", tiers)
        seen = set()
        for tier in tiers:
            if not tier:
                raise ValidationError("empty tier in weak order")
            for idx in tier:
                if not isinstance(idx, int) or idx < 0:
                    raise ValidationError(f"bad candidate index {idx!r}")
                if idx in seen:
                    raise ValidationError(f"candidate {idx} appears in two tiers")
                seen.add(idx)

    @cached_property
    def tier_of(self) -> dict[int, int]:
        return {idx: pos for pos, tier in enumerate(self.tiers) for idx in tier}

    @property
    def candidates(self) -> frozenset[int]:
        return frozenset(self.tier_of)

    def accepts(self, candidate: int) -> bool:
        return candidate in self.tier_of

    def is_strict(self) -> bool:
        return all(len(tier) == 1 for tier in self.tiers)

    def strictly_prefers_over_partner(self, candidate: int, partner: int | None) -> bool:
        pos = self.tier_of.get(candidate)
        if pos is None:
            return False
        return partner is None or pos < self.tier_of[partner]

    def count_linear_extensions(self) -> int:
        return math.prod(math.factorial(len(tier)) for tier in self.tiers)

    def linear_extensions(self) -> Iterator[LinearOrder]:
        """All strict orders refining this weak order, deterministic order."""
        pools = [permutations(tier) for tier in self.tiers]
        for combo in product(*pools):
            yield LinearOrder(tuple(idx for block in combo for idx in block))


@dataclass(frozen=True)
class Profile:
    """One strict preference list per agent on each side: a realization."""

    men: tuple[LinearOrder, ...]
    women: tuple[LinearOrder, ...]

    def __post_init__(self):
        object.__setattr__(self, "men", tuple(self.men))
        object.__setattr__(self, "women", tuple(self.women))
        checks = (
            ("man", self.men, len(self.women)),
            ("woman", self.women, len(self.men)),
        )
        for label, orders, limit in checks:
            for i, order in enumerate(orders):
                if not isinstance(order, LinearOrder):
                    raise ValidationError(f"{label} {i} has a non-order preference")
                for idx in order.ranking:
                    if idx >= limit:
                        raise ValidationError(
                            f"{label} {i} ranks out-of-range candidate {idx}"
                        )

    @property
    def n_men(self) -> int:
        return len(self.men)

    @property
    def n_women(self) -> int:
        return len(self.women)

    def order_of(self, agent: AgentId) -> LinearOrder:
        orders = self.men if agent.side is Side.MEN else self.women
        return orders[agent.index]

    def transposed(self) -> "Profile":
        return Profile(men=self.women, women=self.men)


@dataclass(frozen=True)
class Matching:
    """A set of (man, woman) pairs using each agent at most once."""

    pairs: frozenset[tuple[int, int]]

    def __post_init__(self):
        pairs = frozenset((m, w) for m, w in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        men = [m for m, _ in pairs]
        women = [w for _, w in pairs]
        for idx in men + women:
            if not isinstance(idx, int) or idx < 0:
                raise ValidationError(f"bad agent index {idx!r} in matching")
        if len(set(men)) != len(men):
            raise ValidationError("a man appears in two pairs")
        if len(set(women)) != len(women):
            raise ValidationError("a woman appears in two pairs")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "Matching":
        return cls(frozenset(tuple(pair) for pair in pairs))

    @cached_property
    def man_to_woman(self) -> dict[int, int]:
        return {m: w for m, w in self.pairs}

    @cached_property
    def woman_to_man(self) -> dict[int, int]:
        return {w: m for m, w in self.pairs}

    def partner_of_man(self, m: int) -> int | None:
        return self.man_to_woman.get(m)

    def partner_of_woman(self, w: int) -> int | None:
        return self.woman_to_man.get(w)

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)

    def transposed(self) -> "Matching":
        return Matching.from_pairs((w, m) for m, w in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def validate_matching(profile: Profile, matching: Matching) -> None:
    """Reject out-of-range agents and pairs that are not mutually acceptable."""
    for m, w in matching.pairs:
        if m >= profile.n_men or w >= profile.n_women:
            raise ValidationError(f"pair ({m}, {w}) references unknown agents")
        if not profile.men[m].accepts(w) or not profile.women[w].accepts(m):
            raise ValidationError(f"pair ({m}, {w}) is not mutually acceptable")


def iter_blocking_pairs(
    profile: Profile, matching: Matching, validate: bool = True
) -> Iterator[tuple[int, int]]:
    if validate:
        validate_matching(profile, matching)
    for m in range(profile.n_men):
        order = profile.men[m]
        mu_m = matching.partner_of_man(m)
        # women m strictly prefers over his current situation form a prefix
        better = order.ranking if mu_m is None else order.ranking[: order.rank[mu_m]]
        for w in better:
            if profile.women[w].prefers_over_partner(m, matching.partner_of_woman(w)):
                yield (m, w)


def blocking_pairs(profile: Profile, matching: Matching) -> list[tuple[int, int]]:
    """All pairs that would both rather be together, sorted by index."""
    return sorted(iter_blocking_pairs(profile, matching))


def is_stable(profile: Profile, matching: Matching) -> bool:
    """True iff no mutually acceptable pair blocks the matching."""
    return next(iter_blocking_pairs(profile, matching), None) is None


def gale_shapley(profile: Profile, proposing_side: Side = Side.MEN) -> Matching:
    """Deferred acceptance; returns the proposing side's optimal stable matching.

    Deterministic: free proposers are processed in ascending index order (the
    result is proposal-order independent anyway).
    """
    if proposing_side is Side.MEN:
        proposers, receivers = profile.men, profile.women
    else:
        proposers, receivers = profile.women, profile.men
    next_choice = [0] * len(proposers)
    held: dict[int, int] = {}
    free = deque(range(len(proposers)))
    while free:
        p = free.popleft()
        order = proposers[p]
        while next_choice[p] < len(order.ranking):
            r = order.ranking[next_choice[p]]
            next_choice[p] += 1
            receiver = receivers[r]
            if not receiver.accepts(p):
                continue
            cur = held.get(r)
            if cur is None:
                held[r] = p
                break
            if receiver.prefers(p, cur):
                held[r] = p
                free.append(cur)
                break
        # list exhausted without acceptance: p stays unmatched
    if proposing_side is Side.MEN:
        pairs = ((p, r) for r, p in held.items())
    else:
        pairs = ((r, p) for r, p in held.items())
    return Matching.from_pairs(pairs)


def _candidate_matching_count(n_men: int, n_women: int) -> int:
    return sum(
        math.comb(n_men, k) * math.comb(n_women, k) * math.factorial(k)
        for k in range(min(n_men, n_women) + 1)
    )


def _enumerate_brute_force(profile: Profile, cap: int | None) -> list[Matching]:
    # every partial matching of mutually acceptable pairs, filtered for stability
    results = []
    for k in range(min(profile.n_men, profile.n_women) + 1):
        for men_subset in combinations(range(profile.n_men), k):
            for women_perm in permutations(range(profile.n_women), k):
                pairs = tuple(zip(men_subset, women_perm))
                if not all(
                    profile.men[m].accepts(w) and profile.women[w].accepts(m)
                    for m, w in pairs
                ):
                    continue
                matching = Matching.from_pairs(pairs)
                if is_stable(profile, matching):
                    results.append(matching)
                    if cap is not None and len(results) > cap:
                        raise ResourceLimitError(
                            f"more than {cap} stable matchings"
                        )
    results.sort(key=Matching.sorted_pairs)
    return results


def _successor_edges(profile: Profile, matching: Matching) -> dict[int, tuple[int, int]]:
    """Map each matched man m to (s(m), partner of s(m)) when defined.

    s(m) is the first woman below mu(m) on m's list who is matched and prefers
    m to her partner. The scan stops at an unmatched acceptable woman: she is
    unmatched in every stable matching, so all of m's stable partners, and in
    particular every rotation target, rank above her.
    """
    edges: dict[int, tuple[int, int]] = {}
    for m in sorted(matching.man_to_woman):
        order = profile.men[m]
        start = order.rank[matching.man_to_woman[m]] + 1
        for w in order.ranking[start:]:
            holder = matching.partner_of_woman(w)
            if holder is None:
                if profile.women[w].accepts(m):
                    break
                continue
            if profile.women[w].prefers(m, holder):
                edges[m] = (w, holder)
                break
    return edges


def _cycles(edges: dict[int, tuple[int, int]]) -> list[list[int]]:
    """Cycles of the functional graph m -> partner of s(m)."""
    cycles = []
    done: set[int] = set()
    for start in sorted(edges):
        if start in done:
            continue
        path: list[int] = []
        pos: dict[int, int] = {}
        cur = start
        while cur in edges and cur not in done and cur not in pos:
            pos[cur] = len(path)
            path.append(cur)
            cur = edges[cur][1]
        if cur in pos:
            cycles.append(path[pos[cur]:])
        done.update(path)
    return cycles


def _eliminate(matching: Matching, cycle: list[int], edges) -> Matching:
    pairs = set(matching.pairs)
    for m in cycle:
        pairs.discard((m, matching.man_to_woman[m]))
    for m in cycle:
        pairs.add((m, edges[m][0]))
    return Matching.from_pairs(pairs)


def _enumerate_lattice(profile: Profile, cap: int | None) -> list[Matching]:
    # walk the stable-matching lattice from the man-optimal matching by
    # eliminating exposed rotations; breadth-first with dedup
    root = gale_shapley(profile, Side.MEN)
    seen = {root.pairs}
    results = [root]
    queue = deque([root])
    while queue:
        current = queue.popleft()
        edges = _successor_edges(profile, current)
        for cycle in _cycles(edges):
            child = _eliminate(current, cycle, edges)
            if child.pairs in seen:
                continue
            seen.add(child.pairs)
            # the conservative successor scan can produce spurious cycles on
            # incomplete lists; verification filters them without losing real ones
            if not is_stable(profile, child):
                continue
            results.append(child)
            if cap is not None and len(results) > cap:
                raise ResourceLimitError(f"more than {cap} stable matchings")
            queue.append(child)
    results.sort(key=Matching.sorted_pairs)
    return results


def enumerate_stable_matchings(
    profile: Profile, cap: int | None = DEFAULT_CAP, method: str = "auto"
) -> list[Matching]:
    """All stable matchings, each exactly once, sorted by pair list.

    ``method`` is "auto", "brute", or "lattice". Brute force scans every
    partial matching and is the correctness anchor; the lattice walk handles
    sizes where that scan is infeasible. Exceeding ``cap`` raises
    ResourceLimitError.
    """
    if method == "auto":
        small = _candidate_matching_count(profile.n_men, profile.n_women)
        method = "brute" if small <= _BRUTE_FORCE_LIMIT else "lattice"
    if method == "brute":
        return _enumerate_brute_force(profile, cap)
    if method == "lattice":
        return _enumerate_lattice(profile, cap)
    raise ValidationError(f"unknown enumeration method {method!r}")


def is_weakly_stable(
    men: Sequence[WeakOrder], women: Sequence[WeakOrder], matching: Matching
) -> bool:
    """True iff no pair strictly prefers each other over their partners.

    Ties never block: a pair where either member is merely indifferent is not
    weakly blocking.
    """
    for m, w in matching.pairs:
        if m >= len(men) or w >= len(women):
            raise ValidationError(f"pair ({m}, {w}) references unknown agents")
        if not men[m].accepts(w) or not women[w].accepts(m):
            raise ValidationError(f"pair ({m}, {w}) is not mutually acceptable")
    for m, order in enumerate(men):
        mu_m = matching.partner_of_man(m)
        limit = len(order.tiers) if mu_m is None else order.tier_of[mu_m]
        for tier in order.tiers[:limit]:
            for w in tier:
                if women[w].strictly_prefers_over_partner(m, matching.partner_of_woman(w)):
                    return False
    return True

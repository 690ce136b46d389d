"""Generators that encode classic decision problems as matching instances.

Three encodings are provided: exact cover by 3-sets and counting for 2-CNF
formulas both target the lottery model with a designated matching, and graph
3-colorability targets the joint model. They are used to stress the decision
and counting routines against independent ground truths.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .core import LinearOrder, Matching, Profile, Side
from .errors import ValidationError
from .models import AgentLottery, Instance, JointModel, LotteryModel
from .probability import TwoSatInstance

Literal = tuple[int, bool]


class UnsupportedFormulaError(ValidationError):
    """The formula's clause structure cannot be carried by this encoding."""


@dataclass(frozen=True)
class X3cInstance:
    """Exact cover by 3-sets: universe {1..universe_size}, triples of size 3."""

    universe_size: int
    triples: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.universe_size < 0 or self.universe_size % 3:
            raise ValidationError("universe size must be a nonnegative multiple of 3")
        triples = tuple(tuple(sorted(t)) for t in self.triples)
        object.__setattr__(self, "triples", triples)
        for triple in triples:
            if len(set(triple)) != 3:
                raise ValidationError(f"triple {triple} must have 3 distinct elements")
            for element in triple:
                if not 1 <= element <= self.universe_size:
                    raise ValidationError(f"element {element} outside the universe")


@dataclass(frozen=True)
class Graph:
    """An undirected loop-free graph on vertices 0..vertex_count-1."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.vertex_count < 0:
            raise ValidationError("vertex count must be nonnegative")
        seen = set()
        for a, b in self.edges:
            if a == b:
                raise ValidationError(f"loop at vertex {a}")
            if not (0 <= a < self.vertex_count and 0 <= b < self.vertex_count):
                raise ValidationError(f"edge ({a}, {b}) references unknown vertices")
            seen.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(sorted(seen)))


def _order(head: list[int], total: int) -> LinearOrder:
    placed = set(head)
    rest = [i for i in range(total) if i not in placed]
    return LinearOrder(tuple(head + rest))


def x3c_to_lottery(x3c: X3cInstance) -> tuple[Instance, Matching]:
    """Lottery instance whose designated matching has nonzero stability
    probability iff the cover instance is solvable.

    Men are a_0..a_{k-1} plus one a'_j per universe element; women are the
    mirror b and b' agents, matched index to index. Each b_i draws one triple
    and covets its three a' agents above a_i; each a'_j draws one index k and
    covets every b except b_k above b'_j. Some draw leaves no blocking pair
    exactly when k disjoint triples cover the universe.
    """
    cover = x3c.universe_size // 3
    elements = x3c.universe_size
    if cover and not x3c.triples:
        raise ValidationError("a nonempty universe needs at least one triple")
    n_side = cover + elements
    men = []
    for i in range(cover):
        men.append(AgentLottery.certain(_order([i], n_side)))
    for j in range(elements):
        share = Fraction(1, cover)
        support = []
        for k in range(cover):
            head = [i for i in range(cover) if i != k] + [cover + j, k]
            support.append((_order(head, n_side), share))
        men.append(AgentLottery(tuple(support)))
    women = []
    for i in range(cover):
        share = Fraction(1, len(x3c.triples))
        support = []
        for triple in x3c.triples:
            head = [cover + e - 1 for e in triple] + [i]
            support.append((_order(head, n_side), share))
        women.append(AgentLottery(tuple(support)))
    for j in range(elements):
        women.append(AgentLottery.certain(_order([cover + j], n_side)))
    instance = Instance(LotteryModel(men=tuple(men), women=tuple(women)))
    matching = Matching.from_pairs((i, i) for i in range(n_side))
    return instance, matching


def _normalize_clause(literals) -> tuple[str, object] | None:
    """Classify as a unit or an ordered binary clause; None for tautologies."""
    (v1, p1), (v2, p2) = literals
    if v1 == v2:
        if p1 == p2:
            return "unit", (v1, p1)
        return None
    first, second = sorted([(v1, p1), (v2, p2)])
    return "binary", (first, second)


def _simplify_formula(formula: TwoSatInstance):
    """Reduce to at most one clause per variable pair, preserving the count.

    Two clauses on a pair that share a literal force a unit; a diagonal pair
    forces an equality between the variables, and the later one is
    substituted away; three or more distinct clauses pin both variables or
    are outright contradictory. Each step keeps the number of satisfying
    assignments unchanged, eliminated variables being determined by the
    survivors. Returns (units, binary clauses, eliminated variables).
    """
    units: set[Literal] = set()
    binaries: set[tuple[Literal, Literal]] = set()
    for clause in formula.clauses:
        normalized = _normalize_clause(clause)
        if normalized is None:
            continue
        kind, payload = normalized
        if kind == "unit":
            units.add(payload)
        else:
            binaries.add(payload)
    removed: set[int] = set()

    def substitute(target: int, source: int, same_sign: bool) -> None:
        removed.add(target)

        def rewrite(literal: Literal) -> Literal:
            var, pol = literal
            if var != target:
                return literal
            return (source, pol if same_sign else not pol)

        for literal in sorted(units):
            units.discard(literal)
            units.add(rewrite(literal))
        for clause in sorted(binaries):
            binaries.discard(clause)
            normalized = _normalize_clause([rewrite(lit) for lit in clause])
            if normalized is None:
                continue
            kind, payload = normalized
            if kind == "unit":
                units.add(payload)
            else:
                binaries.add(payload)

    while True:
        by_pair: dict[tuple[int, int], list] = {}
        for clause in binaries:
            (u, _), (v, _) = clause
            by_pair.setdefault((u, v), []).append(clause)
        crowded = sorted(pair for pair, group in by_pair.items() if len(group) >= 2)
        if not crowded:
            break
        u, v = crowded[0]
        group = by_pair[(u, v)]
        binaries.difference_update(group)
        # each clause forbids exactly one cell (u value, v value) of the grid
        vetoed = {(not pu, not pv) for (_, pu), (_, pv) in group}
        if len(vetoed) == 2:
            (a1, b1), (a2, b2) = sorted(vetoed)
            if a1 == a2:
                units.add((u, not a1))
            elif b1 == b2:
                units.add((v, not b1))
            else:
                substitute(v, u, same_sign=(True, True) not in vetoed)
        elif len(vetoed) == 3:
            ((a, b),) = {
                (x, y) for x in (False, True) for y in (False, True)
            } - vetoed
            units.add((u, a))
            units.add((v, b))
        else:
            units.add((u, True))
            units.add((u, False))
    return units, binaries, removed


def count2sat_to_lottery(formula: TwoSatInstance) -> tuple[Instance, Matching]:
    """Lottery instance whose designated matching is stable with probability
    s / 2^(2n), where s counts the satisfying assignments of the formula.

    Each surviving variable gets an uncertain carrier with two half-weight
    orders, one per truth value; a binary clause makes the two falsifying
    orders covet each other's carrier, so that pair blocks exactly when the
    clause is violated. A unit gets a certain admirer whom only the
    falsifying order covets back, and pinned dummy men pad the number of
    binary choices to exactly 2n. Clauses join carriers across sides, so the
    simplified clause graph must be bipartite; an odd cycle raises
    UnsupportedFormulaError.
    """
    n = formula.num_variables
    if n == 0:
        instance = Instance(
            LotteryModel(
                men=(AgentLottery.certain(LinearOrder((0,))),),
                women=(AgentLottery.certain(LinearOrder((0,))),),
            )
        )
        return instance, Matching.from_pairs([(0, 0)])
    units, binaries, removed = _simplify_formula(formula)
    kept = sorted(set(range(n)) - removed)

    neighbors: dict[int, set[int]] = {v: set() for v in kept}
    for (u, _), (v, _) in binaries:
        neighbors[u].add(v)
        neighbors[v].add(u)
    color: dict[int, int] = {}
    for root in kept:
        if root in color:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y in sorted(neighbors[x]):
                if y not in color:
                    color[y] = 1 - color[x]
                    queue.append(y)
                elif color[y] == color[x]:
                    raise UnsupportedFormulaError(
                        "clause graph has an odd cycle, so the carriers cannot "
                        "be split across the two sides"
                    )

    men_count = 0
    women_count = 0

    def new_man() -> int:
        nonlocal men_count
        men_count += 1
        return men_count - 1

    def new_woman() -> int:
        nonlocal women_count
        women_count += 1
        return women_count - 1

    pairs: list[tuple[int, int]] = []
    carrier_idx: dict[int, int] = {}
    carrier_mate: dict[int, int] = {}
    for v in kept:
        if color[v] == 0:
            c, g = new_man(), new_woman()
            pairs.append((c, g))
        else:
            c, g = new_woman(), new_man()
            pairs.append((g, c))
        carrier_idx[v], carrier_mate[v] = c, g
    admirer_idx: dict[Literal, int] = {}
    admirer_mate: dict[Literal, int] = {}
    for literal in sorted(units):
        var = literal[0]
        if color[var] == 0:
            e, d = new_woman(), new_man()
            pairs.append((d, e))
        else:
            e, d = new_man(), new_woman()
            pairs.append((e, d))
        admirer_idx[literal], admirer_mate[literal] = e, d
    pad = 2 * n - len(kept)
    dummy_idx = []
    dummy_mate = []
    for _ in range(pad):
        t, h = new_man(), new_woman()
        pairs.append((t, h))
        dummy_idx.append(t)
        dummy_mate.append(h)
    if pad:
        shared_mate, shared_admirer = new_man(), new_woman()
        pairs.append((shared_mate, shared_admirer))

    # tops[v][a]: opposite-side agents the a-order of v's carrier covets
    tops: dict[int, dict[bool, list[int]]] = {
        v: {True: [], False: []} for v in kept
    }
    for (u, pu), (w, pw) in sorted(binaries):
        tops[u][not pu].append(carrier_idx[w])
        tops[w][not pw].append(carrier_idx[u])
    for literal in sorted(units):
        var, pol = literal
        tops[var][not pol].append(admirer_idx[literal])

    certain_heads: dict[Side, dict[int, list[int]]] = {Side.MEN: {}, Side.WOMEN: {}}
    lottery_heads: dict[Side, dict[int, tuple[list[int], list[int]]]] = {
        Side.MEN: {},
        Side.WOMEN: {},
    }
    for v in kept:
        side = Side.MEN if color[v] == 0 else Side.WOMEN
        head_true = sorted(tops[v][True]) + [carrier_mate[v]]
        head_false = sorted(tops[v][False]) + [carrier_mate[v]]
        lottery_heads[side][carrier_idx[v]] = (head_true, head_false)
        certain_heads[side.opposite][carrier_mate[v]] = [carrier_idx[v]]
    for literal in sorted(units):
        side = Side.WOMEN if color[literal[0]] == 0 else Side.MEN
        e, d = admirer_idx[literal], admirer_mate[literal]
        certain_heads[side][e] = [carrier_idx[literal[0]], d]
        certain_heads[side.opposite][d] = [e]
    for t, h in zip(dummy_idx, dummy_mate):
        lottery_heads[Side.MEN][t] = ([h], [shared_admirer, h])
        certain_heads[Side.WOMEN][h] = [t]
    if pad:
        certain_heads[Side.WOMEN][shared_admirer] = sorted(dummy_idx) + [shared_mate]
        certain_heads[Side.MEN][shared_mate] = [shared_admirer]

    half = Fraction(1, 2)

    def build_side(side: Side, count: int, opposite_count: int):
        agents = []
        for i in range(count):
            if i in lottery_heads[side]:
                head_true, head_false = lottery_heads[side][i]
                agents.append(
                    AgentLottery(
                        (
                            (_order(head_true, opposite_count), half),
                            (_order(head_false, opposite_count), half),
                        )
                    )
                )
            else:
                agents.append(
                    AgentLottery.certain(
                        _order(certain_heads[side][i], opposite_count)
                    )
                )
        return tuple(agents)

    instance = Instance(
        LotteryModel(
            men=build_side(Side.MEN, men_count, women_count),
            women=build_side(Side.WOMEN, women_count, men_count),
        )
    )
    return instance, Matching.from_pairs(pairs)


def three_color_to_joint(graph: Graph) -> Instance:
    """Joint instance with a certainly stable matching iff the graph is
    3-colorable.

    Each vertex becomes a block of three men and three women whose base
    profile admits exactly the three cyclic block matchings, one per color.
    For every edge and color there is one extra profile in which the two
    endpoint blocks rank that color worst and a cross-block pair blocks
    exactly when both endpoints use it.
    """
    nv = graph.vertex_count
    size = 3 * nv

    def idx(i: int, j: int) -> int:
        return 3 * i + j % 3

    def base_heads() -> tuple[list[list[int]], list[list[int]]]:
        men_heads = []
        women_heads = []
        for i in range(nv):
            for j in range(3):
                men_heads.append([idx(i, j), idx(i, j + 1), idx(i, j + 2)])
                women_heads.append([idx(i, j + 1), idx(i, j + 2), idx(i, j)])
        return men_heads, women_heads

    def profile_from(men_heads, women_heads) -> Profile:
        return Profile(
            men=tuple(_order(head, size) for head in men_heads),
            women=tuple(_order(head, size) for head in women_heads),
        )

    profiles = [profile_from(*base_heads())]
    for i1, i2 in graph.edges:
        for c in range(3):
            men_heads, women_heads = base_heads()
            for j in range(3):
                men_heads[idx(i1, j)] = [
                    idx(i1, j + c - 1),
                    idx(i1, j + c + 1),
                    idx(i1, j + c),
                ]
                women_heads[idx(i1, j)] = [
                    idx(i1, j - c),
                    idx(i1, j - c - 1),
                    idx(i1, j - c + 1),
                ]
                men_heads[idx(i2, j)] = [
                    idx(i2, j + c),
                    idx(i2, j + c + 1),
                    idx(i2, j + c - 1),
                ]
                women_heads[idx(i2, j)] = [
                    idx(i2, j - c + 1),
                    idx(i2, j - c - 1),
                    idx(i2, j - c),
                ]
            men_heads[idx(i1, 0)].insert(2, idx(i2, 0))
            women_heads[idx(i2, 0)].insert(2, idx(i1, 0))
            profiles.append(profile_from(men_heads, women_heads))
    weight = Fraction(1, len(profiles))
    return Instance(JointModel(tuple((p, weight) for p in profiles)))

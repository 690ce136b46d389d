"""Stability probability of a matching under uncertain preferences.

Exact values are computed as fractions. Specialized routines cover the joint
model (weigh the stable profiles) and instances where one side is certain
(per-agent factors multiply). The general engine enumerates realizations of
the uncertain agents with pruning, and decision shortcuts answer the
probability-one and probability-nonzero questions without enumeration.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    DEFAULT_CAP,
    AgentId,
    LinearOrder,
    Matching,
    Profile,
    Side,
    is_stable,
    is_weakly_stable,
)
from .errors import ResourceLimitError, ValidationError
from .models import (
    CompactModel,
    Instance,
    JointModel,
    LotteryModel,
    agent_support,
    as_probability,
    certain_order,
    sample_profile,
    side_is_certain,
    support_size,
)
from .superstability import is_certainly_stable

Literal = tuple[int, bool]


@dataclass(frozen=True)
class TwoSatInstance:
    """A 2-CNF formula; a literal is (variable index, polarity)."""

    num_variables: int
    clauses: tuple[tuple[Literal, Literal], ...]

    def __post_init__(self):
        if self.num_variables < 0:
            raise ValidationError("variable count must be nonnegative")
        clauses = tuple(
            (tuple(first), tuple(second)) for first, second in self.clauses
        )
        object.__setattr__(self, "clauses", clauses)
        for clause in clauses:
            for variable, polarity in clause:
                if not 0 <= variable < self.num_variables:
                    raise ValidationError(f"literal uses unknown variable {variable}")
                if not isinstance(polarity, bool):
                    raise ValidationError("literal polarity must be a bool")


def _tarjan_scc(graph: list[list[int]]) -> list[int]:
    """Component ids in reverse topological order (sinks get smaller ids)."""
    n = len(graph)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    counter = 0
    comp_count = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            node, edge_i = work[-1]
            if edge_i == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack[node] = True
            if edge_i < len(graph[node]):
                work[-1] = (node, edge_i + 1)
                child = graph[node][edge_i]
                if index[child] == -1:
                    work.append((child, 0))
                elif on_stack[child]:
                    low[node] = min(low[node], index[child])
            else:
                work.pop()
                if low[node] == index[node]:
                    while True:
                        member = stack.pop()
                        on_stack[member] = False
                        comp[member] = comp_count
                        if member == node:
                            break
                    comp_count += 1
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[node])
    return comp


def solve_2sat(formula: TwoSatInstance) -> list[bool] | None:
    """A satisfying assignment of the formula, or None if unsatisfiable."""
    n = formula.num_variables
    graph: list[list[int]] = [[] for _ in range(2 * n)]

    def node(variable: int, polarity: bool) -> int:
        return 2 * variable + (0 if polarity else 1)

    for (v1, p1), (v2, p2) in formula.clauses:
        graph[node(v1, not p1)].append(node(v2, p2))
        graph[node(v2, not p2)].append(node(v1, p1))
    comp = _tarjan_scc(graph)
    assignment = []
    for variable in range(n):
        positive, negative = comp[2 * variable], comp[2 * variable + 1]
        if positive == negative:
            return None
        assignment.append(positive < negative)
    return assignment


@dataclass(frozen=True)
class ProbabilityEstimate:
    """A sampled estimate within epsilon of the truth except with chance delta."""

    point_estimate: Fraction
    epsilon: Fraction
    delta: Fraction
    samples: int


def _pair_masks(instance: Instance, matching: Matching, supports):
    """Yield (man, woman, a_mask, b_mask) for each pair that can block.

    Bit i of a_mask is set when support order i of the man prefers the woman
    over his assigned partner (any acceptable woman when unmatched); b_mask
    is the mirror for the woman. Pairs with an empty mask never block.
    """
    for m in range(instance.n_men):
        partner_m = matching.partner_of_man(m)
        man = AgentId(Side.MEN, m)
        for w in sorted(instance.acceptable_men[m]):
            if partner_m == w:
                continue
            a_mask = 0
            for i, (order, _) in enumerate(supports[man]):
                if order.prefers_over_partner(w, partner_m):
                    a_mask |= 1 << i
            if not a_mask:
                continue
            woman = AgentId(Side.WOMEN, w)
            partner_w = matching.partner_of_woman(w)
            b_mask = 0
            for j, (order, _) in enumerate(supports[woman]):
                if order.prefers_over_partner(m, partner_w):
                    b_mask |= 1 << j
            if b_mask:
                yield m, w, a_mask, b_mask


def _blocking_structure(instance: Instance, matching: Matching, supports):
    """Split blocking pairs into forced deletions and two-sided constraints.

    A pair whose mask covers an agent's whole support blocks whenever the
    other agent picks an order from the opposite mask, so those picks are
    removed up front. Returns None when stability is impossible, otherwise
    (allowed choice bitmask per agent, list of (a, a_mask, b, b_mask)).
    """
    allowed = {agent: (1 << len(supports[agent])) - 1 for agent in supports}
    constraints = []
    for m, w, a_mask, b_mask in _pair_masks(instance, matching, supports):
        man = AgentId(Side.MEN, m)
        woman = AgentId(Side.WOMEN, w)
        full_a = (1 << len(supports[man])) - 1
        full_b = (1 << len(supports[woman])) - 1
        if a_mask == full_a and b_mask == full_b:
            return None
        if a_mask == full_a:
            allowed[woman] &= ~b_mask
        elif b_mask == full_b:
            allowed[man] &= ~a_mask
        else:
            constraints.append((man, a_mask, woman, b_mask))
    if any(not bits for bits in allowed.values()):
        return None
    return allowed, constraints


def stability_probability_joint(instance: Instance, matching: Matching) -> Fraction:
    """Total weight of the profiles in which the matching is stable."""
    if not isinstance(instance.model, JointModel):
        raise ValidationError("requires a joint-model instance")
    instance.validate_matching(matching)
    return sum(
        (
            weight
            for profile, weight in instance.model.profiles
            if is_stable(profile, matching)
        ),
        Fraction(0),
    )


def stability_probability_lottery_one_side_certain(
    instance: Instance, matching: Matching
) -> Fraction:
    """Closed form for lottery instances where one side is certain.

    With, say, the men certain, each woman blocks independently of the
    others: her factor is the weight of her orders that rank no interested
    man above her partner. An unmatched woman with an interested man forces
    probability zero.
    """
    if not isinstance(instance.model, LotteryModel):
        raise ValidationError("requires a lottery-model instance")
    instance.validate_matching(matching)
    if side_is_certain(instance, Side.MEN):
        pass
    elif side_is_certain(instance, Side.WOMEN):
        instance = instance.transposed()
        matching = matching.transposed()
    else:
        raise ValidationError("requires one side with certain preferences")
    model = instance.model
    men_orders = [
        certain_order(instance, AgentId(Side.MEN, m)) for m in range(instance.n_men)
    ]
    result = Fraction(1)
    for w in range(instance.n_women):
        partner_w = matching.partner_of_woman(w)
        interested = [
            m
            for m in sorted(instance.acceptable_women[w])
            if men_orders[m].prefers_over_partner(w, matching.partner_of_man(m))
        ]
        if not interested:
            continue
        if partner_w is None:
            return Fraction(0)
        factor = Fraction(0)
        for order, weight in model.women[w].support:
            if not any(order.prefers(m, partner_w) for m in interested):
                factor += weight
        if factor == 0:
            return Fraction(0)
        result *= factor
    return result


def stability_probability_compact_one_side_certain(
    instance: Instance, matching: Matching
) -> Fraction:
    """Closed form for compact instances where one side is strict.

    An interested man in a strictly better tier than a woman's partner blocks
    in every extension; k interested men tied with the partner leave her a
    1/(k+1) chance of drawing the partner first.
    """
    if not isinstance(instance.model, CompactModel):
        raise ValidationError("requires a compact-model instance")
    instance.validate_matching(matching)
    if side_is_certain(instance, Side.MEN):
        pass
    elif side_is_certain(instance, Side.WOMEN):
        instance = instance.transposed()
        matching = matching.transposed()
    else:
        raise ValidationError("requires one side with strict preferences")
    model = instance.model
    men_orders = [
        certain_order(instance, AgentId(Side.MEN, m)) for m in range(instance.n_men)
    ]
    result = Fraction(1)
    for w in range(instance.n_women):
        partner_w = matching.partner_of_woman(w)
        interested = [
            m
            for m in sorted(instance.acceptable_women[w])
            if men_orders[m].prefers_over_partner(w, matching.partner_of_man(m))
        ]
        if not interested:
            continue
        if partner_w is None:
            return Fraction(0)
        tier_of = model.women[w].tier_of
        partner_tier = tier_of[partner_w]
        if any(tier_of[m] < partner_tier for m in interested):
            return Fraction(0)
        tied = sum(1 for m in interested if tier_of[m] == partner_tier)
        if tied:
            result *= Fraction(1, tied + 1)
    return result


def stability_probability_exact(
    instance: Instance, matching: Matching, cap: int | None = DEFAULT_CAP
) -> Fraction:
    """Exact stability probability for any model.

    Independent models are summed over realizations of the uncertain agents
    in integer arithmetic over a common denominator. Always-blocking picks
    are deleted up front, agents untouched by two-sided constraints
    contribute a closed factor, and the rest are searched with pruning.
    """
    if isinstance(instance.model, JointModel):
        return stability_probability_joint(instance, matching)
    instance.validate_matching(matching)
    agents = tuple(instance.agents())
    count = 1
    for agent in agents:
        count *= support_size(instance, agent)
        if cap is not None and count > cap:
            raise ResourceLimitError(
                f"more than {cap} preference realizations; raise the cap to proceed"
            )
    supports = {agent: agent_support(instance, agent) for agent in agents}
    numerators: dict[AgentId, list[int]] = {}
    denominator = 1
    for agent in agents:
        weights = [weight for _, weight in supports[agent]]
        scale = math.lcm(*(weight.denominator for weight in weights))
        numerators[agent] = [int(weight * scale) for weight in weights]
        denominator *= scale
    structure = _blocking_structure(instance, matching, supports)
    if structure is None:
        return Fraction(0)
    allowed, constraints = structure

    adjacency: dict[AgentId, list] = {agent: [] for agent in agents}
    for a, a_mask, b, b_mask in constraints:
        adjacency[a].append((b, a_mask, b_mask))
        adjacency[b].append((a, b_mask, a_mask))
    order = [agent for agent in agents if adjacency[agent]]
    order.sort(key=lambda a: (-len(adjacency[a]), a.side.value, a.index))
    free_product = 1
    for agent in agents:
        if adjacency[agent]:
            continue
        free_product *= sum(
            n for i, n in enumerate(numerators[agent]) if allowed[agent] >> i & 1
        )

    assigned: dict[AgentId, int] = {}
    total = 0

    def search(depth: int, weight: int) -> None:
        nonlocal total
        if depth == len(order):
            total += weight
            return
        agent = order[depth]
        bits = allowed[agent]
        for i, numerator in enumerate(numerators[agent]):
            if not bits >> i & 1:
                continue
            blocked = False
            for other, my_mask, other_mask in adjacency[agent]:
                if my_mask >> i & 1:
                    j = assigned.get(other)
                    if j is not None and other_mask >> j & 1:
                        blocked = True
                        break
            if blocked:
                continue
            assigned[agent] = i
            search(depth + 1, weight * numerator)
            del assigned[agent]

    search(0, free_product)
    return Fraction(total, denominator)


def stability_probability(
    instance: Instance,
    matching: Matching,
    method: str = "auto",
    cap: int | None = DEFAULT_CAP,
) -> Fraction:
    """Exact stability probability, dispatching on the model.

    Methods: "auto" picks the cheapest applicable routine, "one-side" forces
    the one-side-certain closed forms, "joint" the profile sum, "exact" the
    general engine. Forcing an inapplicable method raises ValidationError.
    """
    if method not in ("auto", "exact", "one-side", "joint"):
        raise ValidationError(f"unknown method {method!r}")
    kind = instance.kind
    if method == "joint" and kind != "joint":
        raise ValidationError("method 'joint' requires a joint-model instance")
    if method == "one-side":
        if kind == "lottery":
            return stability_probability_lottery_one_side_certain(instance, matching)
        if kind == "compact":
            return stability_probability_compact_one_side_certain(instance, matching)
        raise ValidationError("method 'one-side' requires an independent model")
    if kind == "joint":
        return stability_probability_joint(instance, matching)
    if method == "auto" and (
        side_is_certain(instance, Side.MEN) or side_is_certain(instance, Side.WOMEN)
    ):
        if kind == "lottery":
            return stability_probability_lottery_one_side_certain(instance, matching)
        return stability_probability_compact_one_side_certain(instance, matching)
    return stability_probability_exact(instance, matching, cap=cap)


def estimate_stability_probability(
    instance: Instance,
    matching: Matching,
    epsilon,
    delta,
    rng: random.Random | None = None,
) -> ProbabilityEstimate:
    """Monte Carlo estimate within epsilon except with probability delta.

    The sample count ceil(ln(2/delta) / (2 epsilon^2)) comes from the
    two-sided Hoeffding bound.
    """
    eps = as_probability(epsilon)
    err = as_probability(delta)
    if not 0 < eps < 1 or not 0 < err < 1:
        raise ValidationError("epsilon and delta must lie strictly between 0 and 1")
    instance.validate_matching(matching)
    samples = math.ceil(Fraction(math.log(2 / float(err))) / (2 * eps * eps))
    if rng is None:
        rng = random.Random(0)
    hits = 0
    for _ in range(samples):
        if is_stable(sample_profile(instance, rng), matching):
            hits += 1
    return ProbabilityEstimate(
        point_estimate=Fraction(hits, samples), epsilon=eps, delta=err, samples=samples
    )


def is_stability_probability_one(instance: Instance, matching: Matching) -> bool:
    """True iff the matching is stable with probability one."""
    return is_certainly_stable(instance, matching)


def _partner_first_extension(weak, partner: int | None) -> LinearOrder:
    ranking = []
    for tier in weak.tiers:
        members = list(tier)
        if partner in members:
            members.remove(partner)
            members.insert(0, partner)
        ranking.extend(members)
    return LinearOrder(tuple(ranking))


def _compact_witness(model: CompactModel, matching: Matching) -> Profile:
    men = tuple(
        _partner_first_extension(order, matching.partner_of_man(m))
        for m, order in enumerate(model.men)
    )
    women = tuple(
        _partner_first_extension(order, matching.partner_of_woman(w))
        for w, order in enumerate(model.women)
    )
    return Profile(men=men, women=women)


def _nonzero_2sat_parts(instance: Instance, matching: Matching):
    """The 2-CNF whose satisfying assignments pick blocking-free orders.

    Each agent with two support orders gets one variable per order plus an
    exactly-one pair of clauses; a single-support agent gets one variable
    forced true. Every jointly blocking combination contributes the clause
    forbidding both picks.
    """
    if not isinstance(instance.model, LotteryModel):
        raise ValidationError("requires a lottery-model instance")
    agents = tuple(instance.agents())
    supports = {agent: agent_support(instance, agent) for agent in agents}
    if any(len(supports[agent]) > 2 for agent in agents):
        raise ValidationError("requires support of at most two orders per agent")
    variable_of: dict[tuple[AgentId, int], int] = {}
    choices: list[tuple[AgentId, int]] = []
    clauses: list[tuple[Literal, Literal]] = []
    for agent in agents:
        for i in range(len(supports[agent])):
            variable_of[(agent, i)] = len(choices)
            choices.append((agent, i))
        if len(supports[agent]) == 1:
            v = variable_of[(agent, 0)]
            clauses.append(((v, True), (v, True)))
        else:
            v1, v2 = variable_of[(agent, 0)], variable_of[(agent, 1)]
            clauses.append(((v1, True), (v2, True)))
            clauses.append(((v1, False), (v2, False)))
    for m, w, a_mask, b_mask in _pair_masks(instance, matching, supports):
        man = AgentId(Side.MEN, m)
        woman = AgentId(Side.WOMEN, w)
        for i in range(len(supports[man])):
            if not a_mask >> i & 1:
                continue
            for j in range(len(supports[woman])):
                if b_mask >> j & 1:
                    clauses.append(
                        (
                            (variable_of[(man, i)], False),
                            (variable_of[(woman, j)], False),
                        )
                    )
    formula = TwoSatInstance(num_variables=len(choices), clauses=tuple(clauses))
    return formula, choices, supports


def build_nonzero_2sat(instance: Instance, matching: Matching) -> TwoSatInstance:
    """2-CNF that is satisfiable iff the stability probability is nonzero.

    Only defined for lottery instances whose agents have at most two support
    orders each.
    """
    instance.validate_matching(matching)
    formula, _, _ = _nonzero_2sat_parts(instance, matching)
    return formula


def _profile_from_choices(instance: Instance, supports, pick) -> Profile:
    men = tuple(
        supports[AgentId(Side.MEN, m)][pick(AgentId(Side.MEN, m))][0]
        for m in range(instance.n_men)
    )
    women = tuple(
        supports[AgentId(Side.WOMEN, w)][pick(AgentId(Side.WOMEN, w))][0]
        for w in range(instance.n_women)
    )
    return Profile(men=men, women=women)


def _nonzero_backtracking(
    instance: Instance, matching: Matching, node_budget: int
) -> tuple[bool, Profile | None]:
    agents = tuple(instance.agents())
    supports = {agent: agent_support(instance, agent) for agent in agents}
    structure = _blocking_structure(instance, matching, supports)
    if structure is None:
        return False, None
    allowed, constraints = structure
    adjacency: dict[AgentId, list] = {agent: [] for agent in agents}
    for a, a_mask, b, b_mask in constraints:
        adjacency[a].append((b, a_mask, b_mask))
        adjacency[b].append((a, b_mask, a_mask))
    order = [agent for agent in agents if adjacency[agent]]
    order.sort(key=lambda a: (-len(adjacency[a]), a.side.value, a.index))

    assigned: dict[AgentId, int] = {}
    visited = 0

    def search(depth: int) -> bool:
        nonlocal visited
        visited += 1
        if visited > node_budget:
            raise ResourceLimitError(
                f"more than {node_budget} search nodes; raise the budget to proceed"
            )
        if depth == len(order):
            return True
        agent = order[depth]
        bits = allowed[agent]
        for i in range(len(supports[agent])):
            if not bits >> i & 1:
                continue
            blocked = False
            for other, my_mask, other_mask in adjacency[agent]:
                if my_mask >> i & 1:
                    j = assigned.get(other)
                    if j is not None and other_mask >> j & 1:
                        blocked = True
                        break
            if blocked:
                continue
            assigned[agent] = i
            if search(depth + 1):
                return True
            del assigned[agent]
        return False

    if not search(0):
        return False, None

    def pick(agent: AgentId) -> int:
        if agent in assigned:
            return assigned[agent]
        bits = allowed[agent]
        return (bits & -bits).bit_length() - 1

    profile = _profile_from_choices(instance, supports, pick)
    assert is_stable(profile, matching)
    return True, profile


def is_stability_probability_nonzero(
    instance: Instance, matching: Matching, node_budget: int = 200_000
) -> tuple[bool, Profile | None]:
    """Whether some positive-probability realization keeps the matching stable.

    Returns the decision and, when positive, a witness profile that is
    itself verified stable. Compact instances reduce to weak stability with
    a partner-first tie-break, joint instances scan their profiles, lottery
    instances with binary supports go through 2-SAT, and larger supports
    fall back to bounded backtracking.
    """
    instance.validate_matching(matching)
    if isinstance(instance.model, JointModel):
        for profile, _ in instance.model.profiles:
            if is_stable(profile, matching):
                return True, profile
        return False, None
    if isinstance(instance.model, CompactModel):
        model = instance.model
        if not is_weakly_stable(model.men, model.women, matching):
            return False, None
        profile = _compact_witness(model, matching)
        assert is_stable(profile, matching)
        return True, profile
    agents = tuple(instance.agents())
    if all(support_size(instance, agent) <= 2 for agent in agents):
        formula, choices, supports = _nonzero_2sat_parts(instance, matching)
        assignment = solve_2sat(formula)
        if assignment is None:
            return False, None
        chosen = {
            agent: i for (agent, i), value in zip(choices, assignment) if value
        }
        profile = _profile_from_choices(instance, supports, chosen.__getitem__)
        assert is_stable(profile, matching)
        return True, profile
    return _nonzero_backtracking(instance, matching, node_budget)

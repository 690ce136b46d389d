"""Certain stability, very weak blocking, and super-stable matchings."""

import random
from fractions import Fraction
from itertools import permutations

import pytest

from helpers import (
    MU_IDENTITY,
    MU_SWAP,
    certain,
    compact_instance,
    example_market,
    exhaustive_probability,
    joint_instance,
    lottery_instance,
    random_compact_instance,
    random_joint_instance,
    random_lottery_instance,
    random_maximal_matching,
)
from stableprob import (
    AgentId,
    Matching,
    PartialOrder,
    ResourceLimitError,
    Side,
    SmpInstance,
    ValidationError,
    dominance_set,
    exists_certainly_stable_matching,
    gale_shapley,
    is_certainly_stable,
    is_very_weakly_blocking,
    lottery_to_joint,
    sample_profile,
    smp_from_instance,
    super_stable_smp,
)


def naive_vwb_pairs(smp: SmpInstance, matching: Matching) -> list:
    """Very weakly blocking pairs straight from the definition."""
    found = []
    for m in range(smp.n_men):
        for w in sorted(smp.men[m].candidates):
            if matching.partner_of_man(m) == w:
                continue
            pm = matching.partner_of_man(m)
            pw = matching.partner_of_woman(w)
            if pm is not None and (pm, w) in smp.men[m].strictly_before:
                continue
            if pw is not None and (pw, m) in smp.women[w].strictly_before:
                continue
            found.append((m, w))
    return found


def random_partial_order(rng, candidates) -> PartialOrder:
    # intersecting a few random permutations always yields a partial order
    k = rng.randint(1, 3)
    orders = [tuple(rng.sample(candidates, len(candidates))) for _ in range(k)]
    pairs = {
        (a, b)
        for a in candidates
        for b in candidates
        if a != b and all(o.index(a) < o.index(b) for o in orders)
    }
    return PartialOrder(frozenset(candidates), frozenset(pairs))


def random_smp(rng, n: int, complete: bool = True) -> SmpInstance:
    accept = [
        [complete or rng.random() < 0.7 for _ in range(n)] for _ in range(n)
    ]
    men = tuple(
        random_partial_order(rng, [w for w in range(n) if accept[m][w]])
        for m in range(n)
    )
    women = tuple(
        random_partial_order(rng, [m for m in range(n) if accept[m][w]])
        for w in range(n)
    )
    return SmpInstance(men=men, women=women)


def all_matchings(smp: SmpInstance) -> list:
    pairs = [
        (m, w) for m in range(smp.n_men) for w in sorted(smp.men[m].candidates)
    ]
    out = []

    def rec(i, used_m, used_w, cur):
        if i == len(pairs):
            out.append(Matching.from_pairs(cur))
            return
        rec(i + 1, used_m, used_w, cur)
        m, w = pairs[i]
        if m not in used_m and w not in used_w:
            rec(i + 1, used_m | {m}, used_w | {w}, cur + [(m, w)])

    rec(0, set(), set(), [])
    return out


class TestVeryWeaklyBlocking:
    def test_uncertain_pair_blocks(self):
        # neither m0 nor w1 certainly prefers their identity partner
        assert is_very_weakly_blocking(example_market(), MU_IDENTITY, 0, 1)

    def test_certainly_preferred_partner_protects(self):
        # m1 certainly ranks his partner w1 above w0
        assert not is_very_weakly_blocking(example_market(), MU_IDENTITY, 1, 0)

    def test_matched_pair_is_rejected(self):
        with pytest.raises(ValidationError):
            is_very_weakly_blocking(example_market(), MU_IDENTITY, 0, 0)

    def test_out_of_range_pair_is_rejected(self):
        with pytest.raises(ValidationError):
            is_very_weakly_blocking(example_market(), MU_IDENTITY, 0, 9)

    def test_unmatched_mutually_acceptable_pair_blocks(self):
        inst = lottery_instance(men=(certain(0),), women=(certain(0),))
        assert is_very_weakly_blocking(inst, Matching.from_pairs([]), 0, 0)

    def test_joint_model_is_rejected(self):
        inst = joint_instance([((((0,),), ((0,),)), 1)])
        with pytest.raises(ValidationError):
            is_very_weakly_blocking(inst, Matching.from_pairs([]), 0, 0)


class TestCertainlyStable:
    def test_flaky_market_is_never_certain(self):
        inst = example_market()
        assert not is_certainly_stable(inst, MU_IDENTITY)
        assert not is_certainly_stable(inst, MU_SWAP)

    def test_certain_market(self):
        inst = lottery_instance(
            men=(certain(0, 1), certain(0, 1)),
            women=(certain(0, 1), certain(0, 1)),
        )
        assert is_certainly_stable(inst, MU_IDENTITY)
        assert not is_certainly_stable(inst, MU_SWAP)

    def test_joint_requires_all_profiles(self):
        inst = joint_instance(
            [
                ((((0, 1), (0, 1)), ((0, 1), (0, 1))), Fraction(1, 2)),
                ((((1, 0), (0, 1)), ((0, 1), (0, 1))), Fraction(1, 2)),
            ]
        )
        # (m0, w1) blocks identity in the second profile only
        assert not is_certainly_stable(inst, MU_IDENTITY)
        inst_one = joint_instance(
            [((((0, 1), (0, 1)), ((0, 1), (0, 1))), 1)]
        )
        assert is_certainly_stable(inst_one, MU_IDENTITY)

    def test_matches_probability_one(self):
        rng = random.Random(67)
        for _ in range(120):
            kind = rng.choice(["lottery", "compact", "joint"])
            n_men, n_women = rng.randint(1, 3), rng.randint(1, 3)
            complete = rng.random() < 0.5
            if kind == "lottery":
                inst = random_lottery_instance(rng, n_men, n_women, 2, complete)
            elif kind == "compact":
                inst = random_compact_instance(rng, n_men, n_women, 2, complete)
            else:
                inst = random_joint_instance(rng, n_men, n_women, 2, complete)
            mu = random_maximal_matching(rng, inst)
            expected = exhaustive_probability(inst, mu) == 1
            assert is_certainly_stable(inst, mu) == expected

    def test_matches_dominance_criterion(self):
        # certainly stable iff every acceptable pair has a member whose
        # partner sits in their dominance set of the other
        rng = random.Random(71)
        for _ in range(80):
            inst = random_lottery_instance(
                rng, rng.randint(1, 3), rng.randint(1, 3), 2, rng.random() < 0.5
            )
            mu = random_maximal_matching(rng, inst)
            dominated = True
            for m in range(inst.n_men):
                for w in sorted(inst.acceptable_men[m]):
                    pm = mu.partner_of_man(m)
                    pw = mu.partner_of_woman(w)
                    m_safe = pm is not None and pm in dominance_set(
                        inst, AgentId(Side.MEN, m), w
                    )
                    w_safe = pw is not None and pw in dominance_set(
                        inst, AgentId(Side.WOMEN, w), m
                    )
                    if not (m_safe or w_safe):
                        dominated = False
            assert is_certainly_stable(inst, mu) == dominated


class TestSuperStableSmp:
    def test_linear_orders_reduce_to_stability(self):
        inst = lottery_instance(
            men=(certain(0, 1), certain(0, 1)),
            women=(certain(0, 1), certain(1, 0)),
        )
        smp = smp_from_instance(inst)
        result = super_stable_smp(smp)
        assert result is not None
        assert naive_vwb_pairs(smp, result) == []

    def test_fully_incomparable_market_has_none(self):
        empty = PartialOrder(frozenset({0, 1}), frozenset())
        smp = SmpInstance(men=(empty, empty), women=(empty, empty))
        assert super_stable_smp(smp) is None

    def test_flaky_market_relations_admit_none(self):
        assert super_stable_smp(smp_from_instance(example_market())) is None

    def test_matches_brute_force_on_complete_markets(self):
        rng = random.Random(73)
        for _ in range(150):
            smp = random_smp(rng, rng.randint(1, 4))
            result = super_stable_smp(smp)
            feasible = any(
                not naive_vwb_pairs(
                    smp, Matching.from_pairs(enumerate(perm))
                )
                for perm in permutations(range(smp.n_men))
            )
            assert (result is not None) == feasible
            if result is not None:
                assert naive_vwb_pairs(smp, result) == []

    def test_matches_brute_force_on_incomplete_markets(self):
        rng = random.Random(79)
        for _ in range(120):
            smp = random_smp(rng, rng.randint(1, 3), complete=False)
            result = super_stable_smp(smp)
            feasible = any(
                not naive_vwb_pairs(smp, mu) for mu in all_matchings(smp)
            )
            assert (result is not None) == feasible
            if result is not None:
                assert naive_vwb_pairs(smp, result) == []


class TestExistsCertainlyStable:
    def test_certain_market_returns_deferred_acceptance(self):
        inst = lottery_instance(
            men=(certain(0, 1), certain(0, 1)),
            women=(certain(0, 1), certain(1, 0)),
        )
        result = exists_certainly_stable_matching(inst)
        profile = sample_profile(inst, random.Random(0))
        assert result == gale_shapley(profile)
        assert is_certainly_stable(inst, result)

    def test_all_indifferent_market_has_none(self):
        inst = compact_instance(
            [[(0, 1)], [(0, 1)]],
            [[(0, 1)], [(0, 1)]],
        )
        assert exists_certainly_stable_matching(inst) is None

    def test_flaky_market_has_none(self):
        assert exists_certainly_stable_matching(example_market()) is None

    def test_joint_intersection(self):
        inst = joint_instance(
            [
                ((((0, 1), (0, 1)), ((0, 1), (0, 1))), Fraction(1, 2)),
                ((((0, 1), (1, 0)), ((0, 1), (0, 1))), Fraction(1, 2)),
            ]
        )
        result = exists_certainly_stable_matching(inst)
        assert result == MU_IDENTITY
        assert is_certainly_stable(inst, result)

    def test_joint_cap_is_enforced(self):
        # a single profile with ten stable matchings trips a cap of three
        men = ((0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0))
        women = ((3, 2, 1, 0), (2, 3, 0, 1), (1, 0, 3, 2), (0, 1, 2, 3))
        inst = joint_instance([((men, women), 1)])
        with pytest.raises(ResourceLimitError):
            exists_certainly_stable_matching(inst, cap=3)

    def test_smp_rejects_joint(self):
        inst = joint_instance([((((0,),), ((0,),)), 1)])
        with pytest.raises(ValidationError):
            smp_from_instance(inst)

    def test_lottery_agrees_with_joint_expansion(self):
        rng = random.Random(83)
        for _ in range(80):
            inst = random_lottery_instance(
                rng, rng.randint(1, 3), rng.randint(1, 3), 2, rng.random() < 0.5
            )
            direct = exists_certainly_stable_matching(inst)
            via_joint = exists_certainly_stable_matching(lottery_to_joint(inst))
            assert (direct is None) == (via_joint is None)
            if direct is not None:
                assert is_certainly_stable(inst, direct)

    def test_found_matchings_really_are_certain(self):
        rng = random.Random(89)
        found = 0
        for _ in range(150):
            kind = rng.choice(["lottery", "compact"])
            if kind == "lottery":
                inst = random_lottery_instance(rng, 3, 3, 2, rng.random() < 0.5)
            else:
                inst = random_compact_instance(rng, 3, 3, 2, rng.random() < 0.5)
            result = exists_certainly_stable_matching(inst)
            if result is None:
                # no certainly stable matching may exist anywhere
                for mu in all_matchings(smp_from_instance(inst)):
                    assert not is_certainly_stable(inst, mu)
            else:
                found += 1
                assert is_certainly_stable(inst, result)
        assert found  # the suite must exercise both branches

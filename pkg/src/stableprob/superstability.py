"""Certain stability and super-stable matchings over partial orders.

For the independent models (lottery, compact), a matching has stability
probability one exactly when no pair is very weakly blocking under the
certainly-preferred relations, which reduces the question to finding a
super-stable matching of a partial-order market. The joint model is
dependent, so it is handled by intersecting per-profile stable sets instead.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    DEFAULT_CAP,
    AgentId,
    Matching,
    Side,
    enumerate_stable_matchings,
    is_stable,
)
from .errors import ValidationError
from .models import Instance, JointModel, PartialOrder, certainly_preferred


@dataclass(frozen=True)
class SmpInstance:
    """A market where every agent ranks candidates by a strict partial order."""

    men: tuple[PartialOrder, ...]
    women: tuple[PartialOrder, ...]

    def __post_init__(self):
        object.__setattr__(self, "men", tuple(self.men))
        object.__setattr__(self, "women", tuple(self.women))
        for m, order in enumerate(self.men):
            for w in order.candidates:
                if w >= len(self.women):
                    raise ValidationError(f"man {m} ranks unknown woman {w}")
                if m not in self.women[w].candidates:
                    raise ValidationError(
                        f"man {m} lists woman {w} but not vice versa"
                    )
        for w, order in enumerate(self.women):
            for m in order.candidates:
                if m >= len(self.men):
                    raise ValidationError(f"woman {w} ranks unknown man {m}")
                if w not in self.men[m].candidates:
                    raise ValidationError(
                        f"woman {w} lists man {m} but not vice versa"
                    )

    @property
    def n_men(self) -> int:
        return len(self.men)

    @property
    def n_women(self) -> int:
        return len(self.women)


def smp_from_instance(instance: Instance) -> SmpInstance:
    """Certainly-preferred partial orders of an independent-model instance."""
    if isinstance(instance.model, JointModel):
        raise ValidationError(
            "the joint model is dependent; its certainly-preferred orders do "
            "not characterize certain stability"
        )
    men = tuple(
        certainly_preferred(instance, AgentId(Side.MEN, m))
        for m in range(instance.n_men)
    )
    women = tuple(
        certainly_preferred(instance, AgentId(Side.WOMEN, w))
        for w in range(instance.n_women)
    )
    return SmpInstance(men=men, women=women)


def _very_weakly_blocking(
    smp: SmpInstance, matching: Matching, man: int, woman: int
) -> bool:
    if woman not in smp.men[man].candidates:
        return False
    partner_m = matching.partner_of_man(man)
    if partner_m is not None and smp.men[man].prefers(partner_m, woman):
        return False
    partner_w = matching.partner_of_woman(woman)
    return partner_w is None or not smp.women[woman].prefers(partner_w, man)


def is_very_weakly_blocking(
    instance: Instance, matching: Matching, man: int, woman: int
) -> bool:
    """True iff neither member certainly prefers their current partner.

    Unmatched agents have no partner to certainly prefer, so a mutually
    acceptable pair of unmatched agents always very weakly blocks.
    """
    instance.validate_matching(matching)
    if not (0 <= man < instance.n_men and 0 <= woman < instance.n_women):
        raise ValidationError(f"pair ({man}, {woman}) references unknown agents")
    if matching.partner_of_man(man) == woman:
        raise ValidationError(f"pair ({man}, {woman}) is matched, not blocking")
    smp = smp_from_instance(instance)
    return _very_weakly_blocking(smp, matching, man, woman)


def is_certainly_stable(instance: Instance, matching: Matching) -> bool:
    """True iff the matching is stable in every positive-probability realization."""
    instance.validate_matching(matching)
    if isinstance(instance.model, JointModel):
        return all(
            is_stable(profile, matching) for profile, _ in instance.model.profiles
        )
    smp = smp_from_instance(instance)
    for m in range(instance.n_men):
        for w in sorted(instance.acceptable_men[m]):
            if matching.partner_of_man(m) == w:
                continue
            if _very_weakly_blocking(smp, matching, m, w):
                return False
    return True


def super_stable_smp(smp: SmpInstance) -> Matching | None:
    """A matching with no very weakly blocking pair, or None if there is none.

    Proposal-and-deletion closure: every man proposes to each maximal woman
    of his current list, which deletes all strictly worse men from her list.
    Once proposals are quiescent, the suitors of any woman holding two or
    more proposals are pairwise incomparable to her, so none of them can be
    her partner in a super-stable matching and she drops them all. Every
    deletion removes a pair that belongs to no super-stable matching, so at
    the fixpoint the engagement set is the only candidate: a man with
    several maximal women left means infeasibility, and otherwise the
    candidate is verified against the original orders before being returned.
    """
    men_lists = [set(order.candidates) for order in smp.men]
    women_lists = [set(order.candidates) for order in smp.women]

    def delete(m: int, w: int) -> None:
        men_lists[m].discard(w)
        women_lists[w].discard(m)

    changed = True
    while changed:
        # tie-break deletions are sound only once proposals are quiescent
        proposing = True
        while proposing:
            proposing = False
            for m in range(smp.n_men):
                for w in smp.men[m].maximal(men_lists[m]):
                    worse = [
                        m2 for m2 in women_lists[w] if smp.women[w].prefers(m, m2)
                    ]
                    for m2 in worse:
                        delete(m2, w)
                        proposing = True
        changed = False
        engaged: dict[int, list[int]] = {}
        for m in range(smp.n_men):
            for w in smp.men[m].maximal(men_lists[m]):
                engaged.setdefault(w, []).append(m)
        for w, suitors in engaged.items():
            if len(suitors) >= 2:
                for m in suitors:
                    delete(m, w)
                    changed = True

    pairs = []
    for m in range(smp.n_men):
        maximals = smp.men[m].maximal(men_lists[m])
        if len(maximals) >= 2:
            return None
        if maximals:
            pairs.append((m, maximals[0]))
    candidate = Matching.from_pairs(pairs)
    for m in range(smp.n_men):
        for w in sorted(smp.men[m].candidates):
            if candidate.partner_of_man(m) == w:
                continue
            if _very_weakly_blocking(smp, candidate, m, w):
                return None
    return candidate


def exists_certainly_stable_matching(
    instance: Instance, cap: int | None = DEFAULT_CAP
) -> Matching | None:
    """A certainly stable matching if one exists, else None.

    Independent models go through the super-stable reduction on the
    certainly-preferred orders. The joint model enumerates the stable set of
    its first profile and keeps the first matching stable everywhere.
    """
    if isinstance(instance.model, JointModel):
        profiles = instance.model.profiles
        candidates = enumerate_stable_matchings(profiles[0][0], cap=cap)
        for candidate in candidates:
            if all(is_stable(profile, candidate) for profile, _ in profiles[1:]):
                return candidate
        return None
    return super_stable_smp(smp_from_instance(instance))

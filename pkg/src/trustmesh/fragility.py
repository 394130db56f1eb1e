"""Withdrawal dynamics: witness sets for trust relations and what happens when a
trustee sovereignly retracts them.

For a relation that currently holds, ``kappa`` returns the complete set of
shared propositions the relation rests on. Withdrawing all of them from the
trustee's profile always falsifies the relation; ``fragility_check`` performs
exactly that and records every step.

A relation instance is called *stable* when no withdrawal sequence by the
trustee alone can falsify it. Every relation handled here is unstable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Union

from .equivalence import common_pool, monopoly_providers
from .errors import PropositionAbsent, PropositionAlreadyAsserted, RelationDoesNotHold
from .model import TrustProposition, Universe
from .relations import TrustEdge, foreign_trust


@dataclass(frozen=True)
class ForeignTrustRelation:
    scope: str

    def to_dict(self) -> dict:
        return {"relation": "ForeignTrust", "scope": self.scope}


@dataclass(frozen=True)
class DirectMutualRelation:
    def to_dict(self) -> dict:
        return {"relation": "DirectMutual"}


@dataclass(frozen=True)
class EquivV2Relation:
    scope: str
    c1: str
    c2: str

    def to_dict(self) -> dict:
        return {"relation": "EquivV2", "scope": self.scope, "c1": self.c1, "c2": self.c2}


Relation = Union[ForeignTrustRelation, DirectMutualRelation, EquivV2Relation]


def _witnesses(universe: Universe, trustor: str, trustee: str, relation: Relation) -> frozenset[TrustProposition]:
    a, b = universe[trustor], universe[trustee]
    if isinstance(relation, ForeignTrustRelation):
        return frozenset(w.proposition for w in foreign_trust(a, b, relation.scope).witnesses)
    if isinstance(relation, DirectMutualRelation):
        return a.propositions & b.propositions
    if isinstance(relation, EquivV2Relation):
        pool = common_pool(universe)
        creds1 = {t.credential for t in pool if t.scope == relation.scope}
        if relation.c1 not in creds1 or relation.c2 not in creds1:
            return frozenset()
        return frozenset(
            t for t in pool if t.scope == relation.scope and t.credential in (relation.c1, relation.c2)
        )
    raise TypeError(f"unsupported relation {relation!r}")


def relation_holds(universe: Universe, trustor: str, trustee: str, relation: Relation) -> bool:
    return bool(_witnesses(universe, trustor, trustee, relation))


@dataclass(frozen=True)
class KappaSet:
    trustor: str
    trustee: str
    relation: Relation
    witnesses: frozenset[TrustProposition]

    def to_dict(self) -> dict:
        return {
            "trustor": self.trustor,
            "trustee": self.trustee,
            **self.relation.to_dict(),
            "witnesses": [list(t.as_tuple()) for t in sorted(self.witnesses)],
        }


def kappa(universe: Universe, trustor: str, trustee: str, relation: Relation) -> KappaSet:
    witnesses = _witnesses(universe, trustor, trustee, relation)
    if not witnesses:
        raise RelationDoesNotHold(
            f"{relation.to_dict()} does not hold from {trustor!r} to {trustee!r}",
            trustor=trustor,
            trustee=trustee,
            **relation.to_dict(),
        )
    return KappaSet(trustor, trustee, relation, witnesses)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class WithdrawalEvent:
    eco_id: str
    proposition: TrustProposition
    sequence: int = 0
    timestamp: str = field(default_factory=_now, compare=False)


def withdraw(universe: Universe, event: WithdrawalEvent) -> Universe:
    """Remove one proposition from one profile. No other profile is touched."""
    profile = universe[event.eco_id]
    if event.proposition not in profile.propositions:
        raise PropositionAbsent(
            f"{event.eco_id!r} does not assert {event.proposition}",
            eco_id=event.eco_id,
            proposition=list(event.proposition.as_tuple()),
        )
    return universe.with_profile(profile.with_propositions(profile.propositions - {event.proposition}))


def reassert(universe: Universe, eco_id: str, proposition: TrustProposition) -> Universe:
    profile = universe[eco_id]
    if proposition in profile.propositions:
        raise PropositionAlreadyAsserted(
            f"{eco_id!r} already asserts {proposition}",
            eco_id=eco_id,
            proposition=list(proposition.as_tuple()),
        )
    return universe.with_profile(profile.with_propositions(profile.propositions | {proposition}))


@dataclass(frozen=True)
class TraceStep:
    action: str
    proposition: TrustProposition | None
    relation_state: bool
    sequence: int | None = None

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "proposition": list(self.proposition.as_tuple()) if self.proposition else None,
            "relation_state": self.relation_state,
            "sequence": self.sequence,
        }


@dataclass
class FragilityTrace:
    kappa: KappaSet
    steps: list[TraceStep]
    events: list[WithdrawalEvent]
    before: Universe
    after: Universe

    @property
    def broken(self) -> bool:
        return not self.steps[-1].relation_state

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in self.steps)

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
            "broken": self.broken,
            "trusts": not self.broken,
        }


def fragility_check(
    universe: Universe,
    trustor: str,
    trustee: str,
    relation: Relation,
    *,
    first_sequence: int = 1,
    clock: Callable[[], str] = _now,
) -> FragilityTrace:
    """Withdraw every witness from the trustee and confirm the relation is gone."""
    k = kappa(universe, trustor, trustee, relation)
    steps = [TraceStep("evaluate", None, True)]
    events = []
    current = universe
    for i, t in enumerate(sorted(k.witnesses)):
        event = WithdrawalEvent(trustee, t, first_sequence + i, clock())
        current = withdraw(current, event)
        events.append(event)
        steps.append(
            TraceStep("withdraw", t, relation_holds(current, trustor, trustee, relation), event.sequence)
        )
    steps.append(TraceStep("evaluate", None, relation_holds(current, trustor, trustee, relation)))
    return FragilityTrace(k, steps, events, universe, current)


# -- impact ----------------------------------------------------------------------


@dataclass
class WithdrawalImpact:
    eco_id: str
    proposition: TrustProposition
    broken_edges: list[TrustEdge]
    broken_mutual: list[tuple[str, str]]
    common_pool_removed: list[TrustProposition]
    equivalence_pairs_lost: list[tuple[str, str, str]]
    collapsed_monopolies: list[tuple[str, str, str]]

    @property
    def empty(self) -> bool:
        return not (
            self.broken_edges
            or self.broken_mutual
            or self.common_pool_removed
            or self.equivalence_pairs_lost
            or self.collapsed_monopolies
        )

    def to_dict(self) -> dict:
        return {
            "ecoID": self.eco_id,
            "proposition": list(self.proposition.as_tuple()),
            "brokenEdges": [e.to_dict() for e in self.broken_edges],
            "brokenMutualTrust": [list(p) for p in self.broken_mutual],
            "commonPoolRemoved": [list(t.as_tuple()) for t in self.common_pool_removed],
            "equivalencePairsLost": [
                {"scope": s, "c1": a, "c2": b} for s, a, b in self.equivalence_pairs_lost
            ],
            "collapsedMonopolies": [
                {"scope": s, "provider": p, "credential": c} for s, p, c in self.collapsed_monopolies
            ],
        }


def _edges_involving(universe: Universe, eco_id: str) -> set[TrustEdge]:
    edges = set()
    me = universe[eco_id]
    for other in universe:
        if other.eco_id == eco_id:
            continue
        for a, b in ((me, other), (other, me)):
            for s in a.scopes & b.scopes:
                if foreign_trust(a, b, s).trusts:
                    edges.add(TrustEdge(a.eco_id, b.eco_id, s))
    return edges


def _v2_pairs(pool: frozenset[TrustProposition]) -> set[tuple[str, str, str]]:
    by_scope: dict[str, set[str]] = {}
    for t in pool:
        by_scope.setdefault(t.scope, set()).add(t.credential)
    return {(s, a, b) for s, cs in by_scope.items() for a in cs for b in cs if a <= b}


def withdrawal_impact(universe: Universe, event: WithdrawalEvent) -> WithdrawalImpact:
    """Diff trust edges, mutual trust, the common pool and v2 equivalence
    across a withdrawal, without applying it.

    Only relations involving ``event.eco_id`` can change, so edges and mutual
    trust are compared for those pairs only. Removing a proposition never
    creates an edge.
    """
    after = withdraw(universe, event)
    eco_id = event.eco_id

    edges_before = _edges_involving(universe, eco_id)
    edges_after = _edges_involving(after, eco_id)

    me_before, me_after = universe[eco_id], after[eco_id]
    broken_mutual = []
    for other in universe:
        if other.eco_id == eco_id:
            continue
        if (me_before.propositions & other.propositions) and not (me_after.propositions & other.propositions):
            broken_mutual.append(tuple(sorted((eco_id, other.eco_id))))

    pool_before = common_pool(universe)
    pool_after = common_pool(after)
    removed = sorted(pool_before - pool_after)
    pairs_lost = sorted(_v2_pairs(pool_before) - _v2_pairs(pool_after))

    collapsed = []
    creds_after = {(t.scope, t.credential) for t in pool_after}
    for t in removed:
        if (t.scope, t.credential) in creds_after:
            continue
        issuers = monopoly_providers(universe, t.scope, t.credential)
        if issuers.monopoly:
            collapsed.append((t.scope, t.provider, t.credential))

    return WithdrawalImpact(
        eco_id=eco_id,
        proposition=event.proposition,
        broken_edges=sorted(edges_before - edges_after),
        broken_mutual=sorted(broken_mutual),
        common_pool_removed=removed,
        equivalence_pairs_lost=pairs_lost,
        collapsed_monopolies=collapsed,
    )

"""Trust relations between ecosystems.

* foreign trust: ``trustor`` accepts, for a scope, a credential issued by a
  provider that is domestic to ``trustee`` but not to ``trustor``, and both
  accept that same proposition;
* direct mutual trust: the two profiles share at least one proposition;
* trust realm: every ecosystem accepting something for a scope.

None of these relations is transitive and no closure is offered.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

from .errors import NotShared
from .model import EcosystemTrustProfile, TrustProposition, Universe


@dataclass(frozen=True, order=True)
class TrustWitness:
    proposition: TrustProposition
    provider_domestic_in: str

    def to_dict(self) -> dict:
        t = self.proposition
        return {
            "scope": t.scope,
            "provider": t.provider,
            "credential": t.credential,
            "providerDomesticIn": self.provider_domestic_in,
        }


class ForeignTrust(NamedTuple):
    trusts: bool
    witnesses: list[TrustWitness]


@dataclass(frozen=True, order=True)
class TrustEdge:
    """``trustor`` trusts ``trustee`` regarding ``scope``."""

    trustor: str
    trustee: str
    scope: str

    def to_dict(self) -> dict:
        return {"trustor": self.trustor, "trustee": self.trustee, "scope": self.scope}


def foreign_trust(
    trustor: EcosystemTrustProfile, trustee: EcosystemTrustProfile, scope: str
) -> ForeignTrust:
    """Decide whether ``trustor`` trusts the foreign ecosystem ``trustee`` for ``scope``.

    Returns every witness proposition, sorted. Self-queries are answered (always
    false, since no provider can be both domestic and foreign to the same profile).
    """
    foreign_to_trustor = trustee.domestic_providers - trustor.domestic_providers
    witnesses = [
        TrustWitness(t, trustee.eco_id)
        for t in sorted(trustor.propositions & trustee.propositions)
        if t.scope == scope and t.provider in foreign_to_trustor
    ]
    return ForeignTrust(bool(witnesses), witnesses)


def direct_mutual_trust(a: EcosystemTrustProfile, b: EcosystemTrustProfile) -> bool:
    return not a.propositions.isdisjoint(b.propositions)


def trust_realm(universe: Universe, scope: str) -> frozenset[str]:
    return frozenset(
        profile.eco_id
        for profile in universe
        if any(t.scope == scope for t in profile.propositions)
    )


def trust_edges(universe: Universe) -> frozenset[TrustEdge]:
    """All foreign-trust edges of the universe over every known scope."""
    edges = set()
    for a in universe:
        for b in universe:
            if a.eco_id == b.eco_id:
                continue
            for t in a.propositions & b.propositions:
                if t.provider in b.domestic_providers and t.provider not in a.domestic_providers:
                    edges.add(TrustEdge(a.eco_id, b.eco_id, t.scope))
    return frozenset(edges)


class CaseId(enum.Enum):
    BOTH_FOREIGN = "BothForeign"
    TRUSTEE_DOMESTIC = "TrusteeDomestic"
    TRUSTOR_DOMESTIC = "TrustorDomestic"
    BOTH_DOMESTIC = "BothDomestic"


@dataclass(frozen=True)
class SharedPropositionCase:
    """Classification of one shared proposition by where its provider is domestic.

    ``consequences`` are the edges the case table associates with the row;
    ``edges`` are the ones that actually hold by the foreign-trust definition.
    The two differ for ``BOTH_DOMESTIC``: a provider domestic to both sides is
    foreign to neither, so the shared proposition witnesses no edge at all.
    For ``BOTH_FOREIGN`` the edges to a third ecosystem are only reported as
    ``candidates`` (ecosystems where the provider is domestic) and
    ``confirmed`` (candidates that also accept the proposition, for which both
    edges really hold).
    """

    case_id: CaseId
    proposition: TrustProposition
    edges: tuple[TrustEdge, ...] = ()
    consequences: tuple[TrustEdge, ...] = ()
    candidates: tuple[str, ...] = ()
    confirmed: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "case": self.case_id.value,
            "proposition": self.proposition.as_tuple(),
            "edges": [e.to_dict() for e in self.edges],
            "consequences": [e.to_dict() for e in self.consequences],
            "candidates": list(self.candidates),
            "confirmed": list(self.confirmed),
        }


def classify_shared_proposition(
    t: TrustProposition,
    a: EcosystemTrustProfile,
    b: EcosystemTrustProfile,
    universe: Universe | None = None,
) -> SharedPropositionCase:
    if t not in a.propositions or t not in b.propositions:
        raise NotShared(f"{t} is not accepted by both {a.eco_id!r} and {b.eco_id!r}")
    in_a = t.provider in a.domestic_providers
    in_b = t.provider in b.domestic_providers

    if in_a and in_b:
        claimed = (TrustEdge(a.eco_id, b.eco_id, t.scope), TrustEdge(b.eco_id, a.eco_id, t.scope))
        return SharedPropositionCase(CaseId.BOTH_DOMESTIC, t, (), claimed)
    if in_b:
        edges = (TrustEdge(a.eco_id, b.eco_id, t.scope),)
        return SharedPropositionCase(CaseId.TRUSTEE_DOMESTIC, t, edges, edges)
    if in_a:
        edges = (TrustEdge(b.eco_id, a.eco_id, t.scope),)
        return SharedPropositionCase(CaseId.TRUSTOR_DOMESTIC, t, edges, edges)

    candidates: list[str] = []
    confirmed: list[str] = []
    edges: list[TrustEdge] = []
    if universe is not None:
        for other in universe:
            if t.provider not in other.domestic_providers:
                continue
            candidates.append(other.eco_id)
            if t in other.propositions:
                confirmed.append(other.eco_id)
                edges.append(TrustEdge(a.eco_id, other.eco_id, t.scope))
                edges.append(TrustEdge(b.eco_id, other.eco_id, t.scope))
    return SharedPropositionCase(
        CaseId.BOTH_FOREIGN, t, tuple(edges), tuple(edges), tuple(candidates), tuple(confirmed)
    )

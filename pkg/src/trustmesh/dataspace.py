"""Trust frameworks, data spaces and cross-space interoperability.

A trust framework is a set of propositions, a set of rules and an attestation
relation saying which proposition attests which rule. It is consistent when
every rule is attested by at least one proposition.

A data space adds participants and marks two subsets of its rules as
sharing-related: provider-facing rules (what a consumer requires of a
provider) and consumer-facing rules (what a provider requires of a consumer).
The propositions attesting these rules are the ones compared across spaces:
two spaces are interoperable exactly when those proposition sets coincide.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import InconsistentFramework, UnknownParticipant
from .model import TrustProposition
from .unionfind import UnionFind


@dataclass(frozen=True, order=True)
class Assertion:
    proposition: TrustProposition
    rule: str

    def to_dict(self) -> dict:
        return {"proposition": list(self.proposition.as_tuple()), "rule": self.rule}


@dataclass(frozen=True)
class TrustFramework:
    propositions: frozenset[TrustProposition] = frozenset()
    rules: frozenset[str] = frozenset()
    assertions: frozenset[Assertion] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "propositions", frozenset(self.propositions))
        object.__setattr__(self, "rules", frozenset(self.rules))
        object.__setattr__(self, "assertions", frozenset(self.assertions))
        for rule in self.rules:
            if not rule:
                raise ValueError("empty rule identifier")
        for a in self.assertions:
            if a.proposition not in self.propositions:
                raise ValueError(f"assertion references unknown proposition {a.proposition}")
            if a.rule not in self.rules:
                raise ValueError(f"assertion references unknown rule {a.rule!r}")

    def attesting(self, rules: Iterable[str]) -> frozenset[Assertion]:
        rules = frozenset(rules)
        return frozenset(a for a in self.assertions if a.rule in rules)


class ConsistencyCheck(NamedTuple):
    consistent: bool
    unattested: list[str]


def check_framework_consistency(framework: TrustFramework) -> ConsistencyCheck:
    attested = {a.rule for a in framework.assertions}
    unattested = sorted(framework.rules - attested)
    return ConsistencyCheck(not unattested, unattested)


def _require_consistent(framework: TrustFramework) -> None:
    check = check_framework_consistency(framework)
    if not check.consistent:
        raise InconsistentFramework(check.unattested)


@dataclass(frozen=True)
class DataSpace:
    """Participants, a framework and its sharing-related rule subsets.

    ``verifiable`` marks propositions whose evidence the receiving side can
    check independently; it only annotates interoperability reports.
    """

    participants: frozenset[str]
    framework: TrustFramework
    provider_facing: frozenset[str] = frozenset()
    consumer_facing: frozenset[str] = frozenset()
    name: str = ""
    verifiable: frozenset[TrustProposition] = field(default_factory=frozenset, compare=False)

    def __post_init__(self):
        for attr in ("participants", "provider_facing", "consumer_facing", "verifiable"):
            object.__setattr__(self, attr, frozenset(getattr(self, attr)))
        unknown = (self.provider_facing | self.consumer_facing) - self.framework.rules
        if unknown:
            raise ValueError(f"sharing rules not in the framework: {sorted(unknown)}")

    @property
    def sharing_rules(self) -> frozenset[str]:
        return self.provider_facing | self.consumer_facing


class SharingPropositions(NamedTuple):
    provider_facing: frozenset[TrustProposition]
    consumer_facing: frozenset[TrustProposition]
    all: frozenset[TrustProposition]


def _attested_by(framework: TrustFramework, rules: frozenset[str]) -> frozenset[TrustProposition]:
    return frozenset(a.proposition for a in framework.assertions if a.rule in rules)


def sharing_propositions(space: DataSpace) -> SharingPropositions:
    _require_consistent(space.framework)
    pf = _attested_by(space.framework, space.provider_facing)
    cf = _attested_by(space.framework, space.consumer_facing)
    return SharingPropositions(pf, cf, pf | cf)


@dataclass(frozen=True)
class SharingDirection:
    provider: str
    consumer: str


class SharingCheck(NamedTuple):
    possible: bool
    missing: list[Assertion]
    unattested_rules: list[str]


def sharing_possible(
    space: DataSpace,
    direction: SharingDirection,
    presented: Iterable[Assertion] | None = None,
) -> SharingCheck:
    """Whether data sharing from ``direction.provider`` to ``direction.consumer`` is possible.

    The required attestations are the framework's assertions for the sharing
    rules. ``presented`` is the set of attestations actually available; it
    defaults to all of the framework's assertions. Sharing is possible iff no
    required attestation is missing and every sharing rule is attested at all.
    The answer never depends on which two participants are named.
    """
    for who in (direction.provider, direction.consumer):
        if who not in space.participants:
            raise UnknownParticipant(f"{who!r} is not a participant", participant=who)
    required = space.framework.attesting(space.sharing_rules)
    available = space.framework.assertions if presented is None else frozenset(presented)
    missing = sorted(required - available)
    attested_rules = {a.rule for a in required}
    unattested = sorted(space.sharing_rules - attested_rules)
    return SharingCheck(not missing and not unattested, missing, unattested)


@dataclass
class OneWayReport:
    """Whether providers of ``source`` can share with consumers of ``target``."""

    source: str
    target: str
    provider_facing_ok: bool
    consumer_facing_ok: bool
    provider_facing_offending: list[TrustProposition]
    consumer_facing_offending: list[TrustProposition]

    @property
    def possible(self) -> bool:
        return self.provider_facing_ok and self.consumer_facing_ok

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "possible": self.possible,
            "providerFacingSubset": {
                "ok": self.provider_facing_ok,
                "offending": [list(t.as_tuple()) for t in self.provider_facing_offending],
            },
            "consumerFacingSubset": {
                "ok": self.consumer_facing_ok,
                "offending": [list(t.as_tuple()) for t in self.consumer_facing_offending],
            },
        }


def one_way_cross_sharing(source: DataSpace, target: DataSpace) -> OneWayReport:
    """Providers in ``source`` sharing with consumers in ``target``.

    The target's consumers accept only their own provider-facing propositions,
    so the source's provider-facing set must be contained in the target's.
    The source's providers accept only their own consumer-facing propositions,
    so the target's consumer-facing set must be contained in the source's.
    """
    s = sharing_propositions(source)
    t = sharing_propositions(target)
    pf_bad = sorted(s.provider_facing - t.provider_facing)
    cf_bad = sorted(t.consumer_facing - s.consumer_facing)
    return OneWayReport(source.name, target.name, not pf_bad, not cf_bad, pf_bad, cf_bad)


@dataclass
class InteropReport:
    interoperable: bool
    symmetric_difference: list[TrustProposition]
    a_to_b: OneWayReport
    b_to_a: OneWayReport
    only_in_a: list[TrustProposition]
    only_in_b: list[TrustProposition]
    verifiable: frozenset[TrustProposition] = frozenset()

    def annotation(self, t: TrustProposition) -> str:
        return "independently-verifiable" if t in self.verifiable else "shared-tsp"

    def to_dict(self) -> dict:
        def row(t: TrustProposition, side: str) -> dict:
            return {
                "ecoTrustScope": t.scope,
                "ecoTSP": t.provider,
                "ecoCredentialType": t.credential,
                "onlyIn": side,
                "kind": self.annotation(t),
            }

        only_a = set(self.only_in_a)
        return {
            "interoperable": self.interoperable,
            "symmetric_difference": [row(t, "a" if t in only_a else "b") for t in self.symmetric_difference],
            "one_way": {"a_to_b": self.a_to_b.to_dict(), "b_to_a": self.b_to_a.to_dict()},
        }


def interop_check(a: DataSpace, b: DataSpace) -> InteropReport:
    """Interoperable iff both spaces rest on the same sharing propositions."""
    sa = sharing_propositions(a)
    sb = sharing_propositions(b)
    only_a = sorted(sa.all - sb.all)
    only_b = sorted(sb.all - sa.all)
    return InteropReport(
        interoperable=sa.all == sb.all,
        symmetric_difference=sorted(only_a + only_b),
        a_to_b=one_way_cross_sharing(a, b),
        b_to_a=one_way_cross_sharing(b, a),
        only_in_a=only_a,
        only_in_b=only_b,
        verifiable=a.verifiable | b.verifiable,
    )


def interop_classes(spaces: list[DataSpace]) -> list[list[DataSpace]]:
    """Group spaces into interoperability classes, preserving input order within a group."""
    keys = [sharing_propositions(s).all for s in spaces]
    uf = UnionFind(range(len(spaces)))
    first_with: dict[frozenset, int] = {}
    for i, key in enumerate(keys):
        if key in first_with:
            uf.union(first_with[key], i)
        else:
            first_with[key] = i
    groups = sorted((sorted(g) for g in uf.groups()), key=lambda g: g[0])
    return [[spaces[i] for i in g] for g in groups]

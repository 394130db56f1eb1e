"""Credential equivalence per trust scope.

Two constructions are offered:

``v1``
    credentials are equivalent when some scope lists both of them anywhere in
    the universe. Only an equivalence relation when the per-scope credential
    sets are pairwise disjoint, and trivially open to imposters: any ecosystem
    declaring a fresh credential under a scope joins that scope's class.

``v2``
    credentials are equivalent for a scope when both are issued for that scope
    by propositions in the common pool, the propositions accepted by every
    ecosystem. An imposter cannot enter the pool without every ecosystem's
    consent.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import NamedTuple

from .errors import EmptyScope, EmptyUniverse, PartitionViolated
from .model import EcosystemTrustProfile, TrustProposition, Universe
from .unionfind import UnionFind

V1 = "v1"
V2 = "v2"
MODES = (V1, V2)


@dataclass(frozen=True)
class ScopeCredentialIndex:
    by_scope: dict[str, frozenset[str]]

    @classmethod
    def from_universe(cls, universe: Universe) -> ScopeCredentialIndex:
        by_scope: dict[str, set[str]] = {}
        for profile in universe:
            for t in profile.propositions:
                by_scope.setdefault(t.scope, set()).add(t.credential)
        return cls({s: frozenset(cs) for s, cs in by_scope.items()})

    @property
    def universe_credentials(self) -> frozenset[str]:
        return frozenset().union(*self.by_scope.values())

    def scopes_of_credential(self, credential: str) -> list[str]:
        return sorted(s for s, cs in self.by_scope.items() if credential in cs)


def credentials_for_scope(universe: Universe, scope: str) -> frozenset[str]:
    return frozenset(
        t.credential for profile in universe for t in profile.propositions if t.scope == scope
    )


class PartitionCheck(NamedTuple):
    ok: bool
    violations: list[str]


def check_partition(index: ScopeCredentialIndex) -> PartitionCheck:
    """Report every credential listed under two or more scopes."""
    seen: dict[str, int] = {}
    for creds in index.by_scope.values():
        for c in creds:
            seen[c] = seen.get(c, 0) + 1
    violations = sorted(c for c, n in seen.items() if n > 1)
    return PartitionCheck(not violations, violations)


def _require_partition(universe: Universe) -> ScopeCredentialIndex:
    index = ScopeCredentialIndex.from_universe(universe)
    check = check_partition(index)
    if not check.ok:
        raise PartitionViolated(check.violations)
    return index


def equiv_v1(universe: Universe, c1: str, c2: str) -> bool:
    index = _require_partition(universe)
    return any(c1 in cs and c2 in cs for cs in index.by_scope.values())


def common_pool(universe: Universe) -> frozenset[TrustProposition]:
    if len(universe) == 0:
        raise EmptyUniverse("the common pool of an empty universe is undefined")
    return reduce(lambda acc, p: acc & p.propositions, universe, next(iter(universe)).propositions)


def _pool_credentials(pool: frozenset[TrustProposition], scope: str) -> frozenset[str]:
    return frozenset(t.credential for t in pool if t.scope == scope)


def equiv_v2(universe: Universe, scope: str, c1: str, c2: str) -> bool:
    creds = _pool_credentials(common_pool(universe), scope)
    return c1 in creds and c2 in creds


class IssuerSet(NamedTuple):
    providers: frozenset[str]
    monopoly: bool


def monopoly_providers(universe: Universe, scope: str, credential: str) -> IssuerSet:
    providers = frozenset(
        t.provider
        for profile in universe
        for t in profile.propositions
        if t.scope == scope and t.credential == credential
    )
    return IssuerSet(providers, len(providers) == 1)


# -- reports -----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class CatalogEntry:
    scope: str
    eco_id: str
    provider: str
    credential: str

    def to_dict(self) -> dict:
        return {
            "ecoTrustScope": self.scope,
            "ecoID": self.eco_id,
            "ecoTSP": self.provider,
            "ecoCredentialType": self.credential,
        }


@dataclass(frozen=True)
class EquivalenceClass:
    scope: str
    credentials: tuple[str, ...]
    entries: tuple[CatalogEntry, ...]

    def to_dict(self) -> dict:
        return {
            "ecoTrustScope": self.scope,
            "credentials": list(self.credentials),
            "catalog": [e.to_dict() for e in self.entries],
        }


@dataclass
class EquivalenceReport:
    """Equivalence classes grouped by scope, in the shape of a credential catalog.

    For ``v2``, in-scope credentials that have no proposition in the common pool
    are listed under ``unmatched``: they are equivalent to nothing.
    """

    mode: str
    classes: list[EquivalenceClass]
    partition_ok: bool | None = None
    common_pool_size: int | None = None
    unmatched: dict[str, list[str]] = field(default_factory=dict)

    def classes_for(self, scope: str) -> list[EquivalenceClass]:
        return [c for c in self.classes if c.scope == scope]

    def to_dict(self) -> dict:
        out: dict = {"mode": self.mode, "classes": [c.to_dict() for c in self.classes]}
        if self.mode == V1:
            out["partitionOk"] = self.partition_ok
        else:
            out["commonPoolSize"] = self.common_pool_size
            out["unmatched"] = {s: list(cs) for s, cs in sorted(self.unmatched.items())}
        return out


def _classes(scope: str, rows: list[CatalogEntry]) -> list[EquivalenceClass]:
    uf = UnionFind()
    anchor = None
    for row in rows:
        uf.add(row.credential)
        if anchor is None:
            anchor = row.credential
        uf.union(anchor, row.credential)
    out = []
    for group in uf.groups():
        creds = tuple(sorted(group))
        entries = tuple(sorted(r for r in rows if r.credential in group))
        out.append(EquivalenceClass(scope, creds, entries))
    return sorted(out, key=lambda c: c.credentials)


def equivalence_report(universe: Universe, mode: str = V2, scope: str | None = None) -> EquivalenceReport:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    scopes = sorted(universe.scopes) if scope is None else [scope]

    if mode == V1:
        _require_partition(universe)
        classes = []
        for s in scopes:
            rows = [
                CatalogEntry(s, eco_id, t.provider, t.credential)
                for eco_id, t in universe.all_propositions()
                if t.scope == s
            ]
            classes.extend(_classes(s, rows))
        return EquivalenceReport(V1, classes, partition_ok=True)

    pool = common_pool(universe)
    classes = []
    unmatched = {}
    for s in scopes:
        rows = [
            CatalogEntry(s, profile.eco_id, t.provider, t.credential)
            for profile in universe
            for t in sorted(pool)
            if t.scope == s
        ]
        classes.extend(_classes(s, rows))
        rest = credentials_for_scope(universe, s) - _pool_credentials(pool, s)
        if rest:
            unmatched[s] = sorted(rest)
    return EquivalenceReport(V2, classes, common_pool_size=len(pool), unmatched=unmatched)


# -- imposter attack -----------------------------------------------------------


def _fresh(prefix: str, taken) -> str:
    if prefix not in taken:
        return prefix
    n = 1
    while f"{prefix}-{n}" in taken:
        n += 1
    return f"{prefix}-{n}"


@dataclass
class ImposterTrace:
    scope: str
    imposter: EcosystemTrustProfile
    credential: str
    provider: str
    before: Universe
    after: Universe
    v1: dict[str, bool]
    v2: dict[str, bool]
    v1_class_count_before: int
    v1_class_count_after: int
    v1_class_size_before: int
    v1_class_size_after: int

    @property
    def v1_vulnerable(self) -> bool:
        return all(self.v1.values())

    @property
    def v2_resistant(self) -> bool:
        return not any(self.v2.values())

    def to_dict(self) -> dict:
        return {
            "scope": self.scope,
            "imposter": {
                "ecoID": self.imposter.eco_id,
                "ecoTSP": self.provider,
                "ecoCredentialType": self.credential,
            },
            "v1": dict(sorted(self.v1.items())),
            "v2": dict(sorted(self.v2.items())),
            "v1Vulnerable": self.v1_vulnerable,
            "v2Resistant": self.v2_resistant,
            "v1ClassCount": [self.v1_class_count_before, self.v1_class_count_after],
            "v1ClassSize": [self.v1_class_size_before, self.v1_class_size_after],
        }


def demonstrate_imposter_attack(universe: Universe, scope: str) -> ImposterTrace:
    """Add a malicious ecosystem declaring a fresh credential for ``scope``.

    The imposter's only proposition uses its own fresh provider and credential.
    Afterwards the fresh credential is compared against every credential already
    listed for the scope under both constructions.
    """
    targets = sorted(credentials_for_scope(universe, scope))
    if not targets:
        raise EmptyScope(f"no credential is listed for scope {scope!r}")

    eco_id = _fresh("imposter", set(universe.eco_ids))
    provider = _fresh("imposter-tsp", universe.providers)
    credential = _fresh("imposter-credential", universe.credentials)
    imposter = EcosystemTrustProfile(
        eco_id, frozenset({provider}), frozenset({TrustProposition(scope, provider, credential)})
    )
    after = universe.with_profile(imposter)

    before_classes = equivalence_report(universe, V1, scope).classes
    after_classes = equivalence_report(after, V1, scope).classes
    return ImposterTrace(
        scope=scope,
        imposter=imposter,
        credential=credential,
        provider=provider,
        before=universe,
        after=after,
        v1={c: equiv_v1(after, credential, c) for c in targets},
        v2={c: equiv_v2(after, scope, credential, c) for c in targets},
        v1_class_count_before=len(before_classes),
        v1_class_count_after=len(after_classes),
        v1_class_size_before=sum(len(c.credentials) for c in before_classes),
        v1_class_size_after=sum(len(c.credentials) for c in after_classes),
    )

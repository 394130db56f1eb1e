"""Core vocabulary: trust propositions, ecosystem trust profiles and the universe.

A trust proposition ``(scope, provider, credential)`` reads "provider issues
credential for scope". An ecosystem trust profile pairs the set of domestic
providers with the set of propositions the ecosystem accepts. Identifiers are
opaque strings compared byte for byte.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NewType

ScopeId = NewType("ScopeId", str)
ProviderId = NewType("ProviderId", str)
CredentialId = NewType("CredentialId", str)
EcoId = NewType("EcoId", str)

# RFC 3986 scheme followed by a non-empty, whitespace-free remainder.
_URI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:[^\s]+$")


def is_valid_uri(value: str) -> bool:
    return bool(_URI_RE.match(value))


@dataclass(frozen=True, order=True)
class TrustProposition:
    scope: str
    provider: str
    credential: str

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.scope, self.provider, self.credential)

    def __str__(self) -> str:
        return f"({self.scope}, {self.provider}, {self.credential})"


def _freeze_mapping(value) -> Mapping[str, str]:
    return MappingProxyType(dict(value or {}))


@dataclass(frozen=True)
class EcosystemTrustProfile:
    """``E = <P, T>`` plus an optional endpoint per domestic provider.

    Endpoints are metadata only; they take no part in equality or hashing.
    """

    eco_id: str
    domestic_providers: frozenset[str] = frozenset()
    propositions: frozenset[TrustProposition] = frozenset()
    endpoints: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "domestic_providers", frozenset(self.domestic_providers))
        object.__setattr__(self, "propositions", frozenset(self.propositions))
        object.__setattr__(self, "endpoints", _freeze_mapping(self.endpoints))

    @property
    def scopes(self) -> frozenset[str]:
        return scopes_of(self)

    @property
    def credentials(self) -> frozenset[str]:
        return credentials_of(self)

    def with_propositions(self, propositions: Iterable[TrustProposition]) -> EcosystemTrustProfile:
        return EcosystemTrustProfile(
            self.eco_id, self.domestic_providers, frozenset(propositions), self.endpoints
        )

    def sorted_propositions(self) -> list[TrustProposition]:
        return sorted(self.propositions)


def scopes_of(profile: EcosystemTrustProfile) -> frozenset[str]:
    return frozenset(t.scope for t in profile.propositions)


def credentials_of(profile: EcosystemTrustProfile) -> frozenset[str]:
    return frozenset(t.credential for t in profile.propositions)


def providers_of(profile: EcosystemTrustProfile) -> frozenset[str]:
    """Every provider the profile mentions, domestic or referenced by a proposition."""
    return profile.domestic_providers | {t.provider for t in profile.propositions}


def is_foreign(profile: EcosystemTrustProfile, provider: str) -> bool:
    return provider not in profile.domestic_providers


@dataclass(frozen=True)
class Universe:
    """The set of all known ecosystem trust profiles, keyed by ``eco_id``."""

    profiles: Mapping[str, EcosystemTrustProfile] = field(default_factory=dict)

    def __post_init__(self):
        profiles = dict(self.profiles)
        for key, profile in profiles.items():
            if key != profile.eco_id:
                raise ValueError(f"profile keyed {key!r} carries eco_id {profile.eco_id!r}")
        object.__setattr__(self, "profiles", MappingProxyType(profiles))

    @classmethod
    def of(cls, *profiles: EcosystemTrustProfile) -> Universe:
        ids = [p.eco_id for p in profiles]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate eco_id in universe")
        return cls({p.eco_id: p for p in profiles})

    def __eq__(self, other):
        if not isinstance(other, Universe):
            return NotImplemented
        return dict(self.profiles) == dict(other.profiles)

    def __hash__(self):
        return hash(frozenset(self.profiles.values()))

    def __len__(self) -> int:
        return len(self.profiles)

    def __iter__(self) -> Iterator[EcosystemTrustProfile]:
        for eco_id in sorted(self.profiles):
            yield self.profiles[eco_id]

    def __contains__(self, eco_id) -> bool:
        return eco_id in self.profiles

    def __getitem__(self, eco_id: str) -> EcosystemTrustProfile:
        from .errors import UnknownEcosystem

        try:
            return self.profiles[eco_id]
        except KeyError:
            raise UnknownEcosystem(eco_id) from None

    @property
    def eco_ids(self) -> list[str]:
        return sorted(self.profiles)

    def with_profile(self, profile: EcosystemTrustProfile) -> Universe:
        profiles = dict(self.profiles)
        profiles[profile.eco_id] = profile
        return Universe(profiles)

    def without(self, eco_id: str) -> Universe:
        profiles = dict(self.profiles)
        profiles.pop(eco_id, None)
        return Universe(profiles)

    @property
    def providers(self) -> frozenset[str]:
        out: set[str] = set()
        for p in self.profiles.values():
            out |= providers_of(p)
        return frozenset(out)

    @property
    def scopes(self) -> frozenset[str]:
        return frozenset(t.scope for p in self.profiles.values() for t in p.propositions)

    @property
    def credentials(self) -> frozenset[str]:
        return frozenset(t.credential for p in self.profiles.values() for t in p.propositions)

    def all_propositions(self) -> Iterator[tuple[str, TrustProposition]]:
        for profile in self:
            for t in profile.sorted_propositions():
                yield profile.eco_id, t


@dataclass(frozen=True)
class Issue:
    field: str
    message: str

    def to_dict(self) -> dict:
        return {"field": self.field, "message": self.message}


@dataclass
class ValidationReport:
    errors: list[Issue] = field(default_factory=list)
    warnings: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": [e.to_dict() for e in self.errors],
            "warnings": [w.to_dict() for w in self.warnings],
        }


def validate_profile(
    profile: EcosystemTrustProfile,
    propositions: Iterable[TrustProposition] | None = None,
) -> ValidationReport:
    """Check a profile for empty identifiers and unused domestic providers.

    ``propositions`` optionally supplies the raw proposition list the profile was
    built from, so that duplicates (collapsed by the set) can still be reported.
    Never raises.
    """
    report = ValidationReport()
    if not profile.eco_id:
        report.errors.append(Issue("eco_id", "empty ecosystem identifier"))
    for provider in sorted(profile.domestic_providers):
        if not provider:
            report.errors.append(Issue("domestic_providers", "empty provider identifier"))
    for provider, endpoint in sorted(profile.endpoints.items()):
        if endpoint is not None and not is_valid_uri(endpoint):
            report.errors.append(
                Issue(f"endpoints.{provider}", f"endpoint {endpoint!r} is not a valid URI")
            )

    raw = list(propositions) if propositions is not None else profile.sorted_propositions()
    seen: set[TrustProposition] = set()
    for i, t in enumerate(raw):
        for part in ("scope", "provider", "credential"):
            if not getattr(t, part):
                report.errors.append(Issue(f"propositions[{i}].{part}", f"empty {part}"))
        if t in seen:
            report.errors.append(Issue(f"propositions[{i}]", f"duplicate proposition {t}"))
        seen.add(t)

    used = {t.provider for t in profile.propositions}
    for provider in sorted(profile.domestic_providers - used):
        if provider:
            report.warnings.append(
                Issue("domestic_providers", f"domestic provider {provider!r} is not used by any proposition")
            )
    return report

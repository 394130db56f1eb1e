"""Ecosystem trust profiles, cross-ecosystem trust relations, credential
equivalence, withdrawal fragility and data-space interoperability, with an
event-sourced meta-registry on top."""
from .model import (
    EcosystemTrustProfile,
    TrustProposition,
    Universe,
    credentials_of,
    is_foreign,
    scopes_of,
    validate_profile,
)
from .relations import (
    classify_shared_proposition,
    direct_mutual_trust,
    foreign_trust,
    trust_realm,
)

__all__ = [
    "EcosystemTrustProfile",
    "TrustProposition",
    "Universe",
    "classify_shared_proposition",
    "credentials_of",
    "direct_mutual_trust",
    "foreign_trust",
    "is_foreign",
    "scopes_of",
    "trust_realm",
    "validate_profile",
]

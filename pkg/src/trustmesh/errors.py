"""Exception hierarchy shared by the library, the store, the service and the CLI."""
from __future__ import annotations


class TrustMeshError(Exception):
    """Base class. ``code`` is the stable machine-readable name used in error bodies."""

    code = "TrustMeshError"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


class UnknownEcosystem(TrustMeshError):
    code = "UnknownEcosystem"

    def __init__(self, eco_id: str):
        super().__init__(f"unknown ecosystem {eco_id!r}", eco_id=eco_id)
        self.eco_id = eco_id


class PropositionAbsent(TrustMeshError):
    code = "PropositionAbsent"


class PropositionAlreadyAsserted(TrustMeshError):
    code = "PropositionAlreadyAsserted"


class NotShared(TrustMeshError):
    code = "NotShared"


class PartitionViolated(TrustMeshError):
    code = "PartitionViolated"

    def __init__(self, violations):
        violations = sorted(violations)
        super().__init__(
            "credential sets per scope do not form a partition",
            violations=violations,
        )
        self.violations = violations


class EmptyScope(TrustMeshError):
    code = "EmptyScope"


class EmptyUniverse(TrustMeshError):
    code = "EmptyUniverse"


class RelationDoesNotHold(TrustMeshError):
    code = "RelationDoesNotHold"


class InconsistentFramework(TrustMeshError):
    code = "InconsistentFramework"

    def __init__(self, unattested):
        unattested = sorted(unattested)
        super().__init__("framework has rules no proposition attests", unattested_rules=unattested)
        self.unattested = unattested


class UnknownParticipant(TrustMeshError):
    code = "UnknownParticipant"


class MissingDataspaceExtension(TrustMeshError):
    code = "MissingDataspaceExtension"


class DocumentSyntaxError(TrustMeshError):
    """Input is not valid UTF-8 JSON. ``position`` is a character offset."""

    code = "SyntaxError"

    def __init__(self, message: str, position: int):
        super().__init__(message, position=position)
        self.position = position


class SchemaError(TrustMeshError):
    code = "SchemaError"

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}", field=field, reason=reason)
        self.field = field
        self.reason = reason


class StorageError(TrustMeshError):
    code = "StorageError"

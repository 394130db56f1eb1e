"""Profile documents: the JSON form ecosystems publish (``*.etp.json``).

Field names follow the ecosystem trust ontology (``ecoID``, ``ecoTSP``,
``ecoTSPEndpoint``, ``ecoTrustScope``, ``ecoCredentialType``). A document may
carry a data-space extension made of ``participants``, ``rules``,
``assertions`` and ``sharingRules``; these four come together or not at all.

Parsing is strict: unknown fields, empty identifiers, duplicates and dangling
references are all rejected, so every document that parses yields a
well-formed profile.
"""
from __future__ import annotations

import json
from typing import Annotated, Any, Optional

from pydantic import BaseModel, ConfigDict, StringConstraints, ValidationError

from .dataspace import Assertion, DataSpace, TrustFramework
from .errors import DocumentSyntaxError, SchemaError
from .model import EcosystemTrustProfile, TrustProposition, is_valid_uri

NonEmpty = Annotated[str, StringConstraints(min_length=1)]

DATASPACE_FIELDS = ("participants", "rules", "assertions", "sharingRules")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class TSPEntry(_Strict):
    ecoTSP: NonEmpty
    ecoTSPEndpoint: Optional[str] = None


class PropositionEntry(_Strict):
    ecoTrustScope: NonEmpty
    ecoTSP: NonEmpty
    ecoCredentialType: NonEmpty
    independentlyVerifiable: bool = False

    def proposition(self) -> TrustProposition:
        return TrustProposition(self.ecoTrustScope, self.ecoTSP, self.ecoCredentialType)


class AssertionEntry(_Strict):
    ecoTrustScope: NonEmpty
    ecoTSP: NonEmpty
    ecoCredentialType: NonEmpty
    rule: NonEmpty

    def proposition(self) -> TrustProposition:
        return TrustProposition(self.ecoTrustScope, self.ecoTSP, self.ecoCredentialType)


class SharingRulesEntry(_Strict):
    providerFacing: list[NonEmpty]
    consumerFacing: list[NonEmpty]


class ProfileDocument(_Strict):
    ecoID: NonEmpty
    domesticTSPs: list[TSPEntry]
    trustPropositions: list[PropositionEntry]
    participants: Optional[list[NonEmpty]] = None
    rules: Optional[list[NonEmpty]] = None
    assertions: Optional[list[AssertionEntry]] = None
    sharingRules: Optional[SharingRulesEntry] = None

    @property
    def has_dataspace(self) -> bool:
        return self.rules is not None

    def to_profile(self) -> EcosystemTrustProfile:
        return EcosystemTrustProfile(
            self.ecoID,
            frozenset(e.ecoTSP for e in self.domesticTSPs),
            frozenset(p.proposition() for p in self.trustPropositions),
            {e.ecoTSP: e.ecoTSPEndpoint for e in self.domesticTSPs if e.ecoTSPEndpoint is not None},
        )

    def to_dataspace(self) -> DataSpace | None:
        if not self.has_dataspace:
            return None
        framework = TrustFramework(
            frozenset(p.proposition() for p in self.trustPropositions),
            frozenset(self.rules),
            frozenset(Assertion(a.proposition(), a.rule) for a in self.assertions),
        )
        return DataSpace(
            frozenset(self.participants),
            framework,
            frozenset(self.sharingRules.providerFacing),
            frozenset(self.sharingRules.consumerFacing),
            name=self.ecoID,
            verifiable=frozenset(p.proposition() for p in self.trustPropositions if p.independentlyVerifiable),
        )


def _loc(loc: tuple) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += f".{part}" if out else str(part)
    return out or "$"


def _check_unique(items: list, field: str, label) -> None:
    seen = set()
    for i, item in enumerate(items):
        key = label(item)
        if key in seen:
            raise SchemaError(f"{field}[{i}]", f"duplicate entry {key!r}")
        seen.add(key)


def _check_document(doc: ProfileDocument) -> None:
    for i, tsp in enumerate(doc.domesticTSPs):
        if tsp.ecoTSPEndpoint is not None and not is_valid_uri(tsp.ecoTSPEndpoint):
            raise SchemaError(f"domesticTSPs[{i}].ecoTSPEndpoint", "not a valid URI")
    _check_unique(doc.domesticTSPs, "domesticTSPs", lambda e: e.ecoTSP)
    _check_unique(doc.trustPropositions, "trustPropositions", lambda p: p.proposition().as_tuple())

    present = [f for f in DATASPACE_FIELDS if getattr(doc, f) is not None]
    if not present:
        return
    if len(present) != len(DATASPACE_FIELDS):
        missing = [f for f in DATASPACE_FIELDS if f not in present][0]
        raise SchemaError(missing, "required when any data-space field is present")

    _check_unique(doc.participants, "participants", lambda p: p)
    _check_unique(doc.rules, "rules", lambda r: r)
    _check_unique(doc.assertions, "assertions", lambda a: (a.proposition().as_tuple(), a.rule))
    props = {p.proposition() for p in doc.trustPropositions}
    rules = set(doc.rules)
    for i, a in enumerate(doc.assertions):
        if a.proposition() not in props:
            raise SchemaError(f"assertions[{i}]", "proposition is not in trustPropositions")
        if a.rule not in rules:
            raise SchemaError(f"assertions[{i}].rule", f"unknown rule {a.rule!r}")
    for side in ("providerFacing", "consumerFacing"):
        values = getattr(doc.sharingRules, side)
        _check_unique(values, f"sharingRules.{side}", lambda r: r)
        for i, r in enumerate(values):
            if r not in rules:
                raise SchemaError(f"sharingRules.{side}[{i}]", f"unknown rule {r!r}")


def parse_profile_document(data: bytes | str | dict) -> ProfileDocument:
    if isinstance(data, (bytes, bytearray)):
        try:
            data = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DocumentSyntaxError(f"input is not UTF-8: {exc.reason}", exc.start) from None
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise DocumentSyntaxError(exc.msg, exc.pos) from None
    if not isinstance(data, dict):
        raise SchemaError("$", "document must be a JSON object")
    try:
        doc = ProfileDocument.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        reason = err["msg"]
        if err["type"] == "extra_forbidden":
            reason = "unknown field"
        raise SchemaError(_loc(err["loc"]), reason) from None
    _check_document(doc)
    return doc


def load_profile_document(path) -> ProfileDocument:
    with open(path, "rb") as fh:
        return parse_profile_document(fh.read())


# -- serialization ---------------------------------------------------------------


def _proposition_dict(t: TrustProposition) -> dict:
    return {"ecoTrustScope": t.scope, "ecoTSP": t.provider, "ecoCredentialType": t.credential}


def profile_to_document(profile: EcosystemTrustProfile, dataspace: DataSpace | None = None) -> dict:
    """Canonical document: keys sorted on output, every array in a fixed order."""
    tsps = []
    for provider in sorted(profile.domestic_providers):
        entry = {"ecoTSP": provider}
        endpoint = profile.endpoints.get(provider)
        if endpoint is not None:
            entry["ecoTSPEndpoint"] = endpoint
        tsps.append(entry)
    verifiable = dataspace.verifiable if dataspace is not None else frozenset()
    props = []
    for t in profile.sorted_propositions():
        entry = _proposition_dict(t)
        if t in verifiable:
            entry["independentlyVerifiable"] = True
        props.append(entry)
    doc: dict[str, Any] = {"ecoID": profile.eco_id, "domesticTSPs": tsps, "trustPropositions": props}
    if dataspace is not None:
        fw = dataspace.framework
        doc["participants"] = sorted(dataspace.participants)
        doc["rules"] = sorted(fw.rules)
        doc["assertions"] = [
            {**_proposition_dict(a.proposition), "rule": a.rule} for a in sorted(fw.assertions)
        ]
        doc["sharingRules"] = {
            "providerFacing": sorted(dataspace.provider_facing),
            "consumerFacing": sorted(dataspace.consumer_facing),
        }
    return doc


def document_to_dict(doc: ProfileDocument) -> dict:
    return profile_to_document(doc.to_profile(), doc.to_dataspace())


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

"""Event-sourced persistence for the registry.

All state changes are appended to ``events.jsonl`` (one JSON record per line,
fsynced) and the current state is a pure fold over that log. Snapshot files
under ``snapshots/`` only shorten recovery; the log alone always suffices.

One writer at a time: writes are serialized by a thread lock and, across
processes, by a lock file in the store directory. Readers work on immutable
:class:`Snapshot` values and never block writers.
"""
from __future__ import annotations

import enum
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

from filelock import FileLock

from .dataspace import DataSpace, TrustFramework
from .documents import (
    ProfileDocument,
    canonical_json,
    parse_profile_document,
    profile_to_document,
)
from .errors import (
    PropositionAbsent,
    StorageError,
    TrustMeshError,
    UnknownEcosystem,
)
from .fragility import WithdrawalEvent, reassert, withdraw
from .model import TrustProposition, Universe

log = logging.getLogger(__name__)

STORE_ENV = "TRUSTMESH_STORE_DIR"
DEFAULT_STORE_DIR = ".trustmesh"
EVENTS_FILE = "events.jsonl"
SNAPSHOT_DIR = "snapshots"


def default_store_dir() -> Path:
    return Path(os.environ.get(STORE_ENV) or DEFAULT_STORE_DIR)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class EventKind(str, enum.Enum):
    PROFILE_ASSERTED = "ProfileAsserted"
    PROPOSITION_ASSERTED = "PropositionAsserted"
    PROPOSITION_WITHDRAWN = "PropositionWithdrawn"
    PROFILE_REMOVED = "ProfileRemoved"


@dataclass(frozen=True)
class EventLogRecord:
    sequence: int
    kind: EventKind
    payload: dict
    timestamp: str

    def to_json(self) -> str:
        return canonical_json(
            {
                "sequence": self.sequence,
                "kind": self.kind.value,
                "payload": self.payload,
                "timestamp": self.timestamp,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> EventLogRecord:
        raw = json.loads(line)
        return cls(int(raw["sequence"]), EventKind(raw["kind"]), raw["payload"], raw["timestamp"])


def proposition_payload(t: TrustProposition) -> dict:
    return {"ecoTrustScope": t.scope, "ecoTSP": t.provider, "ecoCredentialType": t.credential}


def proposition_from_payload(raw: dict) -> TrustProposition:
    return TrustProposition(raw["ecoTrustScope"], raw["ecoTSP"], raw["ecoCredentialType"])


@dataclass(frozen=True)
class Snapshot:
    """Point-in-time registry state: the universe plus data-space descriptors."""

    sequence: int = 0
    universe: Universe = field(default_factory=Universe)
    dataspaces: Mapping[str, DataSpace] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "dataspaces", MappingProxyType(dict(self.dataspaces)))

    def __eq__(self, other):
        if not isinstance(other, Snapshot):
            return NotImplemented
        return self.canonical() == other.canonical()

    __hash__ = None

    def document(self, eco_id: str) -> dict:
        return profile_to_document(self.universe[eco_id], self.dataspaces.get(eco_id))

    def to_state(self) -> dict:
        return {
            "sequence": self.sequence,
            "ecosystems": [self.document(eco_id) for eco_id in self.universe.eco_ids],
        }

    def canonical(self) -> str:
        return canonical_json(self.to_state())

    @classmethod
    def from_state(cls, state: dict) -> Snapshot:
        snap = cls(int(state["sequence"]))
        universe = Universe()
        dataspaces = {}
        for raw in state["ecosystems"]:
            doc = parse_profile_document(raw)
            universe = universe.with_profile(doc.to_profile())
            ds = doc.to_dataspace()
            if ds is not None:
                dataspaces[doc.ecoID] = ds
        return cls(snap.sequence, universe, dataspaces)


def _dataspace_without(ds: DataSpace, t: TrustProposition) -> DataSpace:
    fw = ds.framework
    framework = TrustFramework(
        fw.propositions - {t},
        fw.rules,
        frozenset(a for a in fw.assertions if a.proposition != t),
    )
    return DataSpace(
        ds.participants, framework, ds.provider_facing, ds.consumer_facing, ds.name, ds.verifiable - {t}
    )


def _dataspace_with(ds: DataSpace, t: TrustProposition) -> DataSpace:
    fw = ds.framework
    return DataSpace(
        ds.participants,
        TrustFramework(fw.propositions | {t}, fw.rules, fw.assertions),
        ds.provider_facing,
        ds.consumer_facing,
        ds.name,
        ds.verifiable,
    )


def apply_event(snap: Snapshot, record: EventLogRecord) -> Snapshot:
    """Pure transition function. Every event touches exactly one ecosystem."""
    if record.sequence != snap.sequence + 1:
        raise StorageError(
            f"event sequence {record.sequence} does not follow {snap.sequence}",
            expected=snap.sequence + 1,
            found=record.sequence,
        )
    universe = snap.universe
    dataspaces = dict(snap.dataspaces)
    payload = record.payload

    if record.kind is EventKind.PROFILE_ASSERTED:
        doc = parse_profile_document(payload["document"])
        universe = universe.with_profile(doc.to_profile())
        dataspaces.pop(doc.ecoID, None)
        ds = doc.to_dataspace()
        if ds is not None:
            dataspaces[doc.ecoID] = ds
    elif record.kind is EventKind.PROFILE_REMOVED:
        eco_id = payload["ecoID"]
        if eco_id not in universe:
            raise UnknownEcosystem(eco_id)
        universe = universe.without(eco_id)
        dataspaces.pop(eco_id, None)
    elif record.kind is EventKind.PROPOSITION_WITHDRAWN:
        eco_id = payload["ecoID"]
        t = proposition_from_payload(payload["proposition"])
        universe = withdraw(universe, WithdrawalEvent(eco_id, t, record.sequence, record.timestamp))
        if eco_id in dataspaces:
            dataspaces[eco_id] = _dataspace_without(dataspaces[eco_id], t)
    elif record.kind is EventKind.PROPOSITION_ASSERTED:
        eco_id = payload["ecoID"]
        t = proposition_from_payload(payload["proposition"])
        universe = reassert(universe, eco_id, t)
        if eco_id in dataspaces:
            dataspaces[eco_id] = _dataspace_with(dataspaces[eco_id], t)
    return Snapshot(record.sequence, universe, dataspaces)


def replay(records: Iterable[EventLogRecord], start: Snapshot | None = None) -> Snapshot:
    snap = start if start is not None else Snapshot()
    for record in records:
        snap = apply_event(snap, record)
    return snap


def read_log(path: Path) -> tuple[list[EventLogRecord], int, bool]:
    """Parse a log file. Returns records, the byte length of the valid prefix,
    and whether a torn final line was found."""
    records: list[EventLogRecord] = []
    if not path.exists():
        return records, 0, False
    data = path.read_bytes()
    offset = 0
    while offset < len(data):
        end = data.find(b"\n", offset)
        if end == -1:
            return records, offset, True
        line = data[offset:end]
        try:
            records.append(EventLogRecord.from_json(line.decode("utf-8")))
        except (ValueError, KeyError) as exc:
            if end + 1 == len(data):
                # a final line that does not parse is a torn write
                return records, offset, True
            raise StorageError(f"corrupt event log record at byte {offset}: {exc}", offset=offset) from None
        offset = end + 1
    return records, offset, False


class RegistryStore:
    """Directory-backed registry: an append-only event log plus snapshot files."""

    def __init__(
        self,
        directory: str | os.PathLike | None = None,
        *,
        snapshot_every: int = 50,
        fsync: bool = True,
        readonly: bool = False,
        clock: Callable[[], str] = _now,
    ):
        self.directory = Path(directory) if directory is not None else default_store_dir()
        self.snapshot_every = snapshot_every
        self.fsync = fsync
        self.readonly = readonly
        self.clock = clock
        self.events_path = self.directory / EVENTS_FILE
        self.snapshots_dir = self.directory / SNAPSHOT_DIR
        self._lock = threading.RLock()
        self._offset = 0
        self._snapshot = Snapshot()
        try:
            if not readonly:
                self.snapshots_dir.mkdir(parents=True, exist_ok=True)
                self._file_lock = FileLock(str(self.directory / ".lock"))
            else:
                self._file_lock = None
            self._load()
        except OSError as exc:
            raise StorageError(f"cannot open store at {self.directory}: {exc}") from None

    # -- loading -------------------------------------------------------------

    def _latest_snapshot_file(self, max_sequence: int) -> Snapshot | None:
        if not self.snapshots_dir.exists():
            return None
        candidates = sorted(self.snapshots_dir.glob("snapshot-*.json"), reverse=True)
        for path in candidates:
            try:
                snap = Snapshot.from_state(json.loads(path.read_text("utf-8")))
            except (ValueError, KeyError, TrustMeshError):
                log.warning("ignoring unreadable snapshot %s", path)
                continue
            if snap.sequence <= max_sequence:
                return snap
        return None

    def _load(self) -> None:
        if self._file_lock is not None:
            with self._file_lock:
                records, valid, torn = read_log(self.events_path)
                if torn:
                    log.warning("truncating torn record at end of %s", self.events_path)
                    with open(self.events_path, "r+b") as fh:
                        fh.truncate(valid)
                        os.fsync(fh.fileno())
        else:
            records, valid, torn = read_log(self.events_path)
        last = records[-1].sequence if records else 0
        start = self._latest_snapshot_file(last) or Snapshot()
        self._snapshot = replay((r for r in records if r.sequence > start.sequence), start)
        self._offset = valid

    def refresh(self) -> Snapshot:
        """Pick up complete records appended by other processes."""
        with self._lock:
            if not self.events_path.exists():
                return self._snapshot
            size = self.events_path.stat().st_size
            if size <= self._offset:
                return self._snapshot
            with open(self.events_path, "rb") as fh:
                fh.seek(self._offset)
                data = fh.read()
            end = data.rfind(b"\n")
            if end == -1:
                return self._snapshot
            snap = self._snapshot
            for line in data[: end + 1].splitlines():
                snap = apply_event(snap, EventLogRecord.from_json(line.decode("utf-8")))
            self._offset += end + 1
            self._snapshot = snap
            return snap

    def records(self) -> list[EventLogRecord]:
        return read_log(self.events_path)[0]

    # -- reading -------------------------------------------------------------

    def snapshot(self) -> Snapshot:
        return self._snapshot

    @property
    def universe(self) -> Universe:
        return self._snapshot.universe

    def verify_replay(self) -> bool:
        """Fold the whole log from the empty state and compare with the live state."""
        return replay(self.records()).canonical() == self._snapshot.canonical()

    # -- writing -------------------------------------------------------------

    def _append(self, build: Callable[[Snapshot], list[tuple[EventKind, dict]]]) -> Snapshot:
        if self.readonly:
            raise StorageError("store is opened read-only")
        with self._lock, self._file_lock:
            self.refresh()
            snap = self._snapshot
            records = []
            for kind, payload in build(snap):
                record = EventLogRecord(snap.sequence + 1, kind, payload, self.clock())
                snap = apply_event(snap, record)
                records.append(record)
            if not records:
                return snap
            data = "".join(r.to_json() + "\n" for r in records).encode("utf-8")
            try:
                fd = os.open(self.events_path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
                try:
                    os.write(fd, data)
                    if self.fsync:
                        os.fsync(fd)
                finally:
                    os.close(fd)
            except OSError as exc:
                raise StorageError(f"cannot append to {self.events_path}: {exc}") from None
            self._offset += len(data)
            previous = self._snapshot.sequence
            self._snapshot = snap
            if self.snapshot_every and snap.sequence // self.snapshot_every > previous // self.snapshot_every:
                self.write_snapshot()
            return snap

    def write_snapshot(self) -> Path:
        snap = self._snapshot
        path = self.snapshots_dir / f"snapshot-{snap.sequence:010d}.json"
        tmp = path.with_suffix(".tmp")
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(snap.canonical())
                fh.flush()
                if self.fsync:
                    os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageError(f"cannot write snapshot {path}: {exc}") from None
        return path

    def ingest_with_status(self, doc: ProfileDocument) -> tuple[Snapshot, bool]:
        """Assert a whole profile. An existing profile with the same id is
        replaced by the same single event, so a replacement is atomic."""
        created = []

        def build(snap: Snapshot):
            created.append(doc.ecoID not in snap.universe)
            document = profile_to_document(doc.to_profile(), doc.to_dataspace())
            return [(EventKind.PROFILE_ASSERTED, {"document": document})]

        snap = self._append(build)
        return snap, created[0]

    def ingest(self, doc: ProfileDocument) -> Snapshot:
        return self.ingest_with_status(doc)[0]

    def apply_withdrawal(self, eco_id: str, proposition: TrustProposition) -> Snapshot:
        def build(snap: Snapshot):
            profile = snap.universe[eco_id]
            if proposition not in profile.propositions:
                raise PropositionAbsent(
                    f"{eco_id!r} does not assert {proposition}",
                    eco_id=eco_id,
                    proposition=list(proposition.as_tuple()),
                )
            return [
                (
                    EventKind.PROPOSITION_WITHDRAWN,
                    {"ecoID": eco_id, "proposition": proposition_payload(proposition)},
                )
            ]

        return self._append(build)

    def assert_proposition(self, eco_id: str, proposition: TrustProposition) -> Snapshot:
        def build(snap: Snapshot):
            reassert(snap.universe, eco_id, proposition)
            return [
                (
                    EventKind.PROPOSITION_ASSERTED,
                    {"ecoID": eco_id, "proposition": proposition_payload(proposition)},
                )
            ]

        return self._append(build)

    def remove(self, eco_id: str) -> Snapshot:
        def build(snap: Snapshot):
            if eco_id not in snap.universe:
                raise UnknownEcosystem(eco_id)
            return [(EventKind.PROFILE_REMOVED, {"ecoID": eco_id})]

        return self._append(build)


"""Deterministic writer used by the persistence tests.

``python store_writer.py STORE SEED COUNT [DELAY]`` appends COUNT mixed
ingest / withdraw / re-assert events chosen from SEED and prints the sequence
number after each committed event. Two runs with the same seed write the same
event sequence, so a killed run can be compared with a complete one.
"""
from __future__ import annotations

import random
import sys
import time

from trustmesh.documents import parse_profile_document, profile_to_document
from trustmesh.model import EcosystemTrustProfile, TrustProposition
from trustmesh.store import RegistryStore


def _random_profile(rng: random.Random, eco_id: str) -> EcosystemTrustProfile:
    providers = [f"p{i}" for i in range(4)]
    props = {
        TrustProposition(f"s{rng.randrange(3)}", rng.choice(providers), f"c{rng.randrange(5)}")
        for _ in range(rng.randint(1, 6))
    }
    return EcosystemTrustProfile(eco_id, frozenset(rng.sample(providers, rng.randint(0, 2))), frozenset(props))


def next_operation(rng: random.Random, store: RegistryStore):
    """Pick one valid operation for the current state and apply it."""
    universe = store.universe
    roll = rng.random()
    owners = [p for p in universe if p.propositions]
    if roll < 0.35 or not owners:
        eco_id = f"E{rng.randrange(6)}"
        doc = parse_profile_document(profile_to_document(_random_profile(rng, eco_id)))
        return store.ingest(doc)
    profile = rng.choice(owners)
    if roll < 0.8:
        t = rng.choice(sorted(profile.propositions))
        return store.apply_withdrawal(profile.eco_id, t)
    t = TrustProposition(f"s{rng.randrange(3)}", f"p{rng.randrange(4)}", f"c{rng.randrange(5)}")
    if t in profile.propositions:
        return store.apply_withdrawal(profile.eco_id, t)
    return store.assert_proposition(profile.eco_id, t)


def run(directory: str, seed: int, count: int, delay: float = 0.0, snapshot_every: int = 25) -> None:
    rng = random.Random(seed)
    store = RegistryStore(directory, snapshot_every=snapshot_every)
    for _ in range(count):
        snap = next_operation(rng, store)
        print(snap.sequence, flush=True)
        if delay:
            time.sleep(delay)


if __name__ == "__main__":
    run(sys.argv[1], int(sys.argv[2]), int(sys.argv[3]), float(sys.argv[4]) if len(sys.argv) > 4 else 0.0)

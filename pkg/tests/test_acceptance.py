"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line
that is printed in the terminal summary."""
from __future__ import annotations

import os
import random
import signal
import socket
import subprocess
import sys
import threading
import time
from itertools import product
from pathlib import Path

import httpx
import uvicorn

import oracles
from conftest import A_IOTA, A_MU, IDENTITY
from generators import (
    correlated_raws,
    random_dataspace,
    random_dataspace_pair,
    random_raws,
    to_universe,
    variant_of,
)
from store_writer import run as run_writer
from trustmesh.dataspace import (
    TrustFramework,
    check_framework_consistency,
    interop_check,
    interop_classes,
    one_way_cross_sharing,
)
from trustmesh.documents import parse_profile_document, profile_to_document
from trustmesh.equivalence import (
    common_pool,
    credentials_for_scope,
    demonstrate_imposter_attack,
    equiv_v1,
    equiv_v2,
)
from trustmesh.errors import PartitionViolated
from trustmesh.fragility import ForeignTrustRelation, fragility_check
from trustmesh.model import TrustProposition
from trustmesh.relations import foreign_trust, trust_edges, trust_realm
from trustmesh.service import create_app
from trustmesh.store import EventKind, RegistryStore, Snapshot, replay

TESTS = Path(__file__).resolve().parent


def _symmetric_and_transitive(domain, rel) -> tuple[bool, bool]:
    """Reflexivity differs per relation, so callers check it themselves."""
    sym = all(rel(a, b) == rel(b, a) for a, b in product(domain, repeat=2))
    trans = all(rel(a, c) for a, b, c in product(domain, repeat=3) if rel(a, b) and rel(b, c))
    return sym, trans


def test_criterion_01_irreflexivity(acceptance_report):
    rng = random.Random(101)
    start = time.perf_counter()
    checked = failures = 0
    for _ in range(1000):
        (profile,) = to_universe(random_raws(rng, min_ecos=1, max_ecos=1, max_scopes=5, max_providers=5, max_credentials=5))
        for s in profile.scopes:
            checked += 1
            if foreign_trust(profile, profile, s).trusts:
                failures += 1
    elapsed = time.perf_counter() - start
    passed = failures == 0 and elapsed < 5.0 and checked > 0
    acceptance_report(
        "1 irreflexivity", passed, f"{checked} profile/scope checks, {failures} true, {elapsed:.2f}s (limit 5s)"
    )
    assert passed


def test_criterion_02_oracle_equivalence(acceptance_report):
    rng = random.Random(202)
    mismatches = []
    for n in range(500):
        raws = random_raws(rng, max_ecos=4, max_scopes=3, max_providers=4, max_credentials=4)
        u = to_universe(raws)
        scopes, _, _ = oracles.universe_pools(raws)
        for s in sorted(scopes) + ["absent-scope"]:
            for ri, rj in product(raws, repeat=2):
                expected, hits = oracles.foreign_trust(ri, rj, s, raws)
                got = foreign_trust(u[ri[0]], u[rj[0]], s)
                if got.trusts != expected or [w.proposition.as_tuple() for w in got.witnesses] != hits:
                    mismatches.append((n, "foreign_trust", ri[0], rj[0], s))
            if trust_realm(u, s) != oracles.trust_realm(raws, s):
                mismatches.append((n, "trust_realm", s))
            if credentials_for_scope(u, s) != oracles.credentials_for_scope(raws, s):
                mismatches.append((n, "credentials_for_scope", s))
        if {t.as_tuple() for t in common_pool(u)} != oracles.common_pool(raws):
            mismatches.append((n, "common_pool"))
    passed = not mismatches
    acceptance_report("2 oracle equivalence", passed, f"500 universes, {len(mismatches)} mismatches")
    assert passed, mismatches[:5]


def test_criterion_03_v1_laws(acceptance_report):
    rng = random.Random(303)
    bad_laws = 0
    for _ in range(300):
        u = to_universe(random_raws(rng, partitioned=True))
        creds = sorted(u.credentials)
        rel = {(a, b): equiv_v1(u, a, b) for a, b in product(creds, repeat=2)}
        refl = all(rel[c, c] for c in creds)
        sym, trans = _symmetric_and_transitive(creds, lambda a, b: rel[a, b])
        bad_laws += not (refl and sym and trans)

    refused = violating = 0
    while violating < 100:
        raws = random_raws(rng)
        expected = oracles.partition_violations(raws)
        if not expected:
            continue
        violating += 1
        u = to_universe(raws)
        c = sorted(u.credentials)[0]
        try:
            equiv_v1(u, c, c)
        except PartitionViolated as exc:
            refused += exc.details["violations"] == expected
    passed = bad_laws == 0 and refused == violating
    acceptance_report(
        "3 v1 equivalence laws",
        passed,
        f"300 partitioned universes, {bad_laws} law failures; refused {refused}/{violating} violating universes",
    )
    assert passed


def test_criterion_04_imposter(acceptance_report):
    rng = random.Random(404)
    ok_universes = attacks = 0
    for _ in range(100):
        # v1 only answers on partitions, so the attack runs where v1 is otherwise sound
        u = to_universe(random_raws(rng, partitioned=True))
        all_ok = True
        for s in sorted(u.scopes):
            trace = demonstrate_imposter_attack(u, s)
            attacks += 1
            creds = credentials_for_scope(u, s)
            all_ok &= set(trace.v1) == creds and trace.v1_vulnerable and trace.v2_resistant
            # the attacked universe itself confirms both outcomes
            all_ok &= all(equiv_v1(trace.after, trace.credential, c) for c in creds)
            all_ok &= not any(equiv_v2(trace.after, s, trace.credential, c) for c in creds)
        ok_universes += all_ok
    passed = ok_universes == 100
    acceptance_report(
        "4 imposter attack", passed, f"{ok_universes}/100 universes, {attacks} scope attacks: v1 vulnerable, v2 resistant"
    )
    assert passed


def test_criterion_05_v2_laws(acceptance_report):
    rng = random.Random(505)
    failures = 0
    nonempty_pools = 0
    for i in range(300):
        raws = correlated_raws(rng) if i % 2 else random_raws(rng)
        u = to_universe(raws)
        pool = common_pool(u)
        nonempty_pools += bool(pool)
        domain = sorted(u.credentials | {"fresh"})
        for s in sorted(u.scopes):
            in_pool = {t.credential for t in pool if t.scope == s}
            rel = {(a, b): equiv_v2(u, s, a, b) for a, b in product(domain, repeat=2)}
            refl = all(rel[c, c] == (c in in_pool) for c in domain)
            sym, trans = _symmetric_and_transitive(domain, lambda a, b: rel[a, b])
            failures += not (refl and sym and trans)
    passed = failures == 0
    acceptance_report(
        "5 v2 equivalence laws", passed, f"300 universes ({nonempty_pools} with non-empty pool), {failures} law failures"
    )
    assert passed


def test_criterion_06_fragility(acceptance_report, tmp_path):
    rng = random.Random(606)
    broken = replay_ok = runs = 0
    while runs < 200:
        u = to_universe(random_raws(rng, min_ecos=2, density=rng.uniform(0.2, 0.6)))
        edges = sorted(trust_edges(u))
        if not edges:
            continue
        edge = rng.choice(edges)
        trace = fragility_check(u, edge.trustor, edge.trustee, ForeignTrustRelation(edge.scope))
        broken += trace.broken and not foreign_trust(trace.after[edge.trustor], trace.after[edge.trustee], edge.scope).trusts

        store = RegistryStore(tmp_path / f"run{runs}", snapshot_every=0)
        for profile in u:
            store.ingest(parse_profile_document(profile_to_document(profile)))
        for event in trace.events:
            store.apply_withdrawal(event.eco_id, event.proposition)
        live = store.snapshot().canonical().encode()
        replayed = replay(store.records()).canonical().encode()
        reopened = RegistryStore(store.directory, readonly=True).snapshot().canonical().encode()
        expected = Snapshot(store.snapshot().sequence, trace.after).canonical().encode()
        replay_ok += live == replayed == reopened == expected
        runs += 1
    passed = broken == 200 and replay_ok == 200
    acceptance_report("6 fragility", passed, f"broken {broken}/200, byte-identical replay {replay_ok}/200")
    assert passed


def test_criterion_07_worked_fixture(acceptance_report, worked_framework):
    ordered = sorted(worked_framework.propositions)
    canonical = ordered == [TrustProposition("iota", "t0", "c_I"), TrustProposition("mu", "t0", "c_M")]
    base = check_framework_consistency(worked_framework)
    results = {}
    for dropped, rule in ((A_IOTA, "r_I"), (A_MU, "r_M")):
        fw = TrustFramework(worked_framework.propositions, worked_framework.rules, worked_framework.assertions - {dropped})
        results[rule] = check_framework_consistency(fw) == (False, [rule])
    passed = canonical and base == (True, []) and all(results.values())
    acceptance_report(
        "7 worked framework", passed, f"consistent={base.consistent}, deletion names rule: {results}"
    )
    assert passed


def _sharing_sets(space):
    raw = {(a.proposition, a.rule) for a in space.framework.assertions}
    pf = oracles.attested_by(raw, space.provider_facing)
    cf = oracles.attested_by(raw, space.consumer_facing)
    return pf, cf


def _triple(rng, i):
    u = random_dataspace(rng, f"U{i}")
    v = variant_of(rng, u, f"V{i}") if rng.random() < 0.7 else random_dataspace(rng, f"V{i}")
    w = variant_of(rng, u, f"W{i}") if rng.random() < 0.7 else random_dataspace(rng, f"W{i}")
    return u, v, w


def test_criterion_08_interoperability(acceptance_report):
    rng = random.Random(808)
    exact = implication = interop_true = 0
    counterexample = None
    for i in range(300):
        u, v = random_dataspace_pair(rng, i)
        pf_u, cf_u = _sharing_sets(u)
        pf_v, cf_v = _sharing_sets(v)
        report = interop_check(u, v)
        exact += report.interoperable == ((pf_u | cf_u) == (pf_v | cf_v))
        if report.interoperable:
            interop_true += 1
            both = one_way_cross_sharing(u, v).possible and one_way_cross_sharing(v, u).possible
            implication += both
            if not both and counterexample is None:
                counterexample = tuple(
                    [t.credential for t in sorted(x)] for x in (pf_u, cf_u, pf_v, cf_v)
                )

    law_failures = 0
    for i in range(100):
        spaces = _triple(rng, i)
        rel = {(a, b): interop_check(spaces[a], spaces[b]).interoperable for a, b in product(range(3), repeat=2)}
        refl = all(rel[k, k] for k in range(3))
        sym, trans = _symmetric_and_transitive(range(3), lambda a, b: rel[a, b])
        law_failures += not (refl and sym and trans)

    class_mismatches = 0
    for i in range(50):
        base = random_dataspace(rng, f"B{i}")
        spaces = [base] + [
            variant_of(rng, base, f"B{i}v{k}") if rng.random() < 0.6 else random_dataspace(rng, f"B{i}r{k}")
            for k in range(rng.randint(0, 7))
        ]
        comps = oracles.connected_components(len(spaces), lambda a, b: interop_check(spaces[a], spaces[b]).interoperable)
        got = sorted(sorted(spaces.index(s) for s in g) for g in interop_classes(spaces))
        class_mismatches += got != comps

    checks = {
        "interop equals equal sharing sets": exact == 300,
        "interop implies both one-way directions": implication == interop_true,
        "equivalence laws on triples": law_failures == 0,
        "classes equal components": class_mismatches == 0,
    }
    detail = (
        f"exact {exact}/300; one-way both directions in {implication}/{interop_true} interoperable pairs; "
        f"law failures {law_failures}/100; class mismatches {class_mismatches}/50"
    )
    if counterexample:
        detail += f"; first counterexample by credential (pf_u, cf_u, pf_v, cf_v) = {counterexample}"
    for name, ok in checks.items():
        acceptance_report(f"8 interoperability: {name}", ok)
    passed = all(checks.values())
    acceptance_report("8 interoperability", passed, detail)
    assert passed, detail


class _ThreadedServer(uvicorn.Server):
    def install_signal_handlers(self):
        pass


def test_criterion_09_service(acceptance_report, tmp_path, samples):
    start = time.perf_counter()
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    server = _ThreadedServer(uvicorn.Config(create_app(RegistryStore(tmp_path / "svc")), log_level="warning"))
    thread = threading.Thread(target=server.run, kwargs={"sockets": [sock]}, daemon=True)
    thread.start()
    try:
        while not server.started:
            time.sleep(0.005)
        trust_q = {"trustor": "eco.ca", "trustee": "eco.fx", "scope": IDENTITY}
        with httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=5) as client:
            for name in ("eco.ca", "eco.fx"):
                r = client.put(f"/v1/ecosystems/{name}", content=(samples / f"{name}.etp.json").read_bytes())
                assert r.status_code == 201
            before = client.get("/v1/trust", params=trust_q).json()
            (witness,) = before["witnesses"]
            body = {"ecoTrustScope": witness["scope"], "ecoTSP": witness["provider"], "ecoCredentialType": witness["credential"]}
            impact = client.post("/v1/ecosystems/eco.fx/withdrawals", json=body).json()["impact"]
            after = client.get("/v1/trust", params=trust_q).json()
    finally:
        server.should_exit = True
        thread.join(timeout=5)
    elapsed = time.perf_counter() - start
    passed = (
        before["trusts"] is True
        and len(before["witnesses"]) == 1
        and after["trusts"] is False
        and {"trustor": "eco.ca", "trustee": "eco.fx", "scope": IDENTITY} in impact["brokenEdges"]
        and elapsed < 2.0
    )
    acceptance_report(
        "9 service conformance",
        passed,
        f"trusts {before['trusts']} -> {after['trusts']}, broken edges {impact['brokenEdges']}, {elapsed:.2f}s (limit 2s)",
    )
    assert passed


def test_criterion_10_kill_and_replay(acceptance_report, tmp_path):
    killed_dir = tmp_path / "killed"
    env = {**os.environ, "PYTHONPATH": os.pathsep.join([str(TESTS), os.environ.get("PYTHONPATH", "")])}
    proc = subprocess.Popen(
        [sys.executable, str(TESTS / "store_writer.py"), str(killed_dir), "1010", "100000", "0.001"],
        stdout=subprocess.PIPE,
        env=env,
    )
    printed = 0
    try:
        for line in proc.stdout:
            printed = int(line)
            if printed >= 120:
                break
        proc.send_signal(signal.SIGKILL)
    finally:
        proc.wait(timeout=10)
        proc.stdout.close()
    recovered = RegistryStore(killed_dir)
    records = recovered.records()
    kinds = {r.kind for r in records[:100]}
    mixed = EventKind.PROFILE_ASSERTED in kinds and EventKind.PROPOSITION_WITHDRAWN in kinds
    n = recovered.snapshot().sequence

    reference_dir = tmp_path / "reference"
    run_writer(str(reference_dir), 1010, n)
    reference = RegistryStore(reference_dir).snapshot()
    from_log = replay(records)
    passed = (
        proc.returncode == -signal.SIGKILL
        and n >= printed >= 100
        and mixed
        and recovered.snapshot().canonical() == reference.canonical()
        and from_log.canonical() == reference.canonical()
    )
    acceptance_report(
        "10 kill and replay",
        passed,
        f"killed after {printed} acknowledged events, recovered sequence {n}, equal to reference: "
        f"{recovered.snapshot().canonical() == reference.canonical()}",
    )
    assert passed

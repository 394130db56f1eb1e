from __future__ import annotations

from pathlib import Path

import pytest

from trustmesh.dataspace import Assertion, DataSpace, TrustFramework
from trustmesh.model import EcosystemTrustProfile, TrustProposition, Universe

SAMPLES = Path(__file__).resolve().parent.parent / "samples"

IDENTITY = "imxc:Identity"
T_CANUM = TrustProposition(IDENTITY, "p_CA", "c_CAnum")
T_CX = TrustProposition(IDENTITY, "p_FX", "c_CX")

# small worked framework: one provider t0, identity and membership credentials
T_IOTA = TrustProposition("iota", "t0", "c_I")
T_MU = TrustProposition("mu", "t0", "c_M")
A_IOTA = Assertion(T_IOTA, "r_I")
A_MU = Assertion(T_MU, "r_M")

_acceptance_lines: list[str] = []


@pytest.fixture
def canada() -> EcosystemTrustProfile:
    return EcosystemTrustProfile("eco.ca", frozenset({"p_CA"}), frozenset({T_CANUM, T_CX}))


@pytest.fixture
def factory_x() -> EcosystemTrustProfile:
    return EcosystemTrustProfile("eco.fx", frozenset({"p_FX"}), frozenset({T_CX, T_CANUM}))


@pytest.fixture
def ca_fx(canada, factory_x) -> Universe:
    return Universe.of(canada, factory_x)


@pytest.fixture
def worked_framework() -> TrustFramework:
    return TrustFramework(frozenset({T_IOTA, T_MU}), frozenset({"r_I", "r_M"}), frozenset({A_IOTA, A_MU}))


@pytest.fixture
def worked_space(worked_framework) -> DataSpace:
    return DataSpace(
        frozenset({"o1", "o2", "o3"}),
        worked_framework,
        provider_facing=frozenset({"r_I"}),
        consumer_facing=frozenset({"r_M"}),
        name="D",
    )


@pytest.fixture
def samples() -> Path:
    return SAMPLES


@pytest.fixture
def acceptance_report():
    def record(criterion: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        _acceptance_lines.append(f"[{status}] {criterion}" + (f" -- {detail}" if detail else ""))

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)

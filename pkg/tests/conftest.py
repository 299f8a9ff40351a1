from __future__ import annotations

import pytest

from odoforge.chains import validate_chain
from odoforge.cosets import from_permutations
from odoforge.toeplitz import build_spec
from odoforge.words import GroupDescriptor

# S3 acting on {0, 1, 2}: a is the 3-cycle, b the transposition of 0 and 1.
S3_PERMS = ([1, 2, 0], [1, 0, 2])


@pytest.fixture(scope="session")
def Z():
    return GroupDescriptor.abelian(["a"])


@pytest.fixture(scope="session")
def Z2():
    return GroupDescriptor.abelian(["a", "b"])


@pytest.fixture(scope="session")
def F2():
    return GroupDescriptor.free(["a", "b"])


def power_chain(group, base: int, depth: int):
    names = group.names
    return validate_chain(group, [[f"{x}^{base ** n}" for x in names] for n in range(1, depth + 1)])


@pytest.fixture(scope="session")
def dyadic(Z):
    return power_chain(Z, 2, 6)


@pytest.fixture(scope="session")
def dyadic_spec(dyadic):
    return build_spec(dyadic)


@pytest.fixture(scope="session")
def stab0(F2):
    return from_permutations(F2, S3_PERMS, base=0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        status, title, seconds, note = results[n]
        terminalreporter.write_line(f"criterion {n:>2} {status}  {title} ({seconds:.2f}s) {note}".rstrip())

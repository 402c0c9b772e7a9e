import pytest

from quadsmc import verify


@pytest.fixture(scope="session")
def ctx():
    """One shared set of cached simulations for every verification-backed test."""
    return verify.Context()


def _lookup(name):
    for registry in (verify.invariant, verify.criterion):
        for n, fn in registry.items:
            if n == name:
                return fn
    raise KeyError(name)


@pytest.fixture(scope="session")
def run_check(ctx):
    """Run one named check on the shared context and return ``(passed, measured, limit)``."""
    cache = {}

    def run(name):
        if name not in cache:
            cache[name] = _lookup(name)(ctx)
        return cache[name]
    return run


def invariant_names(prefix):
    return [n for n, _ in verify.invariant.items if n.startswith(prefix + ".")]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

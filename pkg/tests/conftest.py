import random

import pytest

from maurer.bta import random_thread
from maurer.isa import IsaParams, build_isa, random_dm_spec
from maurer.machine import RR, la, ou, sa, sd


def small_isa(ous=2, seed_a=1, seed_b=2):
    """aw=1, wl=1 ISA with two seeded random data manipulation instructions."""
    params = IsaParams(1, 1, ous, 1, 1)
    top = [ou(i) for i in range(ous)]
    a = random_dm_spec(params, "a", top + [sd(0), sa(0), RR], seed_a)
    b = random_dm_spec(params, "b", top[-1:] + [la(0), RR], seed_b)
    return build_isa(params, [a, b])


def seeded_thread(isa, seed, sizes=(1, 5), first_action=None):
    rng = random.Random(seed)
    return random_thread(rng, sorted(isa.actions), rng.randint(*sizes), first_action=first_action)


@pytest.fixture(scope="session")
def isa2():
    return small_isa(2)


@pytest.fixture(scope="session")
def isa1():
    return small_isa(1)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)

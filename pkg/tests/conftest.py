import pytest

from tonguecusp import build_chart, find_tip

TIP_SEEDS = {
    1: ((0.49, 0.51, 0.52), 1),
    2: ((0.11, 0.11, 0.85), 1),
    3: ((0.18, 0.18, 0.93), 3),
}


@pytest.fixture(scope="session")
def tips():
    return {p: find_tip(seed, p, k) for p, (seed, k) in TIP_SEEDS.items()}


@pytest.fixture(scope="session")
def tip1(tips):
    return tips[1]


@pytest.fixture(scope="session")
def chart1(tip1):
    return build_chart(tip1)


@pytest.fixture(scope="session")
def charts(tips):
    return {p: build_chart(t) for p, t in tips.items()}

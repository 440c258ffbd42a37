import pytest

from echoform import presets


@pytest.fixture(scope="session")
def fig1_runs():
    return {case: presets.run_fig1(case) for case in presets.FIG1_CASES}


@pytest.fixture(scope="session")
def fig2_outcome():
    return presets.run_fig2()


@pytest.fixture(scope="session")
def fig3_focus():
    return presets.run_spec(presets.fig3_spec(1.0))

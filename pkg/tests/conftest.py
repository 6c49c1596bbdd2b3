import numpy as np
import pytest

from tracemethod.rng import generator
from tracemethod.simulation import SimulationConfig, gen_dataset, gen_model


def simulate(n, k=None, seed=0, **kw):
    """(model, dataset) for one simulated trial."""
    cfg = SimulationConfig(n=n, k=k, **kw)
    model = gen_model(cfg, generator(seed, 0))
    return model, gen_dataset(model, cfg.k, generator(seed, 1))


def random_psd(n, rank=None, rng=None):
    rng = rng or np.random.default_rng(0)
    rank = n if rank is None else rank
    F = rng.standard_normal((n, rank))
    return F @ F.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def record_acceptance(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

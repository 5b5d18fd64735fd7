import math

import numpy as np
import pytest

from isodense.density import DensityModel, Region1D, weighted_volume


def random_unimodal(rng: np.random.Generator, family: int, finite_measure: bool = False):
    """A random unimodal density, its window for the brute-force oracle, and a volume.

    With ``finite_measure`` the slowly decaying family draws a in [1.5, 3]: the
    measure is finite and minimizers stay inside the oracle window.
    """
    m = rng.uniform(-1, 1)
    a = rng.uniform(1.5, 3) if finite_measure and family == 1 else rng.uniform(0.3, 2)
    if family == 0:
        p = rng.uniform(1, 3)
        text, dom, win = f"-{a!r}*abs(x-({m!r}))^{p!r}", (-math.inf, math.inf), (m - 6, m + 6)
    elif family == 1:
        text, dom, win = f"-{a!r}*log(1+(x-({m!r}))^2)", (-math.inf, math.inf), (m - 6, m + 6)
    elif family == 2:
        l1, l2 = rng.uniform(0.5, 2, 2)
        text, dom = f"{a!r}*(x-({m!r}))^2", (m - l1, m + l2)
        win = dom
    elif family == 3:
        l1, l2 = rng.uniform(0.5, 2, 2)
        p = rng.uniform(1, 3)
        text, dom = f"{a!r}*abs(x-({m!r}))^{p!r}", (m - l1, m + l2)
        win = dom
    else:
        l1, l2 = rng.uniform(0.5, 3, 2)
        text, dom = f"-{a!r}*(x-({m!r}))^2", (m - l1, m + l2)
        win = dom
    d = DensityModel.from_expression(text, domain=dom)
    lo = dom[0] if math.isfinite(dom[0]) else -60.0
    hi = dom[1] if math.isfinite(dom[1]) else 60.0
    total = weighted_volume(d, Region1D(((lo, hi),)))
    if family == 1 and a <= 0.5:
        V = rng.uniform(0.5, 5)
    else:
        V = rng.uniform(0.05, 0.95) * total
    return d, win, float(V)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""
    return request.config.stash[ACCEPTANCE_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])

import numpy as np
import pytest

from entire_laplace.expr import CompactBump, ExpSum, damp, dilate, exp_atom, mollify


def random_expsum(rng, n_pairs=None, re_range=(-2.0, -0.3), im_max=3.0):
    """A real exponential sum built from conjugate pairs and one real node."""
    n_pairs = int(rng.integers(1, 4)) if n_pairs is None else n_pairs
    nodes, coeffs = [float(rng.uniform(*re_range))], [float(rng.normal())]
    for _ in range(n_pairs):
        z = complex(rng.uniform(*re_range), rng.uniform(0.2, im_max))
        c = complex(rng.normal(), rng.normal())
        nodes += [z, z.conjugate()]
        coeffs += [c, c.conjugate()]
    return ExpSum(nodes, coeffs)


def random_base(rng):
    """One of a few representative real inputs, with random parameters."""
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return random_expsum(rng)
    if kind == 1:
        return CompactBump(float(rng.uniform(0.5, 3.0)), int(rng.integers(2, 4)))
    if kind == 2:
        return mollify(CompactBump(float(rng.uniform(0.5, 2.0)), 2), float(rng.uniform(0.2, 1.0)))
    return damp(exp_atom(float(rng.uniform(-1.5, -0.2))), float(rng.uniform(0.1, 1.0)))


def random_s(rng, re_range=(0.3, 2.0), im_max=3.0):
    return complex(rng.uniform(*re_range), rng.uniform(-im_max, im_max))


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

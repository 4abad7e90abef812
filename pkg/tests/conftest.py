import numpy as np
import pytest

from lbcenter import Instance

COLLINEAR4 = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]

# criterion id -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def collinear4():
    return np.array(COLLINEAR4)


def random_instance(rng: np.random.Generator, n_lo=4, n_hi=12, lam_hi=4, lam_lo=1) -> Instance:
    n = int(rng.integers(n_lo, n_hi + 1))
    lam = int(rng.integers(lam_lo, min(lam_hi, n) + 1))
    return Instance(rng.random((n, 2)), lam)


def coverage(tree, pairs):
    """cover[i, j] = number of pairs covering (i, j); gen[i, j] = representative distance of the last one."""
    n = tree.points.shape[0]
    cover = np.zeros((n, n), dtype=int)
    gen = np.zeros((n, n))
    for a, b, length in zip(pairs.a, pairs.b, pairs.length):
        pa, pb = tree.node(a).points, tree.node(b).points
        cover[np.ix_(pa, pb)] += 1
        cover[np.ix_(pb, pa)] += 1
        gen[np.ix_(pa, pb)] = length
        gen[np.ix_(pb, pa)] = length
    return cover, gen


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0].rstrip("ab")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")

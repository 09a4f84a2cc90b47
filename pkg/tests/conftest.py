import numpy as np
import pytest

from haps_isac.scenario import GroundPoint, Scenario, builtin_scenario

M_FULL = 12


def gamma_analog(dbm: float, M: int = 4) -> float:
    """Full-array threshold (dBm) scaled to an M-element desk array, in watts."""
    return 10 ** ((dbm - 30) / 10) * M / M_FULL


def random_scenario(seed: int, half_width: float = 2e3, M: int = 4, K: int = 2, Q: int = 2,
                    **kw) -> Scenario:
    """Users uniform in the left half of a square, targets in the right half."""
    L = half_width
    rng = np.random.default_rng(seed)
    users = tuple(GroundPoint(*rng.uniform([-L, -L], [0, L])) for _ in range(K))
    targets = tuple(GroundPoint(*rng.uniform([0, -L], [L, L])) for _ in range(Q))
    kw.setdefault("area", (-L, L, -L, L))
    kw.setdefault("slots", 8)
    return Scenario(users=users, targets=targets, M=M, wavelength=0.15, **kw)


def random_psd(rng, M: int, rank: int | None = None) -> np.ndarray:
    r = M if rank is None else rank
    A = rng.standard_normal((M, r)) + 1j * rng.standard_normal((M, r))
    return A @ A.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def desk():
    return builtin_scenario("desk")


@pytest.fixture(scope="session")
def desk_compact():
    return builtin_scenario("desk_compact")


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])

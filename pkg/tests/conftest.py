import numpy as np
import pytest
from hypothesis import settings

from fplearn.game import Game, miscoordination_game

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# criterion id -> (title, [(check, ok, detail), ...]); filled by test_acceptance
ACCEPTANCE: dict[str, tuple[str, list]] = {}


def record(cid: str, title: str, check: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE.setdefault(cid, (title, []))[1].append((check, bool(ok), detail))
    return bool(ok)


@pytest.fixture
def mis():
    return miscoordination_game()


@pytest.fixture
def dominant():
    return Game(np.array([[1.0, 1.0], [0.0, 0.0]]))


@pytest.fixture
def generic():
    # a=0, c=2, d=1, b=0: mixed equilibrium (1/3, 2/3)
    return Game.from_2x2(a=0, b=0, c=2, d=1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        title, checks = ACCEPTANCE[cid]
        verdict = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        parts = "; ".join(f"{c}: {'ok' if ok else 'FAILED'}{' (' + d + ')' if d else ''}"
                          for c, ok, d in checks)
        terminalreporter.write_line(f"{cid} {verdict}  {title} | {parts}")

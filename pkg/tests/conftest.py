import itertools

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def brute_force_rows(transfer, eta, xi, layers):
    """Enumerate every copier output and detector click of the tree explicitly.

    Independent of the vectorized cascade: leaves are tracked as a list in
    detector order and expanded one copier at a time.
    """
    transfer = np.asarray(transfer)
    pairs = {0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (1, 1)}  # index -> (original, copy)
    rows = []
    for inp in (0, 1):
        leaves = {(inp,): 1.0}
        for _ in range(layers):
            nxt = {}
            for occ, w in leaves.items():
                choices = [[(pairs[r], transfer[r, o]) for r in range(4) if transfer[r, o] > 0] for o in occ]
                for combo in itertools.product(*choices):
                    new = tuple(b for pair, _ in combo for b in pair)
                    prob = w * np.prod([pw for _, pw in combo])
                    nxt[new] = nxt.get(new, 0.0) + prob
            leaves = nxt
        n = 2 ** len(next(iter(leaves)))
        row = np.zeros(n)
        for occ, w in leaves.items():
            for clicks in itertools.product((0, 1), repeat=len(occ)):
                pr = w
                for o, c in zip(occ, clicks):
                    pc = eta if o else eta * xi
                    pr *= pc if c else 1 - pc
                row[sum(c << d for d, c in enumerate(clicks))] += pr
        rows.append(row)
    return np.array(rows)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

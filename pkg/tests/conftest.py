import pytest

from edgestep.graph import Multigraph

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_report():
    def record(name: str, ok: bool, detail: str = ""):
        _ACCEPTANCE.append((name, bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


# small handcrafted multigraphs; loops and parallel edges on purpose
FIXTURES = {
    "path": [(1, 2), (2, 3)],
    "double_edges": [(1, 1), (1, 2), (1, 2), (2, 3), (3, 4), (3, 4), (4, 1)],
    "star_loops": [(1, 1), (1, 2), (1, 3), (1, 4), (1, 5), (5, 5), (5, 5), (2, 3)],
    "cycle_chords": [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1), (1, 4), (2, 5), (3, 6), (1, 4)],
    "dense8": [
        (1, 1), (1, 2), (2, 3), (1, 3), (3, 4), (4, 4), (4, 5), (5, 6), (6, 7), (7, 8),
        (8, 1), (2, 6), (2, 6), (3, 7), (5, 8), (5, 8),
    ],
}


@pytest.fixture(params=sorted(FIXTURES))
def fixture_graph(request):
    edges = FIXTURES[request.param]
    return edges, Multigraph.from_edges(edges)

import pytest

from httpdsl.mockserver import MockScript, MockServer, Route

# lines collected by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def mock_server():
    """Factory: ``mock_server(Route(...), ...)`` starts a server for the test."""
    started = []

    def start(*routes):
        server = MockServer(MockScript(list(routes))).start()
        started.append(server)
        return server

    yield start
    for server in started:
        server.stop()


@pytest.fixture
def ok_server(mock_server):
    return mock_server(Route(body="hello", headers=(("Content-Type", "text/plain"),)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

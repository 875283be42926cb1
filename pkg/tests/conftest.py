import pytest

_LINES = []


class _Report:
	"""Collects one verdict line per acceptance criterion."""

	def record(self, label: str, ok: bool, detail: str) -> bool:
		line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
		_LINES.append(line)
		print(line)
		return ok


@pytest.fixture(scope="session")
def report():
	return _Report()


def pytest_terminal_summary(terminalreporter):
	if _LINES:
		terminalreporter.section("acceptance criteria")
		for line in _LINES:
			terminalreporter.write_line(line)

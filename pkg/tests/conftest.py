import sys
from pathlib import Path

import pytest

from asymop.cli import main
from asymop.synthetic import write_fixture


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory) -> Path:
    d = tmp_path_factory.mktemp("fixture")
    write_fixture(d, seed=0)
    return d


@pytest.fixture(scope="session")
def fixture_run(fixture_dir) -> Path:
    """Output directory of one ``all`` run on the synthetic fixture."""
    out = fixture_dir / "out_all"
    assert main(["all", "-q", "-c", str(fixture_dir / "config.json"), "-o", str(out)]) == 0
    return out


def eml(sender="a@enron.com", to="b@enron.com", date="Mon, 14 May 2001 16:39:00 -0700", body="hi",
        cc=None) -> bytes:
    lines = [f"From: {sender}"]
    if to is not None:
        lines.append(f"To: {to}")
    if cc:
        lines.append(f"Cc: {cc}")
    if date is not None:
        lines.append(f"Date: {date}")
    return ("\n".join(lines) + "\n\n" + body).encode()


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    RESULTS = getattr(mod, "RESULTS", None)
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

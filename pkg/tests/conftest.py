from pathlib import Path

import pytest

from wftune.config import Config, load_config

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

# (criterion, passed, detail) collected by the acceptance module
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def config_dir():
    return CONFIG_DIR


@pytest.fixture(scope="session")
def default_config():
    return Config()


@pytest.fixture(scope="session")
def load_example():
    def _load(name, overrides=()):
        return load_config(CONFIG_DIR / name, overrides)
    return _load


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)

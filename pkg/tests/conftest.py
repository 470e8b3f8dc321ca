from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"
TINY_INSTANCE = DATA_DIR / "v6c2k2s0.pcp"


def pytest_configure(config):
    config.addinivalue_line("markers", "long: mark tests that take a while to run")

import pytest

from buserkit.spaces import SpaceConfig, build_space


@pytest.fixture(scope="session")
def space_cache():
    cache = {}

    def get(preset, N=2001, R=None, **params):
        key = (preset, N, R, tuple(sorted(params.items())))
        if key not in cache:
            cache[key] = build_space(SpaceConfig(preset, N, R, params))
        return cache[key]

    return get


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request):
    """Record one acceptance criterion: ``acceptance(number, title, seconds, passed)``."""
    log = request.config.stash[_ACCEPTANCE]

    def record(number, title, seconds, passed, detail=""):
        log[number] = (title, seconds, passed, detail)

    return record


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        title, seconds, passed, detail = log[number]
        status = "PASS" if passed else "FAIL"
        line = f"AC{number} {status} {title} ({seconds:.2f} s)"
        terminalreporter.write_line(line + (f": {detail}" if detail else ""))

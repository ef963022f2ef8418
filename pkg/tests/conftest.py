"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when not in ("setup", "call"):
        return
    n, title = mark.args
    failed = call.excinfo is not None
    prev = _criteria.get(n)
    if call.when == "setup" and not failed:
        return
    if prev is None or not prev[0]:
        detail = dict(item.user_properties)
        _criteria[n] = (failed, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        failed, title, detail = _criteria[n]
        extra = ", ".join(f"{k}={v}" for k, v in detail.items())
        line = f"{'FAIL' if failed else 'PASS'}  [{n:2d}] {title}"
        terminalreporter.write_line(f"{line}  ({extra})" if extra else line)

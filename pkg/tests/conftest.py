from hypothesis import settings

# the first call into a compiled kernel pays a one-off load cost
settings.register_profile("ppcm", deadline=None, max_examples=200)
settings.load_profile("ppcm")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])

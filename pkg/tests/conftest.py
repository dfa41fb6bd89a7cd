import sys


def pytest_terminal_summary(terminalreporter):
    lines = [line for mod in list(sys.modules.values())
             if getattr(mod, "__name__", "").endswith("test_acceptance")
             for line in getattr(mod, "ACCEPTANCE_LOG", [])]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

import hypothesis

hypothesis.settings.register_profile(
    "boltsim", deadline=None, derandomize=True, max_examples=60)
hypothesis.settings.load_profile("boltsim")

# acceptance verdicts, one line per criterion, shown after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.ensure_newline()
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

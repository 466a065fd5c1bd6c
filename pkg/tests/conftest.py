def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import INFO, RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
        for line in INFO:
            terminalreporter.write_line(line)

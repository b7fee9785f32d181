from helpers import ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int(c[0]), c)):
        passed, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {cid}: {detail}")

"""Collects acceptance-criterion outcomes and prints one line per criterion.

Acceptance tests carry ``@pytest.mark.criterion(n)``.  A criterion passes
when every test tagged with it passed.  Parts that are known not to hold
are marked ``xfail(strict=True)``: the run stays green, but the criterion
line reads FAIL and points at the decision ledger.
"""
import pytest

CRITERIA = {
    1: "narrowband oracle equivalence",
    2: "wideband oracle equivalence",
    3: "sandwich certificate",
    4: "ordering vs Monte Carlo",
    5: "scaling laws",
    6: "ML threshold effect",
    7: "per-realisation CRB correctness",
    8: "quadrature self-test",
    9: "determinism across worker counts",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if hasattr(rep, "wasxfail"):
            state = "xfail" if rep.skipped else "xpass"
        else:
            state = rep.outcome
        details = [v for k, v in item.user_properties if k == "detail"]
        _outcomes.setdefault(mark.args[0], []).append((item.name, state, details))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        runs = _outcomes[n]
        ok = all(state == "passed" for _, state, _ in runs)
        line = f"criterion {n} ({CRITERIA.get(n, '?')}): {'PASS' if ok else 'FAIL'}"
        missed = [name for name, state, _ in runs if state == "xfail"]
        if missed:
            line += f"  [known shortfall: {', '.join(missed)}; see decision ledger]"
        broken = [name for name, state, _ in runs if state not in ("passed", "xfail")]
        if broken:
            line += f"  [failed: {', '.join(broken)}]"
        tr.write_line(line)
        for _, _, details in runs:
            for d in details:
                tr.write_line(f"    {d}")

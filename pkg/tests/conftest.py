from hypothesis import strategies as st

from debruijn_census.terms import Abs, App, Var

terms = st.recursive(
    st.integers(min_value=1, max_value=15).map(Var),
    lambda inner: st.one_of(inner.map(Abs), st.tuples(inner, inner).map(lambda p: App(*p))),
    max_leaves=25,
)

# PASS/FAIL lines from the acceptance suite, echoed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

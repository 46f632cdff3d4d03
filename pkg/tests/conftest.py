import sys

import hypothesis
import numpy as np

# underflow-to-zero is the intended semantics of max-shifted weights
np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=50, print_blob=True
)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance criteria report after the test summary."""
    for name in ("test_acceptance", "tests.test_acceptance"):
        mod = sys.modules.get(name)
        if mod is not None and getattr(mod, "REPORT_LINES", None):
            terminalreporter.section("acceptance criteria")
            for line in mod.REPORT_LINES:
                terminalreporter.write_line(line)
            break

import os
import sys

import pytest


def pytest_addoption(parser):
    parser.addoption("--nightly", action="store_true", default=False, help="run long rank-2 checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--nightly") or os.environ.get("COMPLEXHYPER_NIGHTLY") == "1":
        return
    skip = pytest.mark.skip(reason="nightly check; pass --nightly to run")
    for item in items:
        if "nightly" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = module.summary_lines() if module else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

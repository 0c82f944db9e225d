import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "spec_defect: checks pinned to targets that are unattainable as "
        "stated; kept failing on purpose to document the measured truth "
        "(each has a passing corrected twin next to it)")

import numpy as np
import pytest

from chronomap.data import N_SLOTS, Dataset, IndividualRecord, WeeklyProfile, default_schema

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_dataset(matrix, answers=None, schema=None):
    """Dataset from a 0/1 matrix; answers default to each question's first modality."""
    schema = schema or default_schema()
    matrix = np.asarray(matrix)
    profiles, records = [], []
    for i, row in enumerate(matrix):
        pid = f"p{i:04d}"
        profiles.append(WeeklyProfile(pid, row))
        ans = {q: mods[0] for q, mods in schema.questions}
        if answers is not None:
            ans.update(answers[i])
        records.append(IndividualRecord(pid, ans))
    return Dataset(profiles, records, schema)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dataset(rng):
    return make_dataset((rng.random((40, N_SLOTS)) < 0.3).astype(int))

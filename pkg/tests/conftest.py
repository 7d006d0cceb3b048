import sys

import pytest

from support import MBALT_RECORDS
from trunclife.ingest import IngestConfig, build_pair_sample, read_records_csv
from trunclife.population import DiscretePmf, build_population, discrete_uniform, truncated_geometric


@pytest.fixture
def three_point():
    return build_population(DiscretePmf(1, [0.2, 0.3, 0.5]), DiscretePmf(1, [0.4, 0.6]))


@pytest.fixture(scope="session")
def geometric_uniform():
    return build_population(truncated_geometric(0.2, 1, 24), discrete_uniform(1, 10))


@pytest.fixture(scope="session")
def mbalt():
    records, errors = read_records_csv(MBALT_RECORDS)
    assert errors == []
    sample, report = build_pair_sample(records, IngestConfig(delta=3, m=18))
    return sample, report


def pytest_terminal_summary(terminalreporter):
    verdicts = getattr(sys.modules.get("test_acceptance"), "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for number in sorted(verdicts):
            terminalreporter.write_line(verdicts[number])

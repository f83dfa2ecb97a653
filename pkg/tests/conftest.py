import numpy as np
import pytest

from slotforge.datagen import GridRow, GridSpec, generate_dataset, train_test_split
from slotforge.lasso import LassoConfig, LassoModel
from slotforge.pipeline import TrainedPipeline, train
from slotforge.preprocess import fit_pipeline

# two theta rows at a coarse pitch: ~130 rows, trains in about a second
TINY_GRID = GridSpec(
    (
        GridRow(0, 30, 130, 10, 5, 30, 5),
        GridRow(90, 30, 130, 10, 5, 30, 5),
    )
)
TINY_PCA_D = 12


@pytest.fixture(scope="session")
def tiny_dataset():
    return generate_dataset(TINY_GRID)


@pytest.fixture(scope="session")
def tiny_split(tiny_dataset):
    return train_test_split(tiny_dataset, 0.2, 42)


@pytest.fixture(scope="session")
def tiny_pipeline(tiny_split):
    return train(tiny_split[0], LassoConfig(alpha=0.01, max_iter=2000), TINY_PCA_D)


def constant_pipeline(tiny_dataset, dims) -> TrainedPipeline:
    """A pipeline that ignores its input and always predicts ``dims``."""
    fp, Z = fit_pipeline(tiny_dataset.features, 4)
    model = LassoModel(np.zeros((Z.shape[1], 3)), np.asarray(dims, dtype=float), [1, 1, 1], [True] * 3)
    return TrainedPipeline(fp, model, tiny_dataset.grid)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)

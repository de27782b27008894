import numpy as np
import pytest

from awae.ensemble import ClassifierMember, EnsemblePool
from awae.learners.base import Classifier
from awae.stream import DataChunk


class TableModel(Classifier):
    """Stub whose prediction for row x is ``table[int(x[0])]``; support is one-hot."""

    kind = "table"

    def __init__(self, table, n_classes=2):
        super().__init__(n_classes, 1)
        self.table = np.asarray(table, dtype=np.int64)

    def _support(self, X):
        out = np.zeros((X.shape[0], self.n_classes))
        out[np.arange(X.shape[0]), self.table[X[:, 0].astype(int)]] = 1.0
        return out


class SupportModel(Classifier):
    """Stub returning a fixed class-1 support per row index."""

    kind = "support"

    def __init__(self, class1):
        super().__init__(2, 1)
        self.class1 = np.asarray(class1, dtype=np.float64)

    def _support(self, X):
        s = self.class1[X[:, 0].astype(int)]
        return np.column_stack([1.0 - s, s])


def index_chunk(y, index=0, n_classes=2):
    """Chunk whose single feature is the row number, for use with the stub models."""
    y = np.asarray(y)
    return DataChunk(index, np.arange(y.size, dtype=float)[:, None], y, n_classes)


def pool_from_correctness(correct, y, weights=None, residences=None, n_classes=2):
    """Pool of TableModels; member k is right on instance i iff ``correct[k, i]`` (binary labels)."""
    correct = np.asarray(correct, dtype=bool)
    y = np.asarray(y)
    N = correct.shape[0]
    weights = np.ones(N) / N if weights is None else weights
    residences = np.zeros(N, dtype=int) if residences is None else residences
    members = [
        ClassifierMember(TableModel(np.where(correct[k], y, 1 - y)), float(weights[k]), int(residences[k]), k)
        for k in range(N)
    ]
    return EnsemblePool(capacity=max(1, N - 1), n_classes=n_classes, members=members)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def _verdict(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return _verdict


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
MNIST_DIR = ROOT / "data" / "mnist"


def mnist_available():
    return all(
        (MNIST_DIR / name).exists() or (MNIST_DIR / (name + ".gz")).exists()
        for name in ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                     "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")
    )


needs_mnist = pytest.mark.skipif(not mnist_available(), reason="MNIST files not in data/mnist")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def mnist_sample():
    if not mnist_available():
        pytest.skip("MNIST files not in data/mnist")
    from monolayer.learn.data import load_mnist

    tx, ty, _, _ = load_mnist(MNIST_DIR)
    return tx[:64], ty[:64]


def disc_image(size=64, radius=15):
    yy, xx = np.mgrid[:size, :size]
    c = (size - 1) / 2
    return ((yy - c) ** 2 + (xx - c) ** 2 < radius ** 2).astype(np.float64)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in results:
        terminalreporter.write_line(line)

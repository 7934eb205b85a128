import numpy as np
import pytest

from bwelex import EmbeddingStore, SeedLexicon, split_lexicon

DATA_DIR_NAME = "data"


@pytest.fixture(scope="session")
def data_dir(request):
    return request.config.rootpath / "tests" / DATA_DIR_NAME


def make_toy_task(seed=42):
    """Small dense task: 10 source words (4 dims) -> 8 target words (3 dims)."""
    rng = np.random.default_rng(seed)
    src = EmbeddingStore(
        "toy-src",
        [f"s{i}" for i in range(10)],
        rng.standard_normal((10, 4)),
    )
    tgt = EmbeddingStore(
        "toy-tgt",
        [f"t{i}" for i in range(8)],
        rng.standard_normal((8, 3)),
    )
    pairs = [(f"s{i}", f"t{i % 8}") for i in range(10)]
    return src, tgt, SeedLexicon(pairs)


@pytest.fixture
def toy_task():
    return make_toy_task()


def make_synthetic_task(seed=7, n=200, dim=20, noise=0.01):
    """Recovery task: target space is a rotated, noisy copy of the source.

    Source rows are random unit vectors; target rows are the same vectors
    pushed through a fixed orthogonal matrix plus Gaussian noise. The
    dictionary pairs word i with word i, split 70/30 into train and dev.
    """
    rng = np.random.default_rng(seed)
    Xs = rng.standard_normal((n, dim))
    Xs /= np.linalg.norm(Xs, axis=1, keepdims=True)
    Q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    Xt = Xs @ Q + noise * rng.standard_normal((n, dim))

    src = EmbeddingStore("syn-src", [f"w{i:03d}" for i in range(n)], Xs)
    tgt = EmbeddingStore("syn-tgt", [f"v{i:03d}" for i in range(n)], Xt)
    lex = SeedLexicon([(f"w{i:03d}", f"v{i:03d}") for i in range(n)])
    lex = split_lexicon(lex, train_fraction=0.7, seed=seed)
    return src, tgt, lex


@pytest.fixture(scope="session")
def synthetic_task():
    return make_synthetic_task()

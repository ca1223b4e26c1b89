import numpy as np
import pytest

from gtsal import synth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def square_scene():
    return synth.make_scene("centered-square", size=64, seed=0)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    synth.write_corpus(out, size=64, seed=7)
    return out

import pytest

from synth import build_corpus


@pytest.fixture(scope="session")
def corpus_manifest(tmp_path_factory):
    return build_corpus(tmp_path_factory.mktemp("corpus"))

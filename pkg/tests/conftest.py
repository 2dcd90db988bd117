import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for `synth` and `helpers`

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def sample_path() -> Path:
    return DATA_DIR / "sharc_sample.json"


@pytest.fixture(scope="session")
def sample_instances(sample_path):
    from biae.corpus import load_dataset
    return load_dataset(sample_path)


@pytest.fixture(scope="session")
def edu_annotations():
    return json.loads((DATA_DIR / "edu_annotations.json").read_text())["documents"]


@pytest.fixture(scope="session")
def sentence_annotations():
    return json.loads((DATA_DIR / "sentence_annotations.json").read_text())["texts"]


@pytest.fixture()
def toy_encoder():
    from biae.encoder import ToyEncoder
    return ToyEncoder(seed=7, dim=16)


@pytest.fixture()
def hash_oracle():
    from biae.weak_labels import HashEmbeddingOracle
    return HashEmbeddingOracle(seed=11, dimension=48)

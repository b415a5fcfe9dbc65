from pathlib import Path

import pytest

from hfsurvival import apply_scaler, fit_scaler, load_dataset

REPO_ROOT = Path(__file__).resolve().parent.parent
DATASET_PATH = REPO_ROOT / "data" / "heart_failure_clinical_records_dataset.csv"


@pytest.fixture(scope="session")
def dataset_path() -> Path:
    return DATASET_PATH


@pytest.fixture(scope="session")
def uci(dataset_path):
    return load_dataset(dataset_path)


@pytest.fixture(scope="session")
def uci_scaled(uci):
    return apply_scaler(uci, fit_scaler(uci, uci.feature_names))

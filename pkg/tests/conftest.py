import sys
from pathlib import Path
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from app.config import settings
from app.services import snmatch, statmodels


@pytest.fixture(scope="session")
def exponential6():
    """Exponential model, n = 6, MLE 1.2, Jeffreys prior, with its geometry"""
    model, data = statmodels.exponential_model(6, 1.2)
    return model, data, statmodels.fit_geometry(model, data)


@pytest.fixture(scope="session")
def exponential40():
    model, data = statmodels.exponential_model(40, 1.2)
    return model, data, statmodels.fit_geometry(model, data)


@pytest.fixture(scope="session")
def cushings():
    """Logistic model on the shipped Cushings metabolite data"""
    data = statmodels.load_csv(settings.CUSHINGS_CSV_PATH)
    model = statmodels.logistic_model(data)
    return model, data, statmodels.fit_geometry(model, data)


@pytest.fixture(scope="session")
def cushings_sn(cushings):
    _, _, geom = cushings
    return snmatch.sn_fit(snmatch.match_inputs_from_geometry(geom))


@pytest.fixture
def golden_dir() -> Path:
    return Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def soft_rows():
    """Four-decimal exponential-table rows of the skew methods, keyed by (n, method)"""
    path = Path(__file__).parent / "golden" / "exponential_soft_rows.csv"
    rows = {}
    for line in path.read_text().strip().splitlines()[1:]:
        n, method, *values = line.split(",")
        rows[(int(n), method)] = [float(v) for v in values]
    return rows

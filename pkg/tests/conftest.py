import json
from pathlib import Path

import pytest

from mini3c import _kernels
from mini3c.frontend import InputFile
from mini3c.pipeline import Options, run

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
DATA = Path(__file__).resolve().parent / "data"

BACKENDS = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])


def convert_file(name: str, **opts):
    return run([InputFile.load(CORPUS / name)], Options(**opts))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def solver_cases():
    return json.loads((DATA / "solver_oracle.json").read_text())


@pytest.fixture(scope="session")
def corpus_files():
    return [InputFile.load(p) for p in sorted(CORPUS.glob("*.mc"))]

import warnings
from importlib import resources
from pathlib import Path

import pytest

from trapsync.beams import load_scene
from trapsync.species import load_species
from trapsync.trap import TruncationWarning

DATA = Path(resources.files("trapsync") / "data")


@pytest.fixture(scope="session")
def species():
    return load_species(DATA / "rb85.yaml")


@pytest.fixture(scope="session")
def default_scene(species):
    return load_scene(DATA / "scene_rb85_array.yaml", species=species)


@pytest.fixture(autouse=True)
def _quiet_truncation_warning():
    # the shallow edge traps of the default scene run hot by design
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        yield

from __future__ import annotations

import copy
import json
from pathlib import Path

import pytest

from differentia.hierarchy import load_hierarchy

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_PATH = REPO_ROOT / "fixtures" / "musical_instruments.json"
DATA_DIR = Path(__file__).resolve().parent / "data"

_FIXTURE_DOC = json.loads(FIXTURE_PATH.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def instruments():
    """The 9-node musical-instrument hierarchy (immutable, shared)."""
    return load_hierarchy(copy.deepcopy(_FIXTURE_DOC))


@pytest.fixture()
def fixture_doc():
    """A fresh mutable copy of the fixture document."""
    return copy.deepcopy(_FIXTURE_DOC)


def single_node_doc() -> dict:
    return {
        "root": "1",
        "nodes": [
            {
                "id": "1",
                "parent": None,
                "sense_id": "00000001",
                "synset": ["gadget"],
                "category_label": "Gadget",
                "gloss": "a device with a visible handle",
                "differentia": "with Handle",
                "visually_checkable": True,
                "root_genus_term": "Device",
            }
        ],
    }

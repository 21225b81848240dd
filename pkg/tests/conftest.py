"""Shared fixtures: a hand-built 7-node hierarchy and a 3-patient corpus."""

import pytest

from chartsift.hierarchy import build_hierarchy

# Two-root forest, 7 nodes, max depth 3.  Paths and labels for this tree are
# asserted by hand in the tests that use it.
SEVEN_NODE_RECORDS = [
    {"id": "trauma", "name": "Trauma", "description": "Trauma", "parent": None},
    {"id": "head_injury", "name": "Head injury", "description": "Intracranial injury",
     "parent": "trauma", "codes": ["850-854"]},
    {"id": "spine_injury", "name": "Spine injury", "description": "Spinal cord injury",
     "parent": "trauma", "codes": ["805-809"]},
    {"id": "neoplasm", "name": "Neoplasm", "description": "Neoplasm", "parent": None},
    {"id": "brain", "name": "Brain neoplasm", "description": "Neoplasm of the brain",
     "parent": "neoplasm"},
    {"id": "brain_malignant", "name": "Malignant brain neoplasm",
     "description": "Malignant neoplasm of brain", "parent": "brain", "codes": ["191"]},
    {"id": "brain_benign", "name": "Benign brain neoplasm",
     "description": "Benign neoplasm of brain", "parent": "brain", "codes": ["225.0"]},
]


@pytest.fixture
def seven_node_hierarchy():
    return build_hierarchy(SEVEN_NODE_RECORDS)

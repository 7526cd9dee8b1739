"""Shared fixtures: the reference chains used across the test modules."""
import json

import pytest

from asipkit.chain import build_chain

SYM_DOC = {
    "name": "sym_ref",
    "states": 2,
    "kernels": {"periodic": [[[0.75, 0.25], [0.25, 0.75]]]},
    "initial": [0.5, 0.5],
    "observable": {"constant": [[1.0], [-1.0]]},
    "L": 1.0,
    "d": 1,
}

IID_DOC = {
    "name": "iid_ref",
    "states": 2,
    "kernels": {"periodic": [[[0.5, 0.5], [0.5, 0.5]]]},
    "initial": [0.5, 0.5],
    "observable": {"constant": [[1.0], [-1.0]]},
    "L": 1.0,
    "d": 1,
}

ZERO_DOC = {
    "name": "zero_obs",
    "states": 2,
    "kernels": {"periodic": [[[0.5, 0.5], [0.5, 0.5]]]},
    "initial": [0.5, 0.5],
    "observable": {"constant": [[0.0], [0.0]]},
    "L": 1.0,
    "d": 1,
}


@pytest.fixture(scope="session")
def sym():
    return build_chain(SYM_DOC)


@pytest.fixture(scope="session")
def iid2():
    return build_chain(IID_DOC)


@pytest.fixture(scope="session")
def zero():
    return build_chain(ZERO_DOC)


@pytest.fixture(scope="session")
def chain_files(tmp_path_factory):
    """On-disk JSON documents for CLI-level tests: name -> path."""
    root = tmp_path_factory.mktemp("chains")
    paths = {}
    for name, doc in (("sym", SYM_DOC), ("iid", IID_DOC), ("zero", ZERO_DOC)):
        p = root / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    return paths

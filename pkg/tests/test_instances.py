import numpy as np

from lagonn.cnf import evaluate_assignment, parse_dimacs, serialize_dimacs
from lagonn.instances import (
    bundled_names,
    bundled_witness,
    generate_uniform_3sat,
    load_bundled,
    read_witness,
    witness_comment,
)


def test_bundle_contents():
    assert bundled_names(20) == [f"u20-{k:02d}" for k in range(1, 11)]
    assert bundled_names(50) == [f"u50-{k:02d}" for k in range(1, 11)]
    assert bundled_names(100) == ["u100-01"]


def test_bundled_witnesses_satisfy():
    sizes = {20: 91, 50: 218, 100: 430}
    for name in bundled_names():
        inst = load_bundled(name)
        assert sizes[inst.num_vars] == inst.num_clauses
        w = bundled_witness(name)
        assert evaluate_assignment(inst, w) == 0


def test_generator_deterministic():
    a = generate_uniform_3sat(30, 120, seed=4)
    b = generate_uniform_3sat(30, 120, seed=4)
    assert a == b and a != generate_uniform_3sat(30, 120, seed=5)
    assert parse_dimacs(serialize_dimacs(a)) == a


def test_witness_comment_roundtrip():
    w = np.array([1, -1, -1, 1])
    assert np.array_equal(read_witness("c " + witness_comment(w)), w)
    assert read_witness("p cnf 1 1") is None

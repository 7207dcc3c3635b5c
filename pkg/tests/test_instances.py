import json

import numpy as np
import pytest

from drsubmax.functions import QuadraticFunction, random_coverage, random_cut, random_quadratic
from drsubmax.instances import (InstanceError, constraint_from_dict, constraint_to_dict, instance_from_dict,
                                instance_to_dict, load_instance, parse_constraint, save_instance)


def test_roundtrip(tmp_path, rng):
    for obj in (random_cut(4, rng), random_coverage(4, rng), random_quadratic(4, rng)):
        path = tmp_path / "i.json"
        save_instance(obj, path)
        inst = load_instance(path)
        x = rng.random(4)
        F = inst.F
        if inst.set_function is not None:
            assert np.array_equal(inst.set_function.table(), obj.table())
        else:
            assert F.value(x) == obj.value(x)
        assert inst.name == "i" and inst.n == 4


def test_sampled_mode():
    d = {"family": "cut", "n": 2, "edges": [[0, 1, 1.0]], "mode": "sampled", "samples": 100, "seed": 3}
    F = instance_from_dict(d).F
    assert F.value(np.array([0.5, 0.5])) == F.value(np.array([0.5, 0.5]))


def test_non_strict_quadratic():
    d = {"family": "quadratic", "H": [[0, 1], [1, 0]], "h": [0, 0], "c": 0}
    with pytest.raises(Exception):
        instance_from_dict(d)
    assert isinstance(instance_from_dict(d, strict=False).F, QuadraticFunction)


def test_bad_instances(tmp_path):
    with pytest.raises(InstanceError, match="no such file"):
        load_instance(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(InstanceError):
        load_instance(tmp_path / "bad.json")
    for d in ({}, {"family": "torus"}, {"family": "cut", "n": 2}, {"family": "table", "n": 1, "values": [1.0]}):
        with pytest.raises(InstanceError):
            instance_from_dict(d)


def test_inline_constraints():
    assert parse_constraint("hypercube", 3).m == 0
    P = parse_constraint("cardinality:2", 4)
    assert P.b[0] == 2.0 and P.n == 4
    K = parse_constraint("knapsack:1,2,3:2.5", 3)
    assert np.array_equal(K.A[0], [1, 2, 3])
    M = parse_constraint("partition:0-1/2-3:1,2", 4)
    assert M.m == 2 and np.array_equal(M.b, [1, 2])
    for bad in ("cardinality:x", "ball:1", "knapsack:1,2:3"):
        with pytest.raises(InstanceError):
            parse_constraint(bad, 3)


def test_constraint_files(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"family": "partition_matroid", "groups": [[0], [1, 2]], "capacities": [1, 1]}))
    P = parse_constraint(str(path), 3)
    d = constraint_to_dict(P)
    Q = constraint_from_dict(d)
    assert np.array_equal(P.A, Q.A) and np.array_equal(P.b, Q.b)
    with pytest.raises(InstanceError):
        constraint_from_dict({"family": "hypercube"})
    with pytest.raises(InstanceError):
        constraint_from_dict({"family": "packing", "A": [[1, 1]], "b": [1]}, 3)


def test_instance_to_dict_rejects_unknown():
    with pytest.raises(InstanceError):
        instance_to_dict(object())

"""Instance and constraint files.

Both are JSON objects with a ``family`` key; file extensions are ignored.

Objectives::

    {"family": "quadratic", "H": [[...]], "h": [...], "c": 0.0}
    {"family": "cut", "n": 4, "edges": [[0, 1, 1.0], ...], "directed": true}
    {"family": "coverage", "n": 3, "sets": [[0, 1], [1], [2]], "weights": [...]}
    {"family": "table", "n": 2, "values": [f(0), f({0}), f({1}), f({0,1})]}

Set-function families are evaluated through their multilinear extension,
exactly by default or with ``"mode": "sampled", "samples": k, "seed": s``.
Table entries are indexed by bitmask (bit ``u`` set means ``u`` is in S).

Constraints::

    {"family": "hypercube", "n": 4}
    {"family": "cardinality", "n": 4, "k": 2}
    {"family": "knapsack", "weights": [...], "budget": 1.5}
    {"family": "partition_matroid", "groups": [[0, 1], [2, 3]], "capacities": [1, 1]}
    {"family": "packing", "A": [[...]], "b": [...]}

:func:`parse_constraint` also takes the inline forms ``hypercube``,
``cardinality:K``, ``knapsack:W1,W2,...:B`` and ``partition:0-1/2-3:C1,C2``.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .functions import (CoverageFunction, CutFunction, DrFunction, QuadraticFunction, SetFunction,
                        TableFunction, make_quadratic, multilinear_exact, multilinear_sampled,
                        random_coverage, random_cut, random_quadratic)
from .polytope import PackingPolytope, cardinality, hypercube, knapsack, partition_matroid


class InstanceError(ValueError):
    """Malformed or unreadable instance/constraint description."""


@dataclass
class Instance:
    name: str
    F: DrFunction
    set_function: SetFunction | None
    spec: dict

    @property
    def n(self) -> int:
        return self.F.n


def _need(d: dict, *keys):
    missing = [k for k in keys if k not in d]
    if missing:
        raise InstanceError(f"{d.get('family', '?')} description lacks {', '.join(missing)}")
    return [d[k] for k in keys]


def set_function_from_dict(d: dict) -> SetFunction:
    fam = d.get("family")
    if fam == "cut":
        n, edges = _need(d, "n", "edges")
        return CutFunction(int(n), [tuple(e) for e in edges], directed=bool(d.get("directed", True)))
    if fam == "coverage":
        n, sets, weights = _need(d, "n", "sets", "weights")
        return CoverageFunction(int(n), sets, weights)
    if fam == "table":
        n, values = _need(d, "n", "values")
        return TableFunction(int(n), values)
    raise InstanceError(f"not a set-function family: {fam!r}")


def instance_from_dict(d: dict, name: str = "instance", *, strict: bool = True) -> Instance:
    """Build the objective.

    ``strict=False`` skips the DR and non-negativity checks on quadratics,
    which the property audit needs to load deliberately broken fixtures.
    """
    if not isinstance(d, dict) or "family" not in d:
        raise InstanceError("instance must be a JSON object with a 'family' key")
    fam = d["family"]
    try:
        if fam == "quadratic":
            H, h = _need(d, "H", "h")
            c = float(d.get("c", 0.0))
            F = make_quadratic(H, h, c) if strict else QuadraticFunction(H, h, c)
            return Instance(name, F, None, d)
        if fam in ("cut", "coverage", "table"):
            f = set_function_from_dict(d)
            mode = d.get("mode", "exact")
            if mode == "exact":
                F = multilinear_exact(f)
            elif mode == "sampled":
                F = multilinear_sampled(f, int(d.get("samples", 10000)), int(d.get("seed", 0)))
            else:
                raise InstanceError(f"unknown evaluation mode {mode!r}")
            return Instance(name, F, f, d)
    except InstanceError:
        raise
    except (TypeError, ValueError, IndexError) as exc:
        raise InstanceError(f"bad {fam} instance: {exc}") from exc
    raise InstanceError(f"unknown objective family {fam!r}")


def instance_to_dict(obj) -> dict:
    """Inverse of :func:`instance_from_dict` for the built-in families."""
    if isinstance(obj, QuadraticFunction):
        return {"family": "quadratic", "H": obj.H.tolist(), "h": obj.h.tolist(), "c": obj.c}
    if isinstance(obj, CutFunction):
        return {"family": "cut", "n": obj.n, "edges": [list(e) for e in obj.edges],
                "directed": obj.directed}
    if isinstance(obj, CoverageFunction):
        return {"family": "coverage", "n": obj.n, "sets": obj.sets, "weights": obj.weights.tolist()}
    if isinstance(obj, TableFunction):
        return {"family": "table", "n": obj.n, "values": obj.values.tolist()}
    raise InstanceError(f"no file format for {type(obj).__name__}")


def constraint_from_dict(d: dict, n: int | None = None) -> PackingPolytope:
    if not isinstance(d, dict) or "family" not in d:
        raise InstanceError("constraint must be a JSON object with a 'family' key")
    fam = d["family"]
    size = d.get("n", n)
    try:
        if fam == "hypercube":
            if size is None:
                raise InstanceError("hypercube needs n")
            P = hypercube(int(size))
        elif fam == "cardinality":
            (k,) = _need(d, "k")
            if size is None:
                raise InstanceError("cardinality needs n")
            P = cardinality(int(size), float(k))
        elif fam == "knapsack":
            w, B = _need(d, "weights", "budget")
            P = knapsack(w, float(B))
        elif fam in ("partition_matroid", "partition"):
            groups, caps = _need(d, "groups", "capacities")
            P = partition_matroid(groups, caps, None if size is None else int(size))
        elif fam == "packing":
            A, b = _need(d, "A", "b")
            P = PackingPolytope(A, b, n=None if size is None else int(size))
        else:
            raise InstanceError(f"unknown constraint family {fam!r}")
    except InstanceError:
        raise
    except (TypeError, ValueError, IndexError) as exc:
        raise InstanceError(f"bad {fam} constraint: {exc}") from exc
    if n is not None and P.n != n:
        raise InstanceError(f"constraint has dimension {P.n} but the instance has {n}")
    return P


def constraint_to_dict(P: PackingPolytope) -> dict:
    return {"family": "packing", "A": P.A.tolist(), "b": P.b.tolist(), "n": P.n}


def _inline_constraint(text: str, n: int | None) -> dict:
    head, _, rest = text.partition(":")
    if head == "hypercube":
        return {"family": "hypercube", "n": n}
    if head == "cardinality":
        return {"family": "cardinality", "n": n, "k": float(rest)}
    if head == "knapsack":
        w, _, B = rest.partition(":")
        return {"family": "knapsack", "weights": [float(v) for v in w.split(",")], "budget": float(B)}
    if head == "partition":
        g, _, c = rest.partition(":")
        groups = [[int(u) for u in grp.split("-")] for grp in g.split("/")]
        return {"family": "partition_matroid", "groups": groups,
                "capacities": [float(v) for v in c.split(",")], "n": n}
    raise InstanceError(f"unknown constraint {text!r}")


def _read_json(path) -> dict:
    if not os.path.isfile(path):
        raise InstanceError(f"no such file: {path}")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc})") from exc


def load_instance(path, *, strict: bool = True) -> Instance:
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return instance_from_dict(_read_json(path), name, strict=strict)


def parse_constraint(text, n: int | None = None) -> PackingPolytope:
    """A constraint file path or an inline description."""
    text = str(text)
    if os.path.isfile(text):
        return constraint_from_dict(_read_json(text), n)
    try:
        d = _inline_constraint(text, n)
    except ValueError as exc:
        raise InstanceError(f"bad inline constraint {text!r}: {exc}") from exc
    return constraint_from_dict(d, n)


def dump_json(obj: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_instance(obj, path) -> None:
    dump_json(instance_to_dict(obj), path)


def random_instance(family: str, n: int, rng: np.random.Generator):
    """A random DR objective of the given family (``cut``, ``coverage``, ``quadratic``)."""
    if family == "cut":
        return random_cut(n, rng)
    if family == "coverage":
        return random_coverage(n, rng)
    if family == "quadratic":
        return random_quadratic(n, rng)
    raise InstanceError(f"unknown random family {family!r}")

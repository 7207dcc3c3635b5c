"""Helpers shared by the CLI and acceptance tests."""
import os

from drsubmax.cli import main

DATA = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
EDGE = os.path.join(DATA, "edge.cut")
NON_DR = os.path.join(DATA, "non_dr_quadratic.json")


def run(argv, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    code = main(list(argv) + ["--out", str(out_dir)])
    files = {name: open(os.path.join(out_dir, name), "rb").read() for name in sorted(os.listdir(out_dir))}
    return code, files


def rerun_identical(argv, tmp_path, tag):
    """Run a command twice into separate directories; return (codes, first files, identical)."""
    c1, a = run(argv, tmp_path / f"{tag}-1")
    c2, b = run(argv, tmp_path / f"{tag}-2")
    return (c1, c2), a, (a == b and bool(a))

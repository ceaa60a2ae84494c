import pytest

from wtindex import OrdinalError, PositionError
from wtindex import oracle


TEXT = list(b"dbdcaacbcd")


def test_worked_example_values():
    assert oracle.naive_access(TEXT, 6) == ord("c")
    assert oracle.naive_rank(TEXT, ord("c"), 6) == 1
    assert oracle.naive_select(TEXT, ord("c"), 2) == 6


def test_bit_scans():
    bits = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1]
    assert oracle.naive_rank_bits(bits, 6) == 3
    assert oracle.naive_rank_bits(bits, 6, value=0) == 3
    assert oracle.naive_select_bits(bits, 4) == 6
    assert oracle.naive_select_bits([1] * 20, 13) == 12
    with pytest.raises(OrdinalError):
        oracle.naive_select_bits(bits, 7)
    with pytest.raises(PositionError):
        oracle.naive_rank_bits(bits, 11)


def test_tree_shape_sigma_six():
    shape = oracle.naive_tree_shape(6)
    assert shape[0] == [(0, 6)]
    assert shape[1] == [(0, 4), (4, 6)]
    assert shape[2] == [(0, 2), (2, 4), (4, 5), (5, 6)]


def test_tree_shape_has_sigma_leaves_partitioning_alphabet():
    for sigma in (1, 2, 3, 7, 11, 64, 100):
        shape = oracle.naive_tree_shape(sigma)
        leaves = sorted((a, b) for level in shape for a, b in level if b - a == 1)
        assert leaves == [(s, s + 1) for s in range(sigma)]
        for level in shape:
            # each level's intervals are disjoint and ordered
            for (a0, b0), (a1, b1) in zip(level, level[1:]):
                assert b0 <= a1


def test_select_errors():
    with pytest.raises(OrdinalError):
        oracle.naive_select(TEXT, ord("c"), 4)
    with pytest.raises(OrdinalError):
        oracle.naive_select(TEXT, ord("c"), 0)


def test_no_production_module_imports_the_oracle():
    import ast
    import pathlib

    import wtindex

    pkg_dir = pathlib.Path(wtindex.__file__).parent
    for path in pkg_dir.glob("*.py"):
        if path.name == "oracle.py":
            continue
        tree = ast.parse(path.read_text())
        for node in ast.walk(tree):
            if isinstance(node, ast.ImportFrom):
                assert "oracle" not in (node.module or ""), path.name
                assert all("oracle" not in a.name for a in node.names), path.name
            elif isinstance(node, ast.Import):
                assert all("oracle" not in a.name for a in node.names), path.name

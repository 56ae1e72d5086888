import json

import numpy as np
import pytest

from gmspectra import (decompose, dense_s, from_edges, node_closure,
                       parse_edge_list, subspace_block, subspace_spectrum)
from gmspectra.subspaces import (OVERFLOW, decomposition_to_json,
                                 write_decomposition_json)

from conftest import random_graph


def test_closure_two_cycle():
    g = parse_edge_list(["0 1", "1 0"])
    assert node_closure(g, 0, 10) == {0, 1}


def test_closure_hits_dangling_overflows():
    g = parse_edge_list(["0 1", "1 2"])
    assert node_closure(g, 0, 1000) is OVERFLOW
    assert node_closure(g, 2, 1000) is OVERFLOW


def test_closure_size_cutoff():
    g = parse_edge_list(["0 1", "1 0", "2 0", "2 3", "3 2"])
    assert node_closure(g, 0, 10) == {0, 1}
    assert node_closure(g, 2, 3) is OVERFLOW
    assert node_closure(g, 2, 4) == {0, 1, 2, 3}


def test_decompose_two_cycle_plus_self_loop():
    g = parse_edge_list(["0 1", "1 0", "2 2"])
    d = decompose(g, max_size=10)
    assert [list(s) for s in d.subspaces] == [[0, 1], [2]]
    assert d.core_count == 0
    assert d.subspace_node_count == 3


def test_decompose_chain_all_core():
    g = parse_edge_list(["0 1", "1 2"])
    d = decompose(g, max_size=10)
    assert d.subspace_count == 0
    assert list(d.core_nodes) == [0, 1, 2]


def test_overlapping_closures_merge():
    # 0 and 2 both close onto the cycle {0,1,2} through different paths
    g = parse_edge_list(["0 1", "1 2", "2 0", "3 3"])
    d = decompose(g, max_size=10)
    assert [list(s) for s in d.subspaces] == [[0, 1, 2], [3]]


def test_no_dangling_node_in_any_subspace(rng):
    for _ in range(10):
        g = random_graph(rng, 80, 0.03)
        d = decompose(g, max_size=40)
        dangling = set(int(x) for x in g.dangling_nodes)
        for members in d.subspaces:
            assert not dangling.intersection(int(m) for m in members)


def test_zero_block_scan(rng):
    for _ in range(10):
        g = random_graph(rng, 100, 0.03)
        d = decompose(g, max_size=50)
        core = set(int(x) for x in d.core_nodes)
        for members in d.subspaces:
            inside = set(int(m) for m in members)
            for node in members:
                for succ in g.successors(int(node)):
                    assert int(succ) in inside
                    assert int(succ) not in core
        # partition covers all nodes exactly once
        assert d.subspace_node_count + d.core_count == g.node_count


def test_decompose_order_independent(rng):
    g = random_graph(rng, 120, 0.025)
    base = decompose(g, max_size=60)
    base_sets = {frozenset(int(m) for m in s) for s in base.subspaces}
    for seed in range(5):
        order = rng.permutation(g.node_count)
        shuffled = decompose(g, max_size=60, order=order)
        sets = {frozenset(int(m) for m in s) for s in shuffled.subspaces}
        assert sets == base_sets
        assert np.array_equal(shuffled.core_nodes, base.core_nodes)


def test_permutation_realizes_block_order():
    # 3 reaches the dangling node 4, so 3 and 4 are core
    g = parse_edge_list(["0 1", "1 0", "2 2", "3 0", "3 4"])
    d = decompose(g, max_size=10)
    perm = d.permutation
    assert sorted(perm.tolist()) == [0, 1, 2, 3, 4]
    assert list(perm[:3]) == [0, 1, 2]  # subspace nodes first
    assert list(perm[3:]) == [3, 4]


def test_subspace_spectrum_examples():
    g = parse_edge_list(["0 1", "1 0", "2 2"])
    d = decompose(g, max_size=10)
    spec = subspace_spectrum(g, d)
    two_cycle = np.sort_complex(spec.eigenvalues[0])
    assert np.allclose(two_cycle, [-1.0, 1.0], atol=1e-12)
    assert np.allclose(spec.eigenvalues[1], [1.0], atol=1e-12)
    assert spec.unit_modulus_count == 3
    assert spec.unit_eigenvalue_count == 2


def test_each_block_has_unit_eigenvalue(rng):
    for _ in range(5):
        g = random_graph(rng, 80, 0.03)
        d = decompose(g, max_size=40)
        spec = subspace_spectrum(g, d)
        for vals in spec.eigenvalues:
            assert np.min(np.abs(vals - 1.0)) < 1e-10
            assert np.max(np.abs(vals)) <= 1.0 + 1e-10
        assert spec.unit_eigenvalue_count >= d.subspace_count


def test_dense_limit_skips_and_flags():
    g = parse_edge_list(["0 1", "1 2", "2 0"])
    d = decompose(g, max_size=10)
    spec = subspace_spectrum(g, d, dense_limit=2)
    assert spec.skipped == [0]
    assert spec.all_eigenvalues.size == 0


def test_block_triangular_spectrum_union(rng):
    # dense eigenvalues of S equal subspace-block plus core-block eigenvalues;
    # planted cycles + a densely wired core keep the spectrum simple, so the
    # two eigensolves are comparable at 1e-8
    for _ in range(5):
        n = 60
        src = [0, 1, 2, 3, 4, 5, 6, 7, 3]
        dst = [1, 2, 0, 4, 5, 6, 7, 3, 5]
        for node in range(8, n - 1):
            src.append(node)
            dst.append(n - 1)
            for t in rng.integers(0, n, int(rng.integers(8, 20))):
                src.append(node)
                dst.append(int(t))
        g = from_edges(src, dst, n)
        d = decompose(g, max_size=30)
        assert d.subspace_count == 2 and d.core_count > 0
        s_dense = dense_s(g)
        full = np.sort(np.abs(np.linalg.eigvals(s_dense)))
        core_block = s_dense[np.ix_(d.core_nodes, d.core_nodes)]
        parts = [np.linalg.eigvals(core_block)]
        for members in d.subspaces:
            parts.append(np.linalg.eigvals(subspace_block(g, members)))
        union = np.sort(np.abs(np.concatenate(parts)))
        assert np.max(np.abs(full - union)) < 1e-8


def test_json_export(tmp_path):
    g = parse_edge_list(["0 1", "1 0", "2 2", "3 0", "3 4"])
    d = decompose(g, max_size=10)
    data = decomposition_to_json(d)
    assert data["subspace_count"] == 2
    assert data["core_count"] == 2
    assert data["subspaces"][0]["members"] == [0, 1]

    limited = decomposition_to_json(d, member_limit=1)
    assert "members" not in limited["subspaces"][0]
    assert limited["subspaces"][1]["members"] == [2]

    path = tmp_path / "decomp.json"
    write_decomposition_json(d, path)
    assert json.loads(path.read_text())["subspace_node_count"] == 3


def test_max_size_validation():
    g = parse_edge_list(["0 1", "1 0"])
    with pytest.raises(ValueError):
        decompose(g, max_size=0)
    with pytest.raises(ValueError):
        node_closure(g, 0, 0)

import json

import numpy as np
import pytest

from gmspectra import correlator, pagerank, parse_edge_list, read_vector_cache
from gmspectra.cli import main


@pytest.fixture
def two_cycle_cache(tmp_path):
    edges = tmp_path / "edges.txt"
    edges.write_text("0 1\n1 0\n")
    cache = tmp_path / "g.cache"
    assert main(["ingest", str(edges), str(cache)]) == 0
    return cache


@pytest.fixture
def small_cache(tmp_path):
    rng = np.random.default_rng(7)
    lines = [f"{s} {d}" for s, d in zip(rng.integers(0, 50, 400),
                                        rng.integers(0, 50, 400))]
    edges = tmp_path / "edges.txt"
    edges.write_text("\n".join(lines) + "\n")
    cache = tmp_path / "small.cache"
    assert main(["ingest", str(edges), str(cache)]) == 0
    return cache


def test_ingest_writes_cache_and_manifest(two_cycle_cache, tmp_path):
    assert two_cycle_cache.exists()
    manifest = json.loads((tmp_path / "g.cache.manifest.json").read_text())
    assert manifest["command"] == "ingest"
    assert manifest["flags"]["node_count"] == 2
    assert str(two_cycle_cache) in manifest["outputs"]


def test_ingest_missing_input(tmp_path):
    assert main(["ingest", str(tmp_path / "nope.txt"), str(tmp_path / "c")]) == 2


def test_ingest_parse_error(tmp_path):
    edges = tmp_path / "bad.txt"
    edges.write_text("0 x\n")
    assert main(["ingest", str(edges), str(tmp_path / "c")]) == 4
    assert not (tmp_path / "c").exists()


def test_ingest_remap_sidecar(tmp_path):
    edges = tmp_path / "edges.txt"
    edges.write_text("100 200\n200 100\n")
    cache = tmp_path / "g.cache"
    assert main(["ingest", str(edges), str(cache), "--id-mode", "remap"]) == 0
    assert (tmp_path / "g.cache.ids").read_text() == "100\n200\n"


def test_rank_two_cycle(two_cycle_cache, tmp_path):
    out = tmp_path / "pr"
    assert main(["rank", str(two_cycle_cache), str(out)]) == 0
    lines = (tmp_path / "pr.csv").read_text().splitlines()
    assert lines[0] == "node_id,probability,rank"
    assert lines[1] == "0,0.5,1"
    assert lines[2] == "1,0.5,2"
    probs = read_vector_cache(tmp_path / "pr.vec")
    assert np.allclose(probs, 0.5)
    manifest = json.loads((tmp_path / "pr.manifest.json").read_text())
    assert manifest["flags"]["converged"] is True


def test_rank_bad_alpha(two_cycle_cache, tmp_path):
    assert main(["rank", str(two_cycle_cache), str(tmp_path / "pr"),
                 "--alpha", "1.5"]) == 3


def test_rank_non_convergence_flagged(small_cache, tmp_path):
    out = tmp_path / "pr"
    assert main(["rank", str(small_cache), str(out),
                 "--tol", "1e-15", "--max-iter", "2"]) == 0
    manifest = json.loads((tmp_path / "pr.manifest.json").read_text())
    assert manifest["flags"]["converged"] is False


def test_rank_corrupt_cache(tmp_path, two_cycle_cache):
    blob = bytearray(two_cycle_cache.read_bytes())
    blob[-1] ^= 0xFF
    bad = tmp_path / "bad.cache"
    bad.write_bytes(bytes(blob))
    assert main(["rank", str(bad), str(tmp_path / "pr")]) == 4


def test_subspaces_command(tmp_path):
    edges = tmp_path / "edges.txt"
    edges.write_text("0 1\n1 0\n2 2\n3 0\n3 4\n")
    cache = tmp_path / "g.cache"
    main(["ingest", str(edges), str(cache)])
    out = tmp_path / "dec"
    assert main(["subspaces", str(cache), str(out), "--max-size", "10"]) == 0
    data = json.loads((tmp_path / "dec.json").read_text())
    assert data["subspace_count"] == 2
    assert data["core_count"] == 2
    spectrum = (tmp_path / "dec.spectrum.csv").read_text().splitlines()
    assert spectrum[0] == "re,im,modulus,residual,origin"
    assert len(spectrum) == 4  # three subspace eigenvalues


def test_spectrum_command(small_cache, tmp_path):
    out = tmp_path / "spec"
    assert main(["spectrum", str(small_cache), str(out),
                 "--arnoldi-dim", "12", "--vectors", "0"]) == 0
    lines = (tmp_path / "spec.csv").read_text().splitlines()
    assert lines[0] == "re,im,modulus,residual,origin"
    assert (tmp_path / "spec.vec0.csv").exists()
    manifest = json.loads((tmp_path / "spec.manifest.json").read_text())
    assert manifest["flags"]["ortho_defect"] < 1e-10
    assert manifest["flags"]["relation_residual"] < 1e-10


def test_spectrum_max_ram_cap(small_cache, tmp_path):
    assert main(["spectrum", str(small_cache), str(tmp_path / "spec"),
                 "--arnoldi-dim", "12", "--max-ram", "0.0000001"]) == 3


def test_stats_kappa_matches_library(small_cache, tmp_path):
    main(["rank", str(small_cache), str(tmp_path / "pr")])
    main(["rank", str(small_cache), str(tmp_path / "cr"), "--chei"])
    out = tmp_path / "stats"
    assert main(["stats", str(small_cache), str(out),
                 "--rank", str(tmp_path / "pr.vec"),
                 "--chei", str(tmp_path / "cr.vec")]) == 0
    got = json.loads((tmp_path / "stats.correlator.json").read_text())["kappa"]
    from gmspectra import cheirank, load_cache
    g = load_cache(small_cache)
    expected = correlator(pagerank(g).probabilities,
                          cheirank(g).probabilities).kappa
    assert got == expected  # CLI is a thin wrapper, bit-exact
    assert (tmp_path / "stats.nk.csv").exists()
    assert (tmp_path / "stats.ng.csv").exists()
    assert (tmp_path / "stats.kappa_hist.csv").exists()


def test_stats_with_decomposition_and_fits(small_cache, tmp_path):
    main(["rank", str(small_cache), str(tmp_path / "pr")])
    main(["rank", str(small_cache), str(tmp_path / "cr"), "--chei"])
    main(["subspaces", str(small_cache), str(tmp_path / "dec"),
          "--max-size", "25"])
    out = tmp_path / "stats"
    code = main(["stats", str(small_cache), str(out),
                 "--rank", str(tmp_path / "pr.vec"),
                 "--chei", str(tmp_path / "cr.vec"),
                 "--decomposition", str(tmp_path / "dec.json"),
                 "--fit-range", "0:1.5"])
    assert code == 0
    fits = json.loads((tmp_path / "stats.fits.json").read_text())
    assert "pagerank" in fits and "cheirank" in fits
    assert fits["pagerank"]["b"] < 0  # decaying rank profile


def test_stats_missing_vector(small_cache, tmp_path):
    assert main(["stats", str(small_cache), str(tmp_path / "s"),
                 "--rank", str(tmp_path / "missing.vec"),
                 "--chei", str(tmp_path / "missing.vec")]) == 2


def test_no_partial_artifacts_on_failure(tmp_path, small_cache):
    # bad grid spec fails after the correlator outputs exist, but no .tmp
    # files may remain
    main(["rank", str(small_cache), str(tmp_path / "pr")])
    main(["rank", str(small_cache), str(tmp_path / "cr"), "--chei"])
    code = main(["stats", str(small_cache), str(tmp_path / "s"),
                 "--rank", str(tmp_path / "pr.vec"),
                 "--chei", str(tmp_path / "cr.vec"),
                 "--grid", "bogus:1"])
    assert code == 3
    assert not list(tmp_path.glob("*.tmp.*"))

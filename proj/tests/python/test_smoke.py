import math
import os
from pathlib import Path

import numpy as np
import pytest

import enzygen

DATA = Path(os.environ.get("ENZYGEN_TEST_DATA", Path(__file__).resolve().parents[1] / "data"))
FIXTURE = DATA / "fig2_family.fasta"


def test_fixture_columns():
    assert enzygen.conserved_columns(FIXTURE, 0.30) == [(1, "E"), (3, "G"), (6, "M")]


def test_mine_sites_indices():
    sites = enzygen.mine_sites(FIXTURE)
    assert [s.letters for s in sites] == ["EGM"] * 5
    assert sites[2].indices == [1, 2, 4]


def test_tau_out_of_range():
    with pytest.raises(enzygen.ParameterError):
        enzygen.conserved_columns(FIXTURE, 1.5)


def test_sequence_identity():
    assert enzygen.sequence_identity("ACDE", "ACE") == pytest.approx(0.75)


def test_init_coordinates_spacing():
    motif = [2, 7]
    motif_coords = np.array([[1.0, 2.0, 3.0], [-4.0, 0.5, 9.0]])
    x = enzygen.init_coordinates(motif, motif_coords, 12, seed=3)
    assert x.shape == (12, 3)
    np.testing.assert_array_equal(x[motif], motif_coords)
    prev = np.vstack([np.zeros(3), x[:-1]])
    free = [i for i in range(12) if i not in motif]
    np.testing.assert_allclose(np.linalg.norm(x[free] - prev[free], axis=1), 3.75, atol=1e-12)


def test_knn_matches_brute_force():
    rng = np.random.default_rng(0)
    x = rng.uniform(-5, 5, size=(15, 3))
    got = enzygen.knn(x, 4)
    d = np.linalg.norm(x[:, None] - x[None], axis=2)
    np.fill_diagonal(d, np.inf)
    np.testing.assert_array_equal(got, np.argsort(d, axis=1, kind="stable")[:, :4])


def test_knn_rejects_bad_shape():
    with pytest.raises(enzygen.DimensionError):
        enzygen.knn(np.zeros((4, 2)), 2)


def test_checkpoint_generate_and_equivariance(tmp_path):
    ck = enzygen.Checkpoint.fresh(d=8, heads=2, attention_layers=2, interleave_period=1, tags=["1.1.1.1", "2.7.1.1"])
    path = tmp_path / "m.ckpt"
    ck.save(path)
    back = enzygen.Checkpoint.load(path)
    assert back.config["d"] == 8
    assert back.config["tag_vocab"] == [2, 2, 2, 2]
    assert set(back.tag_embeddings()) == {"1.1.1.1", "2.7.1.1"}

    coords = np.array([[0.0, 0.0, 0.0], [5.0, 1.0, 0.0]])
    a = back.generate(10, "2.7.1.1", [1, 6], "EG", coords, count=2, seed=4)
    b = back.generate(10, "2.7.1.1", [1, 6], "EG", coords, count=2, seed=4)
    assert len(a) == 2
    for (sa, xa), (sb, xb) in zip(a, b):
        assert sa == sb and len(sa) == 10
        assert sa[1] == "E" and sa[6] == "G"
        np.testing.assert_array_equal(xa, xb)
        assert np.all(np.isfinite(xa))
    with pytest.raises(enzygen.VocabularyError):
        back.generate(10, "9.9.9.9", [1], "E", coords[:1])

    r = back.check_equivariance(length=8, cases=3)
    assert r["cases"] == 3
    assert max(r["features"], r["logits"], r["coords"]) < 1e-9
    assert not math.isnan(r["binding"])

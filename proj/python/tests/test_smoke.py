import csv
import math

import pytest

import mixlab


def test_regular_sequence_scale():
    seq = mixlab.generate_degrees("regular:3", n=1000)
    assert seq.n == 1000
    assert seq.m == 3000
    assert seq.eulerian
    assert seq.entropy() == pytest.approx(math.log(3))
    assert seq.entropic_time() == pytest.approx(math.log(1000) / math.log(3))


def test_sampled_digraph_keeps_degrees():
    seq = mixlab.validate_degrees("dcm", [2, 3, 2, 3], [3, 2, 3, 2])
    g = mixlab.sample_digraph(seq, 5)
    assert [len(g.out_edges(x)) for x in range(4)] == [2, 3, 2, 3]
    heads = g.heads()
    assert [heads.count(y) for y in range(4)] == [3, 2, 3, 2]
    assert mixlab.sample_digraph(seq, 5).heads() == heads


def test_eulerian_stationary_is_mu_in():
    seq = mixlab.generate_degrees("eulerian:2x50,3x50", seed=1)
    g = mixlab.sample_digraph(seq, 2)
    pi = mixlab.stationary(g, 1e-12)
    assert mixlab.tv_distance(pi, seq.mu_in()) < 1e-10


def test_double_row_is_a_distribution():
    seq = mixlab.generate_degrees("regular:2", n=20)
    row = mixlab.double_row(mixlab.sample_digraph(seq, 1), mixlab.sample_digraph(seq, 2), 0, 3, 8)
    assert sum(row) == pytest.approx(1.0)
    assert min(row) >= 0.0


def test_theory_curve():
    assert mixlab.theory_curve("joint_gammainf", 1.0, 10.0) == pytest.approx(2 * math.exp(-1))
    with pytest.raises(mixlab.MixlabError) as info:
        mixlab.theory_curve("nope", 1.0, 1.0)
    assert info.value.code == "BadCurveName"


def test_errors_carry_codes():
    with pytest.raises(mixlab.MixlabError) as info:
        mixlab.validate_degrees("dcm", [2, 3], [2, 2])
    assert info.value.code == "MismatchedSums"


def test_run_experiment(tmp_path):
    out = mixlab.run_experiment(
        "static-cutoff", tmp_path, n=500, degrees="regular:3", beta=[0.7, 1.5], replicates=2, threads=1
    )
    assert out["exit_code"] == 0
    assert out["resolved"]["n"] == 500
    with open(out["csv_path"]) as f:
        rows = list(csv.DictReader(f))
    assert [float(r["abscissa"]) for r in rows] == [0.7, 1.5]
    assert float(rows[0]["estimate"]) > float(rows[1]["estimate"])

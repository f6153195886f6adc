"""Smoke tests for the python bindings and the CLI determinism contract."""

import json
import math
import os
import subprocess

import pytest

try:
    import swtreelab as m
except ImportError:
    import _core as m  # build-tree layout


def test_tree_counts():
    info = m.tree_info(2, 2, ell=1)
    assert info["n_internal"] == 7
    assert info["n_boundary"] == 8
    assert info["n_edges"] == 14
    assert info["tiles"][0] == [0, 3, 4, 5, 6]


def test_potts_uniform_at_beta_zero():
    probs = m.potts_probs(2, 1, 2, 0.0)
    assert len(probs) == 8
    assert all(abs(p - 1 / 8) < 1e-13 for p in probs)


def test_sw_gap_is_one_at_beta_zero():
    out = m.spectral_gap("sw", 2, 1, q=2, beta=0.0)
    assert abs(out["gap"] - 1.0) < 1e-12
    assert out["psd"]


def test_rc_free_is_product_percolation():
    probs = m.rc_probs(2, 1, 0.5, 2, boundary="free")
    r = 0.5 / (2 * 0.5 + 0.5)  # p / (q(1-p) + p) = 1/3
    m_edges = 6
    for mask, p in enumerate(probs):
        k = bin(mask).count("1")
        assert abs(p - r**k * (1 - r) ** (m_edges - k)) < 1e-12


def test_transition_matrix_contract():
    out = m.transition_matrix("rc-sw", 2, 0, q=2, p=0.5, boundary="wired")
    assert out["row_sum_error"] < 1e-12
    assert out["stationarity_error"] < 1e-12
    assert out["detailed_balance_error"] < 1e-10


def test_vm_equals_pvm():
    eps_vm = m.vm_epsilon(2, 2, 2, math.log(2), ell=1)
    eps_pvm = m.pvm_epsilon(2, 2, 2, math.log(2), ell=1)
    assert abs(eps_vm - eps_pvm) < 1e-9


def test_mixing_time_at_beta_zero():
    assert m.mixing_time("sw", 2, 1, q=2, beta=0.0) == 1


def test_simulation_is_seeded():
    a = m.simulate_sw(2, 3, 2, math.log(2), steps=50, seed=7)
    b = m.simulate_sw(2, 3, 2, math.log(2), steps=50, seed=7)
    assert a == b


def test_gap_transfer_single_edge():
    out = m.gap_transfer(2, [(0, 1)], 0.5, 2)
    assert abs(out["p"] - 0.2) < 1e-14
    assert out["gap_diff"] < 1e-10
    assert out["projection_max_err"] < 1e-12


def test_tail_monte_carlo():
    out = m.tail_monte_carlo(8, 3, 0.5, 6, 50000, 3)
    assert out["inside_ci"]


def test_errors_are_raised():
    with pytest.raises(m.SwtreeError):
        m.tree_info(1, 2)


@pytest.mark.skipif("SWTREE_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_rerun_is_byte_identical(tmp_path):
    cli = os.environ["SWTREE_CLI"]
    outs = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        subprocess.run(
            [cli, "exact", "gap", "--chain", "sw", "--d", "2", "--h", "1", "--q", "2",
             "--beta", "0.5", "--out", str(d)],
            check=True, capture_output=True)
        outs.append((d / "gap.json").read_bytes() + (d / "manifest.json").read_bytes())
    assert outs[0] == outs[1]
    j = json.loads((tmp_path / "a" / "gap.json").read_text())
    assert j["row_sum_error"] < 1e-12

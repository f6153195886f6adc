"""Exact and sampled Swendsen-Wang / random-cluster dynamics on complete d-ary trees."""

from ._core import (
    SwtreeError,
    decay_profile,
    gap_transfer,
    mixing_time,
    potts_probs,
    pvm_epsilon,
    rc_probs,
    simulate_sw,
    spectral_gap,
    tail_monte_carlo,
    transition_matrix,
    tree_info,
    vm_epsilon,
)

__all__ = [
    "SwtreeError",
    "decay_profile",
    "gap_transfer",
    "mixing_time",
    "potts_probs",
    "pvm_epsilon",
    "rc_probs",
    "simulate_sw",
    "spectral_gap",
    "tail_monte_carlo",
    "transition_matrix",
    "tree_info",
    "vm_epsilon",
]

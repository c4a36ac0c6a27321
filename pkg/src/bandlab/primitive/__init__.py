"""Deterministic primitive-loop calculus."""
from .checks import k_bound_ratio, k_ward_residual, pure_loop_decay
from .explicit import as_sigma, charges, k1, k2, k2_tensor, k3, k3_tensor, sigma_str
from .ode import all_sigmas, hierarchy_rhs, initial_condition, k_loop_ode
from .tensor_ops import mollifier, partial_avg, partial_sum, sum_zero, zero_mode
from .trees import (CanonicalTree, brute_force_tsp_count, dump_trees, enumerate_tsp,
                    k_loop_tree, k_loop_tree_tensor, tree_value, tree_value_naive)

__all__ = [
    "as_sigma", "charges", "sigma_str", "k1", "k2", "k2_tensor", "k3", "k3_tensor",
    "all_sigmas", "hierarchy_rhs", "initial_condition", "k_loop_ode",
    "CanonicalTree", "enumerate_tsp", "brute_force_tsp_count", "tree_value",
    "tree_value_naive", "k_loop_tree", "k_loop_tree_tensor", "dump_trees",
    "k_ward_residual", "k_bound_ratio", "pure_loop_decay",
    "partial_avg", "zero_mode", "partial_sum", "mollifier", "sum_zero",
]

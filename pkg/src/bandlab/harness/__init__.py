"""Experiment harness: configuration, estimators, experiments and CLI."""
from .config import ExperimentConfig, SCHEMA, from_dict, load, validate
from .estimators import Accumulator, Check, EstimatorResult, mean_stderr
from .experiments import (run_decay, run_deloc, run_diffusion, run_flow_check, run_kloop,
                          run_lk, run_local_law, run_ward_check)

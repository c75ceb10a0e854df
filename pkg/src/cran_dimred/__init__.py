"""Distributed dimension reduction for distributed massive MIMO C-RAN."""

from .channel import ChannelSet, SlowFading, SystemConfig, trial_rng
from .dimred import FilterBank, bca_joint_design, design_filters, reduce
from .harness import ExperimentConfig, ResultRow, run_experiment
from .rates import RateReport, joint_mutual_information, rate_report

__version__ = "0.1.0"

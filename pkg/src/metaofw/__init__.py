"""Projection-free online learning with memory (Meta-OFW) and its application
to online non-stochastic control."""

from .feasible_sets import Ball, BlockOpNormBall, Box, FeasibleSet, Simplex
from .meta import (StepPool, build_step_pool, init_meta_state, init_weights, meta_ofw_round,
                   meta_rate, run_rounds)
from .oco import OfwState, OgdState, QuadraticMemoryLoss, ofw_step, ogd_step

__version__ = "0.1.0"

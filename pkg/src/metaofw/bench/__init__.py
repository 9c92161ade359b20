"""Reproduction harness: noise, weight schedules, trials, CSV and the CLI."""

from .config import ExperimentConfig, PlantSpec, config_from_dict, load_config
from .experiment import (CSV_HEADER, SWEEP_DIMS, TrialResult, make_plant, plant_gain, read_csv,
                         run_experiment, run_trial, summarize, sweep_dims, write_csv)
from .noise import DISTRIBUTIONS, NoiseProcess, NoiseSpec, clip_radial, sample_noise
from .schedules import SCHEDULES, WeightSchedule, cost_from_schedule, weights_at

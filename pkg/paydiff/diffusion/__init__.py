"""Payload-conditioned diffusion over trajectories."""

from .encoding import (
    N_BINS,
    EncodingScheme,
    PayloadEncoding,
    encode_payload,
    less_than,
    one_hot,
    quantize,
    sample_training_payload,
)
from .sampler import SamplerConfig, ddim_sample, ddpm_sample, diffusion_plan, sample_trajectories
from .schedule import NoiseSchedule, ScheduleConfig
from .trainer import DiffusionCheckpoint, TrainConfig, load_diffusion_checkpoint, save_diffusion_checkpoint, train
from .unet import DenoiserConfig, TemporalUnet, build_denoiser

__all__ = [
    "N_BINS",
    "DenoiserConfig",
    "DiffusionCheckpoint",
    "EncodingScheme",
    "NoiseSchedule",
    "PayloadEncoding",
    "SamplerConfig",
    "ScheduleConfig",
    "TemporalUnet",
    "TrainConfig",
    "build_denoiser",
    "ddim_sample",
    "ddpm_sample",
    "diffusion_plan",
    "encode_payload",
    "less_than",
    "load_diffusion_checkpoint",
    "one_hot",
    "quantize",
    "sample_trajectories",
    "sample_training_payload",
    "save_diffusion_checkpoint",
    "train",
]

"""Training loop of the payload-conditioned denoiser and its checkpoint."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from tqdm import tqdm

from ..data.dataset import Dataset
from ..data.normalization import NormalizationStats
from ..nn.checkpoint import load_checkpoint, save_checkpoint
from ..nn.functional import mse_loss
from ..nn.optim import Adam
from ..nn.tensor import Tensor, get_default_dtype
from ..robot.arm_model import RobotModel
from ..robot.model_io import model_hash
from ..utils.config import dataclass_from_dict, dataclass_to_dict
from ..utils.error_handler import ModelMismatchError, NonFiniteGradientError, TrainingDivergedError
from ..utils.logger import get_logger, progress_enabled
from .encoding import EncodingScheme, PayloadEncoding
from .schedule import NoiseSchedule, ScheduleConfig
from .unet import DenoiserConfig, TemporalUnet, build_denoiser

logger = get_logger(__name__)


@dataclass
class TrainConfig:
    steps: int = 2000
    batch_size: int = 32
    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    grad_clip: Optional[float] = 1.0
    log_every: int = 100
    checkpoint_every: int = 500
    init_seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return dataclass_to_dict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        return dataclass_from_dict(cls, data)


@dataclass
class DiffusionCheckpoint:
    """A trained denoiser with everything needed to sample from it."""

    network: TemporalUnet
    schedule: NoiseSchedule
    encoding: PayloadEncoding
    normalization: NormalizationStats
    model_hash: str
    model_name: str = ""
    dt: float = 0.08
    metadata: Dict[str, Any] = field(default_factory=dict)
    optimizer_state: Optional[Dict[str, np.ndarray]] = None

    @property
    def horizon(self) -> int:
        return self.network.config.horizon

    @property
    def n_dof(self) -> int:
        return self.network.config.in_channels // 3

    def check_model(self, model: RobotModel) -> None:
        if model_hash(model) != self.model_hash:
            raise ModelMismatchError(f"checkpoint was trained for model {self.model_name!r}, not {model.name!r}")

    def config_dict(self) -> Dict[str, Any]:
        return {
            "denoiser": self.network.config.to_dict(),
            "schedule": self.schedule.to_dict(),
            "encoding": self.encoding.to_dict(),
            "normalization": self.normalization.to_dict(),
            "model_hash": self.model_hash,
            "model_name": self.model_name,
            "dt": self.dt,
        }


def save_diffusion_checkpoint(ckpt: DiffusionCheckpoint, path: Union[str, Path]) -> Path:
    return save_checkpoint(path, dict(ckpt.network.state_dict()), ckpt.config_dict(),
                           optimizer=ckpt.optimizer_state, metadata=ckpt.metadata)


def load_diffusion_checkpoint(path: Union[str, Path], model: Optional[RobotModel] = None) -> DiffusionCheckpoint:
    """Rebuild a :class:`DiffusionCheckpoint`; with ``model`` its hash must match."""
    data = load_checkpoint(path)
    cfg = data.config
    network = build_denoiser(DenoiserConfig.from_dict(cfg["denoiser"]), state=data.params)
    ckpt = DiffusionCheckpoint(
        network=network,
        schedule=NoiseSchedule.from_dict(cfg["schedule"]),
        encoding=PayloadEncoding.from_dict(cfg["encoding"]),
        normalization=NormalizationStats.from_dict(cfg["normalization"]),
        model_hash=cfg["model_hash"],
        model_name=cfg.get("model_name", ""),
        dt=float(cfg["dt"]),
        metadata=data.metadata,
        optimizer_state=data.optimizer,
    )
    if model is not None:
        ckpt.check_model(model)
    return ckpt


def _training_payloads(encoding: PayloadEncoding, labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return np.stack([encoding.training_vector(float(m), rng) for m in labels]).astype(get_default_dtype())


def train(
    dataset: Dataset,
    config: Optional[TrainConfig] = None,
    schedule: Optional[NoiseSchedule] = None,
    seed: int = 0,
    denoiser_config: Optional[DenoiserConfig] = None,
    encoding: Optional[PayloadEncoding] = None,
    out: Optional[Union[str, Path]] = None,
    resume: Optional[DiffusionCheckpoint] = None,
) -> DiffusionCheckpoint:
    """Fit the denoiser to predict the noise added to normalized dataset trajectories.

    Each step draws a batch of samples, a diffusion step ``k`` in ``1..K`` and
    Gaussian noise per sample, noises the trajectories with the schedule and
    takes an Adam step on the mean squared error of the noise prediction.
    Training payloads are drawn from ``U(0, m_max)`` per sample, except under
    the supported-range encoding, which encodes ``m_max`` directly.

    Parameters
    ----------
    dataset : Dataset
        Labeled trajectories with normalization statistics.
    config : TrainConfig, optional
        Optimization settings.
    schedule : NoiseSchedule, optional
        Defaults to the 25-step cosine schedule.
    seed : int
        Seeds batch selection, steps, noise and payload draws.
    denoiser_config : DenoiserConfig, optional
        Architecture; horizon and channels are taken from the dataset.
    encoding : PayloadEncoding, optional
        Defaults to the one-hot scheme.
    out : str or Path, optional
        Checkpoint file written every ``checkpoint_every`` steps and at the end.
    resume : DiffusionCheckpoint, optional
        Continue from these parameters and optimizer state.

    Returns
    -------
    DiffusionCheckpoint
        ``metadata["loss_history"]`` holds the loss of every step.

    Raises
    ------
    TrainingDivergedError
        When the loss or a gradient becomes non-finite. The last good
        parameters are written to ``out`` (when given) before raising.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    if dataset.normalization is None:
        raise ValueError("dataset has no normalization statistics")
    config = config or TrainConfig()

    if resume is not None:
        if resume.model_hash != dataset.model_hash:
            raise ModelMismatchError("resumed checkpoint and dataset belong to different robot models")
        network, schedule, encoding = resume.network, resume.schedule, resume.encoding
    else:
        schedule = schedule or NoiseSchedule(ScheduleConfig())
        encoding = encoding or PayloadEncoding(EncodingScheme.ONE_HOT)
        base = denoiser_config or DenoiserConfig()
        arch = DenoiserConfig.from_dict({**base.to_dict(), "horizon": dataset.horizon,
                                         "in_channels": 3 * dataset.n_dof, "payload_dim": encoding.dim})
        network = build_denoiser(arch, seed=config.init_seed)

    ckpt = DiffusionCheckpoint(network, schedule, encoding, dataset.normalization, dataset.model_hash,
                               dataset.model_name, dataset.dt)
    optimizer = Adam(network.parameters(), lr=config.lr, betas=(config.beta1, config.beta2),
                     grad_clip=config.grad_clip)
    history: List[float] = []
    first_step = 0
    if resume is not None:
        history = list(resume.metadata.get("loss_history", []))
        first_step = int(resume.metadata.get("step", 0))
        if resume.optimizer_state:
            optimizer.load_state_dict(resume.optimizer_state)

    dtype = get_default_dtype()
    x0_all = np.transpose(dataset.normalization.normalize(dataset.states()), (0, 2, 1)).astype(dtype)
    labels = dataset.labels()
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(first_step,)))
    last_good = network.state_dict()
    last_good_opt = optimizer.state_dict()
    n_items = len(dataset)
    batch = min(config.batch_size, n_items)

    def snapshot(step: int) -> None:
        ckpt.metadata = {"step": step, "seed": seed, "loss_history": history, "train": config.to_dict()}
        ckpt.optimizer_state = optimizer.state_dict()

    logger.info(f"Training on {n_items} samples for {config.steps} steps "
                f"({network.num_parameters()} parameters, {encoding.scheme.value} encoding)")
    bar = tqdm(range(first_step, first_step + config.steps), desc="Training", disable=not progress_enabled(logger))
    for step in bar:
        idx = rng.integers(n_items, size=batch)
        k = rng.integers(1, schedule.n_steps + 1, size=batch)
        eps = rng.standard_normal(x0_all[idx].shape).astype(dtype)
        cond = _training_payloads(encoding, labels[idx], rng)
        xk = schedule.q_sample(x0_all[idx], k, eps).astype(dtype)

        optimizer.zero_grad()
        loss = mse_loss(network(Tensor(xk), k, cond), eps)
        value = float(loss.data)
        try:
            if not np.isfinite(value):
                raise NonFiniteGradientError(f"loss is {value}")
            loss.backward()
            optimizer.step()
        except NonFiniteGradientError as e:
            network.load_state_dict(last_good)
            optimizer.load_state_dict(last_good_opt)
            snapshot(step)
            if out is not None:
                save_diffusion_checkpoint(ckpt, out)
            raise TrainingDivergedError(f"training diverged at step {step + 1}: {e}",
                                        str(out) if out is not None else None) from e

        history.append(value)
        if (step + 1) % config.log_every == 0:
            recent = float(np.mean(history[-config.log_every:]))
            logger.info(f"step {step + 1}: loss {recent:.5f}")
            bar.set_postfix(loss=f"{recent:.4f}")
        if (step + 1) % config.checkpoint_every == 0:
            last_good = network.state_dict()
            last_good_opt = optimizer.state_dict()
            if out is not None:
                snapshot(step + 1)
                save_diffusion_checkpoint(ckpt, out)

    snapshot(first_step + config.steps)
    if out is not None:
        save_diffusion_checkpoint(ckpt, out)
        logger.info(f"Saved checkpoint to {out}")
    return ckpt

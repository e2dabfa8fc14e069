"""Unsupervised training of the positioning network.

Each sample runs features -> MLP -> spacing ratios -> layout -> optimal
SINR; the loss is the batch mean of ``1 / SINR``. Gradients flow back
through the envelope gradient of the optimal SINR, the layout Jacobian and
the network, all batched over the samples of a step.
"""

from __future__ import annotations

import csv
import enum
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import array_model, neural, positioning
from .config import ConfigError, Scene, SystemConfig

log = logging.getLogger(__name__)


class Featurization(str, enum.Enum):
    ANGLE = "angle"  # theta / pi
    COSINE = "cosine"  # cos(theta)
    RELATIVE = "relative"  # sorted |cos(theta_k) - cos(theta_0)| plus harmonics


#: Harmonics ``sin/cos(pi m d)``, m = 1..HARMONICS, appended per jammer in RELATIVE mode.
HARMONICS = 4


def feature_dim(mode, num_jammers: int) -> int:
    if Featurization(mode) is Featurization.RELATIVE:
        return max(1, num_jammers * (1 + 2 * HARMONICS))
    return num_jammers + 1


class TrainingError(RuntimeError):
    """Training diverged or made no progress; carries the history so far."""

    def __init__(self, message, history=None, scenes=None):
        super().__init__(message)
        self.history = history
        self.scenes = scenes


@dataclass
class TrainConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    dataset_size: int = 100_000
    batch_size: int = 100
    learning_rate: float = 1e-3
    epochs: int = 20
    seed: int = 0
    featurization: Featurization = Featurization.ANGLE
    hidden: int = 128
    depth: int = 2
    momentum: float = 0.0
    optimizer: str = "sgd"
    lr_schedule: str = "constant"
    clip_norm: float | None = 10.0
    fixed_source_angle: float | None = None
    eval_size: int = 1000
    require_progress: bool = True

    @classmethod
    def desk(cls, system: SystemConfig | None = None, **overrides) -> "TrainConfig":
        """Desk-scale preset: 1e4 scenes, 10 epochs, relative features, Adam 1e-3."""
        settings = dict(
            system=system or SystemConfig(),
            dataset_size=10_000,
            epochs=10,
            featurization=Featurization.RELATIVE,
            optimizer="adam",
            learning_rate=1e-3,
        )
        settings.update(overrides)
        return cls(**settings)

    def __post_init__(self):
        self.featurization = Featurization(self.featurization)
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ConfigError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not 1 <= self.batch_size <= self.dataset_size:
            raise ConfigError("need 1 <= batch_size <= dataset_size")
        if not self.learning_rate >= 0:
            raise ConfigError("learning_rate must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must lie in [0, 1)")


@dataclass
class TrainHistory:
    mean_loss: list[float] = field(default_factory=list)
    mean_sinr_db: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.mean_loss)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "mean_loss", "mean_sinr_db", "seconds"])
            for i, row in enumerate(zip(self.mean_loss, self.mean_sinr_db, self.seconds), 1):
                w.writerow([i, repr(row[0]), repr(row[1]), f"{row[2]:.6f}"])


# -- data ------------------------------------------------------------------


def sample_scene(num_jammers: int, rng, fixed_source_angle: float | None = None) -> Scene:
    """Source and jammer angles drawn independently and uniformly on [0, pi]."""
    if num_jammers < 0:
        raise ValueError("num_jammers must be >= 0")
    angles = rng.uniform(0.0, np.pi, size=num_jammers + 1)
    if fixed_source_angle is not None:
        angles[0] = fixed_source_angle
    return Scene.from_angles(angles)


def sample_angles(count: int, num_jammers: int, rng, fixed_source_angle=None) -> np.ndarray:
    """``count`` scenes as a ``(count, K+1)`` angle array, source in column 0."""
    angles = rng.uniform(0.0, np.pi, size=(count, num_jammers + 1))
    if fixed_source_angle is not None:
        angles[:, 0] = fixed_source_angle
    return angles


def scenes_to_angles(scenes) -> np.ndarray:
    if isinstance(scenes, np.ndarray):
        return np.atleast_2d(scenes).astype(float)
    return np.array([s.angles for s in scenes], dtype=float)


def write_scenes_csv(angles, path) -> None:
    angles = np.asarray(angles, dtype=float)
    k = angles.shape[1] - 1 if angles.ndim == 2 and angles.shape[1] else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"theta{i}" for i in range(k + 1)])
        for row in angles:
            w.writerow([repr(float(v)) for v in row])


def read_scenes_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"scene file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "theta0":
        raise ValueError(f"{path}: expected header theta0,theta1,...")
    header = rows[0]
    if header != [f"theta{i}" for i in range(len(header))]:
        raise ValueError(f"{path}: malformed header {header}")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if data.size == 0:
        return np.zeros((0, len(header)))
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: row width does not match header")
    if np.any(data < 0) or np.any(data > np.pi) or not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: angles must lie in [0, pi]")
    return data


# -- features and the loss chain -------------------------------------------


def featurize(scene, mode=Featurization.ANGLE) -> np.ndarray:
    """Network input for one scene (or a ``(B, K+1)`` angle array).

    In ANGLE and COSINE modes the source angle occupies slot 0 and jammers
    follow in the order given, so the map is not symmetric under jammer
    permutations. RELATIVE mode uses only the sorted cosine offsets
    ``|cos(theta_k) - cos(theta_0)|``, on which the optimal SINR depends,
    each followed by its ``sin/cos(pi m d)`` harmonics.
    """
    angles = np.asarray(scene.angles if isinstance(scene, Scene) else scene, dtype=float)
    mode = Featurization(mode)
    if mode is Featurization.ANGLE:
        return angles / np.pi
    cosines = np.cos(angles)
    if mode is Featurization.COSINE:
        return cosines
    offsets = np.sort(np.abs(cosines[..., 1:] - cosines[..., :1]), axis=-1)
    if offsets.shape[-1] == 0:
        return np.zeros(offsets.shape[:-1] + (1,))
    m = np.arange(1, HARMONICS + 1)
    phase = np.pi * offsets[..., :, None] * m
    parts = np.concatenate([offsets[..., None], np.sin(phase), np.cos(phase)], axis=-1)
    return parts.reshape(offsets.shape[:-1] + (-1,))


def _chain(params, angles, cfg: TrainConfig, need_grad=True):
    system = cfg.system
    feats = featurize(angles, cfg.featurization)
    ratios, cache = neural.forward(params, feats)
    pos, _, _ = positioning.ratios_to_positions_batch(ratios, system)
    cosines = np.cos(angles)
    c0, cj = cosines[:, 0], cosines[:, 1:]
    if not need_grad:
        return array_model.optimal_sinr_batch(pos, c0, cj, system), None
    eta, g_x = array_model.optimal_sinr_and_grad_batch(pos, c0, cj, system)
    nb = len(angles)
    # d(mean 1/eta)/dx = -g / (B eta^2)
    dl_dx = -g_x / (nb * eta[:, None] ** 2)
    jac = positioning.positions_jacobian_batch(ratios, system)
    dl_dr = np.einsum("bn,bnm->bm", dl_dx, jac)
    return eta, neural.backward(params, cache, dl_dr)


def loss_and_grads(params, batch, cfg: TrainConfig):
    """Mean reciprocal optimal SINR over ``batch`` and its parameter gradient.

    Returns ``(loss, grads, eta)`` where ``eta`` holds the per-sample SINR.
    """
    angles = scenes_to_angles(batch)
    if len(angles) == 0:
        raise ValueError("empty batch")
    eta, grads = _chain(params, angles, cfg)
    loss_terms = 1.0 / eta
    if not np.all(np.isfinite(loss_terms)):
        bad = int(np.flatnonzero(~np.isfinite(loss_terms))[0])
        raise TrainingError(
            f"non-finite loss for scene {angles[bad].tolist()}", scenes=[angles[bad]]
        )
    return float(loss_terms.mean()), grads, eta


# -- training and inference ------------------------------------------------


def build_network(cfg: TrainConfig) -> neural.MlpParams:
    specs = neural.default_specs(
        feature_dim(cfg.featurization, cfg.system.num_jammers),
        cfg.system.num_elements - 1,
        cfg.hidden,
        cfg.depth,
    )
    params = neural.init_params(specs, cfg.seed)
    params.meta = model_meta(cfg)
    return params


def model_meta(cfg: TrainConfig) -> dict:
    s = cfg.system
    return {
        "featurization": cfg.featurization.value,
        "num_elements": s.num_elements,
        "num_jammers": s.num_jammers,
        "region_size": s.region_size,
        "min_spacing": s.min_spacing,
        "noise_power": s.noise_power,
    }


def training_angles(cfg: TrainConfig) -> np.ndarray:
    rng = np.random.default_rng([cfg.seed, 1])
    return sample_angles(
        cfg.dataset_size, cfg.system.num_jammers, rng, cfg.fixed_source_angle
    )


def heldout_angles(cfg: TrainConfig, count: int | None = None) -> np.ndarray:
    rng = np.random.default_rng([cfg.seed, 2])
    return sample_angles(
        cfg.eval_size if count is None else count,
        cfg.system.num_jammers,
        rng,
        cfg.fixed_source_angle,
    )


def scheduled_lr(cfg: TrainConfig, step: int, total_steps: int) -> float:
    if cfg.lr_schedule == "cosine":
        return 0.5 * cfg.learning_rate * (1.0 + np.cos(np.pi * step / total_steps))
    return cfg.learning_rate


def make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "adam":
        return neural.Adam(cfg.learning_rate)
    return neural.MomentumSGD(cfg.learning_rate, cfg.momentum)


def train(cfg: TrainConfig, angles=None, params=None):
    """Run ``epochs`` passes of minibatch SGD over the dataset.

    ``angles`` defaults to a dataset drawn from ``cfg.seed``; batches are
    reshuffled every epoch with a generator keyed by ``(seed, epoch)``.
    Trailing samples that do not fill a batch are dropped.

    Returns
    -------
    params : MlpParams
    history : TrainHistory
    """
    angles = training_angles(cfg) if angles is None else scenes_to_angles(angles)
    if angles.shape[1] != cfg.system.num_jammers + 1:
        raise ConfigError("dataset jammer count does not match the system config")
    if len(angles) < cfg.batch_size:
        raise ConfigError("dataset smaller than one batch")
    params = build_network(cfg) if params is None else params.copy()
    opt = make_optimizer(cfg)
    history = TrainHistory()
    steps = len(angles) // cfg.batch_size
    total_steps = steps * cfg.epochs
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = np.random.default_rng([cfg.seed, 3, epoch]).permutation(len(angles))
        losses, sinrs = [], []
        for s in range(steps):
            batch = angles[order[s * cfg.batch_size : (s + 1) * cfg.batch_size]]
            opt.learning_rate = scheduled_lr(cfg, epoch * steps + s, total_steps)
            try:
                loss, grads, eta = loss_and_grads(params, batch, cfg)
                if cfg.clip_norm is not None:
                    grads = neural.clip_by_global_norm(grads, cfg.clip_norm)
                params = opt.step(params, grads)
            except (TrainingError, neural.DivergenceError, FloatingPointError) as exc:
                raise TrainingError(f"epoch {epoch + 1}, step {s + 1}: {exc}", history) from exc
            losses.append(loss)
            sinrs.append(np.mean(10.0 * np.log10(eta)))
        history.mean_loss.append(float(np.mean(losses)))
        history.mean_sinr_db.append(float(np.mean(sinrs)))
        history.seconds.append(time.perf_counter() - t0)
        log.info(
            "epoch %d: loss %.6g, sinr %.3f dB", epoch + 1, history.mean_loss[-1],
            history.mean_sinr_db[-1],
        )
    if cfg.require_progress and history.mean_sinr_db[-1] < history.mean_sinr_db[0] - 1e-9:
        raise TrainingError(
            f"mean training SINR fell from {history.mean_sinr_db[0]:.3f} dB to "
            f"{history.mean_sinr_db[-1]:.3f} dB",
            history,
        )
    return params, history


def check_compatible(params, system: SystemConfig, num_jammers: int, mode) -> None:
    """Raise ConfigError unless ``params`` fits ``N`` elements and ``K`` jammers."""
    if params.output_dim != system.num_elements - 1:
        raise ConfigError(
            f"model outputs {params.output_dim} ratios but N={system.num_elements} "
            f"needs {system.num_elements - 1}"
        )
    want = feature_dim(mode, num_jammers)
    known_k = params.meta.get("num_jammers")
    if params.input_dim != want or (known_k is not None and known_k != num_jammers):
        raise ConfigError(
            f"model takes {params.input_dim} {Featurization(mode).value} features; "
            f"K={num_jammers} needs {want}"
        )


def model_featurization(params) -> Featurization:
    return Featurization(params.meta.get("featurization", Featurization.ANGLE))


def infer(params, scene: Scene, system: SystemConfig, featurization=None):
    """Layout, beamformer and SINR from a single forward pass."""
    mode = model_featurization(params) if featurization is None else Featurization(featurization)
    check_compatible(params, system, scene.num_jammers, mode)
    ratios, _ = neural.forward(params, featurize(scene, mode))
    layout = positioning.ratios_to_positions(ratios, system).positions
    w, eta = array_model.optimal_beamformer(layout, scene, system)
    return layout, w, eta


def infer_batch(params, angles, system: SystemConfig, featurization=None):
    """Batched inference; returns ``(positions (B, N), eta (B,))``."""
    angles = scenes_to_angles(angles)
    mode = model_featurization(params) if featurization is None else Featurization(featurization)
    check_compatible(params, system, angles.shape[1] - 1, mode)
    ratios, _ = neural.forward(params, featurize(angles, mode))
    pos, _, _ = positioning.ratios_to_positions_batch(ratios, system)
    cosines = np.cos(angles)
    return pos, array_model.optimal_sinr_batch(pos, cosines[:, 0], cosines[:, 1:], system)

"""Desk-scale adversarial training of the toy generator.

The trainer works on a procedural dataset of colored ellipses with known
generative factors, so the factorization stage has real structure to find.
Internally everything runs in the raw image scale (real pixels mapped to
2x - 1, generator output taken before the display rescale) so the clamp
never blocks gradients. Losses are the logistic pair with R1 on the
discriminator and the path-length regularizer on the generator, both applied
lazily at fixed intervals with interval-scaled weights.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass, replace

import numpy as np
import torch

from .errors import InvalidDimension, InvalidInput, TrainingDiverged
from .generator import (
    BASE_SIZE,
    GeneratedImage,
    StyleWeights,
    mapping_forward,
    params_to_weights,
    random_weights,
    resolution_for,
    synthesis_forward,
    weights_to_params,
)

_LRELU_SLOPE = 0.2
_GAIN = math.sqrt(2.0)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    lr: float = 0.002
    beta1: float = 0.0
    beta2: float = 0.99
    mapping_lr: float = 0.01
    r1_gamma: float = 10.0
    pl_decay: float = 0.99
    steps: int = 500
    seed: int = 0
    # architecture and schedule knobs
    latent_dim: int = 16
    channels: int = 16
    num_layers: int = 2
    dataset_size: int = 256
    r1_interval: int = 16
    pl_interval: int = 8
    pl_weight: float = 2.0
    checkpoint_every: int = 100

    def __post_init__(self):
        if self.batch_size < 2:
            raise InvalidInput(f"batch_size must be at least 2, got {self.batch_size}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise InvalidInput("Adam betas must lie in [0, 1)")
        if self.lr <= 0 or self.mapping_lr <= 0:
            raise InvalidInput("learning rates must be positive")
        if self.steps < 0:
            raise InvalidInput("steps must be nonnegative")
        if self.r1_gamma < 0:
            raise InvalidInput("r1_gamma must be nonnegative")
        if not 0.0 <= self.pl_decay <= 1.0:
            raise InvalidInput("pl_decay must lie in [0, 1]")
        if self.dataset_size < self.batch_size:
            raise InvalidInput("dataset must hold at least one batch")

    @property
    def resolution(self) -> int:
        return resolution_for(self.num_layers)


@dataclass(frozen=True)
class FactorSpec:
    """Ground-truth factors of one procedural image."""

    radius: float
    hue: float
    dx: float
    dy: float

    def __post_init__(self):
        if not 0.1 <= self.radius <= 0.4:
            raise InvalidInput(f"radius {self.radius} outside [0.1, 0.4]")
        if not 0.0 <= self.hue < 1.0:
            raise InvalidInput(f"hue {self.hue} outside [0, 1)")
        if not (-0.25 <= self.dx <= 0.25 and -0.25 <= self.dy <= 0.25):
            raise InvalidInput("center offset outside [-0.25, 0.25]^2")


_BACKGROUND = 0.05
_VALUE = 0.9


def factor_image(factors: FactorSpec, resolution: int = 8) -> GeneratedImage:
    """Rasterize one filled ellipse on a dark background."""
    r, g, b = colorsys.hsv_to_rgb(factors.hue, 1.0, _VALUE)
    color = np.array([r, g, b])
    coords = (np.arange(resolution) + 0.5) / resolution
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    cx, cy = 0.5 + factors.dx, 0.5 + factors.dy
    inside = (xx - cx) ** 2 + (yy - cy) ** 2 <= factors.radius ** 2
    pixels = np.full((resolution, resolution, 3), _BACKGROUND)
    pixels[inside] = color
    return GeneratedImage(pixels=pixels, provenance="real")


def procedural_dataset(n: int, seed: int, resolution: int = 8):
    """n (image, FactorSpec) pairs with uniformly sampled factors."""
    if n < 1:
        raise InvalidInput(f"dataset size must be positive, got {n}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        f = FactorSpec(
            radius=rng.uniform(0.1, 0.4),
            hue=rng.uniform(0.0, 1.0),
            dx=rng.uniform(-0.25, 0.25),
            dy=rng.uniform(-0.25, 0.25),
        )
        out.append((factor_image(f, resolution), f))
    return out


# ---------------------------------------------------------------------------
# losses


def _check_scores(scores, name):
    if isinstance(scores, torch.Tensor):
        if scores.numel() == 0:
            raise InvalidInput(f"{name} batch is empty")
        if not torch.all(torch.isfinite(scores)):
            raise InvalidInput(f"{name} scores contain non-finite values")
        return scores
    arr = np.atleast_1d(np.asarray(scores, dtype=np.float64))
    if arr.size == 0:
        raise InvalidInput(f"{name} batch is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} scores contain non-finite values")
    return arr


def d_loss_logistic(real_scores, fake_scores):
    """mean softplus(-s_real) + mean softplus(s_fake).

    Returns a torch scalar when given tensors (stays differentiable), a float
    otherwise.
    """
    real = _check_scores(real_scores, "real")
    fake = _check_scores(fake_scores, "fake")
    if isinstance(real, torch.Tensor) or isinstance(fake, torch.Tensor):
        real_t = real if isinstance(real, torch.Tensor) else torch.as_tensor(real)
        fake_t = fake if isinstance(fake, torch.Tensor) else torch.as_tensor(fake)
        return torch.nn.functional.softplus(-real_t).mean() + torch.nn.functional.softplus(fake_t).mean()
    return float(np.mean(np.logaddexp(0.0, -real)) + np.mean(np.logaddexp(0.0, fake)))


def g_loss_nonsat(fake_scores):
    """Non-saturating generator loss: mean softplus(-s_fake)."""
    fake = _check_scores(fake_scores, "fake")
    if isinstance(fake, torch.Tensor):
        return torch.nn.functional.softplus(-fake).mean()
    return float(np.mean(np.logaddexp(0.0, -fake)))


# ---------------------------------------------------------------------------
# discriminator


class Discriminator:
    """Small conv stack with a dense scalar head, one finite score per image."""

    def __init__(self, params: dict):
        self.params = params

    @classmethod
    def init(cls, resolution: int = 8, channels: int = 32, seed: int = 0) -> "Discriminator":
        if resolution < BASE_SIZE or resolution & (resolution - 1):
            raise InvalidInput(f"resolution must be a power of two >= {BASE_SIZE}")
        rng = np.random.default_rng(seed)

        def t(shape, fan_in):
            return torch.as_tensor(rng.standard_normal(shape) / math.sqrt(fan_in))

        p = {
            "conv_in.k": t((channels, 3, 3, 3), 27),
            "conv_in.b": torch.zeros(channels, dtype=torch.float64),
        }
        levels = int(math.log2(resolution // BASE_SIZE))
        for i in range(levels):
            p[f"down.{i}.k"] = t((channels, channels, 3, 3), channels * 9)
            p[f"down.{i}.b"] = torch.zeros(channels, dtype=torch.float64)
        p["head.w"] = t((1, channels * BASE_SIZE * BASE_SIZE), channels * BASE_SIZE * BASE_SIZE)
        p["head.b"] = torch.zeros(1, dtype=torch.float64)
        p["levels"] = torch.tensor(levels)  # structural, not trainable
        return cls(p)

    def trainable(self):
        return {k: v for k, v in self.params.items() if k != "levels"}

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        p = self.params
        h = torch.nn.functional.conv2d(x, p["conv_in.k"], p["conv_in.b"], padding=1)
        h = torch.nn.functional.leaky_relu(h, _LRELU_SLOPE) * _GAIN
        for i in range(int(p["levels"])):
            h = torch.nn.functional.conv2d(h, p[f"down.{i}.k"], p[f"down.{i}.b"], padding=1)
            h = torch.nn.functional.leaky_relu(h, _LRELU_SLOPE) * _GAIN
            h = torch.nn.functional.avg_pool2d(h, 2)
        h = h.reshape(h.shape[0], -1)
        return (h @ self.params["head.w"].T + self.params["head.b"])[:, 0]

    def __call__(self, x):
        return self.forward(x)


def r1_penalty(disc: Discriminator, real_batch, gamma: float, create_graph: bool = False):
    """(gamma/2) * mean_b ||grad_x D(x_b)||^2 over the real batch."""
    if gamma < 0:
        raise InvalidInput(f"gamma must be nonnegative, got {gamma}")
    x = real_batch if isinstance(real_batch, torch.Tensor) else torch.as_tensor(
        np.asarray(real_batch, dtype=np.float64)
    )
    x = x.detach().requires_grad_(True)
    scores = disc.forward(x)
    (grad,) = torch.autograd.grad(scores.sum(), x, create_graph=create_graph)
    sq = grad.reshape(grad.shape[0], -1).pow(2).sum(dim=1)
    return 0.5 * gamma * sq.mean()


# ---------------------------------------------------------------------------
# path length regularizer


@dataclass(frozen=True)
class PathLengthState:
    """EMA of the observed Jacobian norm; decay is the retention factor."""

    a: float = 0.0
    decay: float = 0.99
    counter: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.a < 0:
            raise InvalidInput("path length EMA target must be nonnegative")
        if not 0.0 <= self.decay <= 1.0:
            raise InvalidInput("decay must lie in [0, 1]")


def path_length_penalty(g_forward, w_batch, state: PathLengthState, create_graph: bool = False):
    """Penalty mean(||J|| - a)^2 with J the w-gradient of <G(w), y> * sqrt(H*W).

    g_forward maps a (B, d) tensor of w codes to (B, C, H, W) images; y is a
    fresh unit image-space direction per batch element, drawn deterministically
    from the state's seed and counter. Returns (penalty, updated state) where
    the EMA target moves to decay * a + (1 - decay) * mean ||J||.
    """
    w = w_batch if isinstance(w_batch, torch.Tensor) else torch.as_tensor(
        np.asarray(w_batch, dtype=np.float64)
    )
    if not w.requires_grad:
        w = w.detach().requires_grad_(True)
    img = g_forward(w)
    b, _, h, wid = img.shape
    gen = torch.Generator(device="cpu").manual_seed(state.seed * 1_000_003 + state.counter)
    y = torch.randn(img.shape, generator=gen, dtype=img.dtype)
    y = y / y.reshape(b, -1).norm(dim=1)[:, None, None, None]
    target = (img * y).reshape(b, -1).sum(dim=1) * math.sqrt(h * wid)
    (jac,) = torch.autograd.grad(target.sum(), w, create_graph=create_graph)
    norms = jac.norm(dim=1)
    penalty = ((norms - state.a) ** 2).mean()
    new_a = state.decay * state.a + (1.0 - state.decay) * float(norms.detach().mean())
    return penalty, replace(state, a=new_a, counter=state.counter + 1)


# ---------------------------------------------------------------------------
# optimizer


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 0.002
    beta1: float = 0.0
    beta2: float = 0.99
    eps: float = 1e-8
    group_lrs: tuple = ()  # (name_prefix, lr) pairs, first match wins

    def lr_for(self, name: str) -> float:
        for prefix, lr in self.group_lrs:
            if name.startswith(prefix):
                return lr
        return self.lr


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def init(cls, params: dict) -> "AdamState":
        zeros = {k: p * 0 for k, p in params.items()}
        return cls(m=zeros, v={k: p * 0 for k, p in params.items()}, t=0)


def adam_step(params: dict, grads: dict, state: AdamState, config: AdamConfig):
    """One bias-corrected Adam update over a named parameter dict.

    Works elementwise on numpy arrays or torch tensors alike. With beta1=0
    the first moment is just the current gradient.
    """
    t = state.t + 1
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            new_params[name], new_m[name], new_v[name] = p, state.m[name], state.v[name]
            continue
        if tuple(g.shape) != tuple(p.shape):
            raise InvalidDimension(f"gradient shape {tuple(g.shape)} != param shape {tuple(p.shape)} for {name}")
        m = config.beta1 * state.m[name] + (1.0 - config.beta1) * g
        v = config.beta2 * state.v[name] + (1.0 - config.beta2) * g * g
        mhat = m / (1.0 - config.beta1 ** t)
        vhat = v / (1.0 - config.beta2 ** t)
        new_params[name] = p - config.lr_for(name) * mhat / (vhat ** 0.5 + config.eps)
        new_m[name], new_v[name] = m, v
    return new_params, AdamState(m=new_m, v=new_v, t=t)


# ---------------------------------------------------------------------------
# the loop


@dataclass(frozen=True)
class Checkpoint:
    step: int
    weights: StyleWeights
    losses: dict


class TrainResult:
    """Checkpoint list from a run; iterates as StyleWeights for convenience."""

    def __init__(self, checkpoints, history):
        self.checkpoints = list(checkpoints)
        self.history = list(history)

    def __len__(self):
        return len(self.checkpoints)

    def __getitem__(self, i):
        item = self.checkpoints[i]
        if isinstance(i, slice):
            return [c.weights for c in item]
        return item.weights

    def __iter__(self):
        return (c.weights for c in self.checkpoints)


def _detached(params):
    return {k: v.detach() for k, v in params.items()}


def _with_grad(params):
    return {k: v.detach().clone().requires_grad_(True) for k, v in params.items()}


def _grads_of(loss, params):
    names = list(params)
    grads = torch.autograd.grad(loss, [params[n] for n in names], allow_unused=True)
    return {n: (g if g is not None else params[n] * 0) for n, g in zip(names, grads)}


def _noise_batch(rng, batch, num_layers, base=BASE_SIZE):
    maps = []
    for l in range(num_layers):
        side = base * 2 ** l
        maps.append(torch.as_tensor(rng.standard_normal((batch, 1, side, side))))
    return maps


def train(config: TrainConfig) -> TrainResult:
    """Alternating discriminator/generator training, deterministic by seed.

    Emits a checkpoint at initialization, every `checkpoint_every` steps, and
    at the final step. Raises TrainingDiverged (carrying the step) as soon as
    any loss goes non-finite.
    """
    rng = np.random.default_rng(config.seed)
    data = procedural_dataset(config.dataset_size, config.seed + 1, config.resolution)
    real_all = torch.as_tensor(
        np.stack([np.transpose(img.pixels, (2, 0, 1)) for img, _ in data]) * 2.0 - 1.0
    )

    g_params = _detached(weights_to_params(random_weights(
        config.latent_dim, config.channels, config.num_layers, seed=config.seed
    )))
    disc = Discriminator.init(config.resolution, channels=2 * config.channels, seed=config.seed + 1)
    d_params = _detached(disc.trainable())

    g_opt = AdamConfig(lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                       group_lrs=(("map.", config.mapping_lr),))
    d_opt = AdamConfig(lr=config.lr, beta1=config.beta1, beta2=config.beta2)
    g_state = AdamState.init(g_params)
    d_state = AdamState.init(d_params)
    pl_state = PathLengthState(decay=config.pl_decay, seed=config.seed + 2)

    w_mean = np.zeros(config.latent_dim)
    w_mean_beta = 0.995

    eval_rng = np.random.default_rng(config.seed + 3)
    eval_real = real_all[eval_rng.integers(0, len(data), size=32)]
    eval_z = torch.as_tensor(eval_rng.standard_normal((32, config.latent_dim)))
    eval_noise = _noise_batch(eval_rng, 32, config.num_layers)

    def eval_d_loss():
        disc.params = {**d_params, "levels": disc.params["levels"]}
        with torch.no_grad():
            w = mapping_forward(eval_z, g_params)
            fake = synthesis_forward(w, g_params, eval_noise)
            return float(d_loss_logistic(disc.forward(eval_real), disc.forward(fake)))

    def snapshot(step, losses):
        return Checkpoint(step=step, weights=params_to_weights(g_params, w_mean),
                          losses=dict(losses, eval_d_loss=eval_d_loss()))

    checkpoints = [snapshot(0, {})]
    history = []

    for step in range(1, config.steps + 1):
        # discriminator update
        d_live = _with_grad(d_params)
        disc.params = {**d_live, "levels": disc.params["levels"]}
        idx = rng.integers(0, len(data), size=config.batch_size)
        real = real_all[idx]
        z = torch.as_tensor(rng.standard_normal((config.batch_size, config.latent_dim)))
        noise = _noise_batch(rng, config.batch_size, config.num_layers)
        with torch.no_grad():
            w = mapping_forward(z, g_params)
            fake = synthesis_forward(w, g_params, noise)
        try:
            d_loss = d_loss_logistic(disc.forward(real), disc.forward(fake))
        except InvalidInput as exc:
            raise TrainingDiverged(str(exc), step=step)
        r1_val = None
        total = d_loss
        if config.r1_gamma > 0 and step % config.r1_interval == 0:
            r1 = r1_penalty(disc, real, config.r1_gamma, create_graph=True)
            r1_val = float(r1.detach())
            total = total + r1 * config.r1_interval
        d_params, d_state = adam_step(d_params, _grads_of(total, d_live), d_state, d_opt)
        d_params = _detached(d_params)

        # generator update
        g_live = _with_grad(g_params)
        disc.params = {**d_params, "levels": disc.params["levels"]}
        z = torch.as_tensor(rng.standard_normal((config.batch_size, config.latent_dim)))
        noise = _noise_batch(rng, config.batch_size, config.num_layers)
        w = mapping_forward(z, g_live)
        fake = synthesis_forward(w, g_live, noise)
        try:
            g_loss = g_loss_nonsat(disc.forward(fake))
        except InvalidInput as exc:
            raise TrainingDiverged(str(exc), step=step)
        pl_val = None
        total = g_loss
        if config.pl_weight > 0 and step % config.pl_interval == 0:
            pl, pl_state = path_length_penalty(
                lambda wb: synthesis_forward(wb, g_live, noise), w, pl_state, create_graph=True
            )
            pl_val = float(pl.detach())
            total = total + pl * (config.pl_weight * config.pl_interval)
        g_params, g_state = adam_step(g_params, _grads_of(total, g_live), g_state, g_opt)
        g_params = _detached(g_params)

        with torch.no_grad():
            batch_mean = mapping_forward(z, g_params).mean(dim=0).numpy()
        w_mean = w_mean_beta * w_mean + (1.0 - w_mean_beta) * batch_mean

        d_f, g_f = float(d_loss.detach()), float(g_loss.detach())
        if not (math.isfinite(d_f) and math.isfinite(g_f)):
            raise TrainingDiverged(f"non-finite loss at step {step} (d={d_f}, g={g_f})", step=step)
        history.append({"step": step, "d_loss": d_f, "g_loss": g_f, "r1": r1_val, "pl": pl_val})

        if step % config.checkpoint_every == 0 or step == config.steps:
            checkpoints.append(snapshot(step, history[-1]))

    return TrainResult(checkpoints, history)

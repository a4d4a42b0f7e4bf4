"""Desk-scale style-based generator: mapping network, per-layer affine styles,
AdaIN synthesis with noise injection, and truncation.

All public operations are pure functions over immutable inputs. Weights are
held as numpy arrays (float32 at storage precision, see `sgw1`); the forward
math runs in float64 through torch so the same code path serves both inference
and the trainer's autodiff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from .errors import InvalidDimension, InvalidInput, InvalidLayer

MAPPING_LAYERS = 8
LRELU_SLOPE = 0.2
LRELU_GAIN = math.sqrt(2.0)
ADAIN_EPS = 1e-8
BASE_SIZE = 4  # side of the constant input


def resolution_for(num_layers: int) -> int:
    """Output side length for a generator with `num_layers` synthesis blocks."""
    return BASE_SIZE * 2 ** (num_layers - 1)


def _require_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite entries")


@dataclass(frozen=True)
class LatentCode:
    """A latent vector in the input space Z or the intermediate space W."""

    values: np.ndarray
    space: str = "Z"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise InvalidDimension(f"latent code must be 1-D, got shape {v.shape}")
        _require_finite("latent code", v)
        if self.space not in ("Z", "W"):
            raise InvalidInput(f"unknown latent space {self.space!r}")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class StyleVector:
    """Per-layer style `y`: the first half scales, the second half shifts."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] % 2 != 0:
            raise InvalidDimension(f"style vector must be 1-D of even length, got {v.shape}")
        _require_finite("style vector", v)
        object.__setattr__(self, "values", v)

    @property
    def scale(self) -> np.ndarray:
        return self.values[: self.values.shape[0] // 2]

    @property
    def shift(self) -> np.ndarray:
        return self.values[self.values.shape[0] // 2 :]


@dataclass(frozen=True)
class GeneratedImage:
    """An image with provenance and optional traversal metadata.

    Pixels are H x W x 3 floats in [0, 1].
    """

    pixels: np.ndarray
    provenance: str = "generated"
    source_w: LatentCode | None = None
    direction_id: int | None = None
    alpha: float | None = None

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] != p.shape[1]:
            raise InvalidDimension(f"image must be square HxWx3, got {p.shape}")
        _require_finite("image", p)
        if p.min() < 0.0 or p.max() > 1.0:
            raise InvalidInput("pixel values must lie in [0, 1]")
        if self.provenance not in ("real", "generated"):
            raise InvalidInput(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "pixels", p)


@dataclass(frozen=True)
class StyleWeights:
    """All learnable parameters of the toy style-based generator.

    mapping:        8 pairs (W: d x d, b: d) for the fully connected mapping net
    affines:        per synthesis layer (A: m x d, b: m) with m = 2 * channels
    conv_kernels:   per synthesis layer C x C x 3 x 3 kernels (no conv bias;
                    the shift enters through AdaIN)
    noise_scales:   one learned scalar per synthesis layer
    torgb_kernel:   3 x C matrix for the final 1x1 convolution
    torgb_bias:     3-vector
    constant_input: learned start tensor, stored channels-first C x 4 x 4
    w_mean:         running average of mapped w, used for truncation
    """

    mapping: tuple
    affines: tuple
    conv_kernels: tuple
    noise_scales: np.ndarray
    torgb_kernel: np.ndarray
    torgb_bias: np.ndarray
    constant_input: np.ndarray
    w_mean: np.ndarray

    def __post_init__(self):
        mapping = tuple((np.asarray(w), np.asarray(b)) for w, b in self.mapping)
        affines = tuple((np.asarray(a), np.asarray(b)) for a, b in self.affines)
        convs = tuple(np.asarray(k) for k in self.conv_kernels)
        object.__setattr__(self, "mapping", mapping)
        object.__setattr__(self, "affines", affines)
        object.__setattr__(self, "conv_kernels", convs)
        object.__setattr__(self, "noise_scales", np.asarray(self.noise_scales))
        object.__setattr__(self, "torgb_kernel", np.asarray(self.torgb_kernel))
        object.__setattr__(self, "torgb_bias", np.asarray(self.torgb_bias))
        object.__setattr__(self, "constant_input", np.asarray(self.constant_input))
        object.__setattr__(self, "w_mean", np.asarray(self.w_mean))
        self._validate()

    def _validate(self):
        if len(self.mapping) != MAPPING_LAYERS:
            raise InvalidDimension(
                f"mapping network must have {MAPPING_LAYERS} layers, got {len(self.mapping)}"
            )
        d = self.mapping[0][0].shape[0]
        for i, (w, b) in enumerate(self.mapping):
            if w.shape != (d, d) or b.shape != (d,):
                raise InvalidDimension(f"mapping layer {i} has shape {w.shape}, expected {(d, d)}")
            _require_finite(f"mapping layer {i}", w)
            _require_finite(f"mapping bias {i}", b)
        L = len(self.affines)
        if L < 1 or len(self.conv_kernels) != L or self.noise_scales.shape != (L,):
            raise InvalidDimension("affine, conv, and noise layer counts must agree")
        c = self.constant_input.shape[0]
        if self.constant_input.shape != (c, BASE_SIZE, BASE_SIZE):
            raise InvalidDimension(
                f"constant input must be C x {BASE_SIZE} x {BASE_SIZE}, got {self.constant_input.shape}"
            )
        m = 2 * c
        for l, (a, b) in enumerate(self.affines):
            if a.shape != (m, d) or b.shape != (m,):
                raise InvalidDimension(
                    f"affine layer {l} has shape {a.shape}, expected {(m, d)}"
                )
            _require_finite(f"affine layer {l}", a)
            _require_finite(f"affine bias {l}", b)
        for l, k in enumerate(self.conv_kernels):
            if k.shape != (c, c, 3, 3):
                raise InvalidDimension(f"conv kernel {l} has shape {k.shape}, expected {(c, c, 3, 3)}")
            _require_finite(f"conv kernel {l}", k)
        if self.torgb_kernel.shape != (3, c) or self.torgb_bias.shape != (3,):
            raise InvalidDimension("toRGB kernel must be 3 x C with a 3-vector bias")
        if self.w_mean.shape != (d,):
            raise InvalidDimension(f"w_mean must have dimension {d}")
        _require_finite("noise scales", self.noise_scales)
        _require_finite("toRGB", self.torgb_kernel)
        _require_finite("toRGB bias", self.torgb_bias)
        _require_finite("constant input", self.constant_input)
        _require_finite("w_mean", self.w_mean)

    @property
    def latent_dim(self) -> int:
        return self.mapping[0][0].shape[0]

    @property
    def channels(self) -> int:
        return self.constant_input.shape[0]

    @property
    def style_dim(self) -> int:
        return 2 * self.channels

    @property
    def num_layers(self) -> int:
        return len(self.affines)

    @property
    def resolution(self) -> int:
        return resolution_for(self.num_layers)

    def with_w_mean(self, w_mean: np.ndarray) -> "StyleWeights":
        return replace(self, w_mean=np.asarray(w_mean, dtype=self.w_mean.dtype))


def random_weights(
    latent_dim: int = 512,
    channels: int = 64,
    num_layers: int = 3,
    seed: int = 0,
    dtype=np.float32,
) -> StyleWeights:
    """Freshly initialized generator weights.

    Linear and conv layers use fan-in scaled normal init so unit-variance
    inputs keep unit variance before each activation; noise scales start at
    zero and w_mean at zero.
    """
    rng = np.random.default_rng(seed)
    d, c = latent_dim, channels

    def normal(shape, fan_in):
        return (rng.standard_normal(shape) / math.sqrt(fan_in)).astype(dtype)

    mapping = tuple((normal((d, d), d), np.zeros(d, dtype=dtype)) for _ in range(MAPPING_LAYERS))
    affines = []
    for _ in range(num_layers):
        a = normal((2 * c, d), d)
        b = np.zeros(2 * c, dtype=dtype)
        b[:c] = 1.0  # start at identity scale
        affines.append((a, b))
    convs = tuple(normal((c, c, 3, 3), c * 9) for _ in range(num_layers))
    return StyleWeights(
        mapping=mapping,
        affines=tuple(affines),
        conv_kernels=convs,
        noise_scales=np.zeros(num_layers, dtype=dtype),
        torgb_kernel=normal((3, c), c),
        torgb_bias=np.zeros(3, dtype=dtype),
        constant_input=rng.standard_normal((c, BASE_SIZE, BASE_SIZE)).astype(dtype),
        w_mean=np.zeros(d, dtype=dtype),
    )


# ---------------------------------------------------------------------------
# torch forward path, shared between the public ops and the trainer


def weights_to_params(weights: StyleWeights, dtype=torch.float64) -> dict:
    """Flatten StyleWeights into a named tensor dict for the torch forward."""
    p = {}
    for i, (w, b) in enumerate(weights.mapping):
        p[f"map.{i}.w"] = torch.as_tensor(np.asarray(w, dtype=np.float64), dtype=dtype)
        p[f"map.{i}.b"] = torch.as_tensor(np.asarray(b, dtype=np.float64), dtype=dtype)
    for l, (a, b) in enumerate(weights.affines):
        p[f"affine.{l}.a"] = torch.as_tensor(np.asarray(a, dtype=np.float64), dtype=dtype)
        p[f"affine.{l}.b"] = torch.as_tensor(np.asarray(b, dtype=np.float64), dtype=dtype)
    for l, k in enumerate(weights.conv_kernels):
        p[f"conv.{l}.k"] = torch.as_tensor(np.asarray(k, dtype=np.float64), dtype=dtype)
    p["noise"] = torch.as_tensor(np.asarray(weights.noise_scales, dtype=np.float64), dtype=dtype)
    p["torgb.k"] = torch.as_tensor(np.asarray(weights.torgb_kernel, dtype=np.float64), dtype=dtype)
    p["torgb.b"] = torch.as_tensor(np.asarray(weights.torgb_bias, dtype=np.float64), dtype=dtype)
    p["const"] = torch.as_tensor(np.asarray(weights.constant_input, dtype=np.float64), dtype=dtype)
    return p


def params_to_weights(params: dict, w_mean: np.ndarray, dtype=np.float32) -> StyleWeights:
    """Inverse of `weights_to_params`; w_mean is tracked outside the graph."""
    n_layers = len([k for k in params if k.startswith("affine.") and k.endswith(".a")])

    def get(name):
        return params[name].detach().cpu().numpy().astype(dtype)

    return StyleWeights(
        mapping=tuple((get(f"map.{i}.w"), get(f"map.{i}.b")) for i in range(MAPPING_LAYERS)),
        affines=tuple((get(f"affine.{l}.a"), get(f"affine.{l}.b")) for l in range(n_layers)),
        conv_kernels=tuple(get(f"conv.{l}.k") for l in range(n_layers)),
        noise_scales=get("noise"),
        torgb_kernel=get("torgb.k"),
        torgb_bias=get("torgb.b"),
        constant_input=get("const"),
        w_mean=np.asarray(w_mean, dtype=dtype),
    )


def _lrelu(x):
    return torch.nn.functional.leaky_relu(x, LRELU_SLOPE) * LRELU_GAIN


def mapping_forward(z: torch.Tensor, params: dict) -> torch.Tensor:
    """8-layer fully connected mapping with gained leaky-ReLU, batched."""
    x = z
    for i in range(MAPPING_LAYERS):
        x = _lrelu(x @ params[f"map.{i}.w"].T + params[f"map.{i}.b"])
    return x


def _adain_torch(x: torch.Tensor, scale: torch.Tensor, shift: torch.Tensor) -> torch.Tensor:
    # x: (B, C, H, W); scale/shift: (B, C). Per-channel standardization over
    # spatial dims with epsilon on the variance, then style scale and shift.
    mean = x.mean(dim=(2, 3), keepdim=True)
    var = x.var(dim=(2, 3), unbiased=False, keepdim=True)
    xhat = (x - mean) / torch.sqrt(var + ADAIN_EPS)
    return xhat * scale[:, :, None, None] + shift[:, :, None, None]


def synthesis_forward(w: torch.Tensor, params: dict, noise_maps) -> torch.Tensor:
    """Synthesis network over a batch of w codes.

    noise_maps: per layer, a (H_l, W_l) tensor (or None for zero noise); the
    same map is shared across the batch and scaled by the learned per-layer
    scalar. Block l > 0 upsamples 2x (nearest) before its 3x3 conv.
    Returns raw RGB before the output rescale, shape (B, 3, H, W).
    """
    n_layers = params["noise"].shape[0]
    c = params["const"].shape[0]
    batch = w.shape[0]
    x = params["const"].unsqueeze(0).expand(batch, -1, -1, -1)
    for l in range(n_layers):
        if l > 0:
            x = torch.nn.functional.interpolate(x, scale_factor=2, mode="nearest")
        x = torch.nn.functional.conv2d(x, params[f"conv.{l}.k"], padding=1)
        if noise_maps is not None and noise_maps[l] is not None:
            x = x + params["noise"][l] * noise_maps[l]
        y = w @ params[f"affine.{l}.a"].T + params[f"affine.{l}.b"]
        x = _adain_torch(x, y[:, :c], y[:, c:])
        x = _lrelu(x)
    img = torch.einsum("oc,bchw->bohw", params["torgb.k"], x) + params["torgb.b"][None, :, None, None]
    return img


def output_rescale(raw: torch.Tensor) -> torch.Tensor:
    """Affine rescale of raw RGB into [0, 1] with clamping."""
    return torch.clamp(0.5 * raw + 0.5, 0.0, 1.0)


def noise_for_seed(weights: StyleWeights, noise_seed: int | None, dtype=torch.float64):
    """Per-layer spatial noise maps, or None for the fixed-zero mode."""
    if noise_seed is None:
        return None
    gen = torch.Generator(device="cpu").manual_seed(int(noise_seed))
    maps = []
    for l in range(weights.num_layers):
        side = BASE_SIZE * 2 ** l
        maps.append(torch.randn((side, side), generator=gen, dtype=dtype))
    return maps


# ---------------------------------------------------------------------------
# public operations


def map_latent(z: LatentCode, weights: StyleWeights, psi: float = 1.0) -> LatentCode:
    """Map z through the 8-layer network and truncate toward w_mean.

    Returns w_mean + psi * (w - w_mean); psi=1 is the untruncated output and
    psi=0 collapses to w_mean exactly.
    """
    if z.space != "Z":
        raise InvalidInput(f"map_latent expects a Z-space code, got {z.space}")
    if z.dim != weights.latent_dim:
        raise InvalidDimension(
            f"latent dimension {z.dim} does not match generator dimension {weights.latent_dim}"
        )
    if not (0.0 <= psi <= 1.0):
        raise InvalidInput(f"truncation psi must lie in [0, 1], got {psi}")
    params = weights_to_params(weights)
    with torch.no_grad():
        w = mapping_forward(torch.as_tensor(z.values, dtype=torch.float64)[None, :], params)[0]
    w = w.numpy()
    w_mean = weights.w_mean.astype(np.float64)
    return LatentCode(w_mean + psi * (w - w_mean), space="W")


def style_from_w(w: LatentCode, layer: int, weights: StyleWeights) -> StyleVector:
    """Affine style y = A w + b for one synthesis layer."""
    if not 0 <= layer < weights.num_layers:
        raise InvalidLayer(f"layer {layer} out of range for {weights.num_layers} synthesis layers")
    if w.dim != weights.latent_dim:
        raise InvalidDimension(
            f"w dimension {w.dim} does not match generator dimension {weights.latent_dim}"
        )
    a, b = weights.affines[layer]
    return StyleVector(a.astype(np.float64) @ w.values + b.astype(np.float64))


def adain(activations: np.ndarray, y: StyleVector) -> np.ndarray:
    """Adaptive instance normalization over channels-first activations.

    activations: (C, H, W). The channel count must equal half the style
    length; each channel is standardized over its spatial extent and then
    scaled/shifted by the style halves.
    """
    x = np.asarray(activations, dtype=np.float64)
    if x.ndim != 3:
        raise InvalidDimension(f"activations must be C x H x W, got shape {x.shape}")
    c = x.shape[0]
    if y.values.shape[0] != 2 * c:
        raise InvalidDimension(
            f"style length {y.values.shape[0]} does not match {c} channels (need {2 * c})"
        )
    xt = torch.as_tensor(x)[None]
    out = _adain_torch(
        xt,
        torch.as_tensor(y.scale)[None, :],
        torch.as_tensor(y.shift)[None, :],
    )
    return out[0].numpy()


def synthesize(w: LatentCode, weights: StyleWeights, noise_seed: int | None = None) -> GeneratedImage:
    """Render one image from a W-space code.

    Deterministic given (w, weights, noise_seed); noise_seed None disables
    noise injection entirely.
    """
    if w.dim != weights.latent_dim:
        raise InvalidDimension(
            f"w dimension {w.dim} does not match generator dimension {weights.latent_dim}"
        )
    params = weights_to_params(weights)
    noise = noise_for_seed(weights, noise_seed)
    with torch.no_grad():
        raw = synthesis_forward(torch.as_tensor(w.values, dtype=torch.float64)[None, :], params, noise)
        img = output_rescale(raw)[0]
    pixels = np.transpose(img.numpy(), (1, 2, 0))
    return GeneratedImage(pixels=pixels, provenance="generated", source_w=w)


def estimate_w_mean(weights: StyleWeights, n: int = 10_000, seed: int = 0) -> np.ndarray:
    """Monte-Carlo estimate of the mean mapped w over the Z prior."""
    if n < 1:
        raise InvalidInput("need at least one sample to estimate w_mean")
    rng = np.random.default_rng(seed)
    params = weights_to_params(weights)
    z = torch.as_tensor(rng.standard_normal((n, weights.latent_dim)), dtype=torch.float64)
    with torch.no_grad():
        w = mapping_forward(z, params)
    return w.mean(dim=0).numpy()

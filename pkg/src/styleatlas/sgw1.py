"""Binary weight serialization.

Layout (all integers little-endian unsigned 32-bit, all tensors float32
little-endian, row-major):

    bytes 0..3   magic "SGW1"
    byte  4      format version (currently 1)
    bytes 5..20  d, m, L, C
    then, in order: mapping layer weights and biases (8 pairs of d*d and d),
    per-layer affine matrices and biases (m*d and m, L times), per-layer conv
    kernels (C*C*3*3, L times), the L noise scales, the 3*C toRGB kernel and
    3 bias values, the C*4*4 constant input, and the d-vector w_mean.

Loading is strict: a wrong magic, an unsupported version, inconsistent header
dimensions, truncation, or trailing bytes all raise FormatError carrying the
byte offset where the problem was detected.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError
from .generator import BASE_SIZE, MAPPING_LAYERS, StyleWeights

MAGIC = b"SGW1"
VERSION = 1
_HEADER = struct.Struct("<4sB4I")


def _tensor_plan(d: int, m: int, L: int, c: int):
    """Shapes in serialization order."""
    plan = []
    for i in range(MAPPING_LAYERS):
        plan.append((f"mapping.{i}.weight", (d, d)))
        plan.append((f"mapping.{i}.bias", (d,)))
    for l in range(L):
        plan.append((f"affine.{l}.matrix", (m, d)))
        plan.append((f"affine.{l}.bias", (m,)))
    for l in range(L):
        plan.append((f"conv.{l}.kernel", (c, c, 3, 3)))
    plan.append(("noise_scales", (L,)))
    plan.append(("torgb.kernel", (3, c)))
    plan.append(("torgb.bias", (3,)))
    plan.append(("constant_input", (c, BASE_SIZE, BASE_SIZE)))
    plan.append(("w_mean", (d,)))
    return plan


def save_weights(weights: StyleWeights, path) -> None:
    """Write weights to `path` in the SGW1 format (float32 storage)."""
    d = weights.latent_dim
    m = weights.style_dim
    L = weights.num_layers
    c = weights.channels
    chunks = [_HEADER.pack(MAGIC, VERSION, d, m, L, c)]
    tensors = []
    for w, b in weights.mapping:
        tensors.extend([w, b])
    for a, b in weights.affines:
        tensors.extend([a, b])
    tensors.extend(weights.conv_kernels)
    tensors.append(weights.noise_scales)
    tensors.extend([weights.torgb_kernel, weights.torgb_bias])
    tensors.append(weights.constant_input)
    tensors.append(weights.w_mean)
    for t in tensors:
        chunks.append(np.ascontiguousarray(t, dtype="<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_weights(path) -> StyleWeights:
    """Read an SGW1 file back into StyleWeights.

    Round-trips bit-for-bit with `save_weights` for float32 inputs.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FormatError(
            f"file ends inside the header ({len(data)} of {_HEADER.size} bytes)",
            offset=len(data),
        )
    magic, version, d, m, L, c = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}", offset=4)
    if d < 1 or L < 1 or c < 1:
        raise FormatError(f"invalid dimensions d={d} L={L} C={c}", offset=5)
    if m != 2 * c:
        raise FormatError(f"style dimension m={m} must equal 2*C={2 * c}", offset=9)

    offset = _HEADER.size
    arrays = {}
    for name, shape in _tensor_plan(d, m, L, c):
        count = int(np.prod(shape))
        nbytes = 4 * count
        if offset + nbytes > len(data):
            raise FormatError(
                f"file truncated inside tensor {name}: need {nbytes} bytes, "
                f"have {len(data) - offset}",
                offset=offset,
            )
        arrays[name] = np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(shape).copy()
        offset += nbytes
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after the last tensor", offset=offset)

    return StyleWeights(
        mapping=tuple(
            (arrays[f"mapping.{i}.weight"], arrays[f"mapping.{i}.bias"]) for i in range(MAPPING_LAYERS)
        ),
        affines=tuple((arrays[f"affine.{l}.matrix"], arrays[f"affine.{l}.bias"]) for l in range(L)),
        conv_kernels=tuple(arrays[f"conv.{l}.kernel"] for l in range(L)),
        noise_scales=arrays["noise_scales"],
        torgb_kernel=arrays["torgb.kernel"],
        torgb_bias=arrays["torgb.bias"],
        constant_input=arrays["constant_input"],
        w_mean=arrays["w_mean"],
    )

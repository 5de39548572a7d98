"""Width-slimmable convolutional supernet.

One shared parameter set holds every subnet: the width-w subnet uses the
first round(w * base_channels) hidden channels of each layer (first-layer
input and last-layer output stay 3 so every subnet maps RGB to RGB).
Slicing never copies parameters; training a narrow subnet updates the
shared prefix in place and leaves the complement bit-untouched.

The architecture is a plain stack of stride-1 same-padded k x k
convolutions with ReLU between layers and an optional global
input-to-output residual, so zero weights implement the identity map.
Forward and reverse passes are built on im2col + matrix multiplication.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .image import as_image, load_png
from .router import Thresholds, classify_by_threshold, dataset_thresholds, validate_widths
from .synthgen import load_manifest

_MAGIC = b"DDAW"
_FORMAT_VERSION = 1
_HEADER = "<IIIIBB"  # version, num_layers, base_channels, kernel_size, residual, sample bytes


class WeightsIOError(Exception):
    """Base class for weights (de)serialization problems."""


class WeightsFormatError(WeightsIOError):
    """Bad magic, malformed header, or payload inconsistent with the header."""


class WeightsVersionError(WeightsIOError):
    """The file's format version is not supported."""


class TruncatedWeightsError(WeightsIOError):
    """The file ends before the declared payload is complete."""


@dataclass(frozen=True)
class SupernetSpec:
    """Architecture: num_layers convolutions, ReLU between, optional global residual."""

    num_layers: int
    base_channels: int
    kernel_size: int = 3
    residual: bool = True

    def __post_init__(self):
        if self.num_layers < 2:
            raise ValueError("num_layers must be at least 2")
        if self.base_channels < 1:
            raise ValueError("base_channels must be positive")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd and positive")

    def layer_channels(self, width: float = 1.0) -> list:
        """Per-layer (c_in, c_out) at the given width; the RGB ends stay 3."""
        hidden = hidden_channels(self.base_channels, width)
        last = self.num_layers - 1
        return [
            (3 if layer == 0 else hidden, 3 if layer == last else hidden)
            for layer in range(self.num_layers)
        ]


def hidden_channels(base_channels: int, width: float) -> int:
    """Hidden channel count at a width: max(1, round(width * base_channels))."""
    if not 0.0 < width <= 1.0:
        raise ValueError(f"width {width} outside (0, 1]")
    return max(1, int(math.floor(width * base_channels + 0.5)))


@dataclass
class SupernetWeights:
    """Full-width parameters: per layer a [c_out, c_in, k, k] kernel and [c_out] bias."""

    spec: SupernetSpec
    kernels: list
    biases: list

    @property
    def dtype(self):
        return self.kernels[0].dtype


@dataclass(frozen=True)
class SubnetView:
    """Channel counts of one width slice; holds no parameters of its own."""

    width: float
    channels: tuple  # per layer (c_in, c_out)


def init_weights(spec: SupernetSpec, seed: int, dtype=np.float64) -> SupernetWeights:
    """He-uniform kernels (bound sqrt(6 / (c_in * k^2))), zero biases."""
    rng = np.random.default_rng(int(seed))
    k = spec.kernel_size
    kernels, biases = [], []
    for c_in, c_out in spec.layer_channels(1.0):
        bound = math.sqrt(6.0 / (c_in * k * k))
        kernels.append(rng.uniform(-bound, bound, size=(c_out, c_in, k, k)).astype(dtype))
        biases.append(np.zeros(c_out, dtype=dtype))
    return SupernetWeights(spec=spec, kernels=kernels, biases=biases)


def slice_weights(weights: SupernetWeights, width: float) -> SubnetView:
    """View of the width-w subnet; parameters are aliased, never copied."""
    return SubnetView(width=float(width), channels=tuple(weights.spec.layer_channels(width)))


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """[B, C, H, W] with same zero padding -> patch matrix [B, C*k*k, H*W].

    Built by k*k shifted slice copies, so column c*k*k + s holds channel c
    at kernel tap s; this matches kernel.reshape(c_out, -1) column order.
    """
    b, c, h, w = x.shape
    pad = k // 2
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((b, c, k * k, h, w), dtype=x.dtype)
    tap = 0
    for di in range(k):
        for dj in range(k):
            cols[:, :, tap] = padded[:, :, di : di + h, dj : dj + w]
            tap += 1
    return cols.reshape(b, c * k * k, h * w)


def _col2im(g_cols: np.ndarray, b: int, c: int, h: int, w: int, k: int) -> np.ndarray:
    """Adjoint of _im2col: scatter-add tap gradients back to input positions."""
    pad = k // 2
    grad = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=g_cols.dtype)
    g5 = g_cols.reshape(b, c, k * k, h, w)
    tap = 0
    for di in range(k):
        for dj in range(k):
            grad[:, :, di : di + h, dj : dj + w] += g5[:, :, tap]
            tap += 1
    return grad[:, :, pad : pad + h, pad : pad + w]


def _conv_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray):
    b, _, h, w = x.shape
    c_out = kernel.shape[0]
    cols = _im2col(x, kernel.shape[2])
    y = kernel.reshape(c_out, -1) @ cols
    y += bias[:, None]
    return y.reshape(b, c_out, h, w), cols


def _net_forward(weights: SupernetWeights, view: SubnetView, x: np.ndarray, want_cache=False):
    """Run the convolutional body on [B, 3, H, W]; optionally cache for backward."""
    last = weights.spec.num_layers - 1
    cols_cache, pre_cache = [], []
    acts = x
    for layer, (c_in, c_out) in enumerate(view.channels):
        kernel = weights.kernels[layer][:c_out, :c_in]
        bias = weights.biases[layer][:c_out]
        z, cols = _conv_forward(acts, kernel, bias)
        if want_cache:
            cols_cache.append(cols)
            pre_cache.append(z if layer < last else None)
        acts = np.maximum(z, 0.0) if layer < last else z
    return acts, cols_cache, pre_cache


def _net_backward(weights, view, cols_cache, pre_cache, g_body):
    """Gradients of a scalar loss for every sliced parameter, given dLoss/dbody."""
    k = weights.spec.kernel_size
    grads_k, grads_b = [], []
    g = g_body
    for layer in range(weights.spec.num_layers - 1, -1, -1):
        c_in, c_out = view.channels[layer]
        b, _, h, w = g.shape
        g_flat = np.ascontiguousarray(g).reshape(b, c_out, h * w)
        grads_b.append(g_flat.sum(axis=(0, 2)))
        grads_k.append(
            (g_flat @ cols_cache[layer].swapaxes(1, 2)).sum(axis=0).reshape(c_out, c_in, k, k)
        )
        if layer > 0:
            kernel = weights.kernels[layer][:c_out, :c_in]
            g_cols = kernel.reshape(c_out, -1).T @ g_flat
            g = _col2im(g_cols, b, c_in, h, w, k) * (pre_cache[layer - 1] > 0)
    grads_k.reverse()
    grads_b.reverse()
    return grads_k, grads_b


def forward(weights: SupernetWeights, view: SubnetView, patch) -> np.ndarray:
    """Subnet output for one [H, W, 3] patch; same dims, not clamped.

    With a residual spec the output is input + body(input), computed in
    float64 regardless of the parameter precision, so zero weights return
    the input bit-exactly.
    """
    arr = as_image(patch)
    x = np.ascontiguousarray(arr.transpose(2, 0, 1)[None], dtype=weights.dtype)
    body, _, _ = _net_forward(weights, view, x)
    out = body[0].transpose(1, 2, 0).astype(np.float64)
    return arr + out if weights.spec.residual else out


def loss(output, target) -> float:
    """Mean squared error over all samples."""
    a = np.asarray(output, dtype=np.float64)
    b = np.asarray(target, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def backward(weights: SupernetWeights, view: SubnetView, patch, target):
    """Loss and exact reverse-mode gradients for the sliced parameters.

    Returns (loss, [(kernel_grad, bias_grad) per layer]); gradient shapes
    match the view's sliced shapes, so parameters outside the prefix have
    no gradient entries at all.
    """
    arr = as_image(patch)
    tgt = as_image(target)
    if arr.shape != tgt.shape:
        raise ValueError(f"image dimensions differ: {arr.shape} vs {tgt.shape}")
    dtype = weights.dtype
    x = np.ascontiguousarray(arr.transpose(2, 0, 1)[None], dtype=dtype)
    t = np.ascontiguousarray(tgt.transpose(2, 0, 1)[None], dtype=dtype)
    body, cols_cache, pre_cache = _net_forward(weights, view, x, want_cache=True)
    out = x + body if weights.spec.residual else body
    diff = out - t
    loss_value = float(np.mean(diff.astype(np.float64) ** 2))
    g_body = diff * np.asarray(2.0 / diff.size, dtype=dtype)
    grads_k, grads_b = _net_backward(weights, view, cols_cache, pre_cache, g_body)
    return loss_value, list(zip(grads_k, grads_b))


@dataclass
class AdamState:
    """Adam moments, full-shaped so every width's prefix shares them."""

    step: int
    m_kernels: list
    v_kernels: list
    m_biases: list
    v_biases: list

    @classmethod
    def for_weights(cls, weights: SupernetWeights) -> "AdamState":
        return cls(
            step=0,
            m_kernels=[np.zeros_like(k) for k in weights.kernels],
            v_kernels=[np.zeros_like(k) for k in weights.kernels],
            m_biases=[np.zeros_like(b) for b in weights.biases],
            v_biases=[np.zeros_like(b) for b in weights.biases],
        )


def train_step(weights, width, batch, state: AdamState, lr: float = 1e-4) -> float:
    """One Adam step (beta1 0.9, beta2 0.999, eps 1e-8) on the width-w prefix.

    The batch is a sequence of (moire, clean) patch pairs of equal dims.
    Only parameters and moments inside the prefix are touched. Returns the
    batch mean loss (before the update).
    """
    batch = list(batch)
    if not batch:
        raise ValueError("batch must not be empty")
    view = slice_weights(weights, width)
    dtype = weights.dtype
    moires = [np.asarray(m) for m, _ in batch]
    cleans = [np.asarray(c) for _, c in batch]
    shape = moires[0].shape
    if len(shape) != 3 or shape[2] != 3:
        raise ValueError(f"expected [H, W, 3] patches, got {shape}")
    for arr in moires + cleans:
        if arr.shape != shape:
            raise ValueError("all patches in a batch must share the same dimensions")
    x = np.ascontiguousarray(np.stack(moires).transpose(0, 3, 1, 2), dtype=dtype)
    t = np.ascontiguousarray(np.stack(cleans).transpose(0, 3, 1, 2), dtype=dtype)
    body, cols_cache, pre_cache = _net_forward(weights, view, x, want_cache=True)
    out = x + body if weights.spec.residual else body
    diff = out - t
    mean_loss = float(np.mean(diff.astype(np.float64) ** 2))
    if not math.isfinite(mean_loss):
        raise FloatingPointError("training loss is not finite; lower the learning rate")
    g_body = diff * np.asarray(2.0 / diff.size, dtype=dtype)
    grads_k, grads_b = _net_backward(weights, view, cols_cache, pre_cache, g_body)

    state.step += 1
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for layer, (c_in, c_out) in enumerate(view.channels):
        updates = (
            (weights.kernels[layer], state.m_kernels[layer], state.v_kernels[layer], grads_k[layer], np.s_[:c_out, :c_in]),
            (weights.biases[layer], state.m_biases[layer], state.v_biases[layer], grads_b[layer], np.s_[:c_out]),
        )
        for full, m_full, v_full, grad, prefix in updates:
            m = m_full[prefix]
            v = v_full[prefix]
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * grad * grad
            full[prefix] -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    return mean_loss


def train_supernet(
    manifest_path,
    spec: SupernetSpec,
    widths,
    thresholds: Thresholds = None,
    epochs: int = 1,
    seed: int = 0,
    lr: float = 1e-4,
    batch_size: int = 4,
    dtype=np.float32,
    log_path=None,
):
    """Train one supernet on a generated dataset; returns (weights, history).

    Pairs are grouped once by dataset-level score thresholds (computed
    from the manifest when not supplied). Each epoch shuffles every group,
    then cycles the groups round-robin, training each batch at its group's
    width, so all widths interleave within an epoch. History entries are
    {"epoch", "width", "mean_loss"} dicts, also written to log_path as
    JSON lines when given.
    """
    ws = validate_widths(widths)
    entries = load_manifest(manifest_path)
    scores = [entry["score"] for entry in entries]
    if thresholds is None:
        thresholds = dataset_thresholds(scores, len(ws))
    if thresholds.num_groups != len(ws):
        raise ValueError(
            f"thresholds define {thresholds.num_groups} groups but {len(ws)} widths given"
        )
    groups = [[] for _ in ws]
    for index, score in enumerate(scores):
        groups[classify_by_threshold(score, thresholds)].append(index)
    for g, members in enumerate(groups):
        if not members:
            warnings.warn(f"group {g} (width {ws[g]}) has no training pairs; skipping it")

    pairs = [
        (
            load_png(entry["moire_path"]).astype(dtype),
            load_png(entry["clean_path"]).astype(dtype),
        )
        for entry in entries
    ]
    weights = init_weights(spec, seed, dtype=dtype)
    state = AdamState.for_weights(weights)
    rng = np.random.default_rng([int(seed), 1])
    history = []
    for epoch in range(int(epochs)):
        queues = []
        for members in groups:
            order = [members[j] for j in rng.permutation(len(members))]
            queues.append([order[i : i + batch_size] for i in range(0, len(order), batch_size)])
        totals = [0.0] * len(ws)
        counts = [0] * len(ws)
        cursors = [0] * len(ws)
        remaining = sum(len(q) for q in queues)
        g = 0
        while remaining:
            if cursors[g] < len(queues[g]):
                batch_indices = queues[g][cursors[g]]
                cursors[g] += 1
                remaining -= 1
                batch = [pairs[i] for i in batch_indices]
                totals[g] += train_step(weights, ws[g], batch, state, lr) * len(batch)
                counts[g] += len(batch)
            g = (g + 1) % len(ws)
        for g, w in enumerate(ws):
            if counts[g]:
                history.append({"epoch": epoch, "width": w, "mean_loss": totals[g] / counts[g]})
    if log_path is not None:
        with open(log_path, "w") as fh:
            for record in history:
                fh.write(json.dumps(record) + "\n")
    return weights, history


def conv_flops(c_in: int, c_out: int, kernel_size: int, h: int, w: int) -> int:
    """FLOPs of one same-padded convolution: 2 h w c_in c_out k^2 multiply-adds plus bias adds."""
    return 2 * h * w * c_in * c_out * kernel_size * kernel_size + h * w * c_out


def flops(spec: SupernetSpec, width: float, h: int, w: int) -> int:
    """Exact FLOP count of one width-w forward pass on an h x w patch."""
    total = 0
    for c_in, c_out in spec.layer_channels(width):
        total += conv_flops(c_in, c_out, spec.kernel_size, h, w)
    if spec.residual:
        total += h * w * 3
    return total


def save_weights(weights: SupernetWeights, path) -> None:
    """Write the binary weights file (magic "DDAW", header, little-endian tensors)."""
    spec = weights.spec
    sample_bytes = {np.dtype(np.float32): 4, np.dtype(np.float64): 8}[np.dtype(weights.dtype)]
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(
            struct.pack(
                _HEADER,
                _FORMAT_VERSION,
                spec.num_layers,
                spec.base_channels,
                spec.kernel_size,
                int(spec.residual),
                sample_bytes,
            )
        )
        for kernel, bias in zip(weights.kernels, weights.biases):
            fh.write(np.ascontiguousarray(kernel, dtype=f"<f{sample_bytes}").tobytes())
            fh.write(np.ascontiguousarray(bias, dtype=f"<f{sample_bytes}").tobytes())


def load_weights(path) -> SupernetWeights:
    """Bit-exact inverse of save_weights, with distinct errors per failure mode."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        if len(blob) < 4 and _MAGIC.startswith(blob):
            raise TruncatedWeightsError(f"file ends inside the magic bytes: {path}")
        raise WeightsFormatError(f"bad magic bytes (not a DDAW weights file): {path}")
    header_size = 4 + struct.calcsize(_HEADER)
    if len(blob) < header_size:
        raise TruncatedWeightsError(f"file ends inside the header: {path}")
    version, num_layers, base_channels, kernel_size, residual, sample_bytes = struct.unpack_from(
        _HEADER, blob, 4
    )
    if version != _FORMAT_VERSION:
        raise WeightsVersionError(
            f"weights format version {version} not supported (expected {_FORMAT_VERSION}): {path}"
        )
    if sample_bytes not in (4, 8):
        raise WeightsFormatError(f"unknown sample width {sample_bytes} bytes: {path}")
    try:
        spec = SupernetSpec(num_layers, base_channels, kernel_size, bool(residual))
    except ValueError as exc:
        raise WeightsFormatError(f"invalid architecture header ({exc}): {path}") from exc
    dtype = np.dtype(f"<f{sample_bytes}")
    kernels, biases = [], []
    offset = header_size
    for c_in, c_out in spec.layer_channels(1.0):
        for shape, store in (
            ((c_out, c_in, kernel_size, kernel_size), kernels),
            ((c_out,), biases),
        ):
            nbytes = int(np.prod(shape)) * sample_bytes
            chunk = blob[offset : offset + nbytes]
            if len(chunk) < nbytes:
                raise TruncatedWeightsError(
                    f"payload ends {nbytes - len(chunk)} bytes short of tensor {shape}: {path}"
                )
            store.append(np.frombuffer(chunk, dtype=dtype).reshape(shape).copy())
            offset += nbytes
    if offset != len(blob):
        raise WeightsFormatError(f"{len(blob) - offset} trailing bytes after payload: {path}")
    return SupernetWeights(spec=spec, kernels=kernels, biases=biases)

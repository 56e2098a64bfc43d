"""MLP networks partitioned into trainable blocks with auxiliary heads.

A network is L relu layers plus one linear head per block. Blocks are
layer ranges derived from the training scheme; the final block's head is
the global classifier and the others are auxiliary classifiers providing
each block's local loss. Gradients never cross a block boundary: a
block's local backward stops at its input activations.

Parameter naming is positional (``layer3.W``, ``head3.b``), so the same
seed initializes shared layers and heads identically across schemes.
That is what makes the bit-level scheme-equivalence checks meaningful.
"""

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import tensor
from .tensor import Rng, ShapeError


@dataclass(frozen=True)
class Scheme:
    """Training scheme: backprop, greedy, overlapping, chunked(J), last_k(K)."""
    kind: str
    param: int | None = None

    _KINDS = ("backprop", "greedy", "overlapping", "chunked", "last_k")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown scheme {self.kind!r}")
        if self.kind in ("chunked", "last_k") and (self.param is None or self.param < 1):
            raise ValueError(f"{self.kind} needs a positive parameter")

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        if ":" in text:
            kind, param = text.split(":", 1)
            return cls(kind, int(param))
        return cls(text)

    def __str__(self) -> str:
        return self.kind if self.param is None else f"{self.kind}:{self.param}"


@dataclass(frozen=True)
class BlockSpec:
    lo: int              # layer range [lo, hi)
    hi: int
    head_layer: int | None   # layer whose output feeds this block's head
    trainable: bool = True

    @property
    def head_w(self) -> str:
        return f"head{self.head_layer}.W"

    @property
    def head_b(self) -> str:
        return f"head{self.head_layer}.b"


def make_blocks(depth: int, scheme: Scheme) -> list[BlockSpec]:
    L = depth
    if scheme.kind == "backprop":
        return [BlockSpec(0, L, L - 1)]
    if scheme.kind == "greedy":
        return [BlockSpec(i, i + 1, i) for i in range(L)]
    if scheme.kind == "overlapping":
        return [BlockSpec(max(0, i - 1), i + 1, i) for i in range(L)]
    if scheme.kind == "chunked":
        J = scheme.param
        if J > L:
            raise ValueError(f"chunked({J}) exceeds depth {L}")
        base, extra = divmod(L, J)
        blocks, lo = [], 0
        for j in range(J):
            hi = lo + base + (1 if j < extra else 0)  # earlier blocks take the extra layer
            blocks.append(BlockSpec(lo, hi, hi - 1))
            lo = hi
        return blocks
    if scheme.kind == "last_k":
        K = scheme.param
        if K > L:
            raise ValueError(f"last_k({K}) exceeds depth {L}")
        blocks = []
        if K < L:
            blocks.append(BlockSpec(0, L - K, None, trainable=False))
        blocks.append(BlockSpec(L - K, L, L - 1))
        return blocks
    raise AssertionError(scheme.kind)


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden: int
    depth: int
    classes: int
    scheme: Scheme
    blocks: list[BlockSpec] = field(default=None)

    def __post_init__(self):
        if self.blocks is None:
            object.__setattr__(self, "blocks", make_blocks(self.depth, self.scheme))

    def layer_dims(self, i: int) -> tuple[int, int]:
        return (self.input_dim if i == 0 else self.hidden, self.hidden)

    @property
    def final_block(self) -> BlockSpec:
        return self.blocks[-1]


def _param_rng(rng: Rng, name: str) -> Rng:
    # one independent stream per parameter, stable under scheme changes
    return rng.split(zlib.crc32(name.encode()))


def init_params(spec: NetworkSpec, rng: Rng) -> dict[str, np.ndarray]:
    params: dict[str, np.ndarray] = {}
    for i in range(spec.depth):
        d_in, d_out = spec.layer_dims(i)
        name = f"layer{i}.W"
        params[name] = tensor.gaussian_init(_param_rng(rng, name), d_in, (d_in, d_out))
        params[f"layer{i}.b"] = np.zeros(d_out, dtype=tensor.dtype())
    for block in spec.blocks:
        if block.head_layer is None:
            continue
        name = block.head_w
        if name in params:
            continue
        params[name] = tensor.gaussian_init(_param_rng(rng, name), spec.hidden,
                                            (spec.hidden, spec.classes))
        params[block.head_b] = np.zeros(spec.classes, dtype=tensor.dtype())
    return params


def _layer_forward(params, i, x):
    pre = tensor.add_bias(tensor.matmul(x, params[f"layer{i}.W"]), params[f"layer{i}.b"])
    return pre, tensor.relu_forward(pre)


def forward_all(spec: NetworkSpec, params, x):
    """Activations a[0..L] plus per-layer (input, preactivation) caches."""
    acts = [x]
    caches = []
    h = x
    for i in range(spec.depth):
        pre, out = _layer_forward(params, i, h)
        caches.append((h, pre))
        acts.append(out)
        h = out
    return acts, caches


def block_forward(spec: NetworkSpec, block: BlockSpec, params, x):
    if x.shape[1] != spec.layer_dims(block.lo)[0]:
        raise ShapeError(f"block input width {x.shape[1]} does not match layer {block.lo}")
    caches = []
    h = x
    for i in range(block.lo, block.hi):
        pre, h_next = _layer_forward(params, i, h)
        caches.append((h, pre))
        h = h_next
    return h, caches


def block_local_backward(spec: NetworkSpec, block: BlockSpec, params, caches, labels):
    """Local loss and gradients for one block; blocks the input gradient.

    ``caches`` must come from a matching forward over layers [lo, hi).
    Gradients cover the block's layers and its head only.
    """
    if not block.trainable:
        raise ValueError("frozen block has no local backward")
    if len(caches) != block.hi - block.lo:
        raise ValueError("cache does not match block layer range")
    _, last_pre = caches[-1]
    out = tensor.relu_forward(last_pre)
    logits = tensor.add_bias(tensor.matmul(out, params[block.head_w]), params[block.head_b])
    loss, g_logits = tensor.softmax_xent(logits, labels)
    grads = {
        block.head_w: tensor.matmul(out.T, g_logits),
        block.head_b: g_logits.sum(axis=0),
    }
    g = tensor.matmul(g_logits, params[block.head_w].T)
    for i in range(block.hi - 1, block.lo - 1, -1):
        x_in, pre = caches[i - block.lo]
        g = tensor.relu_backward(pre, g)
        grads[f"layer{i}.W"] = tensor.matmul(x_in.T, g)
        grads[f"layer{i}.b"] = g.sum(axis=0)
        if i > block.lo:
            g = tensor.matmul(g, params[f"layer{i}.W"].T)
    # input gradient intentionally discarded: gradient blocking
    return loss, grads


def full_backprop(spec: NetworkSpec, params, x, labels):
    """Global loss and gradients through every layer plus the final head."""
    whole = BlockSpec(0, spec.depth, spec.depth - 1)
    _, caches = block_forward(spec, whole, params, x)
    return block_local_backward(spec, whole, params, caches, labels)


def merge_overlap_grads(grads_a: dict, grads_b: dict, shared_layer: int) -> dict:
    """Average the shared layer's gradients; pass everything else through."""
    merged = dict(grads_a)
    for suffix in ("W", "b"):
        key = f"layer{shared_layer}.{suffix}"
        if key not in grads_a or key not in grads_b:
            raise KeyError(f"shared parameter {key} missing from a gradient set")
        merged[key] = 0.5 * (grads_a[key] + grads_b[key])
    for key, val in grads_b.items():
        if key not in merged:
            merged[key] = val
    return merged


def local_step_grads(spec: NetworkSpec, params, x, labels):
    """Per-block local losses and the combined per-parameter gradient map.

    Runs one canonical forward, then each trainable block's local
    backward on the cached activations. Overlapping schemes average the
    shared layers' gradients into one canonical update.
    """
    _, caches = forward_all(spec, params, x)
    block_losses = {}
    block_grads = []
    for j, block in enumerate(spec.blocks):
        if not block.trainable:
            block_grads.append({})
            continue
        loss, grads = block_local_backward(spec, block, params,
                                           caches[block.lo:block.hi], labels)
        block_losses[j] = loss
        block_grads.append(grads)
    if spec.scheme.kind == "overlapping":
        combined = dict(block_grads[0])
        for j in range(1, len(spec.blocks)):
            shared = spec.blocks[j].lo  # last layer of block j-1, first of block j
            combined = merge_overlap_grads(combined, block_grads[j], shared)
    else:
        combined = {}
        for grads in block_grads:
            combined.update(grads)
    return block_losses, combined


def predict_logits(spec: NetworkSpec, params, x) -> np.ndarray:
    acts, _ = forward_all(spec, params, x)
    final = spec.final_block
    return tensor.add_bias(tensor.matmul(acts[-1], params[final.head_w]),
                           params[final.head_b])


def evaluate(spec: NetworkSpec, params, inputs, labels, batch: int = 1024):
    """Global loss and accuracy of the final head over a dataset."""
    total_loss = 0.0
    correct = 0
    n = inputs.shape[0]
    for lo in range(0, n, batch):
        xb, yb = inputs[lo:lo + batch], labels[lo:lo + batch]
        logits = predict_logits(spec, params, xb)
        loss, _ = tensor.softmax_xent(logits, yb)
        total_loss += loss * xb.shape[0]
        correct += int((logits.argmax(axis=1) == yb).sum())
    return total_loss / n, correct / n


# --- checkpoints: JSON index header + raw little-endian payload ---

_CKPT_MAGIC = b"LPCKPT01"


def save_checkpoint(path, params: dict[str, np.ndarray]) -> None:
    index = []
    offset = 0
    payloads = []
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name])
        blob = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        index.append({"name": name, "shape": list(arr.shape),
                      "dtype": arr.dtype.str.replace(">", "<"),
                      "offset": offset, "nbytes": len(blob)})
        payloads.append(blob)
        offset += len(blob)
    header = json.dumps({"tensors": index}).encode()
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for blob in payloads:
            f.write(blob)


def load_checkpoint(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != _CKPT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (header_len,) = struct.unpack("<Q", f.read(8))
        index = json.loads(f.read(header_len))["tensors"]
        payload = f.read()
    params = {}
    for entry in index:
        blob = payload[entry["offset"]:entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(blob, dtype=np.dtype(entry["dtype"]))
        params[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return params

"""Encoder-decoder corrector with hand-rolled reverse-mode gradients.

The graph is a small UNet-style network: `depth` levels of (3x3 conv,
relu, 2x2 max-pool), a bottleneck conv, then mirrored levels of (2x
nearest-neighbor upsample, 3x3 conv, relu, skip concatenation, 3x3 conv,
relu), and a final linear 3x3 conv to one channel. Channel counts double
per level from `base_channels`. The "u+o" variant concatenates the raw
input onto the last decoder features just before the final conv, giving
the output layer a direct copy path.

Training is two-stage: stage 1 optimizes the L1 objective alone, stage 2
resumes from stage 1's best-validation weights with the TV term switched
on. Adam with per-epoch learning-rate decay (lr0 * decay**epoch, epoch
counted globally across stages) and per-stage early stopping.

Everything runs in float64 and is bit-reproducible for a fixed seed.
"""

import hashlib
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .backend import kernels
from .core import as_image
from .errors import ConfigError, DimensionError, FormatError, ParameterError
from .loss import LossConfig, hybrid_loss, l1_loss, tv_loss

_CKPT_MAGIC = b"MCP1"
_VARIANTS = ("u", "u+o")


@dataclass(frozen=True)
class NetSpec:
    depth: int = 3
    base_channels: int = 8
    variant: str = "u"

    def __post_init__(self):
        if self.depth < 1 or self.base_channels < 1:
            raise ParameterError(f"bad network geometry {self}")
        if self.variant not in _VARIANTS:
            raise ParameterError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")

    def layer_plan(self):
        """(name, out_channels, in_channels) for every conv, in order."""
        ch = [self.base_channels * 2**d for d in range(self.depth)]
        plan = []
        prev = 1
        for d in range(self.depth):
            plan.append((f"enc{d}", ch[d], prev))
            prev = ch[d]
        bott = self.base_channels * 2**self.depth
        plan.append(("bottleneck", bott, prev))
        prev = bott
        for d in reversed(range(self.depth)):
            plan.append((f"up{d}", ch[d], prev))
            plan.append((f"dec{d}", ch[d], 2 * ch[d]))
            prev = ch[d]
        plan.append(("out", 1, prev + (1 if self.variant == "u+o" else 0)))
        return plan


@dataclass
class NetParams:
    spec: NetSpec
    kernels: list  # (cout, cin, 3, 3) float64 per conv
    biases: list  # (cout,) float64 per conv

    def copy(self):
        return NetParams(self.spec, [k.copy() for k in self.kernels],
                         [b.copy() for b in self.biases])


def init_params(spec, seed=0):
    """Fan-in-scaled uniform kernels, zero biases."""
    rng = np.random.default_rng(seed)
    ks, bs = [], []
    for _, cout, cin in spec.layer_plan():
        bound = np.sqrt(6.0 / (cin * 9))
        ks.append(rng.uniform(-bound, bound, size=(cout, cin, 3, 3)))
        bs.append(np.zeros(cout))
    return NetParams(spec, ks, bs)


def _check_input(spec, img):
    img = as_image(img)
    h, w = img.shape
    div = 2**spec.depth
    if h % div or w % div:
        raise DimensionError(
            f"input {h}x{w} not divisible by 2^depth = {div}"
        )
    return img


def _maxpool(x):
    c, h, w = x.shape
    r = x.reshape(c, h // 2, 2, w // 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h // 2, w // 2, 4)
    idx = r.argmax(axis=3)
    out = np.take_along_axis(r, idx[..., None], axis=3)[..., 0]
    return out, idx


def _maxpool_backward(g, idx, shape):
    c, h, w = shape
    r = np.zeros((c, h // 2, w // 2, 4))
    np.put_along_axis(r, idx[..., None], g[..., None], axis=3)
    return r.reshape(c, h // 2, w // 2, 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h, w)


def _upsample(x):
    return x.repeat(2, axis=1).repeat(2, axis=2)


def _upsample_backward(g):
    c, h, w = g.shape
    return g.reshape(c, h // 2, 2, w // 2, 2).sum(axis=(2, 4))


def _forward_pass(params, img, keep=False):
    spec = params.spec
    K, B = params.kernels, params.biases
    li = 0
    mem = []
    x = img[np.newaxis]
    raw = x
    skips = []
    pool_idx = []
    conv_cache = []  # (layer index, conv input, pre-activation or None)

    def conv_relu(xin):
        nonlocal li
        pre = kernels.conv2d_forward(xin, K[li], B[li])
        if keep:
            conv_cache.append((li, xin, pre))
        li += 1
        return np.maximum(pre, 0.0)

    for d in range(spec.depth):
        x = conv_relu(x)
        skips.append(x)
        x, idx = _maxpool(x)
        if keep:
            pool_idx.append(idx)
    x = conv_relu(x)
    for d in reversed(range(spec.depth)):
        x = conv_relu(_upsample(x))
        x = np.concatenate([x, skips[d]], axis=0)
        x = conv_relu(x)
    if spec.variant == "u+o":
        x = np.concatenate([x, raw], axis=0)
    pre = kernels.conv2d_forward(x, K[li], B[li])
    if keep:
        conv_cache.append((li, x, None))
    out = pre[0]
    if not keep:
        return out, None
    return out, (conv_cache, pool_idx, skips)


def forward(params, img):
    """Run the network; output shape equals input shape."""
    img = _check_input(params.spec, img)
    out, _ = _forward_pass(params, img)
    return out


def backward(params, img, ref, loss_config):
    """Loss value and parameter gradients of hybrid_loss(forward(img), ref)."""
    _, loss_value, grads = _backward_full(params, img, ref, loss_config)
    return loss_value, grads


def _backward_full(params, img, ref, loss_config):
    spec = params.spec
    img = _check_input(spec, img)
    ref = as_image(ref)
    out, (conv_cache, pool_idx, skips) = _forward_pass(params, img, keep=True)
    loss_value, dout = hybrid_loss(out, ref, loss_config)

    K = params.kernels
    gk = [None] * len(K)
    gb = [None] * len(K)
    cache = list(conv_cache)

    def conv_backward(g, with_relu=True):
        li, xin, pre = cache.pop()
        if with_relu:
            g = g * (pre > 0)
        gk[li], gb[li] = kernels.conv2d_backward_params(g, xin)
        return kernels.conv2d_backward_input(g, K[li])

    g = conv_backward(dout[np.newaxis], with_relu=False)
    if spec.variant == "u+o":
        g = g[:-1]  # gradient w.r.t. the raw input channel is not a parameter
    skip_grads = [None] * spec.depth
    for d in range(spec.depth):
        g = conv_backward(g)  # dec{d}
        ch = skips[d].shape[0]
        skip_grads[d] = g[ch:]
        g = conv_backward(g[:ch])  # up{d}
        g = _upsample_backward(g)
    g = conv_backward(g)  # bottleneck
    for d in reversed(range(spec.depth)):
        g = _maxpool_backward(g, pool_idx[d], skips[d].shape)
        g = g + skip_grads[d]
        g = conv_backward(g)  # enc{d}
    grads = NetParams(spec, gk, gb)
    return out, loss_value, grads


@dataclass
class AdamState:
    mk: list
    vk: list
    mb: list
    vb: list
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls(
            mk=[np.zeros_like(k) for k in params.kernels],
            vk=[np.zeros_like(k) for k in params.kernels],
            mb=[np.zeros_like(b) for b in params.biases],
            vb=[np.zeros_like(b) for b in params.biases],
        )


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update; pure (returns fresh params and state)."""
    if len(grads.kernels) != len(params.kernels):
        raise DimensionError("gradient/parameter tensor counts differ")
    t = state.t + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    new_k, new_b = [], []
    new_state = AdamState(mk=[], vk=[], mb=[], vb=[], t=t)

    def update(p, g, m, v, out_p, out_m, out_v):
        if g.shape != p.shape:
            raise DimensionError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        out_p.append(p - lr * (m / c1) / (np.sqrt(v / c2) + eps))
        out_m.append(m)
        out_v.append(v)

    for p, g, m, v in zip(params.kernels, grads.kernels, state.mk, state.vk):
        update(p, g, m, v, new_k, new_state.mk, new_state.vk)
    for p, g, m, v in zip(params.biases, grads.biases, state.mb, state.vb):
        update(p, g, m, v, new_b, new_state.mb, new_state.vb)
    return NetParams(params.spec, new_k, new_b), new_state


@dataclass(frozen=True)
class TrainConfig:
    stage1_epochs: int = 60
    stage2_epochs: int = 60
    batch_size: int = 8
    lr0: float = 1e-4
    decay: float = 0.96
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if (self.stage1_epochs < 0 or self.stage2_epochs < 0 or self.batch_size < 1
                or self.lr0 <= 0 or self.decay <= 0 or self.patience < 1):
            raise ConfigError(f"bad training configuration {self}")


@dataclass
class EpochRecord:
    stage: str
    epoch: int  # global index across stages
    lr: float
    train_loss: float
    train_l1: float
    train_tv: float
    val_loss: float


@dataclass
class StageRecord:
    stage: str
    alpha: float
    beta: float
    epochs_run: int
    stopped_early: bool
    start_digest: str
    best_digest: str


@dataclass
class TrainHistory:
    epochs: list = field(default_factory=list)
    stages: list = field(default_factory=list)


def params_digest(params):
    """Stable hex digest of the full parameter state."""
    h = hashlib.sha256()
    h.update(_pack_header(params.spec))
    for k, b in zip(params.kernels, params.biases):
        h.update(np.ascontiguousarray(k, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return h.hexdigest()


def _batch_gradients(params, batch, cfg):
    """Mean-over-batch loss pieces and gradients (ordered summation)."""
    total = None
    loss_sum = l1_sum = tv_sum = 0.0
    for bad, clean in batch:
        out, loss_value, grads = _backward_full(params, bad, clean, cfg)
        loss_sum += loss_value
        l1_sum += l1_loss(out, clean)[0]
        tv_sum += tv_loss(out)[0]
        if total is None:
            total = grads
        else:
            for a, g in zip(total.kernels, grads.kernels):
                a += g
            for a, g in zip(total.biases, grads.biases):
                a += g
    n = len(batch)
    for a in total.kernels:
        a /= n
    for a in total.biases:
        a /= n
    return loss_sum / n, l1_sum / n, tv_sum / n, total


def _mean_loss(params, pairs, cfg):
    acc = 0.0
    for bad, clean in pairs:
        out = forward(params, bad)
        acc += hybrid_loss(out, clean, cfg)[0]
    return acc / len(pairs)


def train_two_stage(train_pairs, val_pairs, spec, tcfg):
    """Two-stage training; returns (best NetParams, TrainHistory).

    Stage 1 runs the pure-L1 objective, stage 2 continues from stage 1's
    best-validation checkpoint with the TV term enabled. Either stage may
    have zero epochs, which reduces the run to the corresponding
    single-stage baseline.
    """
    stages = [
        ("stage1", LossConfig(1.0, 0.0), tcfg.stage1_epochs),
        ("stage2", LossConfig(1.0, 1.0), tcfg.stage2_epochs),
    ]
    return train_schedule(train_pairs, val_pairs, spec, tcfg, stages)


def train_schedule(train_pairs, val_pairs, spec, tcfg, stages):
    """Run a list of (tag, LossConfig, epochs) stages sequentially."""
    if not train_pairs or not val_pairs:
        raise ConfigError("training requires non-empty train and validation splits")
    rng = np.random.default_rng(tcfg.seed)
    params = init_params(spec, rng)
    history = TrainHistory()
    global_epoch = 0
    n = len(train_pairs)
    for tag, cfg, n_epochs in stages:
        start_digest = params_digest(params)
        state = AdamState.zeros_like(params)
        best = params
        best_val = np.inf
        bad_epochs = 0
        stopped = False
        epochs_run = 0
        for _ in range(n_epochs):
            lr = tcfg.lr0 * tcfg.decay**global_epoch
            perm = rng.permutation(n)
            loss_acc = l1_acc = tv_acc = 0.0
            for lo in range(0, n, tcfg.batch_size):
                batch = [train_pairs[i] for i in perm[lo:lo + tcfg.batch_size]]
                bl, b1, btv, grads = _batch_gradients(params, batch, cfg)
                loss_acc += bl * len(batch)
                l1_acc += b1 * len(batch)
                tv_acc += btv * len(batch)
                params, state = adam_step(params, grads, state, lr,
                                          tcfg.beta1, tcfg.beta2, tcfg.eps)
            train_loss, train_l1, train_tv = loss_acc / n, l1_acc / n, tv_acc / n
            val_loss = _mean_loss(params, val_pairs, cfg)
            history.epochs.append(EpochRecord(tag, global_epoch, lr, train_loss,
                                              train_l1, train_tv, val_loss))
            global_epoch += 1
            epochs_run += 1
            if val_loss < best_val:
                best_val = val_loss
                best = params.copy()
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs >= tcfg.patience:
                    stopped = True
                    break
        params = best
        history.stages.append(StageRecord(tag, cfg.alpha, cfg.beta, epochs_run,
                                          stopped, start_digest, params_digest(params)))
    return params, history


def predict_batch(params, images):
    """Forward a batch in order; returns (outputs, mean seconds per image)."""
    outs = []
    t0 = time.perf_counter()
    for img in images:
        outs.append(forward(params, img))
    elapsed = time.perf_counter() - t0
    return outs, elapsed / max(1, len(images))


def save_history(path, history):
    """Write per-epoch records as CSV; stage summaries become '#' comments."""
    with open(path, "w", newline="") as f:
        for s in history.stages:
            f.write(f"# stage {s.stage} alpha {s.alpha!r} beta {s.beta!r} "
                    f"epochs {s.epochs_run} stopped_early {s.stopped_early} "
                    f"start {s.start_digest} best {s.best_digest}\n")
        f.write("stage,epoch,lr,train_loss,train_l1,train_tv,val_loss\n")
        for e in history.epochs:
            f.write(f"{e.stage},{e.epoch},{e.lr!r},{e.train_loss!r},"
                    f"{e.train_l1!r},{e.train_tv!r},{e.val_loss!r}\n")


def save_checkpoint(path, params):
    """Write parameters in the native MCP1 format (bit-exact round-trip)."""
    with open(path, "wb") as f:
        f.write(_pack_header(params.spec))
        tensors = []
        for k, b in zip(params.kernels, params.biases):
            tensors.extend([k, b])
        f.write(struct.pack("<I", len(tensors)))
        for t in tensors:
            f.write(struct.pack("<B", t.ndim))
            for dim in t.shape:
                f.write(struct.pack("<I", dim))
            f.write(np.ascontiguousarray(t, dtype="<f8").tobytes())


def _pack_header(spec):
    return _CKPT_MAGIC + struct.pack(
        "<IIB", spec.depth, spec.base_channels, _VARIANTS.index(spec.variant)
    )


def load_checkpoint(path):
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != _CKPT_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}", offset=0)
    depth, base, var = struct.unpack_from("<IIB", raw, 4)
    if var >= len(_VARIANTS):
        raise FormatError(f"{path}: unknown variant code {var}", offset=12)
    spec = NetSpec(depth=depth, base_channels=base, variant=_VARIANTS[var])
    pos = 13
    (count,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    tensors = []
    for _ in range(count):
        if pos >= len(raw):
            raise FormatError(f"{path}: truncated tensor table", offset=pos)
        (ndim,) = struct.unpack_from("<B", raw, pos)
        pos += 1
        dims = struct.unpack_from(f"<{ndim}I", raw, pos)
        pos += 4 * ndim
        size = int(np.prod(dims)) if dims else 1
        end = pos + 8 * size
        if end > len(raw):
            raise FormatError(f"{path}: truncated tensor payload", offset=pos)
        tensors.append(np.frombuffer(raw, dtype="<f8", count=size, offset=pos)
                       .reshape(dims).copy())
        pos = end
    plan = spec.layer_plan()
    if count != 2 * len(plan):
        raise FormatError(f"{path}: {count} tensors for a {len(plan)}-conv network")
    params = NetParams(spec, tensors[0::2], tensors[1::2])
    for (name, cout, cin), k, b in zip(plan, params.kernels, params.biases):
        if k.shape != (cout, cin, 3, 3) or b.shape != (cout,):
            raise FormatError(f"{path}: tensor shapes for {name} do not match the header")
    return params

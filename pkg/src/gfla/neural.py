"""From-scratch recurrent actor-critic network and its training machinery.

Architecture: a GRU layer (32 units) feeding two 32-wide fully connected
layers, with a categorical actor head over the flat action space and a scalar
critic head sharing the trunk. Gates use sigmoid, the candidate state tanh;
the fully connected activations default to rectifiers and can be switched to
tanh.

Many independent parameter sets are stacked into one bundle along a leading
ensemble axis g, so a population of per-device learners advances through a
TTI (or a training minibatch) with a single batched einsum per layer. Batch
axis b indexes parallel observation streams within one parameter set.

Training arithmetic is 64-bit throughout; the 16-bit float path exists only
for the serialized weight broadcast and its overhead accounting.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

HIDDEN = 32

# Serialization order of the parameter tensors (gates z, r, candidate; the
# two fully connected layers; actor head; critic head).
PARAM_ORDER = ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh",
               "w1", "b1", "w2", "b2", "wa", "ba", "wc", "bc")

_MAGIC = b"GFRL"
_VERSION = 1
_HEADER = struct.Struct("<4sHHHH4x")  # magic, version, input_dim, n_actions, hidden


class NumericalError(RuntimeError):
    """Non-finite values surfaced during a forward/backward pass."""


class DecodeError(ValueError):
    """Corrupt or mismatched serialized weight stream."""


@dataclass(frozen=True)
class NetworkDims:
    input_dim: int
    n_actions: int
    hidden: int = HIDDEN
    fc_activation: str = "relu"  # or "tanh"

    def __post_init__(self) -> None:
        if self.fc_activation not in ("relu", "tanh"):
            raise ValueError(f"unknown activation {self.fc_activation!r}")


def _shapes(dims: NetworkDims) -> dict:
    h, d, k = dims.hidden, dims.input_dim, dims.n_actions
    return {
        "wz": (h, d), "uz": (h, h), "bz": (h,),
        "wr": (h, d), "ur": (h, h), "br": (h,),
        "wh": (h, d), "uh": (h, h), "bh": (h,),
        "w1": (h, h), "b1": (h,),
        "w2": (h, h), "b2": (h,),
        "wa": (k, h), "ba": (k,),
        "wc": (1, h), "bc": (1,),
    }


class WeightBundle:
    """n_sets stacked parameter sets of the trunk-plus-heads network."""

    def __init__(self, dims: NetworkDims, n_sets: int, params: dict):
        self.dims = dims
        self.n_sets = n_sets
        self.params = params

    @classmethod
    def zeros(cls, dims: NetworkDims, n_sets: int = 1) -> "WeightBundle":
        params = {name: np.zeros((n_sets,) + shape)
                  for name, shape in _shapes(dims).items()}
        return cls(dims, n_sets, params)

    @classmethod
    def init_random(cls, dims: NetworkDims, n_sets: int,
                    rng: np.random.Generator) -> "WeightBundle":
        """Weights uniform on +-sqrt(1/fan_in); biases zero."""
        bundle = cls.zeros(dims, n_sets)
        for name, shape in _shapes(dims).items():
            if name.startswith("b"):
                continue
            fan_in = shape[1]
            s = 1.0 / np.sqrt(fan_in)
            bundle.params[name] = rng.uniform(-s, s, size=(n_sets,) + shape)
        return bundle

    def copy(self) -> "WeightBundle":
        return WeightBundle(self.dims, self.n_sets,
                            {k: v.copy() for k, v in self.params.items()})

    def load(self, other: "WeightBundle") -> None:
        for name in PARAM_ORDER:
            self.params[name][...] = other.params[name]

    def param_count(self) -> int:
        """Trainable scalars in one parameter set."""
        return sum(int(np.prod(v.shape[1:])) for v in self.params.values())

    def select(self, index: int) -> "WeightBundle":
        """A one-set copy of parameter set `index`."""
        return WeightBundle(self.dims, 1,
                            {k: v[index:index + 1].copy() for k, v in self.params.items()})


def zero_gradients(bundle: WeightBundle) -> dict:
    return {k: np.zeros_like(v) for k, v in bundle.params.items()}


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # exp overflow saturates to the correct limit (0); suppress the warning.
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def _fc_act(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(x, 0.0)
    return np.tanh(x)


def _fc_act_deriv(post: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (post > 0.0).astype(float)
    return 1.0 - post * post


def _step(p: dict, act: str, x: np.ndarray, h: np.ndarray):
    """One recurrent step. x: (G,B,D), h: (G,B,H). Returns outputs plus the
    intermediates needed for the backward pass."""
    xt = x @ p["wz"].swapaxes(1, 2)
    z = _sigmoid(xt + h @ p["uz"].swapaxes(1, 2) + p["bz"][:, None, :])
    r = _sigmoid(x @ p["wr"].swapaxes(1, 2) + h @ p["ur"].swapaxes(1, 2)
                 + p["br"][:, None, :])
    rh = r * h
    c = np.tanh(x @ p["wh"].swapaxes(1, 2) + rh @ p["uh"].swapaxes(1, 2)
                + p["bh"][:, None, :])
    h_out = z * h + (1.0 - z) * c
    f1 = _fc_act(h_out @ p["w1"].swapaxes(1, 2) + p["b1"][:, None, :], act)
    f2 = _fc_act(f1 @ p["w2"].swapaxes(1, 2) + p["b2"][:, None, :], act)
    logits = f2 @ p["wa"].swapaxes(1, 2) + p["ba"][:, None, :]
    value = (f2 @ p["wc"].swapaxes(1, 2) + p["bc"][:, None, :])[..., 0]
    return logits, value, h_out, (x, h, z, r, rh, c, h_out, f1, f2)


def forward(bundle: WeightBundle, hidden: np.ndarray, obs: np.ndarray):
    """Single-step policy/value evaluation.

    hidden: (G, B, H), obs: (G, B, D). Returns (logits (G,B,K), value (G,B),
    next hidden (G,B,H)). Deterministic given its inputs.
    """
    logits, value, h_out, _ = _step(bundle.params, bundle.dims.fc_activation,
                                    obs, hidden)
    if not (np.all(np.isfinite(logits)) and np.all(np.isfinite(value))):
        raise NumericalError("non-finite network output "
                             f"(|obs| max {np.abs(obs).max():.3e})")
    return logits, value, h_out


def forward_sequence(bundle: WeightBundle, hidden: np.ndarray, obs_seq: np.ndarray):
    """Run L consecutive steps carrying the hidden state.

    obs_seq: (G, B, L, D). Returns (logits (L,G,B,K), values (L,G,B),
    final hidden, tape for backward_sequence).

    The input projections and everything above the recurrence (fc layers,
    heads) are evaluated for the whole sequence at once; only the hidden
    recursion runs step by step.
    """
    p, act = bundle.params, bundle.dims.fc_activation
    n_sets, n_streams, n_steps, in_dim = obs_seq.shape
    h_width = bundle.dims.hidden
    flat = (n_sets, n_streams * n_steps)
    obs2 = np.ascontiguousarray(obs_seq).reshape(flat + (in_dim,))
    xz = (obs2 @ p["wz"].swapaxes(1, 2)).reshape(obs_seq.shape[:3] + (h_width,))
    xr = (obs2 @ p["wr"].swapaxes(1, 2)).reshape(xz.shape)
    xh = (obs2 @ p["wh"].swapaxes(1, 2)).reshape(xz.shape)
    xz += p["bz"][:, None, None, :]
    xr += p["br"][:, None, None, :]
    xh += p["bh"][:, None, None, :]
    z_all = np.empty(xz.shape)
    r_all = np.empty_like(z_all)
    c_all = np.empty_like(z_all)
    h_all = np.empty_like(z_all)
    uz_t = p["uz"].swapaxes(1, 2)
    ur_t = p["ur"].swapaxes(1, 2)
    uh_t = p["uh"].swapaxes(1, 2)
    h = hidden
    for t in range(n_steps):
        z = _sigmoid(xz[:, :, t] + h @ uz_t)
        r = _sigmoid(xr[:, :, t] + h @ ur_t)
        c = np.tanh(xh[:, :, t] + (r * h) @ uh_t)
        h = z * h + (1.0 - z) * c
        z_all[:, :, t] = z
        r_all[:, :, t] = r
        c_all[:, :, t] = c
        h_all[:, :, t] = h
    h2 = h_all.reshape(flat + (h_width,))
    f1 = _fc_act(h2 @ p["w1"].swapaxes(1, 2) + p["b1"][:, None, :], act)
    f2 = _fc_act(f1 @ p["w2"].swapaxes(1, 2) + p["b2"][:, None, :], act)
    logits2 = f2 @ p["wa"].swapaxes(1, 2) + p["ba"][:, None, :]
    values2 = (f2 @ p["wc"].swapaxes(1, 2))[..., 0] + p["bc"][:, None, 0]
    logits = logits2.reshape(obs_seq.shape[:3] + (logits2.shape[-1],))
    values = values2.reshape(obs_seq.shape[:3])
    if not (np.all(np.isfinite(logits)) and np.all(np.isfinite(values))):
        raise NumericalError("non-finite activations in recurrent rollout")
    tape = {"obs": obs2, "h0": hidden, "z": z_all, "r": r_all, "c": c_all,
            "h": h_all, "f1": f1, "f2": f2}
    return (np.moveaxis(logits, 2, 0), np.moveaxis(values, 2, 0),
            h_all[:, :, -1].copy(), tape)


def backward_sequence(bundle: WeightBundle, tape: dict,
                      dlogits: np.ndarray, dvalues: np.ndarray) -> dict:
    """Exact reverse-mode gradients of a scalar loss through the recorded
    rollout, backpropagating through time to the start of the sequence.

    dlogits: (L, G, B, K), dvalues: (L, G, B), matching forward_sequence.
    Parameter contractions happen once over the whole sequence; the
    time-sequential part only propagates the hidden-state adjoint.
    """
    p, act = bundle.params, bundle.dims.fc_activation
    z_all, r_all, c_all, h_all = tape["z"], tape["r"], tape["c"], tape["h"]
    obs2, f1, f2 = tape["obs"], tape["f1"], tape["f2"]
    n_sets, n_streams, n_steps, h_width = h_all.shape
    flat = (n_sets, n_streams * n_steps)
    # (L,G,B,*) -> (G, B*L, *); the reshape after moveaxis copies once.
    dl = np.moveaxis(dlogits, 0, 2).reshape(flat + (dlogits.shape[-1],))
    dv = np.moveaxis(dvalues, 0, 2).reshape(flat)
    h_in_all = np.concatenate([tape["h0"][:, :, None, :], h_all[:, :, :-1]],
                              axis=2)
    h2 = h_all.reshape(flat + (h_width,))
    h_in2 = h_in_all.reshape(flat + (h_width,))
    grads = {}
    df2 = dl @ p["wa"] + dv[..., None] * p["wc"][:, None, 0, :]
    grads["wa"] = dl.swapaxes(1, 2) @ f2
    grads["ba"] = dl.sum(axis=1)
    grads["wc"] = dv[:, None, :] @ f2
    grads["bc"] = dv.sum(axis=1)[:, None]
    da2 = df2 * _fc_act_deriv(f2, act)
    grads["w2"] = da2.swapaxes(1, 2) @ f1
    grads["b2"] = da2.sum(axis=1)
    da1 = (da2 @ p["w2"]) * _fc_act_deriv(f1, act)
    grads["w1"] = da1.swapaxes(1, 2) @ h2
    grads["b1"] = da1.sum(axis=1)
    dh_fc = (da1 @ p["w1"]).reshape(h_all.shape)
    dz_pre = np.empty_like(z_all)
    dr_pre = np.empty_like(z_all)
    dc_pre = np.empty_like(z_all)
    dh_carry = np.zeros_like(h_all[:, :, 0])
    for t in range(n_steps - 1, -1, -1):
        z, r, c = z_all[:, :, t], r_all[:, :, t], c_all[:, :, t]
        h_in = h_in_all[:, :, t]
        dh = dh_carry + dh_fc[:, :, t]
        dz = dh * (h_in - c)
        dc = dh * (1.0 - z)
        dh_prev = dh * z
        dcp = dc * (1.0 - c * c)
        d_rh = dcp @ p["uh"]
        drp = (d_rh * h_in) * r * (1.0 - r)
        dzp = dz * z * (1.0 - z)
        dh_prev += d_rh * r + drp @ p["ur"] + dzp @ p["uz"]
        dc_pre[:, :, t] = dcp
        dr_pre[:, :, t] = drp
        dz_pre[:, :, t] = dzp
        dh_carry = dh_prev
    rh2 = (r_all * h_in_all).reshape(flat + (h_width,))
    for name, pre in (("h", dc_pre), ("r", dr_pre), ("z", dz_pre)):
        pre2 = pre.reshape(flat + (h_width,)).swapaxes(1, 2)
        grads["w" + name] = pre2 @ obs2
        grads["u" + name] = pre2 @ (rh2 if name == "h" else h_in2)
        grads["b" + name] = pre.sum(axis=(1, 2))
    return grads


def clip_gradients(grads: dict, max_norm: float = 0.5) -> dict:
    """Scale each parameter set's gradient to a global 2-norm of at most
    max_norm; direction preserved, no-op when already within."""
    n_sets = next(iter(grads.values())).shape[0]
    sq = np.zeros(n_sets)
    for g in grads.values():
        flat = np.ascontiguousarray(g).reshape(n_sets, -1)
        sq += np.einsum("gi,gi->g", flat, flat)
    norm = np.sqrt(sq)
    scale = np.where(norm > max_norm, max_norm / np.maximum(norm, 1e-300), 1.0)
    for name, g in grads.items():
        g *= scale.reshape((n_sets,) + (1,) * (g.ndim - 1))
    return grads


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _scratch: dict = None

    @classmethod
    def zeros(cls, bundle: WeightBundle) -> "AdamState":
        return cls(m={k: np.zeros_like(p) for k, p in bundle.params.items()},
                   v={k: np.zeros_like(p) for k, p in bundle.params.items()},
                   _scratch={k: np.empty_like(p) for k, p in bundle.params.items()})


def adam_step(bundle: WeightBundle, grads: dict, state: AdamState,
              lr: float) -> WeightBundle:
    """Standard bias-corrected Adam update, in place on the bundle."""
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    if state._scratch is None:
        state._scratch = {k: np.empty_like(p) for k, p in bundle.params.items()}
    for name, p in bundle.params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        buf = state._scratch[name]
        m *= state.beta1
        np.multiply(g, 1.0 - state.beta1, out=buf)
        m += buf
        v *= state.beta2
        np.multiply(g, g, out=buf)
        buf *= 1.0 - state.beta2
        v += buf
        np.divide(v, bc2, out=buf)
        np.sqrt(buf, out=buf)
        buf += state.eps
        np.divide(m, buf, out=buf)
        buf *= lr / bc1
        p -= buf
    return bundle


def count_weights(n_bs: int, n_sub: int, max_mod_order: int, n_powers: int,
                  convention: str = "bias") -> int:
    """Trainable parameter count for the deployment dimensions.

    convention="bias" counts a bias on every output (33 parameters per head
    output and biased fc layers); convention="paper" reproduces the leaner
    published tally (32 per head output, bias-free fc layers).
    """
    return sum(weight_breakdown(n_bs, n_sub, max_mod_order, n_powers,
                                convention).values())


def weight_breakdown(n_bs: int, n_sub: int, max_mod_order: int, n_powers: int,
                     convention: str = "bias") -> dict:
    h = HIDDEN
    d = n_bs * n_sub + 4
    k = 2 * max_mod_order * n_powers * n_sub
    if convention == "bias":
        return {"gru": 3 * (h * h + h * d + h),
                "fc": 2 * (h * h + h),
                "actor_head": (h + 1) * k,
                "critic_head": h + 1}
    if convention == "paper":
        return {"gru": 3 * (h * h + h * d + h),
                "fc": 2 * h * h,
                "actor_head": h * k,
                "critic_head": h}
    raise ValueError(f"unknown convention {convention!r}")


def serialize_weights(bundle: WeightBundle, set_index: int = 0) -> bytes:
    """Little-endian float16 byte stream of one parameter set, preceded by a
    16-byte header (magic, version, input_dim, n_actions, hidden)."""
    dims = bundle.dims
    header = _HEADER.pack(_MAGIC, _VERSION, dims.input_dim, dims.n_actions,
                          dims.hidden)
    chunks = [header]
    for name in PARAM_ORDER:
        chunks.append(bundle.params[name][set_index].astype("<f2").tobytes())
    return b"".join(chunks)


def deserialize_weights(data: bytes, fc_activation: str = "relu") -> WeightBundle:
    """Inverse of serialize_weights; raises DecodeError on a corrupt stream."""
    if len(data) < _HEADER.size:
        raise DecodeError("weight stream shorter than header")
    magic, version, input_dim, n_actions, hidden = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise DecodeError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise DecodeError(f"unsupported version {version}")
    if hidden != HIDDEN:
        raise DecodeError(f"unsupported hidden width {hidden}")
    dims = NetworkDims(input_dim=input_dim, n_actions=n_actions, hidden=hidden,
                       fc_activation=fc_activation)
    bundle = WeightBundle.zeros(dims, 1)
    expected = _HEADER.size + 2 * bundle.param_count()
    if len(data) != expected:
        raise DecodeError(f"stream length {len(data)} != expected {expected}")
    offset = _HEADER.size
    shapes = _shapes(dims)
    for name in PARAM_ORDER:
        shape = shapes[name]
        n = int(np.prod(shape))
        flat = np.frombuffer(data, dtype="<f2", count=n, offset=offset)
        bundle.params[name][0] = flat.astype(np.float64).reshape(shape)
        offset += 2 * n
    return bundle


def serialized_bits(param_count: int) -> int:
    """Broadcast payload size in bits at 16-bit precision (header excluded)."""
    return 16 * param_count


def weights_checksum(bundle: WeightBundle, set_index: int = 0) -> str:
    """Stable checksum of the 16-bit wire form of one parameter set."""
    import hashlib
    return hashlib.sha256(serialize_weights(bundle, set_index)).hexdigest()

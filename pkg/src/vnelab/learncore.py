"""Minimal differentiable-computation kernel for the learning agents.

Dense ops, a gated recurrent cell, masked softmax, policy parameters with
seeded initialization, an EMA reward baseline, and the REINFORCE update.
Gradients are architecture-specific and supplied by the caller; every
backward pass in the package is validated against central finite differences
in the test suite.
"""

import numpy as np

from .errors import EpisodeError, FormatError


def affine(x, W, b):
    return np.dot(x, W) + b


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def tanh(x):
    return np.tanh(x)


def masked_softmax(logits, mask):
    """Softmax over the unmasked entries; masked entries get exactly 0.

    Max subtraction keeps the exponentials in range. Raises when no entry
    is unmasked (no feasible action to choose).
    """
    logits = np.asarray(logits, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if logits.shape != mask.shape:
        raise ValueError("logits %r vs mask %r" % (logits.shape, mask.shape))
    if not mask.any():
        raise ValueError("masked_softmax with no unmasked entry")
    m = logits[mask].max()
    z = np.zeros_like(logits)
    z[mask] = np.exp(logits[mask] - m)
    return z / z.sum()


def log_prob_grad(probs, mask, action):
    """Gradient of log softmax probability of `action` w.r.t. the logits.

    For the masked softmax this is onehot(action) - probs on the unmasked
    entries and exactly zero elsewhere.
    """
    g = -probs.copy()
    g[action] += 1.0
    g[~np.asarray(mask, dtype=bool)] = 0.0
    return g


def gru_step(x, h, Wz, Wr, Wh, bz, br, bh):
    """One step of the gated recurrent cell.

    z = sigmoid(Wz [x;h] + bz), r = sigmoid(Wr [x;h] + br),
    c = tanh(Wh [x; r*h] + bh), h' = (1-z)*h + z*c.
    """
    xh = np.concatenate([x, h])
    z = sigmoid(affine(xh, Wz, bz))
    r = sigmoid(affine(xh, Wr, br))
    xrh = np.concatenate([x, r * h])
    c = tanh(affine(xrh, Wh, bh))
    return (1.0 - z) * h + z * c


class PolicyParameters:
    """Named trainable arrays; shapes are fixed after construction.

    One-dimensional entries are bias/pointer vectors; serialization writes
    them with a row count of 1, and deserialization restores the vector
    shape for single-row records (the package uses no true 1-row matrices).
    """

    def __init__(self, arrays):
        self._arrays = {}
        for name, value in arrays.items():
            arr = np.array(value, dtype=np.float64)
            if arr.ndim not in (1, 2):
                raise ValueError("parameter %r must be 1- or 2-D" % name)
            self._arrays[name] = arr

    @classmethod
    def initialize(cls, shapes, seed, scale=0.1):
        """Uniform [-scale, scale] init for each named shape, from one seed."""
        rng = np.random.default_rng(seed)
        arrays = {}
        for name, shape in shapes.items():
            arrays[name] = rng.uniform(-scale, scale, size=shape)
        return cls(arrays)

    def __getitem__(self, name):
        return self._arrays[name]

    def __contains__(self, name):
        return name in self._arrays

    def names(self):
        return list(self._arrays)

    def copy(self):
        return PolicyParameters({n: a.copy() for n, a in self._arrays.items()})

    def apply_gradient(self, grads, step):
        """params += step * grads for every named gradient present."""
        for name, g in grads.items():
            arr = self._arrays[name]
            if g.shape != arr.shape:
                raise ValueError("gradient %r shape %r != %r"
                                 % (name, g.shape, arr.shape))
            arr += step * g
            if not np.all(np.isfinite(arr)):
                raise FloatingPointError("parameter %r became non-finite" % name)
        return self

    def l2_distance(self, other):
        total = 0.0
        for name, arr in self._arrays.items():
            total += float(np.sum((arr - other[name]) ** 2))
        return np.sqrt(total)


class RewardBaseline:
    """Exponential moving average of observed rewards.

    The advantage of a reward is measured against the value before that
    reward is folded in; the first observation therefore has advantage 0.
    """

    def __init__(self, decay=0.9):
        self.decay = decay
        self.value = None

    def advantage(self, reward):
        if self.value is None:
            return 0.0
        return reward - self.value

    def update(self, reward):
        if self.value is None:
            self.value = float(reward)
        else:
            self.value = self.decay * self.value + (1.0 - self.decay) * reward
        return self.value


def reinforce_update(params, episode, reward, baseline, grad_log_prob_fn,
                     learning_rate):
    """Policy-gradient step: params += lr * (reward - baseline) * grad.

    episode is the agent's decision record; grad_log_prob_fn(params, episode)
    returns the named gradients of the summed log probability of the chosen
    actions. Every decision is validated to have had nonzero probability.
    The baseline is advanced with the reward afterwards.
    """
    for decision in episode:
        probs = decision[2]
        action = decision[1]
        if probs[action] <= 0.0:
            raise EpisodeError(
                "chosen action %r had probability %r" % (action, probs[action]))
    advantage = baseline.advantage(reward)
    baseline.update(reward)
    if advantage == 0.0 or not episode:
        return params
    grads = grad_log_prob_fn(params, episode)
    return params.apply_gradient(grads, learning_rate * advantage)


# -- checkpoint format -------------------------------------------------------

def format_params(params):
    """Serialize as `PARAM <name> <rows> <cols>` blocks, one row per line.

    Values use shortest round-trip decimal form, so loading restores every
    parameter bit-exactly. Vectors are written with rows=1.
    """
    lines = []
    for name in params.names():
        arr = params[name]
        if arr.ndim == 1:
            rows, cols = 1, arr.shape[0]
            body = [arr]
        else:
            rows, cols = arr.shape
            body = [arr[r] for r in range(rows)]
        if any(ch.isspace() for ch in name):
            raise ValueError("parameter name %r contains whitespace" % name)
        lines.append("PARAM %s %d %d" % (name, rows, cols))
        for row in body:
            lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_params(text):
    arrays = {}
    order = []
    current = None  # (name, rows, cols, values)

    def close(record):
        name, rows, cols, values = record
        if len(values) != rows * cols:
            raise FormatError(
                "parameter %r expects %d values, found %d"
                % (name, rows * cols, len(values)))
        arr = np.array(values, dtype=np.float64)
        arrays[name] = arr if rows == 1 else arr.reshape(rows, cols)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("PARAM"):
            parts = line.split()
            if len(parts) != 4:
                raise FormatError("line %d: PARAM needs name, rows, cols" % lineno)
            if current is not None:
                close(current)
            try:
                rows, cols = int(parts[2]), int(parts[3])
            except ValueError:
                raise FormatError("line %d: bad PARAM dimensions" % lineno) from None
            if parts[1] in arrays or (current and parts[1] == current[0]):
                raise FormatError("line %d: duplicate parameter %r" % (lineno, parts[1]))
            current = (parts[1], rows, cols, [])
            order.append(parts[1])
        else:
            if current is None:
                raise FormatError("line %d: values before any PARAM header" % lineno)
            try:
                current[3].extend(float(t) for t in line.split())
            except ValueError:
                raise FormatError("line %d: non-numeric entry" % lineno) from None
    if current is not None:
        close(current)
    if not arrays:
        raise FormatError("no parameters found")
    return PolicyParameters({name: arrays[name] for name in order})


def save_params(params, path):
    with open(path, "w") as fh:
        fh.write(format_params(params))


def load_params(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError("cannot read checkpoint %s: %s" % (path, exc)) from None
    return parse_params(text)

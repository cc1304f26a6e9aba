"""Feed-forward generator networks with exact forward, Jacobian, JVP and VJP maps.

A generator is a stack of dense layers z -> act(W z + b). The latent domain is
the closed ball of ``radius`` around the origin; recovery targets live in the
network's range. Jacobians are exact chain-rule products, not autodiff traces,
so the derivative code is a few lines and easy to audit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import NonFiniteError, ShapeError, WeightFileError
from .numerics import RngStream, as_matrix, as_vector, gaussian_matrix

ACTIVATION_KINDS = ("identity", "relu", "elu", "sigmoid", "tanh")

NET_STREAM_ID = 101


@dataclass(frozen=True)
class Activation:
    """Scalar activation applied elementwise.

    elu, sigmoid, tanh and identity are continuously differentiable and
    strictly increasing. relu is kept for ablations and is flagged
    ``outside_theory`` because it is neither.
    """

    kind: str
    elu_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError("unknown activation %r, expected one of %s"
                             % (self.kind, (ACTIVATION_KINDS,)))
        if self.elu_scale <= 0.0:
            raise ValueError("elu_scale must be positive")

    @property
    def outside_theory(self):
        return self.kind == "relu"

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "identity":
            return x
        if self.kind == "relu":
            return np.maximum(x, 0.0)
        if self.kind == "elu":
            return np.where(x > 0.0, x, self.elu_scale * np.expm1(np.minimum(x, 0.0)))
        if self.kind == "sigmoid":
            return 1.0 / (1.0 + np.exp(-x))
        return np.tanh(x)

    def derivative(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "identity":
            return np.ones_like(x)
        if self.kind == "relu":
            # subgradient choice at the kink: act'(0) = 0
            return np.where(x > 0.0, 1.0, 0.0)
        if self.kind == "elu":
            return np.where(x > 0.0, 1.0, self.elu_scale * np.exp(np.minimum(x, 0.0)))
        if self.kind == "sigmoid":
            s = 1.0 / (1.0 + np.exp(-x))
            return s * (1.0 - s)
        t = np.tanh(x)
        return 1.0 - t * t


class Layer(NamedTuple):
    w: np.ndarray
    b: np.ndarray
    act: Activation


class GeneratorNet:
    """Immutable dense network G: R^d -> R^n together with its latent radius."""

    def __init__(self, layers, radius, enforce_nondecreasing=False):
        if not layers:
            raise ValueError("a generator needs at least one layer")
        if not (radius > 0.0 and np.isfinite(radius)):
            raise ValueError("radius must be positive and finite")
        checked = []
        prev = None
        for i, (w, b, act) in enumerate(layers):
            w = as_matrix(w, "layer %d weight" % i)
            b = as_vector(b, "layer %d bias" % i)
            if w.shape[0] != b.shape[0]:
                raise ShapeError("layer %d: weight rows %d != bias length %d"
                                 % (i, w.shape[0], b.shape[0]))
            if prev is not None and w.shape[1] != prev:
                raise ShapeError("layer %d expects input width %d, previous layer emits %d"
                                 % (i, w.shape[1], prev))
            if not isinstance(act, Activation):
                act = Activation(str(act))
            w.setflags(write=False)
            b.setflags(write=False)
            checked.append(Layer(w, b, act))
            prev = w.shape[0]
        widths = [checked[0].w.shape[1]] + [lay.w.shape[0] for lay in checked]
        if enforce_nondecreasing and any(a > b for a, b in zip(widths, widths[1:])):
            raise ValueError("layer widths %s are not non-decreasing" % (widths,))
        self.layers = tuple(checked)
        self.radius = float(radius)
        self.input_dim = widths[0]
        self.output_dim = widths[-1]
        self.widths = tuple(widths)

    @property
    def outside_theory(self):
        return any(lay.act.outside_theory for lay in self.layers)

    def __repr__(self):
        kinds = "/".join(lay.act.kind for lay in self.layers)
        return "GeneratorNet(%s, act=%s, radius=%g)" % (
            "->".join(str(w) for w in self.widths), kinds, self.radius)


@dataclass(frozen=True)
class NetSpec:
    """Recipe for a randomly initialized network.

    ``widths`` lists every layer width including input, e.g. (4, 8, 16).
    Weights are drawn i.i.d. N(0, weight_scale^2 / fan_in), biases are zero.
    """

    widths: tuple
    activation: str = "elu"
    weight_scale: float = 1.0
    seed: int = 0
    radius: float | None = None
    enforce_nondecreasing: bool = False

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ValueError("widths must list >= 2 positive layer sizes")
        if self.weight_scale <= 0.0:
            raise ValueError("weight_scale must be positive")

    @property
    def input_dim(self):
        return self.widths[0]

    def resolved_radius(self):
        if self.radius is not None:
            return float(self.radius)
        return 3.0 * np.sqrt(self.widths[0])


def random_net(spec, stream=None):
    """Draw a network from ``spec``; identical (spec, seed) give identical nets."""
    if stream is None:
        stream = RngStream(spec.seed, NET_STREAM_ID)
    layers = []
    for fan_in, fan_out in zip(spec.widths, spec.widths[1:]):
        scale = spec.weight_scale / np.sqrt(fan_in)
        w = scale * gaussian_matrix(stream, fan_out, fan_in)
        b = np.zeros(fan_out)
        layers.append((w, b, Activation(spec.activation)))
    return GeneratorNet(layers, spec.resolved_radius(),
                        enforce_nondecreasing=spec.enforce_nondecreasing)


def _check_input(net, z):
    z = as_vector(z, "latent input")
    if z.shape[0] != net.input_dim:
        raise ShapeError("latent input has length %d, network expects %d"
                         % (z.shape[0], net.input_dim))
    return z


def forward(net, z):
    """Evaluate G(z)."""
    a = _check_input(net, z)
    for i, lay in enumerate(net.layers):
        pre = lay.w @ a + lay.b
        a = lay.act.value(pre)
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("non-finite activation in layer %d" % i)
    return a


def _forward_trace(net, z):
    """Forward pass keeping per-layer pre-activations for derivative products."""
    a = _check_input(net, z)
    pres = []
    for i, lay in enumerate(net.layers):
        pre = lay.w @ a + lay.b
        pres.append(pre)
        a = lay.act.value(pre)
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("non-finite activation in layer %d" % i)
    return a, pres


def jacobian(net, z):
    """Exact Jacobian dG/dz at z, shape (output_dim, input_dim)."""
    _, pres = _forward_trace(net, z)
    jac = None
    for lay, pre in zip(net.layers, pres):
        step = lay.w if jac is None else lay.w @ jac
        jac = lay.act.derivative(pre)[:, None] * step
    return jac


def jvp(net, z, v):
    """Jacobian-vector product dG/dz @ v without forming the Jacobian."""
    v = as_vector(v, "jvp direction")
    if v.shape[0] != net.input_dim:
        raise ShapeError("jvp direction has length %d, network expects %d"
                         % (v.shape[0], net.input_dim))
    _, pres = _forward_trace(net, z)
    t = v
    for lay, pre in zip(net.layers, pres):
        t = lay.act.derivative(pre) * (lay.w @ t)
    return t


def vjp(net, z, u):
    """Vector-Jacobian product (dG/dz)^T @ u without forming the Jacobian."""
    u = as_vector(u, "vjp cotangent")
    if u.shape[0] != net.output_dim:
        raise ShapeError("vjp cotangent has length %d, network emits %d"
                         % (u.shape[0], net.output_dim))
    _, pres = _forward_trace(net, z)
    t = u
    for lay, pre in zip(reversed(net.layers), reversed(pres)):
        t = lay.w.T @ (lay.act.derivative(pre) * t)
    return t


def forward_batch(net, zs):
    """Evaluate G row-wise on an (N, input_dim) batch."""
    a = np.asarray(zs, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != net.input_dim:
        raise ShapeError("batch shape %s incompatible with input_dim %d"
                         % (a.shape, net.input_dim))
    for i, lay in enumerate(net.layers):
        a = lay.act.value(a @ lay.w.T + lay.b)
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("non-finite activation in layer %d" % i)
    return a


def _forward_trace_batch(net, zs):
    a = np.asarray(zs, dtype=np.float64)
    pres = []
    for lay in net.layers:
        pre = a @ lay.w.T + lay.b
        pres.append(pre)
        a = lay.act.value(pre)
    return a, pres


def vjp_batch(net, zs, us):
    """Row-wise VJP: returns (N, input_dim) for cotangents of shape (N, output_dim)."""
    _, pres = _forward_trace_batch(net, zs)
    t = np.asarray(us, dtype=np.float64)
    for lay, pre in zip(reversed(net.layers), reversed(pres)):
        t = (lay.act.derivative(pre) * t) @ lay.w
    return t


# Weight files carry every float with 17 significant digits, which is enough
# for an exact binary round trip. The schema is small and fixed, so the writer
# emits it directly instead of going through a generic serializer.

def _fmt(x):
    return format(float(x), ".17g")


def save_net(net, path):
    """Write the network to a .gnet.json weight file."""
    chunks = ['{"input_dim":%d,"radius":%s,"layers":[' % (net.input_dim, _fmt(net.radius))]
    for i, lay in enumerate(net.layers):
        if i:
            chunks.append(",")
        rows = ",".join("[%s]" % ",".join(_fmt(x) for x in row) for row in lay.w)
        bias = ",".join(_fmt(x) for x in lay.b)
        act = '"act":"%s"' % lay.act.kind
        if lay.act.kind == "elu" and lay.act.elu_scale != 1.0:
            act += ',"elu_scale":%s' % _fmt(lay.act.elu_scale)
        chunks.append('{"w":[%s],"b":[%s],%s}' % (rows, bias, act))
    chunks.append("]}")
    with open(path, "w") as fh:
        fh.write("".join(chunks))
        fh.write("\n")


def load_net(path, enforce_nondecreasing=False):
    """Read a .gnet.json weight file; malformed input raises WeightFileError."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise WeightFileError("%s: cannot read weight file: %s" % (path, exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WeightFileError("%s: parse error at line %d column %d: %s"
                              % (path, exc.lineno, exc.colno, exc.msg)) from exc
    try:
        input_dim = int(doc["input_dim"])
        radius = float(doc["radius"])
        raw_layers = doc["layers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise WeightFileError("%s: missing or malformed top-level field (%s)"
                              % (path, exc)) from exc
    if not isinstance(raw_layers, list) or not raw_layers:
        raise WeightFileError("%s: 'layers' must be a nonempty list" % path)
    layers = []
    prev = input_dim
    for i, entry in enumerate(raw_layers):
        try:
            w = np.asarray(entry["w"], dtype=np.float64)
            b = np.asarray(entry["b"], dtype=np.float64)
            act = Activation(entry["act"], float(entry.get("elu_scale", 1.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise WeightFileError("%s: layer %d is malformed (%s)" % (path, i, exc)) from exc
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise WeightFileError("%s: layer %d has inconsistent w/b shapes %s, %s"
                                  % (path, i, w.shape, b.shape))
        if w.shape[1] != prev:
            raise WeightFileError("%s: layer %d expects input width %d but gets %d"
                                  % (path, i, w.shape[1], prev))
        prev = w.shape[0]
        layers.append((w, b, act))
    try:
        return GeneratorNet(layers, radius, enforce_nondecreasing=enforce_nondecreasing)
    except (ValueError, ShapeError) as exc:
        raise WeightFileError("%s: %s" % (path, exc)) from exc

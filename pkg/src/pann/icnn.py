"""Input-convex feed-forward networks over invariant vectors.

The potential core of every neural model here is a scalar-valued network

    psi(x) = W_out . A_H,   A_1 = SP(w_1 x + b_1),   A_h = SP(w_h A_{h-1} + b_h)

with the softplus activation SP(x) = ln(1 + e^x).  When every weight matrix
(including the output weights) is non-negative, psi is convex and
non-decreasing in each input; the biases stay unconstrained.  Convexity in
the invariant vector is what makes the assembled potential polyconvex,
because each network input is itself a convex function of the deformation
gradient and its minors, with the volumetric input entering only linearly.

Parameters are stored per layer and flattened in a fixed order (layer
weights row-major, then layer biases, repeated per layer, then the output
weights) so optimizers, finite differences and serialization all agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit as logistic

from .errors import DimensionMismatchError, FormatError

__all__ = [
    "NetworkArchitecture",
    "NetworkParams",
    "softplus",
    "logistic",
    "forward",
    "input_gradient",
    "init_params",
    "project_nonnegative",
]

FORMAT_NAME = "icnn-params"
FORMAT_VERSION = 1


def softplus(x):
    """Overflow-safe softplus ln(1 + e^x) (== logaddexp(0, x))."""
    return np.logaddexp(0.0, x)


@dataclass(frozen=True)
class NetworkArchitecture:
    """Shape and constraint flag of an invariant-input network."""

    input_dim: int
    hidden_layers: tuple[int, ...] = (8,)
    constrain_weights: bool = True

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        object.__setattr__(self, "hidden_layers", tuple(int(n) for n in self.hidden_layers))
        if len(self.hidden_layers) < 1 or any(n < 1 for n in self.hidden_layers):
            raise ValueError(f"hidden_layers must be non-empty positive, got {self.hidden_layers}")

    @property
    def parameter_count(self) -> int:
        count = 0
        prev = self.input_dim
        for n in self.hidden_layers:
            count += n * prev + n
            prev = n
        return count + prev  # output weights

    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim,) + self.hidden_layers


@dataclass(frozen=True)
class NetworkParams:
    """Concrete parameter values for a :class:`NetworkArchitecture`."""

    arch: NetworkArchitecture
    weights: tuple[np.ndarray, ...]   # per layer, shape (n_h, n_{h-1})
    biases: tuple[np.ndarray, ...]    # per layer, shape (n_h,)
    output_weights: np.ndarray        # shape (n_H,)

    def __post_init__(self):
        sizes = self.arch.layer_sizes()
        if len(self.weights) != len(self.arch.hidden_layers):
            raise DimensionMismatchError("wrong number of weight matrices")
        for h, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[h + 1], sizes[h]) or b.shape != (sizes[h + 1],):
                raise DimensionMismatchError(
                    f"layer {h}: expected {(sizes[h + 1], sizes[h])}, got {w.shape}"
                )
        if self.output_weights.shape != (sizes[-1],):
            raise DimensionMismatchError("output weight shape mismatch")

    # -- flat view ---------------------------------------------------------

    def to_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        parts.append(self.output_weights)
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, arch: NetworkArchitecture, flat) -> "NetworkParams":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (arch.parameter_count,):
            raise DimensionMismatchError(
                f"expected {arch.parameter_count} parameters, got shape {flat.shape}"
            )
        sizes = arch.layer_sizes()
        weights, biases = [], []
        pos = 0
        for h in range(len(arch.hidden_layers)):
            n, p = sizes[h + 1], sizes[h]
            weights.append(flat[pos:pos + n * p].reshape(n, p).copy())
            pos += n * p
            biases.append(flat[pos:pos + n].copy())
            pos += n
        wout = flat[pos:].copy()
        return cls(arch, tuple(weights), tuple(biases), wout)

    def weight_mask(self) -> np.ndarray:
        """Boolean mask over the flat vector: True where the entry is a weight."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(np.ones(w.size, dtype=bool))
            parts.append(np.zeros(b.size, dtype=bool))
        parts.append(np.ones(self.output_weights.size, dtype=bool))
        return np.concatenate(parts)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "architecture": {
                "input_dim": self.arch.input_dim,
                "hidden_layers": list(self.arch.hidden_layers),
                "constrain_weights": self.arch.constrain_weights,
            },
            "layers": [
                {"weights": w.tolist(), "biases": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
            "output_weights": self.output_weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkParams":
        try:
            if data["format"] != FORMAT_NAME:
                raise FormatError(f"not a network parameter payload: {data['format']!r}")
            if data["version"] != FORMAT_VERSION:
                raise FormatError(f"unsupported version {data['version']!r}")
            arch = NetworkArchitecture(
                input_dim=int(data["architecture"]["input_dim"]),
                hidden_layers=tuple(data["architecture"]["hidden_layers"]),
                constrain_weights=bool(data["architecture"]["constrain_weights"]),
            )
            weights = tuple(np.array(l["weights"], dtype=float) for l in data["layers"])
            biases = tuple(np.array(l["biases"], dtype=float) for l in data["layers"])
            wout = np.array(data["output_weights"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed network parameter payload: {exc}") from exc
        return cls(arch, weights, biases, wout)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "NetworkParams":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def init_params(arch: NetworkArchitecture, seed: int) -> NetworkParams:
    """Seeded random initialization.

    Weights (incl. output weights) ~ U[0, 0.5] when the architecture is
    constrained, else U[-0.5, 0.5]; biases always ~ U[-0.5, 0.5].  Draws
    happen in flat-packing order so the result is reproducible.
    """
    rng = np.random.default_rng(seed)
    w_lo = 0.0 if arch.constrain_weights else -0.5
    sizes = arch.layer_sizes()
    weights, biases = [], []
    for h in range(len(arch.hidden_layers)):
        n, p = sizes[h + 1], sizes[h]
        weights.append(rng.uniform(w_lo, 0.5, size=(n, p)))
        biases.append(rng.uniform(-0.5, 0.5, size=n))
    wout = rng.uniform(w_lo, 0.5, size=sizes[-1])
    return NetworkParams(arch, tuple(weights), tuple(biases), wout)


def project_nonnegative(params: NetworkParams) -> NetworkParams:
    """Clamp every weight (not bias) at zero from below."""
    return NetworkParams(
        params.arch,
        tuple(np.maximum(w, 0.0) for w in params.weights),
        tuple(b.copy() for b in params.biases),
        np.maximum(params.output_weights, 0.0),
    )


def _check_inputs(arch: NetworkArchitecture, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise DimensionMismatchError(
            f"expected inputs of width {arch.input_dim}, got shape {x.shape}"
        )
    return x


def forward(params: NetworkParams, x) -> np.ndarray:
    """Network value for a batch (N, input_dim) -> (N,); 1-d input -> scalar."""
    xb = _check_inputs(params.arch, x)
    a = xb
    for w, b in zip(params.weights, params.biases):
        a = softplus(a @ w.T + b)
    out = a @ params.output_weights
    return float(out[0]) if np.asarray(x).ndim == 1 else out


def input_gradient(params: NetworkParams, x) -> np.ndarray:
    """d psi / d inputs, shape matching the input batch."""
    xb = _check_inputs(params.arch, x)
    zs = []
    a = xb
    for w, b in zip(params.weights, params.biases):
        z = a @ w.T + b
        zs.append(z)
        a = softplus(z)
    g = np.broadcast_to(params.output_weights, (xb.shape[0], params.output_weights.size))
    for w, z in zip(reversed(params.weights), reversed(zs)):
        g = (g * logistic(z)) @ w
    return g[0] if np.asarray(x).ndim == 1 else g

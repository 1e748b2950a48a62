"""Generator and discriminator MLPs built from diffcore ops."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diffcore as dc
from .diffcore import ParameterSet, Tensor

HIDDEN = {"tanh": dc.tanh, "relu": dc.relu}
OUTPUT = {"identity": None, "sigmoid": dc.sigmoid}


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple[int, ...]
    hidden_activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least input and output sizes")
        if any(s <= 0 for s in sizes):
            raise ValueError(f"layer sizes must be positive: {sizes}")
        if self.hidden_activation not in HIDDEN:
            raise ValueError(f"hidden_activation must be one of {sorted(HIDDEN)}")
        if self.output_activation not in OUTPUT:
            raise ValueError(f"output_activation must be one of {sorted(OUTPUT)}")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        return self.layer_sizes[-1]


def generator_spec(latent_dim: int = 8, n_out: int = 16, hidden=(32, 32)) -> MlpSpec:
    return MlpSpec((latent_dim, *hidden, n_out), "tanh", "identity")


def discriminator_spec(n_in: int = 16, hidden=(32, 32)) -> MlpSpec:
    return MlpSpec((n_in, *hidden, 1), "relu", "sigmoid")


class Mlp:
    def __init__(self, spec: MlpSpec, params: ParameterSet):
        self.spec = spec
        self.params = params

    @property
    def n_layers(self) -> int:
        return len(self.spec.layer_sizes) - 1

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[1] != self.spec.n_in:
            raise dc.ShapeError(f"input has {x.shape[1]} features, net expects {self.spec.n_in}")
        act = HIDDEN[self.spec.hidden_activation]
        h = x
        last = self.n_layers - 1
        for i in range(self.n_layers):
            h = dc.add(dc.matmul(h, self.params[f"W{i}"]), self.params[f"b{i}"])
            if i < last:
                h = act(h)
        out_act = OUTPUT[self.spec.output_activation]
        return h if out_act is None else out_act(h)

    __call__ = forward


class GeneratorNet(Mlp):
    pass


class DiscriminatorNet(Mlp):
    pass


def init_params(spec: MlpSpec, rng: np.random.Generator | None, zero: bool = False) -> ParameterSet:
    """Glorot-uniform weights and zero biases (all zeros when ``zero``)."""
    params = ParameterSet()
    sizes = spec.layer_sizes
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        if zero:
            w = np.zeros((fan_in, fan_out))
        else:
            s = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-s, s, size=(fan_in, fan_out))
        params.add(f"W{i}", Tensor(w, requires_grad=True))
        params.add(f"b{i}", Tensor(np.zeros((1, fan_out)), requires_grad=True))
    return params


def init_net(spec: MlpSpec, rng: np.random.Generator | None, zero: bool = False) -> Mlp:
    cls = DiscriminatorNet if spec.output_activation == "sigmoid" else GeneratorNet
    return cls(spec, init_params(spec, rng, zero=zero))


def sample_latent(latent_dim: int, batch: int, rng: np.random.Generator) -> Tensor:
    if latent_dim <= 0 or batch <= 0:
        raise ValueError(f"latent_dim and batch must be positive, got {latent_dim}, {batch}")
    return Tensor(rng.standard_normal((batch, latent_dim)))


def generate(g: GeneratorNet, z: Tensor) -> Tensor:
    return g.forward(z)


def discriminate(d: DiscriminatorNet, x: Tensor) -> Tensor:
    return d.forward(x)


def write_params_csv(path, params: ParameterSet) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "row", "col", "value"])
        for name, t in params:
            for (r, c), v in np.ndenumerate(t.values):
                w.writerow([name, r, c, repr(float(v))])
    return path


def read_params_csv(path) -> dict[str, np.ndarray]:
    cells: dict[str, dict[tuple[int, int], float]] = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            cells.setdefault(row["name"], {})[int(row["row"]), int(row["col"])] = float(row["value"])
    out = {}
    for name, entries in cells.items():
        rows = 1 + max(r for r, _ in entries)
        cols = 1 + max(c for _, c in entries)
        arr = np.zeros((rows, cols))
        for (r, c), v in entries.items():
            arr[r, c] = v
        out[name] = arr
    return out

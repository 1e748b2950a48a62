"""Alternating training of one discriminator against k coupled generators."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import diffcore as dc
from .losses import CouplingGraph, LossConfig, discriminator_loss, generator_loss
from .models import (DiscriminatorNet, GeneratorNet, discriminator_spec, generator_spec,
                     init_net, sample_latent)
from .synthdata import CurveBand, sample_real, write_curves_csv

log = logging.getLogger(__name__)

VARIANTS = ("gan1", "gan2", "gan3", "gan4", "custom")
NAMED_VARIANTS = VARIANTS[:4]

# spawn keys for the per-purpose random streams; fixed so that stream i of a
# k-generator run equals stream i of any other run with the same seed
_DATA, _D_INIT, _G_INIT, _G_LATENT, _EVAL = range(5)


class TrainingError(RuntimeError):
    pass


class TrainingDiverged(TrainingError):
    def __init__(self, iteration: int, network: str, detail: str):
        super().__init__(f"non-finite value at iteration {iteration} in {network}: {detail}")
        self.iteration = iteration
        self.network = network


def build_variant(variant: str) -> tuple[int, CouplingGraph]:
    if variant == "gan1":
        g = CouplingGraph(1)
    elif variant == "gan2":
        g = CouplingGraph(2)
    elif variant == "gan3":
        # generator 1 races generator 0; generator 0 ignores generator 1
        g = CouplingGraph(2, frozenset({(1, 0)}))
    elif variant == "gan4":
        g = CouplingGraph(2, frozenset({(0, 1), (1, 0)}))
    elif variant == "custom":
        raise ValueError("custom variant requires an explicit coupling graph")
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return g.k, g


@dataclass(frozen=True)
class ExperimentSpec:
    variant: str = "gan4"
    graph: CouplingGraph | None = None
    loss_config: LossConfig = LossConfig()
    iterations: int = 10_000
    batch_size: int = 64
    optimizer: str = "adam"
    lr_d: float = 5e-5
    lr_g: float = 1e-4
    latent_dim: int = 8
    hidden: tuple[int, ...] = (32, 32)
    band: CurveBand = field(default_factory=CurveBand)
    seed: int = 0
    checkpoint_iters: tuple[int, ...] = (1, 2500, 8000)
    checkpoint_batch: int = 64

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == "custom":
            if self.graph is None:
                raise ValueError("custom variant requires an explicit coupling graph")
        else:
            _, g = build_variant(self.variant)
            if self.graph is not None and self.graph != g:
                raise ValueError(f"{self.variant} fixes its own coupling graph")
            object.__setattr__(self, "graph", g)
        for name in ("iterations", "batch_size", "latent_dim", "checkpoint_batch"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.lr_d <= 0 or self.lr_g <= 0:
            raise ValueError("learning rates must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be sgd or adam, got {self.optimizer!r}")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden sizes must be positive")
        object.__setattr__(self, "checkpoint_iters",
                           tuple(sorted({int(t) for t in self.checkpoint_iters})))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def k(self) -> int:
        return self.graph.k

    def with_(self, **changes) -> "ExperimentSpec":
        if "variant" in changes and changes["variant"] != "custom" and "graph" not in changes:
            changes["graph"] = None
        return replace(self, **changes)


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass
class TrainState:
    discriminator: DiscriminatorNet
    generators: list[GeneratorNet]
    iteration: int
    data_rng: np.random.Generator
    latent_rngs: list[np.random.Generator]

    @classmethod
    def initial(cls, spec: ExperimentSpec) -> "TrainState":
        n = spec.band.n
        d = init_net(discriminator_spec(n, spec.hidden), stream(spec.seed, _D_INIT))
        gens = [init_net(generator_spec(spec.latent_dim, n, spec.hidden), stream(spec.seed, _G_INIT, i))
                for i in range(spec.k)]
        return cls(d, gens, 0, stream(spec.seed, _DATA),
                   [stream(spec.seed, _G_LATENT, i) for i in range(spec.k)])


@dataclass
class LossTrace:
    k: int
    iterations: list[int] = field(default_factory=list)
    loss_d: list[float] = field(default_factory=list)
    loss_g: list[list[float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.loss_g:
            self.loss_g = [[] for _ in range(self.k)]

    def append(self, iteration: int, loss_d: float, loss_g: Sequence[float]) -> None:
        if self.iterations and iteration <= self.iterations[-1]:
            raise ValueError("trace iterations must increase strictly")
        if len(loss_g) != self.k:
            raise ValueError(f"expected {self.k} generator losses, got {len(loss_g)}")
        self.iterations.append(iteration)
        self.loss_d.append(loss_d)
        for col, v in zip(self.loss_g, loss_g):
            col.append(v)

    def __len__(self) -> int:
        return len(self.iterations)

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"loss_d": np.asarray(self.loss_d)}
        for i, col in enumerate(self.loss_g):
            cols[f"loss_g{i}"] = np.asarray(col)
        return cols

    def records(self):
        for t, row in enumerate(self.iterations):
            yield (row, self.loss_d[t], *(col[t] for col in self.loss_g))

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "loss_d", *(f"loss_g{i}" for i in range(self.k))])
            for rec in self.records():
                w.writerow([rec[0], *(repr(float(v)) for v in rec[1:])])
        return path

    @classmethod
    def read_csv(cls, path) -> "LossTrace":
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: empty trace file") from None
            if header[:2] != ["iteration", "loss_d"] or len(header) < 3 or any(
                    h != f"loss_g{i}" for i, h in enumerate(header[2:])):
                raise ValueError(f"{path}: unexpected trace header {header}")
            trace = cls(len(header) - 2)
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
                try:
                    vals = [float(v) for v in row[1:]]
                    trace.append(int(row[0]), vals[0], vals[1:])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        return trace


@dataclass
class TrainResult:
    spec: ExperimentSpec
    state: TrainState
    trace: LossTrace
    checkpoints: dict[tuple[int, int], np.ndarray]

    def checkpoint_name(self, iteration: int, gen: int) -> str:
        return f"{self.spec.variant}_seed{self.spec.seed}_iter{iteration}_gen{gen}.csv"

    def write_checkpoints(self, out_dir) -> list[Path]:
        out_dir = Path(out_dir)
        return [write_curves_csv(out_dir / self.checkpoint_name(t, i), self.spec.band, ys)
                for (t, i), ys in sorted(self.checkpoints.items())]


def sample_generator(g: GeneratorNet, latent_dim: int, count: int,
                     rng: np.random.Generator) -> np.ndarray:
    with dc.no_grad():
        return g(sample_latent(latent_dim, count, rng)).values.copy()


def _step(params, spec: ExperimentSpec, lr: float) -> None:
    dc.optimizer_step(params, spec.optimizer, lr)


def train_iteration(spec: ExperimentSpec, state: TrainState) -> tuple[float, list[float]]:
    """One D update followed by one update per generator, in index order."""
    t = state.iteration + 1
    d, gens, graph = state.discriminator, state.generators, spec.graph
    real = dc.Tensor._wrap(sample_real(spec.band, spec.batch_size, state.data_rng), False)

    try:
        with dc.no_grad():
            fakes = [g(sample_latent(spec.latent_dim, spec.batch_size, rng)).detach()
                     for g, rng in zip(gens, state.latent_rngs)]
        d.params.zero_grad()
        with dc.Tape():
            loss = discriminator_loss(d(real), [d(f) for f in fakes], spec.loss_config.formulation)
        dc.backward(loss)
        _step(d.params, spec, spec.lr_d)
        loss_d = loss.item()
    except (dc.NonFiniteError, ValueError) as exc:
        raise TrainingDiverged(t, "discriminator", str(exc)) from exc

    loss_g = []
    for i, g in enumerate(gens):
        try:
            z = sample_latent(spec.latent_dim, spec.batch_size, state.latent_rngs[i])
            scores: list = [None] * graph.k
            with dc.no_grad():
                for j in graph.opponents(i):
                    scores[j] = d(gens[j](z))
            g.params.zero_grad()
            with dc.Tape():
                scores[i] = d(g(z))
                loss = generator_loss(i, scores, graph, spec.loss_config)
            dc.backward(loss)
            _step(g.params, spec, spec.lr_g)
            loss_g.append(loss.item())
        except (dc.NonFiniteError, ValueError) as exc:
            raise TrainingDiverged(t, f"generator {i}", str(exc)) from exc

    state.iteration = t
    return loss_d, loss_g


def train(spec: ExperimentSpec, state: TrainState | None = None,
          progress_every: int = 0) -> TrainResult:
    """Run ``spec.iterations`` iterations; fully determined by ``spec.seed``."""
    state = state or TrainState.initial(spec)
    trace = LossTrace(spec.k)
    checkpoints: dict[tuple[int, int], np.ndarray] = {}
    want = set(spec.checkpoint_iters)
    eval_rng = stream(spec.seed, _EVAL)
    for _ in range(spec.iterations):
        # overflow surfaces as NonFiniteError, so numpy's own warning is noise
        with np.errstate(over="ignore", invalid="ignore"):
            loss_d, loss_g = train_iteration(spec, state)
        t = state.iteration
        trace.append(t, loss_d, loss_g)
        if t in want:
            for i, g in enumerate(state.generators):
                checkpoints[t, i] = sample_generator(g, spec.latent_dim, spec.checkpoint_batch, eval_rng)
        if progress_every and t % progress_every == 0:
            log.info("%s seed=%d iter=%d loss_d=%.4f loss_g=%s", spec.variant, spec.seed, t,
                     loss_d, " ".join(f"{v:.4f}" for v in loss_g))
    return TrainResult(spec, state, trace, checkpoints)

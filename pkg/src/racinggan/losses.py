"""Discriminator and hinge-coupled generator objectives.

Generator ``i`` is scored by the non-saturating loss ``-mean(log D(G_i(z)))``.
Each edge ``(i, j)`` of a :class:`CouplingGraph` adds a per-sample hinge
comparing ``D(G_i(z))`` against ``D(G_j(z))``; the opponent's scores are
constants. Which side of the comparison pays is set by ``hinge_convention``:

``lag_penalty``
    ``max(0, d_j - d_i)``: generator ``i`` pays when it trails ``j``.
``lead_penalty``
    ``max(0, d_i - d_j)``: generator ``i`` pays when it leads ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Sequence

import numpy as np

from . import diffcore as dc
from .diffcore import Tensor

FORMULATIONS = ("standard_bce", "paper_literal")
HINGE_CONVENTIONS = ("lag_penalty", "lead_penalty")


@dataclass(frozen=True)
class CouplingGraph:
    k: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.k < 1:
            raise ValueError(f"need at least one generator, got k={self.k}")
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-edge ({i}, {j}) not allowed")
            if not (0 <= i < self.k and 0 <= j < self.k):
                raise ValueError(f"edge ({i}, {j}) out of range for k={self.k}")

    @classmethod
    def fully_connected(cls, k: int) -> "CouplingGraph":
        return cls(k, frozenset(permutations(range(k), 2)))

    @classmethod
    def empty(cls, k: int) -> "CouplingGraph":
        return cls(k)

    def opponents(self, i: int) -> list[int]:
        return sorted(j for a, j in self.edges if a == i)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True)
class LossConfig:
    formulation: str = "standard_bce"
    hinge_convention: str = "lag_penalty"

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}")
        if self.hinge_convention not in HINGE_CONVENTIONS:
            raise ValueError(
                f"hinge_convention must be one of {HINGE_CONVENTIONS}, got {self.hinge_convention!r}")


def _check_scores(t: Tensor, what: str) -> None:
    v = t.values
    # sigmoid can round to exactly 0.0 or 1.0; the safe log absorbs both
    if not (np.isfinite(v).all() and (v >= 0.0).all() and (v <= 1.0).all()):
        raise ValueError(f"{what} scores must lie in [0, 1]")


def hinge(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise ``max(0, a - b)`` with zero subgradient at ties."""
    return dc.relu(dc.sub(a, b))


def discriminator_loss(d_real: Tensor, d_fakes: Sequence[Tensor],
                       formulation: str = "standard_bce") -> Tensor:
    if len(d_fakes) == 0:
        raise ValueError("discriminator_loss needs at least one fake batch")
    if formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {formulation!r}")
    _check_scores(d_real, "real")
    loss = dc.scale(dc.mean(dc.log(d_real)), -1.0)
    for n, d_fake in enumerate(d_fakes):
        _check_scores(d_fake, f"fake[{n}]")
        if formulation == "standard_bce":
            term = dc.mean(dc.log(dc.sub(Tensor(1.0), d_fake)))
        else:
            term = dc.mean(dc.sub(Tensor(1.0), dc.log(d_fake)))
        loss = dc.sub(loss, term)
    return loss


def generator_loss(i: int, d_fakes: Sequence[Tensor], graph: CouplingGraph,
                   config: LossConfig = LossConfig()) -> Tensor:
    """Loss for generator ``i``.

    ``d_fakes[j]`` must hold D's scores of generator ``j`` on the same latent
    batch as ``d_fakes[i]``; only entries for ``i`` and its opponents are read.
    """
    if not 0 <= i < graph.k:
        raise IndexError(f"generator index {i} out of range for k={graph.k}")
    if len(d_fakes) != graph.k:
        raise ValueError(f"expected {graph.k} score batches, got {len(d_fakes)}")
    own = d_fakes[i]
    _check_scores(own, f"fake[{i}]")
    loss = dc.scale(dc.mean(dc.log(own)), -1.0)
    for j in graph.opponents(i):
        _check_scores(d_fakes[j], f"fake[{j}]")
        loss = dc.add(loss, coupling_term(own, d_fakes[j], config.hinge_convention))
    return loss


def coupling_term(own: Tensor, other: Tensor, convention: str = "lag_penalty") -> Tensor:
    """Batch mean of the per-sample hinge; ``other`` is treated as a constant."""
    other = other.detach()
    if convention == "lag_penalty":
        return dc.mean(hinge(other, own))
    if convention == "lead_penalty":
        return dc.mean(hinge(own, other))
    raise ValueError(f"unknown hinge convention {convention!r}")


def edges_from(pairs: Iterable[Sequence[int]]) -> frozenset:
    return frozenset((int(a), int(b)) for a, b in pairs)

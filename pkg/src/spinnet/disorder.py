"""Static disorder realizations of a coupling graph.

Two kinds of fabrication error are modelled: off-diagonal (every existing
coupling picks up E * d * J_ref with d drawn from a zero-mean Gaussian of
width 1/(2 sqrt 3)) and diagonal (the same perturbation lands on each
on-site energy). The scale J_ref is the global energy unit, not a per-chain
peak coupling, so retuned networks see the same absolute error level.

Reproducibility: every realization is addressed by (master seed, stream
index). The same address always yields the same graph, bit for bit, no
matter which worker draws it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import CouplingGraph

GAUSSIAN_WIDTH = 1.0 / (2.0 * math.sqrt(3.0))

KINDS = ("none", "diagonal", "off_diagonal")


@dataclass(frozen=True)
class DisorderSpec:
    """Disorder kind and dimensionless strength E."""

    kind: str = "none"
    strength: float = 0.0
    width: float = GAUSSIAN_WIDTH
    j_max_ref: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown disorder kind {self.kind!r}, expected one of {KINDS}")
        if self.strength < 0:
            raise ValueError(f"disorder strength must be >= 0, got {self.strength}")


@dataclass(frozen=True)
class SeededRng:
    """Deterministic random stream addressed by (master seed, stream index)."""

    master_seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if self.master_seed < 0 or self.stream < 0:
            raise ValueError("seed and stream index must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence((self.master_seed, self.stream))
        return np.random.Generator(np.random.PCG64(ss))


def sample_disorder(graph: CouplingGraph, spec: DisorderSpec, rng: SeededRng) -> CouplingGraph:
    """One independent disorder realization of ``graph``.

    Off-diagonal disorder perturbs existing edges only (absent couplings stay
    absent); the perturbed sign is unrestricted. The input graph is never
    mutated.
    """
    if spec.kind == "none" or spec.strength == 0.0:
        return graph
    gen = rng.generator()
    scale = spec.strength * spec.j_max_ref
    if spec.kind == "off_diagonal":
        couplings = dict(graph.couplings)
        for key in sorted(couplings):
            couplings[key] += scale * gen.normal(0.0, spec.width)
        return CouplingGraph(graph.n_sites, couplings, graph.onsite, spec=graph.spec)
    # diagonal
    eps = np.asarray(graph.onsite, dtype=float) + scale * gen.normal(
        0.0, spec.width, size=graph.n_sites
    )
    return CouplingGraph(graph.n_sites, dict(graph.couplings), eps, spec=graph.spec)

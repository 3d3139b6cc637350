"""Fidelity, two-site reduced states, concurrence / EOF, ensemble statistics.

For a pure single-excitation state the reduced state of two sites is an
X-shaped 4x4 matrix whose concurrence collapses to 2 |a_i| |a_j|; the full
Wootters pipeline is implemented anyway so mixed ensemble states work too.

Ensemble statistics keep the per-realization values and reduce them with
exactly-rounded summation, so merging partial accumulators from parallel
workers gives the same numbers in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dynamics import PureState

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)

TRACE_ATOL = 1e-8
NEGATIVITY_ATOL = 1e-10


def fidelity(state: PureState, target: PureState) -> float:
    """|<target|state>|^2 - global-phase insensitive, in [0, 1]."""
    return min(1.0, abs(target.overlap(state)) ** 2)


def reduce_two_sites(state: PureState, i: int, j: int) -> np.ndarray:
    """Reduced density matrix of sites (i, j), basis |00>, |01>, |10>, |11>.

    Qubit order is (site i, site j); |01> means the excitation sits at j.
    Everything else is traced out. With a single excitation the |11> row and
    column are identically zero.
    """
    if i == j:
        raise ValueError("need two distinct sites")
    a_i = state.amplitude(i)
    a_j = state.amplitude(j)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = max(0.0, 1.0 - abs(a_i) ** 2 - abs(a_j) ** 2)
    rho[1, 1] = abs(a_j) ** 2
    rho[2, 2] = abs(a_i) ** 2
    rho[1, 2] = a_j * np.conj(a_i)
    rho[2, 1] = a_i * np.conj(a_j)
    return rho


def concurrence(rho: np.ndarray) -> float:
    """Two-qubit concurrence of a 4x4 density matrix (Wootters form).

    C = max(0, l1 - l2 - l3 - l4) with l_k the descending square roots of
    the eigenvalues of rho (sy x sy) rho* (sy x sy). Those eigenvalues are
    computed through the similar Hermitian matrix sqrt(rho) rho~ sqrt(rho),
    which keeps the whole pipeline at Hermitian-eigensolver accuracy. Tiny
    negative eigenvalues are numerical noise and are clamped; anything
    beyond the tolerance means the input is not a density matrix.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got {rho.shape}")
    trace = complex(np.trace(rho))
    if abs(trace - 1.0) > TRACE_ATOL:
        raise ValueError(f"density matrix trace {trace} deviates from 1")
    if float(np.max(np.abs(rho - rho.conj().T))) > TRACE_ATOL:
        raise ValueError("density matrix is not Hermitian")
    w, v = np.linalg.eigh(rho)
    if float(w.min()) < -NEGATIVITY_ATOL:
        raise ValueError(f"density matrix eigenvalue {w.min()} is negative beyond tolerance")
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    # the l_k are the singular values of sqrt(rho) (sy x sy) sqrt(rho)*,
    # since B B† = sqrt(rho) rho~ sqrt(rho) is similar to rho rho~; the SVD
    # yields the square roots directly, with no noise amplification at 0
    b = sqrt_rho @ _YY @ sqrt_rho.conj()
    roots = np.linalg.svd(b, compute_uv=False)
    return float(max(0.0, roots[0] - roots[1] - roots[2] - roots[3]))


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def eof_from_concurrence(c: float) -> float:
    c = min(1.0, max(0.0, c))
    return binary_entropy((1.0 + math.sqrt(1.0 - c * c)) / 2.0)


def eof(rho: np.ndarray) -> float:
    """Entanglement of formation of a two-qubit density matrix, in [0, 1]."""
    return eof_from_concurrence(concurrence(rho))


def eof_pair(state: PureState, i: int, j: int) -> float:
    return eof(reduce_two_sites(state, i, j))


@dataclass
class EnsembleAccumulator:
    """Per-realization observable values with order-independent reduction."""

    values: list[float] = field(default_factory=list)

    def add(self, value: float) -> None:
        self.values.append(float(value))

    def extend(self, values: Iterable[float]) -> None:
        self.values.extend(float(v) for v in values)

    def merge(self, other: "EnsembleAccumulator") -> "EnsembleAccumulator":
        merged = EnsembleAccumulator(list(self.values))
        merged.values.extend(other.values)
        return merged

    @property
    def count(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        if not self.values:
            raise ValueError("no values accumulated")
        return math.fsum(self.values) / len(self.values)

    @property
    def std(self) -> float:
        """Sample standard deviation (0 for a single realization)."""
        k = len(self.values)
        if k == 0:
            raise ValueError("no values accumulated")
        first = self.values[0]
        if k == 1 or all(v == first for v in self.values):
            return 0.0
        m = self.mean
        return math.sqrt(math.fsum((v - m) ** 2 for v in self.values) / (k - 1))

    @property
    def std_of_mean(self) -> float:
        return self.std / math.sqrt(len(self.values))


def ensemble_average(values: Sequence[float]) -> tuple[float, float, float]:
    """(mean, sample std, std of the mean) of per-realization observables."""
    acc = EnsembleAccumulator()
    acc.extend(values)
    return acc.mean, acc.std, acc.std_of_mean


def ensemble_fidelity(states: Sequence[PureState], target: PureState) -> float:
    """Mean fidelity over realizations.

    For pure realizations this equals the trace form
    Tr(rho_bar |target><target|) with rho_bar the ensemble density matrix.
    """
    return ensemble_average([fidelity(s, target) for s in states])[0]


def ensemble_eof(
    states: Sequence[PureState],
    i: int,
    j: int,
    convention: str = "per_realization",
) -> float:
    """Ensemble EOF between two sites.

    ``per_realization`` (the default) averages each realization's EOF;
    ``mean_state`` first averages the reduced density matrices and takes the
    EOF of the mixture. The two differ for disordered ensembles.
    """
    if convention == "per_realization":
        return ensemble_average([eof_pair(s, i, j) for s in states])[0]
    if convention == "mean_state":
        rho = np.mean([reduce_two_sites(s, i, j) for s in states], axis=0)
        return eof(rho)
    raise ValueError(f"unknown EOF convention {convention!r}")

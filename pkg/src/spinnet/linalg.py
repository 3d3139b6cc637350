"""Dense complex Hermitian linear algebra.

Everything downstream evolves states through one spectral decomposition per
Hamiltonian: decompose once, reuse for every requested time. Matrices here
are small (tens to a few hundred sites), so a dense eigensolver is exact
enough and cheap enough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_ATOL = 1e-12


class InvariantViolation(RuntimeError):
    """A numerical invariant (hermiticity, norm conservation, ...) was broken."""


def frozen_array(a: np.ndarray) -> np.ndarray:
    """A contiguous, read-only array with the values of ``a``.

    Copies writeable input rather than freezing the caller's buffer in
    place; already-frozen arrays are shared.
    """
    a = np.ascontiguousarray(a)
    if a.flags.writeable:
        a = a.copy()
        a.setflags(write=False)
    return a


def hermiticity_defect(h: np.ndarray) -> float:
    """Largest absolute entry of h - h†."""
    if h.size == 0:
        return 0.0
    return float(np.max(np.abs(h - h.conj().T)))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigensystem of a Hermitian matrix: H = V diag(eigenvalues) V†.

    Eigenvalues are real and ascending; eigenvector k sits in column k of
    ``eigenvectors``. Within a degenerate cluster only the projector is
    well-defined, so callers must never rely on individual degenerate
    eigenvectors.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])


def eigh(h: np.ndarray, atol: float = HERMITICITY_ATOL) -> SpectralDecomposition:
    """Decompose a dense Hermitian matrix.

    Rejects matrices whose asymmetry exceeds ``atol``, reporting the worst
    offending magnitude.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    defect = hermiticity_defect(h)
    if defect > atol:
        raise InvariantViolation(
            f"matrix is not Hermitian: max asymmetry {defect:.3e} exceeds {atol:.1e}"
        )
    w, v = np.linalg.eigh(h)
    return SpectralDecomposition(frozen_array(w), frozen_array(v.astype(complex)))


def evolve(decomp: SpectralDecomposition, psi0: np.ndarray, t: float) -> np.ndarray:
    """Apply exp(-iHt) to ``psi0`` through the spectral basis (hbar = 1)."""
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (decomp.dim,):
        raise ValueError(
            f"state has shape {psi0.shape}, expected ({decomp.dim},)"
        )
    v = decomp.eigenvectors
    phases = np.exp(-1j * decomp.eigenvalues * t)
    return v @ (phases * (v.conj().T @ psi0))

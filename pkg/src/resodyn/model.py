"""Domain types and the doubled-space vector representation of states.

An N-level system lives on C^N with Hamiltonian diag(E_1 <= ... <= E_N) and a
Hermitian coupling matrix G.  Mixed states are represented as unit vectors on
C^N (x) C^N: a density matrix rho with spectral decomposition
rho = sum_j p_j |psi_j><psi_j| maps to

    Psi = sum_j sqrt(p_j) psi_j (x) C psi_j,

where C conjugates coordinates in the energy basis.  Equivalently Psi is the
coordinate vector of the matrix square root of rho, so that
<Psi, (A (x) 1) Psi> = Tr(rho A) for every observable A.  The Gibbs state
corresponds to the vector with coordinates e^{-beta E_j / 2} / sqrt(Z) on the
diagonal product-basis slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidStateError, ValidationError

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _check_hermitian(m: np.ndarray, what: str, tol: float = HERMITICITY_TOL) -> None:
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 0.0)
    if dev > tol * scale:
        raise ValidationError(f"{what} is not Hermitian (deviation {dev:.3e})")


@dataclass(frozen=True)
class SystemSpec:
    """N-level system: ascending energies and a Hermitian coupling matrix."""

    energies: tuple[float, ...]
    coupling: np.ndarray

    def __post_init__(self):
        energies = tuple(float(e) for e in self.energies)
        object.__setattr__(self, "energies", energies)
        if len(energies) < 2:
            raise ValidationError("system needs at least two levels")
        if any(b < a for a, b in zip(energies, energies[1:])):
            raise ValidationError("energies must be sorted non-decreasing")
        g = _as_readonly(self.coupling)
        if g.shape != (len(energies), len(energies)):
            raise ValidationError(
                f"coupling shape {g.shape} does not match {len(energies)} energies"
            )
        _check_hermitian(g, "coupling matrix")
        object.__setattr__(self, "coupling", g)

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.diag(np.asarray(self.energies, dtype=float))

    def partition_function(self, beta: float) -> float:
        e = np.asarray(self.energies)
        return float(np.sum(np.exp(-beta * (e - e[0]))) * math.exp(-beta * e[0]))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite N x N matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_readonly(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("density matrix must be square")
        _check_hermitian(m, "density matrix")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL * max(1.0, abs(tr)):
            raise ValidationError(f"density matrix trace {tr:.12g} != 1")
        evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if evals.min() < -PSD_TOL:
            raise InvalidStateError(
                f"density matrix has negative eigenvalue {evals.min():.3e}"
            )
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SystemVector:
    """Vector on C^N (x) C^N in the energy product basis phi_m (x) phi_n.

    Coordinate (m, n) sits at flat index m*N + n (row-major).
    """

    coords: np.ndarray

    def __post_init__(self):
        v = _as_readonly(np.ravel(self.coords))
        n = math.isqrt(v.size)
        if n * n != v.size:
            raise ValidationError(f"vector length {v.size} is not a perfect square")
        object.__setattr__(self, "coords", v)

    @property
    def dim(self) -> int:
        return math.isqrt(self.coords.size)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def as_matrix(self) -> np.ndarray:
        n = self.dim
        return self.coords.reshape(n, n)


@dataclass(frozen=True)
class ThermalConfig:
    """Inverse temperature, coupling constant, and translation-strip width.

    ``omega_prime`` must lie strictly inside (0, 2*pi/beta); it only enters
    the reported remainder envelopes, not the computed resonance data.
    """

    beta: float
    coupling_constant: float
    omega_prime: float | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValidationError("beta must be positive", field="thermal.beta")
        w = self.omega_prime
        if w is None:
            w = math.pi / self.beta
            object.__setattr__(self, "omega_prime", w)
        if not 0 < w < 2 * math.pi / self.beta:
            raise ValidationError(
                f"omega_prime = {w:g} must lie in (0, 2*pi/beta) = (0, {2 * math.pi / self.beta:g})",
                field="thermal.omega_prime",
            )

    @property
    def lam(self) -> float:
        return self.coupling_constant


@dataclass(frozen=True)
class Observable:
    """System operator; need not be Hermitian (matrix-element extractors)."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_readonly(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("observable must be a square matrix")
        if not np.all(np.isfinite(m.view(float))):
            raise ValidationError("observable has non-finite entries")
        object.__setattr__(self, "entries", m)

    @classmethod
    def matrix_unit(cls, n: int, m: int, dim: int) -> "Observable":
        """|phi_n><phi_m| (0-based); extracts [rho]_{m,n} as an expectation."""
        a = np.zeros((dim, dim), dtype=complex)
        a[n, m] = 1.0
        return cls(a)


def gns_vector(rho: DensityMatrix) -> SystemVector:
    """Vector representative of a density matrix on the doubled space.

    Returns the coordinate vector of sqrt(rho); any orthonormal eigenbasis of
    a degenerate rho yields the same vector.
    """
    evals, vecs = np.linalg.eigh(rho.entries)
    if evals.min() < -PSD_TOL:
        raise InvalidStateError(
            f"density matrix has negative eigenvalue {evals.min():.3e}"
        )
    root = (vecs * np.sqrt(np.clip(evals, 0.0, None))) @ vecs.conj().T
    return SystemVector(root.reshape(-1))


def gibbs_vector(sys: SystemSpec, beta: float) -> SystemVector:
    """Unit vector representing the Gibbs state at inverse temperature beta."""
    if not beta > 0:
        raise ValidationError("beta must be positive")
    e = np.asarray(sys.energies)
    w = np.exp(-beta * (e - e[0]) / 2.0)
    w /= np.linalg.norm(w)
    n = sys.dim
    coords = np.zeros(n * n, dtype=complex)
    coords[np.arange(n) * n + np.arange(n)] = w
    return SystemVector(coords)


def gibbs_weights(sys: SystemSpec, beta: float) -> np.ndarray:
    """Normalized Boltzmann weights e^{-beta E_j} / Z."""
    e = np.asarray(sys.energies)
    w = np.exp(-beta * (e - e[0]))
    return w / w.sum()


def commutant_factor(psi0: SystemVector, sys: SystemSpec, beta: float) -> np.ndarray:
    """Second-factor matrix B' with (1 (x) B') Omega_{S,beta} = psi0.

    B' exists and is unique because every Gibbs weight is positive; the
    result is validated by reconstructing psi0 to 1e-10.
    """
    n = sys.dim
    if psi0.dim != n:
        raise ValidationError("psi0 dimension does not match system")
    e = np.asarray(sys.energies)
    w = np.exp(-beta * (e - e[0]) / 2.0)
    w /= np.linalg.norm(w)
    psi_mat = psi0.as_matrix()
    # coefficient of phi_j (x) phi_k in (1 (x) B')Omega is w_j * B'[k, j]
    bprime = (psi_mat / w[:, None]).T.copy()
    recon = (psi_mat_from_bprime(bprime, w)).reshape(-1)
    dev = np.max(np.abs(recon - psi0.coords))
    if dev > RECONSTRUCTION_TOL * max(1.0, psi0.norm):
        raise ValidationError(f"commutant factor reconstruction failed ({dev:.3e})")
    return bprime


def psi_mat_from_bprime(bprime: np.ndarray, gibbs_amplitudes: np.ndarray) -> np.ndarray:
    """Matrix of (1 (x) B') applied to the Gibbs vector with given amplitudes."""
    return gibbs_amplitudes[:, None] * bprime.T


@dataclass(frozen=True)
class SpinBosonParameters:
    """Energy-basis coupling data of the spin-boson Hamiltonian."""

    gap: float
    a: float
    b: float
    c: float


def spin_boson_map(epsilon_bias: float, delta0: float) -> SpinBosonParameters:
    """Map spin-boson (bias, tunneling) onto the energy-basis coupling (a, b, c).

    The system Hamiltonian (1/2)[[eps, -Delta0], [-Delta0, -eps]] has gap
    Delta = sqrt(eps^2 + Delta0^2); the sigma_z coupling becomes, in the
    ascending-energy eigenbasis,

        a = -b = -|eps| / Delta,    c = |Delta0| / (2 Delta).

    Both limits eps -> 0 (a = b = 0, c = 1/2) and Delta0 -> 0 (c = 0,
    a = -b = -1) are taken analytically, and a^2 + 4 c^2 = 1 always.
    """
    if epsilon_bias == 0.0 and delta0 == 0.0:
        raise ValidationError("spin-boson map undefined at (0, 0)")
    gap = math.hypot(epsilon_bias, delta0)
    a = -abs(epsilon_bias) / gap
    c = abs(delta0) / (2.0 * gap)
    return SpinBosonParameters(gap=gap, a=a, b=-a, c=c)


def coupling_split(coupling: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a Hermitian matrix into its diagonal and off-diagonal parts."""
    g = np.asarray(coupling, dtype=complex)
    _check_hermitian(g, "coupling matrix")
    gd = np.diag(np.diag(g))
    return gd, g - gd

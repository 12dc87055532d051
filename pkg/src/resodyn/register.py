"""Qubit registers: independent-reservoir products and collective coupling.

Two limiting placements of an L-qubit register in a reservoir:

* independent: each qubit couples to its own reservoir copy, so the register
  density matrix is the tensor product of single-qubit trajectories,
  [rho_t]_{m,n} = prod_j [rho_{j,t}]_{m_j, n_j}; entries are produced lazily
  to avoid 4^L storage.

* collective: all qubits couple to one reservoir through G_tot = sum_j G_j,
  giving a 2^L-level system that feeds the general level-shift machinery
  unchanged.  Pairs of basis states whose level-shift eigenvalues have zero
  imaginary part span coherence-preserving (decoherence-free) directions;
  for diagonal couplings these are exactly the pairs with equal total
  coupling weight.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .dynamics import ResonanceDynamics, Trajectory
from .errors import ValidationError
from .lso import lso_eigensystem
from .model import DensityMatrix, SystemSpec, ThermalConfig
from .spectral import CorrelationSet, FormFactor

DENSE_CAP = 10


@dataclass(frozen=True)
class RegisterSpec:
    """L qubits with shared gap(s) and a shared 2x2 coupling matrix."""

    L: int
    delta: float | tuple[float, ...]
    coupling: np.ndarray
    mode: str = "independent"

    def __post_init__(self):
        if self.L < 1:
            raise ValidationError("register needs L >= 1")
        if self.mode not in ("independent", "collective"):
            raise ValidationError(f"unknown register mode {self.mode!r}")
        deltas = self.delta
        if np.isscalar(deltas):
            deltas = (float(deltas),) * self.L
        else:
            deltas = tuple(float(d) for d in deltas)
        if len(deltas) != self.L or any(d <= 0 for d in deltas):
            raise ValidationError("need one positive gap per qubit")
        object.__setattr__(self, "delta", deltas)
        g = np.array(self.coupling, dtype=complex)
        if g.shape != (2, 2):
            raise ValidationError("register coupling must be a 2x2 matrix")
        g.setflags(write=False)
        object.__setattr__(self, "coupling", g)

    def qubit_system(self, j: int) -> SystemSpec:
        return SystemSpec((0.0, self.delta[j]), self.coupling)


@dataclass(frozen=True)
class CollectiveRegister:
    """2^L-level system from collective coupling, with its basis bookkeeping.

    ``labels[i]`` is the bit tuple of the i-th (energy-sorted) basis state.
    """

    system: SystemSpec
    labels: tuple[tuple[int, ...], ...]

    def index(self, bits) -> int:
        return self.labels.index(tuple(bits))


def collective_system(reg: RegisterSpec, *, dim_cap: int = 12) -> CollectiveRegister:
    """Assemble H = sum_j H_j and G_tot = sum_j G_j on the sorted product basis."""
    if reg.L > dim_cap:
        raise ValidationError(f"collective register dimension 2^{reg.L} exceeds cap 2^{dim_cap}")
    n = 2**reg.L
    bits = list(itertools.product((0, 1), repeat=reg.L))
    energies = np.array([sum(b * d for b, d in zip(bs, reg.delta)) for bs in bits])
    eye = np.eye(2, dtype=complex)
    g_tot = np.zeros((n, n), dtype=complex)
    for j in range(reg.L):
        factors = [eye] * reg.L
        factors[j] = np.asarray(reg.coupling)
        g_tot += reduce(np.kron, factors)
    order = np.argsort(energies, kind="stable")
    labels = tuple(bits[i] for i in order)
    g_sorted = g_tot[np.ix_(order, order)]
    return CollectiveRegister(
        system=SystemSpec(tuple(energies[order]), g_sorted), labels=labels)


class IndependentRegisterTrajectory:
    """Product-form register trajectory with lazy entry access."""

    def __init__(self, reg: RegisterSpec, qubit_trajectories: list[Trajectory]):
        self.reg = reg
        self.qubit_trajectories = qubit_trajectories
        self.times = qubit_trajectories[0].times

    def entry(self, m, n) -> np.ndarray:
        """[rho_t]_{m,n} over the grid for multi-indices m, n in {0,1}^L."""
        m, n = tuple(m), tuple(n)
        if len(m) != self.reg.L or len(n) != self.reg.L:
            raise ValidationError("multi-indices must have one bit per qubit")
        out = np.ones(self.times.size, dtype=complex)
        for j, traj in enumerate(self.qubit_trajectories):
            out *= traj.rho[:, m[j], n[j]]
        return out

    def dense(self, cap: int = DENSE_CAP) -> Trajectory:
        """Full 2^L x 2^L trajectory; refuses above the dense cap."""
        if self.reg.L > cap:
            raise ValidationError(
                f"dense register output capped at L = {cap}; use entry() access")
        rho = self.qubit_trajectories[0].rho
        for traj in self.qubit_trajectories[1:]:
            rho = np.einsum("tab,tcd->tacbd", rho, traj.rho).reshape(
                rho.shape[0], rho.shape[1] * 2, rho.shape[2] * 2)
        return Trajectory(times=self.times, rho=rho)


def independent_register_trajectory(reg: RegisterSpec, rho0_list, times,
                                    form_factor: FormFactor,
                                    thermal: ThermalConfig) -> IndependentRegisterTrajectory:
    """Per-qubit resonance trajectories combined as a lazy product."""
    if reg.mode != "independent":
        raise ValidationError("register is not in independent mode")
    if len(rho0_list) != reg.L:
        raise ValidationError("need one initial state per qubit")
    trajectories = []
    for j, rho0 in enumerate(rho0_list):
        engine = ResonanceDynamics(reg.qubit_system(j), form_factor, thermal)
        rho0 = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(np.asarray(rho0))
        trajectories.append(engine.reduced_density_trajectory(rho0, times))
    return IndependentRegisterTrajectory(reg, trajectories)


@dataclass(frozen=True)
class CoherentDirection:
    """One level-shift eigenvector with (near-)real eigenvalue."""

    e: float
    delta: complex
    pair_labels: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    vector: tuple[complex, ...]


@dataclass(frozen=True)
class CoherentSubspaceReport:
    """Coherence-preserving directions of a collective register."""

    threshold: float
    directions: tuple[CoherentDirection, ...]
    total_modes: int

    def pairs(self) -> set[tuple[tuple[int, ...], tuple[int, ...]]]:
        """Basis pairs supporting some coherence-preserving direction."""
        out = set()
        for d in self.directions:
            for (lbl, coeff) in zip(d.pair_labels, d.vector):
                if abs(coeff) > 1e-12:
                    out.add(lbl)
        return out

    def to_json_obj(self) -> dict:
        return {
            "threshold": self.threshold,
            "total_modes": self.total_modes,
            "directions": [
                {"e": d.e, "delta": [d.delta.real, d.delta.imag],
                 "pairs": [["".join(map(str, a)), "".join(map(str, b))]
                           for a, b in d.pair_labels],
                 "vector": [[c.real, c.imag] for c in d.vector]}
                for d in self.directions
            ],
        }


def coherent_subspace_report(reg: RegisterSpec, form_factor: FormFactor, beta: float,
                             *, threshold: float | None = None,
                             bohr_tol: float | None = None) -> CoherentSubspaceReport:
    """Classify level-shift eigenvalues of the collective register by Im delta.

    Eigendirections with |Im delta| below the threshold (default 1e-10 times
    the eigenvalue scale) preserve their coherence; the report does not
    depend on the coupling constant.
    """
    if reg.mode != "collective":
        raise ValidationError("coherent subspaces are defined for collective mode")
    collective = collective_system(reg)
    from .lso import bohr_frequencies, level_shift

    corr = CorrelationSet(form_factor, beta)
    directions = []
    total = 0
    all_deltas = []
    systems = []
    for bohr in bohr_frequencies(collective.system, bohr_tol):
        op = level_shift(collective.system, form_factor, beta, bohr, correlations=corr)
        system = lso_eigensystem(op)
        systems.append((bohr, system))
        all_deltas.extend(d for d, _, _ in system)
        total += len(system)
    scale = max((abs(d) for d in all_deltas), default=0.0)
    thr = threshold if threshold is not None else 1e-10 * max(scale, 1.0)
    for bohr, system in systems:
        labels = tuple((collective.labels[m], collective.labels[n]) for m, n in bohr.pairs)
        for d, eta, _ in system:
            if abs(d.imag) < thr:
                directions.append(CoherentDirection(
                    e=bohr.e, delta=d, pair_labels=labels,
                    vector=tuple(complex(x) for x in eta)))
    return CoherentSubspaceReport(threshold=thr, directions=tuple(directions),
                                  total_modes=total)

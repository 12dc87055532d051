"""Resonance expansion of observable averages and density-matrix trajectories.

At leading order in the coupling constant every average evolves as a finite
exponential sum over resonance modes,

    <A>_t = sum_{e,s} exp(i t eps_e^(s)) * a_e^(s)(A, psi0),

with amplitudes

    a_e^(s) = < (1 (x) B'^dagger) psi0, eta_e^(s) > * < eta~_e^(s), (A (x) 1) Omega_{S,beta} >,

where B' reconstructs the initial vector from the Gibbs vector.  The modes
with eps = 0 sum to the ergodic mean; all eps have nonnegative imaginary
part, so trajectories stay bounded and decaying modes relax on time scales
1 / Im(eps).  Populations, trace and Hermiticity are preserved exactly at
this order: summing the amplitudes over a complete biorthogonal system
reproduces the t = 0 state identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .lso import (
    BohrFrequency,
    LevelShiftOperator,
    ResonanceMode,
    ResonanceSet,
    bohr_frequencies,
    level_shift,
    lso_eigensystem,
    resonance_energies,
)
from .model import (
    DensityMatrix,
    Observable,
    SystemSpec,
    SystemVector,
    ThermalConfig,
    commutant_factor,
    gns_vector,
)
from .spectral import CorrelationSet, FormFactor

TRACE_HERMITICITY_TOL = 1e-10


@dataclass(frozen=True)
class ResonanceExpansion:
    """Exponential-sum representation of one observable's average."""

    terms: tuple[tuple[complex, complex], ...]   # (epsilon, amplitude)
    ergodic_mean: complex
    remainder_bound_exponent: float              # omega' / 2
    remainder_pole_rate: float                   # (max Im eps + omega'/2) / 2

    def value(self, times: np.ndarray) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        out = np.full(t.shape, self.ergodic_mean, dtype=complex)
        for eps, amp in self.terms:
            if eps != 0:
                out += amp * np.exp(1j * t * eps)
        return out

    def remainder_envelope(self, times: np.ndarray, lam: float) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        return lam * lam * np.exp(-t * self.remainder_pole_rate)

    @property
    def amplitude_bound(self) -> float:
        return abs(self.ergodic_mean) + sum(abs(a) for e, a in self.terms if e != 0)


@dataclass(frozen=True)
class ObservableEvolution:
    times: np.ndarray
    values: np.ndarray
    expansion: ResonanceExpansion


@dataclass(frozen=True)
class RateSummary:
    """Thermalization/decoherence time scales; math.inf marks frozen modes."""

    tau_thermalization: float
    tau_decoherence: float
    ratio: float
    per_frequency: tuple[tuple[float, float], ...] = ()   # (e, decay time)


@dataclass(frozen=True)
class Trajectory:
    """Time-sampled reduced density matrix with rate metadata."""

    times: np.ndarray
    rho: np.ndarray                       # (T, N, N)
    rates: RateSummary | None = None
    remainder_envelope: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        r = np.asarray(self.rho, dtype=complex)
        if r.ndim != 3 or r.shape[0] != t.size or r.shape[1] != r.shape[2]:
            raise ValidationError("trajectory arrays have inconsistent shapes")
        tr_dev = np.max(np.abs(np.trace(r, axis1=1, axis2=2) - 1.0))
        herm_dev = np.max(np.abs(r - np.conj(np.swapaxes(r, 1, 2))))
        if tr_dev > TRACE_HERMITICITY_TOL or herm_dev > TRACE_HERMITICITY_TOL:
            raise ValidationError(
                f"trajectory violates trace/Hermiticity ({tr_dev:.2e}, {herm_dev:.2e})"
            )
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "rho", r)

    @property
    def dim(self) -> int:
        return self.rho.shape[1]

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.einsum("tii->ti", self.rho))

    def offdiagonal(self, m: int, n: int) -> np.ndarray:
        return self.rho[:, m, n]


def rates(res: ResonanceSet) -> RateSummary:
    """Decay time scales from a resonance set.

    For a qubit, tau_T = 1/Im eps_0^(2) and tau_D = 1/Im eps_Delta; the
    general-N summary lists [Im eps]^{-1} per Bohr frequency (slowest mode).
    """
    def decay(im: float) -> float:
        return 1.0 / im if im > 0 else math.inf

    per_e = {e: max(decay(m.epsilon.imag) for m in res.modes if m.e == e)
             for e in {m.e for m in res.modes}}

    tau_t = tau_d = math.inf
    if res.dim == 2:
        moving = [m for m in res.modes if m.e == 0.0 and m.s > 1]
        if moving:
            tau_t = decay(max(m.epsilon.imag for m in moving))
        gap_modes = [m for m in res.modes if m.e > 0.0]
        if gap_modes:
            tau_d = decay(max(m.epsilon.imag for m in gap_modes))
    if math.isinf(tau_t):
        ratio = math.inf
    elif math.isinf(tau_d):
        ratio = 0.0
    else:
        ratio = tau_t / tau_d
    return RateSummary(tau_thermalization=tau_t, tau_decoherence=tau_d, ratio=ratio,
                       per_frequency=tuple(sorted(per_e.items())))


def amplitude(A: Observable, mode: ResonanceMode, psi0: SystemVector,
              b_factor: np.ndarray, sys: SystemSpec, beta: float) -> complex:
    """Leading-order amplitude of one resonance mode for one observable.

    The reservoir factor collapses onto the vacuum; both inner products are
    evaluated on C^N (x) C^N.
    """
    n = sys.dim
    psi_adj = (psi0.as_matrix() @ b_factor.conj()).reshape(-1)
    e = np.asarray(sys.energies)
    w = np.exp(-beta * (e - e[0]) / 2.0)
    w /= np.linalg.norm(w)
    a_omega = (A.entries * w[None, :]).reshape(-1)
    return complex(np.vdot(psi_adj, mode.eta) * np.vdot(mode.eta_tilde, a_omega))


class ResonanceDynamics:
    """Pipeline from a system + reservoir description to resonance dynamics.

    Bundles the correlation integrals, Bohr frequencies, level shift
    operators, eigensystems, and resonance energies; exposes observable
    evolution, reduced-density-matrix trajectories, ergodic averages, and
    rate summaries.  All intermediate data are computed once and cached;
    the object itself is immutable after construction.
    """

    def __init__(self, system: SystemSpec, form_factor: FormFactor,
                 thermal: ThermalConfig, *, bohr_tol: float | None = None,
                 threads: int | None = None):
        self.system = system
        self.form_factor = form_factor
        self.thermal = thermal
        self._bohr_tol = bohr_tol
        self._threads = threads

    @cached_property
    def correlations(self) -> CorrelationSet:
        return CorrelationSet(self.form_factor, self.thermal.beta)

    @cached_property
    def bohr(self) -> list[BohrFrequency]:
        return bohr_frequencies(self.system, self._bohr_tol)

    @cached_property
    def level_shifts(self) -> dict[float, LevelShiftOperator]:
        def build(b):
            return level_shift(self.system, self.form_factor, self.thermal.beta, b,
                               correlations=self.correlations)

        if self._threads and self._threads > 1 and len(self.bohr) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=self._threads) as pool:
                ops = list(pool.map(build, self.bohr))
        else:
            ops = [build(b) for b in self.bohr]
        return {op.e: op for op in ops}

    @cached_property
    def resonances(self) -> ResonanceSet:
        systems = [(op, lso_eigensystem(op)) for op in self.level_shifts.values()]
        return resonance_energies(systems, self.thermal.lam, dim=self.system.dim,
                                  beta=self.thermal.beta)

    # -- initial-state plumbing ---------------------------------------------

    def _prepare_state(self, rho0: DensityMatrix | None = None,
                       psi0: SystemVector | None = None):
        if (rho0 is None) == (psi0 is None):
            raise ValidationError("provide exactly one of rho0 or psi0")
        vec = gns_vector(rho0) if psi0 is None else psi0
        bprime = commutant_factor(vec, self.system, self.thermal.beta)
        return vec, bprime

    def expansion(self, A: Observable, rho0: DensityMatrix | None = None,
                  psi0: SystemVector | None = None) -> ResonanceExpansion:
        vec, bprime = self._prepare_state(rho0, psi0)
        return self._expansion(A, vec, bprime)

    def _expansion(self, A: Observable, vec: SystemVector, bprime: np.ndarray) -> ResonanceExpansion:
        terms = []
        mean = 0.0 + 0.0j
        for mode in self.resonances.modes:
            amp = amplitude(A, mode, vec, bprime, self.system, self.thermal.beta)
            if mode.epsilon == 0:
                mean += amp
            terms.append((mode.epsilon, amp))
        max_im = self.resonances.max_im_epsilon
        wp = self.thermal.omega_prime
        return ResonanceExpansion(
            terms=tuple(terms), ergodic_mean=mean,
            remainder_bound_exponent=wp / 2.0,
            remainder_pole_rate=0.5 * (max_im + wp / 2.0),
        )

    # -- public operations ---------------------------------------------------

    def evolve_observable(self, A: Observable, times, rho0: DensityMatrix | None = None,
                          psi0: SystemVector | None = None) -> ObservableEvolution:
        t = np.asarray(times, dtype=float)
        exp = self.expansion(A, rho0, psi0)
        values = exp.value(t)
        bound = exp.amplitude_bound + 1e-9
        if np.any(np.abs(values) > bound):
            raise ValidationError("observable average exceeded its amplitude bound")
        return ObservableEvolution(times=t, values=values, expansion=exp)

    def reduced_density_trajectory(self, rho0: DensityMatrix, times) -> Trajectory:
        """Trajectory of the reduced density matrix on the given time grid.

        Upper-triangle entries (and all but the last population) come from
        the resonance expansion of the matrix-element extractors p_{n,m};
        the rest are filled by Hermiticity and unit trace.
        """
        t = np.asarray(times, dtype=float)
        n = self.system.dim
        vec, bprime = self._prepare_state(rho0=rho0)
        rho = np.zeros((t.size, n, n), dtype=complex)
        for m in range(n):
            for k in range(m, n):
                if m == k == n - 1:
                    continue
                # entry (m, k) of rho equals <p_{k,m}>_t
                obs = Observable.matrix_unit(k, m, n)
                vals = self._expansion(obs, vec, bprime).value(t)
                rho[:, m, k] = vals
                if k != m:
                    rho[:, k, m] = np.conj(vals)
        diag_sum = np.einsum("tii->t", rho)
        rho[:, n - 1, n - 1] = 1.0 - diag_sum
        rho[:, n - 1, n - 1] = np.real(rho[:, n - 1, n - 1])
        rate_summary = rates(self.resonances)
        wp = self.thermal.omega_prime
        env = (self.thermal.lam ** 2
               * np.exp(-t * 0.5 * (self.resonances.max_im_epsilon + wp / 2.0)))
        return Trajectory(times=t, rho=rho, rates=rate_summary, remainder_envelope=env)

    def ergodic_average(self, A: Observable, rho0: DensityMatrix | None = None,
                        psi0: SystemVector | None = None) -> complex:
        return self.expansion(A, rho0, psi0).ergodic_mean

    def rates(self) -> RateSummary:
        return rates(self.resonances)

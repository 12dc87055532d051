"""Exactly solvable energy-conserving (non-demolition) model.

When the coupling matrix is diagonal, G = diag(gamma_1, ..., gamma_N), the
reduced density matrix has the closed form

    rho_t[m, n] = rho_0[m, n] * exp(-i t (E_m - E_n) + i lam^2 alpha_{m,n}(t)),
    alpha_{m,n}(t) = (gamma_m^2 - gamma_n^2) S(t) + i (gamma_m - gamma_n)^2 Gamma(t),

with the decoherence function and phase integral

    Gamma(t) = int |g|^2 coth(beta w / 2) sin^2(w t / 2) / w^2 d^dk,
    S(t)     = (1/2) int |g|^2 (w t - sin(w t)) / w^2 d^dk.

Populations are exactly constant.  As t -> infinity, alpha_{m,n}(t)/t tends
to the generator

    (1/2)(gamma_m^2 - gamma_n^2) <g, w^{-1} g>
        + i (gamma_m - gamma_n)^2 * (pi/4) xi(0),

which coincides (up to the eps = e - lam^2 delta sign pairing) with the
level-shift eigenvalues of the general machinery; this module is the ground
truth the resonance pipeline is validated against.

The radial integrals peel off the 1/w and 1/w^2 infrared behaviour against
exp(-w) envelopes with closed-form transforms (arctan / log kernels) and
evaluate the smooth remainders with oscillatory (QAWO) quadrature, so large
times cost no more than small ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._special import coth, xcoth_m1
from .dynamics import Trajectory
from .errors import DivergentIntegralError, ValidationError
from .model import DensityMatrix, SystemSpec
from .spectral import FormFactor, _quad, _quad_osc


@dataclass(frozen=True)
class DephasingModel:
    """Diagonal-coupling N-level system in a thermal reservoir."""

    gammas: tuple[float, ...]
    energies: tuple[float, ...]
    form_factor: FormFactor
    beta: float
    lam: float

    def __post_init__(self):
        gammas = tuple(float(x) for x in self.gammas)
        energies = tuple(float(x) for x in self.energies)
        if len(gammas) != len(energies) or len(gammas) < 2:
            raise ValidationError("need matching gamma/energy lists with N >= 2")
        if any(b <= a for a, b in zip(energies, energies[1:])):
            raise ValidationError("dephasing energies must be strictly increasing")
        if not self.beta > 0:
            raise ValidationError("beta must be positive")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "energies", energies)

    @property
    def dim(self) -> int:
        return len(self.gammas)

    @property
    def system(self) -> SystemSpec:
        return SystemSpec(self.energies, np.diag(np.asarray(self.gammas, dtype=complex)))

    @classmethod
    def from_system(cls, sys: SystemSpec, form_factor: FormFactor, beta: float,
                    lam: float) -> "DephasingModel":
        off = sys.coupling - np.diag(np.diag(sys.coupling))
        if np.max(np.abs(off)) > 0:
            raise ValidationError("dephasing model requires a diagonal coupling matrix")
        return cls(tuple(np.real(np.diag(sys.coupling))), sys.energies, form_factor,
                   beta, lam)

    @cached_property
    def _kernel(self) -> "_RadialKernel":
        return _RadialKernel(self.form_factor, self.beta)


class _RadialKernel:
    """Infrared-split radial integrand machinery shared by Gamma and S.

    Writes h(r) = r^{d-1} |g(r)|^2 coth(beta r / 2) (angular weight included)
    as f0*e^{-r} + c1*r*e^{-r} + htilde(r) with htilde = O(r^2), so that the
    singular 1/r^2 and 1/r kernels integrate in closed form against the
    exponential pieces and the remainder is QAWO-friendly.
    """

    def __init__(self, g: FormFactor, beta: float):
        if g.family != "power_exp":
            raise ValidationError("closed-form dephasing integrals need a power_exp form factor")
        q0 = g.zero_exponent
        if q0 <= -1 + 1e-12:
            raise DivergentIntegralError(
                "decoherence function diverges for p <= -d/2 infrared behaviour",
                term="gamma_decoherence")
        if abs(q0 - round(q0)) > 1e-9 or round(q0) < 0:
            raise DivergentIntegralError(
                f"infrared exponent gives non-admissible small-r power q0 = {q0:g}",
                term="gamma_decoherence")
        self.g = g
        self.beta = beta
        self.q0 = int(round(q0))
        self.weight = g.angular_weight
        # h(r) = scale * r^q0 * exp(-2 r^m) * u(beta r / 2), u(x) = x coth x
        self.scale = 2.0 * g.amplitude**2 / beta * self.weight
        self.rmax = max(g.support_radius, math.log(1.0 / 1e-18) + 1.0)
        if self.q0 == 0:
            self.f0 = self.scale
            self.c1 = self.scale * (-2.0 if g.m == 1 else 0.0) + self.f0
        elif self.q0 == 1:
            self.f0 = 0.0
            self.c1 = self.scale
        else:
            self.f0 = 0.0
            self.c1 = 0.0

    def h(self, r):
        r = np.asarray(r, dtype=float)
        x = self.beta * r / 2.0
        return self.scale * r**self.q0 * np.exp(-2.0 * r**self.g.m) * (1.0 + xcoth_m1(x))

    def htilde_over_r2(self, r):
        """(h(r) - f0 e^{-r} - c1 r e^{-r}) / r^2, stable down to r = 0."""
        r = np.asarray(r, dtype=float)
        u1 = xcoth_m1(self.beta * r / 2.0)
        env = np.exp(-2.0 * r**self.g.m)
        if self.q0 == 0:
            if self.g.m == 1:
                # e^{-r} [ (e^{-r} u1) + (expm1(-r) + r) ] / r^2 * scale
                inner = env * np.exp(r) * u1 + (np.expm1(-r) + r)
                core = np.exp(-r) * inner
            else:
                # (e^{-2r^2} U - 1) - (expm1(-r) + r) - r expm1(-r)
                core = (np.expm1(-2.0 * r**2) + env * u1
                        - (np.expm1(-r) + r) - r * np.expm1(-r))
            with np.errstate(invalid="ignore", divide="ignore"):
                out = self.scale * np.where(r > 0, core / np.where(r > 0, r * r, 1.0), self._h2_zero())
            return out if out.ndim else float(out)
        if self.q0 == 1:
            if self.g.m == 1:
                diff = np.exp(-r) * np.expm1(-r)
            else:
                diff = np.expm1(-2.0 * r**2) - np.expm1(-r)
            core = diff + env * u1
            with np.errstate(invalid="ignore", divide="ignore"):
                out = self.scale * np.where(r > 0, core / np.where(r > 0, r, 1.0), self._h2_zero())
            return out if out.ndim else float(out)
        out = self.scale * r ** (self.q0 - 2) * env * (1.0 + u1)
        return out if out.ndim else float(out)

    def _h2_zero(self) -> float:
        """r -> 0 limit of htilde / r^2 (per unit scale)."""
        b2 = self.beta**2 / 12.0
        if self.q0 == 0:
            return (0.5 + b2) if self.g.m == 1 else (b2 - 1.5)
        if self.q0 == 1:
            return -1.0 if self.g.m == 1 else 1.0
        return 1.0 if self.q0 == 2 else 0.0

    @cached_property
    def q_const(self) -> float:
        return _quad(lambda r: float(self.htilde_over_r2(r)), 0.0, self.rmax, points=[1.0])

    def q_cos(self, t: float) -> float:
        return _quad_osc(lambda r: float(self.htilde_over_r2(r)), 0.0, self.rmax, t, "cos")

    def gamma(self, t: float) -> float:
        """Gamma(t) = int_0^rmax h(r) sin^2(r t / 2) / r^2 dr (angular included)."""
        if t == 0.0:
            return 0.0
        at = abs(t)
        i2 = 0.5 * (at * math.atan(at) - 0.5 * math.log1p(at * at))
        i1 = 0.25 * math.log1p(at * at)
        return (self.f0 * i2 + self.c1 * i1
                + 0.5 * self.q_const - 0.5 * self.q_cos(at))

    # -- phase integral pieces ---------------------------------------------

    @cached_property
    def w_inv(self) -> float:
        """<g, omega^{-1} g> with the same truncation as the other kernels."""
        q = self.q0

        def f(r):
            return self.weight * self.g.amplitude**2 * r**q * math.exp(-2.0 * r**self.g.m)

        return _quad(f, 0.0, self.rmax, points=[1.0])

    def psi_sin(self, t: float) -> float:
        """int_0^inf r^{d-1} |g|^2 sin(r t) / r^2 dr (angular included)."""
        qs = self.q0 - 1
        amp2 = self.weight * self.g.amplitude**2
        if qs == -1:
            if self.g.m == 1:
                def rem(r):
                    return amp2 * (np.expm1(-r) * math.exp(-r) / r if r > 0 else -1.0)
            else:
                def rem(r):
                    return amp2 * ((np.expm1(-2.0 * r**2) - np.expm1(-r)) / r if r > 0 else 1.0)
            return amp2 * math.atan(t) + _quad_osc(rem, 0.0, self.rmax, t, "sin")

        def f(r):
            return amp2 * r**qs * math.exp(-2.0 * r**self.g.m)

        return _quad_osc(f, 0.0, self.rmax, t, "sin")

    def s_phase(self, t: float) -> float:
        if t == 0.0:
            return 0.0
        sign = 1.0 if t > 0 else -1.0
        at = abs(t)
        return sign * 0.5 * (at * self.w_inv - self.psi_sin(at))


def gamma_decoherence(model: DephasingModel, t: float) -> float:
    """Decoherence function Gamma(t) >= 0 with Gamma(0) = 0.

    Grows linearly (slope (pi/4) xi(0)) exactly at the infrared threshold
    p = (2-d)/2, stays bounded above it.
    """
    if t < 0:
        raise ValidationError("t must be >= 0")
    return model._kernel.gamma(t)


def s_phase(model: DephasingModel, t: float) -> float:
    """Phase integral S(t) >= 0 with S(t)/t -> <g, omega^{-1} g> / 2."""
    if t < 0:
        raise ValidationError("t must be >= 0")
    return model._kernel.s_phase(t)


def gamma_infinity(model: DephasingModel) -> float:
    """Time-averaged plateau of Gamma (sin^2 -> 1/2); heuristic.

    Returns math.inf when the decoherence function is unbounded (infrared
    exponent at or below the threshold).
    """
    k = model._kernel
    if k.q0 <= 1:
        return math.inf
    return 0.5 * _quad(lambda r: float(k.h(r)) / r**2, 0.0, k.rmax, points=[1.0])


def full_decoherence(model: DephasingModel) -> bool:
    """Whether off-diagonals decay to zero: infrared exponent p <= (2-d)/2."""
    g = model.form_factor
    return g.infrared_exponent <= (2.0 - g.dimension) / 2.0 + 1e-12


def alpha(model: DephasingModel, m: int, n: int, t: float) -> complex:
    """alpha_{m,n}(t) = (gamma_m^2 - gamma_n^2) S(t) + i (gamma_m - gamma_n)^2 Gamma(t)."""
    gm, gn = model.gammas[m], model.gammas[n]
    real = 0.0 if gm * gm == gn * gn else (gm * gm - gn * gn) * s_phase(model, t)
    imag = 0.0 if gm == gn else (gm - gn) ** 2 * gamma_decoherence(model, t)
    return complex(real, imag)


def exact_trajectory(model: DephasingModel, rho0: DensityMatrix, times) -> Trajectory:
    """Closed-form reduced density matrix; populations exactly constant."""
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValidationError("trajectory times must be >= 0")
    n = model.dim
    if rho0.dim != n:
        raise ValidationError("initial state dimension does not match the model")
    e = np.asarray(model.energies)
    rho = np.zeros((t.size, n, n), dtype=complex)
    lam2 = model.lam**2
    for i, ti in enumerate(t):
        mat = np.array(rho0.entries, dtype=complex)
        for m in range(n):
            for k in range(m + 1, n):
                a = alpha(model, m, k, float(ti))
                mat[m, k] *= np.exp(-1j * ti * (e[m] - e[k]) + 1j * lam2 * a)
                mat[k, m] = np.conj(mat[m, k])
        rho[i] = mat
    return Trajectory(times=t, rho=rho)


def asymptotic_generator(model: DephasingModel, m: int, n: int) -> complex:
    """Long-time generator lim alpha_{m,n}(t) / t.

    Equals (1/2)(gamma_m^2 - gamma_n^2) <g, w^{-1} g> plus i (gamma_m -
    gamma_n)^2 times 0 / (pi/4) xi(0) / infinity according to the infrared
    exponent relative to (2-d)/2.  Matches the negated level-shift eigenvalue
    of the (n, m) pair from the general assembly.
    """
    gm, gn = model.gammas[m], model.gammas[n]
    if m == n or gm == gn:
        imag = 0.0
    else:
        g = model.form_factor
        thr = (2.0 - g.dimension) / 2.0
        p = g.infrared_exponent
        if p > thr + 1e-12:
            imag = 0.0
        elif abs(p - thr) <= 1e-12:
            from .spectral import xi
            imag = (gm - gn) ** 2 * 0.25 * math.pi * xi(g, model.beta, 0.0)
        else:
            return complex(0.0, math.inf)
    real = 0.5 * (gm * gm - gn * gn) * model._kernel.w_inv
    return complex(real, imag)


@dataclass(frozen=True)
class RateLimitReport:
    """Convergence diagnostics of alpha(t)/t toward the asymptotic generator."""

    times: np.ndarray
    alpha_over_t: np.ndarray
    target: complex
    relative_errors: np.ndarray
    converged: bool


def rate_limit_check(model: DephasingModel, m: int, n: int, t_grid,
                     rel_tol: float = 1e-2) -> RateLimitReport:
    """Evaluate alpha_{m,n}(t)/t on an increasing grid against the generator."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) <= 0) or np.any(t <= 0):
        raise ValidationError("t_grid must be positive and strictly increasing")
    target = asymptotic_generator(model, m, n)
    vals = np.array([alpha(model, m, n, float(ti)) / ti for ti in t])
    scale = abs(target) if abs(target) > 0 else 1.0
    rel = np.abs(vals - target) / scale
    return RateLimitReport(times=t, alpha_over_t=vals, target=target,
                           relative_errors=rel, converged=bool(rel[-1] < rel_tol))


def discrete_mode_oracle(model: DephasingModel, modes: int, t: float) -> float:
    """Decoherence function from a finite lattice of reservoir modes.

    Midpoint discretization with ``modes`` radial nodes; converges to
    Gamma(t) at second order as the mode count grows.  Independent of the
    quadrature route used by :func:`gamma_decoherence`.
    """
    if modes < 1:
        raise ValidationError("need at least one mode")
    k = model._kernel
    h = k.rmax / modes
    r = (np.arange(modes) + 0.5) * h
    x = model.beta * r / 2.0
    density = (k.weight * r ** (model.form_factor.dimension - 1)
               * np.asarray(model.form_factor.radial_sq(r)) * coth(x))
    return float(np.sum(h * density * np.sin(r * t / 2.0) ** 2 / r**2))

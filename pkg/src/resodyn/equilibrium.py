"""Equilibrium-state corrections for the qubit.

The interacting equilibrium state is not diagonal in the energy basis: to
second order in the coupling constant the asymptotic off-diagonal is

    rho_inf[0, 1] = (c lam^2 / Z) * ( a e^{-beta E_1} <g, B_1 g>
                                      + b e^{-beta E_2} <g, B_2 g> ),

with kernel functions B_1, B_2 of omega = |k| built from the Planck factor
mu = 1/(e^{beta omega} - 1).  The apparent (omega - Delta)^{-1} poles are
removable; the singular groups are combined algebraically (exprel forms)
before quadrature so the integrand is finite through omega = Delta.  The
result vanishes identically for diagonal (c = 0) and for purely
off-diagonal (a = b = 0) couplings, and scales exactly as lam^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exprel

from ._special import planck
from .errors import DivergentIntegralError, ValidationError
from .model import DensityMatrix, SystemSpec, gibbs_weights
from .spectral import FormFactor, _quad


def gibbs_reduced(sys: SystemSpec, beta: float) -> DensityMatrix:
    """Diagonal Gibbs density matrix e^{-beta H} / Z."""
    if not beta > 0:
        raise ValidationError("beta must be positive")
    return DensityMatrix(np.diag(gibbs_weights(sys, beta)).astype(complex))


def _b1_kernel(omega, beta: float, gap: float):
    """B_1(omega); all exponentially growing pieces rewritten in bounded form."""
    w = np.asarray(omega, dtype=float)
    mu = planck(beta * w)
    one_plus_mu = -1.0 / np.expm1(-beta * w)
    ed = math.exp(-beta * gap / 2.0)
    k1 = -ed * (ed - 1.0) + 1.0 / ed - 1.0
    # mu e^{beta w/2}(e^{beta w/2}-1) = (1+mu) - 1/(2 sinh(beta w/2)) = 1/(1+e^{-beta w/2})
    fermi = 1.0 / (1.0 + np.exp(-beta * w / 2.0))
    term1 = (fermi + mu * k1) / (w * (w + gap))
    # (e^{-beta w/2} - e^{-beta gap/2})/(w - gap) = -(beta/2) ed exprel(-beta (w-gap)/2)
    s = -(beta / 2.0) * ed * exprel(np.clip(-beta * (w - gap) / 2.0, -500, 500))
    term2 = one_plus_mu * s * (ed + np.exp(-beta * w / 2.0) - 1.0) / w
    term3 = -(ed - 1.0) * (ed - mu - 1.0) / (w * gap)
    term4 = mu * (ed - 1.0) / (gap * (w + gap))
    return term1 + term2 + term3 + term4


def _b2_kernel(omega, beta: float, gap: float):
    """B_2(omega) with the removable (omega - gap) group combined."""
    w = np.asarray(omega, dtype=float)
    mu = planck(beta * w)
    one_plus_mu = -1.0 / np.expm1(-beta * w)
    eu = math.exp(beta * gap / 2.0)
    big_l = eu - 1.0
    term1 = one_plus_mu * ((np.exp(-beta * w / 2.0) - eu) ** 2 + big_l) / (w * (w + gap))
    # mu [e^{beta w} - K] / (w (w - gap)) - mu L / (gap (w - gap)), K = eu(eu-1)+1,
    # combined: mu * [ e^{beta gap} beta exprel(beta (w - gap)) - L / gap ] / w
    z = beta * (w - gap)
    near = np.abs(z) <= 30.0
    group_near = mu * (eu * eu * beta * exprel(np.clip(z, -30, 30)) - big_l / gap) / w
    with np.errstate(divide="ignore", invalid="ignore"):
        k_minus_1 = eu * eu - eu
        far_denom = np.where(near, 1.0, w - gap)
        group_far = ((1.0 - k_minus_1 * mu) / (w * far_denom)
                     - mu * big_l / (gap * far_denom))
    group = np.where(near, group_near, group_far)
    term3 = eu * big_l / (w * gap)
    term4 = one_plus_mu * big_l / (gap * (w + gap))
    return term1 + group + term3 + term4


@dataclass(frozen=True)
class EquilibriumReport:
    """Gibbs reduction plus the order-lam^2 off-diagonal of the true equilibrium."""

    gibbs: DensityMatrix
    offdiag_12: complex
    integral_b1: float
    integral_b2: float

    def to_json_obj(self) -> dict:
        return {
            "gibbs": [[float(x.real) for x in row] for row in self.gibbs.entries],
            "offdiag12": [self.offdiag_12.real, self.offdiag_12.imag],
            "integrals": {"B1": self.integral_b1, "B2": self.integral_b2},
        }


def kernel_integral(g: FormFactor, beta: float, gap: float, which: str) -> float:
    """<g, B_j g> = int |g(k)|^2 B_j(|k|) d^dk by radial quadrature."""
    kernel = _b1_kernel if which == "B1" else _b2_kernel
    # small-omega behaviour: B_j ~ 1/omega^2, so the radial integrand goes as
    # omega^{q0 - 1}; convergence needs q0 > 0.
    if g.zero_exponent <= 1e-12:
        raise DivergentIntegralError(
            f"<g, {which} g> diverges at omega = 0 for infrared exponent "
            f"p <= (2-d)/2", term=which)
    d = g.dimension

    def f(w):
        return w ** (d - 1) * float(g.radial_sq(w)) * float(kernel(w, beta, gap))

    rmax = g.support_radius + gap
    val = 0.0
    for a, b in ((0.0, gap / 2), (gap / 2, 2 * gap), (2 * gap, rmax)):
        val += _quad(f, a, min(b, rmax), points=[gap])
    return g.angular_weight * val


def equilibrium_offdiagonal_qubit(sys: SystemSpec, g: FormFactor, beta: float,
                                  lam: float) -> EquilibriumReport:
    """Second-order off-diagonal of the interacting equilibrium state."""
    if sys.dim != 2:
        raise ValidationError("equilibrium off-diagonal formula is qubit-only")
    e1, e2 = sys.energies
    gap = e2 - e1
    if not gap > 0:
        raise ValidationError("qubit gap must be positive")
    a = float(np.real(sys.coupling[0, 0]))
    b = float(np.real(sys.coupling[1, 1]))
    c = complex(sys.coupling[0, 1])
    gibbs = gibbs_reduced(sys, beta)
    if c == 0 or (a == 0.0 and b == 0.0):
        i1 = i2 = 0.0
        off = 0.0 + 0.0j
    else:
        i1 = kernel_integral(g, beta, gap, "B1")
        i2 = kernel_integral(g, beta, gap, "B2")
        z = math.exp(-beta * e1) + math.exp(-beta * e2)
        off = c * lam * lam / z * (a * math.exp(-beta * e1) * i1
                                   + b * math.exp(-beta * e2) * i2)
    return EquilibriumReport(gibbs=gibbs, offdiag_12=off,
                             integral_b1=i1, integral_b2=i2)

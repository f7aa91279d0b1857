"""Dispersive permittivity models evaluated at signed photon energies (meV).

Three material kinds are supported: a single Lorentz oscillator for the polar
bodies, a constant (possibly complex) permittivity, and the lossless layer
whose permittivity is modulated in time as ``eps_static + delta_eps*cos(Omega t)``.

Every model honours the reality condition ``eps(-w) = conj(eps(w))``.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Union

import numpy as np
from scipy.optimize import brentq

logger = logging.getLogger(__name__)


class NoRootError(ValueError):
    pass


@dataclass(frozen=True)
class LorentzParams:
    eps_inf: float
    omega_L: float
    omega_T: float
    gamma: float

    def __post_init__(self):
        if not self.omega_L > self.omega_T > 0:
            raise ValueError(
                "Lorentz model needs omega_L > omega_T > 0, got %g, %g"
                % (self.omega_L, self.omega_T)
            )
        if self.gamma <= 0:
            raise ValueError("Lorentz damping must be positive, got %g" % self.gamma)
        if self.eps_inf < 1:
            raise ValueError("eps_inf must be >= 1, got %g" % self.eps_inf)

    def permittivity(self, omega, lossless=False):
        omega = np.asarray(omega, dtype=float)
        gamma = 0.0 if lossless else self.gamma
        # -i*gamma*omega flips sign with omega: eps(-w) = conj(eps(w)) holds by construction
        denom = self.omega_T**2 - omega**2 - 1j * gamma * omega
        return self.eps_inf * (1 + (self.omega_L**2 - self.omega_T**2) / denom)

    @property
    def is_lossy(self):
        return True


@dataclass(frozen=True)
class ConstantPermittivity:
    eps: complex

    def __post_init__(self):
        if complex(self.eps).imag < 0:
            raise ValueError(
                "constant permittivity must be passive (Im >= 0), got %s" % self.eps
            )

    def permittivity(self, omega, lossless=False):
        omega = np.asarray(omega, dtype=float)
        eps = complex(self.eps)
        if lossless:
            eps = complex(eps.real, 0.0)
        return np.where(omega < 0, np.conj(eps), eps).astype(complex)

    @property
    def is_lossy(self):
        return complex(self.eps).imag > 0


@dataclass(frozen=True)
class ModulatedLayerSpec:
    eps_static: float
    delta_eps: float
    mod_freq: float

    def __post_init__(self):
        if not self.eps_static > self.delta_eps >= 0:
            raise ValueError(
                "modulated layer needs eps_static > delta_eps >= 0, got eps_static=%g, delta_eps=%g"
                % (self.eps_static, self.delta_eps)
            )
        if self.mod_freq <= 0:
            raise ValueError("modulation energy must be positive, got %g" % self.mod_freq)

    def permittivity(self, omega, lossless=False):
        # the static part; the modulation enters only through fourier_harmonics
        omega = np.asarray(omega, dtype=float)
        return np.full(omega.shape, complex(self.eps_static))

    @property
    def is_lossy(self):
        return False


Material = Union[LorentzParams, ConstantPermittivity, ModulatedLayerSpec]

PRESETS = {
    "quartz": LorentzParams(eps_inf=2.4, omega_L=50.0, omega_T=49.0, gamma=0.26),
    "InP": LorentzParams(eps_inf=9.6, omega_L=43.0, omega_T=38.0, gamma=0.43),
}

DEFAULT_EPS_STATIC = 4.0
DEFAULT_DELTA_EPS = 0.4


def permittivity(m: Material, omega):
    """Complex permittivity at signed energy ``omega`` (meV); vectorized over ``omega``."""
    eps = m.permittivity(omega)
    return eps[()] if np.ndim(eps) == 0 else eps


def permittivity_im(m: Material, omega):
    return np.imag(permittivity(m, omega))


def fourier_harmonics(m: ModulatedLayerSpec) -> Dict[int, float]:
    """Fourier coefficients of eps(t) = eps_static + delta_eps*cos(Omega t)."""
    harmonics = {0: float(m.eps_static)}
    if m.delta_eps:
        harmonics[1] = harmonics[-1] = 0.5 * m.delta_eps
    return harmonics


def surface_polariton_frequency(p: LorentzParams, tol: float = 1e-12) -> float:
    """Root of Re eps(w) = -1 for the lossless oscillator, searched in (omega_T, omega_L).

    This is the flat large-k asymptote of a single vacuum/body interface.
    """
    if tol <= 0:
        raise ValueError("tol must be positive, got %g" % tol)

    def shifted(w):
        return float(np.real(p.permittivity(w, lossless=True))) + 1.0

    lo = p.omega_T * (1 + 1e-12)
    hi = p.omega_L
    f_lo, f_hi = shifted(lo), shifted(hi)
    if not (np.isfinite(f_lo) and np.isfinite(f_hi)) or f_lo * f_hi > 0:
        raise NoRootError(
            "no surface polariton root for eps_inf=%g, omega_L=%g, omega_T=%g"
            % (p.eps_inf, p.omega_L, p.omega_T)
        )
    root = brentq(shifted, lo, hi, xtol=tol * p.omega_T, rtol=max(tol, 4 * np.finfo(float).eps))
    logger.debug("surface polariton root %.6f meV for %s", root, p)
    return root

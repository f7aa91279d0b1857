"""Two-mode quadrature nonclassicality indicator in the gap.

For the pair of energies w_+- = Omega/2 +- dw, the normally ordered variance
of the best two-mode quadrature is ``I = C - |B|``; ``I < 0`` cannot occur for
a classical field. C collects elastic thermal fluctuations and B the
conversion between w_M - Omega and w_M. Overall prefactors of the response
overlap R are dropped; only ``I/N`` and the sign of ``I`` carry meaning.
"""
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .floquet import (
    MIRROR,
    HarmonicBasis,
    PlaneWaveContext,
    Polarization,
    RegionError,
    source_factor,
    stack_scattering,
)
from .flux import bose_einstein, depth_integral
from .quadrature import QuadratureError, QuadratureSpec, integrate_kpar
from .stack import LayerStack, RegionId, region_of
from .units import wavenumber

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadraturePairSpec:
    mod_energy: float
    delta_omega: float = 0.0

    def __post_init__(self):
        if self.omega_minus <= 0:
            raise ValueError(
                "omega_- = Omega/2 - delta_omega must be positive, got %g" % self.omega_minus
            )

    @property
    def omega_plus(self) -> float:
        return 0.5 * self.mod_energy + self.delta_omega

    @property
    def omega_minus(self) -> float:
        return 0.5 * self.mod_energy - self.delta_omega

    @property
    def degenerate(self) -> bool:
        return self.delta_omega == 0

    @property
    def modes(self) -> Tuple[float, ...]:
        return (self.omega_plus,) if self.degenerate else (self.omega_plus, self.omega_minus)


def _observation(sol, z, body, l):
    return sol.field(z)[sol.basis.index(0), :, sol.column(body, l)]


def _overlap_integrand(s, basis, z, omega, omega_prime, use_reality, kpar):
    """k/(2 pi) * sum over pol and bodies of the depth-integrated G G*: [Re, Im]."""
    if kpar == 0:
        return np.zeros(2)
    omega_mod = basis.mod_energy
    l = int(round((omega_prime - omega) / omega_mod))
    k4 = wavenumber(omega_prime) ** 4
    total = 0j
    for pol in Polarization:
        ctx = PlaneWaveContext(kpar, pol)
        sol_y = stack_scattering(s, ctx, basis.at(omega_prime))
        if omega == omega_prime:
            sol_x = sol_y
        elif omega > 0 or not use_reality:
            sol_x = stack_scattering(s, ctx, basis.at(omega))
        else:
            sol_x = stack_scattering(s, ctx, basis.at(-omega))
        for body in (1, 2):
            eps_im = float(np.imag(s.body(body).permittivity(omega_prime)))
            o_y = _observation(sol_y, z, body, 0)
            s_y, kz_y = source_factor(s, body, omega_prime, ctx)
            if omega < 0 and use_reality and omega != omega_prime:
                # g(-w, -w') = M conj(g(w, w')) M
                o_t = _observation(sol_x, z, body, -l)
                s_t, kz_t = source_factor(s, body, -omega_prime, ctx)
                o_x, s_x, kz_x = MIRROR * np.conj(o_t), MIRROR * np.conj(s_t), -np.conj(kz_t)
            else:
                o_x = _observation(sol_x, z, body, l)
                s_x, kz_x = s_y, kz_y
            depth = depth_integral(kz_x, kz_y)
            total += eps_im * k4 * np.vdot(o_y, o_x) * np.vdot(s_y, s_x) * depth
    total *= kpar / (2 * np.pi)
    return np.array([total.real, total.imag])


def _magnitude(sample):
    return np.array([np.hypot(sample[0], sample[1])])


def response_overlap(
    s: LayerStack,
    basis: HarmonicBasis,
    z: float,
    omega: float,
    omega_prime: float,
    quad: QuadratureSpec,
    use_reality: bool = True,
    strict: bool = False,
) -> complex:
    """R(z; w, w') = sum over bodies of Im eps(w') int G(z, z'; w, w') G*(z, z'; w', w') dz'.

    Negative ``omega`` is mapped through the reality condition unless
    ``use_reality`` is False, in which case the stack is solved directly at
    the negative output energy.
    """
    _check_overlap_args(s, basis, z, omega, omega_prime)
    value, converged = _overlap(s, basis, z, omega, omega_prime, quad, use_reality)
    if strict and not converged:
        raise QuadratureError(
            "response overlap did not converge at z=%g nm" % z, estimate=value
        )
    return value


def _check_overlap_args(s, basis, z, omega, omega_prime):
    if region_of(s, z) is not RegionId.GAP:
        raise RegionError("observation height %g nm is outside the gap (0, %g]" % (z, s.gap))
    if omega_prime <= 0:
        raise ValueError("source energy must be positive, got %g" % omega_prime)
    shift = (omega_prime - omega) / basis.mod_energy
    if abs(shift - round(shift)) > 1e-9:
        raise ValueError(
            "energies %g and %g are not connected by a multiple of Omega=%g"
            % (omega, omega_prime, basis.mod_energy)
        )
    basis.index(int(round(shift)))  # range check


def _overlap(s, basis, z, omega, omega_prime, quad, use_reality=True):
    length = max(min(s.gap - z, z), 1e-3 * s.gap)
    result = integrate_kpar(
        partial(_overlap_integrand, s, basis, z, omega, omega_prime, use_reality),
        omega_prime,
        length,
        quad,
        measure=_magnitude,
    )
    if not result.converged:
        logger.warning("response overlap not converged at z=%g, w=%g, w'=%g", z, omega, omega_prime)
    return complex(result.value[0], result.value[1]), result.converged


@dataclass
class ResponseTerms:
    """Temperature-independent overlaps for one height: elastic R(w_M, w_M) and conversion R(w_M - Omega, w_M)."""

    z: float
    modes: Tuple[float, ...]
    elastic: Dict[float, float]
    conversion: Dict[float, complex]
    multiplicity: int
    converged: bool = True


def response_terms(
    s: LayerStack, basis: HarmonicBasis, pair: QuadraturePairSpec, z: float, quad: QuadratureSpec
) -> ResponseTerms:
    if not np.isclose(pair.mod_energy, basis.mod_energy, rtol=1e-12, atol=0):
        raise ValueError("pair modulation %g differs from basis %g" % (pair.mod_energy, basis.mod_energy))
    elastic = {}
    conversion = {}
    converged = True
    for w in pair.modes:
        _check_overlap_args(s, basis, z, w - pair.mod_energy, w)
        value, ok_e = _overlap(s, basis, z, w, w, quad)
        elastic[w] = value.real
        conversion[w], ok_c = _overlap(s, basis, z, w - pair.mod_energy, w, quad)
        converged = converged and ok_e and ok_c
    # at dw = 0 the two modes coincide and every sum counts the single term twice
    return ResponseTerms(z, pair.modes, elastic, conversion, 2 if pair.degenerate else 1, converged)


def components_from_terms(terms: ResponseTerms, T: float) -> Tuple[float, complex]:
    C = 0.0
    B = 0j
    for w in terms.modes:
        n = float(bose_einstein(w, T))
        C += terms.multiplicity * terms.elastic[w] * n
        B += terms.multiplicity * terms.conversion[w] * (2 * n + 1)
    return C, B


def normalization(terms: ResponseTerms) -> float:
    return 0.5 * terms.multiplicity * sum(terms.elastic[w] for w in terms.modes)


def indicator_components(s, basis, pair, z, T, quad, terms: Optional[ResponseTerms] = None):
    """(C, B) at height z and temperature T."""
    terms = terms or response_terms(s, basis, pair, z, quad)
    return components_from_terms(terms, T)


def indicator(s, basis, pair, z, T, quad, terms: Optional[ResponseTerms] = None) -> float:
    """Normalized indicator (C - |B|)/N with N = sum_M R(w_M, w_M)/2."""
    terms = terms or response_terms(s, basis, pair, z, quad)
    C, B = components_from_terms(terms, T)
    return (C - abs(B)) / normalization(terms)


@dataclass
class IndicatorGrid:
    z_grid: np.ndarray
    T_grid: np.ndarray
    values: np.ndarray  # (z, T)
    flagged: List[Tuple[float, float]] = field(default_factory=list)
    converged: bool = True

    def zero_contour(self) -> List[Tuple[float, Optional[float]]]:
        # first T per height where I/N reaches 0, interpolated
        contour = []
        for z, row in zip(self.z_grid, self.values):
            crossing = None
            for (t0, t1), (v0, v1) in zip(
                zip(self.T_grid[:-1], self.T_grid[1:]), zip(row[:-1], row[1:])
            ):
                if v0 < 0 <= v1:
                    crossing = t0 + (t1 - t0) * (-v0) / (v1 - v0)
                    break
            contour.append((float(z), crossing))
        return contour

    def rows(self):
        for i, z in enumerate(self.z_grid):
            for j, T in enumerate(self.T_grid):
                yield {"z_nm": float(z), "T_K": float(T), "indicator_normalized": float(self.values[i, j])}


def _grid_row(s, basis, pair, quad, T_grid, z):
    terms = response_terms(s, basis, pair, z, quad)
    return [indicator(s, basis, pair, z, T, quad, terms=terms) for T in T_grid], terms.converged


def compute_indicator_grid(
    s: LayerStack,
    basis: HarmonicBasis,
    pair: QuadraturePairSpec,
    z_grid: Sequence[float],
    T_grid: Sequence[float],
    quad: QuadratureSpec,
    mapper: Optional[Callable] = None,
) -> IndicatorGrid:
    """I/N over heights x temperatures; the overlaps are computed once per height."""
    z_grid = np.asarray(z_grid, dtype=float)
    T_grid = np.asarray(T_grid, dtype=float)
    row = partial(_grid_row, s, basis, pair, quad, T_grid)
    computed = list((mapper or map)(row, z_grid))
    values = np.array([r[0] for r in computed])
    converged = all(r[1] for r in computed)
    flagged = []
    for i, z in enumerate(z_grid):
        # thermal noise feeds C faster than |B|: I/N should not fall as T rises
        falling = np.flatnonzero(np.diff(values[i]) < -1e-12 * np.max(np.abs(values[i])))
        flagged += [(float(z), float(T_grid[j + 1])) for j in falling]
    if flagged:
        logger.warning("indicator decreases with temperature in %d cells", len(flagged))
    return IndicatorGrid(z_grid, T_grid, values, flagged, converged)

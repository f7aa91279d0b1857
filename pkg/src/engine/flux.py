"""Photon-number conversion spectra and the Casimir / inelastic energy fluxes.

Spectra F_beta^(l)(w) are stored non-negative (|Im eps_alpha(w_l)| is used for
sources at negative w_l); signs are applied when fluxes are assembled.
Positive fluxes mean energy received by the body.

Units: spectra in photons s^-1 m^-2 per (rad/s); fluxes in W/m^2.
"""
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .floquet import (
    HarmonicBasis,
    PlaneWaveContext,
    Polarization,
    StackSolution,
    kz_branch,
    stack_scattering,
)
from .materials import LorentzParams, surface_polariton_frequency
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    integrate_adaptive,
    integrate_kpar,
    kpar_cutoff,
)
from .stack import LayerStack
from .units import HBAR_MEV_S, KB_MEV_PER_K, MEV_TO_J, PER_NM2_TO_PER_M2, wavenumber

logger = logging.getLogger(__name__)

BODIES = (1, 2)


def bose_einstein(omega, T):
    """Bose-Einstein occupation n(w) at temperature T (K) for signed energies (meV).

    Negative energies use n(-w) = -1 - n(w) so the identity holds exactly.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega == 0):
        raise ValueError("Bose-Einstein occupation is singular at zero energy")
    if T < 0:
        raise ValueError("temperature must be >= 0, got %g" % T)
    mag = np.abs(omega)
    if T == 0:
        positive = np.zeros_like(mag)
    else:
        with np.errstate(over="ignore"):
            positive = 1.0 / np.expm1(mag / (KB_MEV_PER_K * T))
    n = np.where(omega > 0, positive, -1.0 - positive)
    return n[()] if n.ndim == 0 else n


def depth_integral(kz, kz_prime):
    """int_0^inf exp(i (kz - conj(kz')) z) dz, for waves decaying into a body."""
    return 1j / (kz - np.conj(kz_prime))


def _pol_weight(eps, k0, kpar, kz, pol):
    # sum_i |p_i|^2 of the unit polarization vector
    if pol is Polarization.S:
        return 1.0
    return (abs(kz) ** 2 + kpar**2) / (abs(eps) * k0**2)


def kernel_row(s: LayerStack, sol: StackSolution, beta: int) -> np.ndarray:
    """Pair kernels into body ``beta`` at the output energy: shape (2 alphas, n harmonics).

    Entries with w_l = 0 are zero. Same-body l = 0 entries keep only the
    scattered wave.
    """
    basis, ctx = sol.basis, sol.ctx
    w = basis.output_energy
    eps_b = complex(s.body(beta).permittivity(w))
    if eps_b.imag == 0:
        raise ValueError("body %d is lossless at %g meV" % (beta, w))
    k0 = wavenumber(w)
    kz_b = complex(kz_branch(eps_b, w, ctx.kpar))
    weight_b = (
        eps_b.imag * _pol_weight(eps_b, k0, ctx.kpar, kz_b, ctx.pol) * depth_integral(kz_b, kz_b).real
    )
    amps = sol.outgoing(beta)[basis.index(0)]

    row = np.zeros((2, basis.size))
    energies = basis.energies
    for a, alpha in enumerate(BODIES):
        material = s.body(alpha)
        for m, (l, w_l) in enumerate(zip(basis.orders, energies)):
            if w_l == 0:
                continue
            eps_a = complex(material.permittivity(w_l))
            if eps_a.imag == 0:
                raise ValueError("body %d is lossless at %g meV" % (alpha, w_l))
            k_l = wavenumber(w_l)
            kz_a = complex(kz_branch(eps_a, w_l, ctx.kpar))
            weight_a = (
                abs(eps_a.imag) * _pol_weight(eps_a, k_l, ctx.kpar, kz_a, ctx.pol)
                * depth_integral(kz_a, kz_a).real / (4 * abs(kz_a) ** 2)
            )
            A = amps[sol.column(alpha, l)]
            row[a, m] = 4 * k_l**4 * abs(A) ** 2 * weight_a * weight_b
    return row


def pair_kernel(
    s: LayerStack,
    basis: HarmonicBasis,
    l: int,
    omega: float,
    ctx: PlaneWaveContext,
    beta: int,
    alpha: int,
    solution: Optional[StackSolution] = None,
) -> float:
    """(k, pol)-resolved conversion kernel from body ``alpha`` at w_l into body ``beta`` at w.

    The depth integrals over both half-spaces are done in closed form:
    int_0^inf exp(i (kz - conj(kz')) z) dz = i / (kz - conj(kz')).
    """
    for body in (alpha, beta):
        if body not in BODIES:
            raise ValueError("bodies are numbered 1 and 2, got %r" % body)
        if not s.body(body).is_lossy:
            raise ValueError("body %d is not lossy" % body)
    basis = basis.at(omega)
    sol = solution or stack_scattering(s, ctx, basis)
    return float(kernel_row(s, sol, beta)[alpha - 1, basis.index(l)])


def kpar_breakpoints(s: LayerStack, basis: HarmonicBasis):
    """Light lines of every retained harmonic in vacuum, in the layer and in both bodies."""
    energies = np.asarray(basis.energies, dtype=float)
    lines = np.abs(wavenumber(energies))
    eps_layer = float(np.real(s.mod_layer.material.permittivity(0.0)))
    points = [lines, np.sqrt(eps_layer) * lines]
    for body in BODIES:
        # kz in the body nearly vanishes where Re eps(w_l) k_l^2 = k^2
        eps = np.real(s.body(body).permittivity(energies))
        points.append(np.sqrt(eps[eps > 0]) * lines[eps > 0])
    return sorted(set(np.concatenate(points)))


def _spectral_integrand(s: LayerStack, basis: HarmonicBasis, kpar: float) -> np.ndarray:
    # k/(2 pi) * kernels summed over pol, shape (betas, alphas, n)
    total = np.zeros((2, 2, basis.size))
    if kpar == 0:
        return total
    for pol in Polarization:
        sol = stack_scattering(s, PlaneWaveContext(kpar, pol), basis)
        for b, beta in enumerate(BODIES):
            total[b] += kernel_row(s, sol, beta)
    # same-body elastic emission cancels in every flux and diverges for body 2
    i0 = basis.index(0)
    total[0, 0, i0] = total[1, 1, i0] = 0.0
    return total * kpar / (2 * np.pi)


def _body1_measure(sample):
    return np.abs(sample[0]).sum(axis=0)


def spectral_density(
    s: LayerStack, basis: HarmonicBasis, omega: float, quad: QuadratureSpec
):
    """All F_beta^(l)(w) at one energy; returns (values, error, converged).

    ``values`` has shape (2 betas, 2 alphas, n harmonics). Error control and the
    tail bound act on the body-1 spectra; body-2 spectra include self-conversion
    in the layer touching body 2, which is cut off at k_max.
    """
    basis = basis.at(omega)
    result = integrate_kpar(
        partial(_spectral_integrand, s, basis),
        omega,
        s.gap,
        quad,
        breakpoints=kpar_breakpoints(s, basis),
        measure=_body1_measure,
    )
    scale = PER_NM2_TO_PER_M2 / (2 * np.pi)
    return result.value * scale, result.error * scale, result.converged


def photon_flux_spectrum(
    s: LayerStack, basis: HarmonicBasis, l: int, omega: float, quad: QuadratureSpec
) -> Tuple[float, float]:
    """(F_1^(l)(w), F_2^(l)(w)), summed over source bodies.

    F_2 holds the self-conversion of the layer touching body 2 and depends on
    the k cutoff; only F_1 enters the fluxes.
    """
    if omega <= 0:
        raise ValueError("output energy must be positive, got %g" % omega)
    logger.warning(
        "F_2 at %g meV depends on the k cutoff (%g /nm); do not integrate it into fluxes",
        omega, kpar_cutoff(omega, s.gap, quad),
    )
    values, error, converged = spectral_density(s, basis, omega, quad)
    index = basis.index(l)
    spectra = values[:, :, index].sum(axis=1)
    if not converged:
        raise QuadratureError(
            "k-integral did not converge at %g meV" % omega,
            estimate=spectra,
            error=error[:, :, index].sum(axis=1),
        )
    return float(spectra[0]), float(spectra[1])


def resonance_breakpoints(s: LayerStack, basis: HarmonicBasis, window) -> list:
    """Panel edges at polariton features and their Omega-shifted images, plus w_l = 0."""
    lo, hi = window
    features = []
    for body in (s.top_half_space, s.bottom_half_space):
        if isinstance(body, LorentzParams):
            features += [body.omega_T, body.omega_L, surface_polariton_frequency(body)]
    points = set()
    for l in basis.orders:
        shift = -l * basis.mod_energy
        points.add(shift)
        for f in features:
            points.update((shift + f, shift - f))
    return sorted(p for p in points if lo < p < hi)


def _energy_node(s, basis, quad, omega):
    return spectral_density(s, basis, omega, quad)


@dataclass
class SpectralFluxTable:
    """Sampled spectra F_beta^(l)(w) on the adaptive energy nodes.

    ``values[node, beta-1, alpha-1, l-index]``; ``weights`` and
    ``gauss_weights`` are the embedded quadrature weights in meV.
    """

    omega: np.ndarray
    orders: np.ndarray
    mod_energy: float
    values: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    gauss_weights: np.ndarray = field(repr=False)
    kpar_errors: np.ndarray = field(repr=False)
    converged: bool = True

    @property
    def source_energies(self) -> np.ndarray:
        # w_l per node and harmonic
        return self.omega[:, None] + self.orders[None, :] * self.mod_energy

    def spectrum(self, beta: int = 1, l: int = -1) -> np.ndarray:
        index = int(np.flatnonzero(self.orders == l)[0])
        return self.values[:, beta - 1, :, index].sum(axis=1)

    def integrate(self, weights: np.ndarray, beta: int = 1, alpha: Optional[int] = None):
        """Energy flux (W/m^2) of sum_l weights[node, l] * hbar w F_beta^(l)(w).

        Returns (value, error bound); the bound combines the embedded-rule
        estimate with the propagated k-integration errors.
        """
        sources = slice(None) if alpha is None else slice(alpha - 1, alpha)
        spectra = self.values[:, beta - 1, sources].sum(axis=1)
        errors = self.kpar_errors[:, beta - 1, sources].sum(axis=1)
        integrand = (weights * spectra).sum(axis=1) * self.omega
        kronrod = self.weights @ integrand
        gauss = self.gauss_weights @ integrand
        kpar_err = self.weights @ ((np.abs(weights) * errors).sum(axis=1) * self.omega)
        scale = MEV_TO_J / HBAR_MEV_S
        return kronrod * scale, (abs(kronrod - gauss) + abs(kpar_err)) * scale


def spectral_flux_table(
    s: LayerStack,
    basis: HarmonicBasis,
    quad: QuadratureSpec,
    mapper: Optional[Callable] = None,
) -> SpectralFluxTable:
    """Adaptive energy sampling of all spectra over ``quad.omega_window``.

    Refinement is driven by w*F_1^(l)(w) for every retained l; the spectra do
    not depend on temperature so one table serves every temperature.
    """
    lo, hi = quad.omega_window
    node = partial(_energy_node, s, basis, quad)
    samples_cache: Dict[float, tuple] = {}

    def evaluate(w):
        return samples_cache[w]

    # spectra are computed in batches through the mapper and cached; the
    # adaptive rule sees w * F as its integrand
    def batched(fn, nodes):
        nodes = list(nodes)
        computed = list((mapper or map)(node, nodes))
        for w, sample in zip(nodes, computed):
            samples_cache[w] = sample
        return [np.asarray(sample[0]) * w for w, sample in zip(nodes, computed)]

    result = integrate_adaptive(
        evaluate,
        lo,
        hi,
        quad,
        breakpoints=resonance_breakpoints(s, basis, quad.omega_window),
        mapper=batched,
        measure=lambda v: np.abs(v[0]).sum(axis=0),
    )
    omega = result.nodes
    values = np.array([samples_cache[w][0] for w in omega])
    errors = np.array([samples_cache[w][1] for w in omega])
    kpar_ok = all(samples_cache[w][2] for w in omega)
    if not kpar_ok:
        logger.warning("some k-integrals did not converge for Omega=%g meV", basis.mod_energy)
    return SpectralFluxTable(
        omega=omega,
        orders=basis.orders,
        mod_energy=basis.mod_energy,
        values=values,
        weights=result.weights,
        gauss_weights=result.gauss_weights,
        kpar_errors=errors,
        converged=bool(result.converged and kpar_ok),
    )


@dataclass
class FluxBreakdown:
    """Net flux received by one body and its three components (W/m^2)."""

    temperature: float
    phi_q: float
    phi_t: float
    upsilon: float
    q_net: float
    dominance: float
    error: float = 0.0
    converged: bool = True
    gross_exchange: float = 0.0
    phi_q_by_order: Dict[int, float] = field(default_factory=dict)


def _source_occupations(table: SpectralFluxTable, T: float):
    w_l = table.source_energies
    safe = np.where(w_l == 0, 1.0, w_l)
    n_src = np.where(w_l == 0, 0.0, bose_einstein(safe, T))
    n_out = bose_einstein(table.omega, T)[:, None]
    return w_l, n_src, n_out


def quantum_weights(table: SpectralFluxTable) -> np.ndarray:
    return (table.source_energies < 0).astype(float)


def thermal_weights(table: SpectralFluxTable, T: float) -> np.ndarray:
    w_l, n_src, n_out = _source_occupations(table, T)
    # n(-w_l) = -1 - n(w_l)
    return np.where(w_l < 0, n_out + (-1.0 - n_src), 0.0)


def inelastic_weights(table: SpectralFluxTable, T: float) -> np.ndarray:
    w_l, n_src, n_out = _source_occupations(table, T)
    mask = (w_l > 0) & (table.orders[None, :] != 0)
    return np.where(mask, n_src - n_out, 0.0)


def flux_breakdown(table: SpectralFluxTable, T: float, beta: int = 1) -> FluxBreakdown:
    """Assemble Q = Phi^Q + Phi^T + Upsilon and the dominance L from one table."""
    if T < 0:
        raise ValueError("temperature must be >= 0, got %g" % T)
    q_weights = quantum_weights(table)
    phi_q, err_q = table.integrate(q_weights, beta)
    phi_t, err_t = table.integrate(thermal_weights(table, T), beta)
    upsilon, err_u = table.integrate(inelastic_weights(table, T), beta)

    by_order = {}
    for order in range(1, int(np.max(np.abs(table.orders))) + 1):
        mask = (np.abs(table.orders) == order)[None, :]
        by_order[order] = float(table.integrate(q_weights * mask, beta)[0])

    # one-way elastic exchange from the other body, the scale for detailed-balance checks
    other = 2 if beta == 1 else 1
    elastic = np.zeros_like(q_weights)
    if T > 0:
        elastic[:, table.orders == 0] = bose_einstein(table.omega, T)[:, None]
    gross = table.integrate(elastic, beta, alpha=other)[0]

    residual = abs(phi_t + upsilon)
    dominance = abs(phi_q) / residual - 1 if residual > 0 else np.inf
    return FluxBreakdown(
        temperature=T,
        phi_q=float(phi_q),
        phi_t=float(phi_t),
        upsilon=float(upsilon),
        q_net=float(phi_q + phi_t + upsilon),
        dominance=float(dominance),
        error=float(err_q + err_t + err_u),
        converged=table.converged,
        gross_exchange=float(gross),
        phi_q_by_order=by_order,
    )


def _table(s, basis, quad, table, mapper=None, strict=True):
    if table is None:
        table = spectral_flux_table(s, basis, quad, mapper=mapper)
    if strict and not table.converged:
        raise QuadratureError("spectral table for Omega=%g meV did not converge" % table.mod_energy)
    return table


def casimir_flux_quantum(s, basis, quad, table=None, mapper=None, strict=True) -> float:
    table = _table(s, basis, quad, table, mapper, strict)
    return float(table.integrate(quantum_weights(table))[0])


def casimir_flux_thermal(s, basis, T, quad, table=None, mapper=None, strict=True) -> float:
    table = _table(s, basis, quad, table, mapper, strict)
    return float(table.integrate(thermal_weights(table, T))[0])


def inelastic_flux(s, basis, T, quad, table=None, mapper=None, strict=True) -> float:
    table = _table(s, basis, quad, table, mapper, strict)
    return float(table.integrate(inelastic_weights(table, T))[0])


def net_flux_and_dominance(s, basis, T, quad, table=None, mapper=None, strict=True) -> FluxBreakdown:
    table = _table(s, basis, quad, table, mapper, strict)
    return flux_breakdown(table, T)

import logging

import numpy as np
import pytest
from scipy import integrate

from src.engine.floquet import (
    HarmonicBasis,
    PlaneWaveContext,
    Polarization,
    greens_planewave,
    kz_branch,
    stack_scattering,
)
from src.engine.flux import (
    SpectralFluxTable,
    _spectral_integrand,
    bose_einstein,
    depth_integral,
    flux_breakdown,
    inelastic_weights,
    kpar_breakpoints,
    pair_kernel,
    photon_flux_spectrum,
    quantum_weights,
    spectral_density,
    thermal_weights,
)
from src.engine.materials import ConstantPermittivity
from src.engine.quadrature import QuadratureSpec
from src.engine.stack import LayerStack, default_stack
from src.engine.units import HBAR_MEV_S, KB_MEV_PER_K, MEV_TO_J, wavenumber

SCALE = MEV_TO_J / HBAR_MEV_S


def fresnel(eps_in, eps_out, kz_in, kz_out, pol):
    if pol is Polarization.S:
        return (kz_in - kz_out) / (kz_in + kz_out)
    return (eps_out * kz_in - eps_in * kz_out) / (eps_out * kz_in + eps_in * kz_out)


def kz(eps, omega, kpar):
    k = np.sqrt(complex(eps) * wavenumber(omega) ** 2 - kpar**2)
    return -k if k.imag < 0 else k


def heat_transmission(s, omega, kpar, pol):
    """Textbook two-body transmission across the vacuum gap, body 2 dressed by the static layer."""
    eps1 = complex(s.top_half_space.permittivity(omega))
    eps2 = complex(s.bottom_half_space.permittivity(omega))
    eps_l = complex(s.mod_layer.material.permittivity(omega))
    kz0, kz1, kz2, kzl = (kz(e, omega, kpar) for e in (1.0, eps1, eps2, eps_l))
    r1 = fresnel(1.0, eps1, kz0, kz1, pol)
    r_gl = fresnel(1.0, eps_l, kz0, kzl, pol)
    r_lb = fresnel(eps_l, eps2, kzl, kz2, pol)
    phase = np.exp(2j * kzl * s.mod_layer.thickness)
    r2 = (r_gl + r_lb * phase) / (1 + r_gl * r_lb * phase)
    denom = abs(1 - r1 * r2 * np.exp(2j * kz0 * s.gap)) ** 2
    if kpar < wavenumber(omega):
        return (1 - abs(r1) ** 2) * (1 - abs(r2) ** 2) / denom
    return 4 * r1.imag * r2.imag * np.exp(-2 * kz0.imag * s.gap) / denom


PVH_OMEGA = np.linspace(30.0, 65.0, 20)
PVH_KPAR_FACTORS = np.logspace(-1.0, 3.0, 20)


@pytest.mark.parametrize("pol", list(Polarization))
def test_static_kernel_is_two_body_transmission(pol):
    s = default_stack(delta_eps=0.0)
    for omega in PVH_OMEGA:
        basis = HarmonicBasis(s.modulation.mod_freq, omega, trunc=1)
        for factor in PVH_KPAR_FACTORS:
            kpar = factor * wavenumber(omega)
            ctx = PlaneWaveContext(kpar, pol)
            sol = stack_scattering(s, ctx, basis)
            expected = heat_transmission(s, omega, kpar, pol)
            for beta, alpha in ((1, 2), (2, 1)):
                kernel = pair_kernel(s, basis, 0, omega, ctx, beta, alpha, solution=sol)
                assert kernel == pytest.approx(expected, rel=1e-6), (omega, factor)


def test_static_stack_has_no_conversion():
    s = default_stack(delta_eps=0.0)
    basis = HarmonicBasis(s.modulation.mod_freq, 45.0, trunc=1)
    ctx = PlaneWaveContext(0.05, Polarization.P)
    for l in (-1, 1):
        assert pair_kernel(s, basis, l, 45.0, ctx, 1, 2) == 0.0


def test_kernel_needs_lossy_bodies():
    s = default_stack()
    lossless = LayerStack(ConstantPermittivity(2.0), s.inner_layers, s.bottom_half_space)
    basis = HarmonicBasis(s.modulation.mod_freq, 45.0, trunc=1)
    with pytest.raises(ValueError):
        pair_kernel(lossless, basis, -1, 45.0, PlaneWaveContext(0.05, Polarization.S), 1, 2)
    with pytest.raises(ValueError):
        pair_kernel(s, basis, -1, 45.0, PlaneWaveContext(0.05, Polarization.S), 3, 2)


def test_spectral_integrand_drops_same_body_elastic_terms(stack, basis):
    values = _spectral_integrand(stack, basis, 0.05)
    i0 = basis.index(0)
    assert values[0, 0, i0] == 0.0
    assert values[1, 1, i0] == 0.0
    assert values[0, 1, i0] > 0
    assert np.all(values >= 0)
    assert not np.any(_spectral_integrand(stack, basis, 0.0))


def test_bose_einstein():
    assert bose_einstein(10.0, 0.0) == 0.0
    assert bose_einstein(-10.0, 0.0) == -1.0
    w = np.array([5.0, 26.0, 80.0])
    np.testing.assert_allclose(bose_einstein(-w, 300.0), -1.0 - bose_einstein(w, 300.0))
    kT = KB_MEV_PER_K * 300.0
    assert bose_einstein(kT, 300.0) == pytest.approx(1 / (np.e - 1))
    # huge ratios underflow to zero rather than overflowing
    assert bose_einstein(1e6, 1.0) == 0.0
    with pytest.raises(ValueError):
        bose_einstein(0.0, 300.0)
    with pytest.raises(ValueError):
        bose_einstein(10.0, -1.0)


@pytest.fixture
def table():
    """Two energy nodes with unit spectra in body 1 and distinct ones in body 2."""
    omega = np.array([10.0, 20.0])
    orders = np.array([-1, 0, 1])
    values = np.zeros((2, 2, 2, 3))
    values[:, 0] = 1.0
    values[:, 1] = 7.0
    return SpectralFluxTable(
        omega=omega,
        orders=orders,
        mod_energy=50.0,
        values=values,
        weights=np.ones(2),
        gauss_weights=np.ones(2),
        kpar_errors=np.zeros_like(values),
    )


def test_table_weights(table):
    np.testing.assert_array_equal(table.source_energies, [[-40, 10, 60], [-30, 20, 70]])
    np.testing.assert_array_equal(quantum_weights(table), [[1, 0, 0], [1, 0, 0]])
    assert not np.any(thermal_weights(table, 0.0))
    assert not np.any(inelastic_weights(table, 0.0))
    np.testing.assert_array_equal(table.spectrum(1, -1), [2.0, 2.0])
    np.testing.assert_array_equal(table.spectrum(2, 1), [14.0, 14.0])


def test_breakdown_at_zero_temperature(table):
    result = flux_breakdown(table, 0.0)
    assert result.phi_q == pytest.approx(2 * (10 + 20) * SCALE)
    assert result.phi_t == 0.0
    assert result.upsilon == 0.0
    assert result.q_net == pytest.approx(result.phi_q)
    assert result.dominance == np.inf
    assert result.gross_exchange == 0.0
    assert result.error == 0.0
    assert result.phi_q_by_order == {1: pytest.approx(result.phi_q)}


def test_breakdown_at_room_temperature(table):
    T = 300.0
    w = table.omega

    def n(x):
        return bose_einstein(x, T)

    result = flux_breakdown(table, T)
    assert result.phi_q == pytest.approx(2 * w.sum() * SCALE)
    assert result.phi_t == pytest.approx(SCALE * np.sum(2 * w * (n(w) + n(50.0 - w))))
    assert result.upsilon == pytest.approx(SCALE * np.sum(2 * w * (n(w + 50.0) - n(w))))
    assert result.q_net == pytest.approx(result.phi_q + result.phi_t + result.upsilon)
    assert result.dominance == pytest.approx(abs(result.phi_q) / abs(result.phi_t + result.upsilon) - 1)
    assert result.gross_exchange == pytest.approx(SCALE * np.sum(w * n(w)))
    with pytest.raises(ValueError):
        flux_breakdown(table, -1.0)


def test_breakdown_reports_errors(table):
    table.gauss_weights = np.array([1.0, 0.5])
    assert flux_breakdown(table, 0.0).error == pytest.approx(0.5 * 2 * 20 * SCALE)
    table.converged = False
    assert not flux_breakdown(table, 0.0).converged


def test_depth_integrals_match_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(10):
        kz = rng.uniform(-2, 2, 4) + 1j * rng.uniform(0.5, 2, 4)
        a = kz[0] - np.conj(kz[1])
        b = kz[2] - np.conj(kz[3])
        length = 40.0 / min(a.imag, b.imag)

        def part(fn):
            value, _ = integrate.dblquad(
                lambda z2, z1: fn(np.exp(1j * (a * z1 + b * z2))), 0, length, 0, length, epsabs=1e-10
            )
            return value

        brute = part(np.real) + 1j * part(np.imag)
        closed = depth_integral(kz[0], kz[1]) * depth_integral(kz[2], kz[3])
        assert abs(brute - closed) <= 1e-3 * abs(closed)
    # the same-wave integral is the 1/(2 Im kz) decay length
    assert depth_integral(1 + 0.25j, 1 + 0.25j) == pytest.approx(2.0)


def test_kernel_matches_volume_integral_of_greens_function():
    s = default_stack()
    rng = np.random.default_rng(11)
    x, w = np.polynomial.legendre.leggauss(24)

    def body_points(body, energy, kpar):
        # Gauss nodes over five skin depths, never on an interface
        decay = complex(kz_branch(complex(s.body(body).permittivity(energy)), energy, kpar)).imag
        length = 5.0 / decay
        depth = 0.5 * length * (1 + x)
        z = s.gap + depth if body == 1 else -s.mod_layer.thickness - depth
        return z, 0.5 * length * w

    for _ in range(10):
        omega = rng.uniform(30.0, 65.0)
        basis = HarmonicBasis(s.modulation.mod_freq, omega, trunc=1)
        l = int(rng.choice([-1, 1]))
        beta, alpha = (int(b) for b in rng.integers(1, 3, size=2))
        pol = Polarization.S if rng.random() < 0.5 else Polarization.P
        kpar = wavenumber(omega) * 10 ** rng.uniform(-1.0, 2.5)
        ctx = PlaneWaveContext(kpar, pol)
        sol = stack_scattering(s, ctx, basis)
        w_l = basis.energies[basis.index(l)]

        z_obs, w_obs = body_points(beta, omega, kpar)
        z_src, w_src = body_points(alpha, w_l, kpar)
        brute = 0.0
        for zo, wo in zip(z_obs, w_obs):
            for zs, ws in zip(z_src, w_src):
                g = [
                    greens_planewave(s, ctx, basis, l, zo, zs, i, j, solution=sol)
                    for i in range(3)
                    for j in range(3)
                ]
                brute += wo * ws * np.sum(np.abs(g) ** 2)

        eps_b = complex(s.body(beta).permittivity(omega))
        eps_a = complex(s.body(alpha).permittivity(w_l))
        expected = 4 * wavenumber(w_l) ** 4 * eps_b.imag * abs(eps_a.imag) * brute
        kernel = pair_kernel(s, basis, l, omega, ctx, beta, alpha, solution=sol)
        assert kernel == pytest.approx(expected, rel=1e-3), (omega, kpar, pol, beta, alpha, l)


def test_breakpoints_include_body_light_lines(stack):
    basis = HarmonicBasis(stack.modulation.mod_freq, 50.0, trunc=1)
    points = kpar_breakpoints(stack, basis)
    for body in (1, 2):
        for energy in basis.energies:
            eps = complex(stack.body(body).permittivity(energy)).real
            if eps > 0:
                line = np.sqrt(eps) * abs(wavenumber(energy))
                assert any(p == pytest.approx(line, rel=1e-12) for p in points)


def test_default_stack_spectra_converge(stack, caplog):
    basis = HarmonicBasis(stack.modulation.mod_freq, 45.0, trunc=1)
    quad = QuadratureSpec()
    densities = {}
    for omega in (30.0, 45.0, 60.0):
        values, _, converged = spectral_density(stack, basis, omega, quad)
        assert converged, omega
        assert np.all(values >= 0)
        densities[omega] = values

    # the per-harmonic spectrum agrees with the density and warns about body 2
    with caplog.at_level(logging.WARNING, logger="src.engine.flux"):
        f1, f2 = photon_flux_spectrum(stack, basis, -1, 45.0, quad)
    assert "k cutoff" in caplog.text
    assert f1 == pytest.approx(densities[45.0][0, :, basis.index(-1)].sum(), rel=1e-12)
    assert f1 > 0 and f2 >= 0

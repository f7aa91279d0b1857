import numpy as np
import pytest

from src.engine.materials import (
    ConstantPermittivity,
    LorentzParams,
    ModulatedLayerSpec,
    NoRootError,
    PRESETS,
    fourier_harmonics,
    permittivity,
    permittivity_im,
    surface_polariton_frequency,
)

quartz = PRESETS["quartz"]
inp = PRESETS["InP"]


def test_quartz_limits():
    assert permittivity(quartz, 1e9).real == pytest.approx(2.4, rel=1e-9)
    assert permittivity(quartz, 0.0).real == pytest.approx(2.4 * (50 / 49) ** 2, rel=1e-12)
    assert permittivity_im(quartz, 49.0) == pytest.approx(2.4 * 99 / (0.26 * 49), rel=1e-12)


@pytest.mark.parametrize("material", [quartz, inp, ConstantPermittivity(3 + 0.5j)])
def test_reality_condition(material):
    w = np.random.default_rng(0).uniform(-200.0, 200.0, 1000)
    np.testing.assert_allclose(permittivity(material, -w), np.conj(permittivity(material, w)))


def test_passivity_and_antisymmetry():
    w = np.linspace(1.0, 120.0, 50)
    assert np.all(permittivity_im(quartz, w) > 0)
    assert permittivity_im(inp, -38.0) == pytest.approx(-permittivity_im(inp, 38.0))


def test_modulated_layer_is_lossless():
    layer = ModulatedLayerSpec(4.0, 0.4, 92.3)
    assert permittivity_im(layer, np.array([-30.0, 10.0, 75.0])).tolist() == [0.0, 0.0, 0.0]
    assert not layer.is_lossy


def test_fourier_harmonics():
    assert fourier_harmonics(ModulatedLayerSpec(4.0, 0.4, 92.3)) == {0: 4.0, 1: 0.2, -1: 0.2}
    assert fourier_harmonics(ModulatedLayerSpec(4.0, 0.0, 92.3)) == {0: 4.0}


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(eps_inf=2.4, omega_L=48.0, omega_T=49.0, gamma=0.26),
        dict(eps_inf=2.4, omega_L=50.0, omega_T=49.0, gamma=0.0),
        dict(eps_inf=0.5, omega_L=50.0, omega_T=49.0, gamma=0.26),
    ],
)
def test_invalid_lorentz(kwargs):
    with pytest.raises(ValueError):
        LorentzParams(**kwargs)


def test_invalid_modulation():
    with pytest.raises(ValueError):
        ModulatedLayerSpec(4.0, 5.0, 92.3)
    with pytest.raises(ValueError):
        ConstantPermittivity(2 - 0.1j)


def test_surface_polariton_frequency():
    assert surface_polariton_frequency(quartz) == pytest.approx(49.71, abs=0.01)
    assert surface_polariton_frequency(inp) == pytest.approx(42.55, abs=0.01)
    w = surface_polariton_frequency(quartz, tol=1e-12)
    assert permittivity(LorentzParams(2.4, 50.0, 49.0, 1e-30), w).real == pytest.approx(-1, abs=1e-8)


def test_surface_polariton_large_eps_inf():
    w = surface_polariton_frequency(LorentzParams(1e6, 50.0, 49.0, 0.26))
    assert w == pytest.approx(50.0, abs=1e-4)


def test_surface_polariton_without_root():
    # a band narrower than the search offset above omega_T leaves no sign change
    with pytest.raises(NoRootError):
        surface_polariton_frequency(LorentzParams(1.0, 49.0 * (1 + 1e-13), 49.0, 0.26))

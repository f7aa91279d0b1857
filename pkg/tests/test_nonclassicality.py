import numpy as np
import pytest

from src.engine import nonclassicality
from src.engine.floquet import HarmonicBasis, RegionError
from src.engine.flux import bose_einstein
from src.engine.nonclassicality import (
    IndicatorGrid,
    QuadraturePairSpec,
    ResponseTerms,
    components_from_terms,
    compute_indicator_grid,
    normalization,
    response_overlap,
    response_terms,
)
from src.engine.stack import default_stack


def test_pair_spec(omega1, omega2):
    pair = QuadraturePairSpec(omega1 + omega2, 0.5 * (omega1 - omega2))
    assert pair.omega_plus == pytest.approx(omega1)
    assert pair.omega_minus == pytest.approx(omega2)
    assert pair.modes == (pair.omega_plus, pair.omega_minus)
    assert not pair.degenerate
    degenerate = QuadraturePairSpec(2 * omega2)
    assert degenerate.modes == (pytest.approx(omega2),)
    with pytest.raises(ValueError):
        QuadraturePairSpec(80.0, 40.0)


def test_overlap_arguments(stack, basis, coarse_quad):
    w = 0.5 * basis.mod_energy
    with pytest.raises(RegionError):
        response_overlap(stack, basis, -3.0, w, w, coarse_quad)
    with pytest.raises(RegionError):
        response_overlap(stack, basis, 12.0, w, w, coarse_quad)
    with pytest.raises(ValueError):
        response_overlap(stack, basis, 5.0, -w, -w, coarse_quad)
    with pytest.raises(ValueError):
        response_overlap(stack, basis, 5.0, w - 10.0, w, coarse_quad)
    with pytest.raises(ValueError):
        response_overlap(stack, basis, 5.0, w - 3 * basis.mod_energy, w, coarse_quad)


def test_elastic_overlap_is_real_and_positive(stack, basis, coarse_quad):
    w = 0.5 * basis.mod_energy
    value = response_overlap(stack, basis, 5.0, w, w, coarse_quad)
    assert value.real > 0
    assert abs(value.imag) <= 1e-10 * value.real


def test_static_stack_has_no_conversion_overlap(coarse_quad):
    s = default_stack(delta_eps=0.0)
    basis = HarmonicBasis(s.modulation.mod_freq, 45.0, trunc=2)
    w = 0.5 * basis.mod_energy
    assert response_overlap(s, basis, 5.0, w - basis.mod_energy, w, coarse_quad) == 0


def test_reality_condition_matches_direct_solve(stack, basis, coarse_quad):
    rng = np.random.default_rng(7)
    for w, z in zip(rng.uniform(30.0, 60.0, 3), rng.uniform(1.0, 9.0, 3)):
        mapped = response_overlap(stack, basis, z, w - basis.mod_energy, w, coarse_quad)
        direct = response_overlap(stack, basis, z, w - basis.mod_energy, w, coarse_quad, use_reality=False)
        assert abs(mapped - direct) <= 1e-6 * abs(direct)


def test_response_terms_on_the_default_stack(stack, basis, coarse_quad):
    w = 0.5 * basis.mod_energy
    pair = QuadraturePairSpec(basis.mod_energy)
    terms = response_terms(stack, basis, pair, 5.0, coarse_quad)
    assert terms.multiplicity == 2
    assert terms.elastic[w] > 0
    assert abs(terms.conversion[w]) > 0
    C, B = components_from_terms(terms, 0.0)
    assert C == 0.0
    assert B == pytest.approx(2 * terms.conversion[w])
    with pytest.raises(ValueError):
        response_terms(stack, basis, QuadraturePairSpec(80.0), 5.0, coarse_quad)


def synthetic_terms(multiplicity=1):
    modes = (50.0, 40.0) if multiplicity == 1 else (45.0,)
    return ResponseTerms(
        z=5.0,
        modes=modes,
        elastic={w: 2.0 for w in modes},
        conversion={w: 0.3 + 0.4j for w in modes},
        multiplicity=multiplicity,
    )


@pytest.mark.parametrize("multiplicity", [1, 2])
def test_components(multiplicity):
    terms = synthetic_terms(multiplicity)
    n_modes = len(terms.modes) * multiplicity
    C, B = components_from_terms(terms, 0.0)
    assert C == 0.0
    assert B == pytest.approx(n_modes * (0.3 + 0.4j))
    assert normalization(terms) == pytest.approx(n_modes)
    # thermal noise rescales each conversion term by 2n+1
    C, B = components_from_terms(terms, 300.0)
    n = np.array([bose_einstein(w, 300.0) for w in terms.modes])
    assert C == pytest.approx(multiplicity * 2.0 * n.sum())
    assert B == pytest.approx(multiplicity * (0.3 + 0.4j) * np.sum(2 * n + 1))


def test_indicator_uses_cached_terms(stack, basis, coarse_quad):
    terms = synthetic_terms()
    value = nonclassicality.indicator(stack, basis, None, 5.0, 0.0, coarse_quad, terms=terms)
    # |B| = 2 |0.3 + 0.4i| = 1 and N = 2
    assert value == pytest.approx(-0.5)


def test_zero_contour_and_rows():
    grid = IndicatorGrid(
        z_grid=np.array([1.0, 2.0, 3.0]),
        T_grid=np.array([0.0, 100.0, 200.0]),
        values=np.array([[-1.0, -0.5, 1.5], [-1.0, 1.0, 2.0], [-1.0, -1.0, -0.5]]),
    )
    assert grid.zero_contour() == [(1.0, 125.0), (2.0, 50.0), (3.0, None)]
    rows = list(grid.rows())
    assert len(rows) == 9
    assert rows[1] == {"z_nm": 1.0, "T_K": 100.0, "indicator_normalized": -0.5}


def test_grid_flags_cells_that_fall_with_temperature(monkeypatch, stack, basis, coarse_quad):
    def fake_row(s, basis, pair, quad, T_grid, z):
        if z == 2.0:
            return [-1.0, 0.5, 0.2], False
        return [-1.0, -0.2, 0.4], True

    monkeypatch.setattr(nonclassicality, "_grid_row", fake_row)
    grid = compute_indicator_grid(stack, basis, None, [1.0, 2.0], [0.0, 100.0, 200.0], coarse_quad)
    assert grid.flagged == [(2.0, 200.0)]
    assert not grid.converged
    assert grid.values.shape == (2, 3)

"""Planar geometry: body 1 / vacuum gap / modulated layer / body 2.

z = 0 is the top surface of the modulated layer and z grows upward into the
gap; body 1 fills z >= d and body 2 fills z <= -thickness of the layer.
Points on an interface belong to the region below it.
"""
import enum
import logging
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .materials import (
    ConstantPermittivity,
    LorentzParams,
    Material,
    ModulatedLayerSpec,
    PRESETS,
    DEFAULT_DELTA_EPS,
    DEFAULT_EPS_STATIC,
    surface_polariton_frequency,
)

logger = logging.getLogger(__name__)

DEFAULT_GAP_NM = 10.0
DEFAULT_LAYER_NM = 22.0


class RegionId(enum.IntEnum):
    # ordered bottom to top
    BODY2 = 0
    MOD_LAYER = 1
    GAP = 2
    BODY1 = 3


@dataclass(frozen=True)
class Layer:
    material: Material
    thickness: float


@dataclass(frozen=True)
class Region:
    rid: RegionId
    material: Material
    z_lo: float  # -inf for body 2
    z_hi: float  # +inf for body 1

    @property
    def thickness(self):
        return self.z_hi - self.z_lo


@dataclass(frozen=True)
class LayerStack:
    top_half_space: Material
    inner_layers: Tuple[Layer, ...]
    bottom_half_space: Material

    @property
    def gap(self) -> float:
        return self.inner_layers[0].thickness

    @property
    def gap_layer(self) -> Layer:
        return self.inner_layers[0]

    @property
    def mod_layer(self) -> Layer:
        return self.inner_layers[1]

    @property
    def modulation(self):
        """The ModulatedLayerSpec of the second inner layer, or None if it is static."""
        mat = self.mod_layer.material
        return mat if isinstance(mat, ModulatedLayerSpec) else None

    def body(self, index: int) -> Material:
        if index == 1:
            return self.top_half_space
        if index == 2:
            return self.bottom_half_space
        raise ValueError("bodies are numbered 1 (top) and 2 (bottom), got %r" % index)

    def regions(self) -> List[Region]:
        """Regions ordered bottom to top, ready for the scattering solver."""
        d = self.gap
        depth = self.mod_layer.thickness
        return [
            Region(RegionId.BODY2, self.bottom_half_space, -np.inf, -depth),
            Region(RegionId.MOD_LAYER, self.mod_layer.material, -depth, 0.0),
            Region(RegionId.GAP, self.gap_layer.material, 0.0, d),
            Region(RegionId.BODY1, self.top_half_space, d, np.inf),
        ]

    def with_gap(self, gap: float) -> "LayerStack":
        return replace(self, inner_layers=(Layer(self.gap_layer.material, gap),) + tuple(self.inner_layers[1:]))

    def with_modulation(self, **changes) -> "LayerStack":
        mod = self.modulation
        if mod is None:
            raise ValueError("stack has no modulated layer")
        layer = Layer(replace(mod, **changes), self.mod_layer.thickness)
        return replace(self, inner_layers=(self.gap_layer, layer))

    def static(self) -> "LayerStack":
        return self.with_modulation(delta_eps=0.0) if self.modulation else self


def default_stack(
    gap=DEFAULT_GAP_NM,
    delta_eps=DEFAULT_DELTA_EPS,
    mod_freq=None,
    eps_static=DEFAULT_EPS_STATIC,
    thickness=DEFAULT_LAYER_NM,
) -> LayerStack:
    """Quartz / vacuum gap / modulated layer / InP, modulated at Omega1 + Omega2 unless given."""
    body1, body2 = PRESETS["quartz"], PRESETS["InP"]
    if mod_freq is None:
        mod_freq = surface_polariton_frequency(body1) + surface_polariton_frequency(body2)
    return LayerStack(
        top_half_space=body1,
        inner_layers=(
            Layer(ConstantPermittivity(1.0), gap),
            Layer(ModulatedLayerSpec(eps_static, delta_eps, mod_freq), thickness),
        ),
        bottom_half_space=body2,
    )


def _is_lossless(material: Material) -> bool:
    if isinstance(material, ModulatedLayerSpec):
        return True
    if isinstance(material, ConstantPermittivity):
        return complex(material.eps).imag == 0
    return False


def stack_violations(s: LayerStack) -> List[str]:
    errors = []
    if len(s.inner_layers) != 2:
        errors.append(
            "expected exactly two inner layers (gap, modulated layer), got %d" % len(s.inner_layers)
        )
        return errors
    for name, body in (("body 1", s.top_half_space), ("body 2", s.bottom_half_space)):
        if isinstance(body, ModulatedLayerSpec):
            errors.append("%s cannot be a modulated material" % name)
        elif not body.is_lossy:
            errors.append("%s must be lossy (Im eps > 0)" % name)
    for name, layer in (("gap", s.inner_layers[0]), ("layer", s.inner_layers[1])):
        if not np.isfinite(layer.thickness) or layer.thickness <= 0:
            errors.append("%s thickness must be positive and finite, got %g" % (name, layer.thickness))
        if not _is_lossless(layer.material):
            errors.append("%s must be lossless, got %s" % (name, layer.material))
    if isinstance(s.inner_layers[0].material, ModulatedLayerSpec):
        errors.append("the gap cannot be modulated")
    return errors


def validate_stack(s: LayerStack) -> None:
    errors = stack_violations(s)
    if errors:
        raise ValueError("invalid layer stack:\n  - " + "\n  - ".join(errors))


def region_of(s: LayerStack, z: float) -> RegionId:
    if z > s.gap:
        return RegionId.BODY1
    if z > 0:
        return RegionId.GAP
    if z > -s.mod_layer.thickness:
        return RegionId.MOD_LAYER
    return RegionId.BODY2


def gap_mode_dispersion(
    s: LayerStack, kpar_grid: Sequence[float], layered: bool = False, samples: int = 2000
) -> List[List[float]]:
    """Lossless nonretarded p-polarized gap modes, one sorted list of energies per k.

    Roots of ``1 - r1 r2 exp(-2 k d) = 0`` are bracketed inside (omega_T, omega_L)
    of each Lorentz body. With ``layered`` the static layer enters the body-2
    reflection; otherwise ``r_i = (eps_i - 1)/(eps_i + 1)``.
    """
    kpar_grid = np.asarray(kpar_grid, dtype=float)
    if np.any(kpar_grid <= 0):
        raise ValueError("dispersion grid must contain positive wavenumbers only")
    bodies = [m for m in (s.top_half_space, s.bottom_half_space) if isinstance(m, LorentzParams)]
    eps_layer = float(np.real(s.mod_layer.material.permittivity(0.0)))
    eps_gap = float(np.real(s.gap_layer.material.permittivity(0.0)))
    depth = s.mod_layer.thickness

    def condition(w, k):
        e1 = complex(s.top_half_space.permittivity(w, lossless=True)).real
        e2 = complex(s.bottom_half_space.permittivity(w, lossless=True)).real
        x = np.exp(-2 * k * s.gap)
        if layered:
            # pole-free form of (e1+g)(E2+g) - (e1-g)(E2-g) x with E2 the layer-dressed body 2
            y = np.exp(-2 * k * depth)
            num = (e2 + eps_layer) + (e2 - eps_layer) * y
            den = (e2 + eps_layer) - (e2 - eps_layer) * y
            # effective permittivity seen from the gap: eps_layer * num / den
            return (e1 + eps_gap) * (eps_layer * num + eps_gap * den) - (e1 - eps_gap) * (
                eps_layer * num - eps_gap * den
            ) * x
        return (e1 + eps_gap) * (e2 + eps_gap) - (e1 - eps_gap) * (e2 - eps_gap) * x

    result = []
    for k in kpar_grid:
        roots = []
        for body in bodies:
            lo = body.omega_T * (1 + 1e-9)
            grid = np.linspace(lo, body.omega_L, samples)
            vals = np.array([condition(w, k) for w in grid])
            for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
                if fa == 0:
                    roots.append(a)
                elif fa * fb < 0:
                    roots.append(brentq(condition, a, b, args=(k,), xtol=1e-12))
        roots = sorted(set(np.round(roots, 10)))
        result.append([float(r) for r in roots])
    logger.debug("gap-mode dispersion on %d wavenumbers", len(kpar_grid))
    return result

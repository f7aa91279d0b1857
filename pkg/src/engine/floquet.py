"""Coupled-harmonic plane-wave scattering through the layer stack.

For one output energy w, in-plane wavenumber k and polarization, the fields in
every region are expanded over the harmonics w_m = w + m*Omega (|m| <= N_h).
Static regions keep the harmonics decoupled; in the modulated layer they mix
through the Toeplitz matrix of the Fourier coefficients of eps(t).

Tangential field vectors per harmonic:

- s: (E_y, Z0*H_x)
- p: (E_x, Z0*H_y), with E_z recovered from Z0*H_y

Modal amplitudes are ``u`` (upward, exp(+i q z)) and ``d`` (downward). In a
finite layer ``u`` is referenced at the bottom face and ``d`` at the top face;
in a half-space both are referenced at its single interface. Incoming and
outgoing amplitudes in the bodies are amplitudes along the unit polarization
vectors s = y and p = (+-kz, 0, -k)/(sqrt(eps) k0).
"""
import enum
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from .materials import ModulatedLayerSpec, fourier_harmonics
from .stack import LayerStack, Region, RegionId, region_of, validate_stack
from .units import wavenumber

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12
KPAR_JITTER = 1e-9

# mirror x -> -x, relates g(z, z') to g(z', z)^T and g(-w) to conj(g(w))
MIRROR = np.array([-1.0, 1.0, 1.0])


class FloquetError(RuntimeError):
    pass


class RegionError(ValueError):
    pass


class Polarization(str, enum.Enum):
    S = "s"
    P = "p"


@dataclass(frozen=True)
class HarmonicBasis:
    mod_energy: float
    output_energy: float
    trunc: int = 3

    def __post_init__(self):
        if int(self.trunc) != self.trunc or self.trunc < 1:
            raise ValueError("truncation must be an integer >= 1, got %r" % self.trunc)
        if self.mod_energy <= 0:
            raise ValueError("modulation energy must be positive, got %g" % self.mod_energy)
        if self.output_energy == 0:
            raise ValueError("output energy must be nonzero")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.trunc, self.trunc + 1)

    @property
    def energies(self) -> np.ndarray:
        return self.output_energy + self.orders * self.mod_energy

    @property
    def size(self) -> int:
        return 2 * self.trunc + 1

    def index(self, l: int) -> int:
        if abs(l) > self.trunc:
            raise ValueError("harmonic %d outside the retained range +-%d" % (l, self.trunc))
        return l + self.trunc

    def at(self, output_energy: float) -> "HarmonicBasis":
        return replace(self, output_energy=output_energy)


@dataclass(frozen=True)
class PlaneWaveContext:
    kpar: float
    pol: Polarization

    def __post_init__(self):
        if self.kpar < 0:
            raise ValueError("in-plane wavenumber must be >= 0, got %g" % self.kpar)
        object.__setattr__(self, "pol", Polarization(self.pol))


def kz_branch(eps, omega, kpar):
    """z-wavenumber with Im >= 0; real roots take the sign of ``omega``."""
    k0 = wavenumber(np.asarray(omega, dtype=float))
    kz = np.sqrt(np.asarray(eps * k0**2 - kpar**2, dtype=complex))
    flip = (kz.imag < 0) | ((kz.imag == 0) & (kz.real != 0) & (np.sign(kz.real) != np.sign(k0)))
    kz = np.where(flip, -kz, kz)
    return kz[()] if kz.ndim == 0 else kz


def polarization_vector(eps, omega, kpar, kz, pol, upward):
    if Polarization(pol) is Polarization.S:
        return np.array([0.0, 1.0, 0.0], dtype=complex)
    k0 = wavenumber(omega)
    n = np.sqrt(complex(eps))
    sign = 1.0 if upward else -1.0
    return np.array([sign * kz, 0.0, -kpar], dtype=complex) / (n * k0)


@dataclass
class FloquetLayerModes:
    """Eigenmodes of one region in the harmonic basis.

    ``W`` maps modal amplitudes ``[u; d]`` to tangential fields ``[E_t; H_t]``
    (``2n x 2n``); ``ez`` maps the tangential H block to E_z (p only).
    """

    q2: np.ndarray
    q: np.ndarray
    mixing: np.ndarray
    W: np.ndarray
    ez: Optional[np.ndarray] = None

    @property
    def size(self):
        return self.q.size


def _homogeneous_modes(eps, energies, kpar, pol) -> FloquetLayerModes:
    k = wavenumber(energies)
    kz = kz_branch(eps, energies, kpar)
    eye = np.eye(k.size)
    if pol is Polarization.S:
        ht = kz / k
        W = np.block([[eye, eye], [np.diag(-ht), np.diag(ht)]]).astype(complex)
        ez = None
    else:
        n = np.sqrt(eps.astype(complex))
        ex = kz / (n * k)
        W = np.block([[np.diag(ex), np.diag(-ex)], [np.diag(n), np.diag(n)]])
        ez = np.diag(-kpar / (k * eps))
    return FloquetLayerModes(q2=kz**2, q=kz, mixing=eye.astype(complex), W=W, ez=ez)


def toeplitz_permittivity(layer: ModulatedLayerSpec, size: int) -> np.ndarray:
    coeffs = fourier_harmonics(layer)
    T = np.zeros((size, size))
    for offset, value in coeffs.items():
        T += value * np.eye(size, k=offset)
    return T


def _modulated_modes(layer: ModulatedLayerSpec, kpar, basis: HarmonicBasis, pol) -> FloquetLayerModes:
    k = wavenumber(basis.energies)
    if np.any(k == 0):
        raise FloquetError(
            "harmonic with zero energy in the modulated layer at output %g meV" % basis.output_energy
        )
    T = toeplitz_permittivity(layer, basis.size)
    # diag(k^2) T is similar to the symmetric positive matrix Dh T Dh, Dh = diag(|k|)
    dh = np.abs(k)
    lam, Y = linalg.eigh(dh[:, None] * T * dh[None, :])
    rows, cols = linear_sum_assignment(-np.abs(Y))
    order = cols[np.argsort(rows)]
    lam, Y = lam[order], Y[:, order]
    V = dh[:, None] * Y
    if np.linalg.cond(V) > COND_LIMIT:
        raise FloquetError(
            "ill-conditioned harmonic mixing at output %g meV, kpar %g" % (basis.output_energy, kpar)
        )
    q2 = lam - kpar**2
    q = np.sqrt(q2.astype(complex))
    q = np.where(q.imag < 0, -q, q)
    if np.any(q == 0):
        raise FloquetError("zero propagation constant at kpar %g" % kpar)
    Q = q[None, :]
    if pol is Polarization.S:
        H = (V * Q) / k[:, None]
        W = np.block([[V, V], [-H, H]]).astype(complex)
        ez = None
    else:
        B = k[:, None] * T
        H = (B @ V) / Q
        W = np.block([[V, V], [H, -H]]).astype(complex)
        ez = -kpar * np.linalg.solve(T, np.diag(1.0 / k))
    return FloquetLayerModes(q2=q2.astype(complex), q=q, mixing=V.astype(complex), W=W, ez=ez)


def layer_mode_decomposition(
    layer: ModulatedLayerSpec, ctx: PlaneWaveContext, basis: HarmonicBasis
) -> FloquetLayerModes:
    """Harmonic-mixing eigenmodes of the modulated layer.

    Both polarizations reduce to the same eigenproblem
    ``q^2 V = (diag(k_m^2) T - k^2) V``; for p the first-order system in
    (E_x, Z0 H_y) has eigenvector columns ``[V; +-B V / q]`` with
    ``B = diag(k_m) T``. A zero eigenvalue is retried once with k nudged by 1e-9.
    """
    try:
        return _modulated_modes(layer, ctx.kpar, basis, ctx.pol)
    except FloquetError as err:
        logger.warning("%s; retrying with jittered kpar", err)
    try:
        return _modulated_modes(layer, ctx.kpar * (1 + KPAR_JITTER), basis, ctx.pol)
    except FloquetError as err:
        raise FloquetError(
            "layer mode decomposition failed at output %g meV, kpar %g, pol %s: %s"
            % (basis.output_energy, ctx.kpar, ctx.pol.value, err)
        ) from err


def region_modes(region: Region, ctx: PlaneWaveContext, basis: HarmonicBasis) -> FloquetLayerModes:
    material = region.material
    if isinstance(material, ModulatedLayerSpec) and material.delta_eps > 0:
        return layer_mode_decomposition(material, ctx, basis)
    eps = np.asarray(material.permittivity(basis.energies), dtype=complex)
    return _homogeneous_modes(eps, basis.energies, ctx.kpar, ctx.pol)


class SMatrix(NamedTuple):
    """Blocks: 11 up-transmission, 12 top reflection, 21 bottom reflection, 22 down-transmission."""

    s11: np.ndarray
    s12: np.ndarray
    s21: np.ndarray
    s22: np.ndarray


def star(A: SMatrix, B: SMatrix) -> SMatrix:
    """Redheffer product of a lower section A and the section B above it."""
    n = A.s11.shape[0]
    F = np.linalg.inv(np.eye(n) - A.s12 @ B.s21)
    B11F = B.s11 @ F
    A22B21F = A.s22 @ B.s21 @ F
    return SMatrix(
        B11F @ A.s11,
        B.s12 + B11F @ A.s12 @ B.s22,
        A.s21 + A22B21F @ A.s11,
        A.s22 @ B.s22 + A22B21F @ A.s12 @ B.s22,
    )


def interface_smatrix(lower: FloquetLayerModes, upper: FloquetLayerModes) -> SMatrix:
    n = lower.size
    lhs = np.hstack([upper.W[:, :n], -lower.W[:, n:]])
    rhs = np.hstack([lower.W[:, :n], -upper.W[:, n:]])
    X = np.linalg.solve(lhs, rhs)
    return SMatrix(X[:n, :n], X[:n, n:], X[n:, :n], X[n:, n:])


def propagation_smatrix(modes: FloquetLayerModes, thickness: float) -> SMatrix:
    X = np.diag(np.exp(1j * modes.q * thickness))
    zero = np.zeros_like(X)
    return SMatrix(X, zero, zero, X)


@dataclass
class StackSolution:
    """Scattering state for all unit excitations at one (w, k, pol).

    Excitation columns: ``0..n-1`` unit incoming waves from body 2 at harmonic
    ``m``; ``n..2n-1`` unit incoming waves from body 1. ``amplitudes[r]`` holds
    the ``(u, d)`` modal amplitude matrices of region ``r`` (bottom to top).
    """

    regions: List[Region]
    ctx: PlaneWaveContext
    basis: HarmonicBasis
    modes: List[FloquetLayerModes]
    amplitudes: List[Tuple[np.ndarray, np.ndarray]]
    smatrix: SMatrix
    method: str

    @property
    def size(self):
        return self.basis.size

    def column(self, body: int, l: int) -> int:
        index = self.basis.index(l)
        if body == 2:
            return index
        if body == 1:
            return self.size + index
        raise ValueError("bodies are numbered 1 and 2, got %r" % body)

    def outgoing(self, body: int) -> np.ndarray:
        """Outgoing amplitudes into ``body``: rows harmonics, columns excitations."""
        if body == 1:
            return self.amplitudes[-1][0]
        if body == 2:
            return self.amplitudes[0][1]
        raise ValueError("bodies are numbered 1 and 2, got %r" % body)

    def region_index(self, z: float) -> int:
        for r, region in enumerate(self.regions):
            if z <= region.z_hi:
                return r
        return len(self.regions) - 1

    def _references(self, r):
        region = self.regions[r]
        if r == 0:
            return region.z_hi, region.z_hi
        if r == len(self.regions) - 1:
            return region.z_lo, region.z_lo
        return region.z_lo, region.z_hi

    def tangential(self, z: float, r: Optional[int] = None) -> np.ndarray:
        """Tangential fields ``[E_t; H_t]`` at ``z`` for every excitation, shape (2n, 2n)."""
        r = self.region_index(z) if r is None else r
        z_u, z_d = self._references(r)
        modes = self.modes[r]
        u, d = self.amplitudes[r]
        up = np.exp(1j * modes.q * (z - z_u))[:, None] * u
        down = np.exp(-1j * modes.q * (z - z_d))[:, None] * d
        return modes.W @ np.vstack([up, down])

    def field(self, z: float) -> np.ndarray:
        """Electric field vectors at ``z``: shape (n harmonics, 3, 2n excitations)."""
        r = self.region_index(z)
        F = self.tangential(z, r)
        n = self.size
        E = np.zeros((n, 3, 2 * n), dtype=complex)
        if self.ctx.pol is Polarization.S:
            E[:, 1, :] = F[:n]
        else:
            E[:, 0, :] = F[:n]
            E[:, 2, :] = self.modes[r].ez @ F[n:]
        return E

    def boundary_residual(self) -> float:
        """Largest relative mismatch of tangential fields across all interfaces."""
        worst = 0.0
        for r in range(len(self.regions) - 1):
            z = self.regions[r].z_hi
            below = self.tangential(z, r)
            above = self.tangential(z, r + 1)
            scale = max(np.max(np.abs(below)), np.max(np.abs(above)), np.finfo(float).tiny)
            worst = max(worst, float(np.max(np.abs(below - above)) / scale))
        return worst


def _excitations(n):
    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)
    return np.hstack([eye, zero]), np.hstack([zero, eye])


def _solve_transfer(regions, modes):
    # None when the product is ill-conditioned
    n = modes[0].size
    u0, d_top = _excitations(n)
    transfers = []
    total = modes[0].W
    with np.errstate(over="ignore", invalid="ignore"):
        for r in range(1, len(regions) - 1):
            m = modes[r]
            phase = np.exp(1j * m.q * regions[r].thickness)
            L = m.W @ np.diag(np.concatenate([phase, 1 / phase])) @ np.linalg.inv(m.W)
            transfers.append(L)
            total = L @ total
        T = np.linalg.solve(modes[-1].W, total)
    if not np.all(np.isfinite(T)) or np.linalg.cond(T) > COND_LIMIT:
        return None
    T11, T12, T21, T22 = T[:n, :n], T[:n, n:], T[n:, :n], T[n:, n:]
    try:
        T22inv = np.linalg.inv(T22)
    except np.linalg.LinAlgError:
        return None
    d0 = T22inv @ (d_top - T21 @ u0)
    u_top = T11 @ u0 + T12 @ d0
    smatrix = SMatrix(T11 - T12 @ T22inv @ T21, T12 @ T22inv, -T22inv @ T21, T22inv)

    amplitudes = [(u0, d0)]
    F_bottom = modes[0].W @ np.vstack([u0, d0])
    for r, L in zip(range(1, len(regions) - 1), transfers):
        F_top = L @ F_bottom
        u_b = np.linalg.solve(modes[r].W, F_bottom)[:n]
        d_t = np.linalg.solve(modes[r].W, F_top)[n:]
        amplitudes.append((u_b, d_t))
        F_bottom = F_top
    amplitudes.append((u_top, d_top))
    return smatrix, amplitudes


def _solve_redheffer(regions, modes):
    n = modes[0].size
    R = len(regions)
    u0, d_top = _excitations(n)
    interfaces = [interface_smatrix(modes[r], modes[r + 1]) for r in range(R - 1)]
    props = {r: propagation_smatrix(modes[r], regions[r].thickness) for r in range(1, R - 1)}

    prefix = {1: interfaces[0]}
    for r in range(1, R - 1):
        prefix[r + 1] = star(star(prefix[r], props[r]), interfaces[r])
    suffix = {R - 2: interfaces[R - 2]}
    for r in range(R - 3, 0, -1):
        suffix[r] = star(interfaces[r], star(props[r + 1], suffix[r + 1]))
    total = prefix[R - 1]

    amplitudes = [(u0, total.s21 @ u0 + total.s22 @ d_top)]
    eye = np.eye(n)
    for r in range(1, R - 1):
        L, H = prefix[r], suffix[r]
        X = props[r].s11
        u_b = np.linalg.solve(eye - L.s12 @ X @ H.s21 @ X, L.s11 @ u0 + L.s12 @ X @ H.s22 @ d_top)
        d_t = H.s21 @ X @ u_b + H.s22 @ d_top
        amplitudes.append((u_b, d_t))
    amplitudes.append((total.s11 @ u0 + total.s12 @ d_top, d_top))
    return total, amplitudes


def solve_regions(
    regions: Sequence[Region], ctx: PlaneWaveContext, basis: HarmonicBasis, method: str = "auto"
) -> StackSolution:
    """Solve any bottom-to-top list of regions (half-spaces at both ends)."""
    if len(regions) < 2:
        raise ValueError("need at least two regions")
    modes = [region_modes(region, ctx, basis) for region in regions]
    solved = None
    used = "redheffer"
    if method in ("auto", "transfer"):
        solved = _solve_transfer(regions, modes)
        if solved is not None:
            used = "transfer"
        elif method == "transfer":
            raise FloquetError("transfer matrix is ill-conditioned at kpar %g" % ctx.kpar)
        else:
            logger.debug(
                "transfer matrix ill-conditioned at w=%g, kpar=%g; cascading S-matrices",
                basis.output_energy, ctx.kpar,
            )
    if solved is None:
        solved = _solve_redheffer(regions, modes)
    smatrix, amplitudes = solved
    return StackSolution(list(regions), ctx, basis, modes, amplitudes, smatrix, used)


def stack_scattering(
    s: LayerStack, ctx: PlaneWaveContext, basis: HarmonicBasis, method: str = "auto"
) -> StackSolution:
    validate_stack(s)
    mod = s.modulation
    if mod is not None and not np.isclose(mod.mod_freq, basis.mod_energy, rtol=1e-12, atol=0):
        raise ValueError(
            "basis modulation energy %g differs from the layer's %g" % (basis.mod_energy, mod.mod_freq)
        )
    return solve_regions(s.regions(), ctx, basis, method)


def source_body(s: LayerStack, z_src: float) -> int:
    rid = region_of(s, z_src)
    if rid is RegionId.BODY1:
        return 1
    if rid is RegionId.BODY2:
        return 2
    raise RegionError("source at z=%g nm lies in the lossless region %s" % (z_src, rid.name))


def source_factor(s: LayerStack, body: int, energy: float, ctx: PlaneWaveContext):
    """Amplitude vector i/(2 kz) p_in and kz of a body-embedded source at ``energy``."""
    eps = complex(s.body(body).permittivity(energy))
    kz = complex(kz_branch(eps, energy, ctx.kpar))
    p_in = polarization_vector(eps, energy, ctx.kpar, kz, ctx.pol, upward=(body == 2))
    return 1j / (2 * kz) * p_in, kz


def source_depth(s: LayerStack, body: int, z_src: float) -> float:
    if body == 1:
        return z_src - s.gap
    return -s.mod_layer.thickness - z_src


def greens_planewave(
    s: LayerStack,
    ctx: PlaneWaveContext,
    basis: HarmonicBasis,
    l: int,
    z_obs: float,
    z_src: float,
    i: int,
    j: int,
    solution: Optional[StackSolution] = None,
) -> complex:
    """Weyl amplitude g_ij(z_obs, z_src) from source energy w_l to output energy w.

    Components are indexed 0, 1, 2 for x, y, z. The direct homogeneous-medium
    wave is added when l = 0 and both points lie in the same body.
    """
    body = source_body(s, z_src)
    sol = solution or stack_scattering(s, ctx, basis)
    energy = basis.energies[basis.index(l)]
    factor, kz = source_factor(s, body, energy, ctx)
    zeta = source_depth(s, body, z_src)
    obs = sol.field(z_obs)[basis.index(0), :, sol.column(body, l)]
    g = obs[i] * factor[j] * np.exp(1j * kz * zeta)
    if l == 0 and region_of(s, z_obs) is region_of(s, z_src):
        eps = complex(s.body(body).permittivity(energy))
        upward = z_obs > z_src
        p = polarization_vector(eps, energy, ctx.kpar, kz, ctx.pol, upward=upward)
        g += 1j / (2 * kz) * p[i] * p[j] * np.exp(1j * kz * abs(z_obs - z_src))
    return complex(g)


def perturbative_first_order(
    s: LayerStack, ctx: PlaneWaveContext, basis: HarmonicBasis, nodes: int = 64
) -> Dict[Tuple[int, int, int], complex]:
    """First Born conversion amplitudes ``{(beta, alpha, l): A}`` for l = +-1.

    ``A`` is the outgoing amplitude into body beta at w for a unit incoming
    wave from body alpha at w_l, from the overlap of the two static fields in
    the modulated layer, obtained by reciprocity:
    ``A = i/(2 kz_beta) k0^2 (delta_eps/2) int sum_j mirror_j U_j E_l,j dz``.
    """
    mod = s.modulation
    if mod is None:
        raise ValueError("stack has no modulated layer")
    static = stack_scattering(s.static(), ctx, basis)
    depth = s.mod_layer.thickness
    x, w = np.polynomial.legendre.leggauss(nodes)
    zs = -0.5 * depth * (1 - x)
    weights = 0.5 * depth * w
    fields = np.array([static.field(z) for z in zs])  # (nodes, harmonics, 3, excitations)
    i0 = basis.index(0)
    k0 = wavenumber(basis.output_energy)

    amplitudes = {}
    for beta in (1, 2):
        eps_b = complex(s.body(beta).permittivity(basis.output_energy))
        kz_b = complex(kz_branch(eps_b, basis.output_energy, ctx.kpar))
        U = fields[:, i0, :, static.column(beta, 0)]
        for alpha in (1, 2):
            for l in (-1, 1):
                E = fields[:, basis.index(l), :, static.column(alpha, l)]
                overlap = np.sum(weights[:, None] * MIRROR[None, :] * U * E)
                amplitudes[(beta, alpha, l)] = complex(
                    1j / (2 * kz_b) * k0**2 * 0.5 * mod.delta_eps * overlap
                )
    return amplitudes

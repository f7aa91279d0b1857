# Physical constants in the engine's unit system: energies in meV, lengths in nm.
from scipy import constants

HBAR_EV_S = constants.physical_constants["reduced Planck constant in eV s"][0]
HBAR_MEV_S = HBAR_EV_S * 1e3

# hbar * c in meV nm, so that k0 = energy / HBARC_MEV_NM is in 1/nm
HBARC_MEV_NM = constants.hbar * constants.c / constants.e * 1e3 * 1e9

KB_MEV_PER_K = constants.k / constants.e * 1e3

MEV_TO_J = constants.e * 1e-3
PER_NM2_TO_PER_M2 = 1e18


def wavenumber(energy):
    """Vacuum wavenumber (1/nm) of a signed photon energy in meV."""
    return energy / HBARC_MEV_NM

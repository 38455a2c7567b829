"""Fredholm determinants, scattering data and resonances of d^4 + 2 d p d + q."""

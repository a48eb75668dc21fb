"""Closed-form reference solutions used to check the numerical pipelines.

Free evolution only: a spreading Gaussian packet (with optional carrier
momentum, via Galilean boost of the packet at rest) and the plane wave.
Conventions: the packet's |psi|^2 has standard deviation sigma0 at t=0 and

    sigma(t) = sigma0 * sqrt(1 + (hbar t / (2 m sigma0^2))^2),

and its pilot trajectories are the homothety x(t) = xc(t) + (x(0) - x0) *
sigma(t)/sigma0 about the moving center xc(t) = x0 + hbar k0 t / m.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "free_gaussian_psi",
    "free_gaussian_rho",
    "free_gaussian_phase",
    "free_gaussian_width",
    "free_gaussian_velocity",
    "free_gaussian_path",
    "plane_wave_psi",
]


def _tau(t: float, sigma0: float, hbar: float, mass: float) -> float:
    return hbar * t / (2.0 * mass * sigma0 ** 2)


def free_gaussian_psi(x, t, *, sigma0=1.0, x0=0.0, k0=0.0, hbar=1.0, mass=1.0):
    """Free Gaussian packet, unit L2 norm."""
    lam = 1.0 + 1j * _tau(t, sigma0, hbar, mass)
    xc = x0 + hbar * k0 * t / mass
    x = np.asarray(x, dtype=float)
    envelope = (2.0 * np.pi * sigma0 ** 2) ** -0.25 / np.sqrt(lam)
    return envelope * np.exp(-((x - xc) ** 2) / (4.0 * sigma0 ** 2 * lam)
                             + 1j * (k0 * (x - x0) - hbar * k0 ** 2 * t / (2.0 * mass)))


def free_gaussian_rho(x, t, *, sigma0=1.0, x0=0.0, k0=0.0, hbar=1.0, mass=1.0):
    sig = free_gaussian_width(t, sigma0=sigma0, hbar=hbar, mass=mass)
    xc = x0 + hbar * k0 * t / mass
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - xc) ** 2) / (2.0 * sig ** 2)) / np.sqrt(2.0 * np.pi * sig ** 2)


def free_gaussian_phase(x, t, *, sigma0=1.0, x0=0.0, k0=0.0, hbar=1.0, mass=1.0):
    """Action phase S with the same constant as free_gaussian_psi."""
    tau = _tau(t, sigma0, hbar, mass)
    xc = x0 + hbar * k0 * t / mass
    x = np.asarray(x, dtype=float)
    curvature = tau * (x - xc) ** 2 / (4.0 * sigma0 ** 2 * (1.0 + tau ** 2))
    return hbar * (k0 * (x - x0) - hbar * k0 ** 2 * t / (2.0 * mass)
                   + curvature - 0.5 * np.arctan(tau))


def free_gaussian_width(t, *, sigma0=1.0, hbar=1.0, mass=1.0):
    return sigma0 * np.sqrt(1.0 + _tau(t, sigma0, hbar, mass) ** 2)


def free_gaussian_velocity(x, t, *, sigma0=1.0, x0=0.0, k0=0.0, hbar=1.0, mass=1.0):
    """Pilot velocity field grad(S)/m of the packet."""
    tau = _tau(t, sigma0, hbar, mass)
    xc = x0 + hbar * k0 * t / mass
    x = np.asarray(x, dtype=float)
    return hbar * k0 / mass + hbar * tau * (x - xc) / (2.0 * mass * sigma0 ** 2 * (1.0 + tau ** 2))


def free_gaussian_path(x_start, t, *, sigma0=1.0, x0=0.0, k0=0.0, hbar=1.0, mass=1.0):
    """Pilot trajectory launched from x_start at t=0."""
    sig = free_gaussian_width(t, sigma0=sigma0, hbar=hbar, mass=mass)
    xc = x0 + hbar * k0 * np.asarray(t, dtype=float) / mass
    return xc + (x_start - x0) * sig / sigma0


def plane_wave_psi(x, t, *, k=1.0, hbar=1.0, mass=1.0):
    x = np.asarray(x, dtype=float)
    return np.exp(1j * (k * x - hbar * k ** 2 * t / (2.0 * mass)))

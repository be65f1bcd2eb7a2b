"""Registries of dispersion relations and couplings.

Every callable takes momenta of shape ``(..., d)`` and returns values of shape ``(...)``
(gradients ``(..., d)``, Hessians ``(..., d, d)``).
"""

import inspect
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ModelError


@dataclass(frozen=True)
class Dispersion:
    name: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    is_constant: bool = False
    is_radial: bool = True

    def __call__(self, k):
        return self.value(np.asarray(k, dtype=float))


@dataclass(frozen=True)
class Coupling:
    name: str
    value: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    is_radial: bool = True
    vanishes: bool = False

    def __call__(self, k):
        return self.value(np.asarray(k, dtype=float))


def _sq(k):
    return np.sum(k * k, axis=-1)


def _identity(k, scale=1.0):
    d = k.shape[-1]
    return np.broadcast_to(scale * np.eye(d), k.shape[:-1] + (d, d)).copy()


def quadratic(curvature=1.0):
    """e(k) = curvature * |k|^2 / 2."""
    c = float(curvature)
    return Dispersion(
        name="quadratic",
        value=lambda k: 0.5 * c * _sq(k),
        gradient=lambda k: c * k,
        hessian=lambda k: _identity(k, c),
        params={"curvature": c},
    )


def quadratic_plus_eps_cos(eps=0.05, curvature=1.0):
    """Quadratic band with a small periodic correction eps * sum_i cos(k_i)."""
    c, a = float(curvature), float(eps)

    def hessian(k):
        h = _identity(k, c)
        idx = np.arange(k.shape[-1])
        h[..., idx, idx] -= a * np.cos(k)
        return h

    return Dispersion(
        name="quadratic_plus_eps_cos",
        value=lambda k: 0.5 * c * _sq(k) + a * np.sum(np.cos(k), axis=-1),
        gradient=lambda k: c * k - a * np.sin(k),
        hessian=hessian,
        params={"eps": a, "curvature": c},
        is_radial=False,
    )


def constant_omega(value=1.0):
    w = float(value)
    return Dispersion(
        name="constant_omega",
        value=lambda k: np.full(k.shape[:-1], w),
        gradient=lambda k: np.zeros_like(k),
        hessian=lambda k: _identity(k, 0.0),
        params={"value": w},
        is_constant=True,
    )


def acoustic_soft(gap=1.0, velocity=0.2):
    """Gapped soft branch gap + velocity * (<k> - 1), <k> = sqrt(1 + |k|^2)."""
    g, v = float(gap), float(velocity)

    def bracket(k):
        return np.sqrt(1.0 + _sq(k))

    def hessian(k):
        b = bracket(k)[..., None, None]
        outer = k[..., :, None] * k[..., None, :]
        return v * (_identity(k) / b - outer / b**3)

    return Dispersion(
        name="acoustic_soft",
        value=lambda k: g + v * (bracket(k) - 1.0),
        gradient=lambda k: v * k / bracket(k)[..., None],
        hessian=hessian,
        params={"gap": g, "velocity": v},
    )


def gaussian(amplitude=1.0, width=1.0):
    """Q(k) = amplitude * exp(-|k|^2 / (2 width^2)); the default coupling."""
    a, w = float(amplitude), float(width)
    return Coupling(
        name="gaussian",
        value=lambda k: a * np.exp(-0.5 * _sq(k) / w**2),
        params={"amplitude": a, "width": w},
        vanishes=a == 0.0,
    )


def constant(value=1.0):
    q = float(value)
    return Coupling(
        name="constant",
        value=lambda k: np.full(k.shape[:-1], q),
        params={"value": q},
        vanishes=q == 0.0,
    )


def zero():
    return Coupling(name="zero", value=lambda k: np.zeros(k.shape[:-1]), vanishes=True)


def annulus(inner=0.5, outer=1.0, amplitude=1.0):
    """Smooth bump supported on inner < |k| < outer."""
    lo, hi, a = float(inner), float(outer), float(amplitude)
    if not 0.0 <= lo < hi:
        raise ModelError(f"annulus needs 0 <= inner < outer, got {lo}, {hi}")

    def value(k):
        x = (np.sqrt(_sq(k)) - 0.5 * (lo + hi)) / (0.5 * (hi - lo))
        inside = np.abs(x) < 1.0
        out = np.zeros_like(x)
        out[inside] = a * np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
        return out

    return Coupling(name="annulus", value=value, params={"inner": lo, "outer": hi, "amplitude": a})


DISPERSIONS = {
    "quadratic": quadratic,
    "quadratic_plus_eps_cos": quadratic_plus_eps_cos,
    "constant_omega": constant_omega,
    "acoustic_soft": acoustic_soft,
}

COUPLINGS = {
    "gaussian": gaussian,
    "constant": constant,
    "zero": zero,
    "annulus": annulus,
}


def parameter_names(registry, name):
    return list(inspect.signature(registry[name]).parameters)


def make_dispersion(name, **params):
    try:
        factory = DISPERSIONS[name]
    except KeyError:
        raise ModelError(f"unknown dispersion {name!r}; choose from {sorted(DISPERSIONS)}") from None
    return factory(**params)


def make_coupling(name, **params):
    try:
        factory = COUPLINGS[name]
    except KeyError:
        raise ModelError(f"unknown coupling {name!r}; choose from {sorted(COUPLINGS)}") from None
    return factory(**params)

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .dispersions import Coupling, Dispersion, constant_omega, gaussian, make_coupling, make_dispersion, quadratic
from .exceptions import BathUnstable, ModelError

logger = logging.getLogger(__name__)

EMISSION = 1
ABSORPTION = -1
BRANCHES = (EMISSION, ABSORPTION)


@dataclass(frozen=True)
class Model:
    """Electron band e, phonon branch omega, coupling Q and bath parameters.

    Immutable; all callables are vectorized over the trailing momentum axis.
    """

    dimension: int
    electron: Dispersion
    phonon: Dispersion
    coupling: Coupling
    beta: float = 1.0
    mu: float = 0.0
    lam: float = 0.0
    epsilon: float = 1.0
    weak_coupling: bool = False
    name: str = field(default="model", compare=False)

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ModelError(f"dimension must be a positive integer, got {self.dimension}")
        if self.beta <= 0:
            raise ModelError(f"beta must be positive, got {self.beta}")
        if self.lam < 0:
            raise ModelError(f"lambda must be nonnegative, got {self.lam}")
        if not 0 < self.epsilon <= 1:
            raise ModelError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.weak_coupling and abs(self.lam**2 - self.epsilon) > 1e-12:
            raise ModelError(f"weak coupling requires lambda^2 = epsilon, got {self.lam**2} != {self.epsilon}")
        if self.oracle_only:
            logger.warning("model %s has d=%d < 3: results are oracle-only", self.name, self.dimension)

    @property
    def oracle_only(self):
        return self.dimension < 3

    @property
    def is_isotropic(self):
        return self.electron.is_radial and self.phonon.is_radial and self.coupling.is_radial

    def e(self, k):
        return self.electron(k)

    def omega(self, k):
        return self.phonon(k)

    def Q(self, k):
        return self.coupling(k)

    def occupation(self, k):
        return phonon_occupation(self, k)

    def phi(self, p, k, sigma):
        return phi(self, p, k, sigma)

    def vertex_weight(self, k, sigma):
        """M(k, sigma) = |Q(k)|^2 (N(k) + (sigma + 1) / 2)."""
        return self.Q(k) ** 2 * (self.occupation(k) + 0.5 * (sigma + 1))

    def with_params(self, **changes):
        return replace(self, **changes)

    def describe(self):
        return {
            "dimension": self.dimension,
            "electron": {"name": self.electron.name, **self.electron.params},
            "phonon": {"name": self.phonon.name, **self.phonon.params},
            "coupling": {"name": self.coupling.name, **self.coupling.params},
            "beta": self.beta,
            "mu": self.mu,
            "lam": self.lam,
            "epsilon": self.epsilon,
            "weak_coupling": self.weak_coupling,
            "oracle_only": self.oracle_only,
        }


def phonon_occupation(model, k):
    """Bose-Einstein occupation e^{-beta w + mu} / (1 - e^{-beta w + mu})."""
    gap = model.beta * model.omega(k) - model.mu
    if np.any(gap <= 0):
        raise BathUnstable(f"beta*omega - mu = {np.min(gap):.6g} <= 0")
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(gap)


def phi(model, p, k, sigma):
    """Phi_sigma(p, k) = e(k + p) + sigma * omega(k)."""
    p = np.asarray(p, dtype=float)
    k = np.asarray(k, dtype=float)
    return model.e(k + p) + sigma * model.omega(k)


def detailed_balance_ratio(model, k):
    """M(k,+)/M(k,-) = (N+1)/N; equals e^{beta w(k) - mu} wherever Q(k) != 0."""
    n = phonon_occupation(model, k)
    return (n + 1.0) / n


def default_model(dimension=3, omega=1.0, beta=1.0, mu=0.0, lam=0.0, epsilon=1.0, coupling=None, **kwargs):
    """e = |k|^2/2, constant omega, Gaussian Q(k) = exp(-|k|^2/2)."""
    return Model(
        dimension=dimension,
        electron=quadratic(),
        phonon=constant_omega(omega),
        coupling=gaussian() if coupling is None else coupling,
        beta=beta,
        mu=mu,
        lam=lam,
        epsilon=epsilon,
        **kwargs,
    )


def build_model(section):
    """Model from a validated config section (see ``experiments.forms.ModelSectionForm``)."""
    params = {"electron": {}, "phonon": {}, "coupling": {}}
    for key, value in section.items():
        prefix, _, name = key.partition(".")
        if name and prefix in params:
            params[prefix][name] = value
    return Model(
        dimension=int(section.get("dimension", 3)),
        electron=make_dispersion(section.get("electron", "quadratic"), **params["electron"]),
        phonon=make_dispersion(section.get("phonon", "constant_omega"), **params["phonon"]),
        coupling=make_coupling(section.get("coupling", "gaussian"), **params["coupling"]),
        beta=float(section.get("beta", 1.0)),
        mu=float(section.get("mu", 0.0)),
        lam=float(section.get("lam", 0.0)),
        epsilon=float(section.get("epsilon", 1.0)),
        weak_coupling=bool(section.get("weak_coupling", False)),
        name=section.get("name", "model"),
    )

"""Runtime validation of the standing assumptions on a sampled momentum grid."""

import itertools
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from kinetics.conf import knob

from . import derivatives
from .exceptions import GridTooCoarse
from .model import BRANCHES, phi, phonon_occupation

logger = logging.getLogger(__name__)

GROWTH_CAP = 1e3


@dataclass(frozen=True)
class GridSpec:
    """Uniform box [-k_max, k_max]^d with ``points`` nodes per axis."""

    k_max: float = None
    points: int = None
    step: float = None
    base_momenta: tuple = ((0.0,), (0.5,))

    def resolved(self):
        return GridSpec(
            k_max=knob("K_MAX", self.k_max),
            points=knob("GRID_POINTS", self.points),
            step=knob("FD_STEP", self.step),
            base_momenta=self.base_momenta,
        )

    @property
    def spacing(self):
        return 2.0 * self.k_max / (self.points - 1)

    def nodes(self, d):
        axis = np.linspace(-self.k_max, self.k_max, self.points)
        return np.array(list(itertools.product(axis, repeat=d)))

    def bases(self, d):
        out = []
        for p in self.base_momenta:
            vec = np.zeros(d)
            vec[: len(p)] = p[:d]
            out.append(vec)
        return out


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    measured: float
    threshold: float = None
    worst_point: list = None
    note: str = ""


@dataclass
class AssumptionReport:
    checks: dict = field(default_factory=dict)
    max_order: int = 0

    def add(self, check):
        if check.name in self.checks:
            raise ValueError(f"assumption {check.name!r} reported twice")
        self.checks[check.name] = check
        level = logging.DEBUG if check.passed else logging.WARNING
        message = "%s: passed=%s measured=%.6g threshold=%s"
        logger.log(level, message, check.name, check.passed, check.measured, check.threshold)

    @property
    def passed(self):
        return all(check.passed for check in self.checks.values())

    def failures(self):
        return [name for name, check in self.checks.items() if not check.passed]

    def __getitem__(self, name):
        return self.checks[name]

    def as_dict(self):
        checks = {k: asdict(v) for k, v in self.checks.items()}
        return {"passed": self.passed, "max_order": self.max_order, "checks": checks}


def _bracket(k):
    return np.sqrt(1.0 + np.sum(k * k, axis=-1))


def _worst(nodes, values):
    return nodes[int(np.argmax(values))].tolist()


def _check_symmetry(model, nodes):
    worst, where = 0.0, nodes[0]
    functions = [model.e, model.omega, model.Q]
    if np.all(model.beta * model.omega(nodes) > model.mu):
        functions.append(lambda k: phonon_occupation(model, k))
    for f in functions:
        gap = np.abs(f(nodes) - f(-nodes))
        if gap.max() > worst:
            worst, where = gap.max(), nodes[int(np.argmax(gap))]
    return AssumptionCheck("symmetry", worst <= 1e-10, float(worst), 1e-10, where.tolist())


def _check_growth(name, f, nodes, max_order, step):
    envelope = derivatives.derivative_envelope(f, nodes, max_order, step)
    bracket = _bracket(nodes)
    ratios = np.stack([envelope[order] / (1.0 + bracket ** (2 - order)) for order in range(max_order + 1)])
    worst = ratios.max(axis=0)
    return AssumptionCheck(
        name,
        bool(worst.max() <= GROWTH_CAP),
        float(worst.max()),
        GROWTH_CAP,
        _worst(nodes, worst),
        f"|D^l f| / (1 + <k>^(2-l)) for l <= {max_order}",
    )


def _check_coercivity(model, grid, nodes, d):
    sup_norm = np.max(np.abs(nodes), axis=-1)
    outer = np.isclose(sup_norm, grid.k_max)
    middle = np.isclose(sup_norm, sup_norm[np.argmin(np.abs(sup_norm - 0.5 * grid.k_max))])
    margin = np.inf
    for p in grid.bases(d):
        for sigma in BRANCHES:
            values = phi(model, p, nodes, sigma)
            margin = min(margin, values[outer].min() - values[middle].min())
    note = "min Phi on outer shell - min on mid shell"
    return AssumptionCheck("coercivity", bool(margin > 0), float(margin), 0.0, note=note)


def _check_hessian(model, grid, nodes, d, c3, c4):
    low, high, where = np.inf, -np.inf, None
    for p in grid.bases(d):
        for sigma in BRANCHES:
            h = derivatives.hessian(lambda k: phi(model, p, k, sigma), nodes, grid.step)
            eig = np.linalg.eigvalsh(h)
            i = int(np.argmin(eig[:, 0]))
            if eig[i, 0] < low:
                low, where = eig[i, 0], nodes[i].tolist()
            high = max(high, eig[:, -1].max())
    passed = bool(low >= c3 and high <= c4)
    note = f"smallest eigenvalue {low:.6g}, largest {high:.6g}"
    return AssumptionCheck("hessian", passed, float(low), c3, where, note)


def _check_decay(model, grid, nodes, d, max_order):
    envelope = derivatives.derivative_envelope(model.Q, nodes, max_order, grid.step).max(axis=0)
    weighted = envelope * _bracket(nodes) ** (2 * d + 12)
    outer = np.isclose(np.max(np.abs(nodes), axis=-1), grid.k_max)
    peak = weighted.max()
    passed = bool(peak == 0.0 or weighted[outer].max() < weighted[~outer].max())
    note = "weighted derivative envelope must peak strictly inside the grid"
    return AssumptionCheck("decay", passed, float(peak), None, _worst(nodes, weighted), note)


def _check_bath(model, nodes, c6):
    gap = model.omega(nodes) - model.mu / model.beta
    worst = nodes[int(np.argmin(gap))].tolist()
    return AssumptionCheck("bath_gap", bool(gap.min() >= c6), float(gap.min()), c6, worst)


def count_critical_points(values, points, spacing, d):
    """Clusters of grid cells in which every finite-difference gradient component changes sign.

    Minima, maxima and saddles all count; a critical point on a node or a face touches
    several cells, which merge into one cluster.
    """
    grid = values.reshape((points,) * d)
    gradient = np.gradient(grid, spacing)
    if d == 1:
        gradient = [gradient]
    corners = [tuple(slice(o, points - 1 + o) for o in offset) for offset in itertools.product((0, 1), repeat=d)]
    mask = np.ones((points - 1,) * d, dtype=bool)
    for component in gradient:
        values_at = np.stack([component[corner] for corner in corners])
        mask &= (values_at.min(axis=0) <= 0.0) & (values_at.max(axis=0) >= 0.0)
    _, count = ndimage.label(mask, structure=ndimage.generate_binary_structure(d, d))
    return int(count)


def _check_critical_point(model, grid, nodes, d):
    counts = [
        count_critical_points(phi(model, p, nodes, sigma), grid.points, grid.spacing, d)
        for p in grid.bases(d)
        for sigma in BRANCHES
    ]
    note = "oracle-only dimension" if d < 3 else ""
    return AssumptionCheck("critical_point", all(c == 1 for c in counts), float(max(counts)), 1.0, note=note)


def validate_assumptions(model, grid=None, c3=None, c4=None, c6=None):
    """Check symmetry, derivative growth, coercivity, Hessian bounds, decay of Q and the bath gap."""
    grid = (grid or GridSpec()).resolved()
    c3, c4, c6 = knob("C3", c3), knob("C4", c4), knob("C6", c6)
    d = model.dimension
    max_order = min(knob("MAX_DERIVATIVE_ORDER"), 2 * d)
    if grid.points < 3:
        raise GridTooCoarse(f"need at least 3 nodes per axis, got {grid.points}")
    if derivatives.stencil_reach(max_order) * grid.step > grid.spacing:
        raise GridTooCoarse(
            f"stencil reach {derivatives.stencil_reach(max_order) * grid.step:.3g}"
            f" exceeds grid spacing {grid.spacing:.3g}"
        )
    nodes = grid.nodes(d)
    logger.info("validating %s on %d nodes, derivatives to order %d", model.name, len(nodes), max_order)

    report = AssumptionReport(max_order=max_order)
    report.add(_check_symmetry(model, nodes))
    report.add(_check_growth("electron_growth", model.e, nodes, max_order, grid.step))
    report.add(_check_growth("phonon_growth", model.omega, nodes, max_order, grid.step))
    report.add(_check_coercivity(model, grid, nodes, d))
    report.add(_check_hessian(model, grid, nodes, d, c3, c4))
    report.add(_check_decay(model, grid, nodes, d, max_order))
    report.add(_check_bath(model, nodes, c6))
    report.add(_check_critical_point(model, grid, nodes, d))
    return report

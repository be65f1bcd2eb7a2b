"""Registered experiments.

A runner takes the resolved config, the model built from its model section and an
ArtifactWriter, and returns an Outcome: named checks with a pass flag each, plus the
results echoed into ``summary.json``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from boltzmann.dyson import dyson_series
from boltzmann.ensemble import (
    GaussianPacket,
    ParticleEnsemble,
    energy_histogram_test,
    free_flight,
    gibbs_packet,
    observable_estimate,
)
from boltzmann.kmc import evolve, jump_rate_check, observable_series
from diagrams.counting import count_by_max_peaks, exceptional_fraction, nested_count, ramsey_check
from diagrams.patterns import enumerate_patterns, pattern_count
from kernels.collision import CollisionKernel, kernel_table
from kernels.resolvent import psi_function, theta_decay_slope
from kinetics.streams import KERNELS, WIGNER, stream
from physics.assumptions import GridSpec, validate_assumptions
from quantum.dynamics import Propagator, conservation_report, gaussian_electron, product_state
from quantum.ladder import ladder_term_check
from quantum.lattice import FockBasis, FockTruncation, LatticeSpec
from quantum.operators import (
    G_sharp,
    build_hamiltonian,
    free_energies,
    gibbs_phonon_state,
    hermiticity_defect,
    phonon_two_point,
)
from wigner.grids import MomentumGrid, random_state, rescale, wigner_transform
from wigner.observables import GaussianObservable, constant_observable, observable_kernel, pair, trace_pairing
from wigner.wkb import gaussian_amplitude, linear_phase, wkb_wigner_limit_check

from . import forms

logger = logging.getLogger(__name__)

REGISTRY = {}

RAMSEY_CASES = ((1, 1), (1, 2), (2, 1))


@dataclass(frozen=True)
class Runner:
    name: str
    run: object
    form: type
    description: str


@dataclass
class Outcome:
    checks: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)

    def check(self, name, passed, **details):
        self.checks[name] = {"passed": bool(passed), **details}
        if not passed:
            logger.warning("check %s failed: %s", name, details)

    @property
    def passed(self):
        return all(check["passed"] for check in self.checks.values())


def experiment(name, form, description):
    def register(run):
        REGISTRY[name] = Runner(name, run, form, description)
        return run

    return register


def _vector(value, dimension, key):
    if value is None:
        return (0.0,) * dimension
    if len(value) != dimension:
        raise ValidationError(f"params.{key}: expected {dimension} components, got {len(value)}", code="invalid")
    return tuple(value)


def _packet(model, params):
    d = model.dimension
    return GaussianPacket(
        _vector(params.get("position"), d, "position"),
        _vector(params.get("momentum"), d, "momentum"),
        params["spread_x"],
        params["spread_v"],
    )


def _observable(model, params):
    origin = (0.0,) * model.dimension
    width = params["observable_width"]
    return GaussianObservable(origin, width, v_center=origin, v_width=width)


@experiment("validate-model", forms.ValidateModelForm, "check the standing assumptions on a momentum grid")
def validate_model(config, model, writer):
    params = config.params
    report = validate_assumptions(model, GridSpec(k_max=params.get("k_max"), points=params.get("grid_points")))
    writer.json("assumptions.json", report.as_dict())
    outcome = Outcome(results={"model": model.describe(), "max_order": report.max_order})
    for name, check in report.checks.items():
        outcome.check(name, check.passed, measured=check.measured, threshold=check.threshold)
    return outcome


@experiment("kernel-table", forms.KernelTableForm, "tabulate sigma_0 and compare -2 Im Psi with it")
def kernel_table_run(config, model, writer):
    params = config.params
    kernel = CollisionKernel(model, resolution=params.get("resolution"))
    momenta = np.zeros((params["speeds"], model.dimension))
    momenta[:, 0] = np.linspace(0.0, params["v_max"], params["speeds"])
    rows = kernel_table(kernel, momenta)
    writer.csv("kernel_table.csv", rows)
    outcome = Outcome(results={"model": model.describe()})
    outcome.check("nonnegative", all(row["sigma0"] >= 0.0 for row in rows))

    samples = params["identity_samples"]
    if samples and not model.coupling.vanishes:
        rng = stream(config.seed, KERNELS, 1)
        identity = []
        for V in rng.standard_normal((samples, model.dimension)):
            psi = psi_function(model, V, resolution=params.get("resolution"))
            sigma0 = float(kernel.exact_branch_cross_sections(V).sum())
            defect = abs(-2.0 * psi.imag_extrapolated - sigma0) / sigma0
            row = {f"V{i + 1}": float(v) for i, v in enumerate(V)}
            row.update({"sigma0": sigma0, "minus_2_im_psi": -2.0 * psi.imag_extrapolated, "defect": defect})
            identity.append(row)
        writer.csv("psi_identity.csv", identity)
        worst = max(row["defect"] for row in identity)
        outcome.check("psi_identity", worst <= params["identity_rtol"], worst=worst, rtol=params["identity_rtol"])

    if params["theta_check"]:
        fit = theta_decay_slope(model)
        writer.csv("theta_envelope.csv", [{"s": s, "envelope": e} for s, e in zip(fit.times, fit.envelope)])
        bound = params["slope_bound"]
        outcome.check("theta_decay", fit.slope <= bound, slope=fit.slope, full_slope=fit.full_slope, bound=bound)
    return outcome


@experiment("boltzmann-run", forms.BoltzmannRunForm, "kinetic Monte Carlo of a Gaussian or Gibbs packet")
def boltzmann_run(config, model, writer):
    params = config.params
    kernel = CollisionKernel(model)
    if params["start"] == "gibbs":
        packet = gibbs_packet(model, spread_x=params["spread_x"])
    else:
        packet = _packet(model, params)
    ensemble = ParticleEnsemble.from_packet(packet, params["count"], seed=config.seed)
    J = _observable(model, params)
    horizon = params["horizon"]
    times = np.linspace(0.0, horizon, params["snapshots"] + 1)
    rows, final = observable_series(kernel, ensemble, J, times, threads=config.threads)

    writer.csv("observable.csv", rows, ["T", "value", "stderr"])
    writer.columns("initial.csv", ensemble.snapshot())
    writer.columns("final.csv", final.snapshot())
    columns = [f"X{i + 1}" for i in range(model.dimension)] + [f"V{i + 1}" for i in range(model.dimension)]
    writer.array("final_phase_space", np.hstack([final.X, final.V]), columns=columns, T=horizon)

    outcome = Outcome(results={"model": model.describe(), "particles": len(final), "jumps": int(final.jumps.sum())})
    outcome.check("mass_conserved", len(final) == len(ensemble) and final.mass == ensemble.mass, mass=final.mass)
    if model.coupling.vanishes:
        shifted = free_flight(ensemble, horizon, model)
        deviation = float(np.abs(final.X - shifted.X).max()) if len(final) else 0.0
        scale = 1e-12 * max(1.0, float(np.abs(shifted.X).max()))
        outcome.check(
            "free_transport",
            deviation <= scale and np.array_equal(final.V, ensemble.V) and not final.jumps.any(),
            deviation=deviation,
        )
    else:
        check = jump_rate_check(final)
        outcome.check("jump_rate", check.agreed, **check.as_dict())
    if params["histogram"]:
        test = energy_histogram_test(model, final)
        level = params["histogram_level"]
        outcome.check("gibbs_histogram", test.passed(level), statistic=test.statistic, pvalue=test.pvalue)
    return outcome


@experiment("dyson-compare", forms.DysonCompareForm, "Dyson partial sums against kinetic Monte Carlo")
def dyson_compare(config, model, writer):
    params = config.params
    kernel = CollisionKernel(model)
    packet = _packet(model, params)
    J = _observable(model, params)
    T = params["horizon"]
    series = dyson_series(
        kernel, T, packet, J, params["orders"], params.get("samples"), seed=config.seed, threads=config.threads
    )
    ensemble = ParticleEnsemble.from_packet(packet, params["count"], seed=config.seed)
    ensemble = evolve(kernel, ensemble, T, threads=config.threads)
    kmc = observable_estimate(J, ensemble)

    rows = [{"order": n, "value": term.value, "stderr": term.stderr} for n, term in enumerate(series.terms)]
    rows.append({"order": "total", "value": series.total.value, "stderr": series.total.stderr})
    rows.append({"order": "kmc", "value": kmc.value, "stderr": kmc.stderr})
    writer.csv("dyson_terms.csv", rows, ["order", "value", "stderr"])
    writer.json("dyson.json", {"series": series.as_dict(), "kmc": kmc.as_dict(), "T": T})

    outcome = Outcome(results={"model": model.describe(), "tail": series.tail})
    outcome.check(
        "dyson_matches_kmc",
        series.total.agrees_with(kmc, sigmas=3.0, slack=series.tail),
        dyson=series.total.as_dict(),
        kmc=kmc.as_dict(),
        tail=series.tail,
    )
    return outcome


def _covariance_check(model, spacing, n_max):
    d = model.dimension
    unit = [1] + [0] * (d - 1)
    lattice = LatticeSpec.from_spacing(d, spacing, [[0] * d], [unit, [-x for x in unit]])
    bath = gibbs_phonon_state(model, FockBasis(lattice, FockTruncation(n_max=n_max)))
    k = lattice.modes[0]
    rows = []
    for tau in np.linspace(0.0, 4.0, 9):
        for s in (0.0, 0.5):
            value = phonon_two_point(model, bath, 0, 0, tau, s)
            expected = complex(G_sharp(model, k, tau - s))
            rows.append({"tau": tau, "s": s, "defect": abs(value - expected)})
    cross = abs(phonon_two_point(model, bath, 0, 1, 0.4, 0.1))
    return rows, cross


@experiment("quantum-oracle", forms.QuantumOracleForm, "exact dynamics of the truncated electron-phonon system")
def quantum_oracle(config, model, writer):
    params = config.params
    lattice = LatticeSpec.cube(model.dimension, params["box"], params["extent"], params["mode_extent"])
    basis = FockBasis(lattice, FockTruncation(n_max=params["n_max"]))
    H = build_hamiltonian(model, basis, threads=config.threads)
    bath = gibbs_phonon_state(model, basis)
    electron = gaussian_electron(lattice)
    state = product_state(basis, electron, bath)
    times = np.linspace(0.0, params["t_max"], params["steps"])
    tolerance = params["tolerance"]

    report = conservation_report(Propagator(H), state, times)
    writer.json("conservation.json", report.as_dict())
    outcome = Outcome(results={"lattice": lattice.describe(), "basis": basis.describe(), "dimension": basis.dimension})
    outcome.check("hermitian", hermiticity_defect(H) <= tolerance, defect=hermiticity_defect(H))
    outcome.check("conservation", report.passed(tolerance), **report.as_dict())

    free = model.with_params(lam=0.0, weak_coupling=False)
    energies = free_energies(free, basis)
    t = params["t_max"]
    evolved = Propagator(build_hamiltonian(free, basis)).evolve(state, t)
    phases = np.exp(-1j * t * (energies[:, None] - energies[None, :]))
    deviation = float(np.abs(evolved.matrix - phases * state.matrix).max())
    outcome.check("free_evolution", deviation <= tolerance, deviation=deviation)

    if params["covariance"]:
        rows, cross = _covariance_check(model, lattice.spacing, params["covariance_n_max"])
        writer.csv("covariance.csv", rows)
        worst = max(row["defect"] for row in rows)
        bound = params["covariance_tolerance"]
        outcome.check("covariance", worst <= bound and cross <= bound, worst=worst, cross=cross, bound=bound)
    return outcome


@experiment("ladder-check", forms.LadderCheckForm, "one-collision ladder term: perturbative trace vs finite sum")
def ladder_check(config, model, writer):
    params = config.params
    d = model.dimension
    axis = [[j] + [0] * (d - 1) for j in (-1, 0, 1, 2)]
    modes = [[1] + [0] * (d - 1), [-1] + [0] * (d - 1)]
    lattice = LatticeSpec.from_spacing(d, params["spacing"], axis, modes)
    report = ladder_term_check(lattice, model, params["lam"], params["t"])
    writer.json("ladder.json", report.as_dict())
    outcome = Outcome(results={"lattice": lattice.describe(), "model": model.describe()})
    outcome.check("ladder_routes", report.agreed(params["tolerance"]), **report.as_dict())
    return outcome


@experiment("wigner-demo", forms.WignerDemoForm, "Wigner pairings, trace identity and WKB limit")
def wigner_demo(config, model, writer):
    params = config.params
    grid = MomentumGrid.from_spacing(1, params["extent"], params["spacing"])
    rng = stream(config.seed, WIGNER, 1)
    tolerance = params["tolerance"]
    rows = []
    for index in range(params["pairs"]):
        density = random_state(grid, rng, rank=2)
        J = GaussianObservable(
            (rng.normal(),), rng.uniform(0.5, 2.0), v_center=(rng.normal(),), v_width=rng.uniform(0.5, 2.0)
        )
        eps = rng.uniform(0.3, 1.0)
        value = pair(J, rescale(wigner_transform(density), eps), check=False)
        trace = trace_pairing(density, observable_kernel(J, grid, eps))
        rows.append({"pair": index, "eps": eps, "pairing": value, "trace": trace.real, "defect": abs(value - trace)})
    writer.csv("trace_identity.csv", rows)
    worst = max(row["defect"] / max(1.0, abs(row["pairing"])) for row in rows)

    density = random_state(grid, rng, rank=3)
    mass = pair(constant_observable(), wigner_transform(density))

    J = GaussianObservable((0.0,), 1.0, v_center=(1.0,), v_width=0.5)
    wkb = wkb_wigner_limit_check(gaussian_amplitude(1.0), linear_phase([1.0]), J, epsilons=params["epsilons"])
    writer.json("wkb.json", wkb.as_dict())

    outcome = Outcome(results={"grid": grid.describe()})
    outcome.check("trace_identity", worst <= tolerance, worst=worst, tolerance=tolerance)
    outcome.check("normalization", abs(mass - 1.0) <= tolerance, mass=mass)
    outcome.check("wkb_monotone", wkb.monotone, defects=wkb.defects)
    return outcome


@experiment("combinatorics-suite", forms.CombinatoricsForm, "peak counts, staircase lemmas and pattern counts")
def combinatorics_suite(config, model, writer):
    params = config.params
    workers = config.threads
    n_range = range(3, params["n_max"] + 1)
    outcome = Outcome()

    pattern_rows = []
    N = params["pattern_N"]
    for n in range(N % 2, N + 1, 2):
        enumerated = len(enumerate_patterns(n, N))
        pattern_rows.append({"n": n, "N": N, "count": pattern_count(n, N), "enumerated": enumerated})
    writer.csv("patterns.csv", pattern_rows)
    outcome.check("pattern_small_case", pattern_count(1, 3) == 2 == len(enumerate_patterns(1, 3)))
    outcome.check("pattern_counts", all(row["count"] == row["enumerated"] for row in pattern_rows))

    Ks = range(params["K_max"] + 1)
    counts = [count_by_max_peaks(n, K, seed=config.seed, workers=workers) for n in n_range for K in Ks]
    rows = []
    for result in counts:
        row = result.as_dict()
        if isinstance(row["count"], dict):
            row["stderr"] = row["count"]["stderr"]
            row["count"] = row["count"]["value"]
        rows.append(row)
    writer.csv("peak_counts.csv", rows, ["n", "K", "count", "stderr", "bound", "bound_ok", "mode"])
    outcome.check("peak_bound", all(result.bound_ok for result in counts))
    outcome.check("peak_free_n3", count_by_max_peaks(3, 0).count == 4)

    reports = [ramsey_check(a, b, n_range, seed=config.seed, workers=workers) for a, b in RAMSEY_CASES]
    writer.json("ramsey.json", [report.as_dict() for report in reports])
    counterexamples = [p for report in reports for p in report.counterexamples + report.monotone_failures]
    outcome.check("staircase_lemma", all(report.passed for report in reports), counterexamples=counterexamples)

    nested = nested_count(params["nested_N"])
    outcome.check("nested_lines", nested.agreed, **nested.as_dict())

    fractions = [
        exceptional_fraction(
            int(n), params["kappa"], samples=params.get("exceptional_samples"), seed=config.seed, workers=workers
        )
        for n in params.get("exceptional_sizes") or ()
    ]
    if fractions:
        writer.json("exceptional.json", [fraction.as_dict() for fraction in fractions])
        outcome.check("exceptional_bound", all(fraction.bound_ok for fraction in fractions))

    outcome.results = {"n_max": params["n_max"], "counterexamples": len(counterexamples)}
    return outcome

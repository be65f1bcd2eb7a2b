import json
import math
import tempfile
from io import StringIO
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from .config import load_config, read_config
from .forms import ExperimentConfigForm, ModelSectionForm
from .models import ExperimentRun
from .runners import REGISTRY

BOX = math.sqrt(2.0 * math.pi) / 0.5


class RunMixin:
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text, name="run.ini"):
        path = self.root / name
        path.write_text(text, encoding="utf-8")
        return path

    def run_config(self, text, out="out", **options):
        stdout = StringIO()
        config = str(self.write(text))
        call_command("run_experiment", config=config, out=str(self.root / out), stdout=stdout, **options)
        return stdout.getvalue()

    def read_json(self, *parts):
        return json.loads(self.root.joinpath(*parts).read_text(encoding="utf-8"))


class TestListExperiments(SimpleTestCase):
    def test_success_lists_every_experiment(self):
        stdout = StringIO()
        call_command("run_experiment", list_experiments=True, stdout=stdout)
        names = [line.split("\t")[0] for line in stdout.getvalue().splitlines()]
        self.assertEqual(
            names,
            [
                "validate-model",
                "kernel-table",
                "boltzmann-run",
                "dyson-compare",
                "quantum-oracle",
                "ladder-check",
                "wigner-demo",
                "combinatorics-suite",
            ],
        )


class TestModelSectionForm(SimpleTestCase):
    def test_success_defaults(self):
        form = ModelSectionForm({})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data["dimension"], 3)
        self.assertEqual(form.cleaned_data["coupling"], "gaussian")
        self.assertEqual(form.cleaned_data["beta"], 1.0)

    def test_success_factory_parameter(self):
        form = ModelSectionForm({"phonon": "acoustic_soft", "phonon.gap": "2.0", "coupling.width": "0.5"})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data["phonon.gap"], 2.0)
        self.assertEqual(form.cleaned_data["coupling.width"], 0.5)

    def test_failure_parameter_of_other_factory(self):
        form = ModelSectionForm({"phonon": "constant_omega", "phonon.gap": "2.0"})
        self.assertFalse(form.is_valid())
        self.assertIn("phonon.gap", form.non_field_errors()[0])

    def test_failure_unknown_key(self):
        form = ModelSectionForm({"temperature": "300"})
        self.assertFalse(form.is_valid())
        self.assertIn("unknown key 'temperature'", form.non_field_errors())

    def test_failure_nonpositive_beta(self):
        form = ModelSectionForm({"beta": "0"})
        self.assertFalse(form.is_valid())
        self.assertIn("beta", form.errors)

    def test_failure_unknown_experiment(self):
        form = ExperimentConfigForm({"name": "weather"})
        self.assertFalse(form.is_valid())
        self.assertIn("name", form.errors)


class TestLoadConfig(RunMixin, SimpleTestCase):
    def test_success_text_config(self):
        path = self.write(
            "[experiment]\nname = ladder-check\nseed = 7\n\n[model]\ndimension = 1\n\n[params]\nlam = 0.2\n"
        )
        config = load_config(path)
        self.assertEqual(config.name, "ladder-check")
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.model["dimension"], 1)
        self.assertEqual(config.params["lam"], 0.2)
        self.assertEqual(config.params["t"], 2.0)
        self.assertEqual(config.threads, 1)

    def test_success_json_config_and_overrides(self):
        raw = {
            "experiment": {"name": "boltzmann-run", "seed": 3},
            "model": {"coupling": "zero"},
            "params": {"count": 50, "momentum": [1.0, 0.0, 0.0], "histogram": False},
        }
        path = self.write(json.dumps(raw), "run.json")
        config = load_config(path, seed=11, out=str(self.root / "x"), threads=4)
        self.assertEqual(config.seed, 11)
        self.assertEqual(config.threads, 4)
        self.assertEqual(config.out, self.root / "x")
        self.assertEqual(config.params["momentum"], (1.0, 0.0, 0.0))
        self.assertFalse(config.params["histogram"])
        self.assertEqual(read_config(path), raw)

    def test_failure_unknown_section(self):
        path = self.write("[experiment]\nname = ladder-check\n\n[extras]\nx = 1\n")
        with self.assertRaises(ValidationError) as cm:
            load_config(path)
        self.assertIn("unknown section 'extras'", cm.exception.messages)

    def test_failure_unknown_param_names_section(self):
        path = self.write("[experiment]\nname = wigner-demo\n\n[params]\npairs = 3\nbogus = 1\n")
        with self.assertRaises(ValidationError) as cm:
            load_config(path)
        self.assertIn("params: unknown key 'bogus'", cm.exception.messages)

    def test_failure_malformed_json(self):
        path = self.write("{not json", "run.json")
        with self.assertRaises(ValidationError):
            load_config(path)


class TestRunExperimentErrors(RunMixin, TestCase):
    def test_failure_unknown_key_exits_with_two(self):
        with self.assertRaises(CommandError) as cm:
            self.run_config("[experiment]\nname = ladder-check\n\n[params]\nlambda = 0.1\n")
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn("unknown key 'lambda'", str(cm.exception))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_failure_unknown_experiment_exits_with_two(self):
        with self.assertRaises(CommandError) as cm:
            self.run_config("[experiment]\nname = weather\n")
        self.assertEqual(cm.exception.returncode, 2)

    def test_failure_missing_config(self):
        with self.assertRaises(CommandError) as cm:
            call_command("run_experiment", stdout=StringIO())
        self.assertEqual(cm.exception.returncode, 2)

    def test_failure_packet_dimension(self):
        text = (
            "[experiment]\nname = boltzmann-run\n\n[model]\ncoupling = zero\n\n"
            "[params]\ncount = 10\nmomentum = 1, 0\n"
        )
        with self.assertRaises(CommandError) as cm:
            self.run_config(text)
        self.assertEqual(cm.exception.returncode, 2)
        self.assertEqual(ExperimentRun.objects.get().status, ExperimentRun.Status.ERROR)


class TestCombinatoricsSuite(RunMixin, TestCase):
    def test_success_small_suite(self):
        text = "[experiment]\nname = combinatorics-suite\nseed = 1\n\n[params]\nn_max = 6\nK_max = 1\nnested_N = 4\n"
        output = self.run_config(text)
        self.assertIn("PASS  staircase_lemma", output)
        summary = self.read_json("out", "summary.json")
        self.assertTrue(summary["passed"])
        self.assertEqual(summary["checks"]["staircase_lemma"]["counterexamples"], [])
        manifest = self.read_json("out", "manifest.json")
        self.assertEqual(manifest["status"], "passed")
        self.assertEqual(manifest["config"]["params"]["n_max"], 6)
        self.assertIn("peak_counts.csv", manifest["files"])
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.Status.PASSED)
        self.assertIsNotNone(run.finished_at)


class TestBoltzmannRun(RunMixin, TestCase):
    CONFIG = (
        "[experiment]\nname = boltzmann-run\nseed = 5\n\n[model]\ncoupling = zero\n\n"
        "[params]\ncount = 300\nhorizon = 1.5\nsnapshots = 3\nmomentum = 1.0, 0.0, -0.5\n"
    )

    def test_success_free_transport(self):
        self.run_config(self.CONFIG)
        summary = self.read_json("out", "summary.json")
        self.assertTrue(summary["checks"]["free_transport"]["passed"])
        self.assertTrue(summary["checks"]["mass_conserved"]["passed"])
        sidecar = self.read_json("out", "final_phase_space.json")
        self.assertEqual(sidecar["shape"], [300, 6])
        header = self.root.joinpath("out", "observable.csv").read_text().splitlines()[0]
        self.assertEqual(header, "T,value,stderr")

    def test_success_outputs_identical_across_threads(self):
        self.run_config(self.CONFIG, out="serial", threads=1)
        self.run_config(self.CONFIG, out="parallel", threads=2)
        for name in ("observable.csv", "final.csv", "initial.csv"):
            serial = self.root.joinpath("serial", name).read_bytes()
            parallel = self.root.joinpath("parallel", name).read_bytes()
            self.assertEqual(serial, parallel, name)

    def test_success_gibbs_start_passes_histogram(self):
        text = (
            "[experiment]\nname = boltzmann-run\nseed = 9\n\n[model]\ncoupling = zero\n\n"
            "[params]\nstart = gibbs\ncount = 2000\nsnapshots = 1\nhistogram = true\nhistogram_level = 0.001\n"
        )
        self.run_config(text)
        checks = self.read_json("out", "summary.json")["checks"]
        self.assertTrue(checks["gibbs_histogram"]["passed"], checks["gibbs_histogram"])
        self.assertEqual(self.read_json("out", "manifest.json")["config"]["params"]["start"], "gibbs")
        self.assertEqual(ExperimentRun.objects.get().status, ExperimentRun.Status.PASSED)

    def test_failure_nonequilibrium_histogram_exits_with_one(self):
        text = (
            "[experiment]\nname = boltzmann-run\n\n[model]\ncoupling = zero\n\n"
            "[params]\ncount = 2000\nmomentum = 3, 0, 0\nspread_v = 0.1\nhistogram = true\n"
        )
        with self.assertRaises(CommandError) as cm:
            self.run_config(text)
        self.assertEqual(cm.exception.returncode, 1)
        self.assertIn("gibbs_histogram", str(cm.exception))
        self.assertEqual(ExperimentRun.objects.get().status, ExperimentRun.Status.FAILED)
        self.assertFalse(self.read_json("out", "summary.json")["passed"])


class TestQuantumExperiments(RunMixin, TestCase):
    def test_success_quantum_oracle(self):
        text = (
            "[experiment]\nname = quantum-oracle\n\n[model]\ndimension = 1\nlam = 0.5\nbeta = 2.0\n\n"
            f"[params]\nbox = {BOX!r}\nextent = 1\nn_max = 1\ncovariance = true\n"
        )
        self.run_config(text)
        checks = self.read_json("out", "summary.json")["checks"]
        for name in ("hermitian", "conservation", "free_evolution", "covariance"):
            self.assertTrue(checks[name]["passed"], (name, checks[name]))

    def test_success_ladder_check(self):
        self.run_config("[experiment]\nname = ladder-check\n\n[model]\ndimension = 1\n")
        ladder = self.read_json("out", "ladder.json")
        self.assertLess(ladder["discrepancy"], 1e-8)
        self.assertTrue(self.read_json("out", "summary.json")["passed"])


class TestWignerDemo(RunMixin, TestCase):
    def test_success_demo(self):
        self.run_config("[experiment]\nname = wigner-demo\nseed = 2\n\n[params]\npairs = 5\n")
        checks = self.read_json("out", "summary.json")["checks"]
        self.assertTrue(checks["trace_identity"]["passed"], checks["trace_identity"])
        self.assertTrue(checks["normalization"]["passed"], checks["normalization"])
        self.assertTrue(checks["wkb_monotone"]["passed"], checks["wkb_monotone"])
        rows = self.root.joinpath("out", "trace_identity.csv").read_text().splitlines()
        self.assertEqual(len(rows), 6)


class TestRegistry(SimpleTestCase):
    def test_success_every_runner_has_a_form(self):
        for name, runner in REGISTRY.items():
            self.assertTrue(runner.form({}).is_valid(), name)

import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from kinetics.exceptions import KineticsError
from physics.model import build_model

from ...artifacts import ArtifactWriter
from ...config import load_config
from ...models import ExperimentRun
from ...runners import REGISTRY

logger = logging.getLogger(__name__)

CONFIG_ERROR, CHECK_FAILED = 2, 1


class Command(BaseCommand):
    help = "Run one registered experiment from a config file and write its artifacts."

    def add_arguments(self, parser):
        parser.add_argument("--config", help="experiment config (.json, or key-value text with sections)")
        parser.add_argument("--seed", type=int, help="override the config seed")
        parser.add_argument("--out", help="output directory")
        parser.add_argument("--threads", type=int, help="worker count inside the modules")
        parser.add_argument("--list-experiments", action="store_true", help="list the experiments and exit")

    def handle(self, *args, **options):
        if options["list_experiments"]:
            for name, runner in REGISTRY.items():
                self.stdout.write(f"{name}\t{runner.description}")
            return
        if not options["config"]:
            raise CommandError("--config is required", returncode=CONFIG_ERROR)

        try:
            config = load_config(options["config"], options["seed"], options["out"], options["threads"])
            model = build_model(config.model)
        except ValidationError as e:
            raise CommandError("invalid config:\n  " + "\n  ".join(e.messages), returncode=CONFIG_ERROR) from e
        except KineticsError as e:
            raise CommandError(f"invalid model: {e}", returncode=CONFIG_ERROR) from e

        writer = ArtifactWriter(config.out)
        run = ExperimentRun.objects.create(
            name=config.name, seed=config.seed, config=config.as_dict(), output_dir=str(config.out)
        )
        logger.info("run %d: %s with seed %d into %s", run.pk, config.name, config.seed, config.out)
        try:
            outcome = REGISTRY[config.name].run(config, model, writer)
        except ValidationError as e:
            self._fail(run, writer, config, e.messages)
            raise CommandError("invalid config:\n  " + "\n  ".join(e.messages), returncode=CONFIG_ERROR) from e
        except KineticsError as e:
            self._fail(run, writer, config, [f"{type(e).__name__}: {e}"])
            raise CommandError(f"{config.name} failed: {type(e).__name__}: {e}", returncode=CHECK_FAILED) from e

        status = ExperimentRun.Status.PASSED if outcome.passed else ExperimentRun.Status.FAILED
        writer.summary(config.name, outcome.checks, outcome.passed)
        writer.json("results.json", outcome.results)
        writer.manifest(config, status)
        run.finish(status)

        for name, check in outcome.checks.items():
            self.stdout.write(f"{'PASS' if check['passed'] else 'FAIL'}  {name}")
        if not outcome.passed:
            failed = [name for name, check in outcome.checks.items() if not check["passed"]]
            raise CommandError(f"{config.name}: failed checks {', '.join(failed)}", returncode=CHECK_FAILED)
        self.stdout.write(self.style.SUCCESS(f"{config.name} passed; artifacts in {config.out}"))

    def _fail(self, run, writer, config, errors):
        writer.json("error.json", {"experiment": config.name, "errors": errors})
        writer.manifest(config, ExperimentRun.Status.ERROR)
        run.finish(ExperimentRun.Status.ERROR)

"""Loading and validation of experiment config files.

A config has an ``[experiment]`` section (name, seed, out, threads), a ``[model]``
section and a ``[params]`` section read by the experiment's own form. Files ending in
``.json`` hold the same sections as JSON objects; anything else is read as key-value
text.
"""

import configparser
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from django.core.exceptions import ValidationError

from kinetics.conf import knob

from .forms import ExperimentConfigForm, ModelSectionForm

logger = logging.getLogger(__name__)

SECTIONS = ("experiment", "model", "params")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    out: Path
    threads: int = 1
    model: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "experiment": {"name": self.name, "seed": self.seed, "out": str(self.out), "threads": self.threads},
            "model": dict(self.model),
            "params": dict(self.params),
        }


def read_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"cannot read config {path}: {e}", code="unreadable") from None
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: {e}", code="malformed") from None
        if not isinstance(raw, dict) or not all(isinstance(v, dict) for v in raw.values()):
            raise ValidationError(f"{path}: expected an object of sections", code="malformed")
        return raw
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ValidationError(f"{path}: {e}", code="malformed") from None
    return {section: dict(parser[section]) for section in parser.sections()}


def _messages(section, form):
    messages = []
    for name, errors in form.errors.items():
        where = section if name == "__all__" else f"{section}.{name}"
        messages += [f"{where}: {error}" for error in errors]
    return messages


def validate_section(section, form):
    if not form.is_valid():
        raise ValidationError(_messages(section, form), code="invalid")
    return form.cleaned_data


def resolve_config(raw, seed=None, out=None, threads=None):
    """ExperimentConfig from raw sections; ``seed``, ``out`` and ``threads`` override the file."""
    from .runners import REGISTRY

    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise ValidationError([f"unknown section {name!r}" for name in unknown], code="unknown_key")
    experiment = validate_section("experiment", ExperimentConfigForm(raw.get("experiment", {})))
    model = validate_section("model", ModelSectionForm(raw.get("model", {})))
    runner = REGISTRY[experiment["name"]]
    params = validate_section("params", runner.form(raw.get("params", {})))

    seed = knob("SEED", seed if seed is not None else experiment["seed"])
    out = Path(out or experiment["out"] or Path("runs") / f"{experiment['name']}-{seed}")
    config = ExperimentConfig(
        name=experiment["name"],
        seed=int(seed),
        out=out,
        threads=int(threads or experiment["threads"]),
        model={k: v for k, v in model.items() if v is not None},
        params={k: v for k, v in params.items() if v is not None},
    )
    logger.debug("resolved config %s", config.as_dict())
    return config


def load_config(path, seed=None, out=None, threads=None):
    return resolve_config(read_config(path), seed=seed, out=out, threads=threads)

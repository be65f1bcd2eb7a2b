from django import forms
from django.core.exceptions import ValidationError

from physics.dispersions import COUPLINGS, DISPERSIONS, parameter_names


def experiment_choices():
    from .runners import REGISTRY

    return [(name, name) for name in REGISTRY]


class VectorField(forms.Field):
    """Comma-separated floats (text configs) or a list of numbers (JSON configs)."""

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if isinstance(value, str):
            value = [part for part in value.replace(" ", "").split(",") if part]
        try:
            return tuple(float(x) for x in value)
        except (TypeError, ValueError):
            raise ValidationError(f"{value!r} is not a list of numbers", code="invalid") from None


class StrictForm(forms.Form):
    """Form whose unknown keys are errors; missing optional fields take their ``initial``."""

    def extra_keys(self):
        return set()

    def clean(self):
        cleaned = super().clean()
        for key in sorted(set(self.data) - set(self.fields) - self.extra_keys()):
            self.add_error(None, ValidationError(f"unknown key {key!r}", code="unknown_key"))
        for name, field in self.fields.items():
            if cleaned.get(name) in (None, "") and field.initial is not None:
                cleaned[name] = field.initial
        return cleaned


class ExperimentConfigForm(StrictForm):
    name = forms.ChoiceField(choices=experiment_choices)
    seed = forms.IntegerField(min_value=0, required=False)
    out = forms.CharField(required=False)
    threads = forms.IntegerField(min_value=1, required=False, initial=1)


class ModelSectionForm(StrictForm):
    """Model section; ``electron.<param>`` style keys go to the chosen factory."""

    FACTORIES = {"electron": DISPERSIONS, "phonon": DISPERSIONS, "coupling": COUPLINGS}

    name = forms.CharField(required=False, initial="model")
    dimension = forms.IntegerField(min_value=1, max_value=3, required=False, initial=3)
    electron = forms.ChoiceField(choices=[(k, k) for k in DISPERSIONS], required=False, initial="quadratic")
    phonon = forms.ChoiceField(choices=[(k, k) for k in DISPERSIONS], required=False, initial="constant_omega")
    coupling = forms.ChoiceField(choices=[(k, k) for k in COUPLINGS], required=False, initial="gaussian")
    beta = forms.FloatField(min_value=0.0, required=False, initial=1.0)
    mu = forms.FloatField(required=False, initial=0.0)
    lam = forms.FloatField(min_value=0.0, required=False, initial=0.0)
    epsilon = forms.FloatField(required=False, initial=1.0)
    weak_coupling = forms.BooleanField(required=False)

    def dotted_keys(self):
        return {key for key in self.data if "." in key}

    def extra_keys(self):
        return self.dotted_keys()

    def clean_beta(self):
        beta = self.cleaned_data.get("beta")
        if beta is not None and beta <= 0:
            raise ValidationError("beta must be positive", code="invalid")
        return beta

    def clean(self):
        cleaned = super().clean()
        for key in sorted(self.dotted_keys()):
            prefix, _, param = key.partition(".")
            if prefix not in self.FACTORIES:
                self.add_error(None, ValidationError(f"unknown key {key!r}", code="unknown_key"))
                continue
            choice = cleaned.get(prefix) or self.fields[prefix].initial
            if param not in parameter_names(self.FACTORIES[prefix], choice):
                message = f"unknown key {key!r}: {choice} takes {parameter_names(self.FACTORIES[prefix], choice)}"
                self.add_error(None, ValidationError(message, code="unknown_key"))
                continue
            try:
                cleaned[key] = float(self.data[key])
            except (TypeError, ValueError):
                self.add_error(None, ValidationError(f"{key} must be a number", code="invalid"))
        return cleaned


class PacketForm(StrictForm):
    """Gaussian initial packet and Gaussian observable, shared by the Boltzmann runs."""

    count = forms.IntegerField(min_value=1, required=False, initial=10_000)
    horizon = forms.FloatField(min_value=0.0, required=False, initial=1.0)
    position = VectorField(required=False)
    momentum = VectorField(required=False)
    spread_x = forms.FloatField(min_value=0.0, required=False, initial=1.0)
    spread_v = forms.FloatField(min_value=0.0, required=False, initial=1.0)
    observable_width = forms.FloatField(min_value=0.0, required=False, initial=1.0)


class ValidateModelForm(StrictForm):
    k_max = forms.FloatField(min_value=0.0, required=False)
    grid_points = forms.IntegerField(min_value=3, required=False)


class KernelTableForm(StrictForm):
    speeds = forms.IntegerField(min_value=1, required=False, initial=8)
    v_max = forms.FloatField(min_value=0.0, required=False, initial=2.0)
    identity_samples = forms.IntegerField(min_value=0, required=False, initial=0)
    identity_rtol = forms.FloatField(min_value=0.0, required=False, initial=1e-2)
    resolution = forms.IntegerField(min_value=4, required=False)
    theta_check = forms.BooleanField(required=False)
    slope_bound = forms.FloatField(required=False, initial=-1.45)


class BoltzmannRunForm(PacketForm):
    START_CHOICES = [("packet", "packet"), ("gibbs", "gibbs")]

    start = forms.ChoiceField(choices=START_CHOICES, required=False, initial="packet")
    snapshots = forms.IntegerField(min_value=1, required=False, initial=5)
    histogram = forms.BooleanField(required=False)
    histogram_level = forms.FloatField(min_value=0.0, max_value=1.0, required=False, initial=0.01)


class DysonCompareForm(PacketForm):
    orders = forms.IntegerField(min_value=0, required=False, initial=4)
    samples = forms.IntegerField(min_value=1, required=False)


class QuantumOracleForm(StrictForm):
    box = forms.FloatField(min_value=0.0, required=False, initial=5.0)
    extent = forms.IntegerField(min_value=0, required=False, initial=1)
    mode_extent = forms.IntegerField(min_value=1, required=False, initial=1)
    n_max = forms.IntegerField(min_value=1, required=False, initial=1)
    t_max = forms.FloatField(min_value=0.0, required=False, initial=10.0)
    steps = forms.IntegerField(min_value=2, required=False, initial=6)
    tolerance = forms.FloatField(min_value=0.0, required=False, initial=1e-10)
    covariance = forms.BooleanField(required=False)
    covariance_n_max = forms.IntegerField(min_value=1, required=False, initial=9)
    covariance_tolerance = forms.FloatField(min_value=0.0, required=False, initial=1e-3)


class LadderCheckForm(StrictForm):
    lam = forms.FloatField(min_value=0.0, required=False, initial=0.1)
    t = forms.FloatField(min_value=0.0, required=False, initial=2.0)
    spacing = forms.FloatField(min_value=0.0, required=False, initial=0.5)
    tolerance = forms.FloatField(min_value=0.0, required=False, initial=1e-8)


class WignerDemoForm(StrictForm):
    extent = forms.IntegerField(min_value=1, required=False, initial=10)
    spacing = forms.FloatField(min_value=0.0, required=False, initial=0.6)
    pairs = forms.IntegerField(min_value=1, required=False, initial=20)
    epsilons = VectorField(required=False, initial=(0.2, 0.1, 0.05))
    tolerance = forms.FloatField(min_value=0.0, required=False, initial=1e-9)


class CombinatoricsForm(StrictForm):
    n_max = forms.IntegerField(min_value=3, required=False, initial=8)
    K_max = forms.IntegerField(min_value=0, required=False, initial=2)
    pattern_N = forms.IntegerField(min_value=0, required=False, initial=7)
    nested_N = forms.IntegerField(min_value=1, max_value=6, required=False, initial=5)
    kappa = forms.IntegerField(min_value=1, required=False, initial=2)
    exceptional_sizes = VectorField(required=False)
    exceptional_samples = forms.IntegerField(min_value=1, required=False)

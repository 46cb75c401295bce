import math
from dataclasses import replace

from django import forms

from .conf import default_schedule, default_tolerances
from .exceptions import RejectedInput
from .landscape import parse_levels
from .models import RegisteredProblem
from .runner import SUBCOMMANDS, RunConfig


def _floats(text: str, label: str):
    try:
        values = tuple(float(v) for v in text.split(','))
    except ValueError:
        raise forms.ValidationError(f"{label} must be comma-separated numbers, got '{text}'")
    if not all(math.isfinite(v) for v in values):
        raise forms.ValidationError(f"{label} must be finite")
    return values


class PointField(forms.CharField):
    """A single point written as ``a,b,...``."""

    def to_python(self, value):
        value = super().to_python(value)
        if not value:
            return None
        return _floats(value.strip(), 'point')


class PointListField(forms.CharField):
    """Points separated by semicolons: ``a,b;c,d``."""

    def to_python(self, value):
        value = super().to_python(value)
        if not value:
            return ()
        points = tuple(_floats(chunk.strip(), 'point') for chunk in value.split(';') if chunk.strip())
        if len({len(p) for p in points}) > 1:
            raise forms.ValidationError("all points must have the same dimension")
        return points


class BoxField(forms.CharField):
    """``lo1,hi1,lo2,hi2,...`` with every lower bound below its upper bound."""

    def to_python(self, value):
        value = super().to_python(value)
        if not value:
            return None
        box = _floats(value.strip(), 'box')
        if len(box) % 2 or not box:
            raise forms.ValidationError("box needs a lower and an upper bound per coordinate")
        if any(lo >= hi for lo, hi in zip(box[::2], box[1::2])):
            raise forms.ValidationError("box bounds must satisfy lo < hi")
        return box


class RunConfigForm(forms.Form):
    """Validates management command options and builds a RunConfig."""

    subcommand = forms.ChoiceField(choices=[(name, name) for name in SUBCOMMANDS])
    problem = forms.CharField(required=False, max_length=200)
    file = forms.CharField(required=False, max_length=500)

    x = PointListField(required=False)
    x0 = PointField(required=False)
    starts = forms.IntegerField(required=False, min_value=1)
    box = BoxField(required=False)
    workers = forms.IntegerField(required=False, min_value=1)
    min_converged = forms.IntegerField(required=False, min_value=0)
    trace = forms.BooleanField(required=False)
    witness = forms.BooleanField(required=False)

    s = forms.IntegerField(required=False, min_value=0)
    y = PointField(required=False)

    res = forms.IntegerField(required=False, min_value=3)
    levels = forms.CharField(required=False)
    csv = forms.CharField(required=False, max_length=500)
    svg = forms.CharField(required=False, max_length=500)

    register = forms.SlugField(required=False, max_length=100)
    description = forms.CharField(required=False, max_length=1000)
    suites = forms.CharField(required=False)

    tol_activity = forms.FloatField(required=False, min_value=0)
    tol_residual = forms.FloatField(required=False, min_value=0)
    tol_eigen = forms.FloatField(required=False, min_value=0)
    tol_multiplier = forms.FloatField(required=False, min_value=0)
    tol_feasibility = forms.FloatField(required=False, min_value=0)
    t0 = forms.FloatField(required=False)
    shrink = forms.FloatField(required=False)
    t_min = forms.FloatField(required=False)

    seed = forms.IntegerField(required=False)
    output = forms.CharField(required=False, max_length=500)
    save = forms.BooleanField(required=False)

    def clean_levels(self):
        text = self.cleaned_data.get('levels')
        if not text:
            return None
        try:
            return parse_levels(text)
        except RejectedInput as exc:
            raise forms.ValidationError(str(exc))

    def clean_suites(self):
        text = self.cleaned_data.get('suites')
        if not text:
            return ()
        try:
            suites = tuple(int(v) for v in text.split(','))
        except ValueError:
            raise forms.ValidationError("suites must be comma-separated numbers")
        if any(not 1 <= v <= 8 for v in suites):
            raise forms.ValidationError("suites are numbered 1 to 8")
        return suites

    def clean_register(self):
        name = self.cleaned_data.get('register')
        if name and RegisteredProblem.objects.filter(name=name).exists():
            raise forms.ValidationError(f"problem '{name}' is already registered")
        return name

    def clean(self):
        data = super().clean()
        command = data.get('subcommand')
        sources = [key for key in ('problem', 'file') if data.get(key)]

        if command in ('classify', 'regularize', 'landscape') and len(sources) != 1:
            raise forms.ValidationError("give exactly one of --problem or --file")

        if command == 'regularize':
            if bool(data.get('x0')) == bool(data.get('starts')):
                raise forms.ValidationError("give exactly one of --x0 or --starts")
            if data.get('starts') and not data.get('box'):
                self.add_error('box', "--starts needs --box")

        if command == 'scno':
            for key in ('file', 's'):
                if data.get(key) in (None, ''):
                    self.add_error(key, "required for scno")
            if not data.get('x'):
                self.add_error('x', "required for scno")
            elif len(data['x']) != 1:
                self.add_error('x', "scno takes a single point")

        if command == 'landscape':
            box = data.get('box')
            if not box or len(box) != 4:
                self.add_error('box', "landscape needs a box x1_lo,x1_hi,x2_lo,x2_hi")
            if not data.get('levels'):
                self.add_error('levels', "required for landscape")

        if command == 'catalog' and data.get('register') and not data.get('file'):
            self.add_error('file', "--register needs --file")

        if not self.errors:
            data['tolerances'] = self._tolerances(data)
            data['schedule'] = self._schedule(data)
        return data

    def _tolerances(self, data):
        overrides = {
            'activity': data.get('tol_activity'),
            'stationarity_residual': data.get('tol_residual'),
            'eigen_singularity': data.get('tol_eigen'),
            'multiplier_zero': data.get('tol_multiplier'),
            'feasibility': data.get('tol_feasibility'),
        }
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if not overrides:
            return None
        try:
            return replace(default_tolerances(), **overrides)
        except RejectedInput as exc:
            raise forms.ValidationError(str(exc))

    def _schedule(self, data):
        overrides = {k: data.get(k) for k in ('t0', 'shrink', 't_min') if data.get(k) is not None}
        if not overrides:
            return None
        try:
            return replace(default_schedule(), **overrides)
        except RejectedInput as exc:
            raise forms.ValidationError(str(exc))

    def to_run_config(self) -> RunConfig:
        data = self.cleaned_data
        points = data.get('x') or ()
        return RunConfig(
            subcommand=data['subcommand'],
            problem=data.get('problem') or None,
            problem_file=data.get('file') or None,
            points=points,
            x0=data.get('x0'),
            starts=data.get('starts'),
            box=data.get('box'),
            workers=data.get('workers') or 1,
            min_converged=data.get('min_converged'),
            trace=bool(data.get('trace')),
            witness=bool(data.get('witness')),
            s=data.get('s'),
            y=data.get('y'),
            resolution=data.get('res') or 801,
            levels=data.get('levels'),
            csv_path=data.get('csv') or None,
            svg_path=data.get('svg') or None,
            register=data.get('register') or None,
            description=data.get('description') or '',
            suites=data.get('suites') or (),
            tolerances=data.get('tolerances'),
            schedule=data.get('schedule'),
            seed=data['seed'] if data.get('seed') is not None else RunConfig.default_seed(),
            output=data.get('output') or None,
            save=bool(data.get('save')),
        )

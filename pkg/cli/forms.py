import math

from django import forms


def _clean_series(value, name):
    """Normalise ``{"offset": c, "modes": [[[n1, ...], a], ...]}``."""
    if not isinstance(value, dict):
        raise forms.ValidationError(f'{name} must be an object with "offset" and "modes".')
    unknown = set(value) - {'offset', 'modes'}
    if unknown:
        raise forms.ValidationError(f'{name} has unknown keys: {", ".join(sorted(unknown))}.')
    try:
        offset = float(value.get('offset', 0.0))
    except (TypeError, ValueError):
        raise forms.ValidationError(f'{name}.offset must be a number.')
    modes = []
    for entry in value.get('modes', []):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise forms.ValidationError(f'{name}.modes entries must be [mode vector, amplitude] pairs.')
        mode, amplitude = entry
        if not isinstance(mode, (list, tuple)) or not all(isinstance(m, int) and not isinstance(m, bool) for m in mode):
            raise forms.ValidationError(f'{name}.modes: mode vectors must be lists of integers.')
        try:
            amplitude = float(amplitude)
        except (TypeError, ValueError):
            raise forms.ValidationError(f'{name}.modes: amplitudes must be numbers.')
        modes.append((tuple(mode), amplitude))
    if not math.isfinite(offset) or not all(math.isfinite(a) for _, a in modes):
        raise forms.ValidationError(f'{name} must have finite coefficients.')
    return {'offset': offset, 'modes': modes}


class RunConfigForm(forms.Form):
    """Validates a JSON run configuration before any numerics happen.

    Time stepping is given either by ``n_steps`` or by ``tau``; the horizon is
    always required. Initial data are finite cosine series.
    """

    alpha = forms.FloatField(min_value=0.0, max_value=1.0)
    s = forms.FloatField(min_value=0.0, max_value=1.0)
    dim = forms.IntegerField(min_value=1, max_value=3)
    points = forms.IntegerField(min_value=8)
    horizon = forms.FloatField(min_value=0.0)
    n_steps = forms.IntegerField(min_value=1, required=False)
    tau = forms.FloatField(min_value=0.0, required=False)
    rho = forms.FloatField(min_value=0.0, required=False)
    eps = forms.FloatField(min_value=0.0, required=False)
    picard_tol = forms.FloatField(required=False)
    picard_max = forms.IntegerField(min_value=1, required=False)
    picard_damping = forms.FloatField(required=False)
    clip_negative = forms.BooleanField(required=False)
    tol_pos = forms.FloatField(required=False)
    u_in = forms.JSONField()
    p_in = forms.JSONField()
    snapshot_every = forms.IntegerField(min_value=0, required=False)
    seed = forms.IntegerField(min_value=0, required=False)
    output_dir = forms.CharField(required=False)

    def clean_alpha(self):
        alpha = self.cleaned_data['alpha']
        if alpha <= 0.0:
            raise forms.ValidationError('alpha must lie in (0, 1].')
        return alpha

    def clean_s(self):
        s = self.cleaned_data['s']
        if s <= 0.0:
            raise forms.ValidationError('s must lie in (0, 1].')
        return s

    def clean_points(self):
        points = self.cleaned_data['points']
        if points % 2:
            raise forms.ValidationError('points must be even.')
        return points

    def clean_horizon(self):
        horizon = self.cleaned_data['horizon']
        if horizon <= 0.0:
            raise forms.ValidationError('horizon must be positive.')
        return horizon

    def clean_picard_damping(self):
        damping = self.cleaned_data.get('picard_damping')
        if damping is not None and not 0.0 < damping <= 1.0:
            raise forms.ValidationError('picard_damping must lie in (0, 1].')
        return damping

    def clean_picard_tol(self):
        tol = self.cleaned_data.get('picard_tol')
        if tol is not None and tol <= 0.0:
            raise forms.ValidationError('picard_tol must be positive.')
        return tol

    def clean_tol_pos(self):
        tol = self.cleaned_data.get('tol_pos')
        if tol is not None and tol <= 0.0:
            raise forms.ValidationError('tol_pos must be positive.')
        return tol

    def clean_u_in(self):
        return _clean_series(self.cleaned_data['u_in'], 'u_in')

    def clean_p_in(self):
        return _clean_series(self.cleaned_data['p_in'], 'p_in')

    def clean(self):
        cleaned = super().clean()
        horizon = cleaned.get('horizon')
        n_steps = cleaned.get('n_steps')
        tau = cleaned.get('tau')
        if horizon is not None:
            if n_steps is None and tau is None:
                self.add_error('n_steps', 'Give n_steps or tau.')
            elif n_steps is None:
                if tau <= 0.0:
                    self.add_error('tau', 'tau must be positive.')
                else:
                    steps = round(horizon / tau)
                    if steps < 1 or abs(steps * tau - horizon) > 1e-9 * horizon:
                        self.add_error('tau', 'horizon must be an integer multiple of tau.')
                    else:
                        cleaned['n_steps'] = int(steps)
            elif tau is not None and abs(n_steps * tau - horizon) > 1e-9 * horizon:
                self.add_error('tau', 'tau, n_steps and horizon are inconsistent.')
        dim = cleaned.get('dim')
        for name in ('u_in', 'p_in'):
            series = cleaned.get(name)
            if dim is not None and series is not None:
                if any(len(mode) != dim for mode, _ in series['modes']):
                    self.add_error(name, f'every mode vector must have {dim} components.')
        return cleaned

    def solver_options(self) -> dict:
        """Keyword arguments for SolverConfig beyond the grids; omitted fields keep their defaults."""
        options = {}
        for name in ('rho', 'eps', 'picard_tol', 'picard_max', 'picard_damping', 'tol_pos'):
            value = self.cleaned_data.get(name)
            if value is not None:
                options[name] = value
        options['clip_negative'] = bool(self.cleaned_data.get('clip_negative'))
        return options

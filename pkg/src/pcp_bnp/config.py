"""Solver configuration.

The configuration is a flat mapping of dotted keys. Values come from, in
increasing precedence, the built-in defaults, a config file and the command
line. A config file contains one `key = value` per line; `#` starts a comment.
"""
from .io import read_something


BACKENDS = ("exact", "bsb", "simcim")

DEFAULTS = {
    "pricing.backend": "exact",
    "pricing.restarts": 32,
    "pricing.max_cols": 10,
    "pricing.alpha": 0.0,
    "pricing.rc_eps": 1e-6,
    "qubo.lambda1": 0.0,
    "qubo.lambda2": 0.0,
    "qaia.steps": 1000,
    "qaia.dt": 0.0,
    "qaia.restarts": 32,
    "qaia.seed": 0,
    "qaia.xi": 0.0,
    "qaia.noise": 0.01,
    "qaia.pump_start": -1.0,
    "qaia.pump_end": 1.0,
    "qaia.a0": 1.0,
    "bnp.time_limit": 3600.0,
    "bnp.seed": 0,
    "lp.check": False,
    "lp.refactor_interval": 100,
    "master.lazy_row_threshold": 50000,
}

_POSITIVE = {
    "pricing.restarts", "pricing.max_cols", "pricing.rc_eps", "qaia.steps",
    "qaia.restarts", "lp.refactor_interval", "master.lazy_row_threshold",
}

_NON_NEGATIVE = {
    "pricing.alpha", "qubo.lambda1", "qubo.lambda2", "qaia.dt", "qaia.xi",
    "qaia.noise", "qaia.a0", "bnp.time_limit",
}


def parse_value(key, value):
    """Convert `value` to the type of the default of `key` and validate it."""
    if key not in DEFAULTS:
        raise ValueError(f"Unknown configuration key '{key}'.")

    default = DEFAULTS[key]

    if isinstance(default, bool):
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("on", "true", "yes", "1"):
                value = True
            elif text in ("off", "false", "no", "0"):
                value = False
            else:
                raise ValueError(f"Invalid boolean '{value}' for '{key}'.")
        value = bool(value)

    elif isinstance(default, int):
        try:
            value = int(value)
        except (TypeError, ValueError):
            raise ValueError(f"Invalid integer '{value}' for '{key}'.")

    elif isinstance(default, float):
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ValueError(f"Invalid number '{value}' for '{key}'.")

    else:
        value = str(value).strip()

    if key == "pricing.backend" and value not in BACKENDS:
        raise ValueError(f"Unknown pricing backend '{value}', use one of {BACKENDS}.")

    if key in _POSITIVE and not value > 0:
        raise ValueError(f"'{key}' must be positive, got {value}.")

    if key in _NON_NEGATIVE and not value >= 0:
        raise ValueError(f"'{key}' must be non-negative, got {value}.")

    return value


def parse_config_text(text):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue

        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got '{line}'.")

        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = parse_value(key, value)

    return values


def parse_assignment(text):
    """Parse a `key=value` command line override."""
    if "=" not in text:
        raise ValueError(f"Expected 'key=value', got '{text}'.")

    key, value = (part.strip() for part in text.split("=", 1))
    return key, parse_value(key, value)


class SolverConfig:
    """Typed, validated solver settings.

    Use `config["pricing.backend"]` to read a value.
    """

    def __init__(self, overrides=None):
        self._values = dict(DEFAULTS)
        for key, value in (overrides or {}).items():
            self._values[key] = parse_value(key, value)

    @classmethod
    def from_file(cls, path, overrides=None):
        values = read_something(path, lambda f: parse_config_text(f.read()))
        values.update(overrides or {})
        return cls(values)

    def __getitem__(self, key):
        return self._values[key]

    def __eq__(self, other):
        return isinstance(other, SolverConfig) and self._values == other._values

    def __repr__(self):
        changed = {k: v for k, v in self._values.items() if DEFAULTS[k] != v}
        return f"SolverConfig({changed})"

    def updated(self, overrides):
        """A copy with `overrides` applied on top."""
        values = dict(self._values)
        values.update(overrides)
        return SolverConfig(values)

    def as_dict(self):
        return dict(self._values)

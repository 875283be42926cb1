"""
Experiment config files for the command line.

TOML with three sections; keys carry their units.  This is the only place
dBm values are converted to watts.

    [experiment]
    axis = "n_antennas"          # n_antennas | n_users | ptx_dbm
    arrays = ["circular", "spherical", "collocated"]
    n_antennas = [50, 100, 200, 400]
    n_users = [10]
    ptx_dbm = [-40.0]            # required by `transmit`
    schemes = ["conjugate", "phase_mode"]
    trials = 100
    seed = 0

    [system]
    freq_hz = 2.5e9
    noise_dbm = -100.0
    r0_m = 20.0
    rd_m = 1.0
    user_radius_frac = 0.5
    search_radius_frac = 0.6

    [pilots]
    mode = "single"              # single | orthogonal
    length = 0                   # orthogonal only, 0 means L = U
    power_dbm = 0.0
"""

import math
import sys

if sys.version_info >= (3, 11):
	import tomllib
else:
	import tomli as tomllib

from .simkit import ExperimentConfig

__all__ = ["ConfigError", "dbm_to_w", "w_to_dbm", "parse_config", "load_config",
	"resolve", "to_experiment", "dump_toml"]


class ConfigError(ValueError):
	"""Schema or syntax problem in a config file; the message names the field."""


def dbm_to_w(dbm: float) -> float:
	return 10.0 ** (dbm / 10.0) * 1e-3


def w_to_dbm(w: float) -> float:
	return 10.0 * math.log10(w / 1e-3)


# section -> key -> (type, default); a default of ... means required
_SCHEMA = {
	"experiment": {
		"axis": (str, ...),
		"arrays": (list, ...),
		"n_antennas": (list, ...),
		"n_users": (list, ...),
		"ptx_dbm": (list, None),
		"schemes": (list, ["conjugate", "phase_mode"]),
		"trials": (int, 100),
		"seed": (int, 0),
	},
	"system": {
		"freq_hz": (float, 2.5e9),
		"noise_dbm": (float, -100.0),
		"r0_m": (float, 20.0),
		"rd_m": (float, 1.0),
		"user_radius_frac": (float, 0.5),
		"search_radius_frac": (float, 0.6),
	},
	"pilots": {
		"mode": (str, "single"),
		"length": (int, 0),
		"power_dbm": (float, 0.0),
	},
}

_AXIS_NAMES = {"n_antennas": "n_antennas", "n_users": "n_users", "ptx_dbm": "tx_power"}
_LIST_TYPES = {"arrays": str, "schemes": str, "n_antennas": int, "n_users": int, "ptx_dbm": float}


def _coerce(name, typ, value):
	if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
		return float(value)
	if typ is int and isinstance(value, int) and not isinstance(value, bool):
		return value
	if typ is str and isinstance(value, str):
		return value
	if typ is list:
		if not isinstance(value, list):
			value = [value]
		inner = _LIST_TYPES[name.split(".")[-1]]
		return [_coerce(name, inner, v) for v in value]
	raise ConfigError(f"field {name!r}: expected {typ.__name__}, got {value!r}")


def resolve(raw: dict, command: str = "estimate") -> dict:
	"""
	Validate a parsed TOML document and fill in defaults.

	Returns the nested dict that `dump_toml` echoes.  Raises ConfigError
	naming the offending field.
	"""
	unknown = set(raw) - set(_SCHEMA)
	if unknown:
		raise ConfigError(f"unknown section {sorted(unknown)[0]!r}")
	out = {}
	for sec, keys in _SCHEMA.items():
		given = raw.get(sec, {})
		if not isinstance(given, dict):
			raise ConfigError(f"{sec!r} must be a section")
		extra = set(given) - set(keys)
		if extra:
			raise ConfigError(f"unknown field {sec + '.' + sorted(extra)[0]!r}")
		out[sec] = {}
		for key, (typ, default) in keys.items():
			name = f"{sec}.{key}"
			if key in given:
				out[sec][key] = _coerce(name, typ, given[key])
			elif default is ...:
				raise ConfigError(f"missing field {name!r}")
			elif default is not None:
				out[sec][key] = list(default) if isinstance(default, list) else default
	exp = out["experiment"]
	if exp["axis"] not in _AXIS_NAMES:
		raise ConfigError(f"field 'experiment.axis': must be one of {sorted(_AXIS_NAMES)}")
	if command == "transmit" and "ptx_dbm" not in exp:
		raise ConfigError("missing field 'experiment.ptx_dbm'")
	if command == "estimate" and exp["axis"] == "ptx_dbm":
		raise ConfigError("field 'experiment.axis': estimation sweeps run over n_antennas or n_users")
	exp.setdefault("ptx_dbm", [-40.0])
	return out


def to_experiment(resolved: dict, seed=None, trials=None) -> ExperimentConfig:
	"""Map a resolved config (plus CLI overrides) onto the watt-based core config."""
	exp, sysc, pil = resolved["experiment"], resolved["system"], resolved["pilots"]
	try:
		return ExperimentConfig(
			axis=_AXIS_NAMES[exp["axis"]],
			arrays=tuple(exp["arrays"]),
			n_antennas=tuple(exp["n_antennas"]),
			n_users=tuple(exp["n_users"]),
			tx_power_w=tuple(dbm_to_w(p) for p in exp["ptx_dbm"]),
			freq_hz=sysc["freq_hz"],
			noise_w=dbm_to_w(sysc["noise_dbm"]),
			r0_m=sysc["r0_m"],
			rd_m=sysc["rd_m"],
			user_radius_frac=sysc["user_radius_frac"],
			search_radius_frac=sysc["search_radius_frac"],
			trials=exp["trials"] if trials is None else trials,
			seed=exp["seed"] if seed is None else seed,
			schemes=tuple(exp["schemes"]),
			pilots=pil["mode"],
			pilot_len=pil["length"],
			pilot_w=dbm_to_w(pil["power_dbm"]),
		)
	except ValueError as exc:
		raise ConfigError(str(exc)) from exc


def parse_config(text: str, command: str = "estimate") -> dict:
	try:
		raw = tomllib.loads(text)
	except tomllib.TOMLDecodeError as exc:
		# the decoder message carries line and column
		raise ConfigError(f"syntax error: {exc}") from exc
	return resolve(raw, command)


def load_config(path, command: str = "estimate") -> dict:
	try:
		with open(path, "rb") as fh:
			text = fh.read().decode("utf-8")
	except OSError as exc:
		raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
	except UnicodeDecodeError as exc:
		raise ConfigError(f"config {path} is not UTF-8") from exc
	return parse_config(text, command)


def _fmt(v) -> str:
	if isinstance(v, bool):
		return "true" if v else "false"
	if isinstance(v, str):
		return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
	if isinstance(v, float):
		return repr(v) if math.isfinite(v) else ("nan" if v != v else ("inf" if v > 0 else "-inf"))
	if isinstance(v, list):
		return "[" + ", ".join(_fmt(x) for x in v) + "]"
	return str(v)


def dump_toml(resolved: dict) -> str:
	"""TOML text that parses back to `resolved` exactly."""
	lines = []
	for sec in _SCHEMA:
		if sec not in resolved:
			continue
		if lines:
			lines.append("")
		lines.append(f"[{sec}]")
		for key, val in resolved[sec].items():
			lines.append(f"{key} = {_fmt(val)}")
	return "\n".join(lines) + "\n"

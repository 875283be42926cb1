"""
Monte-Carlo harness: random user drops, location-estimation sweeps and
sum-throughput sweeps over array kind, element count, user count and power.

Every trial draws its users from a stream seeded by (seed, trial, U), so all
arrays, element counts and powers at a given trial see the same drop.
Ground truth always uses exact channels on the discrete array.
"""

from dataclasses import asdict, dataclass, field
import hashlib
import json
import logging
import math

import numpy as np

from . import __version__
from .channel import ArrayGeometry, Scenario, field_matrix, receive_aperture, synthesize_training
from .estimation import PeakDetectionError, assignment_error, combine_pilot_samples, locate_users
from .geometry import Point3
from .precoding import (CONJUGATE, PHASE_MODE, array_pm_precoders, closed_form_sinr,
	conjugate_precoder, pinv_zf_precoders)

__all__ = [
	"ExperimentConfig", "SweepRow", "SweepResult", "SPEED_OF_LIGHT",
	"generate_users", "generate_scenario", "collocated_array", "build_array",
	"estimation_trial", "throughput_trial", "run_estimation_sweep",
	"run_throughput_sweep", "config_hash",
]

log = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299792458.0
ARRAY_KINDS = ("circular", "spherical", "collocated")
AXES = ("n_antennas", "n_users", "tx_power")
PILOT_MODES = ("single", "orthogonal")


@dataclass(frozen=True)
class ExperimentConfig:
	"""
	Sweep definition.  Powers in watts, lengths in meters.

	Exactly one of n_antennas, n_users, tx_power_w is swept (named by
	`axis`); the others hold a single value.
	"""
	axis: str = "n_antennas"
	arrays: tuple = ("circular",)
	n_antennas: tuple = (50, 100, 200, 400)
	n_users: tuple = (10,)
	tx_power_w: tuple = (1e-7,)
	freq_hz: float = 2.5e9
	noise_w: float = 1e-13
	r0_m: float = 20.0
	rd_m: float = 1.0
	user_radius_frac: float = 0.5
	search_radius_frac: float = 0.6
	trials: int = 100
	seed: int = 0
	schemes: tuple = (CONJUGATE, PHASE_MODE)
	pilots: str = "single"
	pilot_len: int = 0
	pilot_w: float = 1e-3

	def __post_init__(self):
		for name in ("arrays", "n_antennas", "n_users", "tx_power_w", "schemes"):
			object.__setattr__(self, name, tuple(getattr(self, name)))
		if self.axis not in AXES:
			raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
		if self.trials < 1:
			raise ValueError("trials must be at least 1")
		if not (self.freq_hz > 0 and self.r0_m > 0 and self.rd_m > 0):
			raise ValueError("frequency and radii must be positive")
		if self.noise_w < 0 or self.pilot_w <= 0:
			raise ValueError("noise must be non-negative and pilot power positive")
		if not 0 < self.user_radius_frac < 1 or not self.search_radius_frac > 0:
			raise ValueError("user/search radius fractions out of range")
		for name in ("arrays", "n_antennas", "n_users", "tx_power_w", "schemes"):
			if not getattr(self, name):
				raise ValueError(f"{name} must be non-empty")
		for a in self.arrays:
			if a not in ARRAY_KINDS:
				raise ValueError(f"unknown array kind {a!r}")
		for s in self.schemes:
			if s not in (CONJUGATE, PHASE_MODE):
				raise ValueError(f"unknown scheme {s!r}")
		if self.pilots not in PILOT_MODES:
			raise ValueError(f"unknown pilot mode {self.pilots!r}")
		if any(n < 1 for n in self.n_antennas) or any(u < 1 for u in self.n_users):
			raise ValueError("element and user counts must be positive")
		if any(p <= 0 for p in self.tx_power_w):
			raise ValueError("transmit powers must be positive")
		swept = {"n_antennas": self.n_antennas, "n_users": self.n_users, "tx_power": self.tx_power_w}
		for name, vals in swept.items():
			if name != self.axis and len(vals) != 1:
				raise ValueError(f"{name} is not the sweep axis and must hold one value")

	@property
	def wavelength(self) -> float:
		return SPEED_OF_LIGHT / self.freq_hz

	@property
	def axis_values(self) -> tuple:
		return {"n_antennas": self.n_antennas, "n_users": self.n_users, "tx_power": self.tx_power_w}[self.axis]

	def point(self, value):
		"""(N, U, P_t) at one axis value."""
		N, U, P = self.n_antennas[0], self.n_users[0], self.tx_power_w[0]
		if self.axis == "n_antennas":
			N = int(value)
		elif self.axis == "n_users":
			U = int(value)
		else:
			P = float(value)
		return N, U, P


def config_hash(config: ExperimentConfig) -> str:
	"""Content hash of a config and the code version."""
	blob = json.dumps({"config": asdict(config), "version": __version__}, sort_keys=True)
	return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class SweepRow:
	axis_value: float
	mean: float
	std: float
	array: str
	scheme: str
	trials: int
	failures: int = 0
	closed_mean: float = float("nan")


@dataclass
class SweepResult:
	"""Rows of (axis value, array, scheme) statistics plus run metadata."""
	axis: str
	metric: str
	rows: list = field(default_factory=list)
	metadata: dict = field(default_factory=dict)

	def select(self, array: str, scheme=None):
		return [r for r in self.rows if r.array == array and (scheme is None or r.scheme == scheme)]

	def series(self, array: str, scheme=None):
		"""(axis values, means, stds) for one curve."""
		rows = self.select(array, scheme)
		return (np.array([r.axis_value for r in rows]), np.array([r.mean for r in rows]),
			np.array([r.std for r in rows]))


def _stream(config, *key):
	return np.random.default_rng(np.random.SeedSequence([int(config.seed)] + [int(k) for k in key]))


def generate_users(config: ExperimentConfig, trial: int, n_users: int) -> list:
	"""
	Area-uniform users in the disk of radius user_radius_frac * r0.

	Pairs closer than lambda/2 are broken by redrawing the later user.
	"""
	if n_users < 1:
		raise ValueError("need at least one user")
	rng = _stream(config, trial, n_users, 0)
	R = config.user_radius_frac * config.r0_m
	guard = config.wavelength / 2

	def draw():
		return R * math.sqrt(rng.random()), 2 * math.pi * rng.random()

	pos = [draw() for _ in range(n_users)]
	xy = np.array([[r * math.cos(p), r * math.sin(p)] for r, p in pos])
	attempts = 0
	i = 1
	while i < n_users:
		d = np.linalg.norm(xy[:i] - xy[i], axis=1)
		if np.all(d >= guard):
			i += 1
			continue
		attempts += 1
		if attempts > 10_000:
			raise RuntimeError("could not place users with the separation guard")
		pos[i] = draw()
		xy[i] = [pos[i][0] * math.cos(pos[i][1]), pos[i][0] * math.sin(pos[i][1])]
	return [Point3.planar(r, p) for r, p in pos]


def collocated_array(config: ExperimentConfig, n=None) -> ArrayGeometry:
	"""Sunflower disk of radius r_d at height r0 above the origin."""
	n = config.n_antennas[0] if n is None else n
	return ArrayGeometry.collocated(config.rd_m, config.r0_m, n)


def build_array(config: ExperimentConfig, kind: str, n: int) -> ArrayGeometry:
	if kind == "circular":
		return ArrayGeometry.circular(config.r0_m, n)
	if kind == "spherical":
		return ArrayGeometry.spherical(config.r0_m, n)
	return collocated_array(config, n)


def generate_scenario(config: ExperimentConfig, trial: int, array=None, n_antennas=None,
		n_users=None, tx_power=None) -> Scenario:
	"""Scenario for one trial; unspecified settings take the config's first values."""
	kind = array or config.arrays[0]
	N = n_antennas or config.n_antennas[0]
	U = n_users or config.n_users[0]
	P = tx_power or config.tx_power_w[0]
	return Scenario(build_array(config, kind, N), generate_users(config, trial, U),
		config.wavelength, config.noise_w, P)


def _pilot_matrix(config, U):
	p = math.sqrt(config.pilot_w)
	if config.pilots == "single":
		return np.full((U, 1), p, dtype=complex)
	L = config.pilot_len or U
	if L < U:
		raise ValueError("orthogonal pilots need at least as many slots as users")
	F = np.exp(-2j * np.pi * np.outer(np.arange(U), np.arange(L)) / L)
	return p * F


def estimation_trial(config: ExperimentConfig, trial: int, kind: str, N: int, U: int):
	"""
	Mean location error of one drop, and whether detection fell short.

	Missing users are charged the search-region diameter.
	"""
	sc = generate_scenario(config, trial, kind, N, U)
	S = _pilot_matrix(config, U)
	key = (trial, U, N, ARRAY_KINDS.index(kind), 1)
	samples = synthesize_training(sc, S, _stream(config, *key))
	lam = config.wavelength
	radius = config.search_radius_frac * config.r0_m
	penalty = 2 * radius
	short = False
	if config.pilots == "single":
		try:
			est = locate_users(samples[0].values, sc.array, lam, U, radius)
		except PeakDetectionError as exc:
			est, short = exc.peaks, True
	else:
		est = []
		for u in range(U):
			q = combine_pilot_samples(samples, S, u)
			try:
				est.extend(locate_users(q, sc.array, lam, 1, radius))
			except PeakDetectionError:
				short = True
	errs = np.full(U, penalty)
	if est:
		got = assignment_error(est, sc.users)
		errs[: len(got)] = np.minimum(got, penalty)
	return float(errs.mean()), short


def _stats(values):
	v = np.asarray(values, dtype=float)
	if v.size == 0:
		return float("nan"), float("nan")
	return float(v.mean()), float(v.std(ddof=1) if v.size > 1 else 0.0)


def _metadata(config):
	return {"config_hash": config_hash(config), "seed": config.seed, "version": __version__}


def run_estimation_sweep(config: ExperimentConfig) -> SweepResult:
	"""Mean per-user location error (m) per array kind and axis value."""
	if config.axis == "tx_power":
		raise ValueError("estimation sweeps run over n_antennas or n_users")
	label = f"{config.pilots}_pilot"
	res = SweepResult(config.axis, "location_error_m", metadata=_metadata(config))
	for kind in config.arrays:
		for value in config.axis_values:
			N, U, _ = config.point(value)
			errs, short = [], 0
			for t in range(config.trials):
				e, s = estimation_trial(config, t, kind, N, U)
				errs.append(e)
				short += s
			mean, std = _stats(errs)
			log.info("estimate %s %s=%s: %.4g m (%d short)", kind, config.axis, value, mean, short)
			res.rows.append(SweepRow(float(value), mean, std, kind, label, config.trials, short))
	return res


def throughput_trial(config: ExperimentConfig, trial: int, kind: str, scheme: str, N: int, U: int,
		powers) -> tuple:
	"""
	Sum throughput of one drop at each transmit power.

	Fields are computed once at unit power and rescaled, since signal and
	interference both scale with P_t.

	Returns
	-------
	oracle : ndarray, shape (len(powers),)
	closed : ndarray, closed-form counterpart (NaN where undefined)
	"""
	sc = generate_scenario(config, trial, kind, N, U, 1.0)
	coeffs = None
	if scheme == CONJUGATE:
		pre = [conjugate_precoder(sc, u) for u in range(U)]
	elif kind == "collocated":
		pre = pinv_zf_precoders(sc)
	else:
		built = array_pm_precoders(sc)
		pre = [b[0] for b in built]
		coeffs = [b[1] for b in built]
	G = field_matrix(sc, pre, sc.users)
	Pr = receive_aperture(kind, sc.wavelength) * np.abs(G) ** 2
	sig = np.diag(Pr)
	inter = np.where(np.eye(U, dtype=bool), 0.0, Pr).sum(axis=1)
	P = np.asarray(powers, dtype=float)[:, None]
	sinr = P * sig / (P * inter + config.noise_w)
	oracle = np.log2(1 + sinr).sum(axis=1)
	closed = np.full(len(P), np.nan)
	if kind != "collocated":
		for i, p in enumerate(P[:, 0]):
			closed[i] = np.log2(1 + closed_form_sinr(sc.with_power(p), scheme, coeffs)[0]).sum()
	return oracle, closed


def _scheme_label(kind, scheme):
	return "zf_pinv" if (kind == "collocated" and scheme == PHASE_MODE) else scheme


def run_throughput_sweep(config: ExperimentConfig) -> SweepResult:
	"""Mean sum throughput (bit/s/Hz) per array kind, scheme and axis value."""
	res = SweepResult(config.axis, "sum_throughput_bps_hz", metadata=_metadata(config))
	for kind in config.arrays:
		for scheme in config.schemes:
			if config.axis == "tx_power":
				N, U, _ = config.point(config.tx_power_w[0])
				groups = [(N, U, config.tx_power_w)]
			else:
				groups = [(*config.point(v)[:2], config.tx_power_w) for v in config.axis_values]
			for N, U, powers in groups:
				vals, closed, fails = [], [], 0
				for t in range(config.trials):
					try:
						o, c = throughput_trial(config, t, kind, scheme, N, U, powers)
					except (ValueError, np.linalg.LinAlgError) as exc:
						log.warning("trial %d failed (%s %s): %s", t, kind, scheme, exc)
						fails += 1
						continue
					vals.append(o)
					closed.append(c)
				vals = np.array(vals).reshape(-1, len(powers))
				closed = np.array(closed).reshape(-1, len(powers))
				axis_vals = powers if config.axis == "tx_power" else [N if config.axis == "n_antennas" else U]
				for i, a in enumerate(axis_vals):
					mean, std = _stats(vals[:, i])
					cm = float(np.mean(closed[:, i])) if len(closed) else float("nan")
					log.info("transmit %s %s %s=%s: %.4g (closed %.4g)", kind, scheme, config.axis, a, mean, cm)
					res.rows.append(SweepRow(float(a), mean, std, kind, _scheme_label(kind, scheme),
						config.trials - fails, fails, cm))
	return res

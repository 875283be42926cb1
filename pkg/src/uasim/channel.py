"""
Array layouts, location-induced channel responses, uplink training synthesis
and downlink field evaluation.

Ground truth is the exact free-space response
h_X(A) = exp(-j k |X - A|) / (sqrt(4 pi) |X - A|).  The near-center form
replaces |X - A| by r0 - (A_hat . X) in the phase and by r0 in the amplitude.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .geometry import Point3, as_xyz

__all__ = [
	"EXACT", "NEAR_CENTER", "ArrayGeometry", "Scenario", "AntennaSamples",
	"channel_response", "channel_matrix", "synthesize_training",
	"received_field", "field_matrix", "receive_aperture",
	"fibonacci_directions", "sunflower_disk",
]

EXACT = "exact"
NEAR_CENTER = "near_center"
_MODES = (EXACT, NEAR_CENTER)
_GOLDEN_ANGLE = math.pi * (3 - math.sqrt(5))


def fibonacci_directions(n: int) -> np.ndarray:
	"""Unit vectors of an n-point Fibonacci lattice on the sphere, shape (n, 3)."""
	i = np.arange(n) + 0.5
	z = 1 - 2 * i / n
	rho = np.sqrt(1 - z * z)
	az = i * _GOLDEN_ANGLE
	return np.column_stack((rho * np.cos(az), rho * np.sin(az), z))


def sunflower_disk(n: int, radius: float) -> np.ndarray:
	"""Area-uniform sunflower layout of n points in a disk, shape (n, 2)."""
	i = np.arange(n) + 0.5
	rho = radius * np.sqrt(i / n)
	az = i * _GOLDEN_ANGLE
	return np.column_stack((rho * np.cos(az), rho * np.sin(az)))


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
	"""
	Antenna layout with quadrature weights.

	Attributes
	----------
	kind : str
		"circular", "spherical" or "collocated".
	radius : float
		r0 for the ubiquitous arrays, disk radius r_d for the collocated one.
	xyz : ndarray, shape (N, 3)
		Element positions.
	weights : ndarray, shape (N,)
		Quadrature weights: sum 2 pi r0, 4 pi r0^2, or N (collocated).
	height : float
		Height of the collocated disk above the origin (0 otherwise).
	"""
	kind: str
	radius: float
	xyz: np.ndarray
	weights: np.ndarray
	height: float = 0.0

	@classmethod
	def circular(cls, r0: float, n: int) -> "ArrayGeometry":
		az = 2 * np.pi * np.arange(n) / n
		xyz = np.column_stack((r0 * np.cos(az), r0 * np.sin(az), np.zeros(n)))
		return cls("circular", float(r0), xyz, np.full(n, 2 * np.pi * r0 / n))

	@classmethod
	def spherical(cls, r0: float, n: int) -> "ArrayGeometry":
		xyz = r0 * fibonacci_directions(n)
		return cls("spherical", float(r0), xyz, np.full(n, 4 * np.pi * r0 * r0 / n))

	@classmethod
	def collocated(cls, rd: float, height: float, n: int) -> "ArrayGeometry":
		d = sunflower_disk(n, rd)
		xyz = np.column_stack((d, np.full(n, float(height))))
		return cls("collocated", float(rd), xyz, np.ones(n), float(height))

	@property
	def n(self) -> int:
		return len(self.weights)

	@property
	def measure(self) -> float:
		"""Total quadrature weight (the array 'size' used in power normalization)."""
		return float(self.weights.sum())

	@property
	def r0(self) -> float:
		"""Distance scale from the origin to the array."""
		return self.height if self.kind == "collocated" else self.radius

	@property
	def azimuth(self) -> np.ndarray:
		return np.arctan2(self.xyz[:, 1], self.xyz[:, 0]) % (2 * np.pi)

	@property
	def polar(self) -> np.ndarray:
		r = np.linalg.norm(self.xyz, axis=1)
		return np.arccos(np.clip(self.xyz[:, 2] / r, -1, 1))

	@property
	def elements(self) -> list:
		return [Point3.from_cartesian(p) for p in self.xyz]


@dataclass(frozen=True, eq=False)
class Scenario:
	"""Array, planar user locations, wavelength and powers (watts)."""
	array: ArrayGeometry
	users: tuple
	wavelength: float
	noise_power: float = 1e-13
	tx_power: float = 1e-7

	def __post_init__(self):
		object.__setattr__(self, "users", tuple(self.users))
		if not self.wavelength > 0:
			raise ValueError("wavelength must be positive")
		if not self.tx_power > 0:
			raise ValueError("transmit power must be positive")
		# zero noise is allowed for noiseless reference runs
		if not self.noise_power >= 0:
			raise ValueError("noise power must be non-negative")
		for u in self.users:
			if not u.is_planar:
				raise ValueError("users must be planar")
			if self.array.kind != "collocated" and not u.r < self.array.radius:
				raise ValueError("users must lie inside the array radius")
		xyz = self.user_xyz
		if len(xyz) > 1:
			d = np.linalg.norm(xyz[:, None] - xyz[None], axis=-1)
			if np.any(d[np.triu_indices(len(xyz), 1)] == 0):
				raise ValueError("users must be pairwise distinct")

	@property
	def k(self) -> float:
		return 2 * np.pi / self.wavelength

	@property
	def n_users(self) -> int:
		return len(self.users)

	@property
	def user_xyz(self) -> np.ndarray:
		return as_xyz(self.users) if self.users else np.zeros((0, 3))

	def with_users(self, users) -> "Scenario":
		return Scenario(self.array, tuple(users), self.wavelength, self.noise_power, self.tx_power)

	def with_power(self, tx_power: float) -> "Scenario":
		return Scenario(self.array, self.users, self.wavelength, self.noise_power, tx_power)


@dataclass(frozen=True, eq=False)
class AntennaSamples:
	"""One complex value per array element."""
	values: np.ndarray
	geometry: ArrayGeometry = field(repr=False)

	def __post_init__(self):
		v = np.asarray(self.values, dtype=complex)
		if v.shape != (self.geometry.n,):
			raise ValueError(f"expected {self.geometry.n} samples, got shape {v.shape}")
		object.__setattr__(self, "values", v)


def channel_matrix(points, array_xyz, wavelength: float, mode: str = EXACT) -> np.ndarray:
	"""
	Channel responses between points and array elements.

	Parameters
	----------
	points : sequence of Point3 or ndarray, shape (P, 3)
	array_xyz : ndarray, shape (N, 3)
	wavelength : float
	mode : {"exact", "near_center"}

	Returns
	-------
	ndarray, shape (P, N), complex
	"""
	if mode not in _MODES:
		raise ValueError(f"unknown channel mode {mode!r}")
	X = as_xyz(points)
	A = np.asarray(array_xyz, dtype=float).reshape(-1, 3)
	k = 2 * np.pi / wavelength
	if mode == EXACT:
		# Gram expansion avoids a (P, N, 3) temporary
		d2 = (X * X).sum(1)[:, None] + (A * A).sum(1)[None, :] - 2 * (X @ A.T)
		d = np.sqrt(np.maximum(d2, 0.0))
		if np.any(d == 0):
			raise ValueError("channel undefined for a point on an antenna")
		return np.exp(-1j * k * d) / (np.sqrt(4 * np.pi) * d)
	r0 = np.linalg.norm(A, axis=1)
	proj = X @ (A / r0[:, None]).T
	return np.exp(-1j * k * (r0[None, :] - proj)) / (np.sqrt(4 * np.pi) * r0[None, :])


def channel_response(user: Point3, antenna: Point3, wavelength: float, mode: str = EXACT) -> complex:
	"""Single user-antenna channel coefficient."""
	return complex(channel_matrix([user], antenna.cartesian()[None, :], wavelength, mode)[0, 0])


def _rng(seed):
	if isinstance(seed, np.random.Generator):
		return seed
	return np.random.default_rng(seed)


def synthesize_training(scenario: Scenario, pilots, rng_seed=None, mode: str = EXACT) -> list:
	"""
	Uplink training signals, one AntennaSamples per pilot slot.

	Per slot l and element A: (lambda / sqrt(4 pi)) sum_u h_u(A) s_u(l) + z(A),
	z circularly-symmetric Gaussian with variance noise_power.

	Parameters
	----------
	pilots : array_like, shape (U, L)
	rng_seed : int, SeedSequence or Generator
	"""
	S = np.atleast_2d(np.asarray(pilots, dtype=complex))
	U = scenario.n_users
	if S.shape[0] != U:
		raise ValueError(f"pilot matrix has {S.shape[0]} rows for {U} users")
	arr = scenario.array
	H = channel_matrix(scenario.users, arr.xyz, scenario.wavelength, mode)
	clean = scenario.wavelength / np.sqrt(4 * np.pi) * (S.T @ H)
	rng = _rng(rng_seed)
	sd = math.sqrt(scenario.noise_power / 2)
	noise = sd * (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
	return [AntennaSamples(row, arr) for row in clean + noise]


def _precoder_rows(precoders, arr: ArrayGeometry) -> np.ndarray:
	if isinstance(precoders, AntennaSamples):
		precoders = [precoders]
	if isinstance(precoders, np.ndarray):
		F = np.atleast_2d(precoders).astype(complex)
	else:
		rows = []
		for p in precoders:
			if p.geometry is not arr:
				raise ValueError("precoder defined on a different array")
			rows.append(p.values)
		F = np.array(rows, dtype=complex).reshape(-1, arr.n)
	if F.shape[1] != arr.n:
		raise ValueError("precoder length does not match the array")
	return F


def field_matrix(scenario: Scenario, precoders, points, mode: str = EXACT) -> np.ndarray:
	"""
	Downlink field at each point from each precoder separately.

	g = sqrt(P_t / |A|) sum_p w_p h_Y(A_p) f(A_p), for unit data symbols.

	Returns
	-------
	ndarray, shape (P, K) for K precoders
	"""
	arr = scenario.array
	F = _precoder_rows(precoders, arr)
	H = channel_matrix(points, arr.xyz, scenario.wavelength, mode)
	return math.sqrt(scenario.tx_power / arr.measure) * ((H * arr.weights) @ F.T)


def received_field(scenario: Scenario, precoders, eval_point, mode: str = EXACT):
	"""Superposed downlink field of all given precoders at one point (or several)."""
	single = isinstance(eval_point, Point3)
	g = field_matrix(scenario, precoders, [eval_point] if single else eval_point, mode).sum(axis=1)
	return complex(g[0]) if single else g


def receive_aperture(kind: str, wavelength: float) -> float:
	"""
	Factor converting |g|^2 into received power.

	The circular model is a line density (per meter of array), so its
	reference is lambda / (4 pi); the spherical and collocated models use the
	isotropic effective area lambda^2 / (4 pi).
	"""
	if kind == "circular":
		return wavelength / (4 * np.pi)
	if kind in ("spherical", "collocated"):
		return wavelength ** 2 / (4 * np.pi)
	raise ValueError(f"unknown array kind {kind!r}")

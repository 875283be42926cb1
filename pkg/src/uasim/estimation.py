"""
Location-induced channel estimation.

Two routes to an observation profile Phi(Y) are provided:

* the mode-domain route: decompose the training samples into circular
  Fourier or spherical Laplace coefficients Q and evaluate
  Phi(Y) = c |V(Y) o Q| with the closed-form sequences V(Y);
* the element-domain matched-field route: correlate the samples directly
  with exact candidate channels, Phi(Y) = |sum w q conj(h_Y)| / (a sum w |h_Y|^2).

Both are normalized so a noiseless isolated user peaks at 1.  Peaks of Phi
are the location estimates.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .channel import AntennaSamples, ArrayGeometry, Scenario, channel_matrix
from .geometry import Point3, as_xyz
from .specfun import (LANDAU_NU, bessel_j_table, sph_harm_table, sph_index,
	spherical_jn_table)

__all__ = [
	"ModeSpectrum", "ObservationProfile", "PeakDetectionError",
	"truncation_order", "circular_mode_decompose", "spherical_mode_decompose",
	"v_sequence", "v_matrix", "planar_grid", "observation_profile",
	"combine_pilot_sequences", "combine_pilot_samples", "detect_peaks",
	"error_bound", "matched_field_profile", "circular_polar_profile",
	"locate_users", "assignment_error",
]


class PeakDetectionError(RuntimeError):
	"""Fewer local maxima than expected users."""

	def __init__(self, found: int, expected: int, peaks=()):
		super().__init__(f"found {found} local maxima, expected {expected}")
		self.found = found
		self.expected = expected
		self.peaks = list(peaks)


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
	"""
	Circular Fourier (n = -K..K) or spherical Laplace ((l, m), l <= L) coefficients.

	Circular coefficient n sits at index n + K; spherical (l, m) at l^2 + l + m.
	"""
	kind: str
	order: int
	coeffs: np.ndarray

	def __post_init__(self):
		c = np.asarray(self.coeffs, dtype=complex)
		want = 2 * self.order + 1 if self.kind == "circular" else (self.order + 1) ** 2
		if self.kind not in ("circular", "spherical"):
			raise ValueError(f"unknown spectrum kind {self.kind!r}")
		if c.shape != (want,):
			raise ValueError(f"{self.kind} spectrum of order {self.order} needs {want} coefficients")
		object.__setattr__(self, "coeffs", c)

	def __getitem__(self, idx):
		if self.kind == "circular":
			n = int(idx)
			if abs(n) > self.order:
				raise IndexError(n)
			return self.coeffs[n + self.order]
		l, m = idx
		if l > self.order or abs(m) > l:
			raise IndexError(idx)
		return self.coeffs[sph_index(l, m)]

	def dot(self, other: "ModeSpectrum") -> complex:
		"""Inner product sum conj(self) * other."""
		if (self.kind, self.order) != (other.kind, other.order):
			raise ValueError("spectra differ in kind or order")
		return complex(np.vdot(self.coeffs, other.coeffs))


@dataclass(frozen=True, eq=False)
class ObservationProfile:
	"""
	Profile values on a planar lattice.

	The lattice is the outer product of axis0 and axis1: (x, y) for a
	Cartesian grid, (rho, alpha) for a polar one (periodic in alpha).
	"""
	axis0: np.ndarray
	axis1: np.ndarray
	values: np.ndarray
	normalization: float = 1.0
	polar: bool = False

	@property
	def spacing(self) -> float:
		s = abs(self.axis0[1] - self.axis0[0])
		if not self.polar:
			s = max(s, abs(self.axis1[1] - self.axis1[0]))
		return float(s)

	def positions(self, i, j):
		"""Cartesian (x, y) for (possibly fractional) lattice indices."""
		a0 = np.interp(i, np.arange(len(self.axis0)), self.axis0)
		if self.polar:
			step = self.axis1[1] - self.axis1[0]
			a1 = self.axis1[0] + np.asarray(j) * step
			return a0 * np.cos(a1), a0 * np.sin(a1)
		return a0, np.interp(j, np.arange(len(self.axis1)), self.axis1)

	@property
	def xy(self):
		I, J = np.meshgrid(np.arange(len(self.axis0)), np.arange(len(self.axis1)), indexing="ij")
		return self.positions(I, J)


def truncation_order(r_max: float, wavelength: float) -> int:
	"""Number of modes beyond which J_n(2 pi r_max / lambda) is negligible."""
	if not r_max > 0:
		raise ValueError("r_max must be positive")
	x = 2 * math.pi * r_max / wavelength
	return math.ceil(x) + max(20, math.ceil(8 * x ** (1 / 3)))


def circular_mode_decompose(samples: AntennaSamples, K: int, allow_aliasing: bool = False) -> ModeSpectrum:
	"""
	Fourier coefficients Q_n = (1/N) sum_p q_p exp(j n phi_p), n = -K..K.

	Raises if N < 2K + 2 unless allow_aliasing is set, in which case the
	coefficients are the (periodic) discrete ones.
	"""
	geo = samples.geometry
	if geo.kind != "circular":
		raise ValueError("circular decomposition needs a circular array")
	N = geo.n
	if N < 2 * K + 2 and not allow_aliasing:
		raise ValueError(f"aliasing guard: N={N} < 2K+2={2 * K + 2}")
	n = np.arange(-K, K + 1)
	E = np.exp(1j * np.outer(n, geo.azimuth))
	return ModeSpectrum("circular", K, E @ samples.values / N)


def spherical_mode_decompose(samples: AntennaSamples, L: int) -> ModeSpectrum:
	"""Laplace coefficients Q_l^m = sum_p (w_p / r0^2) q_p conj(Y_l^m(A_p))."""
	geo = samples.geometry
	if geo.kind != "spherical":
		raise ValueError("spherical decomposition needs a spherical array")
	Y = sph_harm_table(L, geo.azimuth, geo.polar)
	w = geo.weights / geo.radius ** 2
	return ModeSpectrum("spherical", L, np.conj(Y) @ (w * samples.values))


def v_matrix(points, order: int, wavelength: float, kind: str = "circular") -> np.ndarray:
	"""
	Rows V(Y) for each point.

	circular: V_n(Y) = j^n exp(j n phi_Y) J_n(k r_Y), n = -K..K
	spherical: V_l^m(Y) = (2 pi)^(3/2) j^l J_{l+1/2}(k r_Y) / sqrt(k r_Y) conj(Y_l^m(Y_hat)),
	evaluated as 4 pi j^l j_l(k r_Y) conj(Y_l^m) so that r_Y = 0 is regular.
	"""
	xyz = as_xyz(points)
	r = np.linalg.norm(xyz, axis=1)
	kr = 2 * np.pi / wavelength * r
	phi = np.arctan2(xyz[:, 1], xyz[:, 0])
	if kind == "circular":
		if np.any(np.abs(xyz[:, 2]) > 1e-12 * np.maximum(r, 1)):
			raise ValueError("circular V-sequence needs planar points")
		K = order
		J = bessel_j_table(K, kr)
		n = np.arange(-K, K + 1)
		sign = np.where((n < 0) & (n % 2 == 1), -1.0, 1.0)
		Jfull = J[np.abs(n)] * sign[:, None]
		return ((1j ** (n % 4))[None, :] * np.exp(1j * np.outer(phi, n))) * Jfull.T
	if kind == "spherical":
		L = order
		theta = np.arccos(np.clip(np.where(r > 0, xyz[:, 2] / np.where(r > 0, r, 1), 0.0), -1, 1))
		jl = spherical_jn_table(L, kr)
		Y = sph_harm_table(L, phi, theta)
		l_of = np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)
		return (4 * np.pi * (1j ** (l_of % 4))[None, :]) * (jl[l_of].T * np.conj(Y).T)
	raise ValueError(f"unknown kind {kind!r}")


def v_sequence(Y: Point3, order: int, wavelength: float, kind: str = "circular") -> ModeSpectrum:
	"""The sequence V(Y) as a ModeSpectrum."""
	return ModeSpectrum(kind, order, v_matrix([Y], order, wavelength, kind)[0])


def planar_grid(radius: float, spacing: float, center=(0.0, 0.0)):
	"""Square lattice axes covering a disk: returns (x_axis, y_axis)."""
	n = int(math.ceil(radius / spacing))
	off = spacing * np.arange(-n, n + 1)
	return center[0] + off, center[1] + off


def _profile_norm(kind, wavelength, r0):
	if kind == "circular":
		return 4 * np.pi * r0 / wavelength
	# V(X) o V(X) = 4 pi for the spherical sequences
	return r0 / wavelength


def observation_profile(spectrum: ModeSpectrum, grid, wavelength: float, r0: float,
		mask_radius=None, chunk: int = 4096) -> ObservationProfile:
	"""
	Mode-domain profile c |V(Y) o Q| on a Cartesian grid.

	Parameters
	----------
	grid : (x_axis, y_axis)
	mask_radius : float, optional
		Points farther than this from the origin are set to zero.
	"""
	xa, ya = (np.asarray(a, dtype=float) for a in grid)
	X, Yg = np.meshgrid(xa, ya, indexing="ij")
	rmax = float(np.sqrt(X ** 2 + Yg ** 2).max())
	if rmax > 0 and truncation_order(rmax, wavelength) > spectrum.order:
		raise ValueError(
			f"spectrum order {spectrum.order} too small for grid radius {rmax:.3g} m "
			f"(needs {truncation_order(rmax, wavelength)})")
	pts = np.column_stack((X.ravel(), Yg.ravel(), np.zeros(X.size)))
	c = _profile_norm(spectrum.kind, wavelength, r0)
	vals = np.empty(len(pts))
	for s in range(0, len(pts), chunk):
		V = v_matrix(pts[s:s + chunk], spectrum.order, wavelength, spectrum.kind)
		vals[s:s + chunk] = c * np.abs(np.conj(V) @ spectrum.coeffs)
	vals = vals.reshape(X.shape)
	if mask_radius is not None:
		vals[X ** 2 + Yg ** 2 > mask_radius ** 2] = 0.0
	return ObservationProfile(xa, ya, vals, c)


def combine_pilot_sequences(spectra, pilots, u: int) -> ModeSpectrum:
	"""Q_u = sum_l conj(s_u(l)) Q(l)."""
	S = np.atleast_2d(np.asarray(pilots, dtype=complex))
	if len(spectra) != S.shape[1]:
		raise ValueError("one spectrum per pilot slot required")
	kinds = {(s.kind, s.order) for s in spectra}
	if len(kinds) != 1:
		raise ValueError("spectra differ in shape")
	C = np.array([s.coeffs for s in spectra])
	return ModeSpectrum(spectra[0].kind, spectra[0].order, np.conj(S[u]) @ C)


def combine_pilot_samples(samples, pilots, u: int) -> np.ndarray:
	"""Element-domain version of combine_pilot_sequences: sum_l conj(s_u(l)) q_l."""
	S = np.atleast_2d(np.asarray(pilots, dtype=complex))
	if len(samples) != S.shape[1]:
		raise ValueError("one sample set per pilot slot required")
	return np.conj(S[u]) @ np.array([s.values for s in samples])


def _local_maxima(vals: np.ndarray, periodic: bool) -> np.ndarray:
	"""Boolean mask of points not smaller than any of their 8 neighbours."""
	pad_mode = ((1, 1), (1, 1))
	P = np.pad(vals, pad_mode, constant_values=-np.inf)
	if periodic:
		P[1:-1, 0] = vals[:, -1]
		P[1:-1, -1] = vals[:, 0]
	core = P[1:-1, 1:-1]
	mask = core > 0
	for di in (-1, 0, 1):
		for dj in (-1, 0, 1):
			if di or dj:
				mask &= core >= P[1 + di:P.shape[0] - 1 + di, 1 + dj:P.shape[1] - 1 + dj]
	# a maximum on the outer lattice edge may just be a slope leaving the search region
	mask[-1] = False
	if not periodic:
		mask[0] = mask[:, 0] = mask[:, -1] = False
	return mask


def _quad_offset(patch: np.ndarray):
	"""Stationary point of a least-squares quadratic through a 3x3 patch."""
	f = patch
	b = (f[2].sum() - f[0].sum()) / 6
	c = (f[:, 2].sum() - f[:, 0].sum()) / 6
	d = (f[2].sum() - 2 * f[1].sum() + f[0].sum()) / 6
	g = (f[:, 2].sum() - 2 * f[:, 1].sum() + f[:, 0].sum()) / 6
	e = (f[2, 2] - f[2, 0] - f[0, 2] + f[0, 0]) / 4
	H = np.array([[2 * d, e], [e, 2 * g]])
	if not (H[0, 0] < 0 and np.linalg.det(H) > 0):
		return 0.0, 0.0
	di, dj = np.linalg.solve(H, [-b, -c])
	return float(np.clip(di, -0.5, 0.5)), float(np.clip(dj, -0.5, 0.5))


def _neighbourhood(vals, i, j, periodic):
	n0, n1 = vals.shape
	ii = np.clip([i - 1, i, i + 1], 0, n0 - 1)
	jj = np.array([j - 1, j, j + 1])
	jj = jj % n1 if periodic else np.clip(jj, 0, n1 - 1)
	return vals[np.ix_(ii, jj)]


def _refined_maxima(profile: ObservationProfile):
	"""Local maxima as (value, x, y) sorted by decreasing value, quadratic-refined."""
	vals = profile.values
	mask = _local_maxima(vals, profile.polar)
	I, J = np.nonzero(mask)
	order = np.argsort(-vals[I, J], kind="stable")
	out = []
	for i, j in zip(I[order], J[order]):
		di, dj = _quad_offset(_neighbourhood(vals, i, j, profile.polar))
		x, y = profile.positions(i + di, j + dj)
		out.append((float(vals[i, j]), float(x), float(y)))
	return out


def _greedy(cands, count, exclusion):
	chosen = []
	for v, x, y in cands:
		if all((x - cx) ** 2 + (y - cy) ** 2 >= exclusion ** 2 for _, cx, cy in chosen):
			chosen.append((v, x, y))
			if len(chosen) == count:
				break
	return chosen


def _to_points(chosen):
	return [Point3.from_cartesian((x, y, 0.0)) for _, x, y in chosen]


def detect_peaks(profile: ObservationProfile, U: int, wavelength: float,
		exclusion=None, check_spacing: bool = True) -> list:
	"""
	Locations of the U strongest separated local maxima.

	Greedy selection by value with a mutual exclusion radius (lambda/2 by
	default); each maximum is refined by a quadratic fit on its 3x3
	neighbourhood, staying within half a cell of the coarse maximum.

	Raises
	------
	PeakDetectionError
		If fewer than U separated maxima exist; ``found`` holds the count.
	"""
	if check_spacing and profile.spacing > wavelength / 8 * (1 + 1e-9):
		raise ValueError(f"grid spacing {profile.spacing:.3g} m exceeds lambda/8")
	exclusion = wavelength / 2 if exclusion is None else exclusion
	chosen = _greedy(_refined_maxima(profile), U, exclusion)
	pts = _to_points(chosen)
	if len(pts) < U:
		raise PeakDetectionError(len(pts), U, pts)
	return pts


def error_bound(scenario: Scenario, u: int, form: str = "printed", nu: float = LANDAU_NU) -> float:
	"""
	Upper bound on |Phi(X_u) - 1| from the distance to the nearest other user.

	circular: (U-1) nu (2 pi d / lambda)^(-1/3)
	spherical: printed form 2 pi (U-1) lambda / d, tight form (U-1) (2 pi d / lambda)^(-1)
	Here d is the distance from user u to its nearest neighbour, which is at
	least the global minimum separation, so the bound holds for either reading.
	"""
	U = scenario.n_users
	if U < 2:
		raise ValueError("error bound needs at least two users")
	xyz = scenario.user_xyz
	d = np.linalg.norm(np.delete(xyz, u, axis=0) - xyz[u], axis=1).min()
	lam = scenario.wavelength
	kind = scenario.array.kind
	if kind == "circular":
		return (U - 1) * nu * (2 * math.pi * d / lam) ** (-1 / 3)
	if kind == "spherical":
		if form == "printed":
			return 2 * math.pi * (U - 1) * lam / d
		if form == "tight":
			return (U - 1) / (2 * math.pi * d / lam)
		raise ValueError(f"unknown bound form {form!r}")
	raise ValueError("error bound defined for circular and spherical arrays only")


# ---- element-domain (matched-field) route ---------------------------------

def matched_field_profile(values, array: ArrayGeometry, points, wavelength: float,
		chunk: int = 2048) -> np.ndarray:
	"""
	Matched-field profile at arbitrary points, exact candidate channels.

	Phi(Y) = |sum_p w_p q_p conj(h_Y(A_p))| / ((lambda / sqrt(4 pi)) sum_p w_p |h_Y(A_p)|^2)
	"""
	q = np.asarray(values, dtype=complex) * array.weights
	P = as_xyz(points)
	out = np.empty(len(P))
	a = wavelength / math.sqrt(4 * math.pi)
	for s in range(0, len(P), chunk):
		H = channel_matrix(P[s:s + chunk], array.xyz, wavelength)
		num = np.abs(np.conj(H) @ q)
		den = (np.abs(H) ** 2) @ array.weights
		out[s:s + chunk] = num / (a * den)
	return out


def circular_polar_profile(values, array: ArrayGeometry, wavelength: float, radius: float,
		spacing: float) -> ObservationProfile:
	"""
	Matched-field profile of a uniform circular array on a polar lattice.

	Azimuths are 2 pi i / (N s), an integer refinement of the element
	spacing, so every ring is a circular correlation of the upsampled samples
	with one kernel and costs two FFTs.
	"""
	if array.kind != "circular":
		raise ValueError("polar profile needs a circular array")
	N = array.n
	off = array.azimuth[0]
	s = max(1, math.ceil(2 * math.pi * radius / (spacing * N)))
	M = N * s
	rho = spacing * (np.arange(math.ceil(radius / spacing)) + 0.5)
	beta = 2 * math.pi * np.arange(M) / M
	r0 = array.radius
	k = 2 * math.pi / wavelength
	up = np.zeros(M, dtype=complex)
	up[::s] = np.asarray(values, dtype=complex) * array.weights
	ind = np.zeros(M)
	ind[::s] = array.weights
	Fq = np.fft.fft(up)
	Fi = np.fft.fft(ind)
	d = np.sqrt(rho[:, None] ** 2 + r0 ** 2 - 2 * rho[:, None] * r0 * np.cos(beta)[None, :])
	h = np.exp(-1j * k * d) / (math.sqrt(4 * math.pi) * d)
	# correlation: sum_t up[t] conj(h[i - t])
	num = np.fft.ifft(Fq[None, :] * np.fft.fft(np.conj(h), axis=1), axis=1)
	den = np.fft.ifft(Fi[None, :] * np.fft.fft(np.abs(h) ** 2, axis=1), axis=1).real
	vals = np.abs(num) / (wavelength / math.sqrt(4 * math.pi) * den)
	return ObservationProfile(rho, off + beta, vals, 1.0, polar=True)


def _patch_refine(values, array, wavelength, x, y, half, step):
	"""Evaluate a small Cartesian patch around (x, y); return its refined maximum."""
	n = int(round(half / step))
	xa = x + step * np.arange(-n, n + 1)
	ya = y + step * np.arange(-n, n + 1)
	X, Y = np.meshgrid(xa, ya, indexing="ij")
	pts = np.column_stack((X.ravel(), Y.ravel(), np.zeros(X.size)))
	vals = matched_field_profile(values, array, pts, wavelength).reshape(X.shape)
	i, j = np.unravel_index(np.argmax(vals), vals.shape)
	prof = ObservationProfile(xa, ya, vals)
	di, dj = _quad_offset(_neighbourhood(vals, i, j, False))
	px, py = prof.positions(i + di, j + dj)
	return float(vals[i, j]), float(px), float(py)


def locate_users(values, array: ArrayGeometry, wavelength: float, count: int,
		search_radius: float, coarse_spacing=None, exclusion=None, oversample: int = 3) -> list:
	"""
	Coarse-to-fine peak search of the matched-field profile.

	A coarse profile (polar FFT lattice for circular arrays, direct Cartesian
	lattice otherwise) supplies candidate maxima; the strongest candidates are
	re-evaluated on fine local patches, and the best separated ones kept.

	Returns
	-------
	list of Point3, strongest first.
	"""
	if array.kind == "collocated":
		psf = wavelength * array.height / (2 * array.radius)
	else:
		psf = wavelength / 2
	coarse = coarse_spacing or (wavelength / 4 if array.kind == "circular" else psf / 1.5)
	exclusion = wavelength / 2 if exclusion is None else exclusion
	if array.kind == "circular":
		prof = circular_polar_profile(values, array, wavelength, search_radius, coarse)
	else:
		xa, ya = planar_grid(search_radius, coarse)
		X, Y = np.meshgrid(xa, ya, indexing="ij")
		inside = X ** 2 + Y ** 2 <= search_radius ** 2
		vals = np.zeros(X.shape)
		pts = np.column_stack((X[inside], Y[inside], np.zeros(inside.sum())))
		vals[inside] = matched_field_profile(values, array, pts, wavelength)
		prof = ObservationProfile(xa, ya, vals)
	mask = _local_maxima(prof.values, prof.polar)
	I, J = np.nonzero(mask)
	order = np.argsort(-prof.values[I, J], kind="stable")[: oversample * count + 10]
	cands = []
	for i, j in zip(I[order], J[order]):
		x, y = prof.positions(i, j)
		cands.append(_patch_refine(values, array, wavelength, float(x), float(y), coarse, coarse / 4))
	cands.sort(key=lambda c: -c[0])
	chosen = _greedy(cands, count, exclusion)
	pts = _to_points(chosen)
	if len(pts) < count:
		raise PeakDetectionError(len(pts), count, pts)
	return pts


def assignment_error(estimates, truth) -> np.ndarray:
	"""Per-user distances after minimum-total-distance matching."""
	E, T = as_xyz(estimates), as_xyz(truth)
	D = np.linalg.norm(T[:, None, :] - E[None, :, :], axis=-1)
	rows, cols = linear_sum_assignment(D)
	return D[rows, cols]

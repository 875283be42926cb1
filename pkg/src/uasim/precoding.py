"""
Downlink precoding for ubiquitous arrays.

Channel-conjugate precoding focuses each user's beam with unit-modulus
weights.  Phase-mode zero-forcing multiplies the conjugate weights by a
combination of phase modes (exp(-j m phi) on the circle, sqrt(4 pi) Y_l^m on
the sphere) whose coefficients lie in the null space of the cross-coupling
matrix, so the beam vanishes at every other user.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .channel import (EXACT, NEAR_CENTER, AntennaSamples, Scenario, channel_matrix,
	field_matrix, receive_aperture)
from .geometry import beta_angle, difference_direction
from .specfun import (LANDAU_NU, bessel_j_half_table, bessel_j_table, sinc_u,
	sph_harm_table, sph_index, spherical_harmonic)

__all__ = [
	"CONJUGATE", "PHASE_MODE", "PrecoderCoeffs", "ZFMatrix", "LinkReport",
	"FieldDensity", "conjugate_precoder", "field_density", "cross_coefficient",
	"cross_coefficient_sph", "dof_limit", "mode_count", "build_zf_matrix",
	"solve_pm_precoder", "mode_basis", "pm_element_weights",
	"array_pm_precoders", "pinv_zf_precoders", "link_report", "snr_closed_form",
	"closed_form_sinr",
]

CONJUGATE = "conjugate"
PHASE_MODE = "phase_mode"


def mode_count(kind: str, M: int) -> int:
	"""Mode budget: 2M+1 on the circle, (M+1)^2 on the sphere."""
	if kind == "circular":
		return 2 * M + 1
	if kind == "spherical":
		return (M + 1) ** 2
	raise ValueError(f"phase modes undefined for {kind!r} arrays")


def _signal_index(kind: str, M: int) -> int:
	return M if kind == "circular" else 0


@dataclass(frozen=True, eq=False)
class PrecoderCoeffs:
	"""
	Phase-mode coefficients of one user.

	Circular mode m sits at index m + M; spherical (l, m) at l^2 + l + m.
	"""
	user: int
	kind: str
	M: int
	coeffs: np.ndarray
	null_dim: int = 0
	rank: int = 0

	def __post_init__(self):
		c = np.asarray(self.coeffs, dtype=complex)
		if c.shape != (mode_count(self.kind, self.M),):
			raise ValueError("coefficient count does not match the mode budget")
		if np.vdot(c, c).real > 1 + 1e-12:
			raise ValueError("phase-mode coefficients exceed unit power")
		object.__setattr__(self, "coeffs", c)

	@property
	def snr_loss(self) -> float:
		"""|e_0^H c|^2: fraction of the unconstrained signal power retained."""
		return float(abs(self.coeffs[_signal_index(self.kind, self.M)]) ** 2)


@dataclass(frozen=True, eq=False)
class ZFMatrix:
	"""Cross-coupling rows (one per interfered user) acting on user `user`'s coefficients."""
	user: int
	kind: str
	M: int
	victims: tuple
	entries: np.ndarray

	@property
	def shape(self):
		return self.entries.shape


@dataclass(frozen=True)
class FieldDensity:
	"""Conjugate-beam power density: closed form and discrete-array evaluation."""
	closed_form: float
	oracle: float


@dataclass(frozen=True, eq=False)
class LinkReport:
	"""
	Per-user link quality.  Powers in watts, ratios linear.

	sinr, snr, rx_power and interference come from field evaluation on the
	discrete array; the closed_* entries are the continuous-array formulas.
	"""
	scheme: str
	sinr: np.ndarray
	snr: np.ndarray
	sir_bound: np.ndarray
	rx_power: np.ndarray
	interference: np.ndarray
	closed_sinr: np.ndarray
	closed_snr: np.ndarray
	notes: tuple = field(default=())

	@property
	def throughput(self) -> float:
		return float(np.sum(np.log2(1 + self.sinr)))

	@property
	def closed_throughput(self) -> float:
		return float(np.sum(np.log2(1 + self.closed_sinr)))


def conjugate_precoder(scenario: Scenario, u: int, mode: str = EXACT) -> AntennaSamples:
	"""Unit-modulus weights conj(h_u) / |h_u| on every element."""
	h = channel_matrix([scenario.users[u]], scenario.array.xyz, scenario.wavelength, mode)[0]
	return AntennaSamples(np.conj(h) / np.abs(h), scenario.array)


def snr_closed_form(scenario: Scenario) -> float:
	"""Single-user receive SNR of a continuous array for a centered user."""
	lam, Pt, s2 = scenario.wavelength, scenario.tx_power, scenario.noise_power
	kind = scenario.array.kind
	with np.errstate(divide="ignore"):
		if kind == "circular":
			return np.float64(Pt * lam) / (8 * np.pi * s2 * scenario.array.radius)
		if kind == "spherical":
			return np.float64(Pt * lam ** 2) / (4 * np.pi * s2)
	raise ValueError(f"no closed form for {kind!r} arrays")


def field_density(scenario: Scenario, u: int, Y) -> FieldDensity:
	"""
	Power density of user u's conjugate beam at Y.

	closed form: P_t/(2 r0) J_0^2(k |X_u - Y|) on the circle, P_t sinc^2 on the
	sphere; oracle: |g(Y)|^2 from the discrete array with exact channels.
	"""
	arr = scenario.array
	Xu = scenario.users[u].cartesian()
	x = scenario.k * float(np.linalg.norm(Y.cartesian() - Xu))
	if arr.kind == "circular":
		closed = scenario.tx_power / (2 * arr.radius) * bessel_j_table(0, x)[0] ** 2
	elif arr.kind == "spherical":
		closed = scenario.tx_power * sinc_u(x) ** 2
	else:
		closed = float("nan")
	g = field_matrix(scenario, conjugate_precoder(scenario, u), [Y])[0, 0]
	return FieldDensity(float(closed), float(abs(g) ** 2))


def _check_pair(scenario, u, k):
	if u == k:
		raise ValueError("cross coefficient needs two different users")


def cross_coefficient(u: int, k: int, m: int, scenario: Scenario) -> complex:
	"""exp(j m beta_{u,k}) J_m(k_w |X_u - X_k|) for a circular array."""
	_check_pair(scenario, u, k)
	Xu, Xk = scenario.users[u], scenario.users[k]
	x = scenario.k * float(np.linalg.norm(Xu.cartesian() - Xk.cartesian()))
	n = abs(m)
	J = bessel_j_table(n, x)[n]
	if m < 0 and n % 2:
		J = -J
	return complex(np.exp(1j * m * beta_angle(Xu, Xk)) * J)


def cross_coefficient_sph(u: int, k: int, m: int, l: int, scenario: Scenario) -> complex:
	"""(2 pi)^(3/2) j^l J_{l+1/2}(x) / sqrt(x) Y_l^m(direction of X_u - X_k), x = k_w |X_u - X_k|."""
	_check_pair(scenario, u, k)
	r, phi, theta = difference_direction(scenario.users[u], scenario.users[k])
	x = scenario.k * r
	J = bessel_j_half_table(l, x)[l]
	return complex((2 * np.pi) ** 1.5 * 1j ** l * J / math.sqrt(x) * spherical_harmonic(l, m, phi, theta))


def dof_limit(scenario: Scenario) -> int:
	"""M = floor(2 pi d_min / lambda), d_min the smallest user separation."""
	U = scenario.n_users
	if U < 2:
		raise ValueError("DoF limit needs at least two users")
	xyz = scenario.user_xyz
	d = np.linalg.norm(xyz[:, None] - xyz[None], axis=-1)
	dmin = d[np.triu_indices(U, 1)].min()
	return int(math.floor(2 * math.pi * dmin / scenario.wavelength))


def _cross_rows(scenario: Scenario, u: int, M: int, victims) -> np.ndarray:
	"""Closed-form coefficients for rows 'victim k', columns the retained modes."""
	kind = scenario.array.kind
	Xu = scenario.users[u].cartesian()
	rows = []
	for k in victims:
		D = scenario.users[k].cartesian() - Xu
		x = scenario.k * float(np.linalg.norm(D))
		if kind == "circular":
			J = bessel_j_table(M, x)
			m = np.arange(-M, M + 1)
			Jm = J[np.abs(m)] * np.where((m < 0) & (m % 2 == 1), -1.0, 1.0)
			beta = math.atan2(D[0], D[1])
			rows.append(np.exp(1j * m * beta) * Jm)
		else:
			_, phi, theta = difference_direction(scenario.users[k], scenario.users[u])
			Jh = bessel_j_half_table(M, x)
			Y = sph_harm_table(M, phi, theta)
			l_of = np.repeat(np.arange(M + 1), 2 * np.arange(M + 1) + 1)
			rows.append((2 * np.pi) ** 1.5 * (1j ** (l_of % 4)) * Jh[l_of] / math.sqrt(x) * Y)
	return np.array(rows, dtype=complex).reshape(len(victims), mode_count(kind, M))


def build_zf_matrix(scenario: Scenario, u: int, M: int) -> ZFMatrix:
	"""
	Zero-forcing constraints for user u.

	Row k (k != u) holds the coupling of u's phase modes into the field at
	X_k, i.e. cross_coefficient(k, u, m): a coefficient vector c with
	entries @ c = 0 makes u's beam vanish at every other user.
	"""
	kind = scenario.array.kind
	victims = tuple(k for k in range(scenario.n_users) if k != u)
	if mode_count(kind, M) <= len(victims):
		raise ValueError(f"{mode_count(kind, M)} modes cannot null {len(victims)} users")
	return ZFMatrix(u, kind, M, victims, _cross_rows(scenario, u, M, victims))


def solve_pm_precoder(zf: ZFMatrix, desired=None) -> PrecoderCoeffs:
	"""
	Unit-norm projection of the desired direction onto null(zf.entries).

	desired defaults to e_0, the mode that carries the signal at the
	intended user.  The null space comes from an SVD with the rank threshold
	max(rows, cols) * eps * sigma_max.
	"""
	A = zf.entries
	ncol = A.shape[1]
	if desired is None:
		desired = np.zeros(ncol, dtype=complex)
		desired[_signal_index(zf.kind, zf.M)] = 1.0
	desired = np.asarray(desired, dtype=complex)
	rank = 0
	proj = desired.copy()
	if A.shape[0]:
		# reduced SVD: remove the row-space component instead of forming the null basis
		_, s, Vh = np.linalg.svd(A, full_matrices=False)
		tol = max(A.shape) * np.finfo(float).eps * s[0]
		rank = int(np.sum(s > tol))
		R = Vh[:rank]
		proj = desired - R.conj().T @ (R @ desired)
	if ncol - rank == 0:
		raise ValueError("null space is empty")
	nrm = np.linalg.norm(proj)
	if nrm <= 1e-12 * np.linalg.norm(desired):
		raise ValueError("desired direction is orthogonal to the null space")
	return PrecoderCoeffs(zf.user, zf.kind, zf.M, proj / nrm, ncol - rank, rank)


def mode_basis(array, M: int) -> np.ndarray:
	"""Phase-mode patterns on the elements, shape (N, modes)."""
	if array.kind == "circular":
		m = np.arange(-M, M + 1)
		return np.exp(-1j * np.outer(array.azimuth, m))
	if array.kind == "spherical":
		return math.sqrt(4 * math.pi) * sph_harm_table(M, array.azimuth, array.polar).T
	raise ValueError(f"phase modes undefined for {array.kind!r} arrays")


def _unit_power(array, f):
	"""Scale so the mean-square weight (quadrature sense) is one."""
	p = float(np.sum(array.weights * np.abs(f) ** 2) / array.measure)
	return f / math.sqrt(p)


def pm_element_weights(scenario: Scenario, pc: PrecoderCoeffs, normalize: bool = True,
		mode: str = EXACT) -> AntennaSamples:
	"""Element weights conj(h_u)/|h_u| * sum_m c_m B_m for a phase-mode precoder."""
	arr = scenario.array
	f = conjugate_precoder(scenario, pc.user, mode).values * (mode_basis(arr, pc.M) @ pc.coeffs)
	if normalize:
		f = _unit_power(arr, f)
	return AntennaSamples(f, arr)


def _discrete_mode_limit(array) -> int:
	if array.kind == "circular":
		return (array.n - 1) // 2
	return int(math.isqrt(array.n)) - 1


def array_pm_precoders(scenario: Scenario, M=None):
	"""
	Phase-mode zero-forcing built from the discrete array itself.

	Coupling rows are quadrature sums over the actual elements with exact
	channels, so the nulls hold on the array as deployed.  The mode count is
	the DoF limit, raised if needed to leave a null space and capped at what
	the element count can represent.

	Returns
	-------
	list of (AntennaSamples, PrecoderCoeffs)
	"""
	arr = scenario.array
	U = scenario.n_users
	if M is None:
		M = dof_limit(scenario) if U > 1 else 0
		floor_M = math.ceil(U / 2) if arr.kind == "circular" else math.ceil(math.sqrt(U))
		M = min(max(M, floor_M), _discrete_mode_limit(arr))
	B = mode_basis(arr, M)
	H = channel_matrix(scenario.users, arr.xyz, scenario.wavelength)
	F0 = np.conj(H) / np.abs(H)
	out = []
	for u in range(U):
		T = (H * arr.weights) @ (F0[u][:, None] * B) / math.sqrt(arr.measure)
		victims = tuple(k for k in range(U) if k != u)
		zf = ZFMatrix(u, arr.kind, M, victims, T[list(victims)])
		pc = solve_pm_precoder(zf, desired=np.conj(T[u]))
		out.append((pm_element_weights(scenario, pc), pc))
	return out


def pinv_zf_precoders(scenario: Scenario) -> list:
	"""Conventional zero-forcing (channel pseudo-inverse), unit mean-square per user."""
	arr = scenario.array
	H = channel_matrix(scenario.users, arr.xyz, scenario.wavelength) * arr.weights
	W = np.linalg.pinv(H)
	return [AntennaSamples(_unit_power(arr, W[:, u]), arr) for u in range(scenario.n_users)]


def _nearest(scenario):
	xyz = scenario.user_xyz
	d = np.linalg.norm(xyz[:, None] - xyz[None], axis=-1)
	np.fill_diagonal(d, np.inf)
	return d.min(axis=1), d


def closed_form_sinr(scenario: Scenario, scheme: str, coeffs=None):
	"""Continuous-array (SINR, SNR, SIR lower bound) per user; NaN for collocated arrays."""
	U = scenario.n_users
	kind = scenario.array.kind
	nanv = np.full(U, np.nan)
	if kind == "collocated":
		return nanv, nanv, nanv
	snr0 = snr_closed_form(scenario)
	nearest, D = _nearest(scenario)
	x = scenario.k * D
	if scheme == CONJUGATE:
		if kind == "circular":
			inter = bessel_j_table(0, np.where(np.isinf(x), 0, x))[0] ** 2
			lam_pow = (2 * math.pi * nearest / scenario.wavelength) ** (2 / 3)
			bound = LANDAU_NU ** 2 / max(U - 1, 1) * lam_pow
		else:
			inter = sinc_u(np.where(np.isinf(x), 0, x)) ** 2
			bound = (2 * math.pi * nearest / scenario.wavelength) ** 2 / max(U - 1, 1)
		np.fill_diagonal(inter, 0.0)
		with np.errstate(divide="ignore"):
			sinr = 1 / (inter.sum(axis=1) + 1 / snr0)
		return sinr, np.full(U, snr0), np.where(U > 1, bound, np.inf)
	loss = np.array([c.snr_loss for c in coeffs]) if coeffs is not None else nanv
	snr = snr0 * loss
	return snr, snr, np.full(U, np.inf)


def _default_precoders(scenario: Scenario, scheme: str):
	U = scenario.n_users
	if scheme == CONJUGATE:
		return [conjugate_precoder(scenario, u) for u in range(U)], None
	if scenario.array.kind == "collocated":
		return pinv_zf_precoders(scenario), None
	if U == 1:
		M = 0
	else:
		M = dof_limit(scenario)
	pcs = []
	for u in range(U):
		if U == 1:
			zf = ZFMatrix(u, scenario.array.kind, 0, (), np.zeros((0, 1), dtype=complex))
		else:
			zf = build_zf_matrix(scenario, u, M)
		pcs.append(solve_pm_precoder(zf))
	return [pm_element_weights(scenario, pc) for pc in pcs], pcs


def link_report(scenario: Scenario, scheme: str, precoders=None, coeffs=None) -> LinkReport:
	"""
	SINR, SNR and received powers of all users.

	Parameters
	----------
	scheme : {"conjugate", "phase_mode"}
	precoders : list of AntennaSamples, optional
		One per user; built from the closed-form design when omitted.
	coeffs : list of PrecoderCoeffs, optional
		Phase-mode coefficients behind `precoders`, used for the closed-form SNR loss.
	"""
	if scheme not in (CONJUGATE, PHASE_MODE):
		raise ValueError(f"unknown scheme {scheme!r}")
	if precoders is None:
		precoders, built = _default_precoders(scenario, scheme)
		coeffs = coeffs if coeffs is not None else built
	if len(precoders) != scenario.n_users:
		raise ValueError("one precoder per user required")
	arr = scenario.array
	G = field_matrix(scenario, precoders, scenario.users)
	Pr = receive_aperture(arr.kind, scenario.wavelength) * np.abs(G) ** 2
	sig = np.diag(Pr).copy()
	inter = np.where(np.eye(len(sig), dtype=bool), 0.0, Pr).sum(axis=1)
	s2 = scenario.noise_power
	with np.errstate(divide="ignore", invalid="ignore"):
		snr = sig / s2
		sinr = sig / (inter + s2)
	csinr, csnr, bound = closed_form_sinr(scenario, scheme, coeffs)
	notes = ()
	if arr.kind == "spherical":
		notes = ("received power uses aperture lambda^2/(4 pi) in m^2 per unit power density",)
	return LinkReport(scheme, sinr, snr, bound, sig, inter, csinr, csnr, notes)

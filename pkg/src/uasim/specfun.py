"""
Special functions: Bessel J of integer and half-integer order, Legendre and
associated Legendre functions, orthonormal spherical harmonics, and the
unnormalized sinc.

Integer orders use Miller's downward recurrence normalized by
J_0 + 2*sum(J_2k) = 1, with a power series for small arguments.  Half-integer
orders go through the spherical Bessel functions, also by downward recurrence.
Every routine has a bulk "table" form that returns all orders at once over an
array of arguments, since that is what the mode-domain code consumes.
"""

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
	"BesselOrder", "bessel_j", "bessel_j_table", "bessel_j_half_table",
	"spherical_jn_table", "legendre_p", "legendre_table", "assoc_legendre",
	"norm_assoc_legendre_table", "spherical_harmonic", "sph_harm_table",
	"sph_index", "sinc_u", "LANDAU_NU",
]

# sup_x x^(1/3) J_0(x), attained near x = 0.7837.  Printed truncated as 0.7857
# in most references; the truncated value is exceeded on a 0.01 grid.
LANDAU_NU = 0.7857468705

_BIG = 1e250
_SMALL = 1e-250


@dataclass(frozen=True)
class BesselOrder:
	"""Order of a Bessel function: integer n, or half-integer l + 1/2."""
	n: int
	half: bool = False

	def __post_init__(self):
		if self.half and self.n < 0:
			raise ValueError("half-integer order index must be non-negative")

	@classmethod
	def integer(cls, n: int) -> "BesselOrder":
		return cls(int(n), False)

	@classmethod
	def half_integer(cls, l: int) -> "BesselOrder":
		return cls(int(l), True)

	@property
	def value(self) -> float:
		return self.n + 0.5 if self.half else float(self.n)


def _check_args(x):
	x = np.asarray(x, dtype=float)
	if np.any(np.isnan(x)):
		raise ValueError("Bessel argument is NaN")
	if np.any(x < 0):
		raise ValueError("Bessel argument must be non-negative")
	return x


def _start_order(nmax, xmax):
	"""Starting order for the downward recurrence."""
	m = int(max(nmax, xmax) + 15 * max(xmax, 1.0) ** (1 / 3) + 30)
	return m + (m % 2)


def _bessel_series(nmax, x):
	"""Power series for J_0..J_nmax at small x (x < 2), shape (nmax+1, len(x))."""
	n = np.arange(nmax + 1)[:, None]
	out = np.zeros((nmax + 1, x.size))
	pos = x > 0
	xp = x[pos][None, :]
	# log(x) - log 2 rather than log(x/2): x/2 underflows to 0 at the smallest subnormal
	with np.errstate(under="ignore"):
		lead = np.exp(n * (np.log(xp) - math.log(2)) - np.array([math.lgamma(k + 1) for k in range(nmax + 1)])[:, None])
	term = np.ones((nmax + 1, xp.shape[1]))
	acc = term.copy()
	q = -(xp ** 2) / 4
	for k in range(1, 30):
		term = term * q / (k * (n + k))
		acc += term
	out[:, pos] = lead * acc
	out[0, ~pos] = 1.0
	return out


def _bessel_miller(nmax, x):
	"""Downward recurrence for J_0..J_nmax at x >= 2 (1-d x)."""
	mstart = _start_order(nmax, float(x.max()))
	tab = np.zeros((nmax + 1, x.size))
	nxt = np.zeros_like(x)
	cur = np.full_like(x, 1e-30)
	total = np.zeros_like(x)
	two_over_x = 2.0 / x
	for n in range(mstart, 0, -1):
		if n <= nmax:
			tab[n] = cur
		if n % 2 == 0:
			total += 2 * cur
		prev = n * two_over_x * cur - nxt
		nxt, cur = cur, prev
		big = np.abs(cur) > _BIG
		if big.any():
			cur[big] *= _SMALL
			nxt[big] *= _SMALL
			total[big] *= _SMALL
			tab[:, big] *= _SMALL
	tab[0] = cur
	total += cur
	return tab / total


def bessel_j_table(nmax: int, x) -> np.ndarray:
	"""
	J_n(x) for n = 0..nmax.

	Parameters
	----------
	nmax : int
		Highest order.
	x : array_like
		Non-negative arguments.

	Returns
	-------
	ndarray, shape (nmax + 1,) + x.shape
	"""
	x = _check_args(x)
	if nmax < 0:
		raise ValueError("nmax must be non-negative")
	flat = x.ravel()
	out = np.empty((nmax + 1, flat.size))
	small = flat < 2.0
	if small.any():
		out[:, small] = _bessel_series(nmax, flat[small])
	if (~small).any():
		out[:, ~small] = _bessel_miller(nmax, flat[~small])
	return out.reshape((nmax + 1,) + x.shape)


def spherical_jn_table(lmax: int, x) -> np.ndarray:
	"""Spherical Bessel j_l(x) for l = 0..lmax, shape (lmax + 1,) + x.shape."""
	x = _check_args(x)
	flat = x.ravel()
	out = np.zeros((lmax + 1, flat.size))
	# two-term series below 1e-3, where the recurrence would overflow for tiny x
	small = flat < 1e-3
	if small.any():
		xs = flat[small]
		lead = np.ones_like(xs)
		for l in range(lmax + 1):
			if l:
				lead = lead * xs / (2 * l + 1)
			out[l, small] = lead * (1 - xs * xs / (2 * (2 * l + 3)))
	pos = ~small
	if pos.any():
		xp = flat[pos]
		mstart = _start_order(lmax, float(xp.max()))
		tab = np.zeros((lmax + 2, xp.size))
		nxt = np.zeros_like(xp)
		cur = np.full_like(xp, 1e-30)
		for l in range(mstart, 0, -1):
			if l <= lmax + 1:
				tab[l] = cur
			prev = (2 * l + 1) / xp * cur - nxt
			nxt, cur = cur, prev
			big = np.abs(cur) > _BIG
			if big.any():
				cur[big] *= _SMALL
				nxt[big] *= _SMALL
				tab[:, big] *= _SMALL
		tab[0] = cur
		# normalize against whichever low order is better conditioned
		j0 = np.sin(xp) / xp
		j1 = np.sin(xp) / xp ** 2 - np.cos(xp) / xp
		use0 = np.abs(j0) >= np.abs(j1)
		scale = np.where(use0, j0 / np.where(use0, tab[0], 1.0), j1 / np.where(use0, 1.0, tab[1]))
		out[:, pos] = tab[: lmax + 1] * scale
	return out.reshape((lmax + 1,) + x.shape)


def bessel_j_half_table(lmax: int, x) -> np.ndarray:
	"""J_{l+1/2}(x) for l = 0..lmax."""
	x = _check_args(x)
	return np.sqrt(2 * x / np.pi) * spherical_jn_table(lmax, x)


def bessel_j(order, x):
	"""
	Bessel function of the first kind.

	Parameters
	----------
	order : BesselOrder or int
		A plain int is taken as an integer order.
	x : float or array_like
		Non-negative argument(s).
	"""
	if not isinstance(order, BesselOrder):
		order = BesselOrder.integer(order)
	x = _check_args(x)
	if order.half:
		val = bessel_j_half_table(order.n, x)[order.n]
	else:
		n = abs(order.n)
		val = bessel_j_table(n, x)[n]
		if order.n < 0 and n % 2:
			val = -val
	return val[()] if val.ndim == 0 else val


def sinc_u(x):
	"""Unnormalized sinc, sin(x)/x, equal to 1 at x = 0."""
	x = np.asarray(x, dtype=float)
	small = np.abs(x) < 1e-4
	safe = np.where(small, 1.0, x)
	x2 = x * x
	out = np.where(small, 1 - x2 / 6 + x2 * x2 / 120, np.sin(safe) / safe)
	return out[()] if out.ndim == 0 else out


def _check_unit(x):
	x = np.asarray(x, dtype=float)
	if np.any(np.isnan(x)) or np.any(np.abs(x) > 1):
		raise ValueError("Legendre argument must lie in [-1, 1]")
	return x


def legendre_table(lmax: int, x) -> np.ndarray:
	"""P_l(x) for l = 0..lmax via the Bonnet recurrence."""
	x = _check_unit(x)
	out = np.empty((lmax + 1,) + x.shape)
	out[0] = 1.0
	if lmax >= 1:
		out[1] = x
	for l in range(1, lmax):
		out[l + 1] = ((2 * l + 1) * x * out[l] - l * out[l - 1]) / (l + 1)
	return out


def legendre_p(l: int, x):
	"""Legendre polynomial P_l(x)."""
	if l < 0:
		raise ValueError("degree must be non-negative")
	val = legendre_table(l, x)[l]
	return val[()] if val.ndim == 0 else val


def norm_assoc_legendre_table(lmax: int, x) -> np.ndarray:
	"""
	Orthonormalized associated Legendre functions for m >= 0.

	Entry [l, m] is sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(x), Condon-Shortley
	phase included, so that Y_l^m = entry * exp(j m phi).  Entries with m > l
	are zero.  The recurrence runs upward in l for all m at once.

	Returns
	-------
	ndarray, shape (lmax + 1, lmax + 1) + x.shape
	"""
	x = _check_unit(x)
	s = np.sqrt(np.clip(1 - x * x, 0.0, None))
	out = np.zeros((lmax + 1, lmax + 1) + x.shape)
	pad = (slice(None),) + (None,) * x.ndim
	pmm = np.full(x.shape, 1 / np.sqrt(4 * np.pi))
	for m in range(lmax + 1):
		if m > 0:
			pmm = -np.sqrt((2 * m + 1) / (2 * m)) * s * pmm
		out[m, m] = pmm
	m_all = np.arange(lmax + 1)
	if lmax >= 1:
		ms = m_all[:lmax]
		out[ms + 1, ms] = np.sqrt(2 * ms + 3)[pad] * x * out[ms, ms]
	for l in range(2, lmax + 1):
		m = m_all[: l - 1]
		a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
		b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
		out[l, : l - 1] = a[pad] * (x * out[l - 1, : l - 1] - b[pad] * out[l - 2, : l - 1])
	return out


def assoc_legendre(l: int, m: int, x):
	"""Associated Legendre function P_l^m(x) with the Condon-Shortley phase."""
	if l < 0 or abs(m) > l:
		raise ValueError("need 0 <= |m| <= l")
	am = abs(m)
	x = _check_unit(x)
	norm = np.sqrt((2 * l + 1) / (4 * np.pi) * math.exp(math.lgamma(l - am + 1) - math.lgamma(l + am + 1)))
	val = norm_assoc_legendre_table(l, x)[l, am] / norm
	if m < 0:
		val = (-1) ** am * math.exp(math.lgamma(l - am + 1) - math.lgamma(l + am + 1)) * val
	return val[()] if np.ndim(val) == 0 else val


def sph_index(l: int, m: int) -> int:
	"""Packed position of (l, m) in a harmonic table: l^2 + l + m."""
	return l * l + l + m


def _sph_layout(lmax):
	"""Degree, order and |order| of each packed harmonic row."""
	l = np.repeat(np.arange(lmax + 1), 2 * np.arange(lmax + 1) + 1)
	m = np.arange(l.size) - l * l - l
	return l, m, np.abs(m)


def sph_harm_table(lmax: int, phi, theta) -> np.ndarray:
	"""
	All spherical harmonics Y_l^m(phi, theta) up to degree lmax.

	phi is azimuth, theta polar.  Rows are packed with sph_index.

	Returns
	-------
	ndarray, shape ((lmax + 1)**2,) + broadcast shape of phi, theta
	"""
	phi, theta = np.broadcast_arrays(np.asarray(phi, float), np.asarray(theta, float))
	if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(theta))):
		raise ValueError("angles must be finite")
	plm = norm_assoc_legendre_table(lmax, np.clip(np.cos(theta), -1.0, 1.0))
	l, m, am = _sph_layout(lmax)
	pad = (slice(None),) + (None,) * phi.ndim
	# Y_l^{-m} = (-1)^m conj(Y_l^m) keeps P_l^|m| with sign (-1)^m for m < 0
	sign = np.where((m < 0) & (am % 2 == 1), -1.0, 1.0)
	return (sign[pad] * plm[l, am]) * np.exp(1j * m[pad] * phi[None])


def spherical_harmonic(l: int, m: int, phi, theta):
	"""Orthonormal spherical harmonic Y_l^m at azimuth phi and polar angle theta."""
	if l < 0 or abs(m) > l:
		raise ValueError("need 0 <= |m| <= l")
	val = sph_harm_table(l, phi, theta)[sph_index(l, m)]
	return val[()] if val.ndim == 0 else val

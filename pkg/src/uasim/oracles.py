"""
Brute-force reference computations.

Nothing here calls the closed forms it is used to check: Bessel values come
from trapezoid sums of the integral definition, cross-coupling coefficients
from direct integration over the circle or sphere, and zero-forcing residuals
from fields synthesized on dense quadrature arrays.
"""

import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from .channel import NEAR_CENTER, ArrayGeometry, Scenario, channel_matrix
from .specfun import norm_assoc_legendre_table

__all__ = [
	"bessel_quadrature", "legendre_rodrigues", "circle_cross_quadrature",
	"sphere_cross_quadrature", "gauss_sphere", "gauss_sphere_array",
	"poisson_integral", "pm_residuals",
]


def bessel_quadrature(n: int, x: float, npts: int = 4096) -> float:
	"""(1/2pi) int_0^2pi exp(j(x sin t - n t)) dt by the (spectrally accurate) trapezoid rule."""
	t = 2 * np.pi * np.arange(npts) / npts
	return float(np.mean(np.exp(1j * (x * np.sin(t) - n * t))).real)


def legendre_rodrigues(l: int, x):
	"""P_l from Rodrigues' formula via exact polynomial differentiation."""
	p = np.polynomial.Polynomial([-1, 0, 1]) ** l
	return p.deriv(l)(x) / (2 ** l * math.factorial(l))


def poisson_integral(n: int, x: float, nodes: int = 200) -> complex:
	"""(1/2) (-j)^n int_{-1}^{1} exp(j x t) P_n(t) dt by Gauss-Legendre quadrature."""
	t, w = leggauss(nodes)
	return complex(0.5 * (-1j) ** n * np.sum(w * np.exp(1j * x * t) * legendre_rodrigues(n, t)))


def circle_cross_quadrature(Xa, Xb, m: int, k: float, npts: int = 2000) -> complex:
	"""(1/2pi) int exp(j k (A_hat . (Xa - Xb)) - j m phi) dphi."""
	phi = 2 * np.pi * np.arange(npts) / npts
	D = np.asarray(Xa, float) - np.asarray(Xb, float)
	return complex(np.mean(np.exp(1j * k * (D[0] * np.cos(phi) + D[1] * np.sin(phi)) - 1j * m * phi)))


def gauss_sphere(n_theta: int, n_phi: int):
	"""Product rule: Gauss-Legendre in cos(theta) times the trapezoid in phi."""
	x, w = leggauss(n_theta)
	theta = np.arccos(x)
	phi = 2 * np.pi * np.arange(n_phi) / n_phi
	weights = np.outer(w, np.full(n_phi, 2 * np.pi / n_phi))
	return theta, phi, weights


def sphere_cross_quadrature(Xa, Xb, l: int, m: int, k: float, n_theta: int = 200, n_phi: int = 400) -> complex:
	"""int exp(j k A_hat . (Xa - Xb)) Y_l^m(A_hat) dOmega."""
	from .specfun import spherical_harmonic
	theta, phi, w = gauss_sphere(n_theta, n_phi)
	T, P = np.meshgrid(theta, phi, indexing="ij")
	D = np.asarray(Xa, float) - np.asarray(Xb, float)
	dots = np.sin(T) * (np.cos(P) * D[0] + np.sin(P) * D[1]) + np.cos(T) * D[2]
	return complex(np.sum(w * np.exp(1j * k * dots) * spherical_harmonic(l, m, P, T)))


def gauss_sphere_array(r0: float, n_theta: int, n_phi: int) -> ArrayGeometry:
	"""A 'spherical array' whose elements are product-rule nodes (near-exact quadrature)."""
	theta, phi, w = gauss_sphere(n_theta, n_phi)
	T, P = np.meshgrid(theta, phi, indexing="ij")
	xyz = r0 * np.column_stack((
		(np.sin(T) * np.cos(P)).ravel(), (np.sin(T) * np.sin(P)).ravel(), np.cos(T).ravel()))
	return ArrayGeometry("spherical", float(r0), xyz, r0 * r0 * w.ravel())


def _sphere_pattern(coeffs, M, theta, n_phi):
	"""sum_{l,m} c_lm sqrt(4 pi) Y_l^m on the product grid, via an FFT in phi."""
	plm = norm_assoc_legendre_table(M, np.cos(theta))
	spec = np.zeros((len(theta), n_phi), dtype=complex)
	for m in range(-M, M + 1):
		am = abs(m)
		l = np.arange(am, M + 1)
		c = coeffs[l * l + l + m]
		sign = -1.0 if (m < 0 and am % 2) else 1.0
		spec[:, m % n_phi] += sign * (c @ plm[am:, am])
	return math.sqrt(4 * math.pi) * np.fft.ifft(spec, axis=1) * n_phi


def pm_residuals(scenario: Scenario, coeffs, n_circle: int = 2048, n_theta: int = 160, n_phi: int = 320):
	"""
	Field powers of phase-mode precoders under continuous-limit quadrature.

	Uses near-center channels on a dense trapezoid circle or Gauss product
	sphere.  Returns P with P[k, u] = |field of user u's precoder at X_k|^2.
	"""
	kind = scenario.array.kind
	r0 = scenario.array.radius
	U = scenario.n_users
	if kind == "circular":
		arr = ArrayGeometry.circular(r0, n_circle)
		phi = arr.azimuth
	else:
		if 2 * coeffs[0].M + 2 > n_phi:
			raise ValueError("phi grid too coarse for the mode order")
		arr = gauss_sphere_array(r0, n_theta, n_phi)
		theta, _, _ = gauss_sphere(n_theta, n_phi)
	H = channel_matrix(scenario.users, arr.xyz, scenario.wavelength, NEAR_CENTER)
	F0 = np.conj(H) / np.abs(H)
	Pw = np.zeros((U, U))
	for pc in coeffs:
		u = pc.user
		if kind == "circular":
			m = np.arange(-pc.M, pc.M + 1)
			pattern = np.exp(-1j * np.outer(phi, m)) @ pc.coeffs
		else:
			pattern = _sphere_pattern(pc.coeffs, pc.M, theta, n_phi).ravel()
		f = F0[u] * pattern
		g = (H * arr.weights) @ f / math.sqrt(arr.measure)
		Pw[:, u] = np.abs(g) ** 2
	return Pw

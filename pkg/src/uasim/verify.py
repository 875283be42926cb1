"""
Self-check suite behind `ua-sim verify`.

Each check compares a closed form against an independent reference
(quadrature, brute-force sums, direct field synthesis) and returns
(passed, detail).  Checks are cheap versions of the test-suite properties.
"""

import fnmatch
import math

import numpy as np

from .channel import NEAR_CENTER, ArrayGeometry, Scenario, synthesize_training
from .estimation import (circular_mode_decompose, error_bound, observation_profile,
	spherical_mode_decompose, truncation_order, v_matrix)
from .geometry import Point3
from .oracles import (bessel_quadrature, circle_cross_quadrature, gauss_sphere,
	gauss_sphere_array, pm_residuals, poisson_integral)
from .precoding import build_zf_matrix, cross_coefficient, dof_limit, solve_pm_precoder
from .specfun import (LANDAU_NU, bessel_j_half_table, bessel_j_table, legendre_table,
	sinc_u, sph_harm_table)

__all__ = ["CHECKS", "run_checks", "select_checks"]

LAMBDA = 0.12
R0 = 20.0


def _rng(tag):
	# str hash is salted per process, so derive the seed from the characters
	return np.random.default_rng(sum(ord(c) * 31 ** i for i, c in enumerate(tag)) % 2 ** 32)


def _jn(n, x):
	"""J_n for signed integer orders from the table."""
	n = np.asarray(n)
	J = bessel_j_table(int(np.abs(n).max()), x)
	out = J[np.abs(n)]
	return np.where((n < 0) & (np.abs(n) % 2 == 1), -out, out)


def check_bessel_quadrature(nu):
	rng = _rng("bq")
	err = 0.0
	for _ in range(40):
		n = int(rng.integers(0, 30))
		x = float(rng.uniform(0, 60))
		ref = bessel_quadrature(n, x)
		err = max(err, abs(bessel_j_table(n, x)[n] - ref) / max(1, abs(ref)))
	return err < 1e-12, f"max rel err {err:.2e}"


def check_jacobi_anger(nu):
	rng = _rng("ja")
	err = 0.0
	for x in (1.0, 5.0, 20.0, 50.0):
		K = math.ceil(x) + math.ceil(8 * x ** (1 / 3)) + 20
		phi = rng.uniform(0, 2 * np.pi, 100)
		n = np.arange(-K, K + 1)
		series = (1j ** (n % 4) * _jn(n, x)) @ np.exp(1j * np.outer(n, phi))
		err = max(err, np.abs(np.exp(1j * x * np.cos(phi)) - series).max())
	return err < 1e-10, f"max err {err:.2e}"


def check_addition_i(nu):
	rng = _rng("a1")
	err = 0.0
	for _ in range(50):
		a, b = rng.uniform(0.1, 20, 2)
		phi = rng.uniform(0, 2 * np.pi)
		n = int(rng.integers(-5, 6))
		R = math.sqrt(a * a + b * b - 2 * a * b * math.cos(phi))
		w = math.atan2(a * math.sin(phi), b - a * math.cos(phi))
		k = np.arange(-80, 81)
		rhs = np.sum(_jn(k, a) * _jn(n + k, b) * np.exp(1j * k * phi))
		lhs = _jn(np.array([n]), R)[0] * np.exp(1j * n * w)
		err = max(err, abs(lhs - rhs))
	return err < 1e-9, f"max err {err:.2e}"


def check_addition_ii(nu):
	rng = _rng("a2")
	err = 0.0
	L = 90
	for _ in range(50):
		a, b = rng.uniform(0.1, 20, 2)
		phi = rng.uniform(0, np.pi)
		R = math.sqrt(a * a + b * b - 2 * a * b * math.cos(phi))
		n = np.arange(L + 1)
		Ja, Jb = bessel_j_half_table(L, a), bessel_j_half_table(L, b)
		rhs = np.pi / 2 * np.sum((2 * n + 1) * Ja * Jb / math.sqrt(a * b) * legendre_table(L, math.cos(phi)))
		err = max(err, abs(sinc_u(R) - rhs))
	return err < 1e-9, f"max err {err:.2e}"


def check_landau_bound(nu):
	x = np.arange(1, 100001) * 0.01
	J0 = bessel_j_table(0, x)[0]
	excess = float(np.max(J0 - nu * x ** (-1 / 3)))
	return excess <= 0, f"max J0 - nu x^(-1/3) = {excess:.3e} (nu = {nu})"


def check_decay(nu):
	worst = 0.0
	for x in (10.0, 100.0):
		n0 = math.ceil(x + 8 * x ** (1 / 3) + 20)
		worst = max(worst, np.abs(bessel_j_table(n0 + 50, x)[n0:]).max())
	return worst < 1e-8, f"max |J_n| beyond cutoff {worst:.2e}"


def check_poisson(nu):
	err = 0.0
	for n in range(11):
		for x in (0.5, 3.0, 11.0, 30.0):
			lhs = math.sqrt(np.pi / (2 * x)) * bessel_j_half_table(n, x)[n]
			err = max(err, abs(lhs - poisson_integral(n, x)))
	return err < 1e-9, f"max err {err:.2e}"


def check_sph_orthonormal(nu):
	L = 12
	theta, phi, w = gauss_sphere(40, 80)
	T, P = np.meshgrid(theta, phi, indexing="ij")
	Y = sph_harm_table(L, P, T).reshape((L + 1) ** 2, -1)
	G = (Y * w.ravel()) @ Y.conj().T
	err = np.abs(G - np.eye(len(G))).max()
	return err < 1e-8, f"max |G - I| {err:.2e}"


def check_sph_addition(nu):
	rng = _rng("s3")
	err = 0.0
	for _ in range(20):
		ta, tx = rng.uniform(0, np.pi, 2)
		pa, px = rng.uniform(0, 2 * np.pi, 2)
		a = np.array([math.sin(ta) * math.cos(pa), math.sin(ta) * math.sin(pa), math.cos(ta)])
		x = np.array([math.sin(tx) * math.cos(px), math.sin(tx) * math.sin(px), math.cos(tx)])
		c = float(np.clip(a @ x, -1, 1))
		Ya, Yx = sph_harm_table(8, pa, ta), sph_harm_table(8, px, tx)
		for l in range(9):
			sl = slice(l * l, (l + 1) ** 2)
			lhs = np.sum(np.conj(Ya[sl]) * Yx[sl])
			err = max(err, abs(lhs - (2 * l + 1) / (4 * np.pi) * legendre_table(l, c)[l]))
	return err < 1e-8, f"max err {err:.2e}"


def _planar(rng, rmax, n):
	r = rmax * np.sqrt(rng.random(n))
	p = rng.uniform(0, 2 * np.pi, n)
	return [Point3.planar(a, b) for a, b in zip(r, p)]


def check_lemma2(nu):
	rng = _rng("l2")
	K = truncation_order(100 * LAMBDA, LAMBDA)
	err = 0.0
	pts = _planar(rng, 50 * LAMBDA, 200)
	V = v_matrix(pts, K, LAMBDA)
	for i in range(100):
		X, Y = pts[2 * i], pts[2 * i + 1]
		d = np.linalg.norm(X.cartesian() - Y.cartesian())
		ref = bessel_j_table(0, 2 * np.pi / LAMBDA * d)[0]
		err = max(err, abs(abs(np.vdot(V[2 * i], V[2 * i + 1])) - abs(ref)))
	return err < 1e-8, f"max err {err:.2e}"


def check_theorem1(nu):
	rng = _rng("t1")
	arr = ArrayGeometry.circular(R0, 256)
	err = 0.0
	for _ in range(5):
		users = _planar(rng, 0.02 * R0, 3)
		sc = Scenario(arr, users, LAMBDA, 0.0)
		q = synthesize_training(sc, np.ones((3, 1)), 0, NEAR_CENTER)[0]
		K = truncation_order(0.02 * R0, LAMBDA)
		Q = circular_mode_decompose(q, K)
		Ys = _planar(rng, 0.02 * R0, 200)
		phi = np.abs(np.conj(v_matrix(Ys, K, LAMBDA)) @ Q.coeffs) * 4 * np.pi * R0 / LAMBDA
		X = sc.user_xyz
		ref = np.abs(sum(bessel_j_table(0, 2 * np.pi / LAMBDA * np.linalg.norm(
			np.array([y.cartesian() for y in Ys]) - x, axis=1))[0] for x in X))
		err = max(err, np.abs(phi - ref).max())
	return err < 1e-3, f"max err {err:.2e}"


def check_theorem5(nu):
	rng = _rng("t5")
	arr = gauss_sphere_array(R0, 60, 120)
	rmax = 0.01 * R0
	L = truncation_order(rmax, LAMBDA)
	err = 0.0
	for _ in range(2):
		users = _planar(rng, rmax, 3)
		sc = Scenario(arr, users, LAMBDA, 0.0)
		q = synthesize_training(sc, np.ones((3, 1)), 0, NEAR_CENTER)[0]
		Q = spherical_mode_decompose(q, L)
		Ys = _planar(rng, rmax, 50)
		phi = np.abs(np.conj(v_matrix(Ys, L, LAMBDA, "spherical")) @ Q.coeffs) * R0 / LAMBDA
		Yx = np.array([y.cartesian() for y in Ys])
		ref = np.abs(sum(sinc_u(2 * np.pi / LAMBDA * np.linalg.norm(Yx - x, axis=1)) for x in sc.user_xyz))
		err = max(err, np.abs(phi - ref).max())
	return err < 1e-3, f"max err {err:.2e}"


def check_error_bound_77(nu):
	users = [Point3.planar(0.0, 0.0), Point3.planar(77 * LAMBDA, 0.0)]
	sc = Scenario(ArrayGeometry.circular(1000.0, 8), users, LAMBDA)
	b = error_bound(sc, 0, nu=nu)
	return abs(b - 0.1) <= 0.002, f"bound at 77 lambda = {b:.5f}"


def check_error_bound_holds(nu):
	rng = _rng("eb")
	worst = -np.inf
	arr = ArrayGeometry.circular(1000.0, 8)
	for _ in range(100):
		d = LAMBDA * rng.uniform(5, 200)
		users = [Point3.planar(0.0, 0.0), Point3.planar(d, rng.uniform(0, 2 * np.pi))]
		sc = Scenario(arr, users, LAMBDA)
		dev = abs(bessel_j_table(0, 2 * np.pi * d / LAMBDA)[0])
		worst = max(worst, dev - error_bound(sc, 0, nu=nu))
	return worst <= 0, f"max deviation minus bound {worst:.3e}"


def check_cross_term(nu):
	rng = _rng("ct")
	err = 0.0
	arr = ArrayGeometry.circular(R0, 8)
	k = 2 * np.pi / LAMBDA
	for _ in range(20):
		users = _planar(rng, 2.0, 2)
		sc = Scenario(arr, users, LAMBDA)
		m = int(rng.integers(-40, 41))
		ref = circle_cross_quadrature(users[0].cartesian(), users[1].cartesian(), m, k, 4000)
		err = max(err, abs(cross_coefficient(0, 1, m, sc) - ref))
	return err < 1e-8, f"max err {err:.2e}"


def _zf_check(kind):
	rng = _rng("zf" + kind)
	worst = -np.inf
	for U in (2, 4):
		pts = []
		while len(pts) < U:
			p = _planar(rng, 10 * LAMBDA, 1)[0]
			if all(np.linalg.norm(p.cartesian() - q.cartesian()) >= 5 * LAMBDA for q in pts):
				pts.append(p)
		arr = ArrayGeometry.circular(R0, 8) if kind == "circular" else ArrayGeometry.spherical(R0, 8)
		sc = Scenario(arr, pts, LAMBDA)
		M = dof_limit(sc)
		pcs = [solve_pm_precoder(build_zf_matrix(sc, u, M)) for u in range(U)]
		P = pm_residuals(sc, pcs, n_theta=100, n_phi=max(160, 2 * M + 8))
		rel = P / np.diag(P)[None, :]
		np.fill_diagonal(rel, 0)
		worst = max(worst, 10 * np.log10(rel.max() + 1e-300))
	return worst <= -60, f"worst interference/signal {worst:.1f} dB"


def check_zf_circular(nu):
	return _zf_check("circular")


def check_zf_spherical(nu):
	return _zf_check("spherical")


CHECKS = [
	("specfun.bessel_quadrature", check_bessel_quadrature),
	("specfun.jacobi_anger", check_jacobi_anger),
	("specfun.addition_theorem_i", check_addition_i),
	("specfun.addition_theorem_ii", check_addition_ii),
	("specfun.landau_bound", check_landau_bound),
	("specfun.high_order_decay", check_decay),
	("specfun.poisson_integral", check_poisson),
	("specfun.sph_orthonormality", check_sph_orthonormal),
	("specfun.sph_addition", check_sph_addition),
	("estimation.v_product_identity", check_lemma2),
	("estimation.circular_profile_oracle", check_theorem1),
	("estimation.spherical_profile_oracle", check_theorem5),
	("estimation.error_bound_77_lambda", check_error_bound_77),
	("estimation.error_bound_holds", check_error_bound_holds),
	("precoding.cross_term_quadrature", check_cross_term),
	("precoding.zf_residual_circular", check_zf_circular),
	("precoding.zf_residual_spherical", check_zf_spherical),
]


def select_checks(pattern=None):
	"""Checks whose name contains the pattern (case-insensitive, glob allowed)."""
	if not pattern:
		return list(CHECKS)
	pat = pattern.lower()
	if not any(c in pat for c in "*?["):
		pat = f"*{pat}*"
	return [(n, f) for n, f in CHECKS if fnmatch.fnmatch(n.lower(), pat)]


def run_checks(pattern=None, nu: float = LANDAU_NU):
	"""Yield (name, passed, detail) for every selected check."""
	for name, fn in select_checks(pattern):
		try:
			ok, detail = fn(nu)
		except Exception as exc:  # a crashing check is a failing check
			ok, detail = False, f"{type(exc).__name__}: {exc}"
		yield name, bool(ok), detail

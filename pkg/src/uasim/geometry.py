"""
Points in spherical coordinates and the distance/angle constructions used by
the channel, estimation and precoding code.

Convention: phi is azimuth measured from +x in the horizontal plane, theta is
the polar angle from +z.  Users and circular-array elements live in the plane
theta = pi/2.
"""

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
	"Point3", "as_xyz", "distance", "approx_distance", "separation_angle",
	"beta_angle", "difference_direction",
]

_TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Point3:
	"""A location (r, phi, theta) in meters and radians."""
	r: float
	phi: float = 0.0
	theta: float = math.pi / 2

	def __post_init__(self):
		if not (self.r >= 0 and math.isfinite(self.r)):
			raise ValueError(f"radius must be finite and non-negative, got {self.r}")
		if not 0 <= self.theta <= math.pi:
			raise ValueError(f"polar angle outside [0, pi]: {self.theta}")
		object.__setattr__(self, "phi", float(self.phi) % _TWO_PI)

	@classmethod
	def planar(cls, r: float, phi: float) -> "Point3":
		return cls(float(r), float(phi), math.pi / 2)

	@classmethod
	def from_cartesian(cls, xyz) -> "Point3":
		x, y, z = (float(c) for c in xyz)
		r = math.sqrt(x * x + y * y + z * z)
		if r == 0:
			return cls(0.0, 0.0, math.pi / 2)
		# atan2 stays accurate near the poles where acos(z / r) does not
		theta = math.pi / 2 if z == 0 else math.atan2(math.hypot(x, y), z)
		return cls(r, math.atan2(y, x), theta)

	@property
	def is_planar(self) -> bool:
		return self.theta == math.pi / 2

	def cartesian(self) -> np.ndarray:
		if self.is_planar:
			return np.array([self.r * math.cos(self.phi), self.r * math.sin(self.phi), 0.0])
		st = math.sin(self.theta)
		return self.r * np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

	def rotated(self, dphi: float) -> "Point3":
		"""Same point rotated about the z axis."""
		return Point3(self.r, self.phi + dphi, self.theta)


def as_xyz(points) -> np.ndarray:
	"""Stack Point3s (or pass through an (n, 3) array) into Cartesian rows."""
	if isinstance(points, Point3):
		return points.cartesian()[None, :]
	if isinstance(points, np.ndarray):
		return np.atleast_2d(points).astype(float)
	return np.array([p.cartesian() for p in points]).reshape(-1, 3)


def distance(a: Point3, b: Point3) -> float:
	"""Euclidean distance."""
	return float(np.linalg.norm(a.cartesian() - b.cartesian()))


def separation_angle(a: Point3, b: Point3) -> float:
	"""Angle between the two position vectors, in [0, pi]."""
	if a.r == 0 or b.r == 0:
		raise ValueError("separation angle undefined for a zero-radius point")
	c = float(np.dot(a.cartesian(), b.cartesian())) / (a.r * b.r)
	return math.acos(max(-1.0, min(1.0, c)))


def approx_distance(user: Point3, antenna: Point3) -> float:
	"""First-order distance r0 - r_u cos(psi) for a user near the array center."""
	if not user.r < antenna.r:
		raise ValueError("near-center distance needs user.r < antenna.r")
	if user.r == 0:
		return antenna.r
	return antenna.r - user.r * math.cos(separation_angle(user, antenna))


def beta_angle(u: Point3, k: Point3) -> float:
	"""
	Phase angle of the planar cross-coupling coefficient between u and k.

	atan2 of (x_u - x_k, y_u - y_k), i.e. the quadrant-resolved angle whose
	tangent is (r_u cos phi_u - r_k cos phi_k) / (r_u sin phi_u - r_k sin phi_k).
	"""
	if not (u.is_planar and k.is_planar):
		raise ValueError("beta_angle needs planar points")
	d = u.cartesian() - k.cartesian()
	if d[0] == 0 and d[1] == 0:
		raise ValueError("beta_angle undefined for coincident points")
	return math.atan2(d[0], d[1]) % _TWO_PI


def difference_direction(u: Point3, k: Point3):
	"""
	Spherical coordinates (r, phi, theta) of the vector X_u - X_k.

	Returns
	-------
	r_uk : float
	phi_uk : float
		Azimuth of the difference vector.
	theta_uk : float
		Polar angle of the difference vector.
	"""
	d = u.cartesian() - k.cartesian()
	if not np.any(d):
		raise ValueError("difference direction undefined for coincident points")
	p = Point3.from_cartesian(d)
	return p.r, p.phi, p.theta

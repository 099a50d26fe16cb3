"""Low-level 3D math: vectors, rotations, homogeneous transforms, box queries.

Conventions: world up is +Z, lengths in meters, transforms are 4x4
homogeneous matrices acting on column vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-6
TWO_PI = 2.0 * math.pi

_AXES = np.eye(3)


def vec3(x, y, z) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero vector")
    return v / n


def is_unit(v, tol: float = UNIT_TOL) -> bool:
    return abs(np.linalg.norm(np.asarray(v, dtype=float)) - 1.0) <= tol


def require_unit(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if not is_unit(v):
        raise ValueError(f"{name} must be unit length, got |v|={np.linalg.norm(v):.6g}")
    return v


def perpendicular(v) -> np.ndarray:
    """Deterministic unit vector perpendicular to v."""
    v = normalize(v)
    # pick the world axis least aligned with v
    axis = _AXES[int(np.argmin(np.abs(v)))]
    return normalize(np.cross(v, axis))


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a unit axis."""
    k = normalize(axis)
    kx = np.array(
        [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]]
    )
    return np.eye(3) + math.sin(angle) * kx + (1.0 - math.cos(angle)) * (kx @ kx)


def rotation_between(a, b) -> np.ndarray:
    """Minimal rotation taking unit vector a to unit vector b.

    Antipodal inputs rotate pi about a deterministic perpendicular axis.
    """
    a = normalize(a)
    b = normalize(b)
    c = float(np.dot(a, b))
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        return rotation_about_axis(perpendicular(a), math.pi)
    return rotation_about_axis(np.cross(a, b), math.acos(max(-1.0, min(1.0, c))))


def wrap_angle(theta: float) -> float:
    """Wrap any angle into [0, 2*pi)."""
    w = math.fmod(theta, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    if w >= TWO_PI:  # guard fmod edge at exactly 2*pi
        w = 0.0
    return w


def project_to_plane(v, normal) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = normalize(normal)
    return v - np.dot(v, n) * n


def plane_frame(normal, front_hint) -> tuple[np.ndarray, np.ndarray]:
    """In-plane right-handed frame (xhat, yhat) with yhat along the projected hint.

    Falls back to a deterministic perpendicular when the hint is parallel to
    the normal, so the frame is always defined.
    """
    n = normalize(normal)
    proj = project_to_plane(front_hint, n)
    if np.linalg.norm(proj) < 1e-9:
        yhat = perpendicular(n)
    else:
        yhat = normalize(proj)
    xhat = np.cross(yhat, n)
    return xhat, yhat


def signed_angle(a, b, axis) -> float:
    """Angle in [0, 2*pi) rotating (projected) a onto b about axis."""
    n = normalize(axis)
    ap = project_to_plane(a, n)
    bp = project_to_plane(b, n)
    if np.linalg.norm(ap) < 1e-9 or np.linalg.norm(bp) < 1e-9:
        return 0.0
    ap = normalize(ap)
    bp = normalize(bp)
    return wrap_angle(math.atan2(float(np.dot(np.cross(ap, bp), n)), float(np.dot(ap, bp))))


@dataclass(frozen=True)
class Transform:
    """4x4 homogeneous transform; upper-left 3x3 is rotation times positive scale."""

    matrix: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(4, 4)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Transform":
        return cls(np.eye(4))

    @classmethod
    def from_list(cls, values) -> "Transform":
        """Build from 16 numbers in column-major order."""
        arr = np.asarray(values, dtype=float)
        if arr.shape != (16,):
            raise ValueError(f"transform needs 16 numbers, got {arr.size}")
        return cls(arr.reshape(4, 4, order="F"))

    def to_list(self) -> list[float]:
        """Serialize as 16 numbers in column-major order."""
        return [float(x) for x in self.matrix.flatten(order="F")]

    @classmethod
    def from_rotation_translation(cls, rotation, translation) -> "Transform":
        m = np.eye(4)
        m[:3, :3] = np.asarray(rotation, dtype=float)
        m[:3, 3] = np.asarray(translation, dtype=float)
        return cls(m)

    @property
    def linear(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:3, 3]

    @property
    def scales(self) -> np.ndarray:
        """Per-axis positive scale factors (column norms of the linear part)."""
        return np.linalg.norm(self.linear, axis=0)

    @property
    def rotation(self) -> np.ndarray:
        """Linear part with scale divided out."""
        return self.linear / self.scales

    def apply_point(self, p) -> np.ndarray:
        return self.linear @ np.asarray(p, dtype=float) + self.translation

    def apply_vector(self, v) -> np.ndarray:
        return self.linear @ np.asarray(v, dtype=float)

    def apply_normal(self, n) -> np.ndarray:
        """Transform a surface normal (inverse-transpose), renormalized."""
        return normalize(np.linalg.inv(self.linear).T @ np.asarray(n, dtype=float))

    def inverse(self) -> "Transform":
        return Transform(np.linalg.inv(self.matrix))

    def compose(self, other: "Transform") -> "Transform":
        return Transform(self.matrix @ other.matrix)

    def validate(self) -> list[str]:
        """Return violations of the transform invariants (empty when valid)."""
        problems = []
        if not np.all(np.isfinite(self.matrix)):
            problems.append("matrix has non-finite entries")
            return problems
        if not np.allclose(self.matrix[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            problems.append("bottom row is not (0,0,0,1)")
        lin = self.linear
        det = float(np.linalg.det(lin))
        if det <= 0.0:
            problems.append(f"linear part has non-positive determinant {det:.6g}")
        scales = np.linalg.norm(lin, axis=0)
        if np.any(scales < 1e-12):
            problems.append("degenerate (zero) scale column")
            return problems
        r = lin / scales
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-5):
            problems.append("linear part is not rotation times diagonal positive scale")
        return problems


def ray_box(origin, direction, half_extents) -> tuple[float, np.ndarray] | None:
    """Intersect a parametric ray with an origin-centered axis-aligned box.

    Returns (t, normal) for the first surface crossing with t > 0, where the
    normal is the face normal oriented against the ray direction. A ray
    starting inside the box reports the exit face (with the inward-facing
    normal). Returns None on a miss. t is in units of |direction|.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    h = np.asarray(half_extents, dtype=float)

    t_lo, t_hi = -math.inf, math.inf
    axis_lo, axis_hi = -1, -1
    for i in range(3):
        if abs(d[i]) < 1e-14:
            if abs(o[i]) > h[i]:
                return None
            continue
        t1 = (-h[i] - o[i]) / d[i]
        t2 = (h[i] - o[i]) / d[i]
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > t_lo:
            t_lo, axis_lo = t1, i
        if t2 < t_hi:
            t_hi, axis_hi = t2, i
    if t_lo > t_hi:
        return None

    eps = 1e-9
    if t_lo > eps:
        t, axis = t_lo, axis_lo
    elif t_hi > eps:
        t, axis = t_hi, axis_hi
    else:
        return None
    if axis < 0:
        return None
    normal = np.zeros(3)
    normal[axis] = -math.copysign(1.0, d[axis])
    return t, normal


def nearest_point_on_box(point, half_extents) -> tuple[np.ndarray, np.ndarray, bool]:
    """Closest point on the surface of an origin-centered box.

    Returns (surface_point, outward_normal, inside). For interior points the
    nearest face is chosen (ties broken by axis order x, y, z then -/+).
    """
    p = np.asarray(point, dtype=float)
    h = np.asarray(half_extents, dtype=float)
    inside = bool(np.all(np.abs(p) <= h + 1e-12))
    if not inside:
        q = np.clip(p, -h, h)
        return q, normalize(p - q), False
    # gaps to each of the 6 faces, fixed order for deterministic ties
    gaps = []
    for i in range(3):
        gaps.append((h[i] + p[i], i, -1.0))  # distance to the -axis face
        gaps.append((h[i] - p[i], i, +1.0))
    gap, axis, sign = min(gaps, key=lambda g: g[0])
    q = p.copy()
    q[axis] = sign * h[axis]
    normal = np.zeros(3)
    normal[axis] = sign
    return q, normal, True

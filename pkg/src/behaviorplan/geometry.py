"""Small 3D helpers: rotation vectors, capsule sampling, segment distances."""
from __future__ import annotations

import numpy as np

_EPS = 1e-12


def rotvec_to_matrix(rv: np.ndarray) -> np.ndarray:
    """Rodrigues formula. rv is a 3-vector (axis * angle, radians)."""
    rv = np.asarray(rv, dtype=float)
    angle = float(np.linalg.norm(rv))
    if angle < 1e-10:
        # second-order series keeps derivatives smooth near zero
        k = skew(rv)
        return np.eye(3) + k + 0.5 * (k @ k)
    axis = rv / angle
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rotvecs_to_matrices(rvs: np.ndarray) -> np.ndarray:
    """Vectorized Rodrigues: (N, 3) rotation vectors -> (N, 3, 3) matrices."""
    rvs = np.asarray(rvs, dtype=float)
    n = rvs.shape[0]
    angles = np.linalg.norm(rvs, axis=1)
    out = np.tile(np.eye(3), (n, 1, 1))
    small = angles < 1e-10
    if np.any(small):
        for i in np.nonzero(small)[0]:
            out[i] = rotvec_to_matrix(rvs[i])
    big = ~small
    if np.any(big):
        ax = rvs[big] / angles[big, None]
        k = np.zeros((ax.shape[0], 3, 3))
        k[:, 0, 1] = -ax[:, 2]
        k[:, 0, 2] = ax[:, 1]
        k[:, 1, 0] = ax[:, 2]
        k[:, 1, 2] = -ax[:, 0]
        k[:, 2, 0] = -ax[:, 1]
        k[:, 2, 1] = ax[:, 0]
        s = np.sin(angles[big])[:, None, None]
        c = (1.0 - np.cos(angles[big]))[:, None, None]
        out[big] = np.eye(3) + s * k + c * np.matmul(k, k)
    return out


def matrix_to_rotvec(r: np.ndarray) -> np.ndarray:
    """Log map of a rotation matrix to its rotation vector."""
    r = np.asarray(r, dtype=float)
    cos_a = (np.trace(r) - 1.0) / 2.0
    cos_a = min(1.0, max(-1.0, cos_a))
    angle = float(np.arccos(cos_a))
    if angle < 1e-10:
        return np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / 2.0
    if angle > np.pi - 1e-6:
        # near pi the antisymmetric part degenerates; recover axis from R + I
        m = (r + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diagonal(m), 0.0))
        # fix signs from off-diagonal terms
        i = int(np.argmax(axis))
        if axis[i] > _EPS:
            axis = m[:, i] / axis[i]
            axis = axis / np.linalg.norm(axis)
        return axis * angle
    axis = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return axis / (2.0 * np.sin(angle)) * angle


def compose_rotvec(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rotation vector of exp(a) @ exp(b)."""
    return matrix_to_rotvec(rotvec_to_matrix(a) @ rotvec_to_matrix(b))


def skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def orthonormal_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to axis; second one is the most vertical."""
    a = np.asarray(axis, dtype=float)
    n = np.linalg.norm(a)
    if n < _EPS:
        return np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    a = a / n
    up = np.array([0.0, 1.0, 0.0])
    u = np.cross(a, up)
    nu = np.linalg.norm(u)
    if nu < 1e-8:
        # axis is vertical: any horizontal pair works
        return np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])
    u = u / nu
    w = np.cross(a, u)
    if w[1] > 0:
        w = -w
    return u, w


def capsule_surface_samples(p0: np.ndarray, p1: np.ndarray, radius: float) -> np.ndarray:
    """8 surface points: both endpoints offset +-radius along the two
    axis-orthogonal frame directions."""
    u, w = orthonormal_frame(np.asarray(p1) - np.asarray(p0))
    dirs = np.stack([u, -u, w, -w])
    pts = np.concatenate([p0 + radius * dirs, p1 + radius * dirs])
    return pts


def segment_segment_distance(
    p0: np.ndarray, p1: np.ndarray, q0: np.ndarray, q1: np.ndarray
) -> float:
    """Minimum distance between segments [p0,p1] and [q0,q1]."""
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a <= _EPS and e <= _EPS:
        return float(np.linalg.norm(r))
    if a <= _EPS:
        s = 0.0
        t = min(1.0, max(0.0, f / e))
    else:
        c = float(d1 @ r)
        if e <= _EPS:
            t = 0.0
            s = min(1.0, max(0.0, -c / a))
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > _EPS else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    closest_p = p0 + s * d1
    closest_q = q0 + t * d2
    return float(np.linalg.norm(closest_p - closest_q))


def hermite(y0: float | np.ndarray, y1: float | np.ndarray, m0, m1, t: float):
    """Cubic Hermite basis at parameter t in [0, 1]."""
    t2 = t * t
    t3 = t2 * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    return h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1

"""Quaternion and rotation helpers.

Quaternions are scalar-first (w, x, y, z) float64 arrays, batched on leading
axes. Euler angles are in degrees; axis orders are strings like "ZXY" meaning
the rotations are composed left to right (intrinsic, matching BVH channel
declaration order).
"""

import numpy as np

_AXIS_INDEX = {"X": 0, "Y": 1, "Z": 2}


def identity(shape=()):
    q = np.zeros(shape + (4,))
    q[..., 0] = 1.0
    return q


def normalize(q):
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    norm = np.where(norm < 1e-12, 1.0, norm)
    return q / norm


def mul(a, b):
    """Hamilton product a * b."""
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def conjugate(q):
    out = q.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def rotate(q, v):
    """Rotate vectors v (..., 3) by quaternions q (..., 4)."""
    qv = q[..., 1:]
    w = q[..., :1]
    t = 2.0 * np.cross(qv, v)
    return v + w * t + np.cross(qv, t)


def from_axis_angle_deg(axis: str, degrees):
    degrees = np.asarray(degrees, dtype=float)
    half = np.deg2rad(degrees) * 0.5
    q = np.zeros(degrees.shape + (4,))
    q[..., 0] = np.cos(half)
    q[..., 1 + _AXIS_INDEX[axis]] = np.sin(half)
    return q


def from_euler_deg(order: str, angles):
    """Compose per-axis rotations in declaration order: q = q0 * q1 * ..."""
    angles = np.asarray(angles, dtype=float)
    q = identity(angles.shape[:-1])
    for i, axis in enumerate(order):
        q = mul(q, from_axis_angle_deg(axis, angles[..., i]))
    return q


def to_matrix(q):
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def from_matrix(m):
    """Rotation matrix (..., 3, 3) to quaternion, w >= 0."""
    m = np.asarray(m, dtype=float)
    w = np.sqrt(np.maximum(0.0, 1.0 + m[..., 0, 0] + m[..., 1, 1] + m[..., 2, 2])) / 2
    x = np.sqrt(np.maximum(0.0, 1.0 + m[..., 0, 0] - m[..., 1, 1] - m[..., 2, 2])) / 2
    y = np.sqrt(np.maximum(0.0, 1.0 - m[..., 0, 0] + m[..., 1, 1] - m[..., 2, 2])) / 2
    z = np.sqrt(np.maximum(0.0, 1.0 - m[..., 0, 0] - m[..., 1, 1] + m[..., 2, 2])) / 2
    x = np.copysign(x, m[..., 2, 1] - m[..., 1, 2])
    y = np.copysign(y, m[..., 0, 2] - m[..., 2, 0])
    z = np.copysign(z, m[..., 1, 0] - m[..., 0, 1])
    return normalize(np.stack([w, x, y, z], axis=-1))


def to_euler_deg(q, order: str):
    """Quaternion to Euler angles in a given composition order.

    Solved generically by factoring the rotation matrix; handles all six
    axis orders without per-order formulas.
    """
    m = to_matrix(q)
    i = _AXIS_INDEX[order[0]]
    j = _AXIS_INDEX[order[1]]
    k = _AXIS_INDEX[order[2]]
    # parity of the axis permutation
    if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        sign = 1.0
    else:
        sign = -1.0
    # R = Ri(a) Rj(b) Rk(c); extract b from m[i, k]
    b = np.arcsin(np.clip(sign * m[..., i, k], -1.0, 1.0))
    cos_b = np.cos(b)
    safe = np.abs(cos_b) > 1e-7
    a = np.where(
        safe,
        np.arctan2(-sign * m[..., j, k], m[..., k, k]),
        np.arctan2(sign * m[..., k, j], m[..., j, j]),
    )
    c = np.where(safe, np.arctan2(-sign * m[..., i, j], m[..., i, i]), 0.0)
    return np.degrees(np.stack([a, b, c], axis=-1))


def slerp(q0, q1, t):
    """Spherical interpolation along the shorter arc; t may be batched."""
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float).copy()
    t = np.asarray(t, dtype=float)[..., None]
    dot = np.sum(q0 * q1, axis=-1, keepdims=True)
    q1 = np.where(dot < 0.0, -q1, q1)
    dot = np.abs(dot)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    sin_theta = np.sin(theta)
    close = sin_theta < 1e-7
    w0 = np.where(close, 1.0 - t, np.sin((1.0 - t) * theta) / np.where(close, 1.0, sin_theta))
    w1 = np.where(close, t, np.sin(t * theta) / np.where(close, 1.0, sin_theta))
    return normalize(w0 * q0 + w1 * q1)


def to_6d(q):
    """First two matrix columns, flattened: (m00, m10, m20, m01, m11, m21)."""
    m = to_matrix(q)
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def from_6d(r6):
    """Gram-Schmidt the two stored columns back to a rotation.

    Degenerate inputs (zero columns) fall back to the identity rotation.
    """
    r6 = np.asarray(r6, dtype=float)
    a1 = r6[..., 0:3]
    a2 = r6[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    bad1 = n1 < 1e-8
    b1 = np.where(bad1, np.array([1.0, 0.0, 0.0]), a1 / np.where(bad1, 1.0, n1))
    a2p = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(a2p, axis=-1, keepdims=True)
    bad2 = n2 < 1e-8
    fallback2 = np.cross(np.broadcast_to([0.0, 0.0, 1.0], b1.shape), b1)
    fn = np.linalg.norm(fallback2, axis=-1, keepdims=True)
    fallback2 = np.where(fn < 1e-8, np.array([0.0, 1.0, 0.0]), fallback2 / np.where(fn < 1e-8, 1.0, fn))
    b2 = np.where(bad2, fallback2, a2p / np.where(bad2, 1.0, n2))
    b3 = np.cross(b1, b2)
    m = np.stack([b1, b2, b3], axis=-1)
    return from_matrix(m)


def yaw_of(q):
    """Heading angle (radians about +Y) of the rotated forward axis +Z."""
    fwd = rotate(q, np.broadcast_to([0.0, 0.0, 1.0], q.shape[:-1] + (3,)))
    flat = np.sqrt(fwd[..., 0] ** 2 + fwd[..., 2] ** 2)
    side = rotate(q, np.broadcast_to([1.0, 0.0, 0.0], q.shape[:-1] + (3,)))
    return np.where(
        flat > 1e-6,
        np.arctan2(fwd[..., 0], fwd[..., 2]),
        np.arctan2(-side[..., 2], side[..., 0]),
    )


def yaw_quat(theta):
    """Quaternion for a rotation of theta radians about +Y."""
    theta = np.asarray(theta, dtype=float)
    q = np.zeros(theta.shape + (4,))
    q[..., 0] = np.cos(theta * 0.5)
    q[..., 2] = np.sin(theta * 0.5)
    return q

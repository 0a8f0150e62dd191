"""Contact frames, Coulomb friction cones, wrench transforms and the grasp map.

Contacts are point contacts with friction. Each carries a right-handed
orthonormal frame whose Z axis is the inward surface normal; the grasp map
stacks per-contact wrench blocks [R; skew(p - origin) R] into a 6 x 3k
matrix mapping contact-frame forces to the net object wrench.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContactFrame:
    origin: np.ndarray
    rotation: np.ndarray  # columns are the contact X, Y, Z axes; Z = inward normal
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        R = np.asarray(self.rotation, dtype=np.float64)
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9) or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must be orthonormal with determinant +1")

    @property
    def inward_normal(self) -> np.ndarray:
        return self.rotation[:, 2]


@dataclass(frozen=True)
class GraspMap:
    """6 x 3k map from stacked contact-frame forces to the object wrench."""

    G: np.ndarray
    contacts: tuple[ContactFrame, ...]
    object_origin: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "rows": 6,
            "cols": self.G.shape[1],
            "data_row_major": [float(v) for v in self.G.reshape(-1)],
            "object_origin": [float(v) for v in self.object_origin],
        }


def skew(p: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -p[2], p[1]],
            [p[2], 0.0, -p[0]],
            [-p[1], p[0], 0.0],
        ]
    )


def build_contact_frame(contact, inward_normal, mu: float = 0.5) -> ContactFrame:
    """Frame at ``contact`` with Z along the inward normal.

    The X axis is the normalized rejection of global +X from the normal,
    falling back to +Y when the normal is nearly parallel to X; Y completes
    the right-handed set.
    """
    n = np.asarray(inward_normal, dtype=np.float64)
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise ValueError("inward normal must be nonzero")
    if abs(norm - 1.0) > 1e-6:
        raise ValueError("inward normal must be unit length")
    n = n / norm
    ref = np.array([1.0, 0.0, 0.0])
    if abs(n @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    x = ref - (ref @ n) * n
    x = x / np.linalg.norm(x)
    y = np.cross(n, x)
    return ContactFrame(
        origin=np.asarray(contact, dtype=np.float64),
        rotation=np.column_stack([x, y, n]),
        mu=mu,
    )


def in_friction_cone(f, mu: float) -> bool:
    """Coulomb cone test: tangential magnitude at most mu times normal, fz >= 0."""
    f = np.asarray(f, dtype=np.float64)
    return bool(f[2] >= 0.0 and math.hypot(f[0], f[1]) <= mu * f[2])


def contact_wrench(frame: ContactFrame, f, object_origin) -> np.ndarray:
    """Object wrench [force; torque] of contact-frame force ``f``."""
    f = np.asarray(f, dtype=np.float64)
    origin = np.asarray(object_origin, dtype=np.float64)
    world_force = frame.rotation @ f
    torque = np.cross(frame.origin - origin, world_force)
    return np.concatenate([world_force, torque])


def build_grasp_map(contacts, object_origin) -> GraspMap:
    """Assemble the 6 x 3k grasp map, one [R; skew(p - o) R] block per contact."""
    contacts = tuple(contacts)
    if not contacts:
        raise ValueError("grasp map needs at least one contact")
    origin = np.asarray(object_origin, dtype=np.float64)
    blocks = []
    for frame in contacts:
        R = frame.rotation
        blocks.append(np.vstack([R, skew(frame.origin - origin) @ R]))
    return GraspMap(G=np.hstack(blocks), contacts=contacts, object_origin=origin)


def force_closure(
    gm: GraspMap,
    mu: float,
    sigma_min_threshold: float = 0.01,
    mode: str = "soft-pinch",
    torque_scale: float = 1.0,
) -> tuple[bool, float]:
    """Classify a two-contact grasp by grasp-map singular values and cone geometry.

    Torque rows are divided by ``torque_scale`` (use the cloud's bounding
    sphere radius) so one threshold works across object sizes. Closure holds
    when the considered singular values all exceed the threshold AND the
    contact-to-contact line lies inside both friction cones. ``mode``
    "soft-pinch" ignores the smallest of the six singular values, which is
    structurally zero for exactly collinear antipodal contacts (rotation
    about the grasp axis); "strict" keeps all six. Returns (closure,
    smallest considered singular value).
    """
    if len(gm.contacts) != 2:
        raise ValueError("force_closure is defined for exactly 2 contacts")
    if mode not in ("soft-pinch", "strict"):
        raise ValueError(f"unknown closure mode {mode!r}")
    if torque_scale <= 0:
        raise ValueError("torque_scale must be positive")
    scaled = gm.G.copy()
    scaled[3:, :] /= torque_scale
    singular = np.linalg.svd(scaled, compute_uv=False)  # descending
    considered = singular[:5] if mode == "soft-pinch" else singular
    sigma_min = float(considered[-1])

    a, b = gm.contacts
    axis = b.origin - a.origin
    width = np.linalg.norm(axis)
    if width < 1e-12:
        return False, sigma_min
    axis = axis / width
    half_angle = math.atan(mu)
    cos_limit = math.cos(half_angle)
    admissible = (axis @ a.inward_normal >= cos_limit - 1e-12) and (
        (-axis) @ b.inward_normal >= cos_limit - 1e-12
    )
    closure = bool(admissible and np.all(considered > sigma_min_threshold))
    return closure, sigma_min

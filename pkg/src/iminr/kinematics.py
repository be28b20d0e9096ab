"""Skeleton representation, 6D rotation decoding, and forward kinematics.

Rotations are stored as the first two columns of a rotation matrix
(6 numbers per joint, unnormalized); decoding runs Gram-Schmidt and a cross
product. A flattened pose is ``[rot6d joint 0, ..., rot6d joint P-1, root]``
with dimension ``6 P + 3``. Joint 0 is the root: its rotation is the global
orientation and its world position is the root translation.

Everything here is a pure function of its inputs; batched variants accept
arbitrary leading axes. Backward functions return exact reverse-mode
gradients and are verified against finite differences in the test suite.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRotation, TopologyMismatch

GRAM_SCHMIDT_EPS = 1e-8

IDENTITY_ROT6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


@dataclass(frozen=True)
class SkeletonTopology:
    """A joint tree: per-joint parent index (None for the root) and bone offsets."""

    parents: tuple
    offsets: np.ndarray  # (P, 3), bone offset in the parent frame

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.float64)
        object.__setattr__(self, "offsets", offsets)
        p = len(self.parents)
        if p < 1:
            raise TopologyMismatch("skeleton needs at least one joint")
        if offsets.shape != (p, 3):
            raise TopologyMismatch(f"offsets shape {offsets.shape} != ({p}, 3)")
        if not np.all(np.isfinite(offsets)):
            raise TopologyMismatch("offsets must be finite")
        roots = [j for j, par in enumerate(self.parents) if par is None]
        if roots != [0]:
            raise TopologyMismatch("exactly joint 0 must be the root")
        for j, par in enumerate(self.parents[1:], start=1):
            if not isinstance(par, int) or not 0 <= par < j:
                raise TopologyMismatch(
                    f"joint {j}: parent must be an earlier joint index, got {par!r}"
                )

    @property
    def joint_count(self) -> int:
        return len(self.parents)

    @property
    def pose_dim(self) -> int:
        return 6 * self.joint_count + 3


# A fixed 24-joint humanoid (pelvis root, spine/neck/head chain, two legs,
# two arms). Offsets are in meters-ish units; they exist so that the
# flattened pose has 147 dimensions and joint-position losses are meaningful.
_HUMANOID = [
    # (name, parent, offset)
    ("pelvis", None, (0.0, 0.0, 0.0)),
    ("l_hip", 0, (0.10, -0.05, 0.0)),
    ("r_hip", 0, (-0.10, -0.05, 0.0)),
    ("spine1", 0, (0.0, 0.12, 0.0)),
    ("l_knee", 1, (0.0, -0.40, 0.0)),
    ("r_knee", 2, (0.0, -0.40, 0.0)),
    ("spine2", 3, (0.0, 0.14, 0.0)),
    ("l_ankle", 4, (0.0, -0.42, 0.0)),
    ("r_ankle", 5, (0.0, -0.42, 0.0)),
    ("spine3", 6, (0.0, 0.14, 0.0)),
    ("l_foot", 7, (0.0, -0.06, 0.12)),
    ("r_foot", 8, (0.0, -0.06, 0.12)),
    ("neck", 9, (0.0, 0.10, 0.0)),
    ("l_collar", 9, (0.07, 0.06, 0.0)),
    ("r_collar", 9, (-0.07, 0.06, 0.0)),
    ("head", 12, (0.0, 0.12, 0.0)),
    ("l_shoulder", 13, (0.10, 0.02, 0.0)),
    ("r_shoulder", 14, (-0.10, 0.02, 0.0)),
    ("l_elbow", 16, (0.28, 0.0, 0.0)),
    ("r_elbow", 17, (-0.28, 0.0, 0.0)),
    ("l_wrist", 18, (0.26, 0.0, 0.0)),
    ("r_wrist", 19, (-0.26, 0.0, 0.0)),
    ("l_hand", 20, (0.08, 0.0, 0.0)),
    ("r_hand", 21, (-0.08, 0.0, 0.0)),
]

JOINT_NAMES = tuple(name for name, _, _ in _HUMANOID)
JOINT_INDEX = {name: j for j, name in enumerate(JOINT_NAMES)}


def humanoid_topology() -> SkeletonTopology:
    """The default 24-joint skeleton (flattened pose dimension 147)."""
    return SkeletonTopology(
        parents=tuple(par for _, par, _ in _HUMANOID),
        offsets=np.array([off for _, _, off in _HUMANOID], dtype=np.float64),
    )


def rot6d_to_matrix(r) -> np.ndarray:
    """Decode 6D rotations ``(..., 6)`` into rotation matrices ``(..., 3, 3)``.

    The six numbers are the first two matrix columns; Gram-Schmidt recovers
    an orthonormal frame: b1 = a1/|a1|, b2 = normalize(a2 - (a2.b1) b1),
    b3 = b1 x b2. Raises DegenerateRotation when a normalization underflows.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.shape[-1] != 6:
        raise DegenerateRotation(f"expected trailing dimension 6, got {r.shape}")
    a1 = r[..., :3]
    a2 = r[..., 3:]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 <= GRAM_SCHMIDT_EPS):
        raise DegenerateRotation("first 6D triple has vanishing norm")
    b1 = a1 / n1
    u2 = a2 - np.sum(a2 * b1, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=-1, keepdims=True)
    if np.any(n2 <= GRAM_SCHMIDT_EPS):
        raise DegenerateRotation("second 6D triple is parallel to the first")
    b2 = u2 / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def rot6d_to_matrix_backward(r, grad_matrix) -> np.ndarray:
    """Gradient of ``rot6d_to_matrix`` w.r.t. its 6D input.

    ``grad_matrix`` has shape ``(..., 3, 3)``; returns ``(..., 6)``.
    """
    r = np.asarray(r, dtype=np.float64)
    g = np.asarray(grad_matrix, dtype=np.float64)
    a1 = r[..., :3]
    a2 = r[..., 3:]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    b1 = a1 / n1
    d = np.sum(a2 * b1, axis=-1, keepdims=True)
    u2 = a2 - d * b1
    n2 = np.linalg.norm(u2, axis=-1, keepdims=True)
    b2 = u2 / n2

    g1 = g[..., :, 0]
    g2 = g[..., :, 1]
    g3 = g[..., :, 2]

    # b3 = b1 x b2: for c = u x v, dL/du = v x g and dL/dv = g x u.
    db1 = g1 + np.cross(b2, g3)
    db2 = g2 + np.cross(g3, b1)

    # b2 = u2 / n2
    du2 = (db2 - b2 * np.sum(b2 * db2, axis=-1, keepdims=True)) / n2
    # u2 = a2 - (a2.b1) b1
    da2 = du2 - b1 * np.sum(b1 * du2, axis=-1, keepdims=True)
    db1 = db1 - a2 * np.sum(du2 * b1, axis=-1, keepdims=True) - d * du2
    # b1 = a1 / n1
    da1 = (db1 - b1 * np.sum(b1 * db1, axis=-1, keepdims=True)) / n1
    return np.concatenate([da1, da2], axis=-1)


@dataclass
class Pose:
    """One skeleton pose: per-joint 6D rotations plus a root translation."""

    joint_rotations: np.ndarray  # (P, 6)
    root_translation: np.ndarray  # (3,)

    def __post_init__(self):
        self.joint_rotations = np.asarray(self.joint_rotations, dtype=np.float64)
        self.root_translation = np.asarray(self.root_translation, dtype=np.float64)
        if self.joint_rotations.ndim != 2 or self.joint_rotations.shape[1] != 6:
            raise TopologyMismatch(
                f"joint_rotations must be (P, 6), got {self.joint_rotations.shape}"
            )
        if self.root_translation.shape != (3,):
            raise TopologyMismatch("root_translation must be a 3-vector")

    @property
    def joint_count(self) -> int:
        return self.joint_rotations.shape[0]

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.joint_rotations.ravel(), self.root_translation])

    @classmethod
    def from_flat(cls, flat) -> "Pose":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.ndim != 1 or (flat.size - 3) % 6 != 0 or flat.size < 9:
            raise TopologyMismatch(f"flat pose has invalid size {flat.shape}")
        p = (flat.size - 3) // 6
        return cls(flat[: 6 * p].reshape(p, 6), flat[6 * p :])

    @classmethod
    def rest(cls, joint_count: int) -> "Pose":
        rots = np.tile(IDENTITY_ROT6D, (joint_count, 1))
        return cls(rots, np.zeros(3))


@dataclass
class MotionSequence:
    """An ordered, variable-length pose sequence with an action label.

    Frames are stored flattened, shape ``(T, 6 P + 3)``.
    """

    id: str
    action: int
    frames: np.ndarray

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise TopologyMismatch("frames must be (T >= 1, pose_dim)")
        if (self.frames.shape[1] - 3) % 6 != 0 or self.frames.shape[1] < 9:
            raise TopologyMismatch(f"bad pose dimension {self.frames.shape[1]}")

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    @property
    def poses(self) -> list:
        return [Pose.from_flat(f) for f in self.frames]

    @classmethod
    def from_poses(cls, id: str, action: int, poses) -> "MotionSequence":
        return cls(id, action, np.stack([p.flatten() for p in poses]))


def _split_frames(frames, topo: SkeletonTopology):
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[-1] != topo.pose_dim:
        raise TopologyMismatch(
            f"pose dimension {frames.shape[-1]} != topology's {topo.pose_dim}"
        )
    p = topo.joint_count
    rots = frames[..., : 6 * p].reshape(frames.shape[:-1] + (p, 6))
    root = frames[..., 6 * p :]
    return rots, root


def fk_positions(frames, topo: SkeletonTopology):
    """Joint world positions for flattened poses ``(..., 6 P + 3)``.

    Returns ``(positions (..., P, 3), cache)``; pass the cache to
    ``fk_backward`` to get gradients w.r.t. the flattened pose.
    """
    rots6, root = _split_frames(frames, topo)
    local = rot6d_to_matrix(rots6)  # (..., P, 3, 3)
    p = topo.joint_count
    glob = [None] * p
    pos = [None] * p
    glob[0] = local[..., 0, :, :]
    pos[0] = root
    for j in range(1, p):
        par = topo.parents[j]
        glob[j] = glob[par] @ local[..., j, :, :]
        pos[j] = pos[par] + glob[par] @ topo.offsets[j]
    positions = np.stack(pos, axis=-2)
    cache = (rots6, local, glob)
    return positions, cache


def fk_backward(grad_positions, cache, topo: SkeletonTopology):
    """Gradient of fk_positions w.r.t. the flattened pose.

    ``grad_positions`` has shape ``(..., P, 3)``; returns ``(..., 6 P + 3)``.
    """
    rots6, local, glob = cache
    g = np.asarray(grad_positions, dtype=np.float64)
    p = topo.joint_count
    d_glob = [np.zeros_like(glob[j]) for j in range(p)]
    d_pos = [np.array(g[..., j, :]) for j in range(p)]
    d_local = np.zeros_like(local)
    for j in range(p - 1, 0, -1):
        par = topo.parents[j]
        # pos[j] = pos[par] + glob[par] @ offset[j]
        d_pos[par] += d_pos[j]
        d_glob[par] += d_pos[j][..., :, None] * topo.offsets[j][None, :]
        # glob[j] = glob[par] @ local[j]
        d_local[..., j, :, :] = np.swapaxes(glob[par], -1, -2) @ d_glob[j]
        d_glob[par] += d_glob[j] @ np.swapaxes(local[..., j, :, :], -1, -2)
    d_local[..., 0, :, :] = d_glob[0]
    d_rots6 = rot6d_to_matrix_backward(rots6, d_local)
    flat_rots = d_rots6.reshape(d_rots6.shape[:-2] + (6 * p,))
    return np.concatenate([flat_rots, d_pos[0]], axis=-1)


def forward_kinematics(pose: Pose, topo: SkeletonTopology) -> np.ndarray:
    """World positions ``(P, 3)`` of every joint of a single pose."""
    if pose.joint_count != topo.joint_count:
        raise TopologyMismatch(
            f"pose has {pose.joint_count} joints, topology {topo.joint_count}"
        )
    positions, _ = fk_positions(pose.flatten(), topo)
    return positions

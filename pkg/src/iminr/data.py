"""Procedural synthetic motion dataset and motion-file persistence.

Each action class is a template of joint-angle waves plus a root-trajectory
profile. Trajectories are parameterized by normalized phase s = t/(T-1), so
a drawn sequence always contains one complete motion cycle no matter its
length: short sequences are fast performances, long ones slow. That makes
classes separable at any length and makes "complete action" generation
testable.

Motion files are JSON Lines: one record per line with fields ``id``,
``action`` and ``frames`` (a T x 147 float list). Numbers use shortest
round-trip decimal encoding, so values survive a write/read cycle exactly.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IoError, SchemaError
from .kinematics import JOINT_INDEX, MotionSequence, SkeletonTopology, humanoid_topology
from .seeding import stream


@dataclass(frozen=True)
class JointWave:
    """One joint's angle trajectory about a fixed axis.

    shape: 'sin'   A sin(2 pi cycles s + phase)      oscillation
           'ramp'  A (1 - cos(pi s)) / 2             one-way ease 0 -> A
           'pulse' A sin(pi s)                        0 -> A -> 0
    """

    joint: str
    axis: tuple
    amplitude: float
    cycles: float = 1.0
    phase: float = 0.0
    shape: str = "sin"

    def angles(self, s: np.ndarray) -> np.ndarray:
        if self.shape == "sin":
            return self.amplitude * np.sin(2.0 * math.pi * self.cycles * s + self.phase)
        if self.shape == "ramp":
            return self.amplitude * 0.5 * (1.0 - np.cos(math.pi * s))
        if self.shape == "pulse":
            return self.amplitude * np.sin(math.pi * s)
        raise ValueError(f"unknown wave shape {self.shape!r}")


@dataclass(frozen=True)
class RootProfile:
    """Root translation over normalized phase."""

    forward: float = 0.0  # total displacement along +z
    lift: float = 0.0  # half-sine vertical excursion
    bob: float = 0.0  # sinusoidal vertical bobbing amplitude
    bob_cycles: float = 0.0
    drop: float = 0.0  # one-way vertical descent
    back: float = 0.0  # one-way displacement along -z

    def positions(self, s: np.ndarray) -> np.ndarray:
        ramp = 0.5 * (1.0 - np.cos(math.pi * s))
        y = (
            self.lift * np.sin(math.pi * s)
            + self.bob * np.sin(2.0 * math.pi * self.bob_cycles * s)
            - self.drop * ramp
        )
        z = self.forward * s - self.back * ramp
        return np.stack([np.zeros_like(s), y, z], axis=-1)


@dataclass(frozen=True)
class ActionTemplate:
    name: str
    waves: tuple
    root: RootProfile


_X = (1.0, 0.0, 0.0)
_Y = (0.0, 1.0, 0.0)
_Z = (0.0, 0.0, 1.0)


def default_templates() -> tuple:
    """Six built-in actions: wave, walk, jump, sit, turn, run."""
    return (
        ActionTemplate(
            "wave",
            waves=(
                JointWave("r_shoulder", _Z, 1.9, shape="ramp"),
                JointWave("r_elbow", _Z, 0.6, cycles=3.0),
                JointWave("r_wrist", _Z, 0.4, cycles=3.0, phase=1.0),
                JointWave("head", _X, 0.1, cycles=1.0),
            ),
            root=RootProfile(),
        ),
        ActionTemplate(
            "walk",
            waves=(
                JointWave("l_hip", _X, 0.7, cycles=2.0),
                JointWave("r_hip", _X, 0.7, cycles=2.0, phase=math.pi),
                JointWave("l_knee", _X, 0.9, cycles=2.0, phase=0.5 * math.pi),
                JointWave("r_knee", _X, 0.9, cycles=2.0, phase=1.5 * math.pi),
                JointWave("l_shoulder", _X, 0.35, cycles=2.0, phase=math.pi),
                JointWave("r_shoulder", _X, 0.35, cycles=2.0),
            ),
            root=RootProfile(forward=1.2, bob=0.03, bob_cycles=4.0),
        ),
        ActionTemplate(
            "jump",
            waves=(
                JointWave("l_knee", _X, 1.1, shape="pulse"),
                JointWave("r_knee", _X, 1.1, shape="pulse"),
                JointWave("l_hip", _X, 0.8, shape="pulse"),
                JointWave("r_hip", _X, 0.8, shape="pulse"),
                JointWave("l_shoulder", _Z, 1.2, shape="ramp"),
                JointWave("r_shoulder", _Z, -1.2, shape="ramp"),
            ),
            root=RootProfile(lift=0.35),
        ),
        ActionTemplate(
            "sit",
            waves=(
                JointWave("l_hip", _X, 1.5, shape="ramp"),
                JointWave("r_hip", _X, 1.5, shape="ramp"),
                JointWave("l_knee", _X, -1.4, shape="ramp"),
                JointWave("r_knee", _X, -1.4, shape="ramp"),
                JointWave("spine1", _X, 0.3, shape="ramp"),
            ),
            root=RootProfile(drop=0.4, back=0.1),
        ),
        ActionTemplate(
            "turn",
            waves=(
                JointWave("pelvis", _Y, math.pi, shape="ramp"),
                JointWave("spine3", _Y, 0.4, shape="ramp"),
                JointWave("l_shoulder", _Z, 0.3, shape="pulse"),
                JointWave("r_shoulder", _Z, -0.3, shape="pulse"),
            ),
            root=RootProfile(),
        ),
        ActionTemplate(
            "run",
            waves=(
                JointWave("l_hip", _X, 1.0, cycles=3.0),
                JointWave("r_hip", _X, 1.0, cycles=3.0, phase=math.pi),
                JointWave("l_knee", _X, 1.2, cycles=3.0, phase=0.5 * math.pi),
                JointWave("r_knee", _X, 1.2, cycles=3.0, phase=1.5 * math.pi),
                JointWave("l_elbow", _X, 1.0, shape="ramp"),
                JointWave("r_elbow", _X, 1.0, shape="ramp"),
                JointWave("l_shoulder", _X, 0.5, cycles=3.0, phase=math.pi),
                JointWave("r_shoulder", _X, 0.5, cycles=3.0),
            ),
            root=RootProfile(forward=2.0, bob=0.05, bob_cycles=6.0),
        ),
    )


@dataclass
class SyntheticDatasetSpec:
    action_count: int = 6
    sequences_per_action: int = 40
    length_range: tuple = (8, 120)
    per_action_length_ranges: tuple = None  # optional, one (lo, hi) per action
    noise: float = 0.01
    amplitude_jitter: float = 0.15
    seed: int = 0
    templates: tuple = None
    split: str = "train"

    def __post_init__(self):
        if self.action_count < 1 or self.sequences_per_action < 1:
            raise ValueError("action_count and sequences_per_action must be >= 1")
        ranges = self.resolved_length_ranges()
        for lo, hi in ranges:
            if lo < 1 or hi < lo:
                raise ValueError(f"invalid length range ({lo}, {hi})")
        if self.noise < 0 or self.amplitude_jitter < 0:
            raise ValueError("noise and amplitude_jitter must be nonnegative")
        templates = self.resolved_templates()
        if self.action_count > len(templates):
            raise ValueError(
                f"{self.action_count} actions but only {len(templates)} templates"
            )

    def resolved_templates(self) -> tuple:
        return tuple(self.templates) if self.templates else default_templates()

    def resolved_length_ranges(self) -> tuple:
        if self.per_action_length_ranges is not None:
            ranges = tuple(tuple(r) for r in self.per_action_length_ranges)
            if len(ranges) != self.action_count:
                raise ValueError("need one length range per action")
            return ranges
        return tuple(tuple(self.length_range) for _ in range(self.action_count))


@dataclass
class MotionDataset:
    sequences: list
    topology: SkeletonTopology
    split: str = "train"

    def __post_init__(self):
        ids = [s.id for s in self.sequences]
        if len(set(ids)) != len(ids):
            raise SchemaError("sequence ids must be unique")

    @property
    def action_count(self) -> int:
        return 1 + max((s.action for s in self.sequences), default=-1)

    def by_action(self) -> dict:
        groups = {}
        for s in self.sequences:
            groups.setdefault(s.action, []).append(s)
        return groups

    def get(self, sequence_id: str) -> MotionSequence:
        for s in self.sequences:
            if s.id == sequence_id:
                return s
        raise KeyError(sequence_id)


def _axis_angle_matrices(axis, angles) -> np.ndarray:
    """Rodrigues formula for one fixed axis and a vector of angles."""
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    k = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    angles = np.asarray(angles, dtype=np.float64)
    sin = np.sin(angles)[:, None, None]
    cos = np.cos(angles)[:, None, None]
    return np.eye(3) + sin * k + (1.0 - cos) * (k @ k)


def _matrices_to_rot6d(mats) -> np.ndarray:
    return np.concatenate([mats[..., :, 0], mats[..., :, 1]], axis=-1)


def generate_synthetic_dataset(spec: SyntheticDatasetSpec) -> MotionDataset:
    """Build the dataset deterministically from the spec (seed included)."""
    topo = humanoid_topology()
    templates = spec.resolved_templates()
    ranges = spec.resolved_length_ranges()
    rng = stream(spec.seed, "synthetic-dataset")
    p = topo.joint_count
    sequences = []
    for action in range(spec.action_count):
        template = templates[action]
        lo, hi = ranges[action]
        # joint -> (axis, list of waves); un-waved joints get x-axis noise only
        per_joint = {}
        for wave in template.waves:
            j = JOINT_INDEX[wave.joint]
            per_joint.setdefault(j, (wave.axis, []))[1].append(wave)
        for idx in range(spec.sequences_per_action):
            t_len = int(rng.integers(lo, hi + 1))
            amp = 1.0 + spec.amplitude_jitter * float(rng.uniform(-1.0, 1.0))
            angle_noise = rng.normal(scale=spec.noise, size=(t_len, p)) if spec.noise else np.zeros((t_len, p))
            root_noise = rng.normal(scale=0.02 * spec.noise, size=(t_len, 3)) if spec.noise else np.zeros((t_len, 3))
            s = np.linspace(0.0, 1.0, t_len) if t_len > 1 else np.zeros(1)
            rot6d = np.empty((t_len, p, 6))
            for j in range(p):
                axis, waves = per_joint.get(j, (_X, []))
                angles = angle_noise[:, j].copy()
                for wave in waves:
                    angles += amp * wave.angles(s)
                rot6d[:, j, :] = _matrices_to_rot6d(_axis_angle_matrices(axis, angles))
            root = template.root.positions(s) + root_noise
            frames = np.concatenate([rot6d.reshape(t_len, 6 * p), root], axis=1)
            sequences.append(MotionSequence(f"a{action}s{idx:03d}", action, frames))
    return MotionDataset(sequences, topo, split=spec.split)


def write_motions(dataset: MotionDataset, path):
    """One JSON record per line; UTF-8; LF line endings."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for seq in dataset.sequences:
                record = {
                    "id": seq.id,
                    "action": int(seq.action),
                    "frames": [[float(v) for v in frame] for frame in seq.frames],
                }
                fh.write(json.dumps(record) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write motions {path}: {exc}") from None


def read_motions(path, split: str = "train") -> MotionDataset:
    """Parse a motion file; an empty file is an empty dataset."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IoError(f"cannot read motions {path}: {exc}") from None
    sequences = []
    pose_dim = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from None
        if not isinstance(record, dict):
            raise SchemaError("record must be an object", line=lineno)
        for fieldname in ("id", "action", "frames"):
            if fieldname not in record:
                raise SchemaError(f"missing field {fieldname!r}", line=lineno)
        if not isinstance(record["id"], str):
            raise SchemaError("field 'id' must be a string", line=lineno)
        if not isinstance(record["action"], int) or isinstance(record["action"], bool) or record["action"] < 0:
            raise SchemaError("field 'action' must be a nonnegative integer", line=lineno)
        try:
            frames = np.asarray(record["frames"], dtype=np.float64)
        except ValueError:
            raise SchemaError("field 'frames' must be a rectangular float list", line=lineno) from None
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise SchemaError("field 'frames' must be a nonempty list of pose rows", line=lineno)
        if not np.all(np.isfinite(frames)):
            raise SchemaError("field 'frames' contains non-finite values", line=lineno)
        if pose_dim is None:
            pose_dim = frames.shape[1]
        elif frames.shape[1] != pose_dim:
            raise SchemaError(
                f"pose dimension {frames.shape[1]} disagrees with earlier {pose_dim}",
                line=lineno,
            )
        sequences.append(MotionSequence(record["id"], record["action"], frames))
    return MotionDataset(sequences, humanoid_topology(), split=split)

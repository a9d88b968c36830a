"""
Imitation dataset clips.

A clip discretizes one planned trajectory at a fixed rate (100 Hz by default)
together with the terrain it was planned on. On disk a clip is a directory:

    manifest.json      counts, horizon, rate, channel shapes, robot hash, seeds
    <channel>.f32      one raw little-endian float32 file per channel, row-major
                       [frame][component]
    terrain.txt        planning terrain in the height field text format
    solution.json      optional, the planner solution for audits
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError

from app.core.heightfield import HeightField, load_heightfield_text, save_heightfield_text
from app.core.planner.solution import CentroidalSolution
from app.core.robot_model import LEG_NAMES, RobotModel, inverse_kinematics, joint_velocities_by_differences, robot_model_hash
from app.core.state import SimState
from app.exceptions import ClipFormatError, ClipRejectedError, KinematicsError
from app.utils.rotations import angular_velocity, euler_to_quaternion, euler_zyx_matrix

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
CONTROL_RATE_HZ = 100.0
STATS_X_LIMIT = 1.75

# Sampled quaternions are unit within QUATERNION_NORM_TOL in float64. Channels are
# stored as float32, whose rounding leaves stored norms within STORED_QUATERNION_NORM_TOL.
QUATERNION_NORM_TOL = 1e-9
STORED_QUATERNION_NORM_TOL = 1e-6

# Channel name -> per-frame shape, in file order.
CHANNELS: dict[str, tuple[int, ...]] = {
    "com_pos": (3,),
    "com_linvel": (3,),
    "com_angvel": (3,),
    "base_quat": (4,),
    "ee_pos": (4, 3),
    "contact_flags": (4,),
    "q": (12,),
    "qdot": (12,),
}

MANIFEST_NAME = "manifest.json"
TERRAIN_NAME = "terrain.txt"
SOLUTION_NAME = "solution.json"


@dataclass(frozen=True)
class TrajectoryClip:
    """
    One discretized trajectory with its terrain.

    Channel arrays are float32. base_quat rows are unit-norm to 1e-9 before the
    cast and to STORED_QUATERNION_NORM_TOL after it.
    """

    terrain: HeightField
    com_pos: np.ndarray
    com_linvel: np.ndarray
    com_angvel: np.ndarray
    base_quat: np.ndarray
    ee_pos: np.ndarray
    contact_flags: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    horizon: float
    rate_hz: float = CONTROL_RATE_HZ
    robot_hash: str = ""
    rng_seed: Optional[int] = None
    terrain_seed: Optional[int] = None
    phase_durations: tuple[tuple[float, ...], ...] = ()

    @property
    def n_frames(self) -> int:
        return int(self.com_pos.shape[0])

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_frames) / self.rate_hz

    @property
    def terrain_image(self) -> np.ndarray:
        return self.terrain.heights

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise KeyError(f"Unknown clip channel '{name}'")
        return getattr(self, name)


def frame_count(horizon: float, rate_hz: float = CONTROL_RATE_HZ) -> int:
    """Frames of a clip: round(T * rate) + 1."""
    return int(round(horizon * rate_hz)) + 1


# ============================================================================
# Sampling
# ============================================================================

def sample_clip(
    solution: CentroidalSolution,
    terrain: HeightField,
    model: RobotModel,
    rate_hz: float = CONTROL_RATE_HZ,
    check_limits: bool = True,
) -> TrajectoryClip:
    """
    Discretize a solution into a clip.

    The base frame coincides with the CoM. Quaternions follow the ZYX Euler
    convention, contact flags the solution's phase schedule (a boundary instant
    belongs to the ending phase), joint angles come from per-frame inverse
    kinematics and joint velocities from finite differences.

    Args:
        solution: Planner solution (normally converged)
        terrain: Terrain the solution was planned on
        model: Robot description
        rate_hz: Sampling rate
        check_limits: Reject frames whose joint solution leaves the joint limits

    Returns:
        TrajectoryClip: Sampled clip

    Raises:
        ClipRejectedError: If inverse kinematics fails on any frame
    """
    n_frames = frame_count(solution.horizon, rate_hz)
    times = np.minimum(np.arange(n_frames) / rate_hz, solution.horizon)

    com_pos = np.array([solution.com_state(t) for t in times])
    com_linvel = np.array([solution.com_state(t, 1) for t in times])
    euler = np.array([solution.base_state(t) for t in times])
    euler_rates = np.array([solution.base_state(t, 1) for t in times])
    com_angvel = np.array([angular_velocity(a, ad) for a, ad in zip(euler, euler_rates)])
    base_quat = euler_to_quaternion(euler)
    ee_pos = np.array([[solution.foot(leg, t) for leg in range(4)] for t in times])
    contact_flags = solution.schedule.contact_flags(times)

    norm_error = np.abs(np.linalg.norm(base_quat, axis=1) - 1.0).max()
    if norm_error > QUATERNION_NORM_TOL:
        raise ClipRejectedError(f"Quaternion norm error {norm_error:.2e} exceeds {QUATERNION_NORM_TOL:.0e}")

    q = np.zeros((n_frames, 12))
    for k, t in enumerate(times):
        rotation = euler_zyx_matrix(euler[k])
        for leg in range(4):
            try:
                q[k, 3 * leg:3 * leg + 3] = inverse_kinematics(
                    model, com_pos[k], rotation, ee_pos[k, leg], leg, check_limits=check_limits
                )
            except KinematicsError as e:
                raise ClipRejectedError(
                    f"Inverse kinematics failed at frame {k} (t={t:.2f}s) for leg {LEG_NAMES[leg]}: {str(e)}"
                ) from e
    qdot = joint_velocities_by_differences(q, 1.0 / rate_hz)

    return TrajectoryClip(
        terrain=terrain,
        com_pos=com_pos.astype(np.float32),
        com_linvel=com_linvel.astype(np.float32),
        com_angvel=com_angvel.astype(np.float32),
        base_quat=base_quat.astype(np.float32),
        ee_pos=ee_pos.astype(np.float32),
        contact_flags=contact_flags.astype(np.float32),
        q=q.astype(np.float32),
        qdot=qdot.astype(np.float32),
        horizon=solution.horizon,
        rate_hz=rate_hz,
        robot_hash=robot_model_hash(model),
        rng_seed=solution.rng_seed,
        terrain_seed=solution.terrain_seed,
        phase_durations=solution.schedule.durations,
    )


# ============================================================================
# Persistence
# ============================================================================

class ClipManifest(BaseModel):
    """
    Contents of manifest.json.

    Channels are little-endian float32 (dtype "<f4"); stored base_quat norms
    deviate from one by at most STORED_QUATERNION_NORM_TOL.
    """
    format_version: int = FORMAT_VERSION
    n_frames: int
    horizon: float
    rate_hz: float
    channels: dict[str, list[int]]
    dtype: str = "<f4"
    robot_hash: str
    rng_seed: Optional[int] = None
    terrain_seed: Optional[int] = None
    terrain_file: str = TERRAIN_NAME
    phase_durations: list[list[float]] = []


def save_clip(clip: TrajectoryClip, directory: Path) -> Path:
    """
    Write a clip directory.

    Args:
        clip: Clip to store
        directory: Target directory (created if missing)

    Returns:
        Path: The manifest path
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in CHANNELS:
        np.ascontiguousarray(clip.channel(name), dtype="<f4").tofile(directory / f"{name}.f32")
    save_heightfield_text(clip.terrain, directory / TERRAIN_NAME)

    manifest = ClipManifest(
        n_frames=clip.n_frames,
        horizon=clip.horizon,
        rate_hz=clip.rate_hz,
        channels={name: list(shape) for name, shape in CHANNELS.items()},
        robot_hash=clip.robot_hash,
        rng_seed=clip.rng_seed,
        terrain_seed=clip.terrain_seed,
        phase_durations=[list(leg) for leg in clip.phase_durations],
    )
    manifest_path = directory / MANIFEST_NAME
    manifest_path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    logger.debug(f"Saved clip with {clip.n_frames} frames to {directory}")
    return manifest_path


def load_clip(directory: Path) -> TrajectoryClip:
    """
    Read a clip directory written by save_clip.

    Raises:
        ClipFormatError: If the manifest is missing or invalid, a channel file is
            missing or its size disagrees with the manifest, or the terrain is unreadable
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    try:
        manifest = ClipManifest.model_validate(json.loads(manifest_path.read_text(encoding="utf-8")))
    except FileNotFoundError as e:
        raise ClipFormatError(f"Clip manifest missing in {directory}", channel="manifest") from e
    except (json.JSONDecodeError, ValidationError) as e:
        raise ClipFormatError(f"Clip manifest {manifest_path} is invalid: {str(e)}", channel="manifest") from e

    channels = {}
    for name, shape in CHANNELS.items():
        if manifest.channels.get(name) != list(shape):
            raise ClipFormatError(f"Manifest channel '{name}' missing or has the wrong shape", channel=name)
        path = directory / f"{name}.f32"
        if not path.exists():
            raise ClipFormatError(f"Channel '{name}' payload {path.name} is missing", channel=name)
        data = np.fromfile(path, dtype=manifest.dtype)
        expected = manifest.n_frames * int(np.prod(shape))
        if data.size != expected:
            raise ClipFormatError(
                f"Channel '{name}' holds {data.size} values, expected {expected} for {manifest.n_frames} frames",
                channel=name,
            )
        channels[name] = data.reshape((manifest.n_frames,) + shape).astype(np.float32)

    try:
        terrain = load_heightfield_text(directory / manifest.terrain_file)
    except (OSError, ValueError) as e:
        raise ClipFormatError(f"Clip terrain unreadable: {str(e)}", channel="terrain") from e

    return TrajectoryClip(
        terrain=terrain,
        horizon=manifest.horizon,
        rate_hz=manifest.rate_hz,
        robot_hash=manifest.robot_hash,
        rng_seed=manifest.rng_seed,
        terrain_seed=manifest.terrain_seed,
        phase_durations=tuple(tuple(leg) for leg in manifest.phase_durations),
        **channels,
    )


def list_clip_dirs(dataset_dir: Path) -> list[Path]:
    """Clip directories of a dataset, sorted by name."""
    return sorted(p for p in Path(dataset_dir).iterdir() if (p / MANIFEST_NAME).exists())


# ============================================================================
# Contacts and Statistics
# ============================================================================

class ContactOnset(NamedTuple):
    leg: int
    frame: int
    x: float
    y: float


def contact_onsets(clip: TrajectoryClip) -> list[ContactOnset]:
    """
    Touch-down events of a clip.

    An onset is a frame where a leg is in contact and either it is the first
    frame or the previous frame was not in contact.
    """
    flags = clip.contact_flags > 0.5
    onsets = []
    for leg in range(flags.shape[1]):
        starts = flags[:, leg] & ~np.concatenate([[False], flags[:-1, leg]])
        for frame in np.flatnonzero(starts):
            x, y = clip.ee_pos[frame, leg, :2]
            onsets.append(ContactOnset(leg=leg, frame=int(frame), x=float(x), y=float(y)))
    return sorted(onsets, key=lambda o: (o.frame, o.leg))


@dataclass(frozen=True)
class DatasetStats:
    """Plot-ready tables: contact onsets and forward-velocity traces."""

    contacts: list[tuple[int, int, int, float, float]]
    velocity: list[tuple[int, int, float, float]]


def dataset_stats(clips: Sequence[TrajectoryClip], x_limit: float = STATS_X_LIMIT) -> DatasetStats:
    """
    Contact distribution and velocity traces of a set of clips.

    Args:
        clips: At least one clip
        x_limit: Onsets with x beyond this are dropped

    Returns:
        DatasetStats: contacts rows (clip, leg, frame, x, y); velocity rows (clip, frame, t, vx)
    """
    if not clips:
        raise ValueError("Dataset statistics need at least one clip")
    contacts = []
    velocity = []
    for index, clip in enumerate(clips):
        for onset in contact_onsets(clip):
            if onset.x <= x_limit:
                contacts.append((index, onset.leg, onset.frame, onset.x, onset.y))
        for frame, (t, vx) in enumerate(zip(clip.times, clip.com_linvel[:, 0])):
            velocity.append((index, frame, float(t), float(vx)))
    return DatasetStats(contacts=contacts, velocity=velocity)


def write_stats_tables(stats: DatasetStats, out_dir: Path) -> tuple[Path, Path]:
    """
    Write contacts.tsv and velocity.tsv.

    Returns:
        tuple[Path, Path]: (contacts path, velocity path)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    contacts_path = out_dir / "contacts.tsv"
    velocity_path = out_dir / "velocity.tsv"

    lines = ["clip\tleg\tframe\tx\ty"]
    lines += [f"{c}\t{LEG_NAMES[leg]}\t{frame}\t{x:.6f}\t{y:.6f}" for c, leg, frame, x, y in stats.contacts]
    contacts_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["clip\tframe\tt\tvx"]
    lines += [f"{c}\t{frame}\t{t:.2f}\t{vx:.6f}" for c, frame, t, vx in stats.velocity]
    velocity_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return contacts_path, velocity_path


# ============================================================================
# Reference View
# ============================================================================

def reference_frame(
    clip: TrajectoryClip,
    index: int,
    bodies: Sequence[str] = ("base",) + LEG_NAMES,
) -> SimState:
    """
    State of a clip frame in the form used by the tracking math.

    Body "base" maps to the CoM position, leg names to their end-effector positions.

    Raises:
        IndexError: If the frame index is out of range
        ValueError: If a body name is unknown
    """
    if not 0 <= index < clip.n_frames:
        raise IndexError(f"Frame {index} outside clip of {clip.n_frames} frames")
    ee = clip.ee_pos[index].astype(float)
    positions = []
    for body in bodies:
        if body == "base":
            positions.append(clip.com_pos[index].astype(float))
        elif body in LEG_NAMES:
            positions.append(ee[LEG_NAMES.index(body)])
        else:
            raise ValueError(f"Unknown body '{body}'")
    return SimState(
        body_positions=np.array(positions),
        joint_positions=clip.q[index].astype(float),
        com_pos=clip.com_pos[index].astype(float),
        com_linvel=clip.com_linvel[index].astype(float),
        com_angvel=clip.com_angvel[index].astype(float),
        base_quat=clip.base_quat[index].astype(float),
        ee_pos=ee,
        joint_velocities=clip.qdot[index].astype(float),
    )

"""
Tracking task math: truncation criterion, imitation rewards, fine-tuning reward
and observation assembly.

Pure functions over externally supplied states; no physics stepping happens here.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from app.core.dataset import TrajectoryClip, reference_frame
from app.core.heightfield import HeightField, sample_heights
from app.core.robot_model import LEG_NAMES
from app.core.state import SimState
from app.schemas import TrackingConfig
from app.utils.rotations import matrix_yaw, quaternion_angle, quaternion_to_matrix, yaw_matrix

logger = logging.getLogger(__name__)

ACTION_SIZE = 12


# ============================================================================
# Truncation and Rewards
# ============================================================================

class TruncationResult(NamedTuple):
    epsilon: float
    r_trunc: float
    terminate: bool


def truncation_error(sim: SimState, ref: SimState, config: Optional[TrackingConfig] = None) -> TruncationResult:
    """
    Tracking error used to end episodes that stray from the reference.

    epsilon is the mean L1 body position error divided by 3 plus the mean L1
    joint error; r_trunc = 1 - epsilon / tau. An episode terminates when
    epsilon > tau.

    Args:
        sim: Simulated state
        ref: Reference state
        config: Holds tau; defaults to TrackingConfig()

    Returns:
        TruncationResult: (epsilon, r_trunc, terminate)

    Raises:
        ValueError: If body or joint counts differ between sim and ref
    """
    config = config or TrackingConfig()
    if sim.body_positions.shape != ref.body_positions.shape:
        raise ValueError(
            f"Body count mismatch: sim has {sim.body_positions.shape[0]}, ref has {ref.body_positions.shape[0]}"
        )
    if sim.joint_positions.shape != ref.joint_positions.shape:
        raise ValueError(
            f"Joint count mismatch: sim has {sim.joint_positions.size}, ref has {ref.joint_positions.size}"
        )
    n_bodies = sim.body_positions.shape[0]
    body_term = np.abs(sim.body_positions - ref.body_positions).sum() / (3.0 * n_bodies)
    joint_term = np.abs(sim.joint_positions - ref.joint_positions).mean()
    epsilon = float(body_term + joint_term)
    return TruncationResult(epsilon=epsilon, r_trunc=1.0 - epsilon / config.tau, terminate=epsilon > config.tau)


@dataclass(frozen=True)
class RewardTerms:
    r_com: float
    r_ee: float
    r_linvel: float
    r_angvel: float
    r_quat: float

    @property
    def total(self) -> float:
        return self.r_com + self.r_ee + self.r_linvel + self.r_angvel + self.r_quat

    def as_array(self) -> np.ndarray:
        return np.array([self.r_com, self.r_ee, self.r_linvel, self.r_angvel, self.r_quat])


def tracking_rewards(sim: SimState, ref: SimState, config: Optional[TrackingConfig] = None) -> RewardTerms:
    """
    Five imitation reward terms, each w * exp(-k * squared error).

    Errors: CoM position, summed end-effector positions, CoM linear velocity,
    angular velocity and the base orientation angle (norm of the relative
    rotation vector of ref^-1 * sim).

    Example:
        >>> tracking_rewards(state, state).total
        1.0
    """
    config = config or TrackingConfig()
    w = config.reward_weights
    k = config.reward_exponents
    errors = (
        float(np.sum((sim.com_pos - ref.com_pos) ** 2)),
        float(np.sum((sim.ee_pos - ref.ee_pos) ** 2)),
        float(np.sum((sim.com_linvel - ref.com_linvel) ** 2)),
        float(np.sum((sim.com_angvel - ref.com_angvel) ** 2)),
        quaternion_angle(sim.base_quat, ref.base_quat) ** 2,
    )
    terms = [wi * np.exp(-ki * e) for wi, ki, e in zip(w, k, errors)]
    return RewardTerms(*(float(t) for t in terms))


def finetune_reward(sim: SimState, config: Optional[TrackingConfig] = None) -> float:
    """
    Straight-walking reward used for fine-tuning.

    r = w * exp(-k * ((v_x - v_target)^2 + p_y^2)) with the CoM weight and
    exponent; p_y is the simulated lateral CoM position.
    """
    config = config or TrackingConfig()
    error = (sim.com_linvel[0] - config.finetune_v_target) ** 2 + sim.com_pos[1] ** 2
    return float(config.reward_weights[0] * np.exp(-config.reward_exponents[0] * error))


def non_foot_contact_termination(
    contacts: Iterable[str],
    end_effector_bodies: Sequence[str] = LEG_NAMES,
) -> bool:
    """True when any body other than an end-effector touches the environment."""
    allowed = set(end_effector_bodies)
    return any(body not in allowed for body in contacts)


# ============================================================================
# Observations
# ============================================================================

@dataclass(frozen=True)
class ImageState:
    """Height image and the base pose at its last refresh."""

    position: np.ndarray
    rotation: np.ndarray
    image: np.ndarray
    frame: int


@dataclass(frozen=True)
class Observation:
    """Feature tuple; channel order and shapes follow observation_layout."""

    height_image: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    ee_pos: np.ndarray
    h: np.ndarray
    c: np.ndarray
    X: np.ndarray
    X_hat: np.ndarray
    previous_action: np.ndarray
    p_y_com: np.ndarray
    command: np.ndarray

    def flatten(self, config: Optional[TrackingConfig] = None) -> np.ndarray:
        layout = observation_layout(config or TrackingConfig(), self.previous_action.size)
        parts = []
        for name, shape in layout:
            value = np.asarray(getattr(self, name), dtype=float)
            if value.shape != shape:
                raise ValueError(f"Observation channel '{name}' has shape {value.shape}, expected {shape}")
            parts.append(value.ravel())
        return np.concatenate(parts)


def observation_layout(config: Optional[TrackingConfig] = None, action_size: int = ACTION_SIZE) -> list[tuple[str, tuple[int, ...]]]:
    """
    Ordered (name, shape) of the observation channels.

    v, omega and ee_pos are expressed in the base frame (ee_pos relative to the
    base); h is the base height above the terrain below it; c and X_hat are the
    base position and orientation relative to the pose at the last image refresh.
    """
    config = config or TrackingConfig()
    pixels = config.image_pixels
    return [
        ("height_image", (pixels, pixels)),
        ("q", (12,)),
        ("qdot", (12,)),
        ("v", (3,)),
        ("omega", (3,)),
        ("ee_pos", (4, 3)),
        ("h", (1,)),
        ("c", (3,)),
        ("X", (3, 3)),
        ("X_hat", (3, 3)),
        ("previous_action", (action_size,)),
        ("p_y_com", (1,)),
        ("command", (2,)),
    ]


def height_image(terrain: HeightField, com_pos: np.ndarray, yaw: float, config: Optional[TrackingConfig] = None) -> np.ndarray:
    """
    Square height image ahead of the robot in its heading frame.

    Row r runs forward, column c to the left; pixel centers cover an
    image_extent square centered image_offset ahead of the CoM. Off-footprint
    pixels take the nearest edge height.
    """
    config = config or TrackingConfig()
    n = config.image_pixels
    extent = config.image_extent
    offsets = (np.arange(n) + 0.5) * (extent / n) - 0.5 * extent
    forward, lateral = np.meshgrid(offsets + config.image_offset, offsets, indexing="ij")
    local = np.stack([forward, lateral], axis=-1)
    rotation = yaw_matrix(yaw)[:2, :2]
    world = np.asarray(com_pos, dtype=float)[:2] + local @ rotation.T
    return sample_heights(terrain, world, clamp=True)


def command_features(
    sim: SimState,
    clip: TrajectoryClip,
    frame: int,
    config: Optional[TrackingConfig] = None,
    evaluation: bool = False,
) -> np.ndarray:
    """(ref x ahead minus sim x, absolute ref y) at the lookahead frame, clamped at clip end."""
    config = config or TrackingConfig()
    if evaluation:
        return np.array(config.eval_command, dtype=float)
    target = min(frame + config.command_lookahead, clip.n_frames - 1)
    ref = clip.com_pos[target].astype(float)
    return np.array([ref[0] - sim.com_pos[0], ref[1]])


def assemble_observation(
    sim: SimState,
    terrain: HeightField,
    clip: TrajectoryClip,
    frame: int,
    image_state: Optional[ImageState] = None,
    config: Optional[TrackingConfig] = None,
    evaluation: bool = False,
) -> tuple[Observation, ImageState]:
    """
    Build the observation of one control step.

    The height image refreshes on every image_refresh_steps-th frame (and when no
    previous image exists); between refreshes the stored image and pose are reused.

    Args:
        sim: Current state
        terrain: Terrain the robot walks on
        clip: Reference clip, for the command
        frame: Control step index within the clip
        image_state: Image and pose returned by the previous call
        config: Observation settings
        evaluation: Replace the command by config.eval_command

    Returns:
        tuple: (Observation, ImageState to pass to the next call)

    Raises:
        IndexError: If frame lies outside the clip
    """
    config = config or TrackingConfig()
    if not 0 <= frame < clip.n_frames:
        raise IndexError(f"Frame {frame} outside clip of {clip.n_frames} frames")

    rotation = quaternion_to_matrix(sim.base_quat)
    position = np.asarray(sim.com_pos, dtype=float)
    if image_state is None or frame % config.image_refresh_steps == 0:
        image = height_image(terrain, position, matrix_yaw(rotation), config)
        image_state = ImageState(position=position.copy(), rotation=rotation.copy(), image=image, frame=frame)

    action = sim.previous_action if sim.previous_action is not None else np.zeros(ACTION_SIZE)
    qdot = sim.joint_velocities if sim.joint_velocities is not None else np.zeros_like(sim.joint_positions)
    ground = float(sample_heights(terrain, position[:2], clamp=True))

    observation = Observation(
        height_image=image_state.image,
        q=sim.joint_positions,
        qdot=qdot,
        v=rotation.T @ sim.com_linvel,
        omega=rotation.T @ sim.com_angvel,
        ee_pos=(sim.ee_pos - position) @ rotation,
        h=np.array([position[2] - ground]),
        c=image_state.rotation.T @ (position - image_state.position),
        X=rotation,
        X_hat=image_state.rotation.T @ rotation,
        previous_action=np.asarray(action, dtype=float),
        p_y_com=np.array([position[1]]),
        command=command_features(sim, clip, frame, config, evaluation),
    )
    return observation, image_state


# ============================================================================
# Trace Evaluation
# ============================================================================

@dataclass(frozen=True)
class TraceEvaluation:
    """Per-frame rewards and truncation of a simulated trace against a reference."""

    rewards: np.ndarray
    total: np.ndarray
    epsilon: np.ndarray
    r_trunc: np.ndarray
    terminate: np.ndarray
    finetune: Optional[np.ndarray] = None

    @property
    def first_termination(self) -> Optional[int]:
        hits = np.flatnonzero(self.terminate)
        return int(hits[0]) if hits.size else None


def evaluate_trace(
    sim_clip: TrajectoryClip,
    ref_clip: TrajectoryClip,
    config: Optional[TrackingConfig] = None,
    finetune: bool = False,
) -> TraceEvaluation:
    """
    Rewards and truncation of every frame of a simulated trace.

    Both traces are read as clips; frames beyond the shorter one are ignored.
    """
    config = config or TrackingConfig()
    n = min(sim_clip.n_frames, ref_clip.n_frames)
    if sim_clip.n_frames != ref_clip.n_frames:
        logger.warning(f"Trace lengths differ ({sim_clip.n_frames} vs {ref_clip.n_frames}); evaluating {n} frames")

    rewards = np.zeros((n, 5))
    epsilon = np.zeros(n)
    r_trunc = np.zeros(n)
    terminate = np.zeros(n, dtype=bool)
    fine = np.zeros(n) if finetune else None
    for k in range(n):
        sim = reference_frame(sim_clip, k, config.bodies)
        ref = reference_frame(ref_clip, k, config.bodies)
        rewards[k] = tracking_rewards(sim, ref, config).as_array()
        result = truncation_error(sim, ref, config)
        epsilon[k], r_trunc[k], terminate[k] = result
        if fine is not None:
            fine[k] = finetune_reward(sim, config)

    return TraceEvaluation(
        rewards=rewards,
        total=rewards.sum(axis=1),
        epsilon=epsilon,
        r_trunc=r_trunc,
        terminate=terminate,
        finetune=fine,
    )

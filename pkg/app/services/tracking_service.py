"""
Tracking service - Business logic for reward and truncation evaluation.
Wraps the tracking math for single state pairs and whole simulated traces.
"""

import logging
import traceback
from pathlib import Path
from typing import Optional

import numpy as np

from app.core.dataset import load_clip
from app.core.state import SimState
from app.core.tracking import TraceEvaluation, evaluate_trace, finetune_reward, tracking_rewards, truncation_error
from app.schemas import TrackingConfig, TrackingRewardRequest, TrackingRewardResponse, TrackingStateInput

logger = logging.getLogger(__name__)


def to_sim_state(state: TrackingStateInput) -> SimState:
    """Convert a request body into a SimState."""
    return SimState(
        body_positions=np.array(state.body_positions),
        joint_positions=np.array(state.joint_positions),
        com_pos=np.array(state.com_pos),
        com_linvel=np.array(state.com_linvel),
        com_angvel=np.array(state.com_angvel),
        base_quat=np.array(state.base_quat),
        ee_pos=np.array(state.ee_pos),
    )


def evaluate_rewards(request: TrackingRewardRequest, config: Optional[TrackingConfig] = None) -> TrackingRewardResponse:
    """
    Reward terms, truncation error and termination for one state pair.

    Args:
        request: Simulated and reference states
        config: Tracking configuration; defaults to TrackingConfig()

    Returns:
        TrackingRewardResponse: Five terms, their total, epsilon, r_trunc and the termination flag

    Raises:
        ValueError: If the states are inconsistent (quaternion norm, body or joint counts)
    """
    config = config or TrackingConfig()
    sim = to_sim_state(request.sim)
    ref = to_sim_state(request.ref)
    terms = tracking_rewards(sim, ref, config)
    truncation = truncation_error(sim, ref, config)
    return TrackingRewardResponse(
        r_com=terms.r_com,
        r_ee=terms.r_ee,
        r_linvel=terms.r_linvel,
        r_angvel=terms.r_angvel,
        r_quat=terms.r_quat,
        total=terms.total,
        epsilon=truncation.epsilon,
        r_trunc=truncation.r_trunc,
        terminate=truncation.terminate,
        finetune_reward=finetune_reward(sim, config) if request.finetune else None,
    )


def evaluate_trace_dirs(
    sim_dir: Path,
    ref_dir: Path,
    config: Optional[TrackingConfig] = None,
    finetune: bool = False,
) -> TraceEvaluation:
    """
    Evaluate a simulated trace stored as a clip against a reference clip.

    Raises:
        ClipFormatError: If either clip cannot be read
    """
    try:
        sim_clip = load_clip(sim_dir)
        ref_clip = load_clip(ref_dir)
        evaluation = evaluate_trace(sim_clip, ref_clip, config or TrackingConfig(), finetune)
        logger.info(
            f"Evaluated trace {sim_dir} against {ref_dir}: mean reward {evaluation.total.mean():.4f}, "
            f"first termination {evaluation.first_termination}"
        )
        return evaluation
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Error evaluating trace {sim_dir}: {str(e)}\n{traceback.format_exc()}")
        raise


def write_trace_table(evaluation: TraceEvaluation, path: Path) -> Path:
    """Write per-frame rewards as a TSV table."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = "frame\tr_com\tr_ee\tr_linvel\tr_angvel\tr_quat\ttotal\tepsilon\tr_trunc\tterminate"
    if evaluation.finetune is not None:
        header += "\tfinetune"
    lines = [header]
    for k in range(len(evaluation.total)):
        values = list(evaluation.rewards[k]) + [evaluation.total[k], evaluation.epsilon[k], evaluation.r_trunc[k]]
        row = f"{k}\t" + "\t".join(f"{v:.6f}" for v in values) + f"\t{int(evaluation.terminate[k])}"
        if evaluation.finetune is not None:
            row += f"\t{evaluation.finetune[k]:.6f}"
        lines.append(row)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path

"""
File: events.py
Path: trajsim/events.py
Purpose: Simulation event logging on the package logger
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17
"""

import logging
import os
from typing import Optional


# Configure simulation logger
sim_logger = logging.getLogger('trajsim')


class SimEvent:
    """Simulation event types for logging."""
    SCENARIO_LOADED = 'scenario_loaded'
    SAMPLE_STARTED = 'sample_started'
    SAMPLE_FINISHED = 'sample_finished'
    MPS_STEP = 'mps_step'
    ROLLOUT_SELECTED = 'rollout_selected'
    SOLVE_NOT_CONVERGED = 'solve_not_converged'
    NUMERICAL_FAILURE = 'numerical_failure'
    SIMULATION_FINISHED = 'simulation_finished'
    FILE_WRITTEN = 'file_written'


# High-frequency events only show up with --verbose
_DEBUG_EVENTS = (SimEvent.MPS_STEP, SimEvent.ROLLOUT_SELECTED, SimEvent.SOLVE_NOT_CONVERGED)


def log_sim_event(event_type: str, sample: Optional[int] = None, step: Optional[int] = None,
                  details: Optional[str] = None, success: bool = True):
    """
    Log a simulation event.

    Args:
        event_type: Type of event (use SimEvent constants)
        sample: Sample index k the event belongs to
        step: Simulation step t the event belongs to
        details: Additional details about the event
        success: Whether the action was successful
    """
    log_parts = [f"[{event_type.upper()}]"]

    if sample is not None:
        log_parts.append(f"Sample: {sample}")
    if step is not None:
        log_parts.append(f"Step: {step}")
    if details:
        log_parts.append(f"Details: {details}")
    if not success:
        log_parts.append("STATUS: FAILED")

    log_message = " | ".join(log_parts)

    # Log based on severity
    if not success or event_type == SimEvent.NUMERICAL_FAILURE:
        sim_logger.warning(log_message)
    elif event_type in _DEBUG_EVENTS:
        sim_logger.debug(log_message)
    else:
        sim_logger.info(log_message)


def configure_logging(verbose: bool = False):
    """
    Attach a console handler to the root logger.

    Args:
        verbose: Force DEBUG level regardless of TRAJSIM_LOG_LEVEL
    """
    level_name = 'DEBUG' if verbose else os.getenv('TRAJSIM_LOG_LEVEL', 'INFO').upper()
    level = getattr(logging, level_name, logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    sim_logger.setLevel(level)

"""Attention-capture state machine and head kinematics.

The robot escalates through head turn (HT), head shake (HS), and a short
spoken prompt (RT), watching for the person's face after each action.
Once the face is seen it either blinks for three seconds to acknowledge
the gaze or holds still for the same span, depending on the method under
test. The machine is advanced by one call per 30 fps tick and reports
what happened as a list of timestamped events.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Literal

from .situation import ViewingSituation

TICK_S = 1.0 / 30.0

PAN_MIN_DEG = -159.0
PAN_MAX_DEG = 159.0
TILT_MIN_DEG = -47.0
TILT_MAX_DEG = 31.0
MAX_HEAD_SPEED_DEG_S = 300.0
TURN_SPEED_DEG_S = 120.0
SHAKE_SPEED_DEG_S = 240.0
SHAKE_HALF_SWING_DEG = 30.0

RESPONSE_WINDOW_S = 4.0
ENSURE_DWELL_S = 3.0
BLINK_PERIOD_S = 1.0
BLINK_COUNT = 3
UTTERANCE_TEXT = "excuse me"
UTTERANCE_DURATION_S = 1.0

FACE_TOLERANCE_DEG = 10.0
FACE_RANGE_M = 3.0

# Deadline comparisons tolerate one float ulp of clock error so a caller
# that accumulates the clock by repeated addition hits the same tick as one
# that multiplies the frame index by the tick length.
TIME_EPS_S = 1e-9


class RobotAction(enum.Enum):
    HT = "HT"
    HS = "HS"
    RT = "RT"
    BLINK = "Blink"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class Method(enum.Enum):
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value

    @property
    def capture_plan(self) -> tuple[RobotAction, ...]:
        return _CAPTURE_PLANS[self]

    @property
    def ensure_blink(self) -> bool:
        return _ENSURE_BLINK[self]


_CAPTURE_PLANS = {
    Method.M1: (RobotAction.HT,),
    Method.M2: (RobotAction.HT, RobotAction.HS),
    Method.M3: (RobotAction.HT, RobotAction.HS, RobotAction.RT),
    Method.M4: (RobotAction.HT, RobotAction.HS, RobotAction.RT),
}
_ENSURE_BLINK = {
    Method.M1: True,
    Method.M2: True,
    Method.M3: False,
    Method.M4: True,
}

METHODS = (Method.M1, Method.M2, Method.M3, Method.M4)


def plan_actions(method: Method) -> tuple[tuple[RobotAction, ...], bool]:
    """Ordered capture actions plus whether success is acknowledged by blinking."""
    return method.capture_plan, method.ensure_blink


class EventKind(enum.Enum):
    HEAD_TURN_START = "HeadTurnStart"
    HEAD_TURN_END = "HeadTurnEnd"
    HEAD_SHAKE_START = "HeadShakeStart"
    HEAD_SHAKE_END = "HeadShakeEnd"
    UTTERANCE = "Utterance"
    BLINK_PULSE = "BlinkPulse"
    FACE_DETECTED = "FaceDetected"
    WINDOW_EXPIRED = "WindowExpired"
    SUCCESS = "Success"
    FAILURE = "Failure"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class RobotEvent:
    time_s: float
    kind: EventKind
    detail: str | None = None


class Phase(enum.Enum):
    OBSERVE = "Observe"
    RECOGNIZE = "Recognize"
    EXECUTE_ACTION = "ExecuteAction"
    AWAIT_RESPONSE = "AwaitResponse"
    ENSURE_ATTENTION = "EnsureAttention"
    HOLD_NO_BLINK = "HoldNoBlink"
    SUCCESS = "Success"
    FAILURE = "Failure"


TERMINAL_PHASES = (Phase.SUCCESS, Phase.FAILURE)


@dataclass(frozen=True)
class ControllerInputs:
    confirmed: ViewingSituation | None = None
    face_detected: bool = False
    human_bearing_deg: float | None = None  # pan target, robot frame


@dataclass(frozen=True)
class ControllerState:
    method: Method
    phase: Phase = Phase.OBSERVE
    pan_deg: float = 0.0
    tilt_deg: float = 0.0
    plan_cursor: int = 0
    action: RobotAction | None = None
    deadline_s: float | None = None  # response window or silent-hold end
    window_start_s: float | None = None  # when the current window opened
    target_pan_deg: float | None = None
    shake_center_deg: float | None = None
    shake_legs_done: int = 0
    utterance_end_s: float | None = None
    blinks_remaining: int = 0
    next_blink_s: float | None = None
    dwell_end_s: float | None = None
    target_clamped: bool = False

    @property
    def terminal(self) -> bool:
        return self.phase in TERMINAL_PHASES

    @property
    def succeeded(self) -> bool:
        return self.phase is Phase.SUCCESS


def make_controller(method: Method) -> ControllerState:
    return ControllerState(method=method)


def clamp_pan(deg: float) -> float:
    return min(max(deg, PAN_MIN_DEG), PAN_MAX_DEG)


def clamp_tilt(deg: float) -> float:
    return min(max(deg, TILT_MIN_DEG), TILT_MAX_DEG)


def _move_joint(current: float, target: float, dt_s: float, speed_deg_s: float) -> float:
    """Rate-limited joint motion. Joint space does not wrap: going from
    -150 to +150 means sweeping through zero, not through the back."""
    speed = min(speed_deg_s, MAX_HEAD_SPEED_DEG_S)
    step = speed * dt_s
    delta = target - current
    if abs(delta) <= step:
        return target
    return current + (step if delta > 0 else -step)


MotionMode = Literal["turn", "shake"]

_MODE_SPEEDS: dict[str, float] = {
    "turn": TURN_SPEED_DEG_S,
    "shake": SHAKE_SPEED_DEG_S,
}


def head_motion_step(
    state: ControllerState,
    target_pan_deg: float,
    dt_s: float,
    mode: MotionMode,
) -> ControllerState:
    """Advance the pan joint one step toward a target.

    Targets beyond the mechanical range are clamped and the state is
    flagged so the trace can record the request.
    """
    if dt_s <= 0:
        raise ValueError(f"dt_s must be positive, got {dt_s}")
    if mode not in _MODE_SPEEDS:
        raise ValueError(f"unknown motion mode {mode!r}")
    clamped = clamp_pan(target_pan_deg)
    was_clamped = clamped != target_pan_deg
    pan = _move_joint(state.pan_deg, clamped, dt_s, _MODE_SPEEDS[mode])
    return replace(
        state,
        pan_deg=clamp_pan(pan),
        target_clamped=state.target_clamped or was_clamped,
    )


def _begin_action(
    state: ControllerState,
    inputs: ControllerInputs,
    clock_s: float,
    events: list[RobotEvent],
) -> ControllerState:
    action = state.method.capture_plan[state.plan_cursor]
    if action is RobotAction.HT:
        if inputs.human_bearing_deg is None:
            raise ValueError("head turn needs a bearing toward the person")
        target = clamp_pan(inputs.human_bearing_deg)
        events.append(RobotEvent(clock_s, EventKind.HEAD_TURN_START))
        return replace(
            state,
            phase=Phase.EXECUTE_ACTION,
            action=action,
            target_pan_deg=target,
            target_clamped=state.target_clamped
            or target != inputs.human_bearing_deg,
        )
    if action is RobotAction.HS:
        center = state.pan_deg
        events.append(RobotEvent(clock_s, EventKind.HEAD_SHAKE_START))
        return replace(
            state,
            phase=Phase.EXECUTE_ACTION,
            action=action,
            shake_center_deg=center,
            shake_legs_done=0,
            target_pan_deg=clamp_pan(center + SHAKE_HALF_SWING_DEG),
        )
    if action is RobotAction.RT:
        events.append(RobotEvent(clock_s, EventKind.UTTERANCE, UTTERANCE_TEXT))
        return replace(
            state,
            phase=Phase.EXECUTE_ACTION,
            action=action,
            utterance_end_s=clock_s + UTTERANCE_DURATION_S,
        )
    raise ValueError(f"{action} is not a capture action")


def _open_window(state: ControllerState, start_s: float) -> ControllerState:
    return replace(
        state,
        phase=Phase.AWAIT_RESPONSE,
        deadline_s=start_s + RESPONSE_WINDOW_S,
        window_start_s=start_s,
        target_pan_deg=None,
    )


def _execute_step(
    state: ControllerState,
    clock_s: float,
    dt_s: float,
    events: list[RobotEvent],
) -> ControllerState:
    action = state.action
    if action is RobotAction.HT:
        assert state.target_pan_deg is not None
        pan = _move_joint(state.pan_deg, state.target_pan_deg, dt_s, TURN_SPEED_DEG_S)
        state = replace(state, pan_deg=pan)
        if pan == state.target_pan_deg:
            events.append(RobotEvent(clock_s, EventKind.HEAD_TURN_END))
            return _open_window(state, clock_s)
        return state
    if action is RobotAction.HS:
        assert state.target_pan_deg is not None and state.shake_center_deg is not None
        pan = _move_joint(state.pan_deg, state.target_pan_deg, dt_s, SHAKE_SPEED_DEG_S)
        state = replace(state, pan_deg=pan)
        if pan != state.target_pan_deg:
            return state
        legs = state.shake_legs_done + 1
        if legs == 1:
            target = clamp_pan(state.shake_center_deg - SHAKE_HALF_SWING_DEG)
        elif legs == 2:
            target = state.shake_center_deg
        else:
            events.append(RobotEvent(clock_s, EventKind.HEAD_SHAKE_END))
            return _open_window(state, clock_s)
        return replace(state, shake_legs_done=legs, target_pan_deg=target)
    if action is RobotAction.RT:
        assert state.utterance_end_s is not None
        if clock_s >= state.utterance_end_s - TIME_EPS_S:
            # Window timed from the end of speech, not from this tick.
            return _open_window(state, state.utterance_end_s)
        return state
    raise AssertionError(f"executing non-capture action {action}")


def _await_step(
    state: ControllerState,
    inputs: ControllerInputs,
    clock_s: float,
    events: list[RobotEvent],
) -> ControllerState:
    if inputs.face_detected:
        events.append(RobotEvent(clock_s, EventKind.FACE_DETECTED))
        if state.method.ensure_blink:
            # First pulse lands with the detection, the rest at 1/s.
            events.append(RobotEvent(clock_s, EventKind.BLINK_PULSE))
            return replace(
                state,
                phase=Phase.ENSURE_ATTENTION,
                blinks_remaining=BLINK_COUNT - 1,
                next_blink_s=clock_s + BLINK_PERIOD_S,
                dwell_end_s=clock_s + ENSURE_DWELL_S,
                deadline_s=None,
            )
        return replace(
            state,
            phase=Phase.HOLD_NO_BLINK,
            deadline_s=clock_s + ENSURE_DWELL_S,
        )
    assert state.deadline_s is not None
    if clock_s >= state.deadline_s - TIME_EPS_S:
        events.append(RobotEvent(clock_s, EventKind.WINDOW_EXPIRED))
        cursor = state.plan_cursor + 1
        state = replace(state, plan_cursor=cursor, deadline_s=None, window_start_s=None)
        if cursor < len(state.method.capture_plan):
            return _begin_action(state, inputs, clock_s, events)
        events.append(RobotEvent(clock_s, EventKind.FAILURE))
        return replace(state, phase=Phase.FAILURE, action=None)
    return state


def _ensure_step(
    state: ControllerState,
    clock_s: float,
    events: list[RobotEvent],
) -> ControllerState:
    if state.blinks_remaining > 0:
        assert state.next_blink_s is not None
        if clock_s >= state.next_blink_s - TIME_EPS_S:
            events.append(RobotEvent(clock_s, EventKind.BLINK_PULSE))
            state = replace(
                state,
                blinks_remaining=state.blinks_remaining - 1,
                next_blink_s=state.next_blink_s + BLINK_PERIOD_S,
            )
    assert state.dwell_end_s is not None
    if state.blinks_remaining == 0 and clock_s >= state.dwell_end_s - TIME_EPS_S:
        events.append(RobotEvent(clock_s, EventKind.SUCCESS))
        return replace(state, phase=Phase.SUCCESS)
    return state


def controller_step(
    state: ControllerState,
    inputs: ControllerInputs,
    clock_s: float,
    dt_s: float = TICK_S,
) -> tuple[ControllerState, list[RobotEvent]]:
    """Advance the machine one tick. Returns the new state and the events
    emitted during this tick, in order, each stamped with the tick clock."""
    if dt_s <= 0:
        raise ValueError(f"dt_s must be positive, got {dt_s}")
    events: list[RobotEvent] = []
    if state.terminal:
        return state, events
    if state.phase is Phase.OBSERVE:
        if inputs.confirmed is not None:
            state = replace(state, phase=Phase.RECOGNIZE)
        return state, events
    if state.phase is Phase.RECOGNIZE:
        return _begin_action(state, inputs, clock_s, events), events
    if state.phase is Phase.EXECUTE_ACTION:
        return _execute_step(state, clock_s, dt_s, events), events
    if state.phase is Phase.AWAIT_RESPONSE:
        return _await_step(state, inputs, clock_s, events), events
    if state.phase is Phase.ENSURE_ATTENTION:
        return _ensure_step(state, clock_s, events), events
    if state.phase is Phase.HOLD_NO_BLINK:
        assert state.deadline_s is not None
        if clock_s >= state.deadline_s - TIME_EPS_S:
            events.append(RobotEvent(clock_s, EventKind.SUCCESS))
            return replace(state, phase=Phase.SUCCESS), events
        return state, events
    raise AssertionError(f"unhandled phase {state.phase}")


def face_detected(
    gaze_bearing_deg: float,
    distance_m: float,
    tolerance_deg: float = FACE_TOLERANCE_DEG,
) -> bool:
    """Geometric face-visibility test: the gaze points at the robot within
    tolerance and the person is inside camera range."""
    return abs(gaze_bearing_deg) <= tolerance_deg and distance_m <= FACE_RANGE_M

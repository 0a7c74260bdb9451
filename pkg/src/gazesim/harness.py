"""Trial and experiment drivers.

A trial seats the visitor in front of one painting, lets the recognizer
settle on the intended viewing situation, then runs the robot's
escalation protocol against the stochastic visitor until it succeeds or
exhausts its plan. Three fidelity modes share one random-stream layout,
so a trial's decisions are identical whichever engine runs it:

- "full":  sensors simulated end to end (laser scans, particle filter,
           noisy head camera), 30 fps tick loop.
- "ideal": tick loop with ground-truth body orientation and the noisy
           head camera; no laser or filter.
- "event": closed-form timeline of the same protocol; no ticks at all.
           Decisions and latencies are drawn from the same per-decision
           streams, so records match the tick engines.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Literal, NamedTuple

from .body_tracker import BodyTracker, FilterConfig, body_orientation_for_srm
from .config import RunConfig
from .controller import (
    ControllerInputs,
    EventKind,
    FACE_TOLERANCE_DEG,
    Method,
    METHODS,
    Phase,
    RESPONSE_WINDOW_S,
    RobotAction,
    RobotEvent,
    SHAKE_HALF_SWING_DEG,
    SHAKE_SPEED_DEG_S,
    TICK_S,
    TURN_SPEED_DEG_S,
    UTTERANCE_DURATION_S,
    UTTERANCE_TEXT,
    clamp_pan,
    controller_step,
    face_detected,
    make_controller,
)
from .geometry import Pose2, bearing_to, normalize_angle, relative_bearing
from .head_tracker import observe_head
from .human import (
    BODY_TURN_SPEED_DEG_S,
    HEAD_TURN_SPEED_DEG_S,
    ROBOT_TARGET,
    ResponseTable,
    derive_response_table,
    gaze_bearing_to,
    gaze_duration,
    human_step,
    make_human,
    respond,
    schedule_response,
)
from .laser import EllipseBody, synthesize_scan
from .scenario import Scenario, settled_instant
from .seeding import (
    STREAM_FILTER,
    STREAM_GAZE,
    STREAM_INIT,
    STREAM_LASER,
    STREAM_RESPOND,
    SeedLike,
    derive_seed,
)
from .situation import (
    CENTRAL_HALF_WIDTH_DEG,
    NEAR_PERIPHERAL_LIMIT_DEG,
    OUT_OF_VIEW_BODY_DEG,
    PERSISTENCE_FRAMES,
    SITUATIONS,
    SrmState,
    ViewingSituation,
    classify_instant,
    srm_update,
)
from .trace import TraceWriter

ABORT_BUDGET_S = 10.0
TRIAL_TIME_CAP_S = 60.0

TrialMode = Literal["full", "ideal", "event"]
TRIAL_MODES = ("full", "ideal", "event")

RESULTS_CSV_HEADER = (
    "trial_id,method,situation,responded,responding_action,"
    "response_latency_s,gaze_time_s,seed"
)


class TrialAbortError(RuntimeError):
    """The recognizer never confirmed the intended situation within the
    startup budget: the scenario is miscalibrated, not the protocol."""


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    method: Method
    situation: ViewingSituation
    responded: bool
    responding_action: RobotAction | None
    response_latency_s: float | None
    gaze_time_s: float | None
    seed: int

    def __post_init__(self) -> None:
        present = (
            self.responding_action is not None,
            self.response_latency_s is not None,
            self.gaze_time_s is not None,
        )
        if self.responded and not all(present):
            raise ValueError("responded trial must carry action, latency and gaze")
        if not self.responded and any(present):
            raise ValueError("failed trial must not carry action, latency or gaze")


class TickSample(NamedTuple):
    t_s: float
    pan_deg: float
    tilt_deg: float


@dataclass(frozen=True)
class TrialDetail:
    record: TrialRecord
    events: tuple[RobotEvent, ...]
    ticks: tuple[TickSample, ...] | None


_default_table: ResponseTable | None = None


def _table() -> ResponseTable:
    global _default_table
    if _default_table is None:
        _default_table = derive_response_table()
    return _default_table


def run_trial(
    scenario: Scenario,
    method: Method,
    situation: ViewingSituation,
    seed: SeedLike,
    mode: TrialMode = "full",
    trial_id: int = 0,
    trace: TraceWriter | None = None,
) -> TrialRecord:
    return run_trial_detailed(
        scenario, method, situation, seed, mode=mode, trial_id=trial_id, trace=trace
    ).record


def run_trial_detailed(
    scenario: Scenario,
    method: Method,
    situation: ViewingSituation,
    seed: SeedLike,
    mode: TrialMode = "full",
    trial_id: int = 0,
    trace: TraceWriter | None = None,
    collect_ticks: bool = False,
) -> TrialDetail:
    if mode not in TRIAL_MODES:
        raise ValueError(f"unknown trial mode {mode!r}")
    if mode == "event":
        return _run_event(scenario, method, situation, seed, trial_id, trace)
    return _run_ticks(
        scenario, method, situation, seed, mode, trial_id, trace, collect_ticks
    )


def _plan_response(
    window_start_s: float,
    latency_s: float,
    bearing_to_robot_deg: float,
) -> tuple[float, float]:
    """When the visitor starts turning and when the face gate opens.

    The latency draw is the time from window start until the eyes land on
    the robot, so the turn is scheduled backward from that arrival. The
    gate opens once the remaining gaze offset is inside the face
    tolerance, a moment before arrival.
    """
    b0 = abs(bearing_to_robot_deg)
    turn_s = b0 / HEAD_TURN_SPEED_DEG_S
    arrival_s = window_start_s + max(latency_s, turn_s)
    fire_s = arrival_s - turn_s
    detect_s = arrival_s - min(b0, FACE_TOLERANCE_DEG) / HEAD_TURN_SPEED_DEG_S
    return fire_s, detect_s


def _run_ticks(
    scenario: Scenario,
    method: Method,
    situation: ViewingSituation,
    seed: SeedLike,
    mode: TrialMode,
    trial_id: int,
    trace: TraceWriter | None,
    collect_ticks: bool,
) -> TrialDetail:
    painting = scenario.painting_for(situation)
    human = make_human(scenario, painting.painting_id)
    cstate = make_controller(method)
    srm = SrmState()
    robot = scenario.robot_pose
    seat = scenario.human_seat
    seat_to_robot_deg = bearing_to(seat.position, robot.position)
    robot_distance_m = math.hypot(seat.x - robot.x, seat.y - robot.y)

    tracker: BodyTracker | None = None
    if mode == "full":
        filter_config = FilterConfig(
            body_semi_major_m=scenario.body_semi_major_m,
            body_semi_minor_m=scenario.body_semi_minor_m,
        )
        tracker = BodyTracker(
            filter_config, guess=seat, seed=derive_seed(seed, STREAM_INIT)
        )

    events_all: list[RobotEvent] = []
    ticks: list[TickSample] = []
    drawn_gaze_s: float | None = None
    measured_latency_s: float | None = None
    responding_action: RobotAction | None = None
    prev_attending = human.attending
    prev_confirmed = srm.confirmed

    frame = 0
    while True:
        t = frame / 30.0
        if t > TRIAL_TIME_CAP_S:
            raise RuntimeError(
                f"trial exceeded {TRIAL_TIME_CAP_S} s without a terminal event"
            )
        human_step(human, scenario, t, TICK_S)
        if trace and human.attending != prev_attending:
            trace.emit(t, "human", "attending", {"target": human.attending})
            prev_attending = human.attending

        if tracker is not None:
            body_pose = Pose2(seat.x, seat.y, human.body_theta_deg)
            scan = synthesize_scan(
                scenario.sensor_pose,
                EllipseBody(
                    body_pose,
                    semi_major_m=scenario.body_semi_major_m,
                    semi_minor_m=scenario.body_semi_minor_m,
                ),
                seed=derive_seed(seed, STREAM_LASER, frame),
                timestamp_s=t,
            )
            estimate = tracker.step(scan, seed=derive_seed(seed, STREAM_FILTER, frame))
            theta_rel = body_orientation_for_srm(estimate, robot)
            if trace:
                trace.emit(
                    t,
                    "btm",
                    "estimate",
                    {
                        "frame": frame,
                        "x": estimate.x,
                        "y": estimate.y,
                        "theta_deg": estimate.theta_deg,
                        "distance_m": estimate.distance_m,
                        "n_effective": estimate.n_effective,
                        "converged": estimate.converged,
                    },
                )
        else:
            estimate = None
            theta_rel = normalize_angle(human.body_theta_deg - seat_to_robot_deg)

        observation = observe_head(
            human.head, scenario.camera_pose, seed=seed, frame=frame
        )
        if trace:
            trace.emit(
                t,
                "hdtm",
                "observation",
                {
                    "frame": frame,
                    "valid": observation.valid,
                    "yaw_deg": observation.yaw_deg,
                    "pitch_deg": observation.pitch_deg,
                },
            )
        instant = classify_instant(observation, theta_rel)
        srm = srm_update(srm, instant)
        if trace and srm.confirmed is not prev_confirmed:
            trace.emit(t, "srm", "confirmed", {"situation": srm.confirmed})
            prev_confirmed = srm.confirmed

        confirmed_input = situation if srm.confirmed is situation else None
        if (
            cstate.phase is Phase.OBSERVE
            and confirmed_input is None
            and t >= ABORT_BUDGET_S
        ):
            raise TrialAbortError(
                f"recognizer did not confirm {situation.value} within "
                f"{ABORT_BUDGET_S:.0f} s (trial {trial_id}, {method.value})"
            )

        face = human.attending == ROBOT_TARGET and face_detected(
            gaze_bearing_to(human, robot.position), robot_distance_m
        )
        if estimate is not None and estimate.converged:
            bearing_input = relative_bearing(robot, (estimate.x, estimate.y))
        else:
            bearing_input = relative_bearing(robot, seat.position)

        prev_phase = cstate.phase
        cstate, events = controller_step(
            cstate,
            ControllerInputs(
                confirmed=confirmed_input,
                face_detected=face,
                human_bearing_deg=bearing_input,
            ),
            t,
            TICK_S,
        )

        if cstate.phase is Phase.AWAIT_RESPONSE and prev_phase is not Phase.AWAIT_RESPONSE:
            action = cstate.action
            assert action is not None and cstate.window_start_s is not None
            ok, latency = respond(
                action,
                situation,
                _table(),
                derive_seed(seed, STREAM_RESPOND, cstate.plan_cursor),
            )
            if ok:
                assert latency is not None
                drawn_gaze_s = gaze_duration(
                    method.ensure_blink, derive_seed(seed, STREAM_GAZE)
                )
                fire_s, _ = _plan_response(
                    cstate.window_start_s,
                    latency,
                    gaze_bearing_to(human, robot.position),
                )
                schedule_response(human, fire_s, drawn_gaze_s)

        for event in events:
            if event.kind is EventKind.FACE_DETECTED:
                assert cstate.window_start_s is not None
                measured_latency_s = t - cstate.window_start_s
                responding_action = cstate.action
            if trace:
                trace.emit(t, "ctrl", event.kind.value, event.detail)
        events_all.extend(events)
        if collect_ticks:
            ticks.append(TickSample(t, cstate.pan_deg, cstate.tilt_deg))
        if cstate.terminal:
            break
        frame += 1

    succeeded = cstate.succeeded
    record = TrialRecord(
        trial_id=trial_id,
        method=method,
        situation=situation,
        responded=succeeded,
        responding_action=responding_action if succeeded else None,
        response_latency_s=measured_latency_s if succeeded else None,
        gaze_time_s=drawn_gaze_s if succeeded else None,
        seed=_seed_scalar(seed),
    )
    return TrialDetail(
        record=record,
        events=tuple(events_all),
        ticks=tuple(ticks) if collect_ticks else None,
    )


def _analytic_confirm_s(situation: ViewingSituation) -> float:
    """When the recognizer settles, measured from trial start: the visitor
    turns from facing the robot toward the painting, crossing the band
    threshold, then the persistence counter must fill."""
    if situation is ViewingSituation.CFOV:
        stable_s = 0.0
    elif situation is ViewingSituation.NPFOV:
        stable_s = CENTRAL_HALF_WIDTH_DEG / HEAD_TURN_SPEED_DEG_S
    elif situation is ViewingSituation.FPFOV:
        stable_s = NEAR_PERIPHERAL_LIMIT_DEG / HEAD_TURN_SPEED_DEG_S
    else:
        stable_s = max(
            OUT_OF_VIEW_BODY_DEG / HEAD_TURN_SPEED_DEG_S,
            OUT_OF_VIEW_BODY_DEG / BODY_TURN_SPEED_DEG_S,
        )
    return stable_s + PERSISTENCE_FRAMES / 30.0


def _run_event(
    scenario: Scenario,
    method: Method,
    situation: ViewingSituation,
    seed: SeedLike,
    trial_id: int,
    trace: TraceWriter | None,
) -> TrialDetail:
    painting = scenario.painting_for(situation)
    settled = settled_instant(scenario, painting)
    if settled is not situation:
        raise TrialAbortError(
            f"scenario cannot reach {situation.value}: settled viewer on "
            f"{painting.painting_id} classifies as "
            f"{settled.value if settled else 'unknown'} (trial {trial_id})"
        )
    robot = scenario.robot_pose
    seat = scenario.human_seat
    seat_to_robot_deg = bearing_to(seat.position, robot.position)
    gaze_offset_deg = normalize_angle(
        scenario.painting_world_yaw(painting) - seat_to_robot_deg
    )
    target_pan_deg = clamp_pan(relative_bearing(robot, seat.position))

    events: list[RobotEvent] = []
    t = _analytic_confirm_s(situation)
    pan = 0.0
    responded = False
    responding_action: RobotAction | None = None
    latency_s: float | None = None
    gaze_s: float | None = None

    for cursor, action in enumerate(method.capture_plan):
        if action is RobotAction.HT:
            events.append(RobotEvent(t, EventKind.HEAD_TURN_START))
            t += abs(target_pan_deg - pan) / TURN_SPEED_DEG_S
            pan = target_pan_deg
            events.append(RobotEvent(t, EventKind.HEAD_TURN_END))
            window_start = t
        elif action is RobotAction.HS:
            events.append(RobotEvent(t, EventKind.HEAD_SHAKE_START))
            t += 4.0 * SHAKE_HALF_SWING_DEG / SHAKE_SPEED_DEG_S
            events.append(RobotEvent(t, EventKind.HEAD_SHAKE_END))
            window_start = t
        else:
            events.append(RobotEvent(t, EventKind.UTTERANCE, UTTERANCE_TEXT))
            t += UTTERANCE_DURATION_S
            window_start = t
        ok, latency = respond(
            action, situation, _table(), derive_seed(seed, STREAM_RESPOND, cursor)
        )
        if ok:
            assert latency is not None
            gaze_s = gaze_duration(method.ensure_blink, derive_seed(seed, STREAM_GAZE))
            _, detect_s = _plan_response(window_start, latency, gaze_offset_deg)
            latency_s = detect_s - window_start
            events.append(RobotEvent(detect_s, EventKind.FACE_DETECTED))
            if method.ensure_blink:
                for i in range(3):
                    events.append(
                        RobotEvent(detect_s + float(i), EventKind.BLINK_PULSE)
                    )
            events.append(RobotEvent(detect_s + 3.0, EventKind.SUCCESS))
            responded = True
            responding_action = action
            break
        t = window_start + RESPONSE_WINDOW_S
        events.append(RobotEvent(t, EventKind.WINDOW_EXPIRED))
    if not responded:
        events.append(RobotEvent(t, EventKind.FAILURE))

    if trace:
        for event in events:
            trace.emit(event.time_s, "ctrl", event.kind.value, event.detail)

    record = TrialRecord(
        trial_id=trial_id,
        method=method,
        situation=situation,
        responded=responded,
        responding_action=responding_action,
        response_latency_s=latency_s,
        gaze_time_s=gaze_s,
        seed=_seed_scalar(seed),
    )
    return TrialDetail(record=record, events=tuple(events), ticks=None)


def _seed_scalar(seed: SeedLike) -> int:
    if isinstance(seed, int):
        return seed
    return derive_seed(seed)


def trial_seed(base_seed: int, method: Method, situation: ViewingSituation, rep: int) -> int:
    """Per-trial seed, stable under subsetting methods or situations."""
    return derive_seed(
        base_seed, METHODS.index(method), SITUATIONS.index(situation), rep
    )


def trial_identifier(
    method: Method, situation: ViewingSituation, rep: int, n_per_cell: int
) -> int:
    """Canonical trial id: stable across method/situation subsets."""
    m = METHODS.index(method)
    s = SITUATIONS.index(situation)
    return (m * len(SITUATIONS) + s) * n_per_cell + rep


def _trial_worker(
    args: tuple[Scenario, Method, ViewingSituation, int, str, int, str | None],
) -> TrialRecord:
    scenario, method, situation, seed, mode, trial_id, trace_path = args
    if trace_path is None:
        return run_trial(scenario, method, situation, seed, mode=mode, trial_id=trial_id)
    with open(trace_path, "w", encoding="utf-8") as fp:
        return run_trial(
            scenario,
            method,
            situation,
            seed,
            mode=mode,
            trial_id=trial_id,
            trace=TraceWriter(fp),
        )


def run_experiment(
    config: RunConfig,
    mode: TrialMode = "event",
    jobs: int = 1,
    trace_dir: str | Path | None = None,
) -> list[TrialRecord]:
    """All trials of the crossed design, sorted by trial id.

    Seeds depend only on (base_seed, method, situation, rep), so a subset
    run reproduces the corresponding records of the full design exactly,
    and workers can run trials in any order.
    """
    if config.n_per_cell < 1:
        raise ValueError("n_per_cell must be at least 1")
    if mode not in TRIAL_MODES:
        raise ValueError(f"unknown trial mode {mode!r}")
    if trace_dir is not None:
        trace_dir = Path(trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)
    tasks = []
    for method in config.methods:
        for situation in config.situations:
            for rep in range(config.n_per_cell):
                tid = trial_identifier(method, situation, rep, config.n_per_cell)
                trace_path = (
                    str(trace_dir / f"trial_{tid:06d}.jsonl") if trace_dir else None
                )
                tasks.append(
                    (
                        config.scenario,
                        method,
                        situation,
                        trial_seed(config.base_seed, method, situation, rep),
                        mode,
                        tid,
                        trace_path,
                    )
                )
    if jobs > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_trial_worker, tasks, chunksize=chunk))
    else:
        records = [_trial_worker(task) for task in tasks]
    records.sort(key=lambda r: r.trial_id)
    return records


def _fmt_opt_float(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def format_record_row(record: TrialRecord) -> str:
    return ",".join(
        (
            str(record.trial_id),
            record.method.value,
            record.situation.value,
            "true" if record.responded else "false",
            record.responding_action.value if record.responding_action else "",
            _fmt_opt_float(record.response_latency_s),
            _fmt_opt_float(record.gaze_time_s),
            str(record.seed),
        )
    )


def write_records_csv(path: str | Path | IO[str], records: Iterable[TrialRecord]) -> None:
    if hasattr(path, "write"):
        _write_records(path, records)  # type: ignore[arg-type]
        return
    with open(path, "w", encoding="utf-8", newline="") as fp:
        _write_records(fp, records)


def _write_records(fp: IO[str], records: Iterable[TrialRecord]) -> None:
    fp.write(RESULTS_CSV_HEADER + "\n")
    for record in records:
        fp.write(format_record_row(record) + "\n")


def read_records_csv(path: str | Path | IO[str]) -> list[TrialRecord]:
    if hasattr(path, "read"):
        return _read_records(path)  # type: ignore[arg-type]
    with open(path, "r", encoding="utf-8", newline="") as fp:
        return _read_records(fp)


def _read_records(fp: IO[str]) -> list[TrialRecord]:
    header = fp.readline().rstrip("\n")
    if header != RESULTS_CSV_HEADER:
        raise ValueError(f"unexpected results header: {header!r}")
    records = []
    for line_no, line in enumerate(fp, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise ValueError(f"line {line_no}: expected 8 fields, got {len(parts)}")
        (tid, method, situation, responded, action, latency, gaze, seed) = parts
        records.append(
            TrialRecord(
                trial_id=int(tid),
                method=Method(method),
                situation=ViewingSituation(situation),
                responded=responded == "true",
                responding_action=RobotAction(action) if action else None,
                response_latency_s=float(latency) if latency else None,
                gaze_time_s=float(gaze) if gaze else None,
                seed=int(seed),
            )
        )
    return records

"""Simulated grid robot and the stimulus-to-motion command mapping."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import Decision, Position, StimulusConfig


class Heading(str, Enum):
    N = "N"
    E = "E"
    S = "S"
    W = "W"


class Command(str, Enum):
    FORWARD = "forward"
    TURN_LEFT = "turn_left"
    BACKWARD = "backward"
    TURN_RIGHT = "turn_right"
    NOOP = "noop"


_HEADINGS = [Heading.N, Heading.E, Heading.S, Heading.W]
_DELTAS = {Heading.N: (0, 1), Heading.E: (1, 0), Heading.S: (0, -1), Heading.W: (-1, 0)}


@dataclass(frozen=True)
class LogEntry:
    command: Command
    timestamp: float


@dataclass(frozen=True)
class RobotState:
    x: int = 0
    y: int = 0
    heading: Heading = Heading.N
    log: tuple[LogEntry, ...] = ()


def apply_command(state: RobotState, cmd: Command, timestamp: float = 0.0) -> RobotState:
    """Discrete kinematics: translate one unit along the heading or rotate 90°."""
    x, y, heading = state.x, state.y, state.heading
    if cmd in (Command.FORWARD, Command.BACKWARD):
        dx, dy = _DELTAS[heading]
        sign = 1 if cmd == Command.FORWARD else -1
        x, y = x + sign * dx, y + sign * dy
    elif cmd in (Command.TURN_LEFT, Command.TURN_RIGHT):
        step = -1 if cmd == Command.TURN_LEFT else 1
        heading = _HEADINGS[(_HEADINGS.index(heading) + step) % 4]
    return RobotState(
        x=x, y=y, heading=heading,
        log=state.log + (LogEntry(command=cmd, timestamp=timestamp),),
    )


def replay(commands, initial: RobotState | None = None) -> RobotState:
    state = initial or RobotState()
    for cmd in commands:
        state = apply_command(state, cmd)
    return state


# spatial-congruence default: top ring drives forward, left turns left, ...
_POSITION_COMMANDS = {
    Position.TOP: Command.FORWARD,
    Position.LEFT: Command.TURN_LEFT,
    Position.BOTTOM: Command.BACKWARD,
    Position.RIGHT: Command.TURN_RIGHT,
}


@dataclass(frozen=True)
class CommandMap:
    mapping: dict  # stimulus id -> Command

    @staticmethod
    def default(config: StimulusConfig) -> "CommandMap":
        return CommandMap(
            mapping={s.id: _POSITION_COMMANDS[s.position] for s in config.stimuli}
        )

    def __post_init__(self):
        cmds = list(self.mapping.values())
        if len(set(cmds)) != len(cmds):
            raise ValueError("command map must be a bijection over the stimuli")


class LowConfidencePolicy(str, Enum):
    SUPPRESS = "suppress"   # hold position on low-confidence decisions
    EXECUTE = "execute"


def decision_to_command(
    decision: Decision,
    command_map: CommandMap,
    policy: LowConfidencePolicy = LowConfidencePolicy.SUPPRESS,
) -> Command:
    if decision.low_confidence and policy == LowConfidencePolicy.SUPPRESS:
        return Command.NOOP
    return command_map.mapping[decision.class_id]

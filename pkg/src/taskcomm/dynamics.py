"""Ground-truth cart-pole MDP: explicit-Euler physics, reward, termination.

Pure scalar float64 functions; every call with identical inputs returns
bitwise-identical outputs, so workers may share nothing but the parameter
object.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

X_LIMIT = 2.4
PSI_LIMIT = math.radians(12.0)
X_MAX = 4.8
PSI_MAX = math.radians(24.0)


class ControlAction(Enum):
    LEFT = 0
    RIGHT = 1


@dataclass(frozen=True)
class SystemState:
    """Physical state (x, x_dot, psi, psi_dot); psi=0 is upright."""

    x: float
    x_dot: float
    psi: float
    psi_dot: float

    def as_array(self):
        return np.array([self.x, self.x_dot, self.psi, self.psi_dot], dtype=np.float64)

    def is_finite(self):
        return all(math.isfinite(v) for v in (self.x, self.x_dot, self.psi, self.psi_dot))


@dataclass(frozen=True)
class PhysicsParams:
    gravity: float = 9.8
    mass_cart: float = 1.0
    mass_pole: float = 0.1
    half_pole_length: float = 0.5
    force_magnitude: float = 10.0
    dt: float = 0.02

    def __post_init__(self):
        for name in ("gravity", "mass_cart", "mass_pole", "half_pole_length", "force_magnitude", "dt"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"physics parameter {name} must be strictly positive")


@dataclass(frozen=True)
class StepOutcome:
    next_state: SystemState
    reward: float
    terminated: bool


DEFAULT_PARAMS = PhysicsParams()


def reward(state: SystemState) -> float:
    """Per-step penalty -|x|/x_max - |psi|/psi_max (zero only exactly upright at center)."""
    return -abs(state.x) / X_MAX - abs(state.psi) / PSI_MAX


def step(state: SystemState, action: ControlAction, params: PhysicsParams = DEFAULT_PARAMS) -> StepOutcome:
    """One Euler step of the standard cart-pole equations.

    Derivatives are evaluated at the pre-step state and each variable is
    advanced by dt times its own derivative. The reward is evaluated at the
    post-step state; termination at |x| > 2.4 m or |psi| > 12 deg.
    """
    if not state.is_finite():
        raise ValueError(f"non-finite state passed to step: {state}")
    force = params.force_magnitude if action == ControlAction.RIGHT else -params.force_magnitude
    total_mass = params.mass_cart + params.mass_pole
    polemass_length = params.mass_pole * params.half_pole_length
    cos_psi = math.cos(state.psi)
    sin_psi = math.sin(state.psi)
    temp = (force + polemass_length * state.psi_dot ** 2 * sin_psi) / total_mass
    psi_acc = (params.gravity * sin_psi - cos_psi * temp) / (
        params.half_pole_length * (4.0 / 3.0 - params.mass_pole * cos_psi ** 2 / total_mass)
    )
    x_acc = temp - polemass_length * psi_acc * cos_psi / total_mass
    nxt = SystemState(
        x=state.x + params.dt * state.x_dot,
        x_dot=state.x_dot + params.dt * x_acc,
        psi=state.psi + params.dt * state.psi_dot,
        psi_dot=state.psi_dot + params.dt * psi_acc,
    )
    terminated = abs(nxt.x) > X_LIMIT or abs(nxt.psi) > PSI_LIMIT
    return StepOutcome(next_state=nxt, reward=reward(nxt), terminated=terminated)


def reset(seed: int) -> SystemState:
    """Initial state with all four components uniform in [-0.05, 0.05], seeded."""
    rng = np.random.Generator(np.random.PCG64(seed))
    vals = rng.uniform(-0.05, 0.05, size=4)
    return SystemState(x=float(vals[0]), x_dot=float(vals[1]), psi=float(vals[2]), psi_dot=float(vals[3]))

"""Deterministic binary rasterizer for cart-pole states.

Geometry convention: one pixels-per-meter scale for both axes,
ppm = (width-1) / (2*world_half_width); continuous column of a world
x-coordinate is col_f(x) = (x + world_half_width) * ppm. All rasterized
edges use round-half-up (floor(v + 0.5)) independently per edge, which keeps
the x=0, psi=0 frame exactly equal to its own mirror under the default
config. Intensities are exactly 0 or 1 (no anti-aliasing).
"""

import math
from dataclasses import dataclass

import numpy as np

from taskcomm import _kernels
from taskcomm.dynamics import SystemState


@dataclass(frozen=True)
class RenderConfig:
    width: int = 96
    height: int = 48
    world_half_width: float = 3.0
    track_row_fraction: float = 0.8
    cart_w: float = 0.5
    cart_h: float = 0.3
    pole_len: float = 1.0
    pole_thickness: int = 2

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("frame dimensions must be at least 16x16")
        if not self.world_half_width > 2.4 + self.cart_w / 2:
            raise ValueError("world_half_width must exceed 2.4 + cart_w/2 so the cart stays renderable")
        if not 0.0 < self.track_row_fraction < 1.0:
            raise ValueError("track_row_fraction must lie in (0,1)")

    @property
    def pixels_per_meter(self) -> float:
        return (self.width - 1) / (2.0 * self.world_half_width)


@dataclass(frozen=True)
class Frame:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) float32, values in {0.0, 1.0}


@dataclass(frozen=True)
class Observation:
    """Two consecutive frames (t-1, t)."""

    prev: Frame
    curr: Frame


def _round(v: float) -> int:
    return int(math.floor(v + 0.5))


def render(state: SystemState, cfg: RenderConfig = RenderConfig()) -> Frame:
    """Rasterize one state: background 0, filled cart rectangle, pole segment."""
    if not state.is_finite():
        raise ValueError(f"non-finite state passed to render: {state}")
    img = np.zeros((cfg.height, cfg.width), dtype=np.float32)
    ppm = cfg.pixels_per_meter

    def col_f(x_world: float) -> float:
        return (x_world + cfg.world_half_width) * ppm

    # cart: bottom edge sits on the track row, edges rounded independently
    r0 = _round(cfg.track_row_fraction * cfg.height)
    cart_h_px = _round(cfg.cart_h * ppm)
    left = _round(col_f(state.x - cfg.cart_w / 2))
    right = _round(col_f(state.x + cfg.cart_w / 2))
    rt = max(r0 - cart_h_px + 1, 0)
    rb = min(r0, cfg.height - 1)
    if rb >= rt and right >= 0 and left <= cfg.width - 1:
        img[rt:rb + 1, max(left, 0):min(right, cfg.width - 1) + 1] = 1.0

    # pole: from the cart-center top, pole_len meters along (sin psi, cos psi up)
    pivot_row = r0 - cart_h_px
    end_row = pivot_row - _round(cfg.pole_len * math.cos(state.psi) * ppm)
    half_t = cfg.pole_thickness / 2.0
    pivot_col = _round(col_f(state.x) - half_t + 0.5)
    end_col = _round(col_f(state.x + cfg.pole_len * math.sin(state.psi)) - half_t + 0.5)
    _kernels.draw_line(img, pivot_row, pivot_col, end_row, end_col, cfg.pole_thickness)

    return Frame(width=cfg.width, height=cfg.height, pixels=img)


def observe(prev_state: SystemState, curr_state: SystemState, cfg: RenderConfig = RenderConfig()) -> Observation:
    return Observation(prev=render(prev_state, cfg), curr=render(curr_state, cfg))


def observation_array(obs: Observation) -> np.ndarray:
    """Stack an observation as a (2, H, W) float32 array (prev, curr)."""
    return np.stack([obs.prev.pixels, obs.curr.pixels]).astype(np.float32, copy=False)


def write_pgm(frame: Frame, path) -> None:
    """Dump a frame as binary PGM (P5), 8-bit, intensity*255."""
    data = np.clip(np.rint(frame.pixels * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii"))
        fh.write(data.tobytes())

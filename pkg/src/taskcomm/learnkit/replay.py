"""Whole-episode replay storage for recurrent agents."""

from dataclasses import dataclass

import numpy as np

from taskcomm.learnkit.rng import generator


@dataclass
class SequenceSample:
    """A contiguous slice of one stored episode."""

    inputs: np.ndarray    # (L, D) float32
    actions: np.ndarray   # (L,) int64
    rewards: np.ndarray   # (L,) float64
    terminals: np.ndarray  # (L,) bool
    episode_index: int
    offset: int


class SequenceReplay:
    """FIFO store of up to `capacity` episodes of (input, action, reward, terminal) records."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("replay capacity must be at least 1 episode")
        self.capacity = capacity
        self._episodes: list[dict] = []
        self._total_added = 0

    def add_episode(self, inputs, actions, rewards, terminals) -> None:
        inputs = np.asarray(inputs, dtype=np.float32)
        actions = np.asarray(actions, dtype=np.int64)
        rewards = np.asarray(rewards, dtype=np.float64)
        terminals = np.asarray(terminals, dtype=bool)
        n = len(actions)
        if not (len(inputs) == len(rewards) == len(terminals) == n) or n == 0:
            raise ValueError("episode record arrays must be non-empty and of equal length")
        if terminals[:-1].any():
            raise ValueError("only the final record of an episode may be terminal")
        ep = {"inputs": inputs, "actions": actions, "rewards": rewards, "terminals": terminals}
        if len(self._episodes) == self.capacity:
            self._episodes.pop(0)
        self._episodes.append(ep)
        self._total_added += 1

    def __len__(self) -> int:
        return len(self._episodes)

    def episode(self, idx: int) -> dict:
        return self._episodes[idx]


def sample_sequences(replay: SequenceReplay, batch: int, window: int, seed: int) -> list[SequenceSample]:
    """Draw `batch` contiguous windows, episodes uniform then offsets uniform.

    A window is `window` records long, or the whole episode when the episode
    is shorter. Deterministic under `seed`.
    """
    if len(replay) == 0:
        raise ValueError("cannot sample from an empty replay")
    if batch < 1 or window < 1:
        raise ValueError("batch and window must be positive")
    rng = generator(seed, "sample_sequences")
    out = []
    for _ in range(batch):
        ep_idx = int(rng.integers(0, len(replay)))
        ep = replay.episode(ep_idx)
        n = len(ep["actions"])
        if n <= window:
            off = 0
            length = n
        else:
            off = int(rng.integers(0, n - window + 1))
            length = window
        out.append(
            SequenceSample(
                inputs=ep["inputs"][off:off + length],
                actions=ep["actions"][off:off + length],
                rewards=ep["rewards"][off:off + length],
                terminals=ep["terminals"][off:off + length],
                episode_index=ep_idx,
                offset=off,
            )
        )
    return out

"""
Stochastic GridWorld - The 5 x 5 testbed with random rewards and wind

PURPOSE: Generate the GridWorld used by every training comparison:
         - 25 cells, each carrying reward 0 with probability 1/2 and a
           standard-normal reward otherwise
         - 4 moves (up, down, left, right); with probability 1/2 the chosen
           move is replaced by a draw from the cell's own disturbance
           distribution
         - moves off the grid leave the agent where it is
         - every episode starts in cell (3, 3) and lasts H = 10 steps

AVIATION ANALOGY: Crosswind landings - the pilot picks a heading, the wind
                  at that runway decides how much of it survives

USAGE:
    mdp = make_gridworld(seed=7)
    spec = make_gridworld_spec(seed=7)   # keeps the reward map and wind table

Cells use 1-based (row, col) coordinates; states are row-major 0-based
indices, so cell (3, 3) is state 12.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from mdp.tabular import TabularMdp


# =============================================================================
# ENVIRONMENT CONSTANTS
# =============================================================================

GRID_WIDTH = 5
GRID_HEIGHT = 5
HORIZON = 10
START_CELL = (3, 3)
REWARD_PROBABILITY = 0.5
CONTROL_PROBABILITY = 0.5

# (row delta, col delta) per action index
ACTION_NAMES = ('up', 'down', 'left', 'right')
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))


def cell_to_state(row: int, col: int, width: int = GRID_WIDTH) -> int:
    """1-based (row, col) to 0-based row-major state index."""
    return (row - 1) * width + (col - 1)


def state_to_cell(state: int, width: int = GRID_WIDTH) -> Tuple[int, int]:
    """0-based state index to 1-based (row, col)."""
    return state // width + 1, state % width + 1


def _move(state: int, action: int, width: int, height: int) -> int:
    row, col = state_to_cell(state, width)
    d_row, d_col = MOVES[action]
    new_row, new_col = row + d_row, col + d_col
    if not (1 <= new_row <= height and 1 <= new_col <= width):
        return state
    return cell_to_state(new_row, new_col, width)


@dataclass(frozen=True, eq=False)
class GridWorldSpec:
    """
    PURPOSE: Everything needed to rebuild one GridWorld bit-exactly

    PARAMETERS:
        reward_map: Array (height, width) of per-cell rewards
        disturbance: Array (cells, 4) - per-cell distribution over replacement moves
        seed: Generator seed the spec was drawn from
    """

    reward_map: np.ndarray
    disturbance: np.ndarray
    seed: int
    width: int = GRID_WIDTH
    height: int = GRID_HEIGHT
    start_cell: Tuple[int, int] = START_CELL
    horizon: int = HORIZON
    control_probability: float = CONTROL_PROBABILITY

    def __post_init__(self):
        reward_map = np.array(self.reward_map, dtype=float)
        disturbance = np.array(self.disturbance, dtype=float)
        cells = self.width * self.height
        if reward_map.shape != (self.height, self.width):
            raise ValueError(f"reward_map must be {self.height}x{self.width}, got {reward_map.shape}")
        if disturbance.shape != (cells, len(MOVES)):
            raise ValueError(f"disturbance must be ({cells}, {len(MOVES)}), got {disturbance.shape}")
        if np.any(disturbance < 0) or np.max(np.abs(disturbance.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("disturbance rows must be probability vectors")
        reward_map.setflags(write=False)
        disturbance.setflags(write=False)
        object.__setattr__(self, 'reward_map', reward_map)
        object.__setattr__(self, 'disturbance', disturbance)
        object.__setattr__(self, 'start_cell', tuple(self.start_cell))

    @property
    def num_cells(self) -> int:
        return self.width * self.height

    def to_mdp(self) -> TabularMdp:
        """
        Build the transition tensor.

        P(s' | s, a) = q * 1[s' = move(s, a)]
                     + (1 - q) * sum_b disturbance[s, b] * 1[s' = move(s, b)]
        with q the control probability.
        """
        cells = self.num_cells
        transition = np.zeros((cells, len(MOVES), cells))
        for state in range(cells):
            landing = [_move(state, b, self.width, self.height) for b in range(len(MOVES))]
            wind = np.zeros(cells)
            for b, target in enumerate(landing):
                wind[target] += self.disturbance[state, b]
            for action, target in enumerate(landing):
                transition[state, action] = (1.0 - self.control_probability) * wind
                transition[state, action, target] += self.control_probability

        initial = np.zeros(cells)
        initial[cell_to_state(*self.start_cell, self.width)] = 1.0
        return TabularMdp(transition, self.reward_map.ravel(), initial, self.horizon,
                          seed=self.seed, name=f"gridworld-{self.seed}")


def make_gridworld_spec(seed: int) -> GridWorldSpec:
    """
    Draw a GridWorld spec; a pure function of seed.

    Draw order (part of the reproducibility contract): reward mask,
    normal rewards, then disturbance rows from a flat Dirichlet.
    """
    rng = np.random.default_rng(seed)
    cells = GRID_WIDTH * GRID_HEIGHT
    has_reward = rng.random(cells) < REWARD_PROBABILITY
    draws = rng.standard_normal(cells)
    reward = np.where(has_reward, draws, 0.0).reshape(GRID_HEIGHT, GRID_WIDTH)
    disturbance = rng.dirichlet(np.ones(len(MOVES)), size=cells)
    return GridWorldSpec(reward_map=reward, disturbance=disturbance, seed=int(seed))


def make_gridworld(seed: int) -> TabularMdp:
    """25-state, 4-action, H = 10 GridWorld MDP drawn from seed."""
    return make_gridworld_spec(seed).to_mdp()

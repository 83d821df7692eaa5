"""
MDP Serialization - Human-readable YAML files for MDPs and GridWorld specs

PURPOSE: Write environments to disk so an experiment can be replayed
         bit-exactly, and read custom MDPs supplied by the user

WHY YAML: Same format as the experiment configs, readable in any editor,
          and PyYAML writes floats with repr() so values survive the
          round trip unchanged.

FILE LAYOUT (tabular MDP):
    format_version: 1
    kind: tabular_mdp
    name: gridworld-7
    seed: 7
    num_states: 25
    num_actions: 4
    horizon: 10
    reward: [...]
    initial_dist: [...]
    transition: [[[...]]]
"""

from pathlib import Path
from typing import Any, Dict, Union

import yaml

from mdp.tabular import TabularMdp
from mdp.gridworld import GridWorldSpec

FORMAT_VERSION = 1

PathLike = Union[str, Path]


# =============================================================================
# TABULAR MDP
# =============================================================================

def mdp_to_dict(mdp: TabularMdp) -> Dict[str, Any]:
    """Plain-Python representation of an MDP (lists and floats only)."""
    return {
        'format_version': FORMAT_VERSION,
        'kind': 'tabular_mdp',
        'name': mdp.name,
        'seed': mdp.seed,
        'num_states': mdp.num_states,
        'num_actions': mdp.num_actions,
        'horizon': mdp.horizon,
        'reward': mdp.reward.tolist(),
        'initial_dist': mdp.initial_dist.tolist(),
        'transition': mdp.transition.tolist(),
    }


def mdp_from_dict(data: Dict[str, Any]) -> TabularMdp:
    """Inverse of mdp_to_dict; validation happens in TabularMdp."""
    if data.get('kind', 'tabular_mdp') != 'tabular_mdp':
        raise ValueError(f"Not a tabular MDP file (kind={data.get('kind')})")
    for key in ('horizon', 'reward', 'initial_dist', 'transition'):
        if key not in data:
            raise ValueError(f"MDP file missing required key: {key}")

    mdp = TabularMdp(
        transition=data['transition'],
        reward=data['reward'],
        initial_dist=data['initial_dist'],
        horizon=data['horizon'],
        seed=data.get('seed'),
        name=data.get('name', 'tabular'),
    )
    declared = (data.get('num_states', mdp.num_states), data.get('num_actions', mdp.num_actions))
    if declared != (mdp.num_states, mdp.num_actions):
        raise ValueError(f"Declared dimensions {declared} do not match the tables")
    return mdp


def save_mdp(mdp: TabularMdp, path: PathLike) -> str:
    """Write mdp to a YAML file and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        yaml.safe_dump(mdp_to_dict(mdp), f, sort_keys=False, default_flow_style=None)
    return str(path)


def load_mdp(path: PathLike) -> TabularMdp:
    """Read an MDP written by save_mdp (or by hand in the same layout)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"MDP file not found: {path}")
    with open(path, 'r') as f:
        data = yaml.safe_load(f)
    if data.get('kind') == 'gridworld_spec':
        return gridworld_spec_from_dict(data).to_mdp()
    return mdp_from_dict(data)


# =============================================================================
# GRIDWORLD SPEC
# =============================================================================

def gridworld_spec_to_dict(spec: GridWorldSpec) -> Dict[str, Any]:
    return {
        'format_version': FORMAT_VERSION,
        'kind': 'gridworld_spec',
        'seed': spec.seed,
        'width': spec.width,
        'height': spec.height,
        'start_cell': list(spec.start_cell),
        'horizon': spec.horizon,
        'control_probability': spec.control_probability,
        'reward_map': spec.reward_map.tolist(),
        'disturbance': spec.disturbance.tolist(),
    }


def gridworld_spec_from_dict(data: Dict[str, Any]) -> GridWorldSpec:
    return GridWorldSpec(
        reward_map=data['reward_map'],
        disturbance=data['disturbance'],
        seed=data['seed'],
        width=data.get('width', 5),
        height=data.get('height', 5),
        start_cell=tuple(data.get('start_cell', (3, 3))),
        horizon=data.get('horizon', 10),
        control_probability=data.get('control_probability', 0.5),
    )


def save_gridworld_spec(spec: GridWorldSpec, path: PathLike) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        yaml.safe_dump(gridworld_spec_to_dict(spec), f, sort_keys=False, default_flow_style=None)
    return str(path)


def load_gridworld_spec(path: PathLike) -> GridWorldSpec:
    with open(path, 'r') as f:
        return gridworld_spec_from_dict(yaml.safe_load(f))

"""
Config package for the ZSPO Toolkit

Contains YAML experiment files:
- smoke.yaml: one repetition, one iteration, every algorithm
- bradley_terry_desk.yaml: Bradley-Terry truth at desk scale
- link_mismatch_desk.yaml: linear truth with logistic-assuming baselines at desk scale
- full_scale.yaml: full-scale overnight reproduction
"""

from pathlib import Path

# Path to config directory
CONFIG_DIR = Path(__file__).parent


def get_config_path(filename: str) -> str:
    """
    Get absolute path to a config file.

    Args:
        filename: Name of config file (e.g., 'bradley_terry_desk.yaml')

    Returns:
        Absolute path to the config file
    """
    return str(CONFIG_DIR / filename)


def list_config_files() -> list:
    """Names of the experiment files shipped with the toolkit."""
    return sorted(p.name for p in CONFIG_DIR.glob("*.yaml"))

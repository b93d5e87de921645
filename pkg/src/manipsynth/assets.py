"""Access to the bundled hand models, tool meshes, and template poses."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .fileio import load_pose
from .geometry import TriMesh, load_mesh
from .hand import HandModel, HandPose, load_hand_model


def asset_path(name: str) -> Path:
    path = Path(str(resources.files("manipsynth") / "assets" / name))
    if not path.exists():
        raise FileNotFoundError(f"bundled asset not found: {name}")
    return path


def load_toy_hand() -> HandModel:
    return load_hand_model(asset_path("toy_hand.json"))


def load_full_hand() -> HandModel:
    return load_hand_model(asset_path("full_hand.json"))


def load_tool(name: str) -> TriMesh:
    """name: diskplacer | friem | scalpel."""
    return load_mesh(asset_path(f"tool_{name}.obj"))


def load_template_pose(name: str) -> HandPose:
    """name: diskplacer (full hand) | toy (toy hand vs diskplacer)."""
    return load_pose(asset_path(f"template_{name}.json"))

"""Model identifiers, their default input representations, and weight
loading.

Any identifier accepts a TorchScript archive. The torchvision-backed
ids (resnet50, resnet101, densenet121) additionally accept an eager
state dict, with the class count inferred from the final layer. cnn_mri
and xception are opaque user-trained networks, so TorchScript only.
"""

from __future__ import annotations

from pathlib import Path

import torch

from .errors import WeightsNotFound

GRAYSCALE, EDGE = "grayscale", "edge"

# which input each backbone consumes by default
DEFAULT_REPRESENTATION = {
    "resnet50": EDGE,
    "xception": EDGE,
    "resnet101": GRAYSCALE,
    "densenet121": GRAYSCALE,
    "cnn_mri": GRAYSCALE,
}

_TORCHVISION_BUILDERS = {
    "resnet50": ("resnet50", "fc"),
    "resnet101": ("resnet101", "fc"),
    "densenet121": ("densenet121", "classifier"),
}


def known_models() -> list[str]:
    return sorted(DEFAULT_REPRESENTATION)


def _build_torchvision(model_id: str, state: dict) -> torch.nn.Module:
    from torchvision import models as tv

    builder_name, head = _TORCHVISION_BUILDERS[model_id]
    head_weight = state.get(f"{head}.weight")
    if head_weight is None:
        raise WeightsNotFound(
            f"state dict lacks '{head}.weight'; cannot size the {model_id} head"
        )
    num_classes = head_weight.shape[0]
    model = getattr(tv, builder_name)(weights=None, num_classes=num_classes)
    model.load_state_dict(state)
    return model


def load_model(model_id: str, weights: str | Path) -> torch.nn.Module:
    """Load inference weights: TorchScript first, then a torchvision
    state dict where the architecture is known."""
    if model_id not in DEFAULT_REPRESENTATION:
        raise WeightsNotFound(f"unknown model id {model_id!r}, expected one of {known_models()}")
    weights = Path(weights)
    if not weights.is_file():
        raise WeightsNotFound(f"weights file not found: {weights}")
    try:
        model = torch.jit.load(str(weights), map_location="cpu")
    except Exception:
        model = None
    if model is None:
        if model_id not in _TORCHVISION_BUILDERS:
            raise WeightsNotFound(
                f"{model_id} weights must be a TorchScript archive, could not load {weights}"
            )
        try:
            state = torch.load(weights, map_location="cpu", weights_only=True)
        except Exception as exc:
            raise WeightsNotFound(f"cannot load {weights}: {exc}") from None
        if not isinstance(state, dict):
            raise WeightsNotFound(f"{weights}: expected a state dict")
        state = state.get("state_dict", state)
        model = _build_torchvision(model_id, state)
    model.eval()
    return model

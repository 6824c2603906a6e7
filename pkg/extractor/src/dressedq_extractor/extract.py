"""Frozen-backbone image feature extraction.

Walks an image directory tree with one subfolder per class, runs every
image through a pretrained CNN whose classification head has been replaced
with the identity, and writes the pooled activations as a feature file
plus JSON manifest. The on-disk format matches the dressedq data module
byte for byte (header ``label,f0,...``, floats at 17 significant digits);
the golden files under the repository's top-level tests pin both writers
to the same bytes.

The backbone never trains here: weights are frozen and the model runs in
evaluation mode, so repeated runs over the same tree are byte-identical.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

log = logging.getLogger("dressedq_extractor")

CLASS_NAMES = ["No_DR", "Mild", "Moderate", "Severe", "Proliferate_DR"]

BACKBONE_DIMS = {
    "resnet18": 512,
    "resnet34": 512,
    "resnet50": 2048,
    "resnet101": 2048,
    "resnet152": 2048,
    "inception_v3": 2048,
}

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class FeatureRecord:
    label: int
    features: np.ndarray


@dataclass
class ExtractorConfig:
    image_root: str | Path
    backbone: str
    batch_size: int = 16
    device: str = "auto"
    pretrained: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.backbone not in BACKBONE_DIMS:
            raise ValueError(
                f"unknown backbone {self.backbone!r}; choose one of "
                f"{', '.join(sorted(BACKBONE_DIMS))}")
        if self.batch_size < 1:
            raise ValueError(
                f"batch_size must be >= 1, got {self.batch_size}")
        if self.device not in ("auto", "cpu", "cuda"):
            raise ValueError(f"device must be auto, cpu, or cuda, "
                             f"got {self.device!r}")


def input_size(backbone: str) -> int:
    return 299 if backbone == "inception_v3" else 224


def preprocess_image(path: str | Path, backbone: str) -> torch.Tensor:
    """Decode, resize, scale to [0,1], and normalize with ImageNet stats.

    Grayscale and palette images are converted to three channels first.
    Decoding errors propagate; extract_features turns them into skips.
    """
    size = input_size(backbone)
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((size, size), Image.BILINEAR)
    array = np.asarray(rgb, dtype=np.float32) / 255.0
    tensor = torch.from_numpy(array).permute(2, 0, 1)
    mean = torch.tensor(IMAGENET_MEAN).view(3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(3, 1, 1)
    return (tensor - mean) / std


def resolve_device(hint: str) -> torch.device:
    if hint == "auto":
        return torch.device("cuda" if torch.cuda.is_available() else "cpu")
    return torch.device(hint)


def load_backbone(backbone: str, pretrained: bool = True,
                  seed: int = 0) -> torch.nn.Module:
    """Build the CNN with its final classification layer removed.

    pretrained=False substitutes seeded random weights so offline
    environments can still exercise the full pipeline deterministically.
    """
    from torchvision import models

    if backbone not in BACKBONE_DIMS:
        raise ValueError(f"unknown backbone {backbone!r}")
    torch.manual_seed(seed)
    kwargs = {"weights": "DEFAULT" if pretrained else None}
    if backbone == "inception_v3" and not pretrained:
        # silence the init_weights deprecation path; the plain module
        # defaults are already seeded-deterministic
        kwargs["init_weights"] = False
    model = models.get_model(backbone, **kwargs)
    model.fc = torch.nn.Identity()
    model.eval()
    for param in model.parameters():
        param.requires_grad_(False)
    return model


def _collect_paths(root: Path) -> list[tuple[int, Path]]:
    pending = []
    for label, name in enumerate(CLASS_NAMES):
        class_dir = root / name
        files = sorted(p for p in class_dir.iterdir()
                       if p.is_file()) if class_dir.is_dir() else []
        if not files:
            log.warning("class directory %s is missing or empty", class_dir)
        pending.extend((label, p) for p in files)
    return pending


def extract_features(
        config: ExtractorConfig
) -> tuple[dict, list[FeatureRecord], list[Path]]:
    """Run the frozen backbone over every decodable image in the tree.

    Returns (manifest, records, rejects): records in class-then-filename
    order, rejects listing files that failed to decode (each already
    logged as a warning).
    """
    root = Path(config.image_root)
    if not root.is_dir():
        raise FileNotFoundError(f"image root {root} is not a directory")
    device = resolve_device(config.device)
    model = load_backbone(config.backbone, pretrained=config.pretrained,
                          seed=config.seed).to(device)

    loaded: list[tuple[int, torch.Tensor]] = []
    rejects: list[Path] = []
    for label, path in _collect_paths(root):
        try:
            loaded.append((label, preprocess_image(path, config.backbone)))
        except OSError as e:
            log.warning("skipping undecodable image %s: %s", path, e)
            rejects.append(path)
    if not loaded:
        raise ValueError(f"no decodable images under {root}")

    expected = BACKBONE_DIMS[config.backbone]
    records: list[FeatureRecord] = []
    with torch.no_grad():
        for start in range(0, len(loaded), config.batch_size):
            chunk = loaded[start:start + config.batch_size]
            batch = torch.stack([t for _, t in chunk]).to(device)
            out = model(batch).cpu().double().numpy()
            if out.shape[1] != expected:
                raise RuntimeError(
                    f"{config.backbone} produced {out.shape[1]}-dim "
                    f"features, expected {expected}")
            records.extend(FeatureRecord(label, row)
                           for (label, _), row in zip(chunk, out))

    weights = ("imagenet-pretrained" if config.pretrained
               else f"random(seed={config.seed})")
    size = input_size(config.backbone)
    manifest = {
        "feature_dim": expected,
        "n_classes": len(CLASS_NAMES),
        "class_names": list(CLASS_NAMES),
        "backbone": config.backbone,
        "source": f"images: {root}; weights: {weights}",
        "normalization": f"resize {size}x{size}, scale to [0,1], "
                         f"imagenet mean/std",
    }
    return manifest, records, rejects


def write_outputs(manifest: dict, records: list[FeatureRecord],
                  features_path: str | Path,
                  manifest_path: str | Path) -> None:
    """Emit the feature file and manifest in the dressedq on-disk format."""
    import json

    if not records:
        raise ValueError("refusing to write an empty feature file")
    dim = manifest["feature_dim"]
    for i, rec in enumerate(records):
        if rec.features.size != dim:
            raise ValueError(f"record {i}: {rec.features.size} features, "
                             f"manifest says {dim}")
        if not 0 <= rec.label < manifest["n_classes"]:
            raise ValueError(f"record {i}: label {rec.label} out of range "
                             f"[0, {manifest['n_classes']})")
        if not np.isfinite(rec.features).all():
            raise ValueError(f"record {i}: non-finite feature value")
    lines = [",".join(["label"] + [f"f{i}" for i in range(dim)])]
    for rec in records:
        lines.append(",".join([str(rec.label)]
                              + [format(x, ".17g") for x in rec.features]))
    Path(features_path).write_text("\n".join(lines) + "\n")
    ordered = {key: manifest[key] for key in
               ("feature_dim", "n_classes", "class_names", "backbone",
                "source", "normalization")}
    Path(manifest_path).write_text(json.dumps(ordered, indent=2) + "\n")

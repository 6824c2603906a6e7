"""Feature-file ingestion, manifests, deterministic splits, synthetic blobs.

On-disk format: a delimited text file with header ``label,f0,...,f{D-1}``, one
record per line, float values printed with 17 significant digits (bit-exact
round-trip), plus a JSON manifest sidecar describing the dataset.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_CLASSES = 5
CLASS_NAMES = ["No_DR", "Mild", "Moderate", "Severe", "Proliferate_DR"]


class FeatureFileError(ValueError):
    """A feature or manifest file failed validation."""


@dataclass
class DatasetManifest:
    feature_dim: int
    n_classes: int = N_CLASSES
    class_names: list[str] = field(default_factory=lambda: list(CLASS_NAMES))
    backbone: str = ""
    source: str = ""
    normalization: str = ""

    def __post_init__(self) -> None:
        if self.feature_dim < 1:
            raise FeatureFileError(
                f"feature_dim must be positive, got {self.feature_dim}")
        if len(self.class_names) != self.n_classes:
            raise FeatureFileError(
                f"{len(self.class_names)} class names for {self.n_classes} classes")

    def to_dict(self) -> dict:
        return {
            "feature_dim": self.feature_dim,
            "n_classes": self.n_classes,
            "class_names": list(self.class_names),
            "backbone": self.backbone,
            "source": self.source,
            "normalization": self.normalization,
        }


@dataclass
class FeatureRecord:
    label: int
    features: np.ndarray


def _header(feature_dim: int) -> str:
    return ",".join(["label"] + [f"f{i}" for i in range(feature_dim)])


def read_manifest(manifest_path: str | Path) -> DatasetManifest:
    try:
        raw = json.loads(Path(manifest_path).read_text())
    except json.JSONDecodeError as e:
        raise FeatureFileError(f"{manifest_path}: invalid manifest JSON: {e}") from e
    try:
        return DatasetManifest(**{k: raw[k] for k in
                                  ("feature_dim", "n_classes", "class_names",
                                   "backbone", "source", "normalization")})
    except KeyError as e:
        raise FeatureFileError(f"{manifest_path}: manifest missing field {e}") from e


def write_manifest(manifest: DatasetManifest, manifest_path: str | Path) -> None:
    Path(manifest_path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")


def load_features(data_path: str | Path,
                  manifest_path: str | Path) -> tuple[DatasetManifest, list[FeatureRecord]]:
    """Read and validate a feature file against its manifest; row order preserved.

    Errors name the offending physical line (the header is line 1).
    """
    manifest = read_manifest(manifest_path)
    lines = Path(data_path).read_text().splitlines()
    if not lines:
        raise FeatureFileError(f"{data_path}: empty file (missing header)")
    expected = _header(manifest.feature_dim)
    if lines[0] != expected:
        raise FeatureFileError(
            f"{data_path}: line 1: bad header (expected {expected!r})")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != manifest.feature_dim + 1:
            raise FeatureFileError(
                f"{data_path}: line {lineno}: expected {manifest.feature_dim + 1} "
                f"fields, got {len(parts)}")
        try:
            label = int(parts[0])
            features = np.array([float(x) for x in parts[1:]])
        except ValueError as e:
            raise FeatureFileError(f"{data_path}: line {lineno}: {e}") from e
        if not 0 <= label < manifest.n_classes:
            raise FeatureFileError(
                f"{data_path}: line {lineno}: label {label} out of range "
                f"[0, {manifest.n_classes})")
        if not np.isfinite(features).all():
            raise FeatureFileError(
                f"{data_path}: line {lineno}: non-finite feature value")
        records.append(FeatureRecord(label, features))
    return manifest, records


def save_features(manifest: DatasetManifest, records: list[FeatureRecord],
                  data_path: str | Path, manifest_path: str | Path) -> None:
    """Validate records against the manifest, then write both files."""
    for i, rec in enumerate(records):
        if rec.features.size != manifest.feature_dim:
            raise FeatureFileError(
                f"record {i}: {rec.features.size} features, manifest says "
                f"{manifest.feature_dim}")
        if not 0 <= rec.label < manifest.n_classes:
            raise FeatureFileError(
                f"record {i}: label {rec.label} out of range [0, {manifest.n_classes})")
        if not np.isfinite(rec.features).all():
            raise FeatureFileError(f"record {i}: non-finite feature value")
    lines = [_header(manifest.feature_dim)]
    for rec in records:
        lines.append(",".join([str(rec.label)]
                              + [format(x, ".17g") for x in rec.features]))
    Path(data_path).write_text("\n".join(lines) + "\n")
    write_manifest(manifest, manifest_path)


def synth_blobs(seed: int, per_class: int, feature_dim: int,
                separation: float) -> tuple[DatasetManifest, list[FeatureRecord]]:
    """Five seeded Gaussian clusters: class c centered at separation * u_c
    (near-orthonormal directions u_c), unit isotropic variance.
    """
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    if separation < 0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((N_CLASSES, feature_dim))
    if feature_dim >= N_CLASSES:
        # QR makes the rows exactly orthonormal
        q, _ = np.linalg.qr(dirs.T)
        dirs = q[:, :N_CLASSES].T
    else:
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    records = []
    for c in range(N_CLASSES):
        samples = separation * dirs[c] + rng.standard_normal((per_class, feature_dim))
        records.extend(FeatureRecord(c, row) for row in samples)
    manifest = DatasetManifest(
        feature_dim=feature_dim,
        backbone="synthetic",
        source=f"synth_blobs(seed={seed}, per_class={per_class}, "
               f"separation={separation})",
        normalization="unit-variance isotropic gaussian clusters",
    )
    return manifest, records


def split(records: list[FeatureRecord], val_fraction: float,
          seed: int) -> tuple[list[FeatureRecord], list[FeatureRecord]]:
    """Stratified seeded partition into (train, val); both sides non-empty."""
    if not 0 < val_fraction < 1:
        raise ValueError(f"val_fraction must be in (0, 1), got {val_fraction}")
    rng = np.random.default_rng(seed)
    by_class: dict[int, list[int]] = {}
    for i, rec in enumerate(records):
        by_class.setdefault(rec.label, []).append(i)
    val_idx: set[int] = set()
    for label in sorted(by_class):
        idx = np.array(by_class[label])
        n_val = int(round(len(idx) * val_fraction))
        chosen = rng.permutation(idx)[:n_val]
        val_idx.update(int(i) for i in chosen)
    train = [rec for i, rec in enumerate(records) if i not in val_idx]
    val = [rec for i, rec in enumerate(records) if i in val_idx]
    if not train or not val:
        raise ValueError(
            f"val_fraction {val_fraction} leaves an empty side "
            f"({len(train)} train / {len(val)} val)")
    return train, val

"""Synthetic multi-source/target classification data with controllable shift.

Base samples come from a K-component Gaussian mixture with class means on a
circle; every domain applies its own affine transform (rotation in the first
two feature dims, isotropic scale, translation) plus Gaussian noise. Class
counts are exactly equal per domain, so class priors are uniform everywhere.

On disk each domain is a CSV ``domain_<id>.csv`` with header
``domain_id,label,f0,...,f{D-1}`` and a sidecar ``meta.json`` holding the
generator settings. Generation is a pure function of (config, seed).
"""

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, ContractError


@dataclass
class DomainSpec:
    """Affine shift of one domain. ``domain_id`` runs 1..M+1, target last."""

    domain_id: int
    rotation_angle: float = 0.0
    scale: float = 1.0
    translation: list[float] = field(default_factory=list)
    noise_std: float = 0.0

    def validate(self, dim):
        if self.scale <= 0.0:
            raise ConfigError(f"domain {self.domain_id}: scale must be positive")
        if self.noise_std < 0.0:
            raise ConfigError(f"domain {self.domain_id}: noise_std must be >= 0")
        if self.translation and len(self.translation) != dim:
            raise ConfigError(
                f"domain {self.domain_id}: translation length != input dim {dim}"
            )


@dataclass
class GeneratorConfig:
    n_sources: int = 3
    n_classes: int = 5
    input_dim: int = 2
    per_class: int = 500
    mean_radius: float = 3.0
    class_std: float = 0.5
    domains: list[DomainSpec] = field(default_factory=list)

    def validate(self):
        if self.n_classes < 2 or self.n_sources < 1 or self.input_dim < 2:
            raise ConfigError("need K >= 2, M >= 1, D >= 2")
        if self.per_class < 10:
            raise ConfigError("need at least 10 samples per class")
        if len(self.domains) != self.n_sources + 1:
            raise ConfigError(
                f"expected {self.n_sources + 1} domain specs, got {len(self.domains)}"
            )
        for spec in self.domains:
            spec.validate(self.input_dim)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["domains"] = [DomainSpec(**s) for s in d.get("domains", [])]
        return cls(**d)


def default_generator_config(
    n_sources=3,
    n_classes=5,
    input_dim=2,
    per_class=500,
    source_rotations=(0.0, 0.3, 0.6),
    target_rotation=1.0,
    noise_std=0.05,
):
    """Desk-scale rotation-shift task: M sources at staggered angles, one target."""
    if len(source_rotations) != n_sources:
        raise ConfigError("one source rotation per source domain required")
    domains = [
        DomainSpec(domain_id=i + 1, rotation_angle=float(a), noise_std=noise_std)
        for i, a in enumerate(source_rotations)
    ]
    domains.append(
        DomainSpec(
            domain_id=n_sources + 1,
            rotation_angle=float(target_rotation),
            noise_std=noise_std,
        )
    )
    return GeneratorConfig(
        n_sources=n_sources,
        n_classes=n_classes,
        input_dim=input_dim,
        per_class=per_class,
        domains=domains,
    )


def _class_means(config):
    means = np.zeros((config.n_classes, config.input_dim))
    for k in range(config.n_classes):
        angle = 2.0 * math.pi * k / config.n_classes
        means[k, 0] = config.mean_radius * math.cos(angle)
        means[k, 1] = config.mean_radius * math.sin(angle)
    return means


def _apply_domain(spec, x, rng):
    c, s = math.cos(spec.rotation_angle), math.sin(spec.rotation_angle)
    out = x.copy()
    out[:, 0] = c * x[:, 0] - s * x[:, 1]
    out[:, 1] = s * x[:, 0] + c * x[:, 1]
    out *= spec.scale
    if spec.translation:
        out += np.asarray(spec.translation, dtype=np.float64)
    if spec.noise_std > 0.0:
        out += spec.noise_std * rng.standard_normal(out.shape)
    return out


def generate(config, seed, out_dir, argv_line=None):
    """Write one CSV per domain plus meta.json; returns the file paths."""
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    means = _class_means(config)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(config.domains))]
    paths = []
    for spec, rng in zip(config.domains, streams):
        rows = []
        for k in range(config.n_classes):
            base = means[k] + config.class_std * rng.standard_normal(
                (config.per_class, config.input_dim)
            )
            shifted = _apply_domain(spec, base, rng)
            for r in shifted:
                rows.append((k + 1, r))
        path = os.path.join(out_dir, f"domain_{spec.domain_id}.csv")
        with open(path, "w") as f:
            if argv_line:
                f.write(f"# {argv_line}\n")
            cols = ",".join(f"f{i}" for i in range(config.input_dim))
            f.write(f"domain_id,label,{cols}\n")
            for label, feats in rows:
                f.write(f"{spec.domain_id},{label}," + ",".join(repr(v) for v in feats) + "\n")
        paths.append(path)
    meta = {
        "n_sources": config.n_sources,
        "n_classes": config.n_classes,
        "input_dim": config.input_dim,
        "seed": int(seed),
        "generator": config.to_dict(),
    }
    meta_path = os.path.join(out_dir, "meta.json")
    with open(meta_path, "w") as f:
        if argv_line:
            f.write('{"argv": ' + json.dumps(argv_line) + ",\n")
            body = json.dumps(meta, indent=1)
            f.write(body[1:].lstrip("\n"))
        else:
            json.dump(meta, f, indent=1)
        f.write("\n")
    return paths + [meta_path]


@dataclass
class DomainData:
    """All samples of one domain. ``pseudo`` exists on the target domain only;
    entries are 1..K where assigned and -1 where absent."""

    domain_id: int
    features: np.ndarray
    labels: np.ndarray
    is_target: bool = False
    pseudo: np.ndarray | None = None

    def __post_init__(self):
        if self.is_target and self.pseudo is None:
            self.pseudo = np.full(len(self.labels), -1, dtype=np.int64)

    def __len__(self):
        return self.features.shape[0]

    @property
    def train_labels(self):
        """Ground-truth labels for training; forbidden on the target domain."""
        if self.is_target:
            raise ContractError("training code must not read target labels")
        return self.labels


def load_datasets(data_dir):
    """Read meta.json + per-domain CSVs; returns (meta dict, list of DomainData)."""
    meta_path = os.path.join(data_dir, "meta.json")
    if not os.path.exists(meta_path):
        raise ConfigError(f"missing meta.json in {data_dir}")
    with open(meta_path) as f:
        meta = json.load(f)
    n_domains = meta["n_sources"] + 1
    datasets = []
    for did in range(1, n_domains + 1):
        path = os.path.join(data_dir, f"domain_{did}.csv")
        if not os.path.exists(path):
            raise ConfigError(f"missing dataset file {path}")
        feats, labels = [], []
        with open(path) as f:
            for line in f:
                if line.startswith("#") or line.startswith("domain_id"):
                    continue
                parts = line.rstrip("\n").split(",")
                labels.append(int(parts[1]))
                feats.append([float(v) for v in parts[2:]])
        datasets.append(
            DomainData(
                domain_id=did,
                features=np.asarray(feats, dtype=np.float64),
                labels=np.asarray(labels, dtype=np.int64),
                is_target=(did == n_domains),
            )
        )
    return meta, datasets


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        h.update(f.read())
    return h.hexdigest()


@dataclass
class DomainBatch:
    """One domain's slice of a mini-batch. Sources carry ``labels``; the target
    carries ``pseudo`` instead (-1 where unassigned)."""

    domain_id: int
    features: np.ndarray
    labels: np.ndarray | None = None
    pseudo: np.ndarray | None = None


@dataclass
class MiniBatch:
    """Per-domain sample sets, sources first, target last."""

    sets: list[DomainBatch]

    @property
    def total(self):
        return sum(b.features.shape[0] for b in self.sets)


def _make_batch(datasets, idx_per_domain):
    sets = []
    for data, idx in zip(datasets, idx_per_domain):
        if data.is_target:
            sets.append(
                DomainBatch(data.domain_id, data.features[idx], pseudo=data.pseudo[idx])
            )
        else:
            sets.append(
                DomainBatch(data.domain_id, data.features[idx], labels=data.labels[idx])
            )
    return MiniBatch(sets=sets)


def sample_batch(datasets, batch_size, rng):
    """One random batch: ``batch_size`` samples per domain, without replacement."""
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    for data in datasets:
        if batch_size > len(data):
            raise ConfigError(
                f"batch_size {batch_size} exceeds domain {data.domain_id} size {len(data)}"
            )
    idx = [rng.choice(len(d), size=batch_size, replace=False) for d in datasets]
    return _make_batch(datasets, idx)


def epoch_batches(datasets, batch_size, rng):
    """Yield ceil(N/batch_size) batches covering every sample exactly once.

    Each domain is shuffled independently; the final batch may be smaller when
    the domain size is not a multiple of batch_size.
    """
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    sizes = {len(d) for d in datasets}
    if len(sizes) != 1:
        raise ConfigError("all domains must have equal sample counts")
    n = sizes.pop()
    if batch_size > n:
        raise ConfigError(f"batch_size {batch_size} exceeds domain size {n}")
    perms = [rng.permutation(n) for _ in datasets]
    for start in range(0, n, batch_size):
        idx = [p[start : start + batch_size] for p in perms]
        yield _make_batch(datasets, idx)


def assign_pseudo_labels(target, predict_fn, threshold):
    """Set ``target.pseudo`` to argmax class where max probability >= threshold.

    Returns the number of confident assignments. A threshold of 0 labels every
    sample with its argmax.
    """
    if not target.is_target:
        raise ContractError("pseudo labels apply to the target domain only")
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError("pseudo-label threshold must lie in [0, 1]")
    probs = predict_fn(target.features)
    if probs.ndim != 2 or probs.shape[0] != len(target):
        raise ContractError("predict_fn must return one probability row per sample")
    conf = probs.max(axis=1)
    arg = probs.argmax(axis=1) + 1
    mask = conf >= threshold
    target.pseudo = np.where(mask, arg, -1).astype(np.int64)
    return int(mask.sum())

"""Deterministic scored-dataset generation and scoring reports.

All randomness for sample ``i`` flows from ``derive_seed(base_seed, i)``, so
the output does not depend on how samples are scheduled across threads.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import augment, distortion, jsonfmt, metrics
from .augment import AugmentSpec
from .distortion import KINDS, DistortionKind, DistortionRecord
from .errors import ContractError
from .metrics import QualityVector
from .nifti import load_volume, save_volume
from .volume import Volume, preprocess

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1

# every subset of the six kinds with at least two members, canonical order inside
MIXED_SUBSETS = tuple(
    combo for r in range(2, len(KINDS) + 1) for combo in itertools.combinations(KINDS, r)
)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, sample_id: int) -> int:
    """64-bit per-sample seed; avalanche mix of the base seed and the sample index."""
    return _splitmix64((int(base_seed) & MASK64) ^ _splitmix64(int(sample_id) & MASK64))


@dataclass
class SampleRecord:
    sample_id: int
    source_path: str
    seed: int
    augment: AugmentSpec
    distortions: List[DistortionRecord]
    target: QualityVector
    output_path: str = ""

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "source_path": self.source_path,
            "seed": self.seed,
            "augment": self.augment.to_dict(),
            "distortions": [d.to_dict() for d in self.distortions],
            "target": self.target.as_dict(),
            "output_path": self.output_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleRecord":
        return cls(
            sample_id=int(d["sample_id"]),
            source_path=d["source_path"],
            seed=int(d["seed"]),
            augment=AugmentSpec.from_dict(d["augment"]),
            distortions=[DistortionRecord.from_dict(x) for x in d["distortions"]],
            target=QualityVector(**d["target"]),
            output_path=d["output_path"],
        )


@dataclass
class DatasetConfig:
    n_samples: int
    base_seed: int
    mix_probability: float = 0.5
    size: int = 224
    augment: bool = True

    def __post_init__(self):
        if self.n_samples < 0:
            raise ValueError(f"n_samples must be >= 0, got {self.n_samples}")
        if not 0.0 <= self.mix_probability <= 1.0:
            raise ValueError(f"mix probability {self.mix_probability} outside [0, 1]")

    def echo(self, refs: Sequence[str]) -> dict:
        return {
            "base_seed": int(self.base_seed),
            "n_samples": int(self.n_samples),
            "mix_probability": float(self.mix_probability),
            "size": int(self.size),
            "augment": bool(self.augment),
            "refs": [str(r) for r in refs],
            "ranges": {
                "gamma": list(distortion.GAMMA_RANGE),
                "center": list(distortion.CENTER_RANGE),
                "f_c": list(distortion.CUTOFF_RANGE),
                "alpha": list(distortion.ALPHA_RANGE),
                "variance": list(distortion.VARIANCE_RANGE),
                "blur_scale": list(distortion.SCALE_RANGE),
                "blur_kernel": list(distortion.KERNEL_RANGE),
                "blur_sigma": list(distortion.SIGMA_RANGE),
                "translation": list(augment.TRANSLATION_RANGE),
                "rotation": list(augment.ROTATION_RANGE),
                "elastic_sigma": list(augment.ELASTIC_SIGMA_RANGE),
                "elastic_scale": list(augment.ELASTIC_SCALE_RANGE),
            },
        }


@dataclass
class DatasetManifest:
    config: dict
    records: List[SampleRecord] = field(default_factory=list)

    @property
    def base_seed(self) -> int:
        return int(self.config["base_seed"])

    def to_jsonl(self) -> str:
        return "".join(jsonfmt.dumps(r.to_dict()) + "\n" for r in self.records)

    def write(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        (out_dir / "config.json").write_text(jsonfmt.dumps(self.config) + "\n", encoding="utf-8")
        path = out_dir / "manifest.jsonl"
        path.write_text(self.to_jsonl(), encoding="utf-8")
        return path


def load_manifest(path) -> DatasetManifest:
    """Read ``manifest.jsonl`` (a file or the dataset directory) plus its config echo."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.jsonl"
    records = [SampleRecord.from_dict(json.loads(line))
               for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    cfg_path = path.parent / "config.json"
    config = json.loads(cfg_path.read_text(encoding="utf-8")) if cfg_path.exists() else {}
    return DatasetManifest(config, records)


def check_preprocessed(ref: Volume, size: int):
    if ref.dims != (size,) * 3:
        raise ContractError(f"reference dims {ref.dims} != {(size,) * 3}; preprocess first")
    if ref.data.min() < 0 or ref.data.max() > 1:
        raise ContractError("reference intensities outside [0, 1]; preprocess first")


def choose_kinds(rng: np.random.Generator, mix_probability: float) -> Tuple[DistortionKind, ...]:
    """One uniformly chosen kind, or with ``mix_probability`` a uniform subset of size 2-6."""
    if rng.random() < mix_probability:
        return MIXED_SUBSETS[int(rng.integers(len(MIXED_SUBSETS)))]
    return (KINDS[int(rng.integers(len(KINDS)))],)


def apply_distortions(vol: Volume, stages) -> Tuple[Volume, List[DistortionRecord], QualityVector]:
    """Apply ``(kind, params)`` stages in order; each score is measured against the stage input."""
    records = []
    target = {}
    for kind, params in stages:
        vol, rec = distortion.apply(kind, vol, params)
        records.append(rec)
        target[rec.kind.value] = rec.score
    return vol, records, QualityVector(**target)


def generate_sample(ref: Volume, seed: int, mix_probability: float, size: int = 224,
                    do_augment: bool = True,
                    forced: Optional[Sequence[Tuple[DistortionKind, dict]]] = None,
                    ) -> Tuple[Volume, SampleRecord]:
    """Augment ``ref`` then apply one or several random distortions.

    ``forced`` bypasses the random choice of kinds and parameters (an empty
    list applies no distortion). Unapplied kinds get target 1.
    """
    if not 0.0 <= mix_probability <= 1.0:
        raise ValueError(f"mix probability {mix_probability} outside [0, 1]")
    check_preprocessed(ref, size)
    rng = np.random.default_rng(int(seed))
    if do_augment:
        vol, spec = augment.random_augment(ref, rng)
    else:
        vol, spec = ref, AugmentSpec()
    if forced is None:
        kinds = choose_kinds(rng, mix_probability)
        stages = [(k, distortion.sample_params(k, rng)) for k in kinds]
    else:
        stages = sorted(((DistortionKind(k), p) for k, p in forced), key=lambda s: s[0].index)
    vol, records, target = apply_distortions(vol, stages)
    return vol, SampleRecord(0, "", int(seed), spec, records, target)


def replay_sample(ref: Volume, record: SampleRecord) -> Tuple[Volume, QualityVector]:
    """Rebuild a sample from its recorded augmentation and distortion parameters."""
    vol = augment.apply_spec(ref, record.augment)
    stages = [(d.kind, d.params) for d in record.distortions]
    vol, _, target = apply_distortions(vol, stages)
    return vol, target


def load_reference(path, size: int = 224) -> Volume:
    return preprocess(load_volume(path), size=size)


def generate_dataset(refs: Sequence, n_samples: int, base_seed: int, mix_probability: float,
                     out_dir, size: int = 224, workers: int = 1,
                     do_augment: bool = True) -> DatasetManifest:
    """Write ``n_samples`` distorted volumes plus ``manifest.jsonl`` and ``config.json``.

    Sample ``i`` uses ``refs[i % len(refs)]``. Output paths in the manifest are
    relative to ``out_dir``.
    """
    refs = [str(r) for r in refs]
    if not refs:
        raise ValueError("need at least one reference volume")
    cfg = DatasetConfig(n_samples, base_seed, mix_probability, size, do_augment)
    out_dir = Path(out_dir)
    (out_dir / "samples").mkdir(parents=True, exist_ok=True)

    used = sorted({i % len(refs) for i in range(n_samples)})
    volumes = {j: load_reference(refs[j], size) for j in used}

    def work(i: int) -> SampleRecord:
        seed = derive_seed(base_seed, i)
        vol, rec = generate_sample(volumes[i % len(refs)], seed, mix_probability, size,
                                   do_augment=do_augment)
        rel = f"samples/sample_{i:06d}.nii"
        save_volume(vol, out_dir / rel)
        rec.sample_id = i
        rec.source_path = refs[i % len(refs)]
        rec.output_path = rel
        return rec

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(work, range(n_samples)))
    else:
        records = [work(i) for i in range(n_samples)]

    manifest = DatasetManifest(cfg.echo(refs), records)
    manifest.write(out_dir)
    log.info("wrote %d samples to %s", n_samples, out_dir)
    return manifest


# --- reports -----------------------------------------------------------------

SCORE_COLUMNS = metrics.KIND_NAMES + ("aggregate",)
REPORT_COLUMNS = SCORE_COLUMNS + ("ssim", "psnr")


def _mean_sd(values: Iterable[Optional[float]]) -> dict:
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return {"mean": None, "sd": None, "n": 0}
    arr = np.asarray(vals, dtype=np.float64)
    return {"mean": float(arr.mean()), "sd": float(arr.std()), "n": len(vals)}


def score_pair(ref: Volume, img: Volume) -> dict:
    q = metrics.quality_from_pair(ref, img)
    row = metrics.scores_dict(q)
    try:
        row["ssim"] = metrics.ssim3d(ref, img)
    except ValueError:
        row["ssim"] = None
    row["psnr"] = metrics.psnr(ref, img)
    return row


def score_report(pairs: Sequence[Tuple[str, str]], loader=load_volume) -> dict:
    """Score every (reference, image) pair and summarise each column as mean and population SD.

    A failing pair is reported with an ``error`` entry; the rest are still scored.
    """
    rows = []
    for ref_path, img_path in pairs:
        row = {"ref": str(ref_path), "img": str(img_path)}
        try:
            row.update(score_pair(loader(ref_path), loader(img_path)))
        except (ValueError, OSError) as exc:
            row["error"] = str(exc)
        rows.append(row)
    ok = [r for r in rows if "error" not in r]
    summary = {c: _mean_sd(r[c] for r in ok) for c in REPORT_COLUMNS}
    return {"pairs": rows, "summary": summary}


def summarize_manifest(manifest: DatasetManifest) -> dict:
    """Mean and SD of the stored targets, plus the aggregate."""
    rows = [metrics.scores_dict(r.target) for r in manifest.records]
    return {"n": len(rows), "summary": {c: _mean_sd(r[c] for r in rows) for c in SCORE_COLUMNS}}


def format_table(summary: dict, columns: Sequence[str]) -> str:
    """Aligned ``column  mean +- sd`` text table."""
    lines = [f"{'metric':<10} {'mean':>10} {'sd':>10} {'n':>5}"]
    for c in columns:
        s = summary.get(c)
        if s is None:
            continue
        if s["mean"] is None:
            lines.append(f"{c:<10} {'-':>10} {'-':>10} {s['n']:>5}")
        else:
            lines.append(f"{c:<10} {s['mean']:>10.6f} {s['sd']:>10.6f} {s['n']:>5}")
    return "\n".join(lines)

import json
import re
from pathlib import Path

import numpy as np
import pytest

from mriq import QualityVector, Volume, apply_gibbs_ringing, load_volume, phantoms, save_volume
from mriq.distortion import DistortionKind
from mriq.errors import ContractError
from mriq import jsonfmt
from mriq.pipeline import (MIXED_SUBSETS, SampleRecord, _splitmix64, derive_seed, generate_dataset,
                           generate_sample, load_manifest, load_reference, replay_sample,
                           score_report, summarize_manifest)

SIZE = 16


@pytest.fixture(scope="module")
def refs(tmp_path_factory):
    d = tmp_path_factory.mktemp("refs")
    vols = [phantoms.smooth_phantom(SIZE), phantoms.step_phantom(SIZE), phantoms.sphere(SIZE)]
    paths = []
    for k, v in enumerate(vols):
        p = d / f"ref{k}.nii"
        save_volume(v, p)
        paths.append(str(p))
    return paths


def test_splitmix_reference_outputs():
    # published first two outputs of splitmix64 started from state 0
    assert _splitmix64(0) == 0xE220A8397B1DCDAF
    assert _splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_derive_seed_distinct_and_stable():
    seeds = [derive_seed(7, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert all(0 <= s < 2 ** 64 for s in seeds)
    assert derive_seed(7, 3) == derive_seed(7, 3) != derive_seed(8, 3)


def test_mixed_subsets():
    assert len(MIXED_SUBSETS) == 57
    assert all(2 <= len(s) <= 6 for s in MIXED_SUBSETS)
    assert len(set(MIXED_SUBSETS)) == 57


def test_forced_ghost_target():
    ref = phantoms.smooth_phantom(SIZE)
    _, rec = generate_sample(ref, 1, 0.0, size=SIZE, do_augment=False,
                             forced=[("ghost", {"alpha": 0.5, "axis": 0})])
    assert rec.target == QualityVector(ghost=0.5)
    assert rec.augment.is_identity


def test_forced_empty_is_clean():
    ref = phantoms.smooth_phantom(SIZE)
    out, rec = generate_sample(ref, 1, 0.0, size=SIZE, do_augment=False, forced=[])
    assert rec.target == QualityVector() and rec.distortions == []
    np.testing.assert_array_equal(out.data, ref.data)


def test_forced_stages_sorted_canonically():
    ref = phantoms.smooth_phantom(SIZE)
    _, rec = generate_sample(ref, 1, 0.0, size=SIZE, do_augment=False,
                             forced=[("blur", {"mode": "resample", "scale": 1.0}),
                                     ("contrast", {"gamma": 1.0})])
    assert [d.kind for d in rec.distortions] == [DistortionKind.CONTRAST, DistortionKind.BLUR]


def test_contract_checks():
    with pytest.raises(ContractError):
        generate_sample(phantoms.smooth_phantom(8), 1, 0.5, size=SIZE)
    with pytest.raises(ContractError):
        generate_sample(Volume(np.full((SIZE,) * 3, 2.0)), 1, 0.5, size=SIZE)
    with pytest.raises(ValueError):
        generate_sample(phantoms.smooth_phantom(SIZE), 1, 1.5, size=SIZE)


def test_mix_probability_extremes():
    ref = phantoms.smooth_phantom(SIZE)
    for seed in range(10):
        _, single = generate_sample(ref, seed, 0.0, size=SIZE, do_augment=False)
        _, mixed = generate_sample(ref, seed, 1.0, size=SIZE, do_augment=False)
        assert len(single.distortions) == 1
        assert 2 <= len(mixed.distortions) <= 6


@pytest.mark.parametrize("seed", [3, 17, 99])
def test_replay_matches(seed):
    ref = phantoms.smooth_phantom(SIZE)
    out, rec = generate_sample(ref, seed, 0.7, size=SIZE)
    again, target = replay_sample(ref, rec)
    assert np.max(np.abs(again.data - out.data)) < 1e-6
    assert np.allclose(target.as_array(), rec.target.as_array(), atol=1e-6)


def test_records_survive_serialization():
    ref = phantoms.smooth_phantom(SIZE)
    for seed in range(12):
        out, rec = generate_sample(ref, seed, 1.0, size=SIZE)
        back = SampleRecord.from_dict(json.loads(jsonfmt.dumps(rec.to_dict())))
        again, _ = replay_sample(ref, back)
        assert np.max(np.abs(again.data - out.data)) < 1e-6


def test_dataset_empty(tmp_path, refs):
    m = generate_dataset(refs, 0, 1, 0.5, tmp_path, size=SIZE)
    assert m.records == []
    assert (tmp_path / "manifest.jsonl").read_text() == ""
    assert json.loads((tmp_path / "config.json").read_text())["n_samples"] == 0


def test_dataset_round_robin_and_layout(tmp_path, refs):
    m = generate_dataset(refs, 12, 5, 0.5, tmp_path, size=SIZE)
    assert [r.source_path for r in m.records] == [refs[i % 3] for i in range(12)]
    assert [r.sample_id for r in m.records] == list(range(12))
    for r in m.records:
        assert (tmp_path / r.output_path).exists()
        assert r.seed == derive_seed(5, r.sample_id)
    lines = (tmp_path / "manifest.jsonl").read_text().splitlines()
    assert len(lines) == 12
    first = json.loads(lines[0])
    assert list(first) == ["sample_id", "source_path", "seed", "augment", "distortions",
                           "target", "output_path"]
    # fixed six-decimal floats
    target = re.search(r'"target": \{([^}]*)\}', lines[0]).group(1)
    values = re.findall(r'"\w+": ([^,]+)', target)
    assert len(values) == 6 and all(re.fullmatch(r"\d\.\d{6}", v) for v in values)


def test_dataset_reload_and_replay(tmp_path, refs):
    generate_dataset(refs, 6, 11, 0.5, tmp_path, size=SIZE)
    m = load_manifest(tmp_path)
    assert m.base_seed == 11 and len(m.records) == 6
    for rec in m.records:
        ref = load_reference(rec.source_path, SIZE)
        out, target = replay_sample(ref, rec)
        stored = load_volume(tmp_path / rec.output_path)
        # stored on disk as float32
        assert np.max(np.abs(stored.data - out.data)) < 1e-6
        assert np.allclose(target.as_array(), rec.target.as_array(), atol=1e-6)


def _tree_bytes(root: Path):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_dataset_deterministic_across_workers(tmp_path, refs):
    generate_dataset(refs, 8, 3, 0.5, tmp_path / "a", size=SIZE, workers=1)
    generate_dataset(refs, 8, 3, 0.5, tmp_path / "b", size=SIZE, workers=1)
    generate_dataset(refs, 8, 3, 0.5, tmp_path / "c", size=SIZE, workers=8)
    a, b, c = (_tree_bytes(tmp_path / k) for k in "abc")
    assert a == b == c


def test_summarize_manifest(tmp_path, refs):
    m = generate_dataset(refs, 10, 2, 0.0, tmp_path, size=SIZE)
    s = summarize_manifest(m)
    assert s["n"] == 10
    assert 0 <= s["summary"]["aggregate"]["mean"] <= 1
    # single-kind samples: each target has at most one score below 1
    for r in m.records:
        assert sum(x < 1 for x in r.target.as_array()) <= 1


def test_score_report_identical_pairs(tmp_path, refs):
    rep = score_report([(refs[0], refs[0]), (refs[1], refs[1])])
    s = rep["summary"]
    for col in ("contrast", "bias", "ring", "ghost", "noise", "blur", "aggregate"):
        assert s[col]["mean"] == 1.0 and s[col]["sd"] == 0.0
    assert s["ssim"]["mean"] == pytest.approx(1.0)
    assert s["psnr"]["n"] == 0  # infinite PSNR is left out of the average


def test_score_report_ring_column(tmp_path):
    ref = phantoms.step_phantom(32)
    img, _ = apply_gibbs_ringing(ref, 112)
    save_volume(ref, tmp_path / "r.nii")
    save_volume(img, tmp_path / "i.nii")
    rep = score_report([(tmp_path / "r.nii", tmp_path / "i.nii")])
    assert rep["summary"]["ring"]["mean"] == pytest.approx(0.5, abs=2 / 32)


def test_score_report_mismatch_recorded(tmp_path, refs):
    save_volume(phantoms.smooth_phantom(8), tmp_path / "small.nii")
    rep = score_report([(refs[0], tmp_path / "small.nii"), (refs[0], refs[0])])
    assert "error" in rep["pairs"][0] and "error" not in rep["pairs"][1]
    assert rep["summary"]["contrast"]["n"] == 1
    rep = score_report([(refs[0], tmp_path / "missing.nii")])
    assert "error" in rep["pairs"][0]

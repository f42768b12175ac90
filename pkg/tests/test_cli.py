import json

import numpy as np
import pytest

from edgebench.cli import main
from edgebench.enhance import ClaheParams, RetinexParams, clahe
from edgebench.evaluate import records_from_json
from edgebench.imagecore import load_image, save_image
from edgebench.pipeline import PipelineParams, parse_pipeline, run_pipeline
from edgebench.synthetic import make_corpus, write_corpus


@pytest.fixture()
def sample_image(tmp_path):
    _, img, _ = make_corpus(count=1, size=48)[0]
    path = tmp_path / "in.png"
    save_image(img, path)
    return path, img


def bench_manifest(tmp_path, count=2, size=48):
    # Small retinex scales keep CLI bench tests fast.
    params = PipelineParams(
        retinex=RetinexParams(scales=(2.0, 5.0)),
        clahe=ClaheParams(tiles_x=4, tiles_y=4),
    )
    return write_corpus(tmp_path / "corpus", count=count, size=size, params=params)


class TestEnhance:
    def test_single_method(self, sample_image, tmp_path):
        in_path, img = sample_image
        out_path = tmp_path / "out.png"
        assert main(["enhance", str(in_path), "clahe", str(out_path), "--tiles", "4"]) == 0
        out = load_image(out_path)
        assert out.shape == img.shape
        assert np.array_equal(out, clahe(img, ClaheParams(tiles_x=4, tiles_y=4)))

    def test_pipeline_equals_library(self, sample_image, tmp_path):
        in_path, img = sample_image
        out_path = tmp_path / "out.png"
        code = main(
            ["enhance", str(in_path), "brightening-retinex-clahe", str(out_path), "--scales", "2,5"]
        )
        assert code == 0
        params = PipelineParams(retinex=RetinexParams(scales=(2.0, 5.0)))
        expected = run_pipeline(img, parse_pipeline("brightening-retinex-clahe"), params)
        assert np.array_equal(load_image(out_path), expected)

    def test_unknown_method_is_usage_error(self, sample_image, tmp_path, capsys):
        in_path, _ = sample_image
        assert main(["enhance", str(in_path), "sharpen", str(tmp_path / "o.png")]) == 2
        assert "sharpen" in capsys.readouterr().err

    def test_missing_input(self, tmp_path, capsys):
        missing = tmp_path / "absent.png"
        assert main(["enhance", str(missing), "clahe", str(tmp_path / "o.png")]) == 1
        assert "absent.png" in capsys.readouterr().err


class TestCanny:
    def test_constant_image_black_output(self, tmp_path):
        in_path = tmp_path / "flat.png"
        save_image(np.full((16, 16, 3), 80, dtype=np.uint8), in_path)
        out_path = tmp_path / "edges.png"
        assert main(["canny", str(in_path), str(out_path)]) == 0
        assert not load_image(out_path).any()

    def test_threshold_flags(self, sample_image, tmp_path):
        in_path, _ = sample_image
        loose_path = tmp_path / "loose.png"
        tight_path = tmp_path / "tight.png"
        assert main(["canny", str(in_path), str(loose_path), "--low", "50", "--high", "150"]) == 0
        assert main(["canny", str(in_path), str(tight_path), "--low", "120", "--high", "150"]) == 0
        loose = load_image(loose_path) > 0
        tight = load_image(tight_path) > 0
        assert not (tight & ~loose).any()  # raising low only removes pixels

    def test_missing_input(self, tmp_path, capsys):
        assert main(["canny", str(tmp_path / "gone.png"), str(tmp_path / "o.png")]) == 1
        assert "gone.png" in capsys.readouterr().err


class TestBench:
    def test_outputs(self, tmp_path, capsys):
        manifest = bench_manifest(tmp_path)
        outdir = tmp_path / "results"
        assert main(["bench", str(manifest), "--out", str(outdir), "--jobs", "1"]) == 0
        table = (outdir / "table.csv").read_text().strip().split("\n")
        assert len(table) == 3  # header + 2 crops
        report = json.loads((outdir / "report.json").read_text())

        def count_nodes(node):
            return 1 + sum(count_nodes(c) for c in node.get("children", []))

        assert count_nodes(report) == 16
        records = records_from_json((outdir / "records.json").read_text())
        assert len(records) == 2 * 16
        for crop_dir in ("i0_crop_1", "i1_crop_1"):
            files = sorted(p.name for p in (outdir / crop_dir).iterdir())
            assert len(files) == 16
            assert "original.png" in files
            assert "brightening-clahe-retinex.png" in files
        out = capsys.readouterr().out
        assert "original tp sum" in out
        # everything lands under outdir
        produced = {p for p in tmp_path.rglob("*") if p.is_file()}
        outside = {p for p in produced if outdir not in p.parents and p.suffix != ".json" and "corpus" not in str(p)}
        assert not outside

    def test_jobs_equivalence(self, tmp_path):
        manifest = bench_manifest(tmp_path)
        out1 = tmp_path / "r1"
        out2 = tmp_path / "r2"
        assert main(["bench", str(manifest), "--out", str(out1), "--jobs", "1"]) == 0
        assert main(["bench", str(manifest), "--out", str(out2), "--jobs", "2"]) == 0
        for name in ("table.csv", "report.json", "records.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        pngs1 = sorted(p.relative_to(out1) for p in out1.rglob("*.png"))
        pngs2 = sorted(p.relative_to(out2) for p in out2.rglob("*.png"))
        assert pngs1 == pngs2
        for rel in pngs1:
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes()

    def test_idempotent_rerun(self, tmp_path):
        manifest = bench_manifest(tmp_path, count=1)
        outdir = tmp_path / "res"
        assert main(["bench", str(manifest), "--out", str(outdir), "--jobs", "1"]) == 0
        first = (outdir / "table.csv").read_bytes()
        assert main(["bench", str(manifest), "--out", str(outdir), "--jobs", "1"]) == 0
        assert (outdir / "table.csv").read_bytes() == first

    def test_mask_before_canny_changes_counts(self, tmp_path):
        # Rectangular mask: detecting on the blackened crop adds boundary
        # edges that the default order never sees.
        rng = np.random.default_rng(60)
        img = rng.integers(60, 200, (48, 48, 3), dtype=np.uint8)
        mask = np.zeros((48, 48), dtype=np.uint8)
        mask[12:36, 12:36] = 255
        corpus = tmp_path / "fixture"
        corpus.mkdir()
        save_image(img, corpus / "i0_crop_1.png")
        save_image(mask, corpus / "i0_crop_1_mask.png")
        manifest = {
            "output_dir": "results",
            "params": {"retinex": {"scales": [2, 5]}, "clahe": {"tiles_x": 4, "tiles_y": 4}},
            "entries": [{"crop_id": "i0_crop_1", "image": "i0_crop_1.png", "mask": "i0_crop_1_mask.png"}],
        }
        mpath = corpus / "manifest.json"
        mpath.write_text(json.dumps(manifest))
        plain = tmp_path / "plain"
        flipped = tmp_path / "flipped"
        assert main(["bench", str(mpath), "--out", str(plain), "--jobs", "1"]) == 0
        assert main(["bench", str(mpath), "--out", str(flipped), "--jobs", "1", "--mask-before-canny"]) == 0
        a = {(str(r.crop), r.pipeline and str(r.pipeline.steps)): r.tp_count
             for r in records_from_json((plain / "records.json").read_text())}
        b = {(str(r.crop), r.pipeline and str(r.pipeline.steps)): r.tp_count
             for r in records_from_json((flipped / "records.json").read_text())}
        assert a != b

    def test_rect_cropping(self, tmp_path):
        rng = np.random.default_rng(61)
        big = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
        root = tmp_path / "c"
        root.mkdir()
        save_image(big, root / "image.png")
        save_image(np.full((24, 24), 255, dtype=np.uint8), root / "mask.png")
        manifest = {
            "output_dir": "results",
            "params": {"retinex": {"scales": [2, 5]}, "clahe": {"tiles_x": 4, "tiles_y": 4}},
            "entries": [
                {"crop_id": "i0_crop_1", "image": "image.png", "mask": "mask.png", "rect": [10, 12, 24, 24]}
            ],
        }
        mpath = root / "manifest.json"
        mpath.write_text(json.dumps(manifest))
        assert main(["bench", str(mpath), "--jobs", "1"]) == 0
        assert (root / "results" / "table.csv").exists()

    def test_malformed_manifest_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["bench", str(bad)]) == 2
        bad.write_text(json.dumps({"entries": []}))
        assert main(["bench", str(bad)]) == 2
        bad.write_text(json.dumps({"entries": [{"crop_id": "nope", "image": "a", "mask": "b"}]}))
        assert main(["bench", str(bad)]) == 2
        dup = {"entries": [
            {"crop_id": "i0_crop_1", "image": "a.png", "mask": "b.png"},
            {"crop_id": "i0_crop_1", "image": "c.png", "mask": "d.png"},
        ]}
        bad.write_text(json.dumps(dup))
        assert main(["bench", str(bad)]) == 2
        capsys.readouterr()

    def test_unreadable_entry_continues(self, tmp_path, capsys):
        manifest_path = bench_manifest(tmp_path, count=2)
        payload = json.loads(manifest_path.read_text())
        payload["entries"].append(
            {"crop_id": "i9_crop_1", "image": "missing.png", "mask": "missing_mask.png"}
        )
        manifest_path.write_text(json.dumps(payload))
        outdir = tmp_path / "partial"
        assert main(["bench", str(manifest_path), "--out", str(outdir), "--jobs", "1"]) == 1
        err = capsys.readouterr().err
        assert "i9_crop_1" in err
        table = (outdir / "table.csv").read_text().strip().split("\n")
        assert len(table) == 3  # the two good crops still processed


class TestReport:
    def test_rebuild_from_cache(self, tmp_path, capsys):
        manifest = bench_manifest(tmp_path, count=1)
        outdir = tmp_path / "out"
        assert main(["bench", str(manifest), "--out", str(outdir), "--jobs", "1"]) == 0
        table = (outdir / "table.csv").read_bytes()
        report = (outdir / "report.json").read_bytes()
        (outdir / "table.csv").unlink()
        (outdir / "report.json").unlink()
        capsys.readouterr()
        assert main(["report", str(outdir)]) == 0
        assert (outdir / "table.csv").read_bytes() == table
        assert (outdir / "report.json").read_bytes() == report
        assert "original tp sum" in capsys.readouterr().out

    def test_missing_cache(self, tmp_path, capsys):
        assert main(["report", str(tmp_path)]) == 1
        capsys.readouterr()

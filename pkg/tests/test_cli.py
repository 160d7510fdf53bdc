import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from polypuzzle import corpus
from polypuzzle.cli import main
from polypuzzle.jsonio import dump_file, load_file

MAPS = Path(__file__).resolve().parent.parent / "maps"


def write_map(tmp_path, name, resolution):
    path = tmp_path / f"{name}.json"
    dump_file(corpus.map_document(name, resolution), path)
    return str(path)


@pytest.fixture()
def quad_map(tmp_path):
    return write_map(tmp_path, "quad_basic", 512)


class TestAnalyze:
    def test_bundle_and_exit_code(self, tmp_path, quad_map):
        out = tmp_path / "out"
        rc = main(["analyze", quad_map, "--depth", "5", "--out", str(out)])
        assert rc == 0
        for name in ("tree.json", "decomposition.json",
                     "classification.json", "manifest.json"):
            assert (out / name).exists()
        manifest = load_file(out / "manifest.json")
        for fname, digest in manifest["outputs"].items():
            actual = hashlib.sha256((out / fname).read_bytes()).hexdigest()
            assert digest == f"sha256:{actual}"

    def test_determinism(self, tmp_path, quad_map):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["analyze", quad_map, "--depth", "5", "--seed", "7",
                     "--out", str(out1)]) == 0
        assert main(["analyze", quad_map, "--depth", "5", "--seed", "7",
                     "--out", str(out2)]) == 0
        for name in ("tree.json", "decomposition.json",
                     "classification.json", "manifest.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_malformed_input_exit_two(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["analyze", str(bad), "--out",
                     str(tmp_path / "o")]) == 2

    def test_validation_failure_exit_two(self, tmp_path):
        # level below the escaping critical potential without the opt-in
        doc = corpus.map_document("cubic_bh", 512)
        doc["level_r"] = 0.1
        path = tmp_path / "low.json"
        dump_file(doc, path)
        assert main(["analyze", str(path), "--out",
                     str(tmp_path / "o")]) == 2

    def test_resolution_exhaustion_exit_three(self, tmp_path):
        path = write_map(tmp_path, "cubic_bh", 512)
        assert main(["analyze", str(path), "--depth", "12", "--out",
                     str(tmp_path / "o")]) == 3


class TestRender:
    def test_writes_figures(self, tmp_path, quad_map, capsys):
        out = tmp_path / "figs"
        rc = main(["render", quad_map, "--depth", "3",
                   "--depths", "0", "1", "2", "--out", str(out)])
        assert rc == 0
        pngs = sorted(out.glob("*.png"))
        assert [p.name for p in pngs] == [
            "pieces_depth00.png", "pieces_depth01.png", "pieces_depth02.png"]

    def test_vector_and_skip(self, tmp_path, quad_map, capsys):
        out = tmp_path / "figs"
        rc = main(["render", quad_map, "--depth", "2",
                   "--depths", "1", "9", "--vector", "--out", str(out)])
        assert rc == 0
        assert (out / "pieces_depth01.png").exists()
        assert (out / "pieces_depth01.svg").exists()
        err = capsys.readouterr().err
        assert "depth 9" in err and "skipped" in err


class TestTableau:
    def test_ascii_and_json(self, tmp_path, quad_map, capsys):
        out = tmp_path / "tab"
        rc = main(["tableau", quad_map, "--depth", "4", "--width", "6",
                   "--out", str(out)])
        assert rc == 0
        assert (out / "tableau_c0.json").exists()
        text = capsys.readouterr().out
        assert "tableau for critical point 0" in text


class TestClassify:
    def test_report(self, tmp_path, quad_map, capsys):
        out = tmp_path / "cls"
        rc = main(["classify", quad_map, "--depth", "6", "--out", str(out)])
        assert rc == 0
        doc = load_file(out / "classification.json")
        rec = doc["critical_points"][0]
        assert rec["tag"] == "Crit_p" and rec["periodic"]
        assert doc["cases"]["0"]["case"] == "Case2"
        assert "Crit_p periodic" in capsys.readouterr().out


class TestVerify:
    @pytest.mark.parametrize("suite", ["rules", "decomposition", "spreading"])
    def test_clean_suites_exit_zero(self, tmp_path, quad_map, suite):
        out = tmp_path / suite
        rc = main(["verify", quad_map, "--suite", suite, "--depth", "6",
                   "--out", str(out)])
        assert rc == 0
        report = (out / f"verify_{suite}.jsonl").read_text().splitlines()
        assert report
        assert all(json.loads(line)["verdict"] != "violation"
                   for line in report)

    def test_violations_exit_one(self, tmp_path, quad_map, monkeypatch):
        from polypuzzle import suites as suites_mod
        fake = {"rules": lambda tree, **kw: [
            {"lemma": "rule1", "instance": {}, "verdict": "violation",
             "witnesses": None}]}
        monkeypatch.setattr(suites_mod, "SUITES", fake)
        monkeypatch.setattr("polypuzzle.cli.run_suite",
                            lambda name, tree, **kw: fake[name](tree))
        rc = main(["verify", quad_map, "--suite", "rules", "--depth", "3",
                   "--out", str(tmp_path / "o")])
        assert rc == 1


class TestCompareCli:
    def _export(self, tmp_path, name, resolution, depth, tag):
        out = tmp_path / tag
        rc = main(["export", write_map(tmp_path, name, resolution),
                   "--depth", str(depth), "--out", str(out)])
        assert rc == 0
        return str(out / "tree.json")

    def test_isomorphic_pair(self, tmp_path, capsys):
        t1 = self._export(tmp_path, "quad_basic", 512, 5, "a")
        t2 = self._export(tmp_path, "quad_conj", 512, 5, "b")
        rc = main(["compare", t1, t2, "--out", str(tmp_path / "cmp")])
        assert rc == 0
        doc = load_file(tmp_path / "cmp" / "compare.json")
        assert doc["isomorphic"] and doc["depth_checked"] == 5

    def test_mismatch_pair(self, tmp_path):
        t1 = self._export(tmp_path, "quad_basic", 512, 4, "a")
        t2 = self._export(tmp_path, "cubic_unicrit", 512, 4, "b")
        rc = main(["compare", t1, t2, "--out", str(tmp_path / "cmp")])
        assert rc == 1
        doc = load_file(tmp_path / "cmp" / "compare.json")
        assert not doc["isomorphic"] and doc["mismatch_depth"] == 1


class TestExport:
    def test_outputs(self, tmp_path, quad_map):
        out = tmp_path / "exp"
        rc = main(["export", quad_map, "--depth", "4", "--out", str(out)])
        assert rc == 0
        csv_lines = (out / "pieces.csv").read_text().splitlines()
        assert csv_lines[0].startswith("depth,index,parent")
        assert len(csv_lines) == 1 + 5  # header + one piece per depth
        masks = load_file(out / "piece_masks.json")
        assert masks["schema"] == "polypuzzle.masks/1"
        assert len(masks["pieces"]) == 5


class TestConsoleScript:
    def test_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "polypuzzle.cli", "--version"],
            capture_output=True, text=True)
        assert proc.returncode == 0

    def test_installed_script_smoke(self, tmp_path):
        proc = subprocess.run(
            ["polypuzzle", "analyze", str(MAPS / "quad_basic.json"),
             "--depth", "3", "--resolution", "256",
             "--out", str(tmp_path / "o")],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr

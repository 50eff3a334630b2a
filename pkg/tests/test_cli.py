import json
import math

import numpy as np
import pytest

from latmech import io
from latmech.cli import dispatch
from latmech.fe import homogenize
from latmech.lattice import body_centred_cubic, diamond, simple_cubic
from latmech.tensor4 import ElasticTensor4, directional_modulus, to_mandel


@pytest.fixture
def catalogue_path(tmp_path):
    path = tmp_path / "cells.lats"
    io.write_catalogue(path, [simple_cubic(), body_centred_cubic(), diamond()])
    return path


def read_lines(path):
    return [json.loads(line) for line in open(path) if line.strip()]


class TestValidate:
    def test_ok(self, catalogue_path, capsys):
        assert dispatch(["validate", "--catalogue", str(catalogue_path)]) == 0
        out = capsys.readouterr().out
        assert "3 lattices" in out

    def test_rejects_with_line_number(self, tmp_path, capsys):
        path = tmp_path / "bad.lats"
        good = io.lattice_record(simple_cubic())
        bad = dict(good)
        bad["radius"] = -1.0
        path.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n")
        assert dispatch(["validate", "--catalogue", str(path)]) == 1
        err = capsys.readouterr().err
        assert "line 2" in err and "radius" in err

    def test_missing_file(self, tmp_path):
        assert dispatch(["validate", "--catalogue", str(tmp_path / "nope")]) == 1


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        assert dispatch(["frobnicate"]) == 2
        assert "usage" in capsys.readouterr().err.lower()

    def test_missing_required_flag(self, capsys):
        assert dispatch(["validate"]) == 2


class TestHomogenize:
    def test_writes_records_and_manifest(self, catalogue_path, tmp_path):
        out = tmp_path / "stiff.jsonl"
        code = dispatch(
            [
                "homogenize",
                "--catalogue", str(catalogue_path),
                "--radius", "0.05",
                "--radius", "0.08",
                "--material", "E=1,nu=0.3",
                "--out", str(out),
            ]
        )
        assert code == 0
        records = read_lines(out)
        assert len(records) == 6
        assert all(r["basis"] == "mandel" for r in records)
        manifest = json.loads((tmp_path / "stiff.jsonl.manifest.json").read_text())
        assert manifest["command"] == "homogenize"
        assert manifest["seed"] == 0
        assert manifest["tool_version"]

    def test_round_trip_bit_exact(self, catalogue_path, tmp_path):
        out = tmp_path / "stiff.jsonl"
        dispatch(
            ["homogenize", "--catalogue", str(catalogue_path), "--radius", "0.05",
             "--out", str(out)]
        )
        loaded = io.read_stiffness_records(out)
        direct = to_mandel(homogenize(simple_cubic(radius=0.05)).stiffness)
        np.testing.assert_array_equal(loaded[0][0].entries, direct.entries)

    def test_disconnected_lattice_exit_one(self, tmp_path, capsys):
        lat = io.lattice_record(simple_cubic())
        lat["name"] = "split"
        lat["nodes"] = [0.5, 0.5, 0.5, 0.25, 0.25, 0.25]
        path = tmp_path / "bad.lats"
        path.write_text(json.dumps(lat) + "\n")
        out = tmp_path / "out.jsonl"
        code = dispatch(
            ["homogenize", "--catalogue", str(path), "--radius", "0.05", "--out", str(out)]
        )
        assert code == 1
        assert "unreachable" in capsys.readouterr().err

    def test_rerun_bit_identical(self, catalogue_path, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        for out in (a, b):
            dispatch(
                ["homogenize", "--catalogue", str(catalogue_path), "--radius", "0.05",
                 "--out", str(out)]
            )
        assert a.read_text() == b.read_text()


class TestSurface:
    def test_table_shape_and_determinism(self, catalogue_path, tmp_path):
        stiff = tmp_path / "stiff.jsonl"
        dispatch(
            ["homogenize", "--catalogue", str(catalogue_path), "--radius", "0.05",
             "--out", str(stiff)]
        )
        table = tmp_path / "surf.tsv"
        code = dispatch(
            ["surface", "--stiffness", str(stiff), "-n", "40", "--seed", "3",
             "--out", str(table)]
        )
        assert code == 0
        lines = table.read_text().strip().splitlines()
        assert lines[0] == "dx\tdy\tdz\tmodulus"
        assert len(lines) == 41
        # rerun is bit-identical
        table2 = tmp_path / "surf2.tsv"
        dispatch(
            ["surface", "--stiffness", str(stiff), "-n", "40", "--seed", "3",
             "--out", str(table2)]
        )
        assert table.read_text() == table2.read_text()

    def test_empty_table(self, catalogue_path, tmp_path):
        stiff = tmp_path / "stiff.jsonl"
        dispatch(
            ["homogenize", "--catalogue", str(catalogue_path), "--radius", "0.05",
             "--out", str(stiff)]
        )
        table = tmp_path / "surf.tsv"
        assert dispatch(
            ["surface", "--stiffness", str(stiff), "-n", "0", "--out", str(table)]
        ) == 0
        assert len(table.read_text().strip().splitlines()) == 1

    def test_isotropic_constant_column(self, tmp_path):
        stiff = tmp_path / "iso.jsonl"
        io.write_stiffness_records(
            stiff, [io.stiffness_record(to_mandel(ElasticTensor4.isotropic(1.0, 1.0)))]
        )
        table = tmp_path / "surf.tsv"
        dispatch(["surface", "--stiffness", str(stiff), "-n", "25", "--out", str(table)])
        values = [float(line.split("\t")[3]) for line in table.read_text().splitlines()[1:]]
        assert max(values) - min(values) < 1e-12 * max(values)

    def test_simple_cubic_axis_stiffer_than_diagonal(self, catalogue_path, tmp_path):
        stiff = tmp_path / "stiff.jsonl"
        dispatch(
            ["homogenize", "--catalogue", str(catalogue_path), "--radius", "0.05",
             "--out", str(stiff)]
        )
        matrix, _ = io.read_stiffness_records(stiff)[0]
        from latmech.tensor4 import from_mandel

        c = from_mandel(matrix)
        axis = directional_modulus(c, [1.0, 0.0, 0.0])
        diagonal = directional_modulus(c, np.ones(3) / math.sqrt(3.0))
        assert axis > diagonal


class TestPsdProject:
    def test_square_method(self, tmp_path, rng):
        from conftest import random_symmetric_matrix

        m = random_symmetric_matrix(rng)
        src = tmp_path / "m.jsonl"
        io.write_stiffness_records(src, [io.stiffness_record(m)])
        out = tmp_path / "p.jsonl"
        code = dispatch(
            ["psd-project", "--input", str(src), "--method", "square", "--out", str(out)]
        )
        assert code == 0
        loaded, _ = io.read_stiffness_records(out)[0]
        np.testing.assert_allclose(loaded.entries, m @ m, atol=1e-14)

    def test_all_method_names(self, tmp_path, rng):
        from conftest import random_symmetric_matrix

        src = tmp_path / "m.jsonl"
        io.write_stiffness_records(src, [io.stiffness_record(random_symmetric_matrix(rng))])
        for method in ("square", "fourth", "exp", "trunc2", "trunc4", "eigclamp"):
            out = tmp_path / f"{method}.jsonl"
            assert dispatch(
                ["psd-project", "--input", str(src), "--method", method, "--out", str(out)]
            ) == 0
            loaded, _ = io.read_stiffness_records(out)[0]
            assert np.linalg.eigvalsh(loaded.entries).min() >= -1e-10 * np.linalg.norm(
                loaded.entries
            )


class TestMetrics:
    def test_self_comparison_all_zero(self, catalogue_path, tmp_path, capsys):
        stiff = tmp_path / "stiff.jsonl"
        dispatch(
            ["homogenize", "--catalogue", str(catalogue_path), "--radius", "0.05",
             "--out", str(stiff)]
        )
        code = dispatch(
            ["metrics", "--pred", str(stiff), "--target", str(stiff), "--dirs", "30"]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["l_comp"] == 0.0
        assert report["l_dir"] == 0.0
        assert report["l_dir_rel"] == 0.0
        assert report["negative_eig_fraction"] == 0.0
        assert report["l_equiv"] is None

    def test_mismatched_lengths(self, catalogue_path, tmp_path, capsys):
        stiff = tmp_path / "stiff.jsonl"
        dispatch(
            ["homogenize", "--catalogue", str(catalogue_path), "--radius", "0.05",
             "--out", str(stiff)]
        )
        short = tmp_path / "short.jsonl"
        short.write_text(open(stiff).readline())
        assert dispatch(
            ["metrics", "--pred", str(stiff), "--target", str(short)]
        ) == 1


class TestPerturbCommand:
    def test_expands_catalogue(self, catalogue_path, tmp_path, capsys):
        out = tmp_path / "perturbed.lats"
        code = dispatch(
            ["perturb", "--catalogue", str(catalogue_path), "--level", "0.1",
             "--seed", "4", "--realizations", "3", "--out", str(out)]
        )
        assert code == 0
        # simple cubic (1 node) is skipped with a warning; bcc+diamond expand
        lattices = io.read_catalogue(out)
        assert len(lattices) == 6
        assert "skipped" in capsys.readouterr().err

    def test_seeded_rerun_identical(self, catalogue_path, tmp_path):
        a = tmp_path / "a.lats"
        b = tmp_path / "b.lats"
        for out in (a, b):
            dispatch(
                ["perturb", "--catalogue", str(catalogue_path), "--level", "0.05",
                 "--seed", "9", "--realizations", "2", "--out", str(out)]
            )
        assert a.read_text() == b.read_text()


class TestRotateCommand:
    def test_rotate_catalogue(self, catalogue_path, tmp_path):
        out = tmp_path / "rot.lats"
        code = dispatch(
            ["rotate", "--catalogue", str(catalogue_path), "--axis", "0,0,1",
             "--angle-deg", "90", "--out", str(out)]
        )
        assert code == 0
        rotated = io.read_catalogue(out)
        assert len(rotated) == 3
        base = simple_cubic()
        np.testing.assert_allclose(
            rotated[0].cell,
            np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]) @ base.cell,
            atol=1e-12,
        )

    def test_rotate_stiffness_consistent_with_lattice_rotation(
        self, catalogue_path, tmp_path
    ):
        stiff = tmp_path / "stiff.jsonl"
        dispatch(
            ["homogenize", "--catalogue", str(catalogue_path), "--radius", "0.05",
             "--out", str(stiff)]
        )
        rot_stiff = tmp_path / "rot_stiff.jsonl"
        dispatch(
            ["rotate", "--stiffness", str(stiff), "--random", "--seed", "5",
             "--out", str(rot_stiff)]
        )
        rot_cat = tmp_path / "rot.lats"
        dispatch(
            ["rotate", "--catalogue", str(catalogue_path), "--random", "--seed", "5",
             "--out", str(rot_cat)]
        )
        stiff2 = tmp_path / "stiff2.jsonl"
        dispatch(["homogenize", "--catalogue", str(rot_cat), "--radius", "0.05",
                  "--out", str(stiff2)])
        a = io.read_stiffness_records(rot_stiff)
        b = io.read_stiffness_records(stiff2)
        for (ma, _), (mb, _) in zip(a, b):
            np.testing.assert_allclose(ma.entries, mb.entries, atol=1e-10)

    def test_requires_exactly_one_input(self, catalogue_path, tmp_path, capsys):
        assert dispatch(["rotate", "--out", str(tmp_path / "x")]) == 2


class TestOptimizeCommand:
    def test_end_to_end(self, tmp_path, capsys):
        from latmech.lattice import perturb, tessellate

        lat = perturb(tessellate(simple_cubic(), 2), 0.02, seed=11)
        cat = tmp_path / "cells.lats"
        io.write_catalogue(cat, [lat])
        m = to_mandel(homogenize(lat).stiffness).entries.copy()
        scale = np.ones((6, 6))
        scale[1, :] *= 0.9
        scale[:, 1] *= 0.9
        scale[1, 1] = 0.9
        target = tmp_path / "target.jsonl"
        io.write_stiffness_records(target, [io.stiffness_record(m * scale)])
        out = tmp_path / "trace.json"
        code = dispatch(
            ["optimize", "--catalogue", str(cat), "--name", lat.name,
             "--target", str(target), "--steps", "5", "--out", str(out)]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        history = payload["objective_history"]
        assert history[-1] < history[0]
        assert all(b <= a for a, b in zip(history, history[1:]))
        assert payload["final_stiffness"]["basis"] == "mandel"
        io.lattice_from_record(payload["final_lattice"])

    def test_unknown_lattice_name(self, catalogue_path, tmp_path):
        target = tmp_path / "target.jsonl"
        io.write_stiffness_records(target, [io.stiffness_record(np.eye(6))])
        assert dispatch(
            ["optimize", "--catalogue", str(catalogue_path), "--name", "nope",
             "--target", str(target), "--out", str(tmp_path / "t.json")]
        ) == 1


class TestRecordRoundTrip:
    def test_bit_exact_floats(self, tmp_path, rng):
        from conftest import random_symmetric_matrix

        values = random_symmetric_matrix(rng) * 1e-7
        path = tmp_path / "r.jsonl"
        io.write_stiffness_records(
            path, [io.stiffness_record(values, relative_density=0.0123456789012345678)]
        )
        loaded, raw = io.read_stiffness_records(path)[0]
        np.testing.assert_array_equal(loaded.entries, values)
        assert raw["relative_density"] == 0.0123456789012345678

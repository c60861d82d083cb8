import json
from pathlib import Path

import numpy as np
import pytest

from pgrod import config as cfg
from pgrod.cli import EXIT_CONFIG, EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_SINGULAR, main
from pgrod.errors import ConfigError
from pgrod.experiments import read_csv

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).parent / "golden"


def generic(**extra):
    return {
        "experiment": "generic",
        "kind": "se3",
        "n_el": 2,
        "section": {"shape": "circular", "radius": 0.05, "E": 1.0, "G": 0.5},
        "boundary": {"clamped": [0]},
        **extra,
    }


def write_config(tmp_path, config):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return str(path)


class TestValidation:
    def test_valid(self):
        assert cfg.validate(generic()) == generic()

    @pytest.mark.parametrize(
        "change,path",
        [
            ({"kind": "se4"}, "$.kind"),
            ({"foo": 1}, "$.foo"),
            ({"loads": {"force_1": [1.0, 2.0]}}, "$.loads.force_1"),
            ({"loads": {"forc": [1.0, 2.0, 3.0]}}, "$.loads.forc"),
            ({"experiment": "bridge"}, "$.experiment"),
            ({"kind": "se3", "order": 2}, "$.order"),
            ({"analysis": "dynamic"}, "$.dynamic"),
            ({"schema_version": 2}, "$.schema_version"),
        ],
    )
    def test_error_names_field(self, change, path):
        with pytest.raises(ConfigError) as info:
            cfg.validate({**generic(), **change})
        assert info.value.path == path
        assert path in str(info.value)

    def test_missing_key(self):
        config = generic()
        del config["section"]
        with pytest.raises(ConfigError, match=r"\$\.section"):
            cfg.validate(config)

    def test_bad_value_reported_before_missing_key(self):
        config = {"experiment": "generic", "kind": "se4"}
        with pytest.raises(ConfigError) as info:
            cfg.validate(config)
        assert info.value.path == "$.kind"

    def test_shipped_config(self):
        config = cfg.load(ROOT / "configs" / "cantilever.json")
        assert config["experiment"] == "cantilever"

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            cfg.load(tmp_path / "missing.json")
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(ConfigError):
            cfg.load(tmp_path / "bad.json")


class TestExitCodes:
    def test_success(self, tmp_path, capsys):
        assert main(["quarter-circle", "--out", str(tmp_path), "--kind", "se3"]) == EXIT_OK
        assert (tmp_path / "quarter_circle_se3_p1.csv").exists()
        assert "se3" in capsys.readouterr().out

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["cantilever", "--kind", "se4"])
        assert info.value.code == EXIT_CONFIG

    def test_config_error(self, tmp_path, capsys):
        assert main(["run", write_config(tmp_path, generic(kind="se4"))]) == EXIT_CONFIG
        assert "$.kind" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        assert main(["run", write_config(tmp_path, generic(section_shape="circular"))]) == EXIT_CONFIG
        assert "$.section_shape" in capsys.readouterr().err

    def test_no_convergence(self, tmp_path, capsys):
        config = generic(loads={"moment_1": [0.0, 0.0, 1.0]}, static={"n_load_steps": 1, "max_iter": 2})
        assert main(["run", write_config(tmp_path, config)]) == EXIT_NO_CONVERGENCE
        assert "solver error" in capsys.readouterr().err

    def test_singular(self, tmp_path, capsys):
        # relative nodal rotation of pi has no unique interpolating geodesic
        q0 = [0, 0, 0, 0, 0, 0, 1, 0, 0, np.pi, 0, 0]
        config = generic(kind="r3so3", n_el=1, q0=q0, boundary={})
        assert main(["run", write_config(tmp_path, config)]) == EXIT_SINGULAR
        assert "AngleAtPi" in capsys.readouterr().err

    def test_mismatched_q0(self, tmp_path):
        assert main(["run", write_config(tmp_path, generic(q0=[0.0] * 6))]) == EXIT_CONFIG


class TestOutputs:
    def test_headers(self, tmp_path):
        main(["run", write_config(tmp_path, generic(out=str(tmp_path), name="rest"))])
        lines = (tmp_path / "rest_state.csv").read_text().splitlines()
        assert lines[0] == "# pgrod schema_version=1"
        assert lines[1].startswith("# units: xi [1], r_x [m]")
        assert lines[2] == "xi,r_x,r_y,r_z,psi_x,psi_y,psi_z"

    def test_out_override(self, tmp_path):
        config = generic(out=str(tmp_path / "a"), name="rest")
        main(["run", write_config(tmp_path, config), "--out", str(tmp_path / "b")])
        assert (tmp_path / "b" / "rest_state.csv").exists()
        assert not (tmp_path / "a").exists()

    def test_quarter_circle_deterministic(self, tmp_path):
        main(["quarter-circle", "--out", str(tmp_path / "a")])
        main(["quarter-circle", "--out", str(tmp_path / "b")])
        for f in (tmp_path / "a").iterdir():
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("replay")
    cache = str(base / "cache")
    config = json.loads((ROOT / "configs" / "cantilever.json").read_text())
    config["reference"]["cache_dir"] = cache
    path = base / "config.json"
    path.write_text(json.dumps(config))
    assert main(["run", str(path), "--out", str(base / "config")]) == EXIT_OK
    argv = ["cantilever", "--kind", "se3", "--nel", "4", "--nel", "8", "--rho", "100"]
    argv += ["--reference-nel", "16", "--reference", cache, "--out", str(base / "cli")]
    assert main(argv) == EXIT_OK
    return base


@pytest.mark.slow
class TestReplay:
    def test_config_and_cli_agree(self, runs):
        for f in sorted((runs / "config").glob("*.csv")):
            assert f.read_bytes() == (runs / "cli" / f.name).read_bytes()

    def test_golden(self, runs):
        golden = sorted(GOLDEN.glob("*.csv"))
        assert len(golden) == 3
        for f in golden:
            produced = runs / "config" / f.name
            assert produced.read_text().splitlines()[:3] == f.read_text().splitlines()[:3]
            np.testing.assert_allclose(read_csv(produced)[1], read_csv(f)[1], rtol=1e-9, atol=1e-9)

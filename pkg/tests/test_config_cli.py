"""INI model configs, CLI subcommands, determinism, and report schemas."""
import importlib.resources
import json

import jsonschema
import numpy as np
import pytest

from geoconnect import (
    ConfigError, christoffel_eval, metric_eval, model_from_config_text,
    model_registry,
)
from geoconnect.cli import main


def _schema(name: str) -> dict:
    text = (importlib.resources.files("geoconnect") / "schemas" / name).read_text()
    return json.loads(text)


# ----------------------------- config parsing ------------------------------

def test_builtin_config():
    model = model_from_config_text("[manifold]\ntype = builtin\nname = sphere2\n")
    assert model.name == "sphere2"
    assert model.dim == 2


def test_builtin_config_with_dim():
    model = model_from_config_text(
        "[manifold]\ntype = builtin\nname = minkowski\ndim = 4\n")
    assert model.dim == 4


def test_dsl_config_matches_builtin_metric():
    """A DSL hyperbolic plane reproduces the builtin one, Christoffels included."""
    text = (
        "[manifold]\n"
        "type = dsl\n"
        "name = dsl-hyperbolic\n"
        "dim = 2\n"
        "signature = +,+\n"
        "g_1_1 = 1/x2^2\n"
        "g_2_2 = 1/x2^2\n"
        "lower = -inf, 1e-8\n"
        "upper = inf, inf\n"
    )
    model = model_from_config_text(text)
    builtin = model_registry("hyperbolic2")
    rng = np.random.default_rng(8)
    for _ in range(5):
        x = np.array([rng.uniform(-2, 2), rng.uniform(0.3, 3.0)])
        assert np.allclose(metric_eval(model, x), metric_eval(builtin, x),
                           atol=1e-12)
        assert np.allclose(christoffel_eval(model, x),
                           christoffel_eval(builtin, x), atol=1e-6)


def test_dsl_config_off_diagonal_symmetric():
    text = (
        "[manifold]\ntype = dsl\ndim = 2\n"
        "g_1_1 = 1\ng_2_2 = 1\ng_1_2 = x1*0.1\n"
    )
    model = model_from_config_text(text)
    g = np.asarray(model.metric(np.array([2.0, 0.0])))
    assert g[0, 1] == g[1, 0] == 0.2


@pytest.mark.parametrize("text,fragment", [
    ("[other]\nname = x\n", "missing [manifold]"),
    ("[manifold]\ntype = builtin\n", "needs a name"),
    ("[manifold]\ntype = builtin\nname = sphere2\ng_1_1 = 1\n", "unknown keys"),
    ("[manifold]\ntype = magic\n", "unknown model type"),
    ("[manifold]\ntype = dsl\n", "integer dim"),
    ("[manifold]\ntype = dsl\ndim = 2\nsignature = +\n", "signature"),
    ("[manifold]\ntype = dsl\ndim = 2\nsignature = +,?\n", "signature"),
    ("[manifold]\ntype = dsl\ndim = 2\ng_2_1 = 1\n", "upper triangle"),
    ("[manifold]\ntype = dsl\ndim = 2\ng_1_3 = 1\n", "out of range"),
    ("[manifold]\ntype = dsl\ndim = 2\nbogus = 1\n", "unknown key"),
    ("[manifold]\ntype = dsl\ndim = 2\ng_1_1 = 1+\n", "in g_1_1"),
    ("[manifold]\ntype = dsl\ndim = 2\nlower = 0\n", "bounds need 2"),
    ("not ini at all [", "malformed config"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError) as exc:
        model_from_config_text(text)
    assert fragment in str(exc.value)


# --------------------------------- CLI -------------------------------------

def test_cli_models(capsys):
    assert main(["models"]) == 0
    out = capsys.readouterr().out
    for name in ["euclidean", "sphere2", "desitter", "clifton_pohl"]:
        assert name in out
    assert main(["models", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert any(r["name"] == "sphere2" and r["has_oracle"] for r in rows)


def test_cli_shoot_csv(capsys):
    rc = main(["shoot", "--model", "euclidean", "--dim", "2",
               "--from", "0,0", "--vel", "1,2", "--tmax", "2",
               "--samples", "5"])
    assert rc == 0
    captured = capsys.readouterr()
    lines = captured.out.strip().splitlines()
    assert lines[0] == "t,x1,x2,v1,v2"
    last = [float(c) for c in lines[-1].split(",")]
    assert last == pytest.approx([2.0, 2.0, 4.0, 1.0, 2.0])
    assert "termination: ReachedTmax" in captured.err


def test_cli_exp(capsys):
    rc = main(["exp", "--model", "minkowski", "--dim", "2",
               "--from", "1,1", "--vel", "0.5,-0.25"])
    assert rc == 0
    vals = [float(c) for c in capsys.readouterr().out.strip().split(",")]
    assert vals == pytest.approx([1.5, 0.75])


def test_cli_connect_json_and_schema(capsys):
    rc = main(["connect", "--model", "sphere2", "--from", "1.2,0.1",
               "--to", "1.8,1.0", "--json"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "Connected"
    jsonschema.validate(report, _schema("connect_report.schema.json"))


def test_cli_connect_failure_exit_code(capsys):
    rc = main(["connect", "--model", "clifton_pohl",
               "--from", "1,0", "--to=-1,0", "--json"])
    assert rc == 2
    report = json.loads(capsys.readouterr().out)
    assert report["status"] != "Connected"
    jsonschema.validate(report, _schema("connect_report.schema.json"))


def test_cli_conj_locus_csv(capsys):
    rc = main(["conj-locus", "--model", "sphere2", "--point", "1.3,0.4",
               "--count", "8", "--tmax", "4", "--refine", "0"])
    assert rc == 0
    captured = capsys.readouterr()
    lines = captured.out.strip().splitlines()
    assert lines[0] == "dir_index,u1,u2,t_star,c1,c2,status"
    assert len(lines) == 9
    conj = [l for l in lines[1:] if l.endswith("conjugate")]
    assert conj
    t_star = float(conj[0].split(",")[3])
    assert t_star == pytest.approx(np.pi, abs=1e-5)
    assert "diagnostics" in captured.err


def test_cli_probe_schema_and_exit_codes(capsys):
    schema = _schema("probe_report.schema.json")
    rc = main(["probe", "--model", "euclidean", "--dim", "2",
               "--kind", "weakproper", "--point", "0,0", "--family", "radial"])
    assert rc == 0
    jsonschema.validate(json.loads(capsys.readouterr().out), schema)
    rc = main(["probe", "--model", "desitter", "--kind", "weakproper",
               "--point", "0,0", "--family", "hyperboloid",
               f"--gnorm={np.pi!r}"])
    assert rc == 2  # violation is a geometric failure
    jsonschema.validate(json.loads(capsys.readouterr().out), schema)
    rc = main(["probe", "--model", "sphere2", "--kind", "gauss",
               "--point", "1.4,0.3", "--tmax", "1.0"])
    assert rc == 0
    jsonschema.validate(json.loads(capsys.readouterr().out), schema)
    rc = main(["probe", "--model", "sphere2", "--kind", "disprison",
               "--point", "1.5,0.0", "--count", "2", "--tmax", "5"])
    assert rc == 0
    jsonschema.validate(json.loads(capsys.readouterr().out), schema)
    rc = main(["probe", "--model", "euclidean", "--dim", "2",
               "--kind", "pseudoconvex", "--box=-1,-1;1,1",
               "--count", "8", "--tmax", "2"])
    assert rc == 0
    jsonschema.validate(json.loads(capsys.readouterr().out), schema)


def test_cli_convex_check(capsys):
    rc = main(["convex-check", "--model", "euclidean", "--dim", "2",
               "--f", "x1^2 + x2^2", "--count", "10", "--seed", "1"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "pass"
    jsonschema.validate(report, _schema("probe_report.schema.json"))
    rc = main(["convex-check", "--model", "euclidean", "--dim", "2",
               "--f", "-(x1^2 + x2^2)", "--count", "10", "--seed", "1"])
    assert rc == 2
    assert json.loads(capsys.readouterr().out)["verdict"] == "fail"


def test_cli_seed_determinism(capsys):
    argv = ["convex-check", "--model", "euclidean", "--dim", "2",
            "--f", "x1^2", "--count", "12", "--seed", "7"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_cli_config_file(tmp_path, capsys):
    cfgfile = tmp_path / "model.ini"
    cfgfile.write_text("[manifold]\ntype = builtin\nname = euclidean\ndim = 2\n")
    rc = main(["exp", "--config", str(cfgfile), "--from", "0,0", "--vel", "1,1"])
    assert rc == 0
    vals = [float(c) for c in capsys.readouterr().out.strip().split(",")]
    assert vals == pytest.approx([1.0, 1.0], abs=1e-9)


def test_cli_exit_codes(capsys, tmp_path):
    # usage error: unknown subcommand
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    capsys.readouterr()
    # usage error: missing required argument
    with pytest.raises(SystemExit) as exc:
        main(["exp", "--model", "sphere2", "--from", "1,1"])
    assert exc.value.code == 1
    capsys.readouterr()
    # model error: unknown builtin
    assert main(["exp", "--model", "nosuch", "--from", "0,0", "--vel", "1,1"]) == 3
    capsys.readouterr()
    # model error: broken config file
    bad = tmp_path / "bad.ini"
    bad.write_text("[manifold]\ntype = dsl\ndim = 2\ng_1_1 = 1+\n")
    assert main(["exp", "--config", str(bad), "--from", "0,0", "--vel", "1,1"]) == 3
    capsys.readouterr()
    # geometric error: exp leaves the chart
    assert main(["exp", "--model", "sphere2", "--from", "0.5,0",
                 "--vel=-1,0"]) == 2
    capsys.readouterr()

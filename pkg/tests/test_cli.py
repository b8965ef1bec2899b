import json
import shutil
import subprocess
import sys

import pytest

from divkit.cli import bundled_corpus_dir, run_corpus, run_job, RunOptions
from divkit.dsl import parse


def run_cli(args, **kw):
    return subprocess.run(
        [sys.executable, "-m", "divkit.cli", *args],
        capture_output=True,
        text=True,
        **kw,
    )


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_exit_codes(tmp_path):
    ok = write(tmp_path, "ok.dk", "chart x,y; check_poisson x*Dx^^Dy;")
    assert run_cli(["run", str(ok)]).returncode == 0
    bad = write(
        tmp_path, "bad.dk", "chart x,y,z,w; check_poisson x*Dx^^Dy + Dz^^Dw + Dx^^Dw;"
    )
    assert run_cli(["run", str(bad)]).returncode == 1
    syntax = write(tmp_path, "syntax.dk", "chart x,y; check_poisson q;")
    r = run_cli(["run", str(syntax), "--json"])
    assert r.returncode == 2
    assert json.loads(r.stdout)["verdict"] == "error"


def test_json_byte_stability(tmp_path):
    job = write(tmp_path, "j.dk", "chart x,y; pi = x^2*Dx^^Dy; lift pi to frame log(x);")
    a = run_cli(["run", str(job), "--json"]).stdout
    b = run_cli(["run", str(job), "--json"]).stdout
    assert a == b
    cert = json.loads(a)
    assert cert["payload"]["lifted"] == "x*e1^^e2"
    assert cert["payload"]["residual_ideal"] == "x"
    assert cert["payload"]["nondegenerate"] is False


def test_bundled_corpus_passes(capsys):
    assert run_corpus(bundled_corpus_dir(), RunOptions()) == 0
    out = capsys.readouterr().out
    assert "jobs match" in out


def test_corpus_perturbation_fails(tmp_path):
    src = bundled_corpus_dir()
    for f in src.iterdir():
        shutil.copy(f, tmp_path / f.name)
    target = tmp_path / "09_modular_x.expected.json"
    target.write_text(target.read_text().replace("Dy", "Dx"))
    r = run_cli(["corpus", str(tmp_path)])
    assert r.returncode == 1
    assert "FAIL" in r.stdout
    assert "09_modular_x.dk" in r.stdout


def test_corpus_empty(tmp_path):
    r = run_cli(["corpus", str(tmp_path)])
    assert r.returncode == 0
    assert "0 jobs" in r.stdout


def test_strict_rejects_heuristic(tmp_path):
    # rank-2 bivector in dim 4: the line certificate is sampled
    job = write(
        tmp_path,
        "s.dk",
        "chart x,y,z,w; pi = x*Dx^^Dy + x^2*Dx^^Dw; divisor pi;",
    )
    assert run_cli(["run", str(job)]).returncode == 0
    r = run_cli(["--strict", "run", str(job), "--json"])
    assert r.returncode == 2
    assert "heuristic" in json.loads(r.stdout)["error"]


def test_seed_grid_override(tmp_path):
    # with a grid containing the origin the vanishing line section is caught
    job = write(
        tmp_path,
        "g.dk",
        "chart x,y,z; pi = x*Dx^^Dy + z*Dz^^Dy; divisor pi;",
    )
    assert run_cli(["run", str(job)]).returncode == 0
    r = run_cli(["--seed-grid", "0,1,2", "run", str(job), "--json"])
    assert r.returncode == 1
    assert "vanishes at sample point" in json.loads(r.stdout)["payload"]["reason"]


def test_degree_cap(tmp_path):
    job = write(tmp_path, "cap.dk", "chart x,y; p = x^9; classify p;")
    env = dict(DK_MAX_DEGREE="4", PATH="", HOME="/root")
    import os

    env["PATH"] = os.environ.get("PATH", "")
    r = run_cli(["run", str(job), "--json"], env=env)
    assert r.returncode == 2
    assert "DegreeCapExceeded" in json.loads(r.stdout)["error"]
    assert run_cli(["run", str(job)]).returncode == 0


def test_fmt_roundtrip(tmp_path):
    job = write(
        tmp_path,
        "f.dk",
        "chart x , y;\n\nF = frame log( x) ;\npi = x^2 * Dx ^^ Dy;\nlift pi to F;\n",
    )
    r = run_cli(["fmt", str(job)])
    assert r.returncode == 0
    assert r.stdout == "chart x, y;\nF = frame log(x);\npi = x^2*Dx^^Dy;\nlift pi to F;\n"
    # idempotent
    again = write(tmp_path, "f2.dk", r.stdout)
    assert run_cli(["fmt", str(again)]).stdout == r.stdout


def test_run_job_api_residue_and_spinor():
    job = parse(
        "chart x, y; w = e1^^e2; residue w via log on frame log(x);"
    )
    cert, code = run_job(job)
    assert code == 0
    assert cert["payload"]["result"]["form"] == "-dy"
    job = parse(
        "chart x, y, u, v; w = e1^^e2 + e3^^e4;"
        " spinor w on frame elliptic(x, y) via elliptic;"
    )
    cert, code = run_job(job)
    assert code == 1
    assert "NonzeroEllipticResidue" in cert["payload"]["reason"]


def test_modify_commands():
    job = parse("chart x, y; T = frame tx(); modify lower T keep 2 by x;")
    cert, code = run_job(job)
    assert code == 0
    assert cert["payload"]["result"]["generators"] == ["x*Dx", "Dy"]
    job = parse("chart x, y; T = frame tx(); modify upper T kernel 2 by x;")
    cert, code = run_job(job)
    assert code == 1
    assert "NotDivisible" in cert["payload"]["reason"]


def test_frame_json_round_trip():
    from divkit.cli import frame_from_payload, frame_payload
    from divkit.frames import AnchorFrame, catalog
    from divkit.rings import Chart, Poly
    from divkit.multivector import Multivector

    c3 = Chart(["x", "y", "u"])
    frames = [
        catalog("log", c3, "x"),
        catalog("bk", c3, "u", 3),
        catalog("elliptic", c3, "x", "y"),
        catalog("elliptic_log", c3, "x", "y"),
        catalog("nc_log", c3, "x", "y"),
        catalog("scattering", c3, "u"),
    ]
    x3 = Poly.var(c3, "x")
    d = [Multivector.basis_vector(c3, i) for i in range(3)]
    frames.append(AnchorFrame(c3, [d[0] + x3 * d[2], d[1], d[2]]))
    for frame in frames:
        data = json.loads(json.dumps(frame_payload(frame)))
        back = frame_from_payload(data)
        assert back == frame
        assert back.label == frame.label
        assert back.det == frame.det


def test_output_name_echo():
    job = parse('chart x, y; output "anchor"; modular x*Dx^^Dy;')
    cert, code = run_job(job)
    assert code == 0 and cert["name"] == "anchor"


def test_non_involutive_custom_frame_is_an_error():
    from divkit.dsl import ParseError

    # [x*Dx, Dy + y*Dx] = -y*Dx does not re-expand polynomially
    with pytest.raises(ParseError) as e:
        parse(
            "chart x, y; F = frame custom(x*Dx; Dy + y*Dx);"
            " verify_frame F by ideal(x);"
        )
    assert "bad custom frame" in str(e.value)
    assert "leaves the frame module" in str(e.value)


def test_corpus_jobs_survive_formatting():
    from divkit.cli import certificate_json
    from divkit.dsl import format_job

    for jobfile in sorted(bundled_corpus_dir().glob("*.dk")):
        src = jobfile.read_text()
        job = parse(src)
        formatted = format_job(job)
        job2 = parse(formatted)
        cert1, code1 = run_job(job)
        cert2, code2 = run_job(job2)
        assert code1 == code2, jobfile.name
        assert certificate_json(cert1) == certificate_json(cert2), jobfile.name
        assert format_job(job2) == formatted, jobfile.name


def test_classify_named_ideal_and_elllog_residue():
    job = parse("chart x, y; I = ideal(x^2); classify I;")
    cert, code = run_job(job)
    assert code == 0
    assert cert["payload"] == {"class": "BPower(2)", "ideal": "x^2"}
    assert cert["command"] == "classify I"
    job = parse(
        "chart x, y, u; w = e1^^e2;"
        " residue w via elllog_z on frame elliptic_log(x, y);"
    )
    cert, code = run_job(job)
    assert code == 0
    res = cert["payload"]["result"]
    assert res["kind"] == "log_coframe" and res["twisted"] is True
    assert res["chart"] == ["y", "u"] and res["form"] == "e1"

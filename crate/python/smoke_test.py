"""Smoke test for the imrecon extension: python python/smoke_test.py (or pytest)."""

import json
import math
import pathlib
import tempfile

import imrecon

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "crates" / "core" / "scenarios"


def rel(a, b):
    return abs(a - b) / abs(b)


def test_special_functions():
    x = 3.7
    w = imrecon.bessel_j(1, x) * imrecon.bessel_y(0, x) - imrecon.bessel_j(0, x) * imrecon.bessel_y(1, x)
    assert abs(w - 2 / (math.pi * x)) < 1e-14
    assert abs(imrecon.j0_roots(1)[0] - 2.404825557695773) < 1e-14
    h = imrecon.hankel1(0, x)
    assert h.real == imrecon.bessel_j(0, x) and h.imag == imrecon.bessel_y(0, x)


def test_pipeline_point_source():
    kappa = 5.0
    field = imrecon.RadiationField.point_source(kappa, (0.3, 0.2))
    ab = imrecon.pipeline_abscissas(kappa)
    q = (0.0, -2.0)
    plus = imrecon.sample_im(field, q, (1.0, 0.0), "+", ab)
    minus = imrecon.sample_im(field, q, (1.0, 0.0), "-", ab)
    targets = [(0.0, -4.5), (1.5, -4.5), (-2.0, -2.8)]
    got = imrecon.reconstruct(plus, minus, 2, (0.0, 1.0), targets, disk_radius=field.source_radius)
    for x, v in zip(targets, got):
        assert rel(v, field.eval(x)) < 1e-2


def test_farfield_and_karp():
    field = imrecon.RadiationField.multipoles(3.0, [(0, 1.0), (1, 0.5j)])
    ab = imrecon.pipeline_abscissas(3.0)
    q = (0.0, -1.0)
    plus = imrecon.sample_im(field, q, (1.0, 0.0), "+", ab)
    minus = imrecon.sample_im(field, q, (1.0, 0.0), "-", ab)
    ff = imrecon.extract(plus, minus, 2)
    want = field.farfield(q, 0.0, 2)
    assert all(rel(a, b) < 1e-4 for a, b in zip(ff.f_plus, want))
    k = imrecon.Karp.from_farfield(3.0, ff)
    r = 500.0
    assert rel(k.eval(r, "-"), field.eval((-r, -1.0))) < 1e-6


def test_scattering():
    n = 8
    grid0 = imrecon.PotentialGrid([-0.5, -0.5, 0.5, 0.5], n, 2.0, [0j] * (n * n))
    s0 = imrecon.Scatterer(grid0)
    x, y = (2.0, 0.0), (-1.0, 1.0)
    free = -0.25j * imrecon.hankel1(0, 2.0 * math.dist(x, y))
    assert s0.resolvent(y, [x])[0] == free
    grid = imrecon.PotentialGrid.from_json(json.dumps({
        "bbox": [-0.5, -0.5, 0.5, 0.5], "n": n, "kappa": 2.0,
        "v": [[1.0, 0.0]] * (n * n)}))
    s = imrecon.Scatterer(grid)
    a, b = s.resolvent(y, [x])[0], s.resolvent(x, [y])[0]
    assert abs(a - b) < 1e-12 * abs(a)
    amp = s.amplitude((2.0, 0.0), [(1.0, 0.0), (0.0, 1.0)])
    assert len(amp) == 2 and abs(amp[0]) > 0


def test_errors():
    try:
        imrecon.PotentialGrid([0, 0, 1, 1], 2, 1.0, [0j])
    except ValueError:
        pass
    else:
        raise AssertionError("short potential accepted")


def test_run_scenario():
    with tempfile.TemporaryDirectory() as tmp:
        rep = imrecon.run_scenario(str(SCENARIOS / "counterexample.json"), "counterexample", out=tmp)
        assert rep["status"] == "ok"
        assert rep["metrics"]["max_abs_im"] <= 1e-11
        assert (pathlib.Path(tmp) / "results.csv").exists()


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")

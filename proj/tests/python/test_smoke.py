import math
import os
import subprocess

import numpy as np
import pytest

import hoep


def test_ep3_spectrum():
    s = hoep.eigensolve(hoep.ep3_sensor(1.0))
    assert s["ep_order"] == 3
    assert s["phase"] == "exceptional"
    assert max(abs(z) for z in s["eigenvalues"]) < 1e-12


def test_stable_spectrum_and_matrix():
    c = hoep.ep3_sensor(0.95)
    ev = sorted(z.real for z in hoep.eigensolve(c)["eigenvalues"])
    chi = math.sqrt(1 - 0.95**2)
    assert ev == pytest.approx([-chi, 0.0, chi], abs=1e-12)
    h = hoep.dynamical_matrix(c)
    assert np.allclose(h, [[0, 0, 0.95], [0, 0, -1], [-0.95, -1, 0]])


def test_discriminant_and_irreducibility():
    x, y, d = hoep.cubic_discriminant(hoep.ep3_sensor(0.95))
    assert x == pytest.approx(-0.0325)
    assert d < 0
    c = hoep.ep3_sensor(0.95)
    c.epsilon = [0.01, -0.01]
    assert not hoep.irreducible(c)


def test_working_point():
    r = hoep.sensitivity(0.95, 2.0)
    assert r["noise_var"] == pytest.approx(1.0, rel=1e-8)
    assert r["susceptibility"] == pytest.approx(64967.846, rel=1e-4)
    assert r["delta_eps"] * math.sqrt(r["qfi"]) >= 1.0 - 1e-6


def test_evolution_returns_to_start():
    c = hoep.ep3_sensor(0.95, alpha=2.0)
    mu0, _ = hoep.evolve(c, 0.0)
    mu, lam = hoep.evolve(c, 2 * math.pi / math.sqrt(1 - 0.95**2))
    assert np.allclose(mu, mu0, atol=1e-8)
    assert np.allclose(lam, 0.5 * np.eye(6), atol=1e-8)


def test_ep4_locus():
    p = hoep.ep4_locus(0.2)
    assert p["delta1"] == pytest.approx(0.8845, abs=5e-5)
    assert hoep.eigensolve(hoep.ep4_config(0.2))["ep_order"] == 4


def test_scenario_and_errors():
    r = hoep.run_scenario("experiment = puiseux\npreset = ep3_sensor\n", "p")
    assert r["metrics"]["slope"] == pytest.approx(1 / 3, abs=0.02)
    assert r["csv"].startswith("# name = p")
    with pytest.raises(hoep.ConfigError):
        hoep.run_scenario("experiment = puiseux\nbogus = 1\n")


def test_acceptance_subset():
    rep = hoep.run_acceptance({3, 9})
    assert [c["id"] for c in rep["criteria"]] == [3, 9]
    assert all(c["pass"] for c in rep["criteria"])


@pytest.mark.skipif("HOEP_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_accept_subset():
    out = subprocess.run([os.environ["HOEP_CLI"], "accept", "--only", "9"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "PASS  [9]" in out.stdout

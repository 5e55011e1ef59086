import csv
import json

import numpy as np
import pytest

from nlsignal import config as cfg
from nlsignal.cli import main
from nlsignal.errors import ConfigError


def base_config(**over):
    d = {
        "system": {
            "dims": [2, 2],
            "qubit_params": {"a1": 0.1, "a2": 0, "b1": 0, "b2": 0, "c": [0.1, 0], "d": 0.3},
            "nonlinearity": {"kind": "gross_pitaevskii", "g": 2},
        },
        "initial_state": {"family": "bell"},
        "run": {"t_end": 5.0, "dt": 1e-3, "sample_every": 100},
    }
    d.update(over)
    return d


def write(tmp_path, d, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))


class TestConfigParsing:
    @pytest.mark.parametrize("name", cfg.recipe_names())
    def test_recipes_parse(self, name):
        exp = cfg.parse(cfg.load_recipe(name))
        assert exp.grid.t_end > 0

    def test_required_figures_shipped(self):
        names = set(cfg.recipe_names())
        assert {f"fig{i}" for i in range(2, 13)} <= names

    def test_unknown_key_rejected_with_path(self):
        d = base_config()
        d["system"]["qubit_params"]["e"] = 1
        with pytest.raises(ConfigError, match=r"system\.qubit_params"):
            cfg.parse(d)

    def test_bad_type_path(self):
        d = base_config()
        d["run"]["dt"] = "fast"
        with pytest.raises(ConfigError, match=r"run\.dt"):
            cfg.parse(d)

    def test_complex_pairs(self):
        d = base_config()
        d["system"]["qubit_params"]["c"] = [0.1, 0.2]
        exp = cfg.parse(d)
        assert exp.h.h_a[0, 1] == 0.1 + 0.2j and exp.h.h_a[1, 0] == 0.1 - 0.2j

    def test_explicit_matrices(self):
        d = base_config()
        d["system"] = {"dims": [2, 3], "h_a": [[1, [0, 1]], [[0, -1], 2]],
                       "h_b": [[0, 0, 0], [0, 1, 0], [0, 0, 2]],
                       "nonlinearity": {"kind": "logarithmic", "g": 0.5}}
        d["initial_state"] = {"family": "basis", "j": 1, "k": 2}
        exp = cfg.parse(d)
        assert exp.shape.total == 6 and exp.psi0.amps[5] == 1

    def test_non_hermitian_matrix(self):
        d = base_config()
        d["system"] = {"h_a": [[1, 1], [0, 1]], "h_b": [[0, 0], [0, 0]],
                       "nonlinearity": {"kind": "gross_pitaevskii", "g": 1}}
        with pytest.raises(ConfigError, match="system"):
            cfg.parse(d)

    @pytest.mark.parametrize("state, expect", [
        ({"family": "psi_x", "x": 0.5}, [1.5, 0, 0, 0.5]),
        ({"family": "sep_eps", "eps": 0.5}, [0.5, 0.5, 0, 0]),
        ({"family": "custom", "amplitudes": [1, 0, 0, [0, 1]], "normalize": True}, [1, 0, 0, 1j]),
        ({"family": "custom", "amplitudes": [3, 0, 0, 4], "normalize": True}, [3, 0, 0, 4]),
    ])
    def test_state_families(self, state, expect):
        exp = cfg.parse(base_config(initial_state=state))
        e = np.array(expect, dtype=complex)
        np.testing.assert_allclose(exp.psi0.amps, e / np.linalg.norm(e), atol=1e-15)

    def test_bare_amplitude_list(self):
        exp = cfg.parse(base_config(initial_state=[0, 1, 0, 0]))
        np.testing.assert_array_equal(exp.psi0.amps, [0, 1, 0, 0])

    def test_unnormalized_custom_state_rejected(self):
        with pytest.raises(ConfigError, match="initial_state"):
            cfg.parse(base_config(initial_state={"family": "custom", "amplitudes": [1, 1, 0, 0]}))

    def test_partner_state(self):
        exp = cfg.parse(base_config(initial_state={"family": "psi_x", "partner_of": 0, "overlap": 0.999}))
        np.testing.assert_allclose(abs(np.vdot(exp.psi0.amps, [2**-0.5, 0, 0, 2**-0.5])), 0.999, atol=1e-12)

    def test_random_state_uses_seed(self):
        a = cfg.parse(base_config(initial_state={"family": "random"}), seed=1)
        b = cfg.parse(base_config(initial_state={"family": "random"}), seed=1)
        c = cfg.parse(base_config(initial_state={"family": "random"}), seed=2)
        np.testing.assert_array_equal(a.psi0.amps, b.psi0.amps)
        assert not np.array_equal(a.psi0.amps, c.psi0.amps)

    def test_protocol_missing_operand(self):
        with pytest.raises(ConfigError, match=r"protocol\.x_prime"):
            cfg.parse(base_config(protocol={"kind": "observable_choice", "x": "0"}))

    def test_intervention_cannot_touch_bob(self):
        with pytest.raises(ConfigError, match="qubit_params_prime"):
            cfg.parse(base_config(protocol={"kind": "intervention", "qubit_params_prime": {"b1": 1}}))

    def test_round_trip(self):
        for name in ("fig9", "fig10", "fig11"):
            exp = cfg.parse(cfg.load_recipe(name))
            again = cfg.parse(json.loads(cfg.dump(exp)))
            assert again.h == exp.h and again.nl == exp.nl and again.grid == exp.grid
            np.testing.assert_array_equal(again.psi0.amps, exp.psi0.amps)
            assert cfg.dump(again) == cfg.dump(exp)

    def test_perturbed_config(self):
        d = base_config()
        out = cfg.perturbed_config(d, "system.qubit_params.c", 0.001)
        assert out["system"]["qubit_params"]["c"] == [0.101, 0]
        assert d["system"]["qubit_params"]["c"] == [0.1, 0]

    def test_set_path_rejects_object(self):
        with pytest.raises(ConfigError):
            cfg.set_path(base_config(), "system.qubit_params", 1.0)


class TestEvolve:
    def test_columns_and_final_row(self, tmp_path):
        assert main(["evolve", "--recipe", "fig4", "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "trajectory.csv")
        assert header[:3] == ["t", "re_a00", "im_a00"]
        assert header[-6:] == ["norm", "n_x", "n_y", "n_z", "concurrence", "purity"]
        n = rows[-1, header.index("n_x"):header.index("n_z") + 1]
        assert np.linalg.norm(n) > 0

    def test_static_when_trivial(self, tmp_path):
        d = base_config()
        d["system"]["qubit_params"] = {}
        d["system"]["nonlinearity"]["g"] = 0
        assert main(["evolve", "--config", write(tmp_path, d), "--out", str(tmp_path)]) == 0
        _, rows = read_csv(tmp_path / "trajectory.csv")
        np.testing.assert_array_equal(rows[:, 1:], np.broadcast_to(rows[0, 1:], rows[:, 1:].shape))

    @pytest.mark.parametrize("state, g", [
        ({"family": "psi_x", "x": 0.3}, 2.0),
        ({"family": "bell"}, 5.0),
        ({"family": "random", "seed": 4}, 0.0),
    ])
    def test_diagonal_concurrence_constant(self, tmp_path, state, g):
        d = base_config(initial_state=state)
        d["system"]["qubit_params"] = {"a1": 0.3, "a2": -1, "b1": 2, "b2": 0.5}
        d["system"]["nonlinearity"]["g"] = g
        assert main(["evolve", "--config", write(tmp_path, d), "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "trajectory.csv")
        conc = rows[:, header.index("concurrence")]
        np.testing.assert_allclose(conc, conc[0], atol=1e-9)

    def test_diagonal_concurrence_moves_for_generic_state(self, tmp_path):
        # Moduli are frozen, but a00*a11 and a01*a10 rotate at rates differing by
        # f00 + f11 - f01 - f10, so the concurrence of a generic state is not constant.
        d = base_config(initial_state={"family": "random", "seed": 4})
        d["system"]["qubit_params"] = {"a1": 0.3, "a2": -1, "b1": 2, "b2": 0.5}
        assert main(["evolve", "--config", write(tmp_path, d), "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "trajectory.csv")
        mod = np.hypot(rows[:, 1:9:2], rows[:, 2:9:2])
        np.testing.assert_allclose(mod, np.broadcast_to(mod[0], mod.shape), atol=1e-9)
        assert np.ptp(rows[:, header.index("concurrence")]) > 1e-2

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["evolve", "--recipe", "fig2", "--out", str(out), "--jobs", "2"]) == 0
        for f in ("trajectory.csv", "trajectory_perturbed.csv", "comparison.csv"):
            assert (a / f).read_bytes() == (b / f).read_bytes()

    def test_full_precision(self, tmp_path):
        main(["evolve", "--recipe", "fig4", "--out", str(tmp_path)])
        line = (tmp_path / "trajectory.csv").read_text().splitlines()[-1]
        value = line.split(",")[1]
        assert len(value.replace("-", "").replace(".", "").lstrip("0")) >= 15

    def test_protocol_block_rejected(self, tmp_path, capsys):
        assert main(["evolve", "--recipe", "fig9", "--out", str(tmp_path)]) == 1
        assert "protocol" in capsys.readouterr().err

    def test_divergence_exit_and_trailer(self, tmp_path):
        d = base_config(run={"t_end": 200.0, "dt": 0.5, "sample_every": 1})
        d["system"]["nonlinearity"]["g"] = 1e6
        assert main(["evolve", "--config", write(tmp_path, d), "--out", str(tmp_path)]) == 2
        text = (tmp_path / "trajectory.csv").read_text()
        assert text.splitlines()[-1].startswith("# error:")


class TestProtocolCommand:
    def run(self, tmp_path, d):
        code = main(["protocol", "--config", write(tmp_path, d), "--out", str(tmp_path)])
        return code, json.loads((tmp_path / "summary.json").read_text())

    def test_fig9_recipe(self, tmp_path):
        assert main(["protocol", "--recipe", "fig9", "--out", str(tmp_path)]) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["max_abs_delta_n"]["z"] > 0.05
        assert summary["first_crossing"] is not None
        ha, a = read_csv(tmp_path / "arm_a.csv")
        hb, b = read_csv(tmp_path / "arm_b.csv")
        assert ha == hb == ["t", "n_x", "n_y", "n_z", "rho_00", "rho_11"]
        np.testing.assert_array_equal(a[:, 0], b[:, 0])

    def test_both_diagonal_blind(self, tmp_path):
        d = base_config(run={"t_end": 20.0})
        d["system"]["qubit_params"] = {"a1": 0.3, "a2": 0.1, "b1": 0.1, "b2": 0.2}
        d["protocol"] = {"kind": "intervention", "qubit_params_prime": {"a1": 2.0}}
        code, summary = self.run(tmp_path, d)
        assert code == 0 and summary["max_distinguishability"] < 1e-6

    @pytest.mark.parametrize("protocol", [
        {"kind": "observable_choice", "x": "0", "x_prime": "+"},
        {"kind": "measure_or_not", "x": {"phi_eps": 0.3}},
        {"kind": "intervention", "qubit_params_prime": {"a1": 1.0, "c": [0, 1]}},
    ])
    def test_linear_limit(self, tmp_path, protocol):
        d = base_config(run={"t_end": 10.0}, protocol=protocol)
        d["system"]["nonlinearity"]["g"] = 0
        code, summary = self.run(tmp_path, d)
        assert code == 0 and summary["max_distinguishability"] < 1e-7

    def test_missing_block(self, tmp_path):
        assert main(["protocol", "--config", write(tmp_path, base_config()), "--out", str(tmp_path)]) == 1


class TestLyapunovCommand:
    def test_synthetic_exact(self, tmp_path):
        d = base_config(run={"t_end": 30.0}, chaos={"perturbation": {"kind": "synthetic", "rate": 0.37, "d0": 1e-4},
                                                     "t_max": 20})
        assert main(["lyapunov", "--config", write(tmp_path, d), "--out", str(tmp_path)]) == 0
        res = json.loads((tmp_path / "lyapunov.json").read_text())
        np.testing.assert_allclose(res["lambda"], 0.37, rtol=1e-12)
        header, rows = read_csv(tmp_path / "log_distance.csv")
        assert header == ["t", "distance", "log_ratio"]
        np.testing.assert_allclose(rows[:, 2], 0.37 * rows[:, 0], atol=1e-12)

    def test_fig11_positive(self, tmp_path):
        assert main(["lyapunov", "--recipe", "fig11", "--out", str(tmp_path)]) == 0
        res = json.loads((tmp_path / "lyapunov.json").read_text())
        assert res["lambda"] > 0 and res["perturbation"] == "parameter"
        np.testing.assert_allclose(res["d0"], 0.001, rtol=1e-9)

    def test_fig8_shift(self, tmp_path):
        assert main(["lyapunov", "--recipe", "fig8", "--out", str(tmp_path)]) == 0
        res = json.loads((tmp_path / "lyapunov.json").read_text())
        assert res["epsilon_shift"] == 0.001 and res["lambda"] > 0

    def test_insufficient_window(self, tmp_path, capsys):
        d = base_config(chaos={"perturbation": {"kind": "synthetic", "rate": 1}, "t_max": 0.3})
        assert main(["lyapunov", "--config", write(tmp_path, d), "--out", str(tmp_path)]) == 1
        assert "samples" in capsys.readouterr().err

    def test_missing_perturbation(self, tmp_path):
        assert main(["lyapunov", "--config", write(tmp_path, base_config()), "--out", str(tmp_path)]) == 1


class TestSweepCommand:
    def test_g_sweep_increasing(self, tmp_path):
        assert main(["sweep", "--recipe", "fig5", "--axis", "system.nonlinearity.g",
                     "--values", "2,5,7", "--out", str(tmp_path), "--jobs", "2"]) == 0
        header, rows = read_csv(tmp_path / "sweep.csv")
        lam = rows[:, header.index("lambda")]
        assert np.all(np.diff(lam) > 0)
        np.testing.assert_array_equal(rows[:, 0], [2, 5, 7])

    def test_diagonal_a1_sweep_blind(self, tmp_path):
        d = base_config(run={"t_end": 10.0})
        d["system"]["qubit_params"] = {"a1": 0.3, "a2": 0.1, "b1": 0.1, "b2": 0.2}
        d["protocol"] = {"kind": "intervention", "qubit_params_prime": {"a1": 0.9}}
        assert main(["sweep", "--config", write(tmp_path, d), "--axis", "system.qubit_params.a1",
                     "--values", "0,0.5,1,3", "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "sweep.csv")
        assert rows.shape[0] == 4
        assert np.all(rows[:, header.index("max_distinguishability")] < 1e-6)

    def test_empty_values_header_only(self, tmp_path):
        assert main(["sweep", "--recipe", "fig4", "--axis", "system.qubit_params.a1",
                     "--values", "", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "sweep.csv").read_text().count("\n") == 1

    def test_invalid_axis(self, tmp_path):
        assert main(["sweep", "--recipe", "fig4", "--axis", "system.nonsense.g",
                     "--values", "1", "--out", str(tmp_path)]) == 1
        assert main(["sweep", "--recipe", "fig4", "--axis", "system.qubit_params",
                     "--values", "1", "--out", str(tmp_path)]) == 1


class TestVerifyAndUsage:
    def test_controls_only(self, capsys):
        assert main(["verify", "--controls-only"]) == 0
        lines = [json.loads(s) for s in capsys.readouterr().out.splitlines()]
        assert all(r["control"] and not r["passed"] and r["as_expected"] for r in lines[:-1])
        assert lines[-1]["ok"]

    def test_corrupted_tolerance(self, capsys):
        assert main(["verify", "--controls-only", "--tolerance-scale", "1e9"]) == 3

    def test_dump_config(self, tmp_path, capsys):
        assert main(["protocol", "--recipe", "fig10", "--dump-config"]) == 0
        dumped = capsys.readouterr().out
        p = tmp_path / "d.json"
        p.write_text(dumped)
        assert main(["protocol", "--config", str(p), "--dump-config"]) == 0
        assert capsys.readouterr().out == dumped

    def test_usage_errors(self, tmp_path):
        assert main([]) == 1
        assert main(["evolve", "--out", str(tmp_path)]) == 1
        assert main(["evolve", "--recipe", "nope", "--out", str(tmp_path)]) == 1
        assert main(["evolve", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["evolve", "--config", str(p), "--out", str(tmp_path)]) == 1

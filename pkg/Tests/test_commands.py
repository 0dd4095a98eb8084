import contextlib
import io
import json
import os
import tempfile
import unittest
from unittest import mock

from cvmdi import commands
from cvmdi import config as cfg
from cvmdi.__main__ import main
from cvmdi.config import ConfigError
from cvmdi.optimize import OptResult
from cvmdi.table import ResultTable

SMALL_GRID = ["--set", "n_a=8", "--set", "n_b=8", "--set", "n_g=16", "--threads", "1"]


def _small_config(**changes):
    c = cfg.getDefaultConfig()
    c.update(n_a=8, n_b=8, n_g=16, threads=1)
    c.update(changes)
    return c


def _fake_optimum(params, grid, threads, start):
    names = ("sigma_a", "mu") if params.restricted else ("sigma_a", "sigma_b")
    best = {n: 2.0 for n in names}
    return OptResult(best, 0.5 * params.tau_a * params.tau_b, 1, True, params.replace(**best))


class CommandTester(unittest.TestCase):
    def test_rate(self):
        table = commands.cmd_rate(_small_config(distance_km=10.0, eta=0.9))
        self.assertEqual(table.columns[:3], ["distance_km", "tau_a", "tau_b"])
        row = dict(zip(table.columns, table.rows[0]))
        self.assertAlmostEqual(row["tau_a"], 0.7943282, places=7)
        self.assertGreaterEqual(row["ps_rate"], row["raw_rate"])
        self.assertEqual(row["n_evals"], 8 * 8 * 16)
        self.assertEqual(table.metadata["command"], "rate")

    def test_rate_uses_tau_without_distance(self):
        table = commands.cmd_rate(_small_config(tau_a=0.5, tau_b=0.25))
        row = dict(zip(table.columns, table.rows[0]))
        self.assertEqual((row["distance_km"], row["tau_a"], row["tau_b"]), (0.0, 0.5, 0.25))

    def test_sweep(self):
        with mock.patch("cvmdi.optimize._optimized_rate", _fake_optimum):
            table = commands.cmd_sweep(_small_config(distances_km=[0.0, 10.0]))
        self.assertEqual(table.columns, ["distance_km", "ps_rate", "sigma_a", "sigma_b"])
        self.assertEqual(table.column("distance_km"), [0.0, 10.0])
        self.assertEqual(table.rows[0][1], 0.5)

    def test_frontier(self):
        with self.assertRaises(ConfigError):
            commands.cmd_frontier(_small_config(alice_km=[]))

    def test_oracle_sample_floor(self):
        with self.assertRaises(ConfigError) as cm:
            commands.cmd_oracle(_small_config(n_samples=100))
        self.assertEqual(cm.exception.key, "n_samples")

    def test_oracle(self):
        table = commands.cmd_oracle(_small_config(n_samples=10000, tau_a=0.8, tau_b=0.8, seed=3))
        self.assertEqual(table.column("quantity"), ["raw_rate", "ps_rate"])
        self.assertEqual(table.metadata["seed"], 3)
        self.assertTrue(all(e > 0.0 for e in table.column("std_err")))

    def test_optparams(self):
        with self.assertRaises(ConfigError):
            commands.cmd_optparams(_small_config())
        config = _small_config(scenario="restricted_collective", window_km=[10.0, 20.0])
        with mock.patch("cvmdi.optimize._optimized_rate", _fake_optimum):
            table = commands.cmd_optparams(config)
        self.assertEqual(table.columns, [
            "distance_km", "ideal_ps_rate", "ideal_sigma_a", "ideal_mu",
            "realistic_ps_rate", "realistic_sigma_a", "realistic_mu",
        ])
        self.assertEqual(len(table.rows), 2)

    def test_optparams_both_attack_models(self):
        here = os.path.dirname(os.path.dirname(os.path.realpath(__file__)))
        seen = []

        def fake(params, grid, threads, start):
            seen.append(params.scenario.value)
            return _fake_optimum(params, grid, threads, start)

        for (name, scenario) in (("optparams-individual.conf", "restricted_individual"),
                                 ("optparams.conf", "restricted_collective")):
            config = cfg.LoadConfigFromFile(_small_config(), os.path.join(here, "example-config", name))
            del seen[:]
            with mock.patch("cvmdi.optimize._optimized_rate", fake):
                table = commands.cmd_optparams(config)
            self.assertEqual(set(seen), {scenario})
            self.assertEqual(len(table.rows), 6)
            self.assertEqual(table.metadata["config"]["scenario"], scenario)


class MainTester(unittest.TestCase):
    def _run(self, argv):
        err = io.StringIO()
        with contextlib.redirect_stderr(err):
            code = main(argv)
        return (code, err.getvalue())

    def test_unknown_key(self):
        (code, err) = self._run(["rate", "--set", "bogus=1"])
        self.assertEqual(code, 1)
        record = json.loads(err)
        self.assertEqual(record["error"], "ConfigError")
        self.assertEqual(record["key"], "bogus")

    def test_bad_parameter(self):
        (code, err) = self._run(["rate", "--set", "tau_a=2"] + SMALL_GRID)
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(err)["error"], "ParameterError")

    def test_bad_format(self):
        (code, err) = self._run(["rate", "--set", "format=xml"])
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(err)["key"], "format")

    def test_empty_frontier(self):
        (code, _) = self._run(["frontier", "--set", "alice_km="] + SMALL_GRID)
        self.assertEqual(code, 1)

    def test_rate_reproducible(self):
        with tempfile.TemporaryDirectory() as d:
            outputs = []
            path = os.path.join(d, "rate.csv")
            for threads in ("1", "2"):
                argv = ["rate", "--set", "output=" + path, "--set", "distance_km=4"] + SMALL_GRID[:-2]
                (code, _) = self._run(argv + ["--threads", threads])
                self.assertEqual(code, 0)
                with open(path) as f:
                    text = f.read()
                self.assertEqual(ResultTable.from_csv(text).metadata["command"], "rate")
                outputs.append([l for l in text.splitlines() if not l.startswith("# timestamp")])
            self.assertEqual(outputs[0], outputs[1])

    def test_threads_key_not_in_output(self):
        with tempfile.TemporaryDirectory() as d:
            outputs = []
            path = os.path.join(d, "rate.csv")
            for threads in ("1", "2"):
                argv = ["rate", "--set", "output=" + path, "--set", "distance_km=4"] + SMALL_GRID[:-2]
                (code, _) = self._run(argv + ["--set", "threads=" + threads])
                self.assertEqual(code, 0)
                with open(path) as f:
                    text = f.read()
                self.assertNotIn("threads", ResultTable.from_csv(text).metadata["config"])
                outputs.append([l for l in text.splitlines() if not l.startswith("# timestamp")])
            self.assertEqual(outputs[0], outputs[1])

    def test_config_file(self):
        with tempfile.TemporaryDirectory() as d:
            conf = os.path.join(d, "run.conf")
            out = os.path.join(d, "out.json")
            with open(conf, "w") as f:
                f.write("tau_a = 0.5\nformat = json\noutput = {}\n".format(out))
            (code, _) = self._run(["rate", "--config", conf] + SMALL_GRID)
            self.assertEqual(code, 0)
            with open(out) as f:
                result = json.load(f)
            self.assertEqual(result["rows"][0][result["columns"].index("tau_a")], 0.5)


if __name__ == "__main__":
    unittest.main()

"""
Command Line - Test Suite
Subcommands, exit codes and the JSON error line
"""

import io
import json
import os
import sys
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from phsysid.core.logging_setup import configure_logging
from phsysid.core.settings import get_settings
from phsysid.experiments import preset, save_config
from phsysid.main import main

ENV_KEYS = ("PHSYSID_LOG_DIR", "PHSYSID_OUTPUT_DIR", "PHSYSID_BUDGET")


class TestCommandLine(unittest.TestCase):
    """main() called in-process with captured streams"""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name
        self._saved = {key: os.environ.get(key) for key in ENV_KEYS}
        os.environ["PHSYSID_LOG_DIR"] = os.path.join(self.tmp, "logs")
        os.environ["PHSYSID_OUTPUT_DIR"] = os.path.join(self.tmp, "runs")
        os.environ.pop("PHSYSID_BUDGET", None)
        get_settings.cache_clear()

    def tearDown(self):
        for key, value in self._saved.items():
            if value is None:
                os.environ.pop(key, None)
            else:
                os.environ[key] = value
        get_settings.cache_clear()
        configure_logging(file_sink=False)
        self._tmp.cleanup()

    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = main(list(argv))
        # Rebind the console sink before the captured stream goes away
        configure_logging(file_sink=False)
        return code, out.getvalue(), err.getvalue()

    def tiny_config(self):
        doc = preset("oscillator").model_dump()
        doc["data"].update(n_traj=3, t_end=1.0)
        doc["hyper"].update(epochs=2, prune_interval=1)
        doc["evaluation"].update(n_inits=2, t_end=1.0)
        path = os.path.join(self.tmp, "tiny.json")
        with open(path, "w") as f:
            json.dump(doc, f)
        return path

    def last_json(self, text):
        return json.loads(text.strip().splitlines()[-1])

    def test_validate_good_config(self):
        path = os.path.join(self.tmp, "mass.json")
        save_config(preset("mass-spring"), path)
        code, out, _ = self.run_cli("validate", "--config", path)
        self.assertEqual(code, 0)
        self.assertTrue(self.last_json(out)["valid"])

    def test_validate_bad_config(self):
        path = os.path.join(self.tmp, "bad.json")
        with open(path, "w") as f:
            json.dump({"data": {"n_traj": 0}}, f)
        code, out, err = self.run_cli("validate", "--config", path)
        self.assertEqual(code, 1)
        self.assertEqual(out, "")
        line = self.last_json(err)
        self.assertEqual(line["error"], "ConfigError")
        self.assertIn("n_traj", line["message"])

    def test_missing_source(self):
        code, _, err = self.run_cli("generate")
        self.assertEqual(code, 1)
        self.assertIn("--preset", self.last_json(err)["message"])

    def test_generate(self):
        out_dir = os.path.join(self.tmp, "gen")
        code, out, _ = self.run_cli("generate", "--preset", "oscillator", "--budget", "desk", "--out", out_dir)
        self.assertEqual(code, 0)
        result = self.last_json(out)
        self.assertEqual(result["n_traj"], 10)
        self.assertTrue(os.path.exists(os.path.join(out_dir, "dataset.csv")))

    def test_simulate(self):
        out_dir = os.path.join(self.tmp, "sim")
        code, out, _ = self.run_cli(
            "simulate", "--preset", "oscillator", "--x0", "1", "0", "--t-end", "1", "--dt", "0.1", "--out", out_dir
        )
        self.assertEqual(code, 0)
        self.assertEqual(self.last_json(out)["n_points"], 11)

    def test_default_output_dir(self):
        code, _, _ = self.run_cli("simulate", "--preset", "oscillator", "--t-end", "1")
        self.assertEqual(code, 0)
        self.assertTrue(os.path.exists(os.path.join(self.tmp, "runs", "oscillator", "trajectory.csv")))

    def test_report(self):
        out_dir = os.path.join(self.tmp, "report")
        code, out, _ = self.run_cli("report", "--config", self.tiny_config(), "--out", out_dir)
        self.assertEqual(code, 0)
        for name in ("report.json", "coefficients.csv", "model.json", "history.json", "progress.jsonl"):
            self.assertTrue(os.path.exists(os.path.join(out_dir, name)), name)
        with open(os.path.join(out_dir, "progress.jsonl")) as f:
            records = [json.loads(line) for line in f if line.strip()]
        self.assertEqual(len(records), 2)
        self.assertIn("mean_error", self.last_json(out))

    def test_train_then_evaluate(self):
        config = self.tiny_config()
        train_dir = os.path.join(self.tmp, "train")
        code, out, _ = self.run_cli("train", "--config", config, "--out", train_dir)
        self.assertEqual(code, 0)
        model_path = self.last_json(out)["model"]
        eval_dir = os.path.join(self.tmp, "eval")
        code, out, _ = self.run_cli("evaluate", "--config", config, "--model-path", model_path, "--out", eval_dir)
        self.assertEqual(code, 0)
        self.assertEqual(self.last_json(out)["n_blowups"], 0)
        self.assertTrue(os.path.exists(os.path.join(eval_dir, "timing.json")))

    def test_unexpected_failure_exits_two(self):
        model_path = os.path.join(self.tmp, "model.json")
        with open(model_path, "w") as f:
            f.write("not json")
        code, _, err = self.run_cli("evaluate", "--preset", "oscillator", "--model-path", model_path)
        self.assertEqual(code, 2)
        self.assertEqual(self.last_json(err)["error"], "JSONDecodeError")

    def test_missing_model_file_is_config_error(self):
        code, _, err = self.run_cli(
            "evaluate", "--preset", "oscillator", "--model-path", os.path.join(self.tmp, "absent.json")
        )
        self.assertEqual(code, 1)
        self.assertEqual(self.last_json(err)["error"], "ConfigError")

    def test_bad_choice_is_usage_error(self):
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(["train", "--preset", "lorenz"])
        self.assertEqual(ctx.exception.code, 2)


if __name__ == '__main__':
    unittest.main()

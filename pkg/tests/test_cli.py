""" Testing the evsynth command line """

from pathlib import Path
import argparse
import json
import tempfile
import unittest

try:
    from src.nts.evsynth.cli import main, RunManifest
    from src.nts.evsynth.cli.main import parse_grid, parse_formats, EXIT_OK, EXIT_INPUT, EXIT_INTERNAL
except ModuleNotFoundError:
    from nts.evsynth.cli import main, RunManifest
    from nts.evsynth.cli.main import parse_grid, parse_formats, EXIT_OK, EXIT_INPUT, EXIT_INTERNAL

TREATMENTS = "id,label,is_active\n1,placebo,false\n2,A,true\n3,B,true\n"
STUDIES = (
    "id,design,format,rob,ref_arm\n"
    "S1,RCT,AD,low,1\n"
    "S2,RCT,AD,low,1\n"
    "S3,RCT,AD,high,2\n"
    "N1,NRS,AD,high,1\n"
)
AD = (
    "study,treatment,r,n\n"
    "S1,1,30,120\nS1,2,18,120\n"
    "S2,1,25,100\nS2,3,20,100\n"
    "S3,2,15,80\nS3,3,19,80\n"
    "N1,1,90,400\nN1,2,50,400\n"
)
SHORT_RUN = ["--chains", "2", "--iterations", "800", "--burn-in", "300", "--seed", "11", "--threads", "1"]


def write_network(directory: Path) -> Path:
    """AD-only network with one NRS"""
    directory.mkdir(parents=True, exist_ok=True)
    for name, text in (("treatments.csv", TREATMENTS), ("studies.csv", STUDIES), ("ad.csv", AD)):
        (directory / name).write_text(text, encoding="utf-8")
    return directory


class TestArguments(unittest.TestCase):
    """
    Test argument parsing helpers.
    """

    def test_grid(self) -> None:
        """start:stop:count or a list"""
        self.assertEqual(parse_grid("30:50:3"), [30.0, 40.0, 50.0])
        self.assertEqual(parse_grid("1, 2.5"), [1.0, 2.5])
        for bad in ("1:2", "1:2:1", "a,b"):
            with self.assertRaises(argparse.ArgumentTypeError):
                parse_grid(bad)

    def test_formats(self) -> None:
        """Known export formats only"""
        self.assertEqual(parse_formats("csv, json"), ["csv", "json"])
        with self.assertRaises(argparse.ArgumentTypeError):
            parse_formats("csv,pdf")

    def test_version(self) -> None:
        """--version exits cleanly"""
        with self.assertRaises(SystemExit) as ctx:
            main(["--version"])
        self.assertEqual(ctx.exception.code, 0)


class TestValidateAndSimulate(unittest.TestCase):
    """
    Test the validate and simulate commands.
    """

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_validate(self) -> None:
        """Valid network, JSON report on request"""
        network = write_network(self.dir / "net")
        report = self.dir / "validation.json"
        self.assertEqual(main(["validate", str(network), "--report", str(report)]), EXIT_OK)
        document = json.loads(report.read_text(encoding="utf-8"))
        self.assertTrue(document["connected"])
        self.assertEqual(document["n_studies"], 4)

    def test_validate_errors(self) -> None:
        """Missing or broken inputs exit with 1"""
        self.assertEqual(main(["validate", str(self.dir / "missing")]), EXIT_INPUT)
        network = write_network(self.dir / "net")
        (network / "ad.csv").write_text(AD.replace("S1,2,18,120", "S1,2,180,120"), encoding="utf-8")
        self.assertEqual(main(["validate", str(network)]), EXIT_INPUT)

    def test_simulate_and_replay(self) -> None:
        """Simulated network validates and replays bit for bit"""
        out = self.dir / "sim"
        self.assertEqual(main(["simulate", "--preset", "nrs-dominant", "--seed", "4", "--out", str(out)]), EXIT_OK)
        self.assertTrue((out / "truth.csv").is_file())
        manifest = RunManifest.read(out)
        self.assertEqual(manifest.command, "simulate")
        self.assertEqual(manifest.options["preset"], "nrs-dominant")
        self.assertIn("studies.csv", manifest.outputs)
        self.assertEqual(main(["validate", str(out)]), EXIT_OK)
        self.assertEqual(main(["replay", str(out)]), EXIT_OK)


class TestFit(unittest.TestCase):
    """
    Test fit, report and replay on a short run.
    """

    @classmethod
    def setUpClass(cls) -> None:
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dir = Path(cls.tmp.name)
        cls.network = write_network(cls.dir / "net")
        cls.out = cls.dir / "fit"
        cls.code = main(["fit", str(cls.network), "--out", str(cls.out), "--effects", "common", *SHORT_RUN])

    @classmethod
    def tearDownClass(cls) -> None:
        cls.tmp.cleanup()

    def test_outputs(self) -> None:
        """Draws, ledger, report files, network copy and manifest"""
        self.assertIn(self.code, (0, 2))
        for name in ("samples.csv", "ledger.json", "summaries.csv", "league_table.csv", "report.json",
                     "forest.svg", "manifest.json", "network/studies.csv"):
            self.assertTrue((self.out / name).is_file(), name)
        manifest = RunManifest.read(self.out)
        self.assertEqual(manifest.command, "fit")
        self.assertEqual(manifest.seed, 11)
        self.assertEqual(manifest.fit_reference, 1)
        self.assertEqual(manifest.config["trt_effect"], "common")
        self.assertIn("samples.csv", manifest.outputs)
        self.assertNotIn("manifest.json", manifest.outputs)
        self.assertIn("ad.csv", manifest.inputs)
        self.assertIn("network/ad.csv", manifest.inputs)
        self.assertIn("d[2]", [d.name for d in manifest.diagnostics])

    def test_report(self) -> None:
        """Stored fits are re-summarized into report/"""
        self.assertEqual(main(["report", str(self.out), "--level", "0.9", "--formats", "json"]), EXIT_OK)
        document = json.loads((self.out / "report" / "report.json").read_text(encoding="utf-8"))
        self.assertEqual(document["level"], 0.9)
        self.assertEqual(main(["report", str(self.dir / "net")]), EXIT_INPUT)

    def test_replay(self) -> None:
        """Same outputs whatever the thread count"""
        self.assertEqual(main(["replay", str(self.out)]), EXIT_OK)
        self.assertEqual(main(["replay", str(self.out), "--threads", "2"]), EXIT_OK)

    def test_replay_mismatch(self) -> None:
        """A changed digest is an internal error"""
        tampered = self.dir / "tampered"
        tampered.mkdir()
        manifest = RunManifest.read(self.out)
        manifest.outputs["ledger.json"] = "0" * 64
        manifest.write(tampered)
        (tampered / "network").mkdir()
        for path in (self.out / "network").iterdir():
            (tampered / "network" / path.name).write_bytes(path.read_bytes())
        self.assertEqual(main(["replay", str(tampered)]), EXIT_INTERNAL)
        (tampered / "network" / "ad.csv").write_text(AD.replace("S1,1,30,120", "S1,1,31,120"), encoding="utf-8")
        self.assertEqual(main(["replay", str(tampered)]), EXIT_INPUT)


class TestFitOptions(unittest.TestCase):
    """
    Test configuration handling of fit.
    """

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.network = write_network(self.dir / "net")

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_bad_config(self) -> None:
        """Unknown approaches and malformed YAML exit with 1"""
        config = self.dir / "model.yaml"
        config.write_text("approach: nonsense\n", encoding="utf-8")
        args = ["fit", str(self.network), "--out", str(self.dir / "out"), "--config", str(config)]
        self.assertEqual(main(args), EXIT_INPUT)
        config.write_text("approach: [unadjusted\n", encoding="utf-8")
        self.assertEqual(main(args), EXIT_INPUT)
        self.assertEqual(main([*args[:4], "--burn-in", "900", "--iterations", "900"]), EXIT_INPUT)

    def test_nrs_prior(self) -> None:
        """The two-step approach writes the NRS summary and fits RCT only"""
        config = self.dir / "model.yaml"
        config.write_text("trt_effect: common\nnrs:\n  w: 0.5\nsampler:\n  thin: 2\n", encoding="utf-8")
        out = self.dir / "out"
        code = main(["fit", str(self.network), "--out", str(out), "--config", str(config),
                     "--approach", "nrs", "--formats", "csv", *SHORT_RUN])
        self.assertIn(code, (0, 2))
        self.assertTrue((out / "nrs_summary.csv").is_file())
        manifest = RunManifest.read(out)
        self.assertEqual(manifest.config["approach"], "nrs_prior")
        self.assertEqual(manifest.config["nrs"]["w"], 0.5)
        self.assertEqual(manifest.sampler["thin"], 2)
        self.assertIn("config/model.yaml", manifest.inputs)
        header = (out / "samples.csv").read_text(encoding="utf-8").splitlines()[0].split(",")
        self.assertIn("u[S1]", header)
        self.assertNotIn("u[N1]", header)


if __name__ == "__main__":
    unittest.main()

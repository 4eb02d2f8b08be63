""" Testing evidence ingestion, validation and transforms """

from pathlib import Path
import math
import tempfile
import unittest

import numpy as np

try:
    from src.nts.evsynth.evidence import (
        EvidenceError,
        DisconnectedNetworkError,
        Treatment,
        AdArm,
        Study,
        EvidenceNetwork,
        Design,
        DataFormat,
        RiskOfBias,
        Direction,
        load_network_dir,
        export_network,
        validate_network,
        treatment_components,
        center_covariates,
        aggregate_ipd,
        as_aggregate_study,
        reroot_network,
        select_studies,
    )
except ModuleNotFoundError:
    from nts.evsynth.evidence import (
        EvidenceError,
        DisconnectedNetworkError,
        Treatment,
        AdArm,
        Study,
        EvidenceNetwork,
        Design,
        DataFormat,
        RiskOfBias,
        Direction,
        load_network_dir,
        export_network,
        validate_network,
        treatment_components,
        center_covariates,
        aggregate_ipd,
        as_aggregate_study,
        reroot_network,
        select_studies,
    )

TREATMENTS = "id,label,is_active\n1,placebo,false\n2,DF,true\n3,GA,true\n"
STUDIES = (
    "id,design,format,rob,ref_arm\n"
    "S1,RCT,AD,low,1\n"
    "S2,RCT,AD,moderate,1\n"
    "N1,NRS,IPD,high,2\n"
)
AD = (
    "study,treatment,r,n,xbar1\n"
    "S1,1,10,100,40.0\n"
    "S1,2,5,100,38.0\n"
    "S2,1,8,50,\n"
    "S2,3,4,50,\n"
)
IPD = "study,treatment,y,x1\nN1,2,0,30\nN1,2,1,35\nN1,3,1,40\nN1,3,0,45\n"
DIRECTIONS = "study,treatment_b,treatment_k,dir\nS2,3,1,1\n"


def write_network(directory: Path, **tables: str) -> Path:
    """Write the fixture tables, keyword arguments replace single files"""
    files = {
        "treatments.csv": TREATMENTS,
        "studies.csv": STUDIES,
        "ad.csv": AD,
        "ipd.csv": IPD,
        "directions.csv": DIRECTIONS,
    }
    for name, text in tables.items():
        files[f"{name}.csv"] = text
    for name, text in files.items():
        (directory / name).write_text(text, encoding="utf-8")
    return directory


class TestLoadNetwork(unittest.TestCase):
    """
    Test CSV ingestion.
    """

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_load(self) -> None:
        """Fixture loads with placebo as reference"""
        net = load_network_dir(write_network(self.dir))
        self.assertEqual(net.treatment_ids, (1, 2, 3))
        self.assertEqual(net.reference_treatment, 1)
        self.assertEqual(net.covariate_names, ("x1",))
        self.assertEqual(net.covariate_centers, (0.0,))
        s1 = net.study("S1")
        self.assertIs(s1.design, Design.RCT)
        self.assertIs(s1.data_format, DataFormat.AD)
        self.assertEqual(s1.arms, (1, 2))
        self.assertEqual(s1.ad_arm(2).r, 5)
        self.assertEqual(s1.sample_size(), 200)
        n1 = net.study("N1")
        self.assertTrue(n1.is_ipd)
        self.assertEqual(n1.arms, (2, 3))
        self.assertEqual(len(n1.arm_records(3)), 2)
        self.assertFalse(net.treatment(1).is_active)

    def test_moderate_is_high(self) -> None:
        """RoB level moderate is read as high"""
        net = load_network_dir(write_network(self.dir))
        self.assertIs(net.study("S2").rob_level, RiskOfBias.HIGH)
        self.assertIs(RiskOfBias.parse(" Moderate "), RiskOfBias.HIGH)

    def test_reversed_direction(self) -> None:
        """A direction row given as (k, b) is flipped"""
        net = load_network_dir(write_network(self.dir))
        self.assertIs(net.study("S2").direction(3), Direction.FAVOURS_B)
        self.assertIs(net.study("S1").direction(2), Direction.UNKNOWN)

    def test_missing_covariate_mean(self) -> None:
        """Empty xbar cells are NaN"""
        net = load_network_dir(write_network(self.dir))
        self.assertTrue(math.isnan(net.study("S2").ad_arm(1).mean_covariates[0]))

    def test_reference_by_label(self) -> None:
        """Reference can be given by label"""
        net = load_network_dir(write_network(self.dir), reference="GA")
        self.assertEqual(net.reference_treatment, 3)
        with self.assertRaises(EvidenceError):
            load_network_dir(self.dir, reference="nothing")

    def test_events_exceed_n(self) -> None:
        """r > n is reported with its file and row"""
        bad = AD.replace("S1,2,5,100", "S1,2,150,100")
        with self.assertRaises(EvidenceError) as ctx:
            load_network_dir(write_network(self.dir, ad=bad))
        self.assertEqual(ctx.exception.row, 2)
        self.assertTrue(ctx.exception.file.endswith("ad.csv"))
        self.assertIn("row 2", str(ctx.exception))

    def test_non_binary_outcome(self) -> None:
        """IPD outcome must be 0 or 1"""
        bad = IPD.replace("N1,3,0,45", "N1,3,2,45")
        with self.assertRaises(EvidenceError) as ctx:
            load_network_dir(write_network(self.dir, ipd=bad))
        self.assertEqual(ctx.exception.row, 4)

    def test_unknown_study(self) -> None:
        """Arm rows must reference a known study"""
        bad = AD + "S9,1,1,10,\n"
        with self.assertRaises(EvidenceError):
            load_network_dir(write_network(self.dir, ad=bad))

    def test_sparse_treatment_ids(self) -> None:
        """Treatment ids must be 1..K"""
        bad = "id,label,is_active\n1,placebo,false\n2,DF,true\n4,GA,true\n"
        with self.assertRaises(EvidenceError):
            load_network_dir(write_network(self.dir, treatments=bad))

    def test_missing_column(self) -> None:
        """Required columns are checked"""
        bad = "study,treatment,r\nS1,1,10\n"
        with self.assertRaises(EvidenceError):
            load_network_dir(write_network(self.dir, ad=bad))

    def test_export_reloads(self) -> None:
        """An exported network loads back to the same studies and counts"""
        net = load_network_dir(write_network(self.dir))
        out = self.dir / "copy"
        written = export_network(net, out)
        self.assertEqual(len(written), 6)
        again = load_network_dir(out)
        self.assertEqual([s.id for s in again.studies], [s.id for s in net.studies])
        self.assertEqual(again.study("S1").ad, net.study("S1").ad)
        self.assertEqual(again.study("N1").ipd, net.study("N1").ipd)
        self.assertIs(again.study("S2").direction(3), Direction.FAVOURS_B)

    def test_export_keeps_centers(self) -> None:
        """Centered covariates reload bit-identical with their recorded centers"""
        net = center_covariates(load_network_dir(write_network(self.dir)), [37.3])
        out = self.dir / "centered"
        export_network(net, out)
        again = load_network_dir(out)
        self.assertEqual(again.covariate_names, net.covariate_names)
        self.assertEqual(again.covariate_centers, (37.3,))
        for s in net.studies:
            s2 = again.study(s.id)
            self.assertEqual(s2.arms, s.arms)
            self.assertEqual(s2.reference_arm, s.reference_arm)
            np.testing.assert_array_equal(
                np.asarray([r.x for r in s2.ipd], dtype=float).reshape(-1),
                np.asarray([r.x for r in s.ipd], dtype=float).reshape(-1),
            )
            np.testing.assert_array_equal([r.y for r in s2.ipd], [r.y for r in s.ipd])
            np.testing.assert_array_equal(
                np.asarray([a.mean_covariates for a in s2.ad], dtype=float).reshape(-1),
                np.asarray([a.mean_covariates for a in s.ad], dtype=float).reshape(-1),
            )
            np.testing.assert_array_equal([(a.r, a.n) for a in s2.ad], [(a.r, a.n) for a in s.ad])
        raw = again.study("N1").ipd[0].x[0] + again.covariate_centers[0]
        self.assertAlmostEqual(raw, 30.0, places=12)

    def test_bad_covariates_table(self) -> None:
        """Covariate centers must name the loaded covariate columns"""
        with self.assertRaises(EvidenceError):
            load_network_dir(write_network(self.dir, covariates="name,center\nx2,1.0\n"))
        with self.assertRaises(EvidenceError):
            load_network_dir(write_network(self.dir, covariates="name,center\nx1,old\n"))
        net = load_network_dir(write_network(self.dir, covariates="name,center\nx1,40.5\n"))
        self.assertEqual(net.covariate_centers, (40.5,))


class TestValidation(unittest.TestCase):
    """
    Test network validation.
    """

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.net = load_network_dir(write_network(self.dir))

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_report(self) -> None:
        """Connected fixture summary"""
        report = validate_network(self.net)
        self.assertTrue(report.connected)
        self.assertEqual(report.n_treatments, 3)
        self.assertEqual(report.n_studies, 3)
        self.assertEqual(report.comparisons["placebo-DF"], 1)
        self.assertEqual(report.comparisons["DF-GA"], 1)
        self.assertEqual(report.rob_distribution, {"low": 1, "high": 2})
        self.assertEqual(report.design_format["IPD-NRS"], 1)
        self.assertTrue(report.covariate_availability["S1"])
        self.assertFalse(report.covariate_availability["S2"])

    def test_disconnected(self) -> None:
        """Components are listed by label"""
        treatments = TREATMENTS + "4,X,true\n5,Y,true\n"
        studies = STUDIES + "S3,RCT,AD,low,4\n"
        ad = AD + "S3,4,3,30,\nS3,5,2,30,\n"
        net = load_network_dir(write_network(self.dir, treatments=treatments, studies=studies, ad=ad))
        self.assertEqual(treatment_components(net), [[1, 2, 3], [4, 5]])
        with self.assertRaises(DisconnectedNetworkError) as ctx:
            validate_network(net)
        self.assertEqual(ctx.exception.components, [["placebo", "DF", "GA"], ["X", "Y"]])
        self.assertIsInstance(ctx.exception, EvidenceError)

    def test_unobserved_treatments(self) -> None:
        """Sub-networks are judged on their observed treatments"""
        nrs = select_studies(self.net, design=Design.NRS)
        self.assertEqual(len(nrs.treatments), 3)
        with self.assertRaises(DisconnectedNetworkError):
            validate_network(nrs)
        report = validate_network(nrs, require_all_treatments=False)
        self.assertEqual(report.observed_treatments, ["DF", "GA"])
        self.assertTrue(any("not observed" in w for w in report.warnings))

    def test_components_match_union_find(self) -> None:
        """Connectivity agrees with a brute-force union-find on random networks"""
        rng = np.random.default_rng(23)
        for trial in range(200):
            n_treatments = int(rng.integers(2, 9))
            studies = []
            for j in range(int(rng.integers(1, 6))):
                size = min(int(rng.integers(2, 4)), n_treatments)
                arms = tuple(sorted(int(k) + 1 for k in rng.choice(n_treatments, size=size, replace=False)))
                sid = f"T{trial}S{j}"
                studies.append(
                    Study(
                        id=sid,
                        design=Design.RCT,
                        data_format=DataFormat.AD,
                        reference_arm=arms[0],
                        arms=arms,
                        rob_level=RiskOfBias.LOW,
                        ad=tuple(AdArm(sid, k, 1, 10) for k in arms),
                    )
                )
            net = EvidenceNetwork(
                treatments=tuple(Treatment(k, f"t{k}") for k in range(1, n_treatments + 1)),
                studies=tuple(studies),
                reference_treatment=1,
            )
            parent = {k: k for k in range(1, n_treatments + 1)}

            def find(k: int) -> int:
                while parent[k] != k:
                    k = parent[k]
                return k

            for s in studies:
                for k in s.arms[1:]:
                    parent[find(k)] = find(s.arms[0])
            groups: dict[int, list[int]] = {}
            for k in range(1, n_treatments + 1):
                groups.setdefault(find(k), []).append(k)
            expected = sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
            self.assertEqual(treatment_components(net), expected)
            if len(expected) > 1:
                with self.assertRaises(DisconnectedNetworkError):
                    validate_network(net)
            else:
                self.assertTrue(validate_network(net).connected)


class TestTransforms(unittest.TestCase):
    """
    Test network transforms.
    """

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.net = load_network_dir(write_network(Path(self.tmp.name)))

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_center(self) -> None:
        """Centering shifts covariates and records the total shift"""
        net = center_covariates(self.net, [38.0])
        self.assertEqual(net.covariate_centers, (38.0,))
        self.assertAlmostEqual(net.study("S1").ad_arm(1).mean_covariates[0], 2.0)
        self.assertAlmostEqual(net.study("N1").ipd[0].x[0], -8.0)
        again = center_covariates(net, [2.0])
        self.assertEqual(again.covariate_centers, (40.0,))
        self.assertIs(center_covariates(self.net, [0.0]), self.net)
        with self.assertRaises(EvidenceError):
            center_covariates(self.net, [1.0, 2.0])

    def test_aggregate_ipd(self) -> None:
        """IPD collapses to arm counts and covariate means"""
        arms = aggregate_ipd(self.net.study("N1"))
        self.assertEqual([(a.treatment_id, a.r, a.n) for a in arms], [(2, 1, 2), (3, 1, 2)])
        self.assertAlmostEqual(arms[0].mean_covariates[0], 32.5)
        study = as_aggregate_study(self.net.study("N1"))
        self.assertIs(study.data_format, DataFormat.AD)
        self.assertEqual(study.ipd, ())
        with self.assertRaises(EvidenceError):
            aggregate_ipd(self.net.study("S1"))

    def test_reroot(self) -> None:
        """Reference changes by id or label"""
        self.assertEqual(reroot_network(self.net, "DF").reference_treatment, 2)
        self.assertEqual(reroot_network(self.net, 3).reference_treatment, 3)
        with self.assertRaises(EvidenceError):
            reroot_network(self.net, "unknown")

    def test_select(self) -> None:
        """Study selection keeps every treatment"""
        rct = select_studies(self.net, design=Design.RCT)
        self.assertEqual([s.id for s in rct.studies], ["S1", "S2"])
        self.assertEqual(rct.treatment_ids, (1, 2, 3))
        ipd = select_studies(self.net, data_format=DataFormat.IPD)
        self.assertEqual([s.id for s in ipd.studies], ["N1"])
        self.assertEqual(len(select_studies(self.net, ids=["S2"]).studies), 1)


if __name__ == "__main__":
    unittest.main()

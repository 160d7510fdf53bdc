import pytest

from polypuzzle.suites import SUITE_NAMES, run_suite


REQUIRED_KEYS = {"lemma", "instance", "verdict", "witnesses"}


class TestSuiteRunner:
    def test_unknown_suite_rejected(self, quad_tree):
        with pytest.raises(ValueError):
            run_suite("nonsense", quad_tree)

    @pytest.mark.parametrize("name", SUITE_NAMES)
    def test_quad_all_suites_clean(self, quad_tree, name):
        records = run_suite(name, quad_tree, seed=5, horizon=48)
        assert records, name
        for rec in records:
            assert REQUIRED_KEYS <= set(rec)
            assert rec["verdict"] != "violation", rec

    @pytest.mark.parametrize("name", SUITE_NAMES)
    def test_bh_all_suites_clean(self, bh_tree, name):
        records = run_suite(name, bh_tree, seed=5, horizon=48)
        for rec in records:
            assert rec["verdict"] != "violation", rec

    def test_feed_unionnice_covers_both_branches(self, quart_feed_tree):
        records = run_suite("unionnice", quart_feed_tree, seed=0, horizon=32)
        hyps = {rec["instance"]["hypothesis"] for rec in records}
        assert "depth_inequality" in hyps
        assert all(rec["verdict"] != "violation" for rec in records)

    def test_feed_landing_suites(self, quart_feed_tree):
        for name in ("lemma31", "corollary32"):
            records = run_suite(name, quart_feed_tree, seed=2, horizon=48)
            assert records
            assert all(rec["verdict"] != "violation" for rec in records)

    def test_annulus_reports_instances(self, bh_tree):
        records = run_suite("annulus", bh_tree, horizon=32)
        assert records
        verdicts = {rec["verdict"] for rec in records}
        assert "violation" not in verdicts

import shutil
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import pandas as pd
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, TestCase

from ..eval import LockstepEvaluator
from ..models import CampaignRun
from ..reporting import parse_json_report
from .fixtures import SAMPLES, OverOne

SCHEMA = str(SAMPLES / "signalling.bds")
RULES = str(SAMPLES / "signalling.bdr")
SCENARIOS = str(SAMPLES / "signalling.bdt")


def bdv(*args) -> tuple[int, str, str]:
    """Run `manage.py bdv` and return its exit code with what it wrote."""
    stdout, stderr = StringIO(), StringIO()
    try:
        call_command("bdv", *args, stdout=stdout, stderr=stderr)
    except CommandError as exc:
        return exc.returncode, stdout.getvalue(), stderr.getvalue()
    return 0, stdout.getvalue(), stderr.getvalue()


class WorkspaceMixin:
    def setUp(self):
        super().setUp()
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        self.path = Path(directory.name)

    def write(self, name: str, text: str) -> str:
        path = self.path / name
        path.write_text(text, encoding="utf-8")
        return str(path)


class ValidateCommandTests(WorkspaceMixin, SimpleTestCase):
    def test_sample_reports_unlinked_signal(self):
        code, out, _ = bdv("validate", "--schema", SCHEMA, "--rules", RULES, "--jobs", "1")
        self.assertEqual(code, 1)
        self.assertIn("KO    signal_linked", out)
        self.assertIn("signal s2 is not linked to its interlocking", out)
        self.assertIn("TOTAL 3 OK, 1 KO, 0 ERROR, 1 counterexample(s)", out)

    def test_consistent_dataset_exits_zero(self):
        data = self.path / "data"
        shutil.copytree(SAMPLES, data)
        (data / "linked.csv").write_text("signal,interlocking\ns1,ik1\ns2,ik1\ns3,ik2\n", encoding="utf-8")
        code, out, _ = bdv("validate", "--schema", SCHEMA, "--rules", RULES, "--data", str(data), "--jobs", "1")
        self.assertEqual(code, 0)
        self.assertIn("TOTAL 4 OK, 0 KO, 0 ERROR", out)

    def test_syntax_error_exits_three_without_report(self):
        broken = self.write("broken.bdr", 'RULE broken WHERE x : VERIFY x = 1 MESSAGE "" END\n')
        code, out, err = bdv("validate", "--schema", SCHEMA, "--rules", broken)
        self.assertEqual(code, 3)
        self.assertEqual(out, "")
        self.assertIn("broken.bdr:1:", err)

    def test_error_rule_exits_two(self):
        rule = self.write(
            "unguarded.bdr",
            'RULE unguarded WHERE sig : dom(territory) VERIFY linked(sig) = territory(sig) MESSAGE "x" END\n',
        )
        code, out, _ = bdv("validate", "--schema", SCHEMA, "--rules", rule, "--jobs", "1")
        self.assertEqual(code, 2)
        self.assertIn("application-outside-domain", out)

    def test_json_report_and_counterexample_export(self):
        out_path = self.path / "report.json"
        export = self.path / "faults.csv"
        code, out, _ = bdv(
            "validate",
            "--schema",
            SCHEMA,
            "--rules",
            RULES,
            "--format",
            "json",
            "--out",
            str(out_path),
            "--counterexamples",
            str(export),
            "--jobs",
            "1",
        )
        self.assertEqual((code, out), (1, ""))
        report = parse_json_report(out_path.read_text(encoding="utf-8"))
        self.assertEqual(report.totals.ko, 1)
        frame = pd.read_csv(export, dtype=str)
        self.assertEqual(list(frame["assignment"]), ["sig=s2"])
        self.assertEqual(list(frame["class"]), ["linking"])

    def test_redundant_mode_agrees(self):
        code, out, _ = bdv("validate", "--schema", SCHEMA, "--rules", RULES, "--redundant", "--jobs", "1")
        self.assertEqual(code, 1)
        self.assertIn("TOTAL 3 OK, 1 KO", out)

    def test_fail_fast(self):
        code, out, _ = bdv("validate", "--schema", SCHEMA, "--rules", RULES, "--fail-fast", "--jobs", "1")
        self.assertEqual(code, 1)
        self.assertIn("not run (fail-fast): signal_protects_track, track_length_in_range", out)

    def test_missing_rules_is_usage_error(self):
        code, _, err = bdv("validate", "--schema", SCHEMA)
        self.assertEqual(code, 3)
        self.assertIn("at least one rule file is required", err)

    def test_divergence_exits_four(self):
        rule = self.write("sum.bdr", 'RULE sum WHERE a : 1..3 VERIFY a + 1 = 2 MESSAGE "m" END\n')
        with mock.patch(
            "core.validation.rules.LockstepEvaluator", lambda u: LockstepEvaluator(u, secondary=OverOne(u))
        ):
            code, out, err = bdv("validate", "--schema", SCHEMA, "--rules", rule, "--redundant", "--jobs", "1")
        self.assertEqual((code, out), (4, ""))
        self.assertIn("evaluators diverge on rule sum at a=1", err)

    def test_rule_file_not_utf8(self):
        rule = self.path / "latin.bdr"
        rule.write_bytes(b"RULE caf\xe9 END\n")
        code, out, err = bdv("validate", "--schema", SCHEMA, "--rules", str(rule))
        self.assertEqual((code, out), (3, ""))
        self.assertIn("latin.bdr:1:1: encoding: not valid UTF-8 at byte 8", err)

    def test_schema_file_not_utf8(self):
        schema = self.path / "latin.bds"
        schema.write_bytes(b"\xff")
        code, _, err = bdv("validate", "--schema", str(schema), "--rules", RULES)
        self.assertEqual(code, 3)
        self.assertIn("latin.bds:1:1: encoding: not valid UTF-8 at byte 0", err)


class SaveCampaignTests(TestCase):
    def test_saved_campaign(self):
        code, _, _ = bdv("validate", "--schema", SCHEMA, "--rules", RULES, "--save", "--jobs", "1")
        self.assertEqual(code, 1)
        run = CampaignRun.objects.get()
        self.assertEqual(run.status, CampaignRun.Verdict.KO)
        self.assertEqual((run.rules_ok, run.rules_ko, run.counterexample_count), (3, 1, 1))
        self.assertEqual(run.outcomes.get(rule="signal_linked").counterexample_count, 1)
        self.assertEqual(run.load_report().totals.ko, 1)

    def test_not_saved_by_default(self):
        bdv("validate", "--schema", SCHEMA, "--rules", RULES, "--jobs", "1")
        self.assertFalse(CampaignRun.objects.exists())


class CheckCommandTests(WorkspaceMixin, SimpleTestCase):
    def test_sample_rules_typecheck(self):
        code, out, _ = bdv("check", "--schema", SCHEMA, "--rules", RULES)
        self.assertEqual(code, 0)
        self.assertEqual(out, "4 rule(s) parse and typecheck\n")

    def test_type_error(self):
        rule = self.write("typo.bdr", 'RULE typo WHERE sig : dom(territory) VERIFY sig = 1 MESSAGE "m" END\n')
        code, _, err = bdv("check", "--schema", SCHEMA, "--rules", rule)
        self.assertEqual(code, 3)
        self.assertIn("type mismatch", err)


class TestCommandTests(WorkspaceMixin, SimpleTestCase):
    def test_sample_scenarios(self):
        code, out, _ = bdv("test", SCENARIOS)
        self.assertEqual(code, 0)
        self.assertIn("PASS  unlinked_signal_is_reported  (signal_linked: KO 1)", out)
        self.assertIn("9/9 scenario(s) passed, 0 rule(s) uncovered", out)

    def test_uncovered_rule(self):
        extra = self.write("extra.bdr", 'RULE lonely WHERE sig : dom(territory) VERIFY sig = sig MESSAGE "" END\n')
        code, out, _ = bdv("test", SCENARIOS, "--rules", RULES, extra)
        self.assertEqual(code, 1)
        self.assertIn("UNCOVERED  lonely", out)

    def test_failing_scenario(self):
        text = (SAMPLES / "signalling.bdt").read_text(encoding="utf-8")
        text = text.replace("KO 1 ASSIGNMENTS (sig = s2)\nEND\n\nSCENARIO wrongly", "KO 3\nEND\n\nSCENARIO wrongly")
        shutil.copy(RULES, self.path / "signalling.bdr")
        scenarios = self.write("signalling.bdt", text)
        code, out, _ = bdv("test", scenarios)
        self.assertEqual(code, 1)
        self.assertIn("FAIL  unlinked_signal_is_reported  (signal_linked: expected KO 3, got KO 1)", out)

    def test_uncovered_rule_in_from_file(self):
        shutil.copytree(SAMPLES, self.path, dirs_exist_ok=True)
        with (self.path / "signalling.bdr").open("a", encoding="utf-8") as rules:
            rules.write('\nRULE lonely WHERE sig : dom(territory) VERIFY sig = sig MESSAGE "" END\n')
        code, out, _ = bdv("test", str(self.path / "signalling.bdt"))
        self.assertEqual(code, 1)
        self.assertIn("UNCOVERED  lonely", out)
        self.assertIn("9/9 scenario(s) passed, 1 rule(s) uncovered", out)

    def test_scenario_file_not_utf8(self):
        scenarios = self.path / "latin.bdt"
        scenarios.write_bytes(b"\xff")
        code, _, err = bdv("test", str(scenarios))
        self.assertEqual(code, 3)
        self.assertIn("latin.bdt:1:1: encoding", err)

    def test_no_scenario_file(self):
        self.assertEqual(bdv("test")[0], 3)


class ExplainCommandTests(SimpleTestCase):
    def test_typing_only(self):
        code, out, _ = bdv("explain", "signal_linked", "--schema", SCHEMA, "--rules", RULES)
        self.assertEqual(code, 0)
        self.assertIn("Typing:", out)
        self.assertIn("sig : t_signal", out)

    def test_trace_on_dataset(self):
        code, out, _ = bdv("explain", "signal_linked", "--schema", SCHEMA, "--rules", RULES, "--data", str(SAMPLES))
        self.assertEqual(code, 0)
        self.assertIn("first failing tuple: sig=s2", out)
        self.assertIn("VERIFY = FALSE", out)

    def test_trace_on_fixture(self):
        code, out, _ = bdv(
            "explain",
            "track_length_in_range",
            "--schema",
            SCHEMA,
            "--rules",
            RULES,
            "--fixture",
            SCENARIOS,
            "--scenario",
            "track_lengths_out_of_range",
        )
        self.assertEqual(code, 0)
        self.assertIn("3 tuple(s) selected, first failing tuple: trk=t1", out)

    def test_unknown_rule(self):
        code, _, err = bdv("explain", "nope", "--schema", SCHEMA, "--rules", RULES)
        self.assertEqual(code, 3)
        self.assertIn("unknown rule nope", err)

from django.test import SimpleTestCase

from ..eval import WDKind
from ..exceptions import ScenarioError
from ..harness import coverage_check, load_scenario_file, parse_scenario_file, run_scenarios
from ..lang import parse_rule_file
from ..rules import Status
from .fixtures import SAMPLES, SIGNAL_LINKED, UNGUARDED

FIXTURE = """
  FIXTURE
    CARRIERS
      t_signal = {s1, s2, s3}
      t_interlocking = {ik1}
    CONSTANTS
      territory : t_signal +-> t_interlocking = {s1 |-> ik1, s2 |-> ik1}
      linked : t_signal +-> t_interlocking = {s1 |-> ik1}
"""

LINKED_FIXTURE = """
  FIXTURE
    CARRIERS
      t_signal = {s1, s2}
      t_interlocking = {ik1}
    CONSTANTS
      territory : t_signal +-> t_interlocking = {s1 |-> ik1, s2 |-> ik1}
      linked : t_signal +-> t_interlocking = {s1 |-> ik1, s2 |-> ik1}
"""


def scenario(name: str, rule: str, fixture: str, expect: str) -> str:
    return f"SCENARIO {name}\n  RULE {rule}\n{fixture}  EXPECT {expect}\nEND\n"


RULES = parse_rule_file(SIGNAL_LINKED + UNGUARDED)


class ParseScenarioTests(SimpleTestCase):
    def test_expectations(self):
        text = (
            scenario("passes", "signal_linked", LINKED_FIXTURE, "OK")
            + scenario("fails", "signal_linked", FIXTURE, "KO 1 ASSIGNMENTS (sig = s2)")
            + scenario("breaks", "unguarded", FIXTURE, "ERROR application-outside-domain")
            + scenario("divides", "unguarded", FIXTURE, 'ERROR "mod-out-of-domain"')
        )
        passes, fails, breaks, divides = parse_scenario_file(text)
        self.assertIs(passes.expect.status, Status.OK)
        self.assertEqual((fails.expect.status, fails.expect.count), (Status.KO, 1))
        self.assertEqual(list(fails.expect.assignments[0]), ["sig"])
        self.assertIs(breaks.expect.wd_kind, WDKind.APPLICATION_OUTSIDE_DOMAIN)
        self.assertIs(divides.expect.wd_kind, WDKind.MOD_OUT_OF_DOMAIN)
        self.assertEqual([c.name for c in fails.fixture.constants], ["territory", "linked"])
        self.assertIsNone(fails.rule_file)

    def test_duplicate_scenario_name(self):
        text = scenario("twice", "signal_linked", FIXTURE, "OK") * 2
        with self.assertRaises(ScenarioError) as caught:
            parse_scenario_file(text)
        self.assertIn("duplicate scenario name twice", str(caught.exception))

    def test_fixture_constants_are_literals(self):
        fixture = FIXTURE.replace(
            "linked : t_signal +-> t_interlocking = {s1 |-> ik1}",
            'linked : t_signal +-> t_interlocking FROM "linked.csv" COLS (signal, interlocking)',
        )
        with self.assertRaises(ScenarioError) as caught:
            parse_scenario_file(scenario("from_file", "signal_linked", fixture, "OK"))
        self.assertIn("fixture constant linked must be given by a literal", str(caught.exception))

    def test_unknown_error_kind(self):
        with self.assertRaises(ScenarioError) as caught:
            parse_scenario_file(scenario("odd", "unguarded", FIXTURE, "ERROR out-of-luck"))
        self.assertIn("unknown well-definedness error kind out-of-luck", str(caught.exception))


class RunScenarioTests(SimpleTestCase):
    def run_one(self, fixture: str, expect: str, rule: str = "signal_linked"):
        [result] = run_scenarios(parse_scenario_file(scenario("case", rule, fixture, expect)), RULES).results
        return result

    def test_seeded_fault_found(self):
        result = self.run_one(FIXTURE, "KO 1 ASSIGNMENTS (sig = s2)")
        self.assertTrue(result.passed, result.problems)
        self.assertEqual(result.actual, "KO 1")

    def test_consistent_fixture_ok(self):
        self.assertTrue(self.run_one(LINKED_FIXTURE, "OK").passed)

    def test_count_mismatch_reported(self):
        result = self.run_one(FIXTURE, "KO 2")
        self.assertFalse(result.passed)
        self.assertEqual(result.problems, ["expected KO 2, got KO 1"])

    def test_wrong_assignment_reported(self):
        result = self.run_one(FIXTURE, "KO 1 ASSIGNMENTS (sig = s1)")
        self.assertFalse(result.passed)
        self.assertEqual(result.problems, ["no counterexample with sig=s1"])

    def test_status_mismatch(self):
        result = self.run_one(FIXTURE, "OK")
        self.assertFalse(result.passed)
        self.assertEqual((result.expected, result.actual), ("OK", "KO 1"))

    def test_error_expectation(self):
        result = self.run_one(FIXTURE, "ERROR application-outside-domain", rule="unguarded")
        self.assertTrue(result.passed, result.problems)

    def test_unknown_rule(self):
        result = self.run_one(FIXTURE, "OK", rule="no_such_rule")
        self.assertFalse(result.passed)
        self.assertEqual(result.actual, "not run")
        self.assertIn("unknown rule no_such_rule", result.problems[0])

    def test_results_sorted_by_name(self):
        text = scenario("b_second", "signal_linked", LINKED_FIXTURE, "OK") + scenario(
            "a_first", "signal_linked", FIXTURE, "KO 1"
        )
        report = run_scenarios(parse_scenario_file(text), RULES)
        self.assertEqual([r.name for r in report.results], ["a_first", "b_second"])
        self.assertTrue(report.passed)

    def test_sample_suite_passes(self):
        scenarios = load_scenario_file(SAMPLES / "signalling.bdt")
        report = run_scenarios(scenarios)
        self.assertEqual(len(report.results), 9)
        for result in report.results:
            with self.subTest(scenario=result.name):
                self.assertTrue(result.passed, result.problems)


class CoverageTests(SimpleTestCase):
    def scenarios(self, *pairs):
        fixtures = {"OK": LINKED_FIXTURE, "KO": FIXTURE}
        text = "".join(
            scenario(f"s{i}", rule, fixtures[expect], expect if expect == "OK" else "KO 1")
            for i, (rule, expect) in enumerate(pairs)
        )
        return parse_scenario_file(text)

    def test_fully_covered(self):
        self.assertEqual(coverage_check(["r1"], self.scenarios(("r1", "OK"), ("r1", "KO"))), [])

    def test_rule_without_scenarios(self):
        self.assertEqual(coverage_check(["r1", "r2"], self.scenarios(("r1", "OK"), ("r1", "KO"))), ["r2"])

    def test_missing_ko_scenario(self):
        self.assertEqual(coverage_check(["r1"], self.scenarios(("r1", "OK"))), ["r1"])

    def test_sample_rules_covered(self):
        rules = parse_rule_file((SAMPLES / "signalling.bdr").read_text(encoding="utf-8"))
        self.assertEqual(coverage_check(rules, load_scenario_file(SAMPLES / "signalling.bdt")), [])

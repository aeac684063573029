import random

from django.test import SimpleTestCase, tag

from ..exceptions import SyntaxDiagnosticError, TypeDiagnosticError
from ..kernel import INTEGER, GivenType, PowerType, ProdType
from ..lang import (
    Declarations,
    ast,
    consistency_errors,
    parse_expression,
    parse_predicate,
    parse_rule_file,
    pretty_print,
    typecheck,
)
from .fixtures import SIGNAL_LINKED, signalling
from .generators import TermGenerator

SIGNAL = GivenType("t_signal")
INTERLOCKING = GivenType("t_interlocking")
DECLS = Declarations(
    frozenset({"t_signal", "t_interlocking"}),
    {"territory": PowerType(ProdType(SIGNAL, INTERLOCKING)), "linked": PowerType(ProdType(SIGNAL, INTERLOCKING))},
)


def ident(name):
    return ast.Ident(name)


def num(n):
    return ast.IntLit(n)


class ParseRuleFileTests(SimpleTestCase):
    def test_single_rule(self):
        text = (
            "RULE r1 WHERE sig : dom(territory) VERIFY territory(sig) = linked(sig) "
            'MESSAGE "signal ${sig} not linked" END'
        )
        [rule] = parse_rule_file(text)
        self.assertEqual(rule.name, "r1")
        self.assertEqual(rule.where_bindings, [("sig", ast.Call("dom", ident("territory")))])
        self.assertEqual(rule.where_filters, [])
        self.assertEqual(rule.message, "signal ${sig} not linked")
        self.assertEqual(rule.error_class, "r1")
        self.assertIs(rule.severity, ast.Severity.ERROR)

    def test_header_clauses(self):
        text = """
        RULE r2 DOC "documented" CLASS linking SEVERITY WARNING
        WHERE sig : dom(territory) & sig /: dom(linked)
        VERIFY sig = sig
        MESSAGE "m"
        END
        """
        [rule] = parse_rule_file(text)
        self.assertEqual((rule.doc, rule.error_class, rule.severity), ("documented", "linking", ast.Severity.WARNING))
        self.assertEqual(rule.variables, ["sig"])
        self.assertEqual(len(rule.where_filters), 1)

    def test_duplicate_name(self):
        text = SIGNAL_LINKED + SIGNAL_LINKED
        with self.assertRaises(SyntaxDiagnosticError) as caught:
            parse_rule_file(text)
        self.assertIn("duplicate rule name signal_linked", str(caught.exception))

    def test_empty_file(self):
        self.assertEqual(parse_rule_file(""), [])
        self.assertEqual(parse_rule_file("// only a comment\n"), [])

    def test_every_error_reported_with_position(self):
        text = 'RULE a WHERE x : VERIFY x = 1 MESSAGE "" END\nRULE b WHERE y : {1} VERIFY y = MESSAGE "" END\n'
        with self.assertRaises(SyntaxDiagnosticError) as caught:
            parse_rule_file(text, "broken.bdr")
        lines = [d.span.start_line for d in caught.exception.diagnostics]
        self.assertEqual(lines, [1, 2])
        self.assertTrue(all(d.span.file == "broken.bdr" for d in caught.exception.diagnostics))

    def test_unsupported_arrow(self):
        with self.assertRaises(SyntaxDiagnosticError) as caught:
            parse_predicate("linked : t_signal >+> t_interlocking")
        self.assertIn("unsupported arrow", str(caught.exception))


class PrecedenceTests(SimpleTestCase):
    def test_multiplication_binds_tighter(self):
        expected = ast.Binary("+", num(1), ast.Binary("*", num(2), num(3)))
        self.assertEqual(parse_expression("1+2*3"), expected)

    def test_conjunction_binds_tighter_than_implication(self):
        pred = parse_predicate("x : S & y : T => x = y")
        expected = ast.Connective(
            "=>",
            ast.Connective("&", ast.Compare(":", ident("x"), ident("S")), ast.Compare(":", ident("y"), ident("T"))),
            ast.Compare("=", ident("x"), ident("y")),
        )
        self.assertEqual(pred, expected)

    def test_relation_binds_tighter_than_not(self):
        self.assertEqual(parse_predicate("not x = 1"), ast.Not(ast.Compare("=", ident("x"), num(1))))

    def test_left_associative_arithmetic(self):
        expected = ast.Binary("-", ast.Binary("-", num(10), num(3)), num(2))
        self.assertEqual(parse_expression("10 - 3 - 2"), expected)

    def test_maplet_binds_loosest(self):
        expected = ast.Binary("|->", num(1), ast.Binary("+", num(2), num(3)))
        self.assertEqual(parse_expression("1 |-> 2 + 3"), expected)

    def test_set_difference_shares_additive_level(self):
        one = ast.SetExt((num(1),))
        expected = ast.Binary("\\/", one, ast.Binary("-", one, one))
        self.assertEqual(parse_expression("{1} \\/ {1} - {1}"), expected)

    def test_cartesian_product_shares_multiplicative_level(self):
        expected = ast.Binary("..", ast.Binary("..", num(1), ast.Binary("*", num(2), num(3))), num(4))
        self.assertEqual(parse_expression("1..2 * 3..4"), expected)
        product = ast.Binary("*", ast.Binary("..", num(1), num(2)), ast.Binary("..", num(3), num(4)))
        self.assertEqual(parse_expression("(1..2) * (3..4)"), product)

    def test_smallest_integer_literal(self):
        self.assertEqual(parse_expression("-9223372036854775808"), num(-9223372036854775808))
        self.assertEqual(parse_expression("-1"), ast.Neg(num(1)))
        with self.assertRaises(SyntaxDiagnosticError):
            parse_expression("9223372036854775808")

    def test_parenthesized_predicate_and_expression(self):
        pred = parse_predicate("(x + 1) * 2 = 4 & (x = 1 or x = 2)")
        self.assertIsInstance(pred, ast.Connective)
        self.assertEqual(pred.left.left, ast.Binary("*", ast.Binary("+", ident("x"), num(1)), num(2)))
        self.assertEqual(pred.right.op, "or")


class TypecheckTests(SimpleTestCase):
    def test_card_plus_one(self):
        typed = typecheck(parse_expression("card({1,2}) + 1"), Declarations())
        self.assertEqual(typed.ty, INTEGER)

    def test_mixed_set_rejected(self):
        with self.assertRaises(TypeDiagnosticError) as caught:
            typecheck(parse_expression("{1} \\/ {TRUE}"), Declarations())
        self.assertIn("type mismatch", str(caught.exception))

    def test_function_application(self):
        typed = typecheck(parse_expression("territory(sig)"), DECLS, {"sig": SIGNAL})
        self.assertEqual(typed.ty, INTERLOCKING)

    def test_star_and_minus_by_operand_type(self):
        product = typecheck(parse_expression("dom(territory) * ran(territory)"), DECLS)
        self.assertEqual(product.ty, PowerType(ProdType(SIGNAL, INTERLOCKING)))
        difference = typecheck(parse_expression("dom(territory) - dom(linked)"), DECLS)
        self.assertEqual(difference.ty, PowerType(SIGNAL))
        self.assertEqual(typecheck(parse_expression("3 * 4 - 1"), DECLS).ty, INTEGER)

    def test_unknown_identifier(self):
        with self.assertRaises(TypeDiagnosticError) as caught:
            typecheck(parse_predicate("sig : dom(territories)"), DECLS, {"sig": SIGNAL})
        self.assertIn("territories", str(caught.exception))

    def test_empty_set_resolved_from_context(self):
        typed = typecheck(parse_predicate("dom(territory) /= {}"), DECLS)
        self.assertEqual(typed.right.ty, PowerType(SIGNAL))

    def test_unresolvable_empty_set(self):
        with self.assertRaises(TypeDiagnosticError):
            typecheck(parse_predicate("{} = {}"), Declarations())

    def test_untyped_empty_binding_domain(self):
        (rule,) = parse_rule_file('RULE none WHERE sig : {} VERIFY sig = sig MESSAGE "" END\n')
        with self.assertRaises(TypeDiagnosticError):
            typecheck(rule, DECLS)
        (rule,) = parse_rule_file(
            'RULE none WHERE sig : dom(territory) - dom(territory) VERIFY sig = sig MESSAGE "" END\n'
        )
        self.assertEqual(typecheck(rule, DECLS).where[0].domain.ty, PowerType(SIGNAL))

    def test_rule_binding_domain_typed(self):
        [rule] = parse_rule_file(SIGNAL_LINKED)
        typed = typecheck(rule, signalling().declarations)
        self.assertEqual(typed.where[0].domain.ty, PowerType(SIGNAL))

    def test_deterministic_diagnostics(self):
        pred = parse_predicate("x + TRUE = 1 & y : dom(nothing)")
        messages = []
        for _ in range(2):
            with self.assertRaises(TypeDiagnosticError) as caught:
                typecheck(pred, Declarations(), {"x": INTEGER, "y": INTEGER})
            messages.append(str(caught.exception))
        self.assertEqual(messages[0], messages[1])

    def test_typed_tree_is_consistent(self):
        text = "!(x).(x : 1..3 => x * x <= 9) & card({y | y : 1..5 & y mod 2 = 0}) = 2"
        typed = typecheck(parse_predicate(text), DECLS)
        self.assertEqual(consistency_errors(typed), [])


class PrettyPrintTests(SimpleTestCase):
    def test_precedence_preserved(self):
        self.assertEqual(pretty_print(ast.Binary("+", num(1), ast.Binary("*", num(2), num(3)))), "1 + 2 * 3")

    def test_parentheses_added_where_needed(self):
        a = ast.Compare("=", ident("a"), num(1))
        b = ast.Compare("=", ident("b"), num(2))
        c = ast.Compare("=", ident("c"), num(3))
        self.assertEqual(pretty_print(ast.Connective("&", a, ast.Connective("or", b, c))), "a = 1 & (b = 2 or c = 3)")

    def test_empty_set(self):
        self.assertEqual(pretty_print(ast.SetExt(())), "{}")

    def test_rule_round_trip(self):
        [rule] = parse_rule_file(SIGNAL_LINKED)
        self.assertEqual(parse_rule_file(pretty_print(rule)), [rule])

    @tag("slow")
    def test_generated_predicates_round_trip(self):
        for seed in range(300):
            generator = TermGenerator(random.Random(seed))
            text = generator.predicate({})
            with self.subTest(seed=seed, text=text):
                pred = parse_predicate(text)
                self.assertEqual(parse_predicate(pretty_print(pred)), pred)

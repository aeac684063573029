"""
Seeded random universes, predicates and rules for the property tests.

Terms are produced as source text, type-directed so that almost everything typechecks, and
fully parenthesized so that the generated shape does not depend on operator precedence.
"""

import random

from ..kernel import INTEGER, Atom, GivenType, Int, Pair, PowerType, ProdType, SetV
from ..universe import Universe

CARRIER = "A"
ATOM = GivenType(CARRIER)
ATOM_SET = PowerType(ATOM)
INT_SET = PowerType(INTEGER)
REL = PowerType(ProdType(ATOM, ATOM))
FUN = PowerType(ProdType(ATOM, INTEGER))

SMALL = range(-8, 9)
ARROWS = ["+->", "-->", ">->", "-->>", ">->>"]


def atoms(n: int) -> list[Atom]:
    return [Atom(CARRIER, f"a{i}") for i in range(1, n + 1)]


def random_universe(rng: random.Random, max_atoms: int = 6, max_pairs: int = 12) -> Universe:
    """
    One carrier `A` of up to six atoms and four constants:
    r : A <-> A, f : A <-> INTEGER (not always functional), s : POW(INTEGER), n : INTEGER
    """
    elements = atoms(rng.randint(1, max_atoms))
    r = {Pair(rng.choice(elements), rng.choice(elements)) for _ in range(rng.randint(0, max_pairs))}
    f = {Pair(rng.choice(elements), Int(rng.choice(SMALL))) for _ in range(rng.randint(0, max_pairs))}
    s = {Int(rng.choice(SMALL)) for _ in range(rng.randint(0, 6))}
    return Universe(
        carriers={CARRIER: SetV.of(elements)},
        constants={"r": SetV.of(r), "f": SetV.of(f), "s": SetV.of(s), "n": Int(rng.choice(SMALL))},
        types={"r": REL, "f": FUN, "s": INT_SET, "n": INTEGER},
    )


class TermGenerator:
    """
    Random well-typed terms over the constants of `random_universe`
    """

    def __init__(self, rng: random.Random, max_depth: int = 3):
        self.rng = rng
        self.max_depth = max_depth
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"x{self.counter}"

    def _vars(self, scope: dict, t) -> list[str]:
        return [name for name, ty in scope.items() if ty == t]

    def _pick(self, depth: int, leaves: list, nodes: list):
        if depth >= self.max_depth or not nodes or self.rng.random() < 0.3:
            return self.rng.choice(leaves)()
        return self.rng.choice(nodes)()

    # ---- expressions ----
    def integer(self, scope: dict, depth: int = 0) -> str:
        d = depth + 1
        leaves = [
            lambda: str(self.rng.choice(range(0, 9))),
            lambda: f"(-{self.rng.choice(range(1, 9))})",
            lambda: "n",
        ]
        leaves += [lambda v=v: v for v in self._vars(scope, INTEGER)]
        nodes = [
            lambda: f"({self.integer(scope, d)} + {self.integer(scope, d)})",
            lambda: f"({self.integer(scope, d)} - {self.integer(scope, d)})",
            lambda: f"({self.integer(scope, d)} * {self.integer(scope, d)})",
            lambda: f"({self.integer(scope, d)} / {self.integer(scope, d)})",
            lambda: f"({self.integer(scope, d)} mod {self.integer(scope, d)})",
            lambda: f"card({self.any_set(scope, d)})",
            lambda: f"min({self.int_set(scope, d)})",
            lambda: f"max({self.int_set(scope, d)})",
        ]
        if self._vars(scope, ATOM):
            nodes.append(lambda: f"f({self.atom(scope)})")
        return self._pick(depth, leaves, nodes)

    def atom(self, scope: dict) -> str:
        # atoms have no literal syntax; only bound variables denote them
        return self.rng.choice(self._vars(scope, ATOM))

    def int_set(self, scope: dict, depth: int = 0) -> str:
        d = depth + 1
        leaves = [
            lambda: "s",
            lambda: "ran(f)",
            lambda: f"({self.rng.choice(SMALL)} .. {self.rng.choice(SMALL)})",
        ]
        nodes = [
            lambda: f"{{{self.integer(scope, d)}, {self.integer(scope, d)}}}",
            lambda: f"({self.integer(scope, d)} .. {self.integer(scope, d)})",
            lambda: f"({self.int_set(scope, d)} \\/ {self.int_set(scope, d)})",
            lambda: f"({self.int_set(scope, d)} /\\ {self.int_set(scope, d)})",
            lambda: f"({self.int_set(scope, d)} - {self.int_set(scope, d)})",
            lambda: f"f[{self.atom_set(scope, d)}]",
            lambda: self.comprehension(scope, d, INTEGER),
        ]
        return self._pick(depth, leaves, nodes)

    def atom_set(self, scope: dict, depth: int = 0) -> str:
        d = depth + 1
        leaves = [lambda: CARRIER, lambda: "dom(r)", lambda: "ran(r)", lambda: "dom(f)"]
        leaves += [lambda v=v: f"{{{v}}}" for v in self._vars(scope, ATOM)]
        nodes = [
            lambda: f"r[{self.atom_set(scope, d)}]",
            lambda: f"r~[{self.atom_set(scope, d)}]",
            lambda: f"({self.atom_set(scope, d)} \\/ {self.atom_set(scope, d)})",
            lambda: f"({self.atom_set(scope, d)} /\\ {self.atom_set(scope, d)})",
            lambda: f"({self.atom_set(scope, d)} - {self.atom_set(scope, d)})",
            lambda: f"dom({self.relation(scope, d)})",
            lambda: self.comprehension(scope, d, ATOM),
        ]
        return self._pick(depth, leaves, nodes)

    def relation(self, scope: dict, depth: int = 0) -> str:
        d = depth + 1
        leaves = [lambda: "r", lambda: "r~"]
        nodes = [
            lambda: f"({self.relation(scope, d)} ; {self.relation(scope, d)})",
            lambda: f"({self.atom_set(scope, d)} <| {self.relation(scope, d)})",
            lambda: f"({self.atom_set(scope, d)} <<| {self.relation(scope, d)})",
            lambda: f"({self.relation(scope, d)} |> {self.atom_set(scope, d)})",
            lambda: f"({self.relation(scope, d)} |>> {self.atom_set(scope, d)})",
            lambda: f"({self.relation(scope, d)} \\/ {self.relation(scope, d)})",
            lambda: f"({self.relation(scope, d)} - {self.relation(scope, d)})",
            lambda: f"({self.atom_set(scope, d)} * {self.atom_set(scope, d)})",
            lambda: f"{self.relation(scope, d)}~",
        ]
        return self._pick(depth, leaves, nodes)

    def any_set(self, scope: dict, depth: int = 0) -> str:
        return self.rng.choice([self.int_set, self.atom_set, self.relation])(scope, depth)

    def comprehension(self, scope: dict, depth: int, element) -> str:
        var = self.fresh()
        domain = self.int_set(scope, depth + 1) if element == INTEGER else self.atom_set(scope, depth + 1)
        body = self.predicate({**scope, var: element}, depth + 1)
        return f"{{{var} | {var} : {domain} & {body}}}"

    # ---- predicates ----
    def predicate(self, scope: dict, depth: int = 0) -> str:
        d = depth + 1
        leaves = [
            lambda: f"{self.integer(scope, d)} = {self.integer(scope, d)}",
            lambda: f"{self.integer(scope, d)} < {self.integer(scope, d)}",
            lambda: f"{self.integer(scope, d)} >= {self.integer(scope, d)}",
            lambda: f"{self.integer(scope, d)} : {self.int_set(scope, d)}",
            lambda: f"{self.int_set(scope, d)} <: {self.int_set(scope, d)}",
            lambda: f"{self.atom_set(scope, d)} /= {{}}",
            lambda: f"{self.relation(scope, d)} : {self.atom_set(scope, d)} {self.rng.choice(ARROWS)} "
            f"{self.atom_set(scope, d)}",
            lambda: f"f : {self.atom_set(scope, d)} {self.rng.choice(ARROWS)} {self.int_set(scope, d)}",
            lambda: f"{self.integer(scope, d)} : NAT",
        ]
        if self._vars(scope, ATOM):
            leaves.append(lambda: f"{self.atom(scope)} : {self.atom_set(scope, d)}")
            leaves.append(lambda: f"{self.atom(scope)} |-> {self.atom(scope)} : r")
        nodes = [
            lambda: f"not({self.predicate(scope, d)})",
            lambda: f"({self.predicate(scope, d)} & {self.predicate(scope, d)})",
            lambda: f"({self.predicate(scope, d)} or {self.predicate(scope, d)})",
            lambda: f"({self.predicate(scope, d)} => {self.predicate(scope, d)})",
            lambda: f"({self.predicate(scope, d)} <=> {self.predicate(scope, d)})",
            lambda: self.quantified(scope, d, universal=True),
            lambda: self.quantified(scope, d, universal=False),
        ]
        return self._pick(depth, leaves, nodes)

    def quantified(self, scope: dict, depth: int, universal: bool) -> str:
        var = self.fresh()
        if self.rng.random() < 0.5:
            element, domain = INTEGER, self.int_set(scope, depth)
        else:
            element, domain = ATOM, self.atom_set(scope, depth)
        body = self.predicate({**scope, var: element}, depth)
        if universal:
            return f"!({var}).({var} : {domain} => {body})"
        return f"#({var}).({var} : {domain} & {body})"

    # ---- rules ----
    def rule(self, name: str) -> str:
        """
        A rule with one or two bindings, an optional filter and a VERIFY predicate
        """
        first, second = self.fresh(), self.fresh()
        scope = {first: ATOM}
        where = [f"{first} : {self.atom_set({}, 1)}"]
        if self.rng.random() < 0.5:
            scope[second] = INTEGER
            where.append(f"{second} : {self.int_set(scope, 1)}")
        if self.rng.random() < 0.5:
            where.append(f"({self.predicate(scope, 2)})")
        verify = self.predicate(scope, 1)
        placeholders = " ".join(f"${{{v}}}" for v in scope)
        return f'RULE {name} WHERE {" & ".join(where)} VERIFY {verify} MESSAGE "{name}: {placeholders}" END\n'

"""
Value model of the B mathematical language: integers, booleans, atoms of carrier sets,
maplets and finite sets, together with their types and the canonical total order.

Values are immutable once built. Sets are always stored duplicate-free in canonical
order, so structural equality is set equality.
"""

from collections.abc import Collection, Iterable
from dataclasses import dataclass

from .exceptions import KernelError

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class IntegerOverflow(ArithmeticError):
    pass


def check_int(n: int) -> int:
    if not INT_MIN <= n <= INT_MAX:
        raise IntegerOverflow(f"integer {n} outside the signed 64-bit range")
    return n


# ---------------------------------------------------------------------------- #
# --------------------------------- Types ------------------------------------ #
# ---------------------------------------------------------------------------- #
class Type:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class IntegerType(Type):
    def __str__(self):
        return "INTEGER"


@dataclass(frozen=True, slots=True)
class BoolType(Type):
    def __str__(self):
        return "BOOL"


@dataclass(frozen=True, slots=True)
class GivenType(Type):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class ProdType(Type):
    left: Type
    right: Type

    def __str__(self):
        right = f"({self.right})" if isinstance(self.right, ProdType) else str(self.right)
        return f"{self.left} * {right}"


@dataclass(frozen=True, slots=True)
class PowerType(Type):
    element: Type

    def __str__(self):
        return f"POW({self.element})"


@dataclass(frozen=True, slots=True)
class AnyType(Type):
    """Element type of an empty set whose type is not known yet."""

    def __str__(self):
        return "?"


INTEGER = IntegerType()
BOOL = BoolType()
ANY = AnyType()


def unify(a: Type, b: Type) -> Type | None:
    """
    Most specific type compatible with both, or None when they clash
    """
    if isinstance(a, AnyType):
        return b
    if isinstance(b, AnyType):
        return a
    if isinstance(a, ProdType) and isinstance(b, ProdType):
        left = unify(a.left, b.left)
        right = unify(a.right, b.right)
        if left is None or right is None:
            return None
        return ProdType(left, right)
    if isinstance(a, PowerType) and isinstance(b, PowerType):
        element = unify(a.element, b.element)
        return None if element is None else PowerType(element)
    return a if a == b else None


def has_holes(t: Type) -> bool:
    match t:
        case AnyType():
            return True
        case ProdType(left, right):
            return has_holes(left) or has_holes(right)
        case PowerType(element):
            return has_holes(element)
    return False


def relation_type(left: Type, right: Type) -> PowerType:
    return PowerType(ProdType(left, right))


# ---------------------------------------------------------------------------- #
# --------------------------------- Values ----------------------------------- #
# ---------------------------------------------------------------------------- #
class Value:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Int(Value):
    value: int

    def __post_init__(self):
        check_int(self.value)

    def __repr__(self):
        return f"Int({self.value})"


@dataclass(frozen=True, slots=True)
class Bool(Value):
    value: bool

    def __repr__(self):
        return "TRUE" if self.value else "FALSE"


@dataclass(frozen=True, slots=True)
class Atom(Value):
    carrier: str
    name: str

    def __repr__(self):
        return f"Atom({self.carrier}.{self.name})"


@dataclass(frozen=True, slots=True)
class Pair(Value):
    left: Value
    right: Value

    def __repr__(self):
        return f"Pair({self.left!r}, {self.right!r})"


class SetV(Value):
    """
    Finite set of values. Build through `SetV.of` unless the elements are already canonical.
    """

    __slots__ = ("elements", "_members", "_hash", "_key", "_index")

    def __init__(self, elements: tuple[Value, ...] = ()):
        self.elements = elements
        self._members = None
        self._hash = None
        self._key = None
        self._index = None

    @classmethod
    def of(cls, items: Iterable[Value]) -> "SetV":
        return cls(tuple(sorted(set(items), key=order_key)))

    def members(self) -> frozenset:
        if self._members is None:
            self._members = frozenset(self.elements)
        return self._members

    def forward_index(self) -> dict[Value, tuple[Value, ...]]:
        """Left value -> right values, in canonical order; only meaningful for pair sets."""
        if self._index is None:
            index: dict[Value, list[Value]] = {}
            for pair in self.elements:
                index.setdefault(pair.left, []).append(pair.right)
            self._index = {left: tuple(rights) for left, rights in index.items()}
        return self._index

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, SetV):
            return NotImplemented
        return self.elements == other.elements

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("SetV", self.elements))
        return self._hash

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, item):
        return item in self.members()

    def __repr__(self):
        return f"SetV({list(self.elements)!r})"

    def __reduce__(self):
        return (SetV, (self.elements,))


TRUE = Bool(True)
FALSE = Bool(False)
EMPTY = SetV()


def order_key(v: Value):
    """
    Sort key realizing the canonical order: integers numerically, FALSE < TRUE, atoms by
    (carrier, name), pairs and sets lexicographically. Keys of different kinds never meet.
    """
    match v:
        case Int(n):
            return n
        case Bool(b):
            return int(b)
        case Atom(carrier, name):
            return (carrier, name)
        case Pair(left, right):
            return (order_key(left), order_key(right))
        case SetV():
            if v._key is None:
                v._key = tuple(order_key(e) for e in v.elements)
            return v._key
    raise KernelError(f"not a value: {v!r}")


def compare(a: Value, b: Value) -> int:
    ka, kb = order_key(a), order_key(b)
    return (ka > kb) - (ka < kb)


def normalize(v: Value) -> Value:
    """
    Canonical form of a possibly unnormalized value; idempotent
    """
    match v:
        case Pair(left, right):
            nl, nr = normalize(left), normalize(right)
            return v if nl is left and nr is right else Pair(nl, nr)
        case SetV():
            return SetV.of(normalize(e) for e in v.elements)
    return v


def value_eq(a: Value, b: Value) -> bool:
    return a == b


def type_of(v: Value, carriers: Collection[str] | None = None) -> Type:
    """
    Type of a normalized value. The empty set gets POW(?) which the typechecker resolves
    from context.
    """
    match v:
        case Int():
            return INTEGER
        case Bool():
            return BOOL
        case Atom(carrier, _):
            if carriers is not None and carrier not in carriers:
                raise KernelError(f"atom {v.name} belongs to undeclared carrier {carrier}")
            return GivenType(carrier)
        case Pair(left, right):
            return ProdType(type_of(left, carriers), type_of(right, carriers))
        case SetV():
            element: Type = ANY
            for e in v.elements:
                merged = unify(element, type_of(e, carriers))
                if merged is None:
                    raise KernelError(f"heterogeneous set {to_text(v)}")
                element = merged
            return PowerType(element)
    raise KernelError(f"not a value: {v!r}")


def to_text(v: Value) -> str:
    """
    Canonical text: atoms as bare names, maplets as a|->b, sets braced in canonical order
    """
    match v:
        case Int(n):
            return str(n)
        case Bool(b):
            return "TRUE" if b else "FALSE"
        case Atom(_, name):
            return name
        case Pair(left, right):
            right_text = f"({to_text(right)})" if isinstance(right, Pair) else to_text(right)
            return f"{to_text(left)}|->{right_text}"
        case SetV():
            return "{" + ",".join(to_text(e) for e in v.elements) + "}"
    raise KernelError(f"not a value: {v!r}")


def lift(obj) -> Value:
    """
    Build a value from plain Python data: int, bool, 2-tuples as maplets, sets/lists as sets
    """
    match obj:
        case Value():
            return normalize(obj)
        case bool():
            return TRUE if obj else FALSE
        case int():
            return Int(obj)
        case set() | frozenset() | list():
            return SetV.of(lift(o) for o in obj)
        case tuple((left, right)):
            return Pair(lift(left), lift(right))
    raise KernelError(f"cannot lift {obj!r}")

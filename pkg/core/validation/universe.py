from collections.abc import Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from .kernel import GivenType, PowerType, SetV, Type, Value
from .lang.typecheck import Declarations


@dataclass(frozen=True)
class Universe:
    """
    The instantiated data model: carrier sets of atoms plus typed constants. Immutable.
    """

    carriers: Mapping[str, SetV] = field(default_factory=dict)
    constants: Mapping[str, Value] = field(default_factory=dict)
    types: Mapping[str, Type] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "carriers", MappingProxyType(dict(self.carriers)))
        object.__setattr__(self, "constants", MappingProxyType(dict(self.constants)))
        object.__setattr__(self, "types", MappingProxyType(dict(self.types)))

    @property
    def declarations(self) -> Declarations:
        return Declarations(frozenset(self.carriers), dict(self.types))

    def lookup(self, name: str) -> Value:
        if name in self.constants:
            return self.constants[name]
        return self.carriers[name]

    def type_of_name(self, name: str) -> Type:
        if name in self.types:
            return self.types[name]
        return PowerType(GivenType(name))

    def __eq__(self, other):
        if not isinstance(other, Universe):
            return NotImplemented
        return (
            dict(self.carriers) == dict(other.carriers)
            and dict(self.constants) == dict(other.constants)
            and dict(self.types) == dict(other.types)
        )

    __hash__ = object.__hash__

    def __reduce__(self):
        return (Universe, (dict(self.carriers), dict(self.constants), dict(self.types)))

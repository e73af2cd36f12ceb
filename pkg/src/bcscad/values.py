"""Runtime values with taint tracking.

Every Value remembers which binding statements (assignments, loop bindings,
module parameters) flowed into it; arithmetic unions operand taints. That
taint set is what makes variable forward search computable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

EMPTY_TAINT: frozenset[int] = frozenset()

NUMBER = "number"
BOOL = "bool"
VECTOR = "vector"
RANGE = "range"
UNDEF = "undef"


@dataclass(frozen=True)
class Value:
    kind: str
    data: object = None
    taint: frozenset[int] = field(default=EMPTY_TAINT)

    # Constructors -------------------------------------------------------

    @staticmethod
    def number(x: float, taint: frozenset[int] = EMPTY_TAINT) -> "Value":
        return Value(NUMBER, float(x), taint)

    @staticmethod
    def boolean(b: bool, taint: frozenset[int] = EMPTY_TAINT) -> "Value":
        return Value(BOOL, bool(b), taint)

    @staticmethod
    def vector(items: tuple["Value", ...], taint: frozenset[int] = EMPTY_TAINT) -> "Value":
        return Value(VECTOR, tuple(items), taint)

    @staticmethod
    def range_(start: float, step: float, end: float,
               taint: frozenset[int] = EMPTY_TAINT) -> "Value":
        return Value(RANGE, (float(start), float(step), float(end)), taint)

    @staticmethod
    def undef(taint: frozenset[int] = EMPTY_TAINT) -> "Value":
        return Value(UNDEF, None, taint)

    # Inspection ---------------------------------------------------------

    @property
    def is_number(self) -> bool:
        return self.kind == NUMBER

    @property
    def is_vector(self) -> bool:
        return self.kind == VECTOR

    def truthy(self) -> bool:
        """OpenSCAD truthiness: false, undef, 0, and [] are false."""
        if self.kind == BOOL:
            return bool(self.data)
        if self.kind == NUMBER:
            return self.data != 0
        if self.kind == VECTOR:
            return len(self.data) > 0
        if self.kind == RANGE:
            return True
        return False

    def with_taint(self, taint: frozenset[int]) -> "Value":
        return Value(self.kind, self.data, self.taint | taint)

    def deep_taint(self) -> frozenset[int]:
        """Own taint unioned with element taints (vectors nest)."""
        out = self.taint
        if self.kind == VECTOR:
            for item in self.data:
                out |= item.deep_taint()
        return out

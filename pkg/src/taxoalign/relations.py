"""RCC-5 relation algebra: base relations, disjunctive masks, converse, composition.

The five base relations between nonempty sets are mutually exclusive and
jointly exhaustive.  A mask is a nonempty subset of them and stands for a
disjunction ("the relation is one of these").  Masks are canonical 5-bit
values with the fixed bit order (==, <, >, ><, !); every serialization of a
mask uses this order so output is identical across runs and platforms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Collection, FrozenSet, Iterator, Set, Tuple


class BaseRelation(enum.IntEnum):
    """One RCC-5 base relation; the value is its bit in a mask."""

    EQUALS = 1  # ==   identical extension
    IS_INCLUDED_IN = 2  # <    proper subset
    INCLUDES = 4  # >    proper superset
    OVERLAPS = 8  # ><   partial overlap
    DISJOINT = 16  # !    no common element

    @property
    def symbol(self) -> str:
        return _SYMBOL[self]

    @property
    def long_name(self) -> str:
        return _LONG_NAME[self]

    def converse(self) -> "BaseRelation":
        """Relation seen from the other side: a r b iff b converse(r) a."""
        if self is BaseRelation.IS_INCLUDED_IN:
            return BaseRelation.INCLUDES
        if self is BaseRelation.INCLUDES:
            return BaseRelation.IS_INCLUDED_IN
        return self


# Canonical order: bit order of the mask encoding.
BASE_RELATIONS: Tuple[BaseRelation, ...] = (
    BaseRelation.EQUALS,
    BaseRelation.IS_INCLUDED_IN,
    BaseRelation.INCLUDES,
    BaseRelation.OVERLAPS,
    BaseRelation.DISJOINT,
)

_SYMBOL = {
    BaseRelation.EQUALS: "==",
    BaseRelation.IS_INCLUDED_IN: "<",
    BaseRelation.INCLUDES: ">",
    BaseRelation.OVERLAPS: "><",
    BaseRelation.DISJOINT: "!",
}

_LONG_NAME = {
    BaseRelation.EQUALS: "equals",
    BaseRelation.IS_INCLUDED_IN: "is_included_in",
    BaseRelation.INCLUDES: "includes",
    BaseRelation.OVERLAPS: "overlaps",
    BaseRelation.DISJOINT: "disjoint",
}

# Token grammar shared with the input format: long and short spellings.
_TOKEN_TO_RELATION = {}
for _r in BASE_RELATIONS:
    _TOKEN_TO_RELATION[_SYMBOL[_r]] = _r
    _TOKEN_TO_RELATION[_LONG_NAME[_r]] = _r

FULL_BITS = 0b11111


def relation_from_token(token: str) -> BaseRelation:
    """Look up a base relation by its long or short spelling."""
    try:
        return _TOKEN_TO_RELATION[token]
    except KeyError:
        raise ValueError(f"unknown relation token {token!r}") from None


@dataclass(frozen=True, order=True)
class RelationMask:
    """A nonempty subset of the five base relations, encoded in 5 bits.

    The empty mask is unsatisfiable and the constructor rejects it; the full
    mask is legal but carries no information.  There are 31 valid masks.
    """

    bits: int

    def __post_init__(self) -> None:
        if not 0 < self.bits <= FULL_BITS:
            raise ValueError(f"relation mask bits out of range: {self.bits}")

    @classmethod
    def of(cls, *relations: BaseRelation) -> "RelationMask":
        bits = 0
        for r in relations:
            bits |= r
        return cls(bits)

    @classmethod
    def full(cls) -> "RelationMask":
        return cls(FULL_BITS)

    @classmethod
    def from_tokens(cls, tokens: Collection[str]) -> "RelationMask":
        return cls.of(*(relation_from_token(t) for t in tokens))

    def __contains__(self, relation: BaseRelation) -> bool:
        return bool(self.bits & relation)

    def __iter__(self) -> Iterator[BaseRelation]:
        return (r for r in BASE_RELATIONS if self.bits & r)

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __or__(self, other: "RelationMask") -> "RelationMask":
        return RelationMask(self.bits | other.bits)

    def intersection_bits(self, other: "RelationMask") -> int:
        """Bitwise intersection; may be 0, which is not a valid mask."""
        return self.bits & other.bits

    def is_singleton(self) -> bool:
        return len(self) == 1

    @property
    def single(self) -> BaseRelation:
        if not self.is_singleton():
            raise ValueError("mask is not a singleton")
        return next(iter(self))

    def converse(self) -> "RelationMask":
        return RelationMask.of(*(r.converse() for r in self))

    def tokens(self, long: bool = True) -> Tuple[str, ...]:
        return tuple((r.long_name if long else r.symbol) for r in self)

    def text(self, long: bool = True) -> str:
        """Canonical rendering: bare token for singletons, braces otherwise."""
        toks = self.tokens(long=long)
        if len(toks) == 1:
            return toks[0]
        return "{" + " ".join(toks) + "}"

    def __str__(self) -> str:
        return self.text(long=False)


# RCC-5 composition on base relations: T(r, s) is the set of relations t for
# which nonempty sets A, B, C exist with A r B, B s C and A t C.  Embedded as
# data; the test suite regenerates it from a brute-force subset oracle and
# asserts equality, so the literal below is machine-checked, not trusted.
_EQ = BaseRelation.EQUALS
_LT = BaseRelation.IS_INCLUDED_IN
_GT = BaseRelation.INCLUDES
_OV = BaseRelation.OVERLAPS
_DJ = BaseRelation.DISJOINT

COMPOSITION_TABLE = {
    (_EQ, _EQ): _EQ,
    (_EQ, _LT): _LT,
    (_EQ, _GT): _GT,
    (_EQ, _OV): _OV,
    (_EQ, _DJ): _DJ,
    (_LT, _EQ): _LT,
    (_LT, _LT): _LT,
    (_LT, _GT): _EQ | _LT | _GT | _OV | _DJ,
    (_LT, _OV): _LT | _OV | _DJ,
    (_LT, _DJ): _DJ,
    (_GT, _EQ): _GT,
    (_GT, _LT): _EQ | _LT | _GT | _OV,
    (_GT, _GT): _GT,
    (_GT, _OV): _GT | _OV,
    (_GT, _DJ): _GT | _OV | _DJ,
    (_OV, _EQ): _OV,
    (_OV, _LT): _LT | _OV,
    (_OV, _GT): _GT | _OV | _DJ,
    (_OV, _OV): _EQ | _LT | _GT | _OV | _DJ,
    (_OV, _DJ): _GT | _OV | _DJ,
    (_DJ, _EQ): _DJ,
    (_DJ, _LT): _LT | _OV | _DJ,
    (_DJ, _GT): _DJ,
    (_DJ, _OV): _LT | _OV | _DJ,
    (_DJ, _DJ): _EQ | _LT | _GT | _OV | _DJ,
}


def converse(mask: RelationMask) -> RelationMask:
    """Elementwise converse of a mask; involutive."""
    return mask.converse()


def compose(a: RelationMask, b: RelationMask) -> RelationMask:
    """Composition of two masks: union of the table over all base pairs."""
    bits = 0
    for r in a:
        for s in b:
            bits |= COMPOSITION_TABLE[(r, s)]
    return RelationMask(bits)


def base_relation_of(a: Collection, b: Collection) -> BaseRelation:
    """Classify the RCC-5 relation between two nonempty sets of elements."""
    sa, sb = frozenset(a), frozenset(b)
    if not sa or not sb:
        raise ValueError("base_relation_of requires nonempty sets")
    if sa == sb:
        return BaseRelation.EQUALS
    if sa < sb:
        return BaseRelation.IS_INCLUDED_IN
    if sa > sb:
        return BaseRelation.INCLUDES
    if not sa & sb:
        return BaseRelation.DISJOINT
    return BaseRelation.OVERLAPS

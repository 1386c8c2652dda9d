# Defines the templated referring-expression grammar and its evaluator
#
# Copyright (c) 2026, pcan developers and contributors

"""Expressions follow the template

    the [size] [color] shape [relation the [size] [color] shape]

with relations resolved by strict comparison of box centres. The evaluator
below is the reference predicate used both by the generator (to enforce that
an expression identifies a single object) and by the tests.
"""

from dataclasses import dataclass
from typing import Optional

from pcan.Util.exceptions import ShapeError


__all__ = ['PALETTE', 'SHAPES', 'SIZES', 'RELATIONS', 'VOCABULARY', 'PAD_ID',
           'MAX_TOKENS', 'Description', 'Expression', 'relation_holds',
           'evaluate', 'encode', 'decode', 'candidate_expressions']


PALETTE = {
    'red': (0.90, 0.10, 0.10),
    'green': (0.10, 0.75, 0.20),
    'blue': (0.15, 0.30, 0.95),
    'yellow': (0.95, 0.90, 0.10),
    'purple': (0.55, 0.15, 0.75),
    'orange': (0.95, 0.55, 0.05),
    'cyan': (0.10, 0.85, 0.90),
    'white': (0.95, 0.95, 0.95),
}
SHAPES = ('circle', 'square', 'triangle')
SIZES = ('small', 'large')
RELATIONS = ('left of', 'right of', 'above', 'below')

VOCABULARY = (('<pad>', 'the') + SIZES + tuple(PALETTE) + SHAPES +
              ('left', 'right', 'of', 'above', 'below'))
PAD_ID = 0
MAX_TOKENS = 16

_WORD_TO_ID = {word: i for i, word in enumerate(VOCABULARY)}


@dataclass(frozen=True)
class Description(object):
    """Noun phrase `the [size] [color] shape`; None leaves an attribute unsaid."""
    shape: str
    color: Optional[str] = None
    size: Optional[str] = None

    def words(self):
        words = ['the']
        if self.size is not None:
            words.append(self.size)
        if self.color is not None:
            words.append(self.color)
        words.append(self.shape)
        return words

    def matches(self, obj):
        return (obj.shape == self.shape and
                (self.color is None or obj.color == self.color) and
                (self.size is None or obj.size == self.size))

    def attribute_words(self):
        return {w for w in (self.shape, self.color, self.size) if w is not None}


@dataclass(frozen=True)
class Expression(object):
    subject: Description
    relation: Optional[str] = None
    anchor: Optional[Description] = None

    def __post_init__(self):
        if (self.relation is None) != (self.anchor is None):
            raise ValueError("relation and anchor must be given together")
        if self.relation is not None and self.relation not in RELATIONS:
            raise ValueError(f"Unknown relation '{self.relation}'")

    def words(self):
        words = self.subject.words()
        if self.relation is not None:
            words += self.relation.split() + self.anchor.words()
        return words

    def text(self):
        return ' '.join(self.words())

    def attribute_words(self):
        words = self.subject.attribute_words()
        if self.anchor is not None:
            words |= self.anchor.attribute_words()
        return words


def relation_holds(relation, obj, other):
    """Whether `obj` stands in `relation` to `other`, from their box centres."""
    (cx, cy), (ox, oy) = obj.box.center, other.box.center
    if relation == 'left of':
        return cx < ox
    if relation == 'right of':
        return cx > ox
    if relation == 'above':
        return cy < oy
    if relation == 'below':
        return cy > oy
    raise ValueError(f"Unknown relation '{relation}'")


def evaluate(expression, objects):
    """Indices of the objects an expression refers to.

    A relational expression only refers to something when its anchor phrase
    picks out exactly one object.

    :param expression: Expression
    :param objects: sequence of objects exposing shape, color, size and box
    :return: sorted list of indices
    """
    subjects = [i for i, obj in enumerate(objects) if expression.subject.matches(obj)]
    if expression.relation is None:
        return subjects
    anchors = [j for j, obj in enumerate(objects) if expression.anchor.matches(obj)]
    if len(anchors) != 1:
        return []
    j = anchors[0]
    return [i for i in subjects
            if i != j and relation_holds(expression.relation, objects[i], objects[j])]


def _descriptions(obj):
    return [Description(obj.shape),
            Description(obj.shape, color=obj.color),
            Description(obj.shape, size=obj.size),
            Description(obj.shape, color=obj.color, size=obj.size)]


def candidate_expressions(objects, target_index):
    """All templated expressions that single out `objects[target_index]`.

    :return: (plain, relational) lists of Expression
    """
    target = objects[target_index]
    plain, relational = [], []
    for subject in _descriptions(target):
        expression = Expression(subject)
        if evaluate(expression, objects) == [target_index]:
            plain.append(expression)
    for j, other in enumerate(objects):
        if j == target_index:
            continue
        for anchor in _descriptions(other):
            for relation in RELATIONS:
                if not relation_holds(relation, target, other):
                    continue
                for subject in _descriptions(target):
                    expression = Expression(subject, relation, anchor)
                    if evaluate(expression, objects) == [target_index]:
                        relational.append(expression)
    return plain, relational


def encode(words):
    """Token ids of a word sequence."""
    if len(words) > MAX_TOKENS:
        raise ShapeError(f"Expression has {len(words)} words, at most {MAX_TOKENS} are supported")
    try:
        return [_WORD_TO_ID[w] for w in words]
    except KeyError as e:
        raise ShapeError(f"Word {e} is not in the vocabulary") from None


def decode(tokens):
    return [VOCABULARY[int(t)] for t in tokens if int(t) != PAD_ID]

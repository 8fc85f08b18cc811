"""
Propositional formula nodes.

Nodes are immutable and hashable. ``conj`` and ``disj`` flatten nested
connectives and fold constants, so formulas stay small while they are built.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, Tuple, Union


@dataclass(frozen=True)
class Var:
    id: int


@dataclass(frozen=True)
class Not:
    child: 'Node'


@dataclass(frozen=True)
class And:
    children: Tuple['Node', ...]


@dataclass(frozen=True)
class Or:
    children: Tuple['Node', ...]


@dataclass(frozen=True)
class Const:
    value: bool


Node = Union[Var, Not, And, Or, Const]

TRUE = Const(True)
FALSE = Const(False)


def neg(node: Node) -> Node:
    if isinstance(node, Const):
        return FALSE if node.value else TRUE
    if isinstance(node, Not):
        return node.child
    return Not(node)


def conj(items: Iterable[Node]) -> Node:
    children = []
    for item in items:
        if item == FALSE:
            return FALSE
        if item == TRUE:
            continue
        for child in (item.children if isinstance(item, And) else (item,)):
            if child not in children:
                children.append(child)
    if not children:
        return TRUE
    if len(children) == 1:
        return children[0]
    return And(tuple(children))


def disj(items: Iterable[Node]) -> Node:
    children = []
    for item in items:
        if item == TRUE:
            return TRUE
        if item == FALSE:
            continue
        for child in (item.children if isinstance(item, Or) else (item,)):
            if child not in children:
                children.append(child)
    if not children:
        return FALSE
    if len(children) == 1:
        return children[0]
    return Or(tuple(children))


def iff(left: Node, right: Node) -> Node:
    return conj([disj([neg(left), right]), disj([left, neg(right)])])


def variables(node: Node) -> Iterator[int]:
    """Variable ids of a formula, in order of first occurrence"""
    seen = set()
    stack = [node]
    order = []
    while stack:
        current = stack.pop()
        if isinstance(current, Var):
            if current.id not in seen:
                seen.add(current.id)
                order.append(current.id)
        elif isinstance(current, Not):
            stack.append(current.child)
        elif isinstance(current, (And, Or)):
            stack.extend(reversed(current.children))
    return iter(order)


def replace(node: Node, mapping: Callable[[int], Node], cache: Dict = None) -> Node:
    """Replace every variable by ``mapping(id)``, simplifying on the way"""
    cache = {} if cache is None else cache
    if node in cache:
        return cache[node]
    if isinstance(node, Var):
        result = mapping(node.id)
    elif isinstance(node, Not):
        result = neg(replace(node.child, mapping, cache))
    elif isinstance(node, And):
        result = conj(replace(child, mapping, cache) for child in node.children)
    elif isinstance(node, Or):
        result = disj(replace(child, mapping, cache) for child in node.children)
    else:
        result = node
    cache[node] = result
    return result


def evaluate(node: Node, assignment) -> bool:
    """Truth value under ``assignment``, a mapping or callable from id to bool"""
    lookup = assignment if callable(assignment) else assignment.__getitem__
    if isinstance(node, Var):
        return bool(lookup(node.id))
    if isinstance(node, Not):
        return not evaluate(node.child, lookup)
    if isinstance(node, And):
        return all(evaluate(child, lookup) for child in node.children)
    if isinstance(node, Or):
        return any(evaluate(child, lookup) for child in node.children)
    return node.value


def to_text(node: Node) -> str:
    if isinstance(node, Var):
        return str(node.id)
    if isinstance(node, Not):
        if isinstance(node.child, Var):
            return f'-{node.child.id}'
        return f'!{to_text(node.child)}'
    if isinstance(node, And):
        return '(' + ' & '.join(to_text(child) for child in node.children) + ')'
    if isinstance(node, Or):
        return '(' + ' | '.join(to_text(child) for child in node.children) + ')'
    return 'T' if node.value else 'F'

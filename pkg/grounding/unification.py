from typing import Dict, Optional, Tuple

from language.terms import (
    AnnotatedDisjunction, Comparison, Compound, DistClause, Distribution, Literal,
    NormalClause, ProbFact, Variable,
)

Substitution = Dict[Variable, object]


def walk(term, subst: Substitution):
    while isinstance(term, Variable) and term in subst:
        term = subst[term]
    return term


def substitute(item, subst: Substitution):
    """Apply a substitution to a term, literal, distribution or statement"""
    if not subst:
        return item
    if isinstance(item, Variable):
        bound = walk(item, subst)
        return bound if bound is item else substitute(bound, subst)
    if isinstance(item, Compound):
        return Compound(item.functor, tuple(substitute(arg, subst) for arg in item.args))
    if isinstance(item, Comparison):
        return Comparison(item.op, substitute(item.lhs, subst), substitute(item.rhs, subst))
    if isinstance(item, Literal):
        return Literal(substitute(item.atom, subst), item.positive)
    if isinstance(item, Distribution):
        return Distribution(item.kind, tuple(substitute(p, subst) for p in item.params))
    if isinstance(item, DistClause):
        return DistClause(substitute(item.head, subst), substitute(item.dist, subst),
                          substitute_body(item.body, subst), item.line)
    if isinstance(item, NormalClause):
        return NormalClause(substitute(item.head, subst), substitute_body(item.body, subst), item.line)
    if isinstance(item, ProbFact):
        return ProbFact(substitute(item.prob, subst), substitute(item.atom, subst), item.line)
    if isinstance(item, AnnotatedDisjunction):
        choices = tuple((substitute(p, subst), substitute(a, subst)) for p, a in item.choices)
        return AnnotatedDisjunction(choices, substitute_body(item.body, subst), item.line)
    return item


def substitute_body(body, subst: Substitution) -> Tuple[Literal, ...]:
    return tuple(substitute(literal, subst) for literal in body)


def unify(left, right, subst: Optional[Substitution] = None) -> Optional[Substitution]:
    """Most general unifier extending ``subst``, or None; never mutates its input"""
    result = dict(subst or {})
    stack = [(left, right)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a, result), walk(b, result)
        if type(a) is type(b) and a == b:
            continue
        if isinstance(a, Variable):
            if occurs(a, b, result):
                return None
            result[a] = b
        elif isinstance(b, Variable):
            if occurs(b, a, result):
                return None
            result[b] = a
        elif isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or a.arity != b.arity:
                return None
            stack.extend(zip(a.args, b.args))
        else:
            return None
    return result


def occurs(variable: Variable, term, subst: Substitution) -> bool:
    term = walk(term, subst)
    if term == variable:
        return True
    if isinstance(term, Compound):
        return any(occurs(variable, arg, subst) for arg in term.args)
    return False


def is_ground(item) -> bool:
    if isinstance(item, Variable):
        return False
    if isinstance(item, Compound):
        return all(is_ground(arg) for arg in item.args)
    if isinstance(item, Comparison):
        return is_ground(item.lhs) and is_ground(item.rhs)
    if isinstance(item, Literal):
        return is_ground(item.atom)
    if isinstance(item, Distribution):
        return all(is_ground(p) for p in item.params)
    if isinstance(item, (tuple, list)):
        return all(is_ground(element) for element in item)
    return True


def rename(item, suffix: str):
    """Rename every variable apart by appending ``suffix`` to its name"""
    mapping: Substitution = {}

    def fresh(term):
        if isinstance(term, Variable):
            return mapping.setdefault(term, Variable(f'{term.name}{suffix}'))
        if isinstance(term, Compound):
            for arg in term.args:
                fresh(arg)
        elif isinstance(term, Comparison):
            fresh(term.lhs)
            fresh(term.rhs)
        elif isinstance(term, Literal):
            fresh(term.atom)
        elif isinstance(term, Distribution):
            for param in term.params:
                fresh(param)
        return term

    if isinstance(item, DistClause):
        parts = [item.head, item.dist, *item.body]
    elif isinstance(item, NormalClause):
        parts = [item.head, *item.body]
    elif isinstance(item, ProbFact):
        parts = [item.prob, item.atom]
    elif isinstance(item, AnnotatedDisjunction):
        parts = [t for choice in item.choices for t in choice] + list(item.body)
    else:
        parts = [item]
    for part in parts:
        fresh(part)
    return substitute(item, mapping)


def variant_key(term):
    """A key shared by all terms equal up to variable renaming"""
    names: Dict[Variable, Variable] = {}

    def canonical(item):
        if isinstance(item, Variable):
            return names.setdefault(item, Variable(f'_V{len(names)}'))
        if isinstance(item, Compound):
            return Compound(item.functor, tuple(canonical(arg) for arg in item.args))
        return item

    return canonical(term)

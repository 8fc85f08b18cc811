from typing import Iterable, List

import networkx as nx

from core.exceptions import CyclicRandomVariableDependency
from language.arithmetic import random_variables
from language.terms import RandomVariableId


class DependencyGraph:
    """Parent-to-child graph over random variables, one edge per parameter occurrence"""

    def __init__(self, facts: Iterable = ()):
        self.graph = nx.DiGraph()
        facts = list(facts)
        for fact in facts:
            self.graph.add_node(fact.var)
        for fact in facts:
            for expression in fact.dist.parameter_expressions:
                for parent in random_variables(expression):
                    self.graph.add_edge(parent, fact.var)

    def __len__(self):
        return self.graph.number_of_nodes()

    def __contains__(self, var: RandomVariableId) -> bool:
        return var in self.graph

    @property
    def nodes(self) -> List[RandomVariableId]:
        return sorted(self.graph.nodes)

    @property
    def edges(self) -> List:
        return sorted(self.graph.edges, key=lambda edge: (edge[0].index, edge[1].index))

    def parents(self, var: RandomVariableId) -> List[RandomVariableId]:
        return sorted(self.graph.predecessors(var))

    def children(self, var: RandomVariableId) -> List[RandomVariableId]:
        return sorted(self.graph.successors(var))

    def ancestors(self, var: RandomVariableId) -> List[RandomVariableId]:
        return sorted(nx.ancestors(self.graph, var))

    def closure(self, variables: Iterable[RandomVariableId]) -> List[RandomVariableId]:
        """The given variables together with all their ancestors"""
        found = set()
        for var in variables:
            found.add(var)
            found.update(nx.ancestors(self.graph, var))
        return sorted(found)

    def check_acyclic(self):
        if not nx.is_directed_acyclic_graph(self.graph):
            cycle = nx.find_cycle(self.graph)
            path = ' -> '.join(str(edge[0]) for edge in cycle) + f' -> {cycle[0][0]}'
            raise CyclicRandomVariableDependency(f'Random variables depend on themselves: {path}')

    def topological_order(self) -> List[RandomVariableId]:
        """Parents before children, ties broken by variable index"""
        self.check_acyclic()
        return list(nx.lexicographical_topological_sort(self.graph, key=lambda var: var.index))

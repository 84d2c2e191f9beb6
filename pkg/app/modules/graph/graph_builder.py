from typing import List, Set

import networkx as nx

from app.modules.graph.program import ProgramDef


def build_program_graph(prog: ProgramDef) -> nx.DiGraph:
    graph = nx.DiGraph()

    # 1. Inputs and defined nodes
    for k in range(1, prog.input_arity + 1):
        graph.add_node(k, kind="input")
    for a in prog.assignments:
        graph.add_node(a.target, kind=type(a.instruction).__name__.lower())

    # 2. Connect parent -> node edges (undefined parents show up as bare nodes)
    for a in prog.assignments:
        for j in a.instruction.parents:
            if j not in graph:
                graph.add_node(j, kind="undefined")
            graph.add_edge(j, a.target)

    return graph


def detect_cycles(graph: nx.DiGraph) -> List[List[int]]:
    try:
        return list(nx.simple_cycles(graph))
    except nx.NetworkXException:
        return []


def find_dead_nodes(graph: nx.DiGraph, output: int) -> Set[int]:
    """Computed nodes that do not feed the output."""
    if output not in graph:
        return set()
    live = nx.ancestors(graph, output) | {output}
    return {
        node
        for node, kind in graph.nodes(data="kind")
        if kind not in ("input", "undefined") and node not in live
    }

"""
Built-in factor graphs, looked up by name.
Add new graphs to GRAPH_BUILDERS to make them available from the CLI.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional

from pmbpqm.channel import QubitBSCQ
from pmbpqm.decoder import Node, NodeKind, TreeFactorGraph, lemma_instance
from pmbpqm.errors import GraphError
from pmbpqm.schemas import FactorGraphModel

V, C = NodeKind.VARIABLE, NodeKind.CHECK


def fg5(channel: QubitBSCQ) -> TreeFactorGraph:
    """Five qubits, checks x1 + x2 + x3 = 0 and x1 + x4 + x5 = 0, rooted at x1."""
    nodes = [Node(1, V, (6, 7), channel)]
    nodes += [Node(i, V, (), channel) for i in (2, 3, 4, 5)]
    nodes += [Node(6, C, (2, 3)), Node(7, C, (4, 5))]
    return TreeFactorGraph(nodes, root=1)


def fg7(channel: QubitBSCQ) -> TreeFactorGraph:
    """Seven qubits: x1 = x2 + x3, x1 = x4 + x5, x4 = x6, x4 = x7."""
    nodes = [
        Node(1, V, (8, 9), channel),
        Node(4, V, (10, 11), channel),
    ]
    nodes += [Node(i, V, (), channel) for i in (2, 3, 5, 6, 7)]
    nodes += [
        Node(8, C, (2, 3)),
        Node(9, C, (4, 5)),
        Node(10, C, (6,)),
        Node(11, C, (7,)),
    ]
    return TreeFactorGraph(nodes, root=1)


def lemma3q(channel: Optional[QubitBSCQ] = None) -> TreeFactorGraph:
    """
    Three copies of one bit: the root and x2 through W, x3 through W'.

    The channel argument is ignored; the instance fixes its own channels.
    """
    w, w2 = lemma_instance()
    nodes = [
        Node(1, V, (4, 5), w),
        Node(2, V, (), w),
        Node(3, V, (), w2),
        Node(4, C, (2,)),
        Node(5, C, (3,)),
    ]
    return TreeFactorGraph(nodes, root=1)


# Map of graph names to builders taking the per-qubit channel
GRAPH_BUILDERS: dict[str, Callable[..., TreeFactorGraph]] = {
    "fg5": fg5,
    "fg7": fg7,
    "lemma3q": lemma3q,
}


def get_graph(name: str, channel: Optional[QubitBSCQ] = None) -> TreeFactorGraph:
    """
    Build a named factor graph.

    Args:
        name: One of get_supported_graphs()
        channel: Channel of every qubit (not needed for 'lemma3q')

    Returns:
        The graph

    Raises:
        GraphError: If the name is unknown or a required channel is missing
    """
    if not name or not isinstance(name, str):
        raise GraphError("Invalid graph name")

    builder = GRAPH_BUILDERS.get(name.strip().lower())
    if builder is None:
        raise GraphError(
            f"Unknown graph {name!r}. Choose one of: {', '.join(get_supported_graphs())}"
        )
    if channel is None and builder is not lemma3q:
        raise GraphError(f"Graph {name!r} needs a channel")
    return builder(channel)


def get_supported_graphs() -> list[str]:
    return sorted(GRAPH_BUILDERS)


def load_graph(path: str | Path) -> TreeFactorGraph:
    """
    Read a factor graph from JSON:
    {"root": id, "nodes": [{"id", "kind", "children", "channel"}]}.

    Raises:
        GraphError: If the document does not describe a valid tree
        pydantic.ValidationError: If the document does not match the schema
    """
    text = Path(path).read_text(encoding="utf-8")
    return FactorGraphModel.model_validate_json(text).to_graph()

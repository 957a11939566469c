"""
Graph export through networkx: DOT (pydot), GraphML, node-link JSON and a
plain edge-list CSV.
"""
import csv
import io
import json
import os
import tempfile
from typing import Callable, Dict, Optional

import networkx as nx
from networkx.drawing.nx_pydot import write_dot

from graphlearn.bignet import LargeNetwork
from graphlearn.mcmc import GraphicalModel
from store.files import atomic_write_text

# class colours cycle through this palette
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31", "#843c39",
    "#7b4173", "#3182bd", "#e6550d", "#31a354", "#756bb1", "#636363",
)


def model_to_networkx(model: GraphicalModel) -> nx.Graph:
    """Nodes are the variable labels; each edge carries its n_ij."""
    g = nx.Graph(tau=model.tau)
    for label in model.labels:
        g.add_node(label)
    for i, j, weight in model.edges:
        g.add_edge(model.labels[i], model.labels[j], weight=weight, label=f"{weight:.3f}")
    return g


def network_to_networkx(net: LargeNetwork) -> nx.Graph:
    g = nx.Graph(tau=net.tau)
    colours: Dict[str, str] = {}
    if net.classes is not None:
        for k, name in enumerate(sorted({c for c in net.classes if c is not None})):
            colours[name] = PALETTE[k % len(PALETTE)]
    for pos, node in enumerate(net.node_ids.tolist()):
        attrs = {"label": net.labels[pos]}
        if net.classes is not None and net.classes[pos] is not None:
            attrs["class"] = net.classes[pos]
            attrs["color"] = colours[net.classes[pos]]
        g.add_node(int(node), **attrs)
    for (i, j), w in zip(net.edges.tolist(), net.weights.tolist()):
        g.add_edge(i, j, weight=w)
    return g


def _atomic_via(path: str, writer: Callable[[nx.Graph, str], None], g: nx.Graph) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        writer(g, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def write_graph_dot(g: nx.Graph, path: str) -> str:
    return _atomic_via(path, write_dot, g)


def write_graph_graphml(g: nx.Graph, path: str) -> str:
    return _atomic_via(path, nx.write_graphml, g)


def write_graph_json(g: nx.Graph, path: str) -> str:
    payload = {
        "graph": dict(g.graph),
        "nodes": [dict(id=n, **attrs) for n, attrs in g.nodes(data=True)],
        "links": [dict(source=u, target=v, **attrs) for u, v, attrs in g.edges(data=True)],
    }
    return atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def write_edge_list_csv(g: nx.Graph, path: str, label_attr: Optional[str] = None) -> str:
    """Columns i, j, m_ij (and node labels when label_attr is given)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["i", "j", "m_ij"] + (["label_i", "label_j"] if label_attr else [])
    writer.writerow(header)
    for u, v, attrs in g.edges(data=True):
        row = [u, v, format(attrs["weight"], ".17g")]
        if label_attr:
            row += [g.nodes[u].get(label_attr, u), g.nodes[v].get(label_attr, v)]
        writer.writerow(row)
    return atomic_write_text(path, buf.getvalue())


WRITERS = {
    "dot": (write_graph_dot, ".dot"),
    "graphml": (write_graph_graphml, ".graphml"),
    "json": (write_graph_json, ".json"),
    "csv": (write_edge_list_csv, ".csv"),
}

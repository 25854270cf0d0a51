"""k-fat-tree datacenter graphs with layered forwarding costs.

A k-fat-tree has k pods, each with k/2 top-of-rack (ToR) and k/2
aggregation switches, plus k^2/4 core switches.  Every ToR hosts a
configurable number of physical machines (PMs).  Links carry a
per-bit-per-unit-time forwarding cost that depends only on the layer
pair they connect; traffic between VMs on the same PM is handled
internally and costs nothing.
"""

import math
from dataclasses import dataclass, field

PM = "PM"
TOR = "ToR"
AGG = "Aggregation"
CORE = "Core"

# canonical ordering of kinds: PMs first, then up the tree
_KIND_ORDER = {PM: 0, TOR: 1, AGG: 2, CORE: 3}

DEFAULT_LAYER_COSTS = (10.0, 20.0, 40.0)  # (pm_tor, tor_agg, agg_core)
UNLIMITED = math.inf


@dataclass(frozen=True)
class NodeId:
    """A node handle: kind plus index unique within that kind."""

    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in _KIND_ORDER:
            raise ValueError("unknown node kind: %r" % (self.kind,))
        if self.index < 0:
            raise ValueError("negative node index")

    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.index)

    def __str__(self):
        return "%s%d" % (self.kind, self.index)


@dataclass
class Topology:
    """Immutable wired fat-tree.

    nodes are ordered PMs first, then ToR, aggregation and core
    switches, each sorted by pod; this ordering fixes the variable
    indexing of every optimization model built on top.
    """

    k: int
    pms_per_rack: int
    layer_costs: tuple
    bandwidth: float
    nodes: list
    _adj: dict = field(repr=False)
    _pod: dict = field(repr=False)
    _order: dict = field(repr=False)

    @property
    def pms(self):
        return [v for v in self.nodes if v.kind == PM]

    @property
    def switches(self):
        return [v for v in self.nodes if v.kind != PM]

    def has_node(self, i):
        return i in self._adj

    def pod_of(self, i):
        """Pod number of i, or -1 for core switches (pod-less)."""
        self._require(i)
        return self._pod[i]

    def node_position(self, i):
        """Position of i in the canonical node ordering."""
        self._require(i)
        return self._order[i]

    def linked(self, i, j):
        self._require(i)
        self._require(j)
        return j in self._adj[i]

    def _require(self, i):
        if i not in self._adj:
            raise KeyError("node %s not in topology" % (i,))


def build_fat_tree(k, pms_per_rack=2, layer_costs=DEFAULT_LAYER_COSTS,
                   uniform_bandwidth=UNLIMITED):
    """Wire a k-fat-tree and return the finished Topology.

    k must be a positive even integer.  Aggregation switch a of every
    pod uplinks to the k/2 core switches of core group a; ToR and
    aggregation switches of one pod form a complete bipartite graph;
    each ToR attaches pms_per_rack PMs.
    """
    if not isinstance(k, int) or k <= 0 or k % 2 != 0:
        raise ValueError("fat-tree arity k must be a positive even integer, got %r" % (k,))
    if pms_per_rack < 1:
        raise ValueError("pms_per_rack must be >= 1")
    if len(layer_costs) != 3 or any(c < 0 for c in layer_costs):
        raise ValueError("layer_costs must be three nonnegative numbers")
    if uniform_bandwidth < 0:
        raise ValueError("bandwidth must be nonnegative")

    half = k // 2
    nodes = []
    pod = {}

    for p in range(k):
        for t in range(half):
            for s in range(pms_per_rack):
                v = NodeId(PM, (p * half + t) * pms_per_rack + s)
                pod[v] = p
    for p in range(k):
        for t in range(half):
            pod[NodeId(TOR, p * half + t)] = p
    for p in range(k):
        for a in range(half):
            pod[NodeId(AGG, p * half + a)] = p
    for c in range(half * half):
        pod[NodeId(CORE, c)] = -1

    nodes = sorted(pod, key=NodeId.sort_key)
    adj = {v: set() for v in nodes}

    def link(i, j):
        adj[i].add(j)
        adj[j].add(i)

    for p in range(k):
        for t in range(half):
            tor = NodeId(TOR, p * half + t)
            for s in range(pms_per_rack):
                link(NodeId(PM, (p * half + t) * pms_per_rack + s), tor)
            for a in range(half):
                link(tor, NodeId(AGG, p * half + a))
        for a in range(half):
            agg = NodeId(AGG, p * half + a)
            for c in range(half):
                link(agg, NodeId(CORE, a * half + c))

    adj = {v: tuple(sorted(adj[v], key=NodeId.sort_key)) for v in nodes}
    order = {v: n for n, v in enumerate(nodes)}
    return Topology(k=k, pms_per_rack=pms_per_rack,
                    layer_costs=tuple(float(c) for c in layer_costs),
                    bandwidth=float(uniform_bandwidth),
                    nodes=nodes, _adj=adj, _pod=pod, _order=order)


def neighbors(t, i):
    """All nodes adjacent to i, in canonical order."""
    t._require(i)
    return t._adj[i]


def forwarding_cost(t, i, j):
    """Per-bit-per-unit-time cost of the link between i and j.

    The diagonal PM case (i == j) models intra-PM transfers between
    co-located VMs and costs 0.  Any other non-adjacent pair is an
    error.
    """
    t._require(i)
    t._require(j)
    if i == j:
        if i.kind == PM:
            return 0.0
        raise ValueError("self-transfer only defined on PMs, got %s" % (i,))
    if j not in t._adj[i]:
        raise ValueError("nodes %s and %s are not linked" % (i, j))
    kinds = {i.kind, j.kind}
    if kinds == {PM, TOR}:
        return t.layer_costs[0]
    if kinds == {TOR, AGG}:
        return t.layer_costs[1]
    return t.layer_costs[2]  # {AGG, CORE}; wiring admits no other pair


def topology_listing(t):
    """Plain-text node/edge listing, one record per line.

    Format: kind index pod neighbor[,neighbor...]
    """
    lines = []
    for v in t.nodes:
        nbrs = ",".join(str(u) for u in t._adj[v])
        lines.append("%s %d %d %s" % (v.kind, v.index, t._pod[v], nbrs))
    return "\n".join(lines) + "\n"

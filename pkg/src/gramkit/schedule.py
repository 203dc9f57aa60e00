"""Process-tree construction for the parallel Gram product.

A parallel level is fully staffed when every Gram call owns 6 ranks (four
sub-Gram calls plus two Strassen products) and every Strassen call owns 7
(its seven sub-products).  Given P ranks the tree expands as many fully
staffed levels as fit; leftover ranks are attached as helpers to the
sequential tasks below the last staffed level.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .matrix import split_dims

GRAM = "gram"
STRASSEN = "strassen"

_INT64_MAX = 2**63 - 1


def ranks_required(levels: int) -> int:
    """Ranks needed for `levels` fully staffed parallel levels.

    1 for zero levels, 6 for one; afterwards each of the 4 Gram branches
    re-expands while the 2 Strassen branches fan out sevenfold per level.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if levels == 0:
        return 1
    if levels == 1:
        return 6
    total = 6 * 4 ** (levels - 1)
    total += 2 * sum(4 ** k * 7 ** (levels - 1 - k) for k in range(levels - 1))
    if total > _INT64_MAX:
        raise OverflowError(f"rank count for {levels} levels exceeds 64 bits")
    return total


def max_complete_levels(ranks: int) -> int:
    """Largest level count whose rank demand fits within `ranks`."""
    if ranks < 1:
        raise ValueError("ranks must be >= 1")
    levels = 0
    while True:
        try:
            if ranks_required(levels + 1) > ranks:
                return levels
        except OverflowError:
            return levels
        levels += 1


def helper_rounds(ranks: int, levels: int) -> int:
    """Full rounds of leftover ranks: how many helpers every rank of the
    last staffed level receives."""
    base = ranks_required(levels)
    if base > ranks:
        raise ValueError(f"{levels} levels need {base} ranks, only {ranks} given")
    return (ranks - base) // base


def child_ranks(kind: str, owner: int, level: int, max_levels: int) -> list[int]:
    """Starting rank of each recursive call of a parallel node.

    With x = max_levels - level, a Gram node's first five children start
    npl(x) apart (each is a Gram subtree), and the two Strassen children
    occupy 7^x ranks each; Strassen children are uniformly 7^x apart.
    """
    if not 1 <= level <= max_levels:
        raise ValueError(f"level {level} outside 1..{max_levels}")
    x = max_levels - level
    if kind == GRAM:
        step = ranks_required(x)
        ids = [owner + i * step for i in range(5)]
        ids.append(owner + 4 * step + 7**x)
        return ids
    if kind == STRASSEN:
        return [owner + i * 7**x for i in range(7)]
    raise ValueError(f"unknown node kind {kind!r}")


@dataclass
class TaskNode:
    kind: str
    level: int                    # 0 = runs serially on its owner
    owner: int
    dims: tuple                   # (m, n) for gram, (p, q, r) for strassen
    ids: list[int] = field(default_factory=list)
    interval: tuple = (0, 1)      # [start, end) ranks of this subtree
    helpers: list[int] = field(default_factory=list)
    children: list["TaskNode"] = field(default_factory=list)
    node_id: int = 0


@dataclass
class TaskTree:
    root: TaskNode
    total_ranks: int
    max_levels: int
    leftover: int

    def leaves(self) -> list[TaskNode]:
        """Sequential tasks in ascending owner order."""
        out = []

        def walk(node):
            if node.level == 0:
                out.append(node)
            for child in node.children:
                walk(child)

        walk(self.root)
        return out

    def nodes(self) -> list[TaskNode]:
        out = []

        def walk(node):
            out.append(node)
            for child in node.children:
                walk(child)

        walk(self.root)
        return out

    def ranks_used(self) -> list[int]:
        used = []
        for leaf in self.leaves():
            used.append(leaf.owner)
            used.extend(leaf.helpers)
        return sorted(used)


def _gram_child_specs(m, n):
    d = split_dims(m, n)
    return [
        (GRAM, (d.m1, d.n1)),
        (GRAM, (d.m2, d.n1)),
        (GRAM, (d.m1, d.n2)),
        (GRAM, (d.m2, d.n2)),
        (STRASSEN, (d.n2, d.m1, d.n1)),
        (STRASSEN, (d.n2, d.m2, d.n1)),
    ]


def _strassen_child_specs(p, q, r):
    half = (p // 2, q // 2, r // 2)
    return [(STRASSEN, half)] * 7


def task_size(kind, dims) -> int:
    """Input footprint used to rank tasks for helper priority."""
    if kind == GRAM:
        return dims[0] * dims[1]
    p, q, r = dims
    return p * q + q * r


def build_tree(ranks: int, rows: int, cols: int,
               redistribute: bool = False) -> TaskTree:
    """Task tree for `ranks` workers on a rows x cols input.

    Fewer than 6 ranks cannot staff a parallel level, so the tree is a
    single sequential node; any ranks beyond rank 0 become its helpers.

    `redistribute` is a placeholder switch for shifting ranks from the
    lighter Gram calls toward the heavier Strassen calls; no such policy
    is implemented and enabling it raises.
    """
    if redistribute:
        raise NotImplementedError("rank redistribution policy is a placeholder")
    if ranks < 1:
        raise ValueError("ranks must be >= 1")
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    lm = max_complete_levels(ranks)
    core = ranks_required(lm)
    seq = itertools.count()

    def grow(kind, owner, level, dims, interval):
        node = TaskNode(kind, level, owner, dims, interval=interval, node_id=next(seq))
        node.ids = child_ranks(kind, owner, level, lm)
        specs = (_gram_child_specs(*dims) if kind == GRAM
                 else _strassen_child_specs(*dims))
        bounds = node.ids + [interval[1]]
        for i, (ckind, cdims) in enumerate(specs):
            sub = (bounds[i], bounds[i + 1])
            if level == lm:
                child = TaskNode(ckind, 0, node.ids[i], cdims,
                                 interval=sub, node_id=next(seq))
            else:
                child = grow(ckind, node.ids[i], level + 1, cdims, sub)
            node.children.append(child)
        return node

    if lm == 0:
        root = TaskNode(GRAM, 0, 0, (rows, cols), interval=(0, 1), node_id=next(seq))
    else:
        root = grow(GRAM, 0, 1, (rows, cols), (0, core))
    tree = TaskTree(root=root, total_ranks=ranks, max_levels=lm, leftover=ranks - core)

    if ranks > core:
        _attach_helpers(tree, core)
    return tree


def _attach_helpers(tree, core):
    """Leftover ranks: k full rounds over every sequential task (ascending
    owner), then one extra each by priority: Strassen tasks first, larger
    tasks next, ties to the lower owner rank."""
    leaves = tree.leaves()
    k = (tree.total_ranks - core) // core
    nxt = core
    for _ in range(k):
        for leaf in leaves:
            leaf.helpers.append(nxt)
            nxt += 1
    by_priority = sorted(
        leaves,
        key=lambda nd: (0 if nd.kind == STRASSEN else 1,
                        -task_size(nd.kind, nd.dims),
                        nd.owner),
    )
    extras = tree.total_ranks - nxt
    for i in range(extras):
        by_priority[i].helpers.append(nxt)
        nxt += 1


def tree_to_json(tree: TaskTree) -> dict:
    def node_json(node):
        return {
            "kind": node.kind,
            "level": node.level,
            "owner": node.owner,
            "ids": list(node.ids),
            "dims": list(node.dims),
            "interval": list(node.interval),
            "helpers": list(node.helpers),
            "node_id": node.node_id,
            "children": [node_json(c) for c in node.children],
        }

    return {
        "total_ranks": tree.total_ranks,
        "max_levels": tree.max_levels,
        "leftover": tree.leftover,
        "root": node_json(tree.root),
    }

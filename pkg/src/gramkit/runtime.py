"""Multiprocess execution of a task tree with message-passing joins.

One pool of workers per run, ranks mapped 1:1 to processes.  Each worker
receives copies of exactly the blocks its task needs, computes its leaf
serially, then the tree is joined bottom-up: per Gram node three group
sum-reductions build C11, C22 and C21 at their group roots, the latter
two blocks are then sent to the node owner; per Strassen node four group
reductions build the D blocks, and the two blocks not already at the
owner are forwarded.  Reductions sum contributions in ascending rank
order, so runs are reproducible bit for bit.  All channels are blocking
and the communication order is a static function of the tree, which
rules out deadlock by construction.

Message accounting: every message is recorded by its receiver as
(sender, receiver, words, node, seconds), with rank -1 standing for the
coordinating process.  The seconds field clocks the receive once data
has become available, so it measures transfer work, not waiting for the
producer.  Distribution and final collection are bookkeeping outside
the per-level model: they appear in the totals but not in the critical
path, the per-message maximum, or the communication wall time.  The
measured critical path is the chain of messages the final owner
(rank 0) receives.
"""

from __future__ import annotations

import csv
import multiprocessing as mp
import time
import traceback
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gram import GramConfig, gram_packed
from .matrix import PackedLowerTriangular, as_array, merge_packed, split_dims, transpose_array
from .schedule import GRAM, STRASSEN, TaskTree, max_complete_levels, task_size
from .strassen import strassen_product

MASTER = -1


@dataclass
class CostModel:
    """alpha: seconds per message, beta: seconds per word."""

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("cost coefficients must be >= 0")


@dataclass
class CommStats:
    messages_critical_path: int = 0
    words_critical_path: int = 0
    messages_total: int = 0
    words_total: int = 0
    max_message_words: int = 0
    comm_wall_time: float = 0.0


@dataclass(frozen=True)
class WorkerGroup:
    """Ranks cooperating in one reduction; the lowest rank is the root."""

    members: tuple

    def __post_init__(self):
        if not self.members:
            raise ValueError("empty worker group")
        object.__setattr__(self, "members", tuple(self.members))

    @property
    def root(self) -> int:
        return min(self.members)


def reduce_sum(group: WorkerGroup, contributions) -> np.ndarray:
    """Elementwise sum of the members' arrays in ascending rank order."""
    members = sorted(group.members)
    missing = [r for r in members if r not in contributions]
    if missing:
        raise ValueError(f"missing contributions from ranks {missing}")
    out = np.asarray(contributions[members[0]], dtype=np.float64).copy()
    for rank in members[1:]:
        c = np.asarray(contributions[rank], dtype=np.float64)
        if c.shape != out.shape:
            raise ValueError(f"reduction member shapes differ: {c.shape} vs {out.shape}")
        out += c
    return out


def predict_comm_cost(n: int, ranks: int, model: CostModel | None = None):
    """Model values (latency, bandwidth words, seconds) for an n-column
    input on `ranks` workers: latency max{4(L-1), 3L} with L the number of
    fully staffed levels, bandwidth ceil(n/2)^2."""
    lm = max_complete_levels(ranks)
    latency = max(4 * (lm - 1), 3 * lm)
    bandwidth = ((n + 1) // 2) ** 2
    model = CostModel() if model is None else model
    return latency, bandwidth, model.alpha * latency + model.beta * bandwidth


# --------------------------------------------------------------------------
# message records and statistics

def stats_from_records(records) -> CommStats:
    stats = CommStats()
    for sender, receiver, words, _node, seconds in records:
        stats.messages_total += 1
        stats.words_total += words
        if sender < 0 or receiver < 0:
            continue
        stats.comm_wall_time += seconds
        if words > stats.max_message_words:
            stats.max_message_words = words
        if receiver == 0:
            stats.messages_critical_path += 1
            stats.words_critical_path += words
    return stats


def write_trace(path, records):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["sender", "receiver", "words", "node"])
        for sender, receiver, words, node, _seconds in records:
            writer.writerow([sender, receiver, words, node])


def read_trace(path):
    records = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != ["sender", "receiver", "words", "node"]:
            raise ValueError(f"{path!r} is not a message trace")
        for row in reader:
            records.append((int(row[0]), int(row[1]), int(row[2]), int(row[3]), 0.0))
    return records


def stats_from_trace(path) -> CommStats:
    """Replay a trace file through the same accounting as a live run."""
    return stats_from_records(read_trace(path))


# --------------------------------------------------------------------------
# static communication schedule

def _node_groups(kind):
    """Reduction groups per node kind: (block label, [(ids index, sign)]).
    The group root is the member with the lowest rank."""
    if kind == GRAM:
        return (("c11", ((0, 1), (1, 1))),
                ("c22", ((2, 1), (3, 1))),
                ("c21", ((4, 1), (5, 1))))
    return (("d11", ((0, 1), (3, 1), (4, -1), (6, 1))),
            ("d12", ((2, 1), (4, 1))),
            ("d21", ((1, 1), (3, 1))),
            ("d22", ((0, 1), (1, -1), (2, 1), (5, 1))))


def _node_sends(kind):
    """Blocks whose group root must forward them to the node owner."""
    if kind == GRAM:
        return (("c22", 2), ("c21", 4))
    return (("d12", 2), ("d21", 1))


def leaf_items(kind, dims, threshold):
    """Tags of a sequential task's top-level sub-calls in helper-priority
    order: Strassen products first, then larger tasks, ties kept stable.
    Empty when the task bottoms out immediately."""
    if kind == GRAM:
        m, n = dims
        if min(m, n) <= threshold:
            return []
        d = split_dims(m, n)
        items = [
            ("s5", STRASSEN, (d.n2, d.m1, d.n1)),
            ("s6", STRASSEN, (d.n2, d.m2, d.n1)),
            ("s1", GRAM, (d.m1, d.n1)),
            ("s2", GRAM, (d.m2, d.n1)),
            ("s3", GRAM, (d.m1, d.n2)),
            ("s4", GRAM, (d.m2, d.n2)),
        ]
    else:
        p, q, r = dims
        if min(p, q, r) <= threshold:
            return []
        items = [(f"m{i + 1}", STRASSEN, (p // 2, q // 2, r // 2)) for i in range(7)]
    items.sort(key=lambda it: (0 if it[1] == STRASSEN else 1, -task_size(it[1], it[2])))
    return [it[0] for it in items]


def assign_items(tags, helpers, owner):
    """Round-robin over helpers then the owner, in priority order."""
    assignees = list(helpers) + [owner]
    return {tag: assignees[i % len(assignees)] for i, tag in enumerate(tags)}


# Strassen sub-product operands.  The first operand of every product is
# carried untransposed (as the q x p block X with A = X^T), so a product
# combo t(X11) + t(X22) is shipped as the raw sum X11 + X22 and transposed
# by whoever computes the product.
_X_COMBOS = ((11, 22, 1), (12, 22, 1), (11, 0, 0), (22, 0, 0),
             (11, 21, 1), (12, 11, -1), (21, 22, -1))
_B_COMBOS = ((11, 22, 1), (11, 0, 0), (12, 22, -1), (21, 11, -1),
             (22, 0, 0), (11, 12, 1), (21, 22, 1))


def _combo(quads, spec):
    first, second, sign = spec
    if sign == 0:
        return quads[first]
    if sign > 0:
        return quads[first] + quads[second]
    return quads[first] - quads[second]


def strassen_child_operands(x, b, i):
    """Raw first operand and second operand of sub-product i (0-based)."""
    q, p = x.shape
    r = b.shape[1]
    qh, ph, rh = (q & ~1) // 2, (p & ~1) // 2, (r & ~1) // 2
    xq = {11: x[:qh, :ph], 12: x[:qh, ph:2 * ph],
          21: x[qh:2 * qh, :ph], 22: x[qh:2 * qh, ph:2 * ph]}
    bq = {11: b[:qh, :rh], 12: b[:qh, rh:2 * rh],
          21: b[qh:2 * qh, :rh], 22: b[qh:2 * qh, rh:2 * rh]}
    return _combo(xq, _X_COMBOS[i]), _combo(bq, _B_COMBOS[i])


def _gram_item_arrays(a, tag):
    d = split_dims(*a.shape)
    if tag == "s1":
        return {"a": a[:d.m1, :d.n1]}
    if tag == "s2":
        return {"a": a[d.m1:, :d.n1]}
    if tag == "s3":
        return {"a": a[:d.m1, d.n1:]}
    if tag == "s4":
        return {"a": a[d.m1:, d.n1:]}
    if tag == "s5":
        return {"x": a[:d.m1, d.n1:], "b": a[:d.m1, :d.n1]}
    if tag == "s6":
        return {"x": a[d.m1:, d.n1:], "b": a[d.m1:, :d.n1]}
    raise ValueError(f"unknown item tag {tag!r}")


def item_arrays(kind, arrays, tag):
    if kind == GRAM:
        return _gram_item_arrays(arrays["a"], tag)
    f, g = strassen_child_operands(arrays["x"], arrays["b"], int(tag[1:]) - 1)
    return {"x": f, "b": g}


def compute_item(arrays, threshold):
    if "a" in arrays:
        return gram_packed(arrays["a"], threshold)
    return strassen_product(transpose_array(arrays["x"]), arrays["b"], threshold)


def assemble_strassen(dims, blocks, operands):
    """Full p x r product from the four core D blocks plus, for odd
    dimensions, classical patches of the peeled strips (needs the node's
    full operands)."""
    p, q, r = dims
    pc, qc, rc = p & ~1, q & ~1, r & ~1
    ph, rh = pc // 2, rc // 2
    d = np.empty((p, r))
    d[:ph, :rh] = blocks["d11"]
    d[:ph, rh:rc] = blocks["d12"]
    d[ph:pc, :rh] = blocks["d21"]
    d[ph:pc, rh:rc] = blocks["d22"]
    if (p | q | r) & 1:
        if operands is None:
            raise ValueError("peeling patches need the node operands")
        at = transpose_array(operands["x"])
        b = operands["b"]
        if q & 1:
            d[:pc, :rc] += kernels.matmul_block(at[:pc, qc:], b[qc:, :rc])
        if r & 1:
            d[:pc, rc:] = kernels.matmul_block(at[:pc, :], b[:, rc:])
        if p & 1:
            d[pc:, :] = kernels.matmul_block(at[pc:, :], b)
    return d


# --------------------------------------------------------------------------
# payloads and channel topology

def _build_payloads(tree, threshold, arr):
    """Per-rank operand blocks: every worker gets copies of exactly the
    blocks its leaf (or helper items) needs; owners of Strassen nodes with
    odd dimensions additionally get the node operands for the peel patches."""
    payloads = {r: {"task": None, "items": [], "assembly": {}}
                for r in range(tree.total_ranks)}

    def leaf_payload(node, ctx):
        if node.kind == GRAM:
            arrays = {"a": np.ascontiguousarray(ctx)}
        else:
            x, b = ctx
            arrays = {"x": np.ascontiguousarray(x), "b": np.ascontiguousarray(b)}
        payloads[node.owner]["task"] = {"node": node.node_id, "kind": node.kind,
                                        "dims": tuple(node.dims), "arrays": arrays}
        if node.helpers:
            tags = leaf_items(node.kind, node.dims, threshold)
            assign = assign_items(tags, node.helpers, node.owner)
            for tag in tags:
                helper = assign[tag]
                if helper == node.owner:
                    continue
                ops = {k: np.ascontiguousarray(v)
                       for k, v in item_arrays(node.kind, arrays, tag).items()}
                payloads[helper]["items"].append(
                    {"host": node.owner, "node": node.node_id, "tag": tag, "arrays": ops})

    def walk(node, ctx):
        if node.level == 0:
            leaf_payload(node, ctx)
            return
        if node.kind == GRAM:
            a = ctx
            d = split_dims(*node.dims)
            a11 = a[:d.m1, :d.n1]
            a12 = a[:d.m1, d.n1:]
            a21 = a[d.m1:, :d.n1]
            a22 = a[d.m1:, d.n1:]
            ctxs = [a11, a21, a12, a22, (a12, a11), (a22, a21)]
        else:
            x, b = ctx
            if (node.dims[0] | node.dims[1] | node.dims[2]) & 1:
                payloads[node.ids[0]]["assembly"][node.node_id] = {
                    "x": np.ascontiguousarray(x), "b": np.ascontiguousarray(b)}
            ctxs = [strassen_child_operands(x, b, i) for i in range(7)]
        for child, cctx in zip(node.children, ctxs):
            walk(child, cctx)

    walk(tree.root, arr)
    return payloads


def _payload_words(payload):
    words = 0
    if payload["task"]:
        words += sum(a.size for a in payload["task"]["arrays"].values())
    for item in payload["items"]:
        words += sum(a.size for a in item["arrays"].values())
    for blocks in payload["assembly"].values():
        words += sum(a.size for a in blocks.values())
    return words


def _edges(tree, threshold):
    """Directed (sender, receiver) pairs of the static schedule."""
    edges = set()
    for node in tree.nodes():
        if node.level >= 1:
            for _label, members in _node_groups(node.kind):
                root = node.ids[min(i for i, _ in members)]
                for i, _ in members:
                    if node.ids[i] != root:
                        edges.add((node.ids[i], root))
            for _label, idx in _node_sends(node.kind):
                edges.add((node.ids[idx], node.ids[0]))
        elif node.helpers:
            tags = leaf_items(node.kind, node.dims, threshold)
            assign = assign_items(tags, node.helpers, node.owner)
            for helper in assign.values():
                if helper != node.owner:
                    edges.add((helper, node.owner))
    return edges


def _plan(tree, rank):
    """(leaf node, role, joins) for one rank; joins run deepest first and a
    rank only continues upward while it owns the node it just joined."""

    def find(node, ancestors):
        if node.level == 0:
            if node.owner == rank or rank in node.helpers:
                return node, ancestors
            return None
        for child in node.children:
            hit = find(child, ancestors + [node])
            if hit is not None:
                return hit
        return None

    hit = find(tree.root, [])
    if hit is None:
        raise ValueError(f"rank {rank} does not appear in the tree")
    leaf, ancestors = hit
    role = "host" if leaf.owner == rank else "helper"
    joins = []
    if role == "host":
        for node in reversed(ancestors):
            idx = node.ids.index(rank) if rank in node.ids else None
            if idx is None:
                break
            joins.append((node, idx))
            if idx != 0:
                break
    return leaf, role, joins


# --------------------------------------------------------------------------
# worker side

class _Comm:
    """Blocking typed channels plus the receiver-side message log."""

    def __init__(self, rank, in_conns, out_conns, records, timeout):
        self.rank = rank
        self.in_conns = in_conns
        self.out_conns = out_conns
        self.records = records
        self.timeout = timeout

    def send(self, dst, tag, node_id, array):
        self.out_conns[dst].send((tag, node_id, array))

    def recv(self, src, tag, node_id):
        conn = self.in_conns[src]
        if not conn.poll(self.timeout):
            raise TimeoutError(
                f"rank {self.rank} timed out waiting for rank {src} "
                f"(block {tag!r}, node {node_id})")
        t0 = time.perf_counter()
        got_tag, got_node, array = conn.recv()
        seconds = time.perf_counter() - t0
        if got_tag != tag or got_node != node_id:
            raise RuntimeError(
                f"rank {self.rank} expected {tag!r}/node {node_id} from rank {src}, "
                f"got {got_tag!r}/node {got_node}")
        self.records.append((src, self.rank, array.size, node_id, seconds))
        return array


def _run_leaf(leaf, threshold, payload, comm):
    task = payload["task"]
    arrays = task["arrays"]
    tags = leaf_items(leaf.kind, leaf.dims, threshold) if leaf.helpers else []
    if not tags:
        if leaf.kind == GRAM:
            return gram_packed(arrays["a"], threshold)
        return strassen_product(transpose_array(arrays["x"]), arrays["b"], threshold)

    assign = assign_items(tags, leaf.helpers, leaf.owner)
    results = {}
    for tag in tags:
        if assign[tag] == leaf.owner:
            results[tag] = compute_item(item_arrays(leaf.kind, arrays, tag), threshold)
    for tag in tags:  # helper sends follow this same order, FIFO per channel
        if assign[tag] != leaf.owner:
            results[tag] = comm.recv(assign[tag], tag, leaf.node_id)

    if leaf.kind == GRAM:
        d = split_dims(*leaf.dims)
        return merge_packed(results["s1"] + results["s2"],
                            results["s5"] + results["s6"],
                            results["s3"] + results["s4"], d.n1, d.n2)
    blocks = {
        "d11": results["m1"] + results["m4"] - results["m5"] + results["m7"],
        "d12": results["m3"] + results["m5"],
        "d21": results["m2"] + results["m4"],
        "d22": results["m1"] - results["m2"] + results["m3"] + results["m6"],
    }
    return assemble_strassen(leaf.dims, blocks, arrays)


def _run_join(node, idx, my_result, payload, comm):
    """One node join from the perspective of ids[idx]; returns the node
    result for the owner, None for everybody else."""
    held = {}
    for label, members in _node_groups(node.kind):
        mine = next(((i, s) for i, s in members if i == idx), None)
        if mine is None:
            continue
        root_idx = min(i for i, _ in members)
        contrib = my_result if mine[1] == 1 else -my_result
        if idx == root_idx:
            contributions = {node.ids[idx]: contrib}
            for i, _sign in members:
                if i != root_idx:
                    contributions[node.ids[i]] = comm.recv(node.ids[i], label, node.node_id)
            group = WorkerGroup(tuple(node.ids[i] for i, _ in members))
            held[label] = reduce_sum(group, contributions)
        else:
            comm.send(node.ids[root_idx], label, node.node_id, contrib)
    for label, from_idx in _node_sends(node.kind):
        if idx == from_idx:
            comm.send(node.ids[0], label, node.node_id, held[label])
        elif idx == 0:
            held[label] = comm.recv(node.ids[from_idx], label, node.node_id)
    if idx != 0:
        return None
    if node.kind == GRAM:
        d = split_dims(*node.dims)
        return merge_packed(held["c11"], held["c21"], held["c22"], d.n1, d.n2)
    return assemble_strassen(node.dims, held, payload["assembly"].get(node.node_id))


def _execute(rank, tree, threshold, payload, comm, current):
    leaf, role, joins = _plan(tree, rank)
    current["node"] = leaf.node_id
    if role == "helper":
        for item in payload["items"]:
            result = compute_item(item["arrays"], threshold)
            comm.send(item["host"], item["tag"], item["node"], result)
        return None
    result = _run_leaf(leaf, threshold, payload, comm)
    for node, idx in joins:
        current["node"] = node.node_id
        result = _run_join(node, idx, result, payload, comm)
        if result is None:
            break
    return result


def _worker_main(rank, tree, threshold, master_conn, in_conns, out_conns, timeout):
    current = {"node": None}
    records = []
    try:
        if not master_conn.poll(timeout):
            raise TimeoutError(f"rank {rank} never received its operands")
        t0 = time.perf_counter()
        payload = master_conn.recv()
        records.append((MASTER, rank, _payload_words(payload), -1,
                        time.perf_counter() - t0))
        t0 = time.perf_counter()
        comm = _Comm(rank, in_conns, out_conns, records, timeout)
        result = _execute(rank, tree, threshold, payload, comm, current)
        wall = time.perf_counter() - t0
        master_conn.send({"ok": True, "rank": rank, "wall": wall, "records": records,
                          "result": result if rank == 0 else None})
    except BaseException:
        try:
            master_conn.send({"ok": False, "rank": rank, "node": current["node"],
                              "traceback": traceback.format_exc()})
        except Exception:
            pass


# --------------------------------------------------------------------------
# coordinator side

def _collect(conn, proc, timeout, rank):
    deadline = time.monotonic() + timeout
    while True:
        if conn.poll(0.2):
            t0 = time.perf_counter()
            msg = conn.recv()
            return msg, time.perf_counter() - t0
        if not proc.is_alive():
            raise RuntimeError(
                f"worker rank {rank} exited with code {proc.exitcode} before reporting")
        if time.monotonic() > deadline:
            raise TimeoutError(f"timed out waiting for worker rank {rank}")


def run_parallel(a, tree: TaskTree, cfg: GramConfig | None = None,
                 trace_path=None, timeout: float = 300.0):
    """Execute the tree on a fresh pool of tree.total_ranks workers.

    Returns (packed result, CommStats, per-rank wall seconds).  A single
    rank runs in-process with no pool and no messages.
    """
    cfg = GramConfig() if cfg is None else cfg
    arr = as_array(a)
    m, n = arr.shape
    if tuple(tree.root.dims) != (m, n):
        raise ValueError(f"tree was built for {tuple(tree.root.dims)}, matrix is {(m, n)}")
    for leaf in tree.leaves():
        if min(leaf.dims) < 1:
            raise ValueError("tree is deeper than the matrix dimensions allow")

    if tree.total_ranks == 1:
        t0 = time.perf_counter()
        packed = gram_packed(arr, cfg.base_threshold)
        wall = time.perf_counter() - t0
        if trace_path:
            write_trace(trace_path, [])
        return PackedLowerTriangular(n, packed), CommStats(), [wall]

    total = tree.total_ranks
    payloads = _build_payloads(tree, cfg.base_threshold, arr)
    edges = sorted(_edges(tree, cfg.base_threshold))
    ctx = mp.get_context("fork" if "fork" in mp.get_all_start_methods() else None)

    pipe_recv, pipe_send = {}, {}
    for edge in edges:
        rconn, sconn = ctx.Pipe(duplex=False)
        pipe_recv[edge] = rconn
        pipe_send[edge] = sconn

    procs, master_ends = {}, {}
    for rank in range(total):
        mend, wend = ctx.Pipe(duplex=True)
        in_conns = {src: pipe_recv[(src, dst)] for (src, dst) in edges if dst == rank}
        out_conns = {dst: pipe_send[(src, dst)] for (src, dst) in edges if src == rank}
        proc = ctx.Process(target=_worker_main,
                           args=(rank, tree, cfg.base_threshold, wend,
                                 in_conns, out_conns, timeout),
                           name=f"gramkit-w{rank}", daemon=True)
        proc.start()
        procs[rank] = proc
        master_ends[rank] = mend

    records = []
    packed = None
    walls = [0.0] * total
    try:
        for rank in range(total):
            master_ends[rank].send(payloads[rank])
        for rank in range(total):
            msg, seconds = _collect(master_ends[rank], procs[rank], timeout, rank)
            if not msg["ok"]:
                raise RuntimeError(
                    f"worker rank {msg['rank']} failed at node {msg['node']}:\n"
                    f"{msg['traceback']}")
            walls[rank] = msg["wall"]
            records.extend(msg["records"])
            if rank == 0:
                packed = msg["result"]
            records.append((rank, MASTER, packed.size if rank == 0 else 0, -1, seconds))
    except BaseException:
        for proc in procs.values():
            if proc.is_alive():
                proc.terminate()
        raise
    finally:
        for proc in procs.values():
            proc.join(timeout=5)

    stats = stats_from_records(records)
    if trace_path:
        write_trace(trace_path, records)
    return PackedLowerTriangular(n, packed), stats, walls

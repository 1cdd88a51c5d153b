"""Blocks and the combinators that wire them into hybrid models.

A :class:`Block` is a pure function from input vectors to one output vector,
with declared port dimensions. The combinators implement the composition
patterns used throughout the repo:

* :func:`compose_delta`       H(x) = P(x) + D(x)
* :func:`compose_chain`       H(x) = second(first(x))
* :func:`compose_feature`     H(x) = P(x, D(x))
* :func:`compose_constrained` H(x) = projector(D(x))
* :func:`scan`                s_k  = update(s_{k-1}, x_k, dt_k)

Every combinator returns a plain Block, so compositions nest freely.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .series import TimeSeries


@dataclass(frozen=True)
class Block:
    """Pure evaluable unit with one output port and any number of input ports.

    ``run`` receives one float array per input port and must return a vector
    of length ``out_dim`` without mutating anything. ``kind``/``params`` are
    only used by the text serialization and may be left empty for ad-hoc
    blocks.
    """

    name: str
    in_dims: tuple
    out_dim: int
    run: Callable
    kind: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "in_dims", tuple(int(d) for d in self.in_dims))
        if any(d < 0 for d in self.in_dims) or self.out_dim < 0:
            raise ValueError("port dimensions must be nonnegative")

    def __call__(self, *inputs):
        return eval_block(self, list(inputs))


def eval_block(block: Block, inputs) -> np.ndarray:
    """Evaluate a block, checking port counts and dimensions both ways."""
    if len(inputs) != len(block.in_dims):
        raise ValueError(
            f"block '{block.name}' expects {len(block.in_dims)} inputs, got {len(inputs)}"
        )
    arrays = []
    for i, (x, d) in enumerate(zip(inputs, block.in_dims)):
        a = np.atleast_1d(np.asarray(x, dtype=float))
        if a.shape != (d,):
            raise ValueError(
                f"block '{block.name}' port {i}: expected dim {d}, got shape {a.shape}"
            )
        arrays.append(a)
    out = np.atleast_1d(np.asarray(block.run(*arrays), dtype=float))
    if out.shape != (block.out_dim,):
        raise ValueError(
            f"block '{block.name}' produced shape {out.shape}, declared out_dim {block.out_dim}"
        )
    return out


# ---------------------------------------------------------------------------
# composition patterns
# ---------------------------------------------------------------------------

def compose_delta(p: Block, d: Block, name: Optional[str] = None) -> Block:
    """Additive correction: the data block refines the physics block's output."""
    if p.out_dim != d.out_dim:
        raise ValueError(
            f"delta composition needs equal output dims, got {p.out_dim} vs {d.out_dim}"
        )
    if p.in_dims != d.in_dims:
        raise ValueError(
            f"delta composition needs identical input signatures, got {p.in_dims} vs {d.in_dims}"
        )
    return Block(
        name=name or f"delta({p.name},{d.name})",
        in_dims=p.in_dims,
        out_dim=p.out_dim,
        run=lambda *xs: eval_block(p, list(xs)) + eval_block(d, list(xs)),
    )


def compose_chain(first: Block, second: Block, name: Optional[str] = None) -> Block:
    """Preprocessing chain: feed first's output into second's single port."""
    if len(second.in_dims) != 1:
        raise ValueError(f"chain target '{second.name}' must have exactly one input port")
    if first.out_dim != second.in_dims[0]:
        raise ValueError(
            f"chain dim mismatch: '{first.name}' outputs {first.out_dim}, "
            f"'{second.name}' expects {second.in_dims[0]}"
        )
    return Block(
        name=name or f"chain({first.name},{second.name})",
        in_dims=first.in_dims,
        out_dim=second.out_dim,
        run=lambda *xs: eval_block(second, [eval_block(first, list(xs))]),
    )


def compose_feature(p: Block, d: Block, name: Optional[str] = None) -> Block:
    """Estimated-input fan-in: the data block supplies p's second port."""
    if len(p.in_dims) != 2:
        raise ValueError(f"feature target '{p.name}' must have two input ports (x, v)")
    if len(d.in_dims) != 1:
        raise ValueError(f"feature estimator '{d.name}' must have one input port")
    if p.in_dims[0] != d.in_dims[0]:
        raise ValueError(
            f"feature x-port dim mismatch: {p.in_dims[0]} vs {d.in_dims[0]}"
        )
    if p.in_dims[1] != d.out_dim:
        raise ValueError(
            f"feature v-port dim mismatch: p expects {p.in_dims[1]}, d outputs {d.out_dim}"
        )
    return Block(
        name=name or f"feature({p.name},{d.name})",
        in_dims=(p.in_dims[0],),
        out_dim=p.out_dim,
        run=lambda x: eval_block(p, [x, eval_block(d, [x])]),
    )


def compose_constrained(d: Block, projector: Block, name: Optional[str] = None) -> Block:
    """Hard constraint: pass the data block's output through a projector."""
    if len(projector.in_dims) != 1:
        raise ValueError(f"projector '{projector.name}' must have one input port")
    if projector.in_dims[0] != d.out_dim:
        raise ValueError(
            f"projector dim mismatch: expects {projector.in_dims[0]}, d outputs {d.out_dim}"
        )
    return Block(
        name=name or f"constrained({d.name},{projector.name})",
        in_dims=d.in_dims,
        out_dim=projector.out_dim,
        run=lambda *xs: eval_block(projector, [eval_block(d, list(xs))]),
    )


@dataclass(frozen=True)
class RecurrentBlock:
    """Sequential state update s_k = update(s_{k-1}, x_k, dt_k)."""

    update: Block
    init_state: np.ndarray
    state_dim: int

    def __post_init__(self):
        init = np.atleast_1d(np.asarray(self.init_state, dtype=float))
        object.__setattr__(self, "init_state", init)
        if init.shape != (self.state_dim,):
            raise ValueError(
                f"init_state shape {init.shape} does not match state_dim {self.state_dim}"
            )
        if len(self.update.in_dims) != 3:
            raise ValueError("update block needs ports (state, input, dt)")
        if self.update.in_dims[0] != self.state_dim or self.update.out_dim != self.state_dim:
            raise ValueError(
                f"update block state ports must have dim {self.state_dim}, "
                f"got in {self.update.in_dims[0]} / out {self.update.out_dim}"
            )
        if self.update.in_dims[2] != 1:
            raise ValueError("update block dt port must have dim 1")


def scan(rb: RecurrentBlock, inputs: TimeSeries, t0: Optional[float] = None) -> TimeSeries:
    """Fold the update block over a time series, one state per sample.

    Time steps are taken from the timestamps; ``t0`` anchors the first step
    (default: the first timestamp, making the first dt zero). Seeding a scan
    of a tail segment with the head's final state and ``t0 =`` head's final
    time reproduces the scan of the whole series.
    """
    if inputs.dim != rb.update.in_dims[1]:
        raise ValueError(
            f"input dim {inputs.dim} does not match update port {rb.update.in_dims[1]}"
        )
    prev_t = inputs.times[0] if t0 is None else float(t0)
    if inputs.times[0] < prev_t:
        raise ValueError("t0 must not exceed the first timestamp")
    state = rb.init_state
    states = np.empty((len(inputs), rb.state_dim))
    for k in range(len(inputs)):
        dt = inputs.times[k] - prev_t
        state = eval_block(rb.update, [state, inputs.values[k], np.array([dt])])
        states[k] = state
        prev_t = inputs.times[k]
    return TimeSeries(inputs.times, states)


# ---------------------------------------------------------------------------
# explicit graphs
# ---------------------------------------------------------------------------

@dataclass
class ModelGraph:
    """Directed acyclic wiring of named blocks.

    ``inputs`` maps external input names to dims; ``edges`` are
    (source, target, port) with source either an input name or a node name
    (blocks have a single output); ``outputs`` lists node names whose outputs
    the graph exposes.
    """

    nodes: dict
    edges: list
    inputs: dict
    outputs: list


def validate_graph(g: ModelGraph) -> list:
    """Return diagnostics (empty list means the graph is well-formed)."""
    diags = []
    sources = set(g.inputs) | set(g.nodes)
    incoming = {name: {} for name in g.nodes}

    for src, dst, port in g.edges:
        if src not in sources:
            diags.append(f"edge {src} -> {dst}.{port}: unknown source '{src}'")
            continue
        if dst not in g.nodes:
            diags.append(f"edge {src} -> {dst}.{port}: unknown target '{dst}'")
            continue
        block = g.nodes[dst]
        if not 0 <= port < len(block.in_dims):
            diags.append(f"edge {src} -> {dst}.{port}: node '{dst}' has no port {port}")
            continue
        src_dim = g.inputs[src] if src in g.inputs else g.nodes[src].out_dim
        want = block.in_dims[port]
        if src_dim != want:
            diags.append(
                f"edge {src} -> {dst}.{port}: dim {src_dim} does not match port dim {want}"
            )
        incoming[dst].setdefault(port, []).append(src)

    for name, block in g.nodes.items():
        for port, d in enumerate(block.in_dims):
            n_in = len(incoming[name].get(port, []))
            if n_in != 1:
                diags.append(f"node '{name}' port {port} has {n_in} incoming edges, needs 1")

    for name in g.outputs:
        if name not in g.nodes:
            diags.append(f"output references unknown node '{name}'")

    # Kahn topological pass over node-to-node edges; leftovers sit on a cycle.
    deps = {name: set() for name in g.nodes}
    for src, dst, _ in g.edges:
        if src in g.nodes and dst in g.nodes:
            deps[dst].add(src)
    ready = [n for n, d in deps.items() if not d]
    seen = set()
    while ready:
        n = ready.pop()
        seen.add(n)
        for m, d in deps.items():
            if n in d:
                d.discard(n)
                if not d and m not in seen:
                    ready.append(m)
    for name in sorted(set(g.nodes) - seen):
        diags.append(f"cycle involving node '{name}'")

    return diags


def eval_graph(g: ModelGraph, inputs: dict) -> dict:
    """Evaluate a validated graph on named external inputs."""
    diags = validate_graph(g)
    if diags:
        raise ValueError("invalid graph: " + "; ".join(diags))
    values = {}
    for name, dim in g.inputs.items():
        a = np.atleast_1d(np.asarray(inputs[name], dtype=float))
        if a.shape != (dim,):
            raise ValueError(f"input '{name}': expected dim {dim}, got shape {a.shape}")
        values[name] = a
    feeds = {name: {} for name in g.nodes}
    for src, dst, port in g.edges:
        feeds[dst][port] = src
    pending = dict(g.nodes)
    while pending:
        progressed = False
        for name in list(pending):
            srcs = [feeds[name][p] for p in range(len(pending[name].in_dims))]
            if all(s in values for s in srcs):
                values[name] = eval_block(pending[name], [values[s] for s in srcs])
                del pending[name]
                progressed = True
        if not progressed:  # unreachable after validation
            raise ValueError("graph evaluation stalled")
    return {name: values[name] for name in g.outputs}


# ---------------------------------------------------------------------------
# standard blocks + text serialization
# ---------------------------------------------------------------------------

def identity_block(dim: int, name: str = "identity") -> Block:
    return Block(name, (dim,), dim, lambda x: x, kind="identity", params={"dim": dim})


def constant_block(values, name: str = "constant") -> Block:
    vec = np.atleast_1d(np.asarray(values, dtype=float))
    return Block(
        name, (), len(vec), lambda: vec.copy(),
        kind="constant", params={"values": tuple(float(v) for v in vec)},
    )


def sum_block(dim: int, ports: int = 2, name: str = "sum") -> Block:
    return Block(
        name, (dim,) * ports, dim, lambda *xs: np.sum(xs, axis=0),
        kind="sum", params={"dim": dim, "ports": ports},
    )


def scale_block(dim: int, factor: float, name: str = "scale") -> Block:
    return Block(
        name, (dim,), dim, lambda x: factor * x,
        kind="scale", params={"dim": dim, "factor": float(factor)},
    )


def shift_block(dim: int, offset: float, name: str = "shift") -> Block:
    return Block(
        name, (dim,), dim, lambda x: x + offset,
        kind="shift", params={"dim": dim, "offset": float(offset)},
    )


def slice_block(in_dim: int, start: int, stop: int, name: str = "slice") -> Block:
    if not 0 <= start < stop <= in_dim:
        raise ValueError(f"bad slice [{start}:{stop}] for dim {in_dim}")
    return Block(
        name, (in_dim,), stop - start, lambda x: x[start:stop],
        kind="slice", params={"in_dim": in_dim, "start": start, "stop": stop},
    )


def func_block(name, in_dims, out_dim, fn) -> Block:
    """Ad-hoc block from a plain function (not text-serializable)."""
    return Block(name, tuple(in_dims), out_dim, fn)


BLOCK_REGISTRY = {
    "identity": lambda dim: identity_block(int(dim)),
    "constant": lambda values: constant_block(values),
    "sum": lambda dim, ports=2: sum_block(int(dim), int(ports)),
    "scale": lambda dim, factor: scale_block(int(dim), float(factor)),
    "shift": lambda dim, offset: shift_block(int(dim), float(offset)),
    "slice": lambda in_dim, start, stop: slice_block(int(in_dim), int(start), int(stop)),
}


def _fmt_param(v):
    if isinstance(v, tuple):
        return ",".join(format(x, ".17g") for x in v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def serialize_graph(g: ModelGraph) -> str:
    """Render a graph as the plain-text node/edge format (see parse_graph)."""
    lines = []
    for name, dim in g.inputs.items():
        lines.append(f"input {name} dim={dim}")
    for name, block in g.nodes.items():
        if not block.kind:
            raise ValueError(f"node '{name}' has no registered kind; cannot serialize")
        params = " ".join(f"{k}={_fmt_param(v)}" for k, v in block.params.items())
        lines.append(f"node {name} {block.kind}" + (f" {params}" if params else ""))
    for src, dst, port in g.edges:
        lines.append(f"edge {src} -> {dst}.{port}")
    for name in g.outputs:
        lines.append(f"output {name}")
    return "\n".join(lines) + "\n"


def _parse_value(s):
    if "," in s:
        return tuple(float(p) for p in s.split(","))
    try:
        return int(s)
    except ValueError:
        try:
            return float(s)
        except ValueError:
            return s


def parse_graph(text: str, registry: Optional[dict] = None) -> ModelGraph:
    """Parse the text format: input/node/edge/output lines, '#' comments."""
    registry = BLOCK_REGISTRY if registry is None else registry
    nodes, edges, inputs, outputs = {}, [], {}, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "input":
                _, name, dim_kv = parts
                inputs[name] = int(dim_kv.split("=", 1)[1])
            elif tag == "node":
                name, kind = parts[1], parts[2]
                params = dict(p.split("=", 1) for p in parts[3:])
                factory = registry[kind]
                block = factory(**{k: _parse_value(v) for k, v in params.items()})
                nodes[name] = Block(
                    name, block.in_dims, block.out_dim, block.run,
                    kind=block.kind, params=block.params,
                )
            elif tag == "edge":
                src, arrow, dst_port = parts[1], parts[2], parts[3]
                if arrow != "->":
                    raise ValueError("expected '->'")
                dst, port = dst_port.rsplit(".", 1)
                edges.append((src, dst, int(port)))
            elif tag == "output":
                outputs.append(parts[1])
            else:
                raise ValueError(f"unknown directive '{tag}'")
        except KeyError as e:
            raise ValueError(f"graph line {lineno}: unknown block kind {e}") from None
        except (IndexError, ValueError) as e:
            raise ValueError(f"graph line {lineno}: {e}") from None
    return ModelGraph(nodes=nodes, edges=edges, inputs=inputs, outputs=outputs)

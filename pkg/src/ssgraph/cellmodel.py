"""Cell specifications, n-cell graphs and the infinite self-similar graph.

Vertex labels
-------------
Every vertex of an n-cell graph is labelled ``(address, name)``: ``address``
is the tuple of clique indices leading from the outermost cell to the
innermost copy containing the vertex, and ``name`` is a vertex name of the
cell spec. Labels are canonical: a boundary name is never used below the top
level (it is resolved through the substitution maps to the enclosing copy).
Coarse vertices of ``Ĉ_n`` (address ``()``) are exactly the ``F^{n-1}``
vertices, so ``φ^{n-1}`` acts on them as the identity on names.

In origin-vertex mode the first address digit selects the branch of the star
and the origin vertex itself has the label ``((), origin_vertex)``.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

Label = tuple[tuple[int, ...], str]

DEFAULT_VERTEX_CAP = 2_000_000
SYMMETRY_VERTEX_CAP = 64


@dataclass(frozen=True)
class Violation:
    axiom: str
    message: str

    def __str__(self):
        return f"[{self.axiom}] {self.message}"


class SpecError(ValueError):
    """A cell spec failed to parse or violates an axiom."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class SizeCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class CellSpec:
    name: str
    theta: int
    vertices: tuple[str, ...]
    boundary: tuple[str, ...]
    cliques: tuple[tuple[str, ...], ...]
    origin_clique: int
    substitution_maps: tuple[tuple[str, ...], ...]
    origin_vertex: str | None = None
    star_multiplicity: int | None = None
    source_text: str = field(default="", compare=False, repr=False)

    @property
    def mu(self) -> int:
        return len(self.cliques)

    @cached_property
    def adjacency(self) -> dict[str, tuple[str, ...]]:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for c in self.cliques:
            for a in c:
                adj[a].update(b for b in c if b != a)
        order = {v: i for i, v in enumerate(self.vertices)}
        return {v: tuple(sorted(adj[v], key=order.__getitem__)) for v in self.vertices}

    @cached_property
    def degree(self) -> dict[str, int]:
        return {v: len(n) for v, n in self.adjacency.items()}

    @cached_property
    def boundary_index(self) -> dict[str, int]:
        return {b: j for j, b in enumerate(self.boundary)}

    @cached_property
    def interior(self) -> tuple[str, ...]:
        return tuple(v for v in self.vertices if v not in self.boundary_index)

    @cached_property
    def cliques_of(self) -> dict[str, tuple[int, ...]]:
        out: dict[str, list[int]] = {v: [] for v in self.vertices}
        for i, c in enumerate(self.cliques):
            for v in c:
                out[v].append(i)
        return {v: tuple(ix) for v, ix in out.items()}

    @cached_property
    def map_position(self) -> tuple[dict[str, int], ...]:
        """For clique ``i``: vertex name -> boundary position it is glued to."""
        return tuple({v: j for j, v in enumerate(m)} for m in self.substitution_maps)

    @cached_property
    def origin_branch_clique(self) -> int | None:
        if self.origin_vertex is None:
            return None
        return self.cliques_of[self.origin_vertex][0]

    def boundary_distances(self) -> dict[tuple[str, str], int]:
        out = {}
        for b in self.boundary:
            dist = bfs_distances(self.adjacency, [b])
            for c in self.boundary:
                if c != b:
                    out[(b, c)] = dist[c]
        return out

    @property
    def diam_boundary(self) -> int:
        return max(self.boundary_distances().values())

    def transition(self, absorbing: Iterable[str] = ()) -> dict[str, dict[str, Fraction]]:
        return _transition(self.adjacency, absorbing)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "theta": self.theta,
            "vertices": list(self.vertices),
            "boundary": list(self.boundary),
            "cliques": [list(c) for c in self.cliques],
            "origin_clique": self.origin_clique,
            "substitution_maps": [list(m) for m in self.substitution_maps],
        }
        if self.origin_vertex is not None:
            out["origin_vertex"] = self.origin_vertex
            out["star_multiplicity"] = self.star_multiplicity
        return out


def _transition(adjacency: Mapping, absorbing: Iterable = ()) -> dict:
    absorbing = set(absorbing)
    Q = {}
    for v, nbrs in adjacency.items():
        if v in absorbing:
            Q[v] = {}
        else:
            p = Fraction(1, len(nbrs))
            Q[v] = {u: p for u in nbrs}
    return Q


def bfs_distances(adjacency: Mapping, sources: Iterable) -> dict:
    dist = {}
    queue = deque()
    for s in sources:
        dist[s] = 0
        queue.append(s)
    while queue:
        u = queue.popleft()
        for w in adjacency[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


# parsing -------------------------------------------------------------------

_REQUIRED = {
    "name": str,
    "theta": int,
    "vertices": list,
    "boundary": list,
    "cliques": list,
    "origin_clique": int,
    "substitution_maps": list,
}


def parse_cell_spec(text: str) -> CellSpec:
    """Parse and validate a JSON cell spec.

    Structural axioms are enforced here; bounded geometry and the boundary
    symmetry are separate checks (:func:`check_bounded_geometry`,
    :func:`check_symmetry`).
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError([Violation("syntax", f"invalid JSON: {exc}")]) from exc
    if not isinstance(raw, dict):
        raise SpecError([Violation("syntax", "top level must be a JSON object")])
    problems = []
    for key, typ in _REQUIRED.items():
        if key not in raw:
            problems.append(Violation("syntax", f"missing key {key!r}"))
        elif not isinstance(raw[key], typ) or (typ is int and isinstance(raw[key], bool)):
            problems.append(Violation("syntax", f"key {key!r} must be of type {typ.__name__}"))
    if problems:
        raise SpecError(problems)
    problems = _validate(raw)
    if problems:
        raise SpecError(problems)
    return CellSpec(
        name=raw["name"],
        theta=raw["theta"],
        vertices=tuple(raw["vertices"]),
        boundary=tuple(raw["boundary"]),
        cliques=tuple(tuple(c) for c in raw["cliques"]),
        origin_clique=raw["origin_clique"],
        substitution_maps=tuple(tuple(m) for m in raw["substitution_maps"]),
        origin_vertex=raw.get("origin_vertex"),
        star_multiplicity=raw.get("star_multiplicity"),
        source_text=text,
    )


def _validate(raw: dict) -> list[Violation]:
    out: list[Violation] = []
    theta = raw["theta"]
    vertices = raw["vertices"]
    vset = set(vertices)
    if theta < 2:
        out.append(Violation("S1", f"theta must be >= 2, got {theta}"))
    if len(vset) != len(vertices) or not all(isinstance(v, str) for v in vertices):
        out.append(Violation("syntax", "vertex names must be distinct strings"))
    boundary = raw["boundary"]
    if len(boundary) != theta or len(set(boundary)) != len(boundary):
        out.append(Violation("S1", f"boundary must list {theta} distinct vertices"))
    for b in boundary:
        if b not in vset:
            out.append(Violation("syntax", f"boundary vertex {b!r} is not a vertex"))
    cliques = raw["cliques"]
    if not cliques:
        out.append(Violation("S1", "the cell needs at least one clique"))
    for i, c in enumerate(cliques):
        if not isinstance(c, list) or len(c) != theta or len(set(c)) != theta:
            out.append(Violation("S1", f"clique {i} must have exactly {theta} distinct vertices"))
            continue
        for v in c:
            if v not in vset:
                out.append(Violation("syntax", f"clique {i} names unknown vertex {v!r}"))
    if out:
        return out
    sets = [set(c) for c in cliques]
    covered = set().union(*sets)
    for v in vertices:
        if v not in covered:
            out.append(Violation("S1", f"vertex {v!r} lies in no clique"))
    bset = set(boundary)
    for i, c in enumerate(sets):
        both = sorted(c & bset)
        if len(both) > 1:
            out.append(Violation("F1", f"boundary vertices {both} are adjacent (clique {i})"))
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            shared = sets[i] & sets[j]
            if len(shared) > 1:
                out.append(Violation("F2", f"cliques {i} and {j} share {len(shared)} vertices"))
    adj: dict[str, set[str]] = {v: set() for v in vertices}
    for c in cliques:
        for a in c:
            adj[a].update(b for b in c if b != a)
    if covered and len(bfs_distances(adj, [vertices[0]])) != len(vertices):
        out.append(Violation("connectivity", "the cell graph is not connected"))
    oc = raw["origin_clique"]
    if not 0 <= oc < len(cliques):
        out.append(Violation("syntax", f"origin_clique {oc} out of range"))
    maps = raw["substitution_maps"]
    if len(maps) != len(cliques):
        out.append(Violation("substitution", "need one substitution map per clique"))
    else:
        for i, (m, c) in enumerate(zip(maps, sets)):
            if not isinstance(m, list) or len(m) != theta or set(m) != c:
                out.append(Violation("substitution", f"map {i} must order the vertices of clique {i}"))
    ov = raw.get("origin_vertex")
    if ov is not None:
        mult = raw.get("star_multiplicity")
        if ov not in bset:
            out.append(Violation("origin", f"origin_vertex {ov!r} must be a boundary vertex"))
        elif not out:
            i = next(k for k, c in enumerate(sets) if ov in c)
            j = boundary.index(ov)
            if maps[i][j] != ov:
                out.append(Violation(
                    "origin", f"substitution map of clique {i} must glue boundary position {j} to {ov!r}"))
        if not isinstance(mult, int) or isinstance(mult, bool) or mult < 2:
            out.append(Violation("origin", "star_multiplicity must be an integer >= 2"))
    elif "star_multiplicity" in raw:
        out.append(Violation("origin", "star_multiplicity given without origin_vertex"))
    return out


def load_cell_spec(path: str | Path) -> CellSpec:
    return parse_cell_spec(Path(path).read_text(encoding="utf-8"))


BUNDLED = ("line2", "sierpinski", "vicsek")


def bundled_spec(name: str) -> CellSpec:
    text = resources.files("ssgraph").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    return parse_cell_spec(text)


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("ssgraph").joinpath("data", f"{name}.json")))


# axioms --------------------------------------------------------------------

@dataclass
class BoundedGeometryReport:
    ok: bool
    interior_neighbours: dict[str, int]
    required: int


def check_bounded_geometry(spec: CellSpec) -> BoundedGeometryReport:
    """Each boundary vertex must have exactly ``theta - 1`` neighbours in the open cell."""
    counts = {b: sum(1 for u in spec.adjacency[b] if u not in spec.boundary_index) for b in spec.boundary}
    need = spec.theta - 1
    return BoundedGeometryReport(all(c == need for c in counts.values()), counts, need)


class SymmetrySearchAborted(RuntimeError):
    pass


@dataclass
class SymmetryReport:
    simply_symmetric: bool
    doubly_symmetric: bool
    witnesses: dict[tuple[str, ...], dict[str, str]]


def check_symmetry(spec: CellSpec, vertex_cap: int = SYMMETRY_VERTEX_CAP) -> SymmetryReport:
    """Exhaustive automorphism search on the cell graph (boundary fixed setwise).

    For every boundary vertex (resp. ordered pair) a witness automorphism
    sending ``boundary[0]`` (resp. ``(boundary[0], boundary[1])``) there is
    searched by backtracking.
    """
    if len(spec.vertices) > vertex_cap:
        raise SymmetrySearchAborted(f"{len(spec.vertices)} vertices exceed the cap of {vertex_cap}")
    adj = {v: set(n) for v, n in spec.adjacency.items()}
    bset = set(spec.boundary)
    b0 = spec.boundary[0]
    witnesses: dict[tuple[str, ...], dict[str, str]] = {}
    simple = True
    for b in spec.boundary:
        g = find_automorphism(adj, bset, {b0: b})
        if g is None:
            simple = False
        else:
            witnesses[(b,)] = g
    double = simple
    if double:
        b1 = spec.boundary[1]
        for a in spec.boundary:
            for b in spec.boundary:
                if a == b:
                    continue
                g = find_automorphism(adj, bset, {b0: a, b1: b})
                if g is None:
                    double = False
                    break
                witnesses[(a, b)] = g
            if not double:
                break
    return SymmetryReport(simple, double, witnesses)


def find_automorphism(adj: Mapping[str, set], marked: set, fixed: Mapping[str, str]) -> dict | None:
    """Backtracking search for an automorphism extending ``fixed`` and preserving ``marked``."""
    verts = list(adj)
    for a, b in fixed.items():
        if (a in marked) != (b in marked) or len(adj[a]) != len(adj[b]):
            return None
    order = list(fixed)
    seen = set(order)
    queue = deque(order)
    while len(order) < len(verts):
        if not queue:
            start = next(v for v in verts if v not in seen)
            seen.add(start)
            order.append(start)
            queue.append(start)
        u = queue.popleft()
        for w in sorted(adj[u]):
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)

    image: dict[str, str] = {}
    used: set[str] = set()

    def consistent(u, c):
        if len(adj[u]) != len(adj[c]) or (u in marked) != (c in marked):
            return False
        for w, iw in image.items():
            if (w in adj[u]) != (iw in adj[c]):
                return False
        return True

    def extend(k):
        if k == len(order):
            return True
        u = order[k]
        if u in fixed:
            cands = [fixed[u]]
        else:
            anchor = next((w for w in adj[u] if w in image), None)
            cands = sorted(adj[image[anchor]]) if anchor is not None else sorted(verts)
        for c in cands:
            if c in used or not consistent(u, c):
                continue
            image[u] = c
            used.add(c)
            if extend(k + 1):
                return True
            del image[u]
            used.discard(c)
        return False

    return dict(image) if extend(0) else None


# finite graphs -------------------------------------------------------------

@dataclass(frozen=True)
class FiniteGraph:
    vertices: tuple
    adjacency: dict
    boundary: tuple

    @cached_property
    def degree(self) -> dict:
        return {v: len(n) for v, n in self.adjacency.items()}

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return sum(len(n) for n in self.adjacency.values()) // 2

    def transition(self, absorbing: Iterable = ()) -> dict:
        return _transition(self.adjacency, absorbing)

    def distances(self, sources: Iterable) -> dict:
        return bfs_distances(self.adjacency, sources)


def format_label(label: Label) -> str:
    a, name = label
    return (".".join(map(str, a)) if a else "ε") + ":" + name


def _canon_core(spec: CellSpec, address: tuple[int, ...], name: str) -> Label:
    bidx = spec.boundary_index
    maps = spec.substitution_maps
    while address and name in bidx:
        name = maps[address[-1]][bidx[name]]
        address = address[:-1]
    return address, name


def ncell_size(spec: CellSpec, n: int) -> int:
    v = spec.theta
    for _ in range(n):
        v = len(spec.vertices) + spec.mu * (v - spec.theta)
    return v


def build_ncell(spec: CellSpec, n: int, vertex_cap: int = DEFAULT_VERTEX_CAP) -> FiniteGraph:
    """The graph ``Ĉ_n``: ``Ĉ`` with each clique replaced by a copy of ``Ĉ_{n-1}``.

    ``Ĉ_0`` is the complete graph on the boundary, so ``Ĉ_1 = Ĉ``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if ncell_size(spec, n) > vertex_cap:
        raise SizeCapExceeded(f"Ĉ_{n} has {ncell_size(spec, n)} vertices (cap {vertex_cap})")
    edges = {(((), a), ((), b)) for a in spec.boundary for b in spec.boundary if a != b}
    for _ in range(n):
        new = set()
        for i in range(spec.mu):
            for p, q in edges:
                new.add((_canon_core(spec, (i,) + p[0], p[1]), _canon_core(spec, (i,) + q[0], q[1])))
        edges = new
    return _graph_from_edges(edges, tuple(((), b) for b in spec.boundary))


def _graph_from_edges(edges, boundary) -> FiniteGraph:
    adj: dict = {}
    for p, q in edges:
        adj.setdefault(p, set()).add(q)
        adj.setdefault(q, set()).add(p)
    verts = tuple(sorted(adj))
    return FiniteGraph(verts, {v: tuple(sorted(adj[v])) for v in verts}, boundary)


# the infinite graph --------------------------------------------------------

@dataclass(frozen=True)
class CellAddress:
    digits: tuple[int, ...]

    def __len__(self):
        return len(self.digits)


def phi_S_step(addr: CellAddress, spec: CellSpec) -> CellAddress:
    """Address of ``φ_S C`` when ``Ĉ_{k}`` sits at the origin clique inside ``Ĉ_{k+1}``."""
    if not addr.digits:
        raise ValueError("empty cell address")
    if any(not 0 <= d < spec.mu for d in addr.digits):
        raise ValueError(f"address digits must lie in 0..{spec.mu - 1}")
    return CellAddress((spec.origin_clique,) + addr.digits[:-1])


class SelfSimilarGraph:
    """The infinite graph generated by a cell spec, seen through level-``L`` labels.

    ``mode`` is ``"origin_vertex"`` (a star of ``star_multiplicity`` copies of
    ``Ĉ_L`` glued at the origin vertex) or ``"origin_cell"`` (``Ĉ_L`` nested
    at the origin clique). A label valid at level ``L`` is turned into the
    label of the same vertex at level ``L+1`` by :meth:`embed`; on vertices of
    ``F`` the self-similarity map φ is the same operation read at one level
    lower, see :meth:`phi`.
    """

    def __init__(self, spec: CellSpec, mode: str | None = None, copies: int | None = None):
        if mode is None:
            mode = "origin_vertex" if spec.origin_vertex is not None else "origin_cell"
        if mode not in {"origin_vertex", "origin_cell"}:
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "origin_vertex" and spec.origin_vertex is None:
            raise ValueError("origin_vertex mode needs a spec with origin_vertex")
        self.spec = spec
        self.mode = mode
        self.star = mode == "origin_vertex"
        self.copies = (copies or spec.star_multiplicity or 2) if self.star else 1
        self.nest = spec.origin_branch_clique if self.star else spec.origin_clique
        self.origin: Label = ((), spec.origin_vertex) if self.star else None
        self._nbr_cache: dict = {}

    # labels ---------------------------------------------------------
    def split(self, label: Label) -> tuple[tuple[int, ...], tuple[int, ...], str]:
        a, name = label
        if self.star:
            if not a:
                return (), (), name
            return a[:1], a[1:], name
        return (), a, name

    def canonical(self, label: Label) -> Label:
        prefix, core, name = self.split(label)
        core, name = _canon_core(self.spec, core, name)
        if self.star and name == self.spec.origin_vertex and not core:
            return self.origin
        return prefix + core, name

    def embed(self, label: Label, levels: int = 1) -> Label:
        for _ in range(levels):
            if self.star and label == self.origin:
                continue
            prefix, core, name = self.split(label)
            label = self.canonical((prefix + (self.nest,) + core, name))
        return label

    def phi(self, label: Label, level: int) -> Label:
        if not self.in_F(label, level):
            raise ValueError(f"{format_label(label)} is not in F at level {level}")
        return self.embed(label)

    def in_F(self, label: Label, level: int) -> bool:
        if self.star and label == self.origin:
            return level >= 2
        return len(self.split(label)[1]) <= level - 2

    def is_valid(self, label: Label, level: int) -> bool:
        prefix, core, name = self.split(label)
        if self.star and label != self.origin and (len(prefix) != 1 or not 0 <= prefix[0] < self.copies):
            return False
        if name not in self.spec.adjacency or len(core) > max(level - 1, 0) or any(not 0 <= d < self.spec.mu for d in core):
            return False
        return self.canonical(label) == label and (level > 0 or name in self.spec.boundary_index)

    def cell_of(self, label: Label, level: int) -> tuple[tuple[int, ...], str]:
        """Address (with branch prefix) of the 1-cell containing a non-F vertex, and its local name."""
        prefix, core, name = self.split(label)
        if len(core) != level - 1 or name in self.spec.boundary_index:
            raise ValueError(f"{format_label(label)} is not interior to a 1-cell at level {level}")
        return prefix + core, name

    def cell_boundary(self, cell: tuple[int, ...]) -> list[Label]:
        return [self.canonical((cell, b)) for b in self.spec.boundary]

    def origin_cell(self, level: int) -> tuple[int, ...]:
        core = (self.nest,) * (level - 1)
        return ((0,) + core) if self.star else core

    def default_origin(self, level: int) -> Label:
        if self.star:
            return self.origin
        return self.canonical((self.origin_cell(level), self.spec.boundary[0]))

    # neighbourhoods -------------------------------------------------
    def neighbours(self, label: Label, level: int) -> tuple[Label, ...]:
        """Neighbours of ``label`` inside the level-``level`` approximation."""
        key = (label, level)
        hit = self._nbr_cache.get(key)
        if hit is not None:
            return hit
        spec = self.spec
        out: list[Label] = []
        if self.star and label == self.origin:
            j = spec.boundary_index[spec.origin_vertex]
            for c in range(self.copies):
                out.extend(self._boundary_nbrs((c,), (), j, level))
        else:
            prefix, core, name = self.split(label)
            if name in spec.boundary_index:
                out.extend(self._boundary_nbrs(prefix, core, spec.boundary_index[name], level))
            elif len(core) == level - 1:
                out.extend(self.canonical((prefix + core, u)) for u in spec.adjacency[name])
            else:
                for i in spec.cliques_of[name]:
                    out.extend(self._boundary_nbrs(prefix, core + (i,), spec.map_position[i][name], level))
        res = tuple(sorted(set(out)))
        self._nbr_cache[key] = res
        return res

    def _boundary_nbrs(self, prefix, core, j, level) -> list[Label]:
        spec = self.spec
        b = spec.boundary[j]
        depth = len(core)
        if depth == level:
            return [self.canonical((prefix + core, c)) for c in spec.boundary if c != b]
        if depth == level - 1:
            return [self.canonical((prefix + core, u)) for u in spec.adjacency[b]]
        out = []
        for i in spec.cliques_of[b]:
            out.extend(self._boundary_nbrs(prefix, core + (i,), spec.map_position[i][b], level))
        return out

    def permanent_boundary(self) -> set[int]:
        """Boundary positions whose vertex never gains neighbours under nesting."""
        spec = self.spec
        keep = set()
        for j in range(spec.theta):
            seen = set()
            k = j
            while k is not None and k not in seen:
                seen.add(k)
                k = spec.boundary_index.get(spec.substitution_maps[self.nest][k])
            if k is not None:
                keep.add(j)
        return keep

    def frontier(self, level: int) -> list[Label]:
        """Vertices of the level approximation whose degree grows at higher levels."""
        spec = self.spec
        perm = self.permanent_boundary()
        out = []
        prefixes = [(c,) for c in range(self.copies)] if self.star else [()]
        for p in prefixes:
            for j, b in enumerate(spec.boundary):
                if self.star and b == spec.origin_vertex:
                    continue
                if j not in perm:
                    out.append((p, b))
        return out

    def approximation(self, level: int, vertex_cap: int = DEFAULT_VERTEX_CAP) -> FiniteGraph:
        base = build_ncell(self.spec, level, vertex_cap=max(vertex_cap // self.copies, 1))
        if not self.star:
            return base
        edges = set()
        for c in range(self.copies):
            for v, nbrs in base.adjacency.items():
                pv = self.canonical(((c,) + v[0], v[1]))
                for w in nbrs:
                    edges.add((pv, self.canonical(((c,) + w[0], w[1]))))
        bnd = tuple(((c,), b) for c in range(self.copies) for b in self.spec.boundary if b != self.spec.origin_vertex)
        return _graph_from_edges(edges, bnd)

    def parse_ref(self, text: str) -> tuple[int, Label]:
        """Parse ``level:address:local`` (address digits joined by ``.``, ``ε`` or empty for none).

        The local name ``o`` denotes the origin vertex when it is not itself a
        vertex name of the spec.
        """
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"vertex ref {text!r} must look like level:address:local")
        level = int(parts[0])
        addr_s = parts[1].strip()
        addr = () if addr_s in {"", "ε", "eps", "e"} else tuple(int(x) for x in addr_s.split("."))
        name = parts[2].strip()
        if name not in self.spec.adjacency and name == "o" and self.spec.origin_vertex is not None:
            name = self.spec.origin_vertex
        label = self.canonical((addr, name))
        if not self.is_valid(label, level):
            raise ValueError(f"vertex ref {text!r} does not name a vertex at level {level}")
        return level, label


@dataclass
class OriginApproximation:
    graph: FiniteGraph
    level: int
    mode: str
    origin: Label | None
    origin_cell: tuple[int, ...]


def build_origin_approximation(spec: CellSpec, n: int, mode: str = "origin_cell", copies: int | None = None,
                               vertex_cap: int = DEFAULT_VERTEX_CAP) -> OriginApproximation:
    """``Ĉ_n`` with its nested origin cell, or a star of copies of ``Ĉ_n`` at the origin vertex."""
    model = SelfSimilarGraph(spec, mode, copies)
    total = ncell_size(spec, n) * model.copies
    if total > vertex_cap:
        raise SizeCapExceeded(f"approximation has ~{total} vertices (cap {vertex_cap})")
    graph = model.approximation(n, vertex_cap)
    return OriginApproximation(graph, n, mode, model.origin, model.origin_cell(n))

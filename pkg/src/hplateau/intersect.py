"""Self-intersection detection, subdisk swapping and fold smoothing.

Triangle pairs that share a vertex are never tested. Candidate pairs come
from a uniform spatial hash; a floating-point separating-axis test with a
safety margin discards clearly disjoint pairs; the remaining pairs are
classified with orientation predicates that fall back to exact rational
arithmetic when the floating value is within its error bound.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .functionals import EnergyBreakdown, i_h
from .mesh import EnclosureRegion, MeshError, ReferenceMap, TriangulatedDisk, vertex_rings
from .meshgen import _segment_distance

__all__ = [
    "SelfIntersectionComplex",
    "self_intersections",
    "brute_force_intersections",
    "is_embedded",
    "default_tolerance",
    "intersect_pairs",
    "SurgeryError",
    "FoldNotSmoothableError",
    "subdisk_triangles",
    "surgery_swap",
    "swap_preserves_orientation",
    "hash_candidate_pairs",
    "seam_dihedral_angles",
    "smooth_fold",
    "ih_gradient",
]

_ORIENT_REL_ERR = 1e-14
_SAT_REL_MARGIN = 1e-9


def default_tolerance(mesh: TriangulatedDisk) -> float:
    return 1e-8 * max(mesh.bbox_diagonal(), 1e-300)


# ---------------------------------------------------------------- predicates


def _orient3d_float(a, b, c, d) -> Tuple[np.ndarray, np.ndarray]:
    """Value of ``det[b-a, c-a, d-a]`` and an upper bound on its rounding error."""
    u, v, w = b - a, c - a, d - a
    cr = np.cross(v, w)
    det = np.einsum("ij,ij->i", u, cr)
    au, av, aw = np.abs(u), np.abs(v), np.abs(w)
    perm = (
        au[:, 0] * (av[:, 1] * aw[:, 2] + av[:, 2] * aw[:, 1])
        + au[:, 1] * (av[:, 0] * aw[:, 2] + av[:, 2] * aw[:, 0])
        + au[:, 2] * (av[:, 0] * aw[:, 1] + av[:, 1] * aw[:, 0])
    )
    return det, _ORIENT_REL_ERR * perm


def _orient3d_exact(a, b, c, d) -> int:
    a, b, c, d = ([Fraction(float(x)) for x in p] for p in (a, b, c, d))
    u = [b[i] - a[i] for i in range(3)]
    v = [c[i] - a[i] for i in range(3)]
    w = [d[i] - a[i] for i in range(3)]
    det = (
        u[0] * (v[1] * w[2] - v[2] * w[1])
        - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
    )
    return (det > 0) - (det < 0)


def _orient_signs(a, b, c, d) -> Tuple[np.ndarray, np.ndarray]:
    det, err = _orient3d_float(a, b, c, d)
    sign = np.sign(det).astype(np.int64)
    unsure = np.nonzero(np.abs(det) <= err)[0]
    for k in unsure.tolist():
        sign[k] = _orient3d_exact(a[k], b[k], c[k], d[k])
    return sign, det


def _sat_separated(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """True where a separating axis with a clear margin exists between triangle pairs."""
    m = len(P)
    eP = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 1], P[:, 0] - P[:, 2]], axis=1)
    eQ = np.stack([Q[:, 1] - Q[:, 0], Q[:, 2] - Q[:, 1], Q[:, 0] - Q[:, 2]], axis=1)
    nP = np.cross(eP[:, 0], eP[:, 1])
    nQ = np.cross(eQ[:, 0], eQ[:, 1])
    axes = [nP, nQ]
    for i in range(3):
        for j in range(3):
            axes.append(np.cross(eP[:, i], eQ[:, j]))
    for i in range(3):
        axes.append(np.cross(nP, eP[:, i]))
        axes.append(np.cross(nQ, eQ[:, i]))
    scale = np.maximum(np.abs(P).max(axis=(1, 2)), np.abs(Q).max(axis=(1, 2)))
    sep = np.zeros(m, dtype=bool)
    for ax in axes:
        n = np.linalg.norm(ax, axis=1)
        ok = n > 0
        pp = np.einsum("mkj,mj->mk", P, ax)
        qq = np.einsum("mkj,mj->mk", Q, ax)
        gap = np.maximum(qq.min(axis=1) - pp.max(axis=1), pp.min(axis=1) - qq.max(axis=1))
        sep |= ok & (gap > _SAT_REL_MARGIN * n * np.maximum(scale, 1e-300))
    return sep


def _plane_cut(T: np.ndarray, s: np.ndarray, d: np.ndarray) -> List[np.ndarray]:
    """Points of triangle ``T`` on a plane, given exact signs ``s`` and values ``d`` of its vertices."""
    pts = [T[k] for k in range(3) if s[k] == 0]
    for k in range(3):
        l = (k + 1) % 3
        if s[k] * s[l] < 0:
            t = d[k] / (d[k] - d[l])
            pts.append(T[k] + t * (T[l] - T[k]))
    return pts


def _coplanar_overlap(P: np.ndarray, Q: np.ndarray) -> bool:
    n = np.cross(P[1] - P[0], P[2] - P[0])
    drop = int(np.argmax(np.abs(n)))
    keep = [i for i in range(3) if i != drop]
    p, q = P[:, keep], Q[:, keep]
    for tri in (p, q):
        for k in range(3):
            e = tri[(k + 1) % 3] - tri[k]
            ax = np.array([-e[1], e[0]])
            a, b = p @ ax, q @ ax
            if a.max() < b.min() or b.max() < a.min():
                return False
    return True


def _classify(P: np.ndarray, Q: np.ndarray, sQ: np.ndarray, dQ: np.ndarray,
              sP: np.ndarray, dP: np.ndarray) -> Optional[Tuple[str, np.ndarray, np.ndarray]]:
    if np.all(sQ > 0) or np.all(sQ < 0) or np.all(sP > 0) or np.all(sP < 0):
        return None
    if np.all(sQ == 0):
        if _coplanar_overlap(P, Q):
            c = P.mean(axis=0)
            return "coplanar", c, c
        return None
    cutP = _plane_cut(P, sP, dP)
    cutQ = _plane_cut(Q, sQ, dQ)
    if not cutP or not cutQ:
        return None
    D = np.cross(np.cross(P[1] - P[0], P[2] - P[0]), np.cross(Q[1] - Q[0], Q[2] - Q[0]))
    tp = [float(p @ D) for p in cutP]
    tq = [float(q @ D) for q in cutQ]
    lo_p, hi_p = cutP[int(np.argmin(tp))], cutP[int(np.argmax(tp))]
    lo_q, hi_q = cutQ[int(np.argmin(tq))], cutQ[int(np.argmax(tq))]
    lo_t, hi_t = max(min(tp), min(tq)), min(max(tp), max(tq))
    if hi_t < lo_t:
        return None
    start = lo_p if min(tp) >= min(tq) else lo_q
    end = hi_p if max(tp) <= max(tq) else hi_q
    kind = "point" if hi_t == lo_t else "segment"
    return kind, start.copy(), end.copy()


def intersect_pairs(points: np.ndarray, triangles: np.ndarray, pairs: np.ndarray):
    """Classify candidate triangle pairs; returns ``(pairs, kinds, segments)`` of intersecting ones."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        return pairs, [], np.zeros((0, 2, 3))
    P = points[triangles[pairs[:, 0]]]
    Q = points[triangles[pairs[:, 1]]]
    live = np.nonzero(~_sat_separated(P, Q))[0]
    out_pairs, kinds, segs = [], [], []
    if len(live):
        Pl, Ql = P[live], Q[live]
        sQ, dQ = zip(*[_orient_signs(Pl[:, 0], Pl[:, 1], Pl[:, 2], Ql[:, k]) for k in range(3)])
        sP, dP = zip(*[_orient_signs(Ql[:, 0], Ql[:, 1], Ql[:, 2], Pl[:, k]) for k in range(3)])
        sQ, dQ, sP, dP = (np.stack(x, axis=1) for x in (sQ, dQ, sP, dP))
        for r, k in enumerate(live.tolist()):
            res = _classify(Pl[r], Ql[r], sQ[r], dQ[r], sP[r], dP[r])
            if res is None:
                continue
            out_pairs.append(pairs[k])
            kinds.append(res[0])
            segs.append(np.stack([res[1], res[2]]))
    out = np.array(out_pairs, dtype=np.int64).reshape(-1, 2)
    return out, kinds, np.array(segs).reshape(-1, 2, 3)


def _nonadjacent(triangles: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    A, B = triangles[pairs[:, 0]], triangles[pairs[:, 1]]
    share = np.zeros(len(pairs), dtype=bool)
    for i in range(3):
        for j in range(3):
            share |= A[:, i] == B[:, j]
    return pairs[~share]


def _aabb_overlap(points, triangles, pairs, pad) -> np.ndarray:
    p = points[triangles]
    lo, hi = p.min(axis=1) - pad, p.max(axis=1) + pad
    a, b = pairs[:, 0], pairs[:, 1]
    ok = np.all((lo[a] <= hi[b]) & (lo[b] <= hi[a]), axis=1)
    return pairs[ok]


def hash_candidate_pairs(points: np.ndarray, triangles: np.ndarray, pad: float = 0.0) -> np.ndarray:
    """Triangle pairs sharing a cell of a uniform grid sized to the largest triangle box."""
    p = points[triangles]
    lo, hi = p.min(axis=1) - pad, p.max(axis=1) + pad
    cell = float(np.max(hi - lo))
    if not cell > 0:
        cell = 1.0
    origin = lo.min(axis=0)
    c0 = np.floor((lo - origin) / cell).astype(np.int64)
    c1 = np.floor((hi - origin) / cell).astype(np.int64)
    dims = c1.max(axis=0) + 2
    keys, owners = [], []
    m = len(triangles)
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                c = c0 + np.array([dx, dy, dz])
                inside = np.all(c <= c1, axis=1)
                k = (c[:, 0] * dims[1] + c[:, 1]) * dims[2] + c[:, 2]
                keys.append(k[inside])
                owners.append(np.arange(m)[inside])
    keys = np.concatenate(keys)
    owners = np.concatenate(owners)
    order = np.lexsort((owners, keys))
    keys, owners = keys[order], owners[order]
    bounds = np.flatnonzero(np.diff(keys)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [len(keys)]])
    out = []
    for s, e in zip(starts.tolist(), ends.tolist()):
        if e - s < 2:
            continue
        grp = owners[s:e]
        i, j = np.triu_indices(len(grp), k=1)
        out.append(np.column_stack([grp[i], grp[j]]))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = np.concatenate(out)
    pairs = np.sort(pairs, axis=1)
    return np.unique(pairs, axis=0)


# ---------------------------------------------------------------- complex


@dataclass(frozen=True)
class SelfIntersectionComplex:
    """Intersection segments of triangle pairs chained into curves."""

    pairs: np.ndarray
    kinds: Tuple[str, ...]
    segments: np.ndarray
    curves: Tuple[np.ndarray, ...]
    curve_segments: Tuple[np.ndarray, ...]
    closed_flags: Tuple[bool, ...]
    junctions: np.ndarray
    isolated_points: int
    interior_endpoints: int
    coplanar_pairs: int
    odd_junctions: int
    tol: float

    @property
    def empty(self) -> bool:
        return len(self.pairs) == 0

    @property
    def structure_flags(self) -> Dict[str, bool]:
        return {
            "isolated_points": self.isolated_points > 0,
            "interior_endpoints": self.interior_endpoints > 0,
            "coplanar_contact": self.coplanar_pairs > 0,
        }

    def segment_set(self) -> List[Tuple[int, int, Tuple[float, ...]]]:
        return sorted(
            (int(a), int(b), tuple(float(x) for x in s.ravel()))
            for (a, b), s in zip(self.pairs.tolist(), self.segments)
        )

    def to_dict(self) -> dict:
        return {
            "curves": [c.tolist() for c in self.curves],
            "closed": list(self.closed_flags),
            "junctions": {str(i): p for i, p in enumerate(self.junctions.tolist())},
            "n_segments": int(len(self.pairs)),
            "structure": self.structure_flags,
            "odd_junctions": self.odd_junctions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _boundary_distance(mesh: TriangulatedDisk, pts: np.ndarray) -> np.ndarray:
    be = mesh.boundary_edges()
    if len(be) == 0 or len(pts) == 0:
        return np.full(len(pts), np.inf)
    a, b = mesh.vertices[be[:, 0]], mesh.vertices[be[:, 1]]
    out = np.empty(len(pts))
    for k, p in enumerate(pts):
        pp = np.broadcast_to(p, a.shape)
        out[k] = _segment_distance(a, b, pp, pp).min()
    return out


def _chain(mesh: TriangulatedDisk, pairs, kinds, segs, tol: float) -> SelfIntersectionComplex:
    chain_tol = 4.0 * tol
    n = len(segs)
    ends = segs.reshape(-1, 3)
    if n:
        close = cKDTree(ends).query_pairs(chain_tol, output_type="ndarray")
        g = coo_matrix((np.ones(len(close)), (close[:, 0], close[:, 1])), shape=(2 * n, 2 * n))
        _, node = connected_components(g, directed=False)
    else:
        node = np.zeros(0, dtype=np.int64)
    seg_nodes = node.reshape(-1, 2)
    n_nodes = int(node.max()) + 1 if n else 0
    node_pt = np.zeros((n_nodes, 3))
    if n:
        cnt = np.bincount(node, minlength=n_nodes)
        for d in range(3):
            node_pt[:, d] = np.bincount(node, weights=ends[:, d], minlength=n_nodes) / cnt
    real = [k for k in range(n) if seg_nodes[k, 0] != seg_nodes[k, 1]]
    adj: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
    for k in real:
        a, b = seg_nodes[k]
        adj[int(a)].append((int(b), k))
        adj[int(b)].append((int(a), k))
    degree = {v: len(e) for v, e in adj.items()}
    touched = set(seg_nodes.ravel().tolist())
    isolated = sorted(v for v in touched if degree.get(v, 0) == 0)
    curves: List[np.ndarray] = []
    curve_segs: List[np.ndarray] = []
    closed: List[bool] = []
    used = set()

    def walk(start: int, first: Tuple[int, int]) -> Tuple[List[int], List[int]]:
        nodes, edges = [start], []
        nxt, k = first
        while True:
            used.add(k)
            edges.append(k)
            nodes.append(nxt)
            if degree[nxt] != 2 or nxt == start:
                return nodes, edges
            cand = [(b, e) for b, e in adj[nxt] if e not in used]
            if not cand:
                return nodes, edges
            nxt, k = cand[0]

    for v in sorted(adj):
        if degree[v] == 2:
            continue
        for b, k in adj[v]:
            if k not in used:
                nodes, edges = walk(v, (b, k))
                curves.append(node_pt[nodes])
                curve_segs.append(np.array(edges, dtype=np.int64))
                closed.append(nodes[0] == nodes[-1])
    for v in sorted(adj):
        for b, k in adj[v]:
            if k not in used:
                nodes, edges = walk(v, (b, k))
                curves.append(node_pt[nodes])
                curve_segs.append(np.array(edges, dtype=np.int64))
                closed.append(True)
    # point contacts where a curve crosses a mesh edge belong to the curve through that node
    owner: Dict[int, int] = {}
    for ci, segs_c in enumerate(curve_segs):
        for k in segs_c.tolist():
            owner.setdefault(int(seg_nodes[k, 0]), ci)
            owner.setdefault(int(seg_nodes[k, 1]), ci)
    extra: Dict[int, List[int]] = defaultdict(list)
    for k in range(n):
        if seg_nodes[k, 0] == seg_nodes[k, 1] and int(seg_nodes[k, 0]) in owner:
            extra[owner[int(seg_nodes[k, 0])]].append(k)
    for ci, ks in extra.items():
        curve_segs[ci] = np.concatenate([curve_segs[ci], np.array(ks, dtype=np.int64)])
    for v in isolated:
        curves.append(node_pt[[v]])
        curve_segs.append(np.array([k for k in range(n) if seg_nodes[k, 0] == v], dtype=np.int64))
        closed.append(False)
    junction_ids = sorted(v for v, d in degree.items() if d >= 3)
    end_ids = [v for v, d in degree.items() if d == 1]
    interior_endpoints = 0
    if end_ids:
        dist = _boundary_distance(mesh, node_pt[end_ids])
        interior_endpoints = int(np.sum(dist > chain_tol))
    return SelfIntersectionComplex(
        pairs=np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
        kinds=tuple(kinds),
        segments=np.asarray(segs).reshape(-1, 2, 3),
        curves=tuple(curves),
        curve_segments=tuple(curve_segs),
        closed_flags=tuple(bool(c) for c in closed),
        junctions=node_pt[junction_ids].reshape(-1, 3),
        isolated_points=len(isolated),
        interior_endpoints=interior_endpoints,
        coplanar_pairs=sum(1 for k in kinds if k == "coplanar"),
        odd_junctions=sum(1 for v in junction_ids if degree[v] % 2),
        tol=tol,
    )


def _sorted_hits(pairs, kinds, segs):
    if len(pairs) == 0:
        return pairs, kinds, segs
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order], [kinds[k] for k in order.tolist()], segs[order]


def self_intersections(mesh: TriangulatedDisk, tol: Optional[float] = None) -> SelfIntersectionComplex:
    """Intersections between triangles of ``mesh`` that share no vertex."""
    tol = default_tolerance(mesh) if tol is None else float(tol)
    pts, tris = mesh.vertices, mesh.triangles
    cand = hash_candidate_pairs(pts, tris, pad=tol)
    cand = _nonadjacent(tris, cand)
    cand = _aabb_overlap(pts, tris, cand, tol)
    hits = _sorted_hits(*intersect_pairs(pts, tris, cand))
    return _chain(mesh, *hits, tol)


def brute_force_intersections(mesh: TriangulatedDisk, tol: Optional[float] = None) -> SelfIntersectionComplex:
    """All-pairs reference implementation sharing the pair classifier."""
    tol = default_tolerance(mesh) if tol is None else float(tol)
    m = mesh.n_triangles
    i, j = np.triu_indices(m, k=1)
    cand = _nonadjacent(mesh.triangles, np.column_stack([i, j]))
    hits = _sorted_hits(*intersect_pairs(mesh.vertices, mesh.triangles, cand))
    return _chain(mesh, *hits, tol)


def is_embedded(mesh: TriangulatedDisk, tol: Optional[float] = None) -> bool:
    return self_intersections(mesh, tol).empty


# ---------------------------------------------------------------- surgery


class SurgeryError(ValueError):
    pass


class FoldNotSmoothableError(RuntimeError):
    pass


def _tri_adjacency(triangles: np.ndarray, cut_edges: set):
    m = len(triangles)
    de = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    owner = np.tile(np.arange(m), 3)
    key = np.sort(de, axis=1)
    order = np.lexsort((key[:, 1], key[:, 0]))
    key, owner = key[order], owner[order]
    same = np.nonzero(np.all(key[1:] == key[:-1], axis=1))[0]
    rows, cols = [], []
    for k in same.tolist():
        if (int(key[k, 0]), int(key[k, 1])) in cut_edges:
            continue
        rows.append(owner[k])
        cols.append(owner[k + 1])
    return coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))


def _loop_edges(loop: Sequence[int]) -> set:
    loop = [int(v) for v in loop]
    return {tuple(sorted((a, b))) for a, b in zip(loop, loop[1:] + loop[:1])}


def subdisk_triangles(reference: TriangulatedDisk, loop: Sequence[int]) -> np.ndarray:
    """Mask of triangles enclosed by a closed edge loop of the reference mesh."""
    edges = _loop_edges(loop)
    all_edges = {tuple(e) for e in reference.edges().tolist()}
    if not edges <= all_edges:
        raise SurgeryError("loop does not run along mesh edges")
    n_comp, labels = connected_components(_tri_adjacency(reference.triangles, edges), directed=False)
    if n_comp != 2:
        raise SurgeryError(f"loop splits the disk into {n_comp} parts, expected 2")
    bmask = reference.boundary_mask()
    loop_set = set(int(v) for v in loop)
    outer = bmask.copy()
    outer[list(loop_set)] = False
    touching = np.any(outer[reference.triangles], axis=1)
    if not np.any(touching):
        raise SurgeryError("cannot tell the inside of the loop from the outside")
    outside = labels[np.nonzero(touching)[0][0]]
    inside = labels != outside
    if np.any(touching & inside):
        raise SurgeryError("loop does not bound a subdisk")
    return inside


def _match_loops(image: np.ndarray, gp: Sequence[int], gm: Sequence[int], tol: float) -> Dict[int, int]:
    gp, gm = [int(v) for v in gp], [int(v) for v in gm]
    if len(gp) != len(gm):
        raise SurgeryError("loops have different lengths; images cannot match vertex-wise")
    dist, idx = cKDTree(image[gm]).query(image[gp])
    if np.any(dist > tol) or len(set(idx.tolist())) != len(gm):
        raise SurgeryError("loop images do not coincide")
    n = len(gp)
    shift = (int(idx[0]) - 0) % n
    fwd = all(idx[k] == (shift + k) % n for k in range(n))
    bwd = all(idx[k] == (shift - k) % n for k in range(n))
    if not (fwd or bwd):
        raise SurgeryError("loop images are not traversed consistently")
    return {gp[k]: gm[int(idx[k])] for k in range(n)}


def _patch_isomorphism(tris: np.ndarray, in_p: np.ndarray, in_m: np.ndarray, seed: Dict[int, int]) -> Dict[int, int]:
    """Extend a loop correspondence to a vertex map between two patch triangulations."""
    sigma = dict(seed)
    tp = tris[in_p]
    tm = tris[in_m]
    by_edge: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for r, t in enumerate(tm.tolist()):
        for k in range(3):
            by_edge[tuple(sorted((t[k], t[(k + 1) % 3])))].append(r)
    p_by_edge: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for r, t in enumerate(tp.tolist()):
        for k in range(3):
            p_by_edge[tuple(sorted((t[k], t[(k + 1) % 3])))].append(r)
    done_p = np.zeros(len(tp), dtype=bool)
    used_m = np.zeros(len(tm), dtype=bool)
    queue = deque(range(len(tp)))
    stall = 0
    while queue and stall <= len(queue):
        r = queue.popleft()
        if done_p[r]:
            continue
        t = tp[r].tolist()
        known = [v for v in t if v in sigma]
        if len(known) < 2:
            queue.append(r)
            stall += 1
            continue
        stall = 0
        a, b = known[0], known[1]
        cands = [q for q in by_edge.get(tuple(sorted((sigma[a], sigma[b]))), []) if not used_m[q]]
        if len(cands) != 1:
            raise SurgeryError("patches are not compatibly triangulated")
        q = cands[0]
        tq = tm[q].tolist()
        for v in t:
            if v not in sigma:
                rest = [w for w in tq if w not in (sigma[a], sigma[b])]
                sigma[v] = rest[0]
        if sorted(sigma[v] for v in t) != sorted(tq):
            raise SurgeryError("patches are not compatibly triangulated")
        done_p[r] = True
        used_m[q] = True
        for k in range(3):
            for rr in p_by_edge[tuple(sorted((t[k], t[(k + 1) % 3])))]:
                if not done_p[rr]:
                    queue.append(rr)
    if not done_p.all() or not used_m.all():
        raise SurgeryError("patches are not compatibly triangulated")
    return sigma


def surgery_swap(
    u: ReferenceMap,
    gamma_plus: Sequence[int],
    gamma_minus: Sequence[int],
    tol: Optional[float] = None,
) -> ReferenceMap:
    """Exchange the images of the two subdisks bounded by ``gamma_plus`` and ``gamma_minus``.

    The loops are closed vertex loops of the reference mesh whose images
    coincide. Both patches must carry combinatorially equivalent
    triangulations compatible with the loop matching.
    """
    ref = u.reference
    disk = u.image_disk()
    tol = default_tolerance(disk) if tol is None else tol
    in_p = subdisk_triangles(ref, gamma_plus)
    in_m = subdisk_triangles(ref, gamma_minus)
    vp = np.unique(ref.triangles[in_p])
    vm = np.unique(ref.triangles[in_m])
    if np.any(in_p & in_m) or len(np.intersect1d(vp, vm)):
        raise SurgeryError("subdisks are not disjoint")
    seed = _match_loops(u.image, gamma_plus, gamma_minus, tol)
    sigma = _patch_isomorphism(ref.triangles, in_p, in_m, seed)
    loop_p = set(int(v) for v in gamma_plus)
    img = np.array(u.image, copy=True)
    for a, b in sigma.items():
        if a in loop_p:
            continue
        img[a] = u.image[b]
        img[b] = u.image[a]
    return u.with_image(img)


def swap_preserves_orientation(u: ReferenceMap, gamma_plus: Sequence[int], gamma_minus: Sequence[int]) -> bool:
    """Whether the loop matching runs both loops in the same rotational sense."""
    seed = _match_loops(u.image, gamma_plus, gamma_minus, default_tolerance(u.image_disk()))
    gp = [int(v) for v in gamma_plus]
    gm = [int(v) for v in gamma_minus]
    i0, i1 = gm.index(seed[gp[0]]), gm.index(seed[gp[1]])
    step_same = (i1 - i0) % len(gm) == 1

    def ccw(loop):
        p = u.reference.vertices[loop][:, :2]
        return 0.5 * np.sum(p[:, 0] * np.roll(p[:, 1], -1) - np.roll(p[:, 0], -1) * p[:, 1]) > 0

    return step_same == (ccw(gp) == ccw(gm))


# ---------------------------------------------------------------- fold smoothing


def ih_gradient(mesh: TriangulatedDisk, H: float) -> np.ndarray:
    """Gradient of ``Area + 2 H Vol`` with respect to the vertex positions."""
    x = mesh.vertices
    t = mesh.triangles
    p = x[t]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    nn = np.linalg.norm(n, axis=1, keepdims=True)
    nhat = n / np.where(nn > 0, nn, 1.0)
    g = np.zeros_like(x)
    for k in range(3):
        a, b = p[:, (k + 1) % 3], p[:, (k + 2) % 3]
        ga = 0.5 * np.cross(nhat, b - a)
        gv = np.cross(a, b) / 6.0
        np.add.at(g, t[:, k], ga + 2.0 * H * gv)
    return g


def seam_dihedral_angles(mesh: TriangulatedDisk, loop: Sequence[int]) -> np.ndarray:
    """Interior dihedral angle (pi = flat) across each edge of a vertex path.

    The path is closed when its last and first vertices share an edge.
    """
    loop = [int(v) for v in loop]
    t = mesh.triangles
    n = mesh.triangle_normals()
    n = n / np.linalg.norm(n, axis=1, keepdims=True)
    by_edge: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for r, tri in enumerate(t.tolist()):
        for k in range(3):
            by_edge[tuple(sorted((tri[k], tri[(k + 1) % 3])))].append(r)
    pairs = list(zip(loop[:-1], loop[1:]))
    if len(loop) > 2 and tuple(sorted((loop[-1], loop[0]))) in by_edge:
        pairs.append((loop[-1], loop[0]))
    out = []
    for a, b in pairs:
        fs = by_edge.get(tuple(sorted((a, b))), [])
        if len(fs) != 2:
            raise SurgeryError(f"loop edge ({a},{b}) is not an interior edge")
        c = float(np.clip(n[fs[0]] @ n[fs[1]], -1.0, 1.0))
        out.append(np.pi - math.acos(c))
    return np.array(out)


def smooth_fold(
    u: ReferenceMap,
    fold: Sequence[int],
    region: EnclosureRegion,
    H: float,
    rings: int = 2,
    max_iterations: int = 500,
    angle_gap: float = 0.1,
    delta_min: float = 1e-6,
) -> Tuple[ReferenceMap, EnergyBreakdown]:
    """Relax a collar of a folding seam until it is nearly flat, decreasing ``I_H``.

    Vertices within ``rings`` edge rings of ``fold`` move along the negative
    ``I_H`` gradient scaled by their inverse mixed area (a damped Laplacian
    step), with Armijo backtracking and a floor on triangle areas. Raises :class:`FoldNotSmoothableError` if the total
    decrease is below ``delta_min``.
    """
    from .functionals import mixed_areas

    disk = region.disk
    if not np.array_equal(u.image, disk.vertices):
        raise MeshError("map image does not match the region's disk")
    seeds = np.zeros(disk.n_vertices, dtype=bool)
    seeds[[int(v) for v in fold]] = True
    free = vertex_rings(disk, seeds, rings) & disk.interior_mask()
    cap_v = region.cap.vertices[region.cap.triangles]
    cap_det = math.fsum(np.einsum("ij,ij->i", cap_v[:, 0], np.cross(cap_v[:, 1], cap_v[:, 2])).tolist())

    def energy(x: np.ndarray) -> float:
        p = x[disk.triangles]
        cr = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        area = 0.5 * np.linalg.norm(cr, axis=1).sum()
        det = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum()
        return float(area + 2.0 * H * (det + cap_det) / 6.0)

    x = np.array(disk.vertices, copy=True)
    start = energy(x)
    current = start
    area_floor = 1e-3 * float(np.median(np.linalg.norm(disk.triangle_normals(), axis=1)))
    for _ in range(max_iterations):
        mesh = disk.with_vertices(x)
        if seam_dihedral_angles(mesh, fold).min() >= np.pi - angle_gap and start - current >= delta_min:
            break
        g = ih_gradient(mesh, H)
        g[~free] = 0.0
        amix = mixed_areas(x, disk.triangles)
        d = -g / np.maximum(amix, 1e-300)[:, None]
        slope = float(np.sum(g * d))
        if not slope < 0:
            break
        step, accepted = 1.0, False
        for _ in range(40):
            trial = x + step * d
            p = trial[disk.triangles]
            ok = np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1).min() > area_floor
            if ok:
                e = energy(trial)
                if e <= current + 1e-4 * step * slope:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        x, current = trial, e
    if not start - current >= delta_min:
        raise FoldNotSmoothableError(
            f"fold not smoothable: I_H decreased by {start - current:.3e} < {delta_min:.3e}"
        )
    return u.with_image(x), i_h(region.with_disk(disk.with_vertices(x)), H)

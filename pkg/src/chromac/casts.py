"""The casting graph: which physical types convert into which.

Each edge names the lowering recipe that implements it. Casts between
non-adjacent types expand along the unique shortest path. Matrix casts are
explicit escapes from the type system and never take part in path search.
"""

from __future__ import annotations

from collections import deque

from .errors import IllegalCastError
from .types import PhysicalType as P

# (source, target, recipe); edit here to change the legal casts
CAST_EDGES: tuple[tuple[P, P, str], ...] = (
    (P.Light, P.LMS, "light_to_lms"),
    (P.LMS, P.XYZ, "lms_to_xyz"),
    (P.XYZ, P.LMS, "xyz_to_lms"),
    (P.XYZ, P.sRGB, "xyz_to_srgb"),
    (P.sRGB, P.XYZ, "srgb_to_xyz"),
    (P.XYZ, P.opRGB, "xyz_to_oprgb"),
    (P.opRGB, P.XYZ, "oprgb_to_xyz"),
    (P.XYZ, P.LAB, "xyz_to_lab"),
    (P.LAB, P.XYZ, "lab_to_xyz"),
    (P.sRGB, P.HSV, "srgb_to_hsv"),
    (P.HSV, P.sRGB, "hsv_to_srgb"),
    (P.XYZ, P.Chromaticity, "xyz_to_chromaticity"),
    (P.Pigment, P.Reflectance, "pigment_to_reflectance"),
    (P.Pigment, P.Scattering, "pigment_to_scattering"),
    (P.Pigment, P.Absorption, "pigment_to_absorption"),
)

Edge = tuple[P, P, str]


class CastGraph:
    def __init__(self, edges=CAST_EDGES):
        self.edges = tuple(edges)
        self.adj: dict[P, list[Edge]] = {t: [] for t in P}
        for src, dst, recipe in self.edges:
            if P.Matrix in (src, dst):
                continue
            self.adj[src].append((src, dst, recipe))

    def _bfs(self, src: P):
        dist = {src: 0}
        count = {src: 1}
        parent: dict[P, Edge] = {}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for edge in self.adj[u]:
                v = edge[1]
                if v not in dist:
                    dist[v] = dist[u] + 1
                    count[v] = count[u]
                    parent[v] = edge
                    queue.append(v)
                elif dist[v] == dist[u] + 1:
                    count[v] += count[u]
        return dist, count, parent

    def path_exists(self, src: P, dst: P) -> bool:
        if P.Matrix in (src, dst):
            return False
        return dst in self._bfs(src)[0]

    def cast_path(self, src: P, dst: P) -> list[Edge]:
        if P.Matrix not in (src, dst):
            _, _, parent = self._bfs(src)
            if dst == src:
                return []
            if dst in parent:
                path = []
                node = dst
                while node != src:
                    edge = parent[node]
                    path.append(edge)
                    node = edge[0]
                return path[::-1]
        raise IllegalCastError(f"no cast from {src} to {dst}")

    def ambiguous_pairs(self) -> list[tuple[P, P]]:
        """Ordered type pairs joined by more than one shortest path."""
        bad = []
        for src in P:
            _, count, _ = self._bfs(src)
            bad.extend((src, dst) for dst, n in count.items() if n > 1)
        return bad


CASTS = CastGraph()
assert not CASTS.ambiguous_pairs(), "casting graph has ambiguous shortest paths"


def path_exists(src: P, dst: P) -> bool:
    return CASTS.path_exists(src, dst)


def cast_path(src: P, dst: P) -> list[Edge]:
    return CASTS.cast_path(src, dst)

# -*- coding: utf-8 -*-
#
# Copyright (C) 2022 Cloudberries
#
# This file is part of sfmtools
#
# sfmtools is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# sfmtools is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with sfmtools.  If not, see <https://www.gnu.org/licenses/>.
#

"""Pose-graph of views with relative-pose edges and walk search.

The graph is built incrementally. Each edge carries a unit-translation
relative pose and a quality in [0, 1]. Walks (simple paths traversing
edges in either direction) compose a relative pose between views that are
not directly connected; :func:`pose_from_posegraph` searches walks in
heuristic order and accepts the first one confirmed by enough tentative
correspondences.

"""

from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass
from functools import reduce
import heapq
from itertools import islice
import logging

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation
from PySide6.QtCore import QReadWriteLock

from sfmtools import (SfmException, ZeroTranslationError, DuplicateEdgeError,
                      NotVisibleError, InsufficientInliersError,
                      ConfigInvalidError)
from sfmtools.geom import (RelativePose, invert, compose,
                           fundamental_from_pose, sampson_distances,
                           signed_sampson_residuals, triangulate_normalized,
                           fit_translation, TRANSLATION_EPS)

__all__ = ['UnionFind', 'Edge', 'WalkStep', 'Walk', 'PoseGraph',
           'TraversalConfig', 'WalkSearch', 'WalkOutcome', 'walk_pose',
           'walk_heuristic', 'next_walk', 'pose_from_posegraph',
           'refit_translation', 'refine_pose_irls', 'truncated_cost',
           'write_pose_graph', 'read_pose_graph', 'PoseGraphGuard']

logger = logging.getLogger(__name__)

# Traversal modes
ASTAR = 'astar'
BFS = 'bfs'


class UnionFind(object):
    """Disjoint-set forest with union by rank and path compression.

    Elements are any hashable values and are added with :meth:`add` (or
    through the constructor).

    """

    def __init__(self, elements=()):
        self._parent = dict()
        self._rank = dict()
        self._count = 0
        for x in elements:
            self.add(x)

    def add(self, x):
        """Adds *x* as a singleton set (no-op if already present)."""
        if x not in self._parent:
            self._parent[x] = x
            self._rank[x] = 0
            self._count += 1

    def __contains__(self, x):
        return x in self._parent

    def __len__(self):
        return len(self._parent)

    def find(self, x):
        """Representative of the set containing *x*."""
        parent = self._parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, x, y):
        """Merges the sets of *x* and *y*.

        :return: the representative of the merged set

        """
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return rx
        if self._rank[rx] < self._rank[ry]:
            rx, ry = ry, rx
        self._parent[ry] = rx
        if self._rank[rx] == self._rank[ry]:
            self._rank[rx] += 1
        self._count -= 1
        return rx

    def connected(self, x, y):
        return self.find(x) == self.find(y)

    @property
    def components(self):
        """Number of disjoint sets."""
        return self._count


@dataclass(frozen=True, eq=False)
class Edge(object):
    """Directed pose-graph edge, traversable in both directions."""

    source: int
    destination: int
    pose: RelativePose
    quality: float
    index: int


@dataclass(frozen=True, eq=False)
class WalkStep(object):
    """An edge traversed forward or, if *inverted*, backward."""

    edge: Edge
    inverted: bool

    @property
    def start(self):
        return self.edge.destination if self.inverted else self.edge.source

    @property
    def end(self):
        return self.edge.source if self.inverted else self.edge.destination

    @property
    def pose(self):
        return invert(self.edge.pose) if self.inverted else self.edge.pose


@dataclass(frozen=True, eq=False)
class Walk(object):
    """Simple path of edge traversals from *source* to *destination*."""

    source: int
    destination: int
    steps: tuple

    @property
    def vertices(self):
        return (self.source,) + tuple(s.end for s in self.steps)

    @property
    def min_quality(self):
        return min(s.edge.quality for s in self.steps)

    def __len__(self):
        return len(self.steps)

    def __repr__(self):
        return f'Walk({"->".join(str(v) for v in self.vertices)})'


class PoseGraph(object):
    """Incremental pose-graph over views ``0 .. n_views-1``.

    :param n_views: number of views (vertices)
    :type  n_views: int

    At most one edge connects any unordered view pair. Connectivity is
    tracked with a :class:`UnionFind` updated on every insertion.

    """

    def __init__(self, n_views):
        if n_views < 0:
            raise SfmException(f'Illegal number of views: {n_views}')
        self._n_views = n_views
        self._edges = []
        self._adjacency = [dict() for _ in range(n_views)]
        self._sorted = [()]*n_views
        self._components = UnionFind(range(n_views))

    @property
    def n_views(self):
        return self._n_views

    @property
    def edges(self):
        return tuple(self._edges)

    def __len__(self):
        return len(self._edges)

    @property
    def components(self):
        """Number of connected components."""
        return self._components.components

    def _check_view(self, v):
        if not 0 <= v < self._n_views:
            raise SfmException(f'No such view: {v}')

    def edge(self, s, d):
        """Edge between *s* and *d* in either direction, or None."""
        self._check_view(s)
        self._check_view(d)
        return self._adjacency[s].get(d)

    def has_edge(self, s, d):
        return self.edge(s, d) is not None

    def add_edge(self, source, destination, pose, quality):
        """Inserts an edge and updates connectivity.

        :param      source: source view
        :param destination: destination view
        :param        pose: relative pose from source to destination
        :type         pose: :class:`sfmtools.geom.RelativePose`
        :param     quality: inlier ratio in [0, 1]
        :return:            the new edge
        :rtype:             :class:`Edge`
        :raises:            :exc:`sfmtools.DuplicateEdgeError`,
                            :exc:`sfmtools.ZeroTranslationError`

        """
        self._check_view(source)
        self._check_view(destination)
        if source == destination:
            raise SfmException(f'Self-loop on view {source}')
        if not 0.0 <= quality <= 1.0:
            raise SfmException(f'Edge quality {quality} outside [0, 1]')
        if destination in self._adjacency[source]:
            raise DuplicateEdgeError(f'Views {source} and {destination} are '
                                     f'already connected')
        if pose.degenerate:
            raise ZeroTranslationError('Edge pose has zero translation')
        edge = Edge(source, destination, pose, float(quality),
                    len(self._edges))
        self._edges.append(edge)
        self._adjacency[source][destination] = edge
        self._adjacency[destination][source] = edge
        self._sorted[source] = None
        self._sorted[destination] = None
        self._components.union(source, destination)
        return edge

    def visible(self, s, d):
        """True if a walk connects *s* and *d*."""
        self._check_view(s)
        self._check_view(d)
        return self._components.connected(s, d)

    def neighbors(self, v):
        """Neighbouring views of *v* in ascending order."""
        nb = self._sorted[v]
        if nb is None:
            nb = self._sorted[v] = tuple(sorted(self._adjacency[v]))
        return nb

    def step(self, u, v):
        """The :class:`WalkStep` traversing the edge from *u* to *v*."""
        edge = self._adjacency[u][v]
        return WalkStep(edge, edge.source != u)

    def hops_from(self, v, limit):
        """Breadth-first hop counts from *v*, up to *limit* hops.

        :return: dict view -> hop count

        """
        hops = {v: 0}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            if hops[u] >= limit:
                continue
            for w in self.neighbors(u):
                if w not in hops:
                    hops[w] = hops[u] + 1
                    queue.append(w)
        return hops


def walk_pose(walk):
    """Relative pose from the walk's source to its destination.

    Step poses are composed in traversal order, the first step applied
    first; backward steps use the inverted edge pose. The result may be
    degenerate (see :attr:`RelativePose.degenerate`).

    """
    return reduce(lambda acc, s: compose(s.pose, acc), walk.steps[1:],
                  walk.steps[0].pose)


def walk_heuristic(walk, destination, similarity, lam):
    """Heuristic value of a walk toward *destination*.

    ``lam * min(quality) + (1 - lam) * max(similarity(v, destination))``
    where the maximum runs over the end vertices of the walk's steps other
    than *destination* itself (0 if there are none).

    :param        walk: walk (possibly not yet at *destination*)
    :param destination: destination view
    :param  similarity: (n, n) similarity matrix
    :param         lam: weight in [0, 1]
    :rtype:             float

    """
    if not walk.steps:
        raise SfmException('Empty walk')
    q = min(s.edge.quality for s in walk.steps)
    sims = [float(similarity[s.end, destination]) for s in walk.steps
            if s.end != destination]
    return lam*q + (1.0 - lam)*(max(sims) if sims else 0.0)


@dataclass
class TraversalConfig(object):
    """Walk search and validation parameters.

    :param max_depth:         maximum number of steps in a walk
    :param lam:               heuristic weight of edge quality
    :param min_inliers:       inliers required to accept a walk pose
    :param inlier_threshold:  Sampson threshold in pixels
    :param mode:              'astar' (heuristic order) or 'bfs'
    :param max_walks:         walks tried per pair before giving up (0 means
                              no limit)
    :param refit_translation: re-fit walk translations on correspondences
    :param refit_samples:     two-point translation hypotheses per re-fit
    :param seed:              seed of the re-fit sampler

    """

    max_depth: int = 5
    lam: float = 0.8
    min_inliers: int = 20
    inlier_threshold: float = 2.0
    mode: str = ASTAR
    max_walks: int = 200
    refit_translation: bool = True
    refit_samples: int = 64
    seed: int = 0

    def validate(self):
        if self.max_depth < 1:
            raise ConfigInvalidError(f'max_depth must be >= 1: '
                                     f'{self.max_depth}')
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigInvalidError(f'Heuristic lambda outside [0, 1]: '
                                     f'{self.lam}')
        if self.min_inliers < 1:
            raise ConfigInvalidError('min_inliers must be positive')
        if self.inlier_threshold <= 0:
            raise ConfigInvalidError('Inlier threshold must be positive')
        if self.mode not in (ASTAR, BFS):
            raise ConfigInvalidError(f'Unknown traversal mode: {self.mode}')
        if self.max_walks < 0:
            raise ConfigInvalidError('max_walks must be >= 0')


class WalkSearch(object):
    """Resumable best-first enumeration of walks between two views.

    Walks are produced by :meth:`next` in non-increasing order of
    :func:`walk_heuristic`, ties broken by fewer steps and then by the
    vertex sequence. Partial walks are kept in the frontier under an
    optimistic bound on the heuristic value of any completion: the edge
    quality term can only drop, and the similarity term is bounded by the
    most similar vertex still reachable within the remaining depth. Views
    that cannot reach the destination within the remaining depth are not
    expanded. In 'bfs' mode walks come out by length and vertex sequence.

    :param       graph: pose-graph (must not change while searching)
    :param      source: source view
    :param destination: destination view
    :param      config: traversal configuration
    :param  similarity: (n, n) similarity matrix (may be None in bfs mode)

    """

    def __init__(self, graph, source, destination, config, similarity=None):
        if source == destination:
            raise SfmException('Walk source and destination coincide')
        if not graph.visible(source, destination):
            raise NotVisibleError(f'Views {source} and {destination} are '
                                  f'not connected')
        if similarity is None:
            similarity = np.zeros((graph.n_views, graph.n_views))
        self._graph = graph
        self._source = source
        self._destination = destination
        self._config = config
        self._similarity = similarity
        self._lam = config.lam if config.mode == ASTAR else 0.0
        self._expanded = 0
        self._emitted = 0

        depth = config.max_depth
        self._hops = graph.hops_from(destination, depth)
        # Largest similarity to the destination within r hops, r = 0..depth
        best = np.zeros(depth + 1)
        for v, h in self._hops.items():
            if v != destination:
                best[h] = max(best[h], float(similarity[v, destination]))
        self._reach = np.maximum.accumulate(best)

        self._frontier = []
        if self._hops.get(source, depth + 1) <= depth:
            self._push_partial((source,), (), 1.0, 0.0)

    @property
    def nodes_visited(self):
        """Number of partial walks expanded so far."""
        return self._expanded

    @property
    def walks_emitted(self):
        """Number of complete walks returned so far."""
        return self._emitted

    def _push_partial(self, vertices, steps, min_q, delta):
        if self._config.mode == ASTAR:
            remaining = self._config.max_depth - len(steps)
            sim_bound = max(delta, self._reach[remaining - 1])
            bound = self._lam*min_q + (1.0 - self._lam)*sim_bound
            key = -bound
        else:
            key = 0.0
        heapq.heappush(self._frontier, (key, len(steps) + 1, vertices, False,
                                        steps, min_q, delta))

    def _push_complete(self, vertices, steps):
        walk = Walk(self._source, self._destination, steps)
        if self._config.mode == ASTAR:
            key = -walk_heuristic(walk, self._destination, self._similarity,
                                  self._lam)
        else:
            key = 0.0
        heapq.heappush(self._frontier, (key, len(steps), vertices, True,
                                        walk, None, None))

    def _expand(self, vertices, steps, min_q, delta):
        graph, d = self._graph, self._destination
        u = vertices[-1]
        remaining = self._config.max_depth - len(steps) - 1
        visited = set(vertices)
        for v in graph.neighbors(u):
            if v in visited:
                continue
            step = graph.step(u, v)
            q = min(min_q, step.edge.quality)
            if v == d:
                self._push_complete(vertices + (v,), steps + (step,))
            elif remaining >= 1 and self._hops.get(v, remaining + 1) <= \
                    remaining:
                self._push_partial(vertices + (v,), steps + (step,), q,
                                   max(delta, float(self._similarity[v, d])))

    def next(self):
        """Next walk, or None once the search is exhausted.

        :rtype: :class:`Walk`

        """
        while self._frontier:
            _, _, vertices, complete, item, min_q, delta = \
                heapq.heappop(self._frontier)
            if complete:
                self._emitted += 1
                return item
            self._expanded += 1
            self._expand(vertices, item, min_q, delta)
        return None

    def __iter__(self):
        while True:
            walk = self.next()
            if walk is None:
                return
            yield walk


def next_walk(graph, source, destination, config, similarity, state=None):
    """Next walk from a (new or resumed) search.

    :param state: search returned by a previous call, or None to start
    :return:      tuple (walk or None when exhausted, search state)

    """
    if state is None:
        state = WalkSearch(graph, source, destination, config, similarity)
    return state.next(), state


@dataclass
class WalkOutcome(object):
    """Result of :func:`pose_from_posegraph`.

    *pose* and *inliers* are None when no walk reached the inlier minimum.
    *best_inliers* is the largest inlier count of any tried walk.

    """

    pose: RelativePose = None
    inliers: np.ndarray = None
    walk: Walk = None
    walks_tried: int = 0
    nodes_visited: int = 0
    best_inliers: int = 0

    @property
    def success(self):
        return self.pose is not None


def _homogeneous(n):
    return np.column_stack((n, np.ones(len(n))))


def refit_translation(pose, x1, x2, k1, k2, threshold, rng=None,
                      samples=64):
    """Re-fits the translation direction of a pose for a fixed rotation.

    Composed unit translations lose the relative scale of the steps, so
    the direction is estimated from the correspondences: two-point
    hypotheses (and the given direction) are scored by Sampson inliers, the
    best is polished by least squares on its inliers and its sign is chosen
    by cheirality.

    :param pose:      pose whose rotation is kept
    :param x1:        (N, 2) pixels in the first view
    :param x2:        (N, 2) pixels in the second view
    :param threshold: Sampson inlier threshold in pixels
    :return:          pose with re-fitted translation, or None if no
                      direction could be determined
    :rtype:           :class:`sfmtools.geom.RelativePose`

    """
    n1, n2 = k1.normalize(x1), k2.normalize(x2)
    if len(n1) < 2:
        return None if pose.degenerate else pose
    if rng is None:
        rng = np.random.default_rng(0)
    r = pose.rotation
    rows = np.cross(_homogeneous(n1) @ r.T, _homogeneous(n2))

    candidates = [] if pose.degenerate else [pose.translation]
    i = rng.integers(0, len(rows), size=samples)
    j = rng.integers(0, len(rows), size=samples)
    cand = np.cross(rows[i], rows[j])
    norms = np.linalg.norm(cand, axis=1)
    candidates.extend(cand[norms > TRANSLATION_EPS]
                      / norms[norms > TRANSLATION_EPS, None])
    if not candidates:
        return None

    def count(t):
        f = fundamental_from_pose(RelativePose(r, t), k1, k2)
        return sampson_distances(x1, x2, f) < threshold

    best_t, best_mask = None, None
    for t in candidates:
        mask = count(t)
        if best_mask is None or mask.sum() > best_mask.sum():
            best_t, best_mask = t, mask
    if best_mask.sum() >= 2:
        try:
            t = fit_translation(r, n1[best_mask], n2[best_mask])
        except ZeroTranslationError:
            pass
        else:
            if t @ best_t < 0:
                t = -t
            mask = count(t)
            if mask.sum() >= best_mask.sum():
                best_t, best_mask = t, mask

    sel = best_mask if best_mask.any() else np.ones(len(n1), dtype=bool)
    _, d1, d2, _ = triangulate_normalized(n1[sel], n2[sel],
                                          RelativePose(r, best_t))
    _, e1, e2, _ = triangulate_normalized(n1[sel], n2[sel],
                                          RelativePose(r, -best_t))
    with np.errstate(invalid='ignore'):
        front = np.sum((d1 > 0) & (d2 > 0))
        back = np.sum((e1 > 0) & (e2 > 0))
    if back > front:
        best_t = -best_t
    return RelativePose(r, best_t)


def pose_from_posegraph(graph, source, destination, config, similarity,
                        x1, x2, k1, k2):
    """Relative pose of two views recovered from walks in the pose-graph.

    Walks are tried in :class:`WalkSearch` order. Each walk pose is scored
    by the number of correspondences with Sampson distance below the
    inlier threshold; the best walk so far is replaced only on a strictly
    larger count, and the search stops once a walk reaches
    ``config.min_inliers`` or no walks remain.

    :param x1: (N, 2) pixels of tentative correspondences in *source*
    :param x2: (N, 2) pixels of the matching points in *destination*
    :param k1: intrinsics of *source*
    :param k2: intrinsics of *destination*
    :rtype:    :class:`WalkOutcome`
    :raises:   :exc:`sfmtools.NotVisibleError`

    """
    x1 = np.asarray(x1, dtype=float).reshape(-1, 2)
    x2 = np.asarray(x2, dtype=float).reshape(-1, 2)
    search = WalkSearch(graph, source, destination, config, similarity)
    rng = np.random.default_rng(config.seed)
    outcome = WalkOutcome()
    best = None
    walks = search if config.max_walks == 0 else islice(search,
                                                        config.max_walks)
    for walk in walks:
        pose = walk_pose(walk)
        if config.refit_translation:
            pose = refit_translation(pose, x1, x2, k1, k2,
                                     config.inlier_threshold, rng=rng,
                                     samples=config.refit_samples)
        if pose is None or pose.degenerate:
            continue
        f = fundamental_from_pose(pose, k1, k2)
        mask = sampson_distances(x1, x2, f) < config.inlier_threshold
        n = int(mask.sum())
        logger.debug(f'{walk}: {n} inliers')
        if best is None or n > outcome.best_inliers:
            best = (pose, mask, walk)
            outcome.best_inliers = n
        if n >= config.min_inliers:
            break
    outcome.walks_tried = search.walks_emitted
    outcome.nodes_visited = search.nodes_visited
    if best is not None and outcome.best_inliers >= config.min_inliers:
        outcome.pose, outcome.inliers, outcome.walk = best
    return outcome


def truncated_cost(pose, x1, x2, k1, k2, threshold):
    """Sum of squared Sampson distances truncated at *threshold*."""
    d = sampson_distances(x1, x2, fundamental_from_pose(pose, k1, k2))
    return float(np.sum(np.minimum(d*d, threshold*threshold)))


def _tangent_basis(t):
    a = np.eye(3)[np.argmin(np.abs(t))]
    b1 = np.cross(t, a)
    b1 /= np.linalg.norm(b1)
    return b1, np.cross(t, b1)


def refine_pose_irls(pose, x1, x2, k1, k2, threshold, max_iterations=50):
    """Iteratively reweighted least-squares pose refinement.

    Minimizes the truncated-quadratic Sampson cost. Each iteration fixes
    the inlier set of the current pose and solves the weighted problem
    over a rotation increment and the two tangent directions of the
    translation; a step is only accepted if it lowers the truncated cost.

    :param pose:      initial pose
    :param threshold: truncation (inlier) threshold in pixels
    :return:          refined pose with at least as many inliers as *pose*
    :rtype:           :class:`sfmtools.geom.RelativePose`
    :raises:          :exc:`sfmtools.InsufficientInliersError` if fewer than
                      5 correspondences are inliers of *pose*

    """
    x1 = np.asarray(x1, dtype=float).reshape(-1, 2)
    x2 = np.asarray(x2, dtype=float).reshape(-1, 2)

    def inliers(p):
        f = fundamental_from_pose(p, k1, k2)
        return sampson_distances(x1, x2, f) < threshold

    start_count = int(inliers(pose).sum())
    if start_count < 5:
        raise InsufficientInliersError(f'{start_count} inliers, at least 5 '
                                       f'needed')

    current = pose
    cost = truncated_cost(current, x1, x2, k1, k2, threshold)
    for _ in range(max_iterations):
        w = inliers(current)
        if w.sum() < 5:
            break
        a1, a2 = x1[w], x2[w]
        b1, b2 = _tangent_basis(current.translation)
        base = current

        def update(p, base=base, b1=b1, b2=b2):
            r = Rotation.from_rotvec(p[:3]).as_matrix() @ base.rotation
            t = base.translation + p[3]*b1 + p[4]*b2
            return RelativePose(r, t/np.linalg.norm(t))

        def residuals(p):
            f = fundamental_from_pose(update(p), k1, k2)
            return np.nan_to_num(signed_sampson_residuals(a1, a2, f))

        result = least_squares(residuals, np.zeros(5), method='lm',
                               xtol=1e-12, ftol=1e-12, max_nfev=100)
        candidate = update(result.x)
        new_cost = truncated_cost(candidate, x1, x2, k1, k2, threshold)
        if not new_cost < cost:
            break
        improvement = (cost - new_cost)/max(cost, 1e-300)
        current, cost = candidate, new_cost
        if improvement < 1e-8:
            break

    if int(inliers(current).sum()) < start_count:
        return pose
    return current


def write_pose_graph(graph, out):
    """Writes the pose-graph in text form.

    One ``VERTEX <id>`` line per view followed by one
    ``EDGE <i> <j> <qw> <qx> <qy> <qz> <tx> <ty> <tz> <quality>`` line per
    edge, in insertion order.

    :param out: file name or text stream

    """
    if isinstance(out, str):
        with open(out, 'w') as f:
            return write_pose_graph(graph, f)
    for v in range(graph.n_views):
        out.write(f'VERTEX {v}\n')
    for e in graph.edges:
        values = list(e.pose.as_quaternion()) + list(e.pose.translation)
        values.append(e.quality)
        values = ' '.join(f'{x:.12g}' for x in values)
        out.write(f'EDGE {e.source} {e.destination} {values}\n')


def read_pose_graph(path):
    """Reads a pose-graph written by :func:`write_pose_graph`.

    :rtype: :class:`PoseGraph`

    """
    vertices, edges = [], []
    with open(path, 'r') as f:
        for num, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            try:
                if fields[0] == 'VERTEX':
                    vertices.append(int(fields[1]))
                elif fields[0] == 'EDGE' and len(fields) == 11:
                    values = [float(x) for x in fields[3:]]
                    edges.append((int(fields[1]), int(fields[2]),
                                  values[:4], values[4:7], values[7]))
                else:
                    raise ValueError(f'unexpected record {fields[0]}')
            except ValueError as e:
                raise SfmException(f'{path}:{num}: invalid line: {e}')
    graph = PoseGraph(max(vertices) + 1 if vertices else 0)
    for s, d, q, t, quality in edges:
        graph.add_edge(s, d, RelativePose.from_quaternion(q, t), quality)
    return graph


# Poll interval for lock acquisition, lets Python threads progress while
# waiting on the Qt lock
LOCK_POLL_MS = 10


class PoseGraphGuard(object):
    """Readers-writer guard around the shared reconstruction state.

    Holds the pose-graph together with the track store and score store that
    are updated with it. Walk searches and track queries run under
    :meth:`reading`; edge insertion, track merges and score updates under
    :meth:`writing`, so readers never observe a partially inserted edge.

    :param  graph: the pose-graph
    :type   graph: :class:`PoseGraph`
    :param tracks: track store (optional)
    :param scores: correspondence score store (optional)

    """

    def __init__(self, graph, tracks=None, scores=None):
        self.graph = graph
        self.tracks = tracks
        self.scores = scores
        self._lock = QReadWriteLock()

    @contextmanager
    def reading(self):
        while not self._lock.tryLockForRead(LOCK_POLL_MS):
            pass
        try:
            yield self
        finally:
            self._lock.unlock()

    @contextmanager
    def writing(self):
        while not self._lock.tryLockForWrite(LOCK_POLL_MS):
            pass
        try:
            yield self
        finally:
            self._lock.unlock()

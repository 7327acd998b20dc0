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

from concurrent.futures import ThreadPoolExecutor
import io

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from sfmtools import (SfmException, DuplicateEdgeError, ZeroTranslationError,
                      NotVisibleError, InsufficientInliersError)
from sfmtools.geom import (CameraIntrinsics, RelativePose, compose,
                           random_rotation, relative_pose_from_world,
                           rotation_error_deg, translation_error_deg)
from sfmtools.posegraph import (UnionFind, PoseGraph, Walk, TraversalConfig,
                                WalkSearch, walk_pose, walk_heuristic,
                                next_walk, pose_from_posegraph,
                                refine_pose_irls, write_pose_graph,
                                read_pose_graph, PoseGraphGuard, BFS)
from sfmtools.scene import Camera, generate_pair, PairConfig

K = CameraIntrinsics(900.0, 900.0, 512.0, 384.0)


def some_pose(rng):
    return RelativePose.create(random_rotation(rng, 20.0), rng.normal(size=3))


def walk_through(graph, vertices):
    steps = tuple(graph.step(u, v) for u, v in zip(vertices, vertices[1:]))
    return Walk(vertices[0], vertices[-1], steps)


def ring_cameras(n, radius=8.0):
    """Cameras equally spaced on a circle, all looking at the origin."""
    cameras = []
    for k in range(n):
        a = 2*np.pi*k/n
        center = np.array([radius*np.cos(a), radius*np.sin(a), 0.0])
        cameras.append(Camera.look_at(center, np.zeros(3), K, 1024, 768))
    return cameras


def gt_pose(cameras, i, j):
    return relative_pose_from_world(cameras[i].rotation,
                                    cameras[i].translation,
                                    cameras[j].rotation,
                                    cameras[j].translation)


def ring_graph(cameras):
    """Noise-free pose-graph with an edge between ring neighbours."""
    n = len(cameras)
    graph = PoseGraph(n)
    for i in range(n):
        j = (i + 1) % n
        graph.add_edge(min(i, j), max(i, j),
                       gt_pose(cameras, min(i, j), max(i, j)), 0.9)
    return graph


def observations(cameras, i, j, rng, n=100):
    points = rng.uniform(-1.0, 1.0, (n, 3))
    x1, _ = cameras[i].project(points)
    x2, _ = cameras[j].project(points)
    return x1, x2


def all_walks(graph, s, d, depth):
    """Every simple path from s to d with at most *depth* edges."""
    found = []

    def extend(path):
        if len(path) > depth:
            return
        for v in graph.neighbors(path[-1]):
            if v in path:
                continue
            if v == d:
                found.append(path + (v,))
            elif len(path) < depth:
                extend(path + (v,))
    extend((s,))
    return found


def random_graph(rng, n, p):
    graph = PoseGraph(n)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.uniform() < p:
                graph.add_edge(i, j, some_pose(rng),
                               round(float(rng.uniform(0.1, 1.0)), 1))
    s = np.round(rng.uniform(size=(n, n)), 1)
    sim = (s + s.T)/2
    np.fill_diagonal(sim, 1.0)
    return graph, sim


class TestUnionFind:

    def test_union_and_find(self):
        uf = UnionFind(range(6))
        assert uf.components == 6
        uf.union(0, 1)
        uf.union(2, 3)
        uf.union(1, 3)
        assert uf.connected(0, 2)
        assert not uf.connected(0, 4)
        assert uf.components == 3
        assert uf.union(0, 3) == uf.find(2)
        assert uf.components == 3

    def test_add(self):
        uf = UnionFind()
        uf.add(('a', 1))
        uf.add(('a', 1))
        assert len(uf) == 1
        assert ('a', 1) in uf
        assert ('b', 1) not in uf

    def test_long_chain(self):
        uf = UnionFind(range(1000))
        for k in range(999):
            uf.union(k, k + 1)
        assert uf.components == 1
        assert all(uf.find(k) == uf.find(0) for k in range(1000))


class TestPoseGraph:

    def test_connectivity(self, rng):
        graph = PoseGraph(4)
        assert not graph.visible(0, 1)
        graph.add_edge(0, 1, some_pose(rng), 0.5)
        assert graph.visible(0, 1)
        graph.add_edge(1, 2, some_pose(rng), 0.5)
        assert graph.visible(0, 2)
        assert graph.visible(3, 3)
        assert not graph.visible(0, 3)
        assert graph.components == 2
        assert len(graph) == 2

    def test_duplicate_edge(self, rng):
        graph = PoseGraph(3)
        graph.add_edge(0, 1, some_pose(rng), 0.5)
        with pytest.raises(DuplicateEdgeError):
            graph.add_edge(0, 1, some_pose(rng), 0.7)
        with pytest.raises(DuplicateEdgeError):
            graph.add_edge(1, 0, some_pose(rng), 0.7)
        assert len(graph) == 1

    def test_invalid_edges(self, rng):
        graph = PoseGraph(3)
        with pytest.raises(SfmException):
            graph.add_edge(1, 1, some_pose(rng), 0.5)
        with pytest.raises(SfmException):
            graph.add_edge(0, 1, some_pose(rng), 1.5)
        with pytest.raises(SfmException):
            graph.add_edge(0, 3, some_pose(rng), 0.5)
        with pytest.raises(ZeroTranslationError):
            graph.add_edge(0, 1, RelativePose.identity(), 0.5)
        assert len(graph) == 0

    def test_visibility_matches_reachability(self, rng):
        n = 400
        graph = PoseGraph(n)
        rows, cols = [], []
        while len(graph) < 1000:
            i, j = (int(x) for x in rng.integers(0, n, 2))
            if i == j or graph.has_edge(i, j):
                continue
            graph.add_edge(i, j, some_pose(rng), 0.5)
            rows.append(i)
            cols.append(j)
        adjacency = coo_matrix((np.ones(len(rows)), (rows, cols)),
                               shape=(n, n))
        n_comp, labels = connected_components(adjacency, directed=False)
        assert graph.components == n_comp
        for i, j in rng.integers(0, n, (100, 2)):
            assert graph.visible(i, j) == (labels[i] == labels[j])

    def test_neighbors_sorted(self, rng):
        graph = PoseGraph(5)
        for v in (4, 1, 3):
            graph.add_edge(2, v, some_pose(rng), 0.5)
        assert graph.neighbors(2) == (1, 3, 4)
        graph.add_edge(0, 2, some_pose(rng), 0.5)
        assert graph.neighbors(2) == (0, 1, 3, 4)
        assert graph.hops_from(0, 1) == {0: 0, 2: 1}


class TestWalkPose:

    def test_single_step(self, rng):
        graph = PoseGraph(2)
        pose = some_pose(rng)
        graph.add_edge(0, 1, pose, 0.5)
        got = walk_pose(walk_through(graph, (0, 1)))
        np.testing.assert_allclose(got.rotation, pose.rotation)
        np.testing.assert_allclose(got.translation, pose.translation)
        back = walk_pose(walk_through(graph, (1, 0)))
        np.testing.assert_allclose(back.rotation, pose.rotation.T)

    def test_there_and_back(self, rng):
        graph = PoseGraph(2)
        graph.add_edge(0, 1, some_pose(rng), 0.5)
        got = walk_pose(walk_through(graph, (0, 1, 0)))
        np.testing.assert_allclose(got.rotation, np.eye(3), atol=1e-9)
        assert got.degenerate

    def test_ring_walks(self):
        cameras = ring_cameras(8)
        graph = ring_graph(cameras)
        for s, d in ((0, 2), (3, 1), (7, 1), (6, 0)):
            for walk in WalkSearch(graph, s, d, TraversalConfig(max_depth=7)):
                got = walk_pose(walk)
                gt = gt_pose(cameras, s, d)
                assert rotation_error_deg(got.rotation, gt.rotation) < 1e-6
                if len(walk) == 2:
                    # equal steps keep their length ratio under composition
                    assert translation_error_deg(got.translation,
                                                 gt.translation) < 1e-6

    def test_backward_steps(self, rng):
        graph = PoseGraph(3)
        a, b = some_pose(rng), some_pose(rng)
        graph.add_edge(1, 0, a, 0.5)
        graph.add_edge(1, 2, b, 0.5)
        walk = walk_through(graph, (0, 1, 2))
        assert [s.inverted for s in walk.steps] == [True, False]
        expected = compose(b, RelativePose(a.rotation.T,
                                           -a.rotation.T @ a.translation))
        got = walk_pose(walk)
        np.testing.assert_allclose(got.rotation, expected.rotation,
                                   atol=1e-12)
        np.testing.assert_allclose(got.translation, expected.translation,
                                   atol=1e-12)


class TestHeuristic:

    @pytest.fixture
    def chain(self, rng):
        graph = PoseGraph(4)
        graph.add_edge(0, 1, some_pose(rng), 0.9)
        graph.add_edge(1, 2, some_pose(rng), 0.4)
        graph.add_edge(2, 3, some_pose(rng), 0.9)
        sim = np.eye(4)
        sim[1, 3] = sim[3, 1] = 0.3
        sim[2, 3] = sim[3, 2] = 0.7
        return walk_through(graph, (0, 1, 2, 3)), sim

    def test_weighted_value(self, chain):
        walk, sim = chain
        assert walk_heuristic(walk, 3, sim, 0.8) == pytest.approx(0.46)

    def test_quality_only(self, chain):
        walk, sim = chain
        assert walk_heuristic(walk, 3, sim, 1.0) == pytest.approx(0.4)
        assert walk.min_quality == pytest.approx(0.4)

    def test_similarity_only(self, chain):
        walk, sim = chain
        assert walk_heuristic(walk, 3, sim, 0.0) == pytest.approx(0.7)

    def test_direct_edge(self, rng):
        graph = PoseGraph(2)
        graph.add_edge(0, 1, some_pose(rng), 0.6)
        walk = walk_through(graph, (0, 1))
        assert walk_heuristic(walk, 1, np.ones((2, 2)), 0.8) == \
            pytest.approx(0.48)


class TestWalkSearch:

    def test_single_edge(self, rng):
        graph = PoseGraph(2)
        graph.add_edge(0, 1, some_pose(rng), 0.5)
        config = TraversalConfig(max_depth=1)
        walk, state = next_walk(graph, 0, 1, config, np.eye(2))
        assert walk.vertices == (0, 1)
        walk, state = next_walk(graph, 0, 1, config, np.eye(2), state)
        assert walk is None

    def test_diamond(self, rng):
        graph = PoseGraph(4)
        graph.add_edge(0, 2, some_pose(rng), 0.5)
        graph.add_edge(2, 3, some_pose(rng), 0.5)
        graph.add_edge(0, 1, some_pose(rng), 0.9)
        graph.add_edge(1, 3, some_pose(rng), 0.9)
        search = WalkSearch(graph, 0, 3, TraversalConfig(), np.eye(4))
        assert search.walks_emitted == 0
        assert [w.vertices for w in search] == [(0, 1, 3), (0, 2, 3)]
        assert search.walks_emitted == 2
        assert search.next() is None
        assert search.walks_emitted == 2

    def test_similarity_breaks_quality_tie(self, rng):
        graph = PoseGraph(4)
        for s, d in ((0, 1), (1, 3), (0, 2), (2, 3)):
            graph.add_edge(s, d, some_pose(rng), 0.7)
        sim = np.eye(4)
        sim[2, 3] = sim[3, 2] = 0.9
        sim[1, 3] = sim[3, 1] = 0.2
        search = WalkSearch(graph, 0, 3, TraversalConfig(), sim)
        assert search.next().vertices == (0, 2, 3)

    @pytest.mark.parametrize('seed', range(50))
    def test_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        graph, sim = random_graph(rng, 8, 0.4)
        while not graph.visible(0, 7):
            graph, sim = random_graph(rng, 8, 0.4)
        for lam in (0.0, 0.8, 1.0):
            config = TraversalConfig(max_depth=4, lam=lam)
            expected = sorted(
                all_walks(graph, 0, 7, 4),
                key=lambda v: (-walk_heuristic(walk_through(graph, v), 7,
                                               sim, lam), len(v), v))
            got = [w.vertices for w in WalkSearch(graph, 0, 7, config, sim)]
            assert got == expected

    @pytest.mark.parametrize('seed', range(5))
    def test_breadth_first_order(self, seed):
        rng = np.random.default_rng(100 + seed)
        graph, sim = random_graph(rng, 8, 0.5)
        if not graph.visible(0, 7):
            pytest.skip('views not connected')
        config = TraversalConfig(max_depth=5, mode=BFS)
        expected = sorted(all_walks(graph, 0, 7, 5),
                          key=lambda v: (len(v), v))
        got = [w.vertices for w in WalkSearch(graph, 0, 7, config, sim)]
        assert got == expected

    def test_larger_graph(self):
        rng = np.random.default_rng(77)
        graph, sim = random_graph(rng, 20, 0.15)
        d = next((v for v in range(19, 0, -1) if graph.visible(0, v)), None)
        if d is None:
            pytest.skip('view 0 is isolated')
        config = TraversalConfig(max_depth=5)
        got = [w.vertices for w in WalkSearch(graph, 0, d, config, sim)]
        assert sorted(got) == sorted(all_walks(graph, 0, d, 5))
        values = [walk_heuristic(walk_through(graph, v), d, sim, 0.8)
                  for v in got]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_depth_limit(self):
        graph = ring_graph(ring_cameras(8))
        search = WalkSearch(graph, 0, 4, TraversalConfig(max_depth=3),
                            np.eye(8))
        assert search.next() is None
        search = WalkSearch(graph, 0, 4, TraversalConfig(max_depth=4),
                            np.eye(8))
        assert sorted(w.vertices for w in search) == [(0, 1, 2, 3, 4),
                                                       (0, 7, 6, 5, 4)]

    def test_not_visible(self, rng):
        graph = PoseGraph(3)
        graph.add_edge(0, 1, some_pose(rng), 0.5)
        with pytest.raises(NotVisibleError):
            WalkSearch(graph, 0, 2, TraversalConfig(), np.eye(3))

    def test_same_view(self, rng):
        graph = PoseGraph(2)
        graph.add_edge(0, 1, some_pose(rng), 0.5)
        with pytest.raises(SfmException):
            WalkSearch(graph, 1, 1, TraversalConfig(), np.eye(2))


class TestPoseFromPosegraph:

    def test_noise_free_ring(self, rng):
        cameras = ring_cameras(8)
        graph = ring_graph(cameras)
        x1, x2 = observations(cameras, 0, 2, rng)
        outcome = pose_from_posegraph(graph, 0, 2, TraversalConfig(),
                                      np.eye(8), x1, x2, K, K)
        assert outcome.success
        assert outcome.walks_tried == 1
        assert outcome.walk.vertices == (0, 1, 2)
        assert int(outcome.inliers.sum()) == 100
        gt = gt_pose(cameras, 0, 2)
        assert rotation_error_deg(outcome.pose.rotation, gt.rotation) < 1e-6
        assert translation_error_deg(outcome.pose.translation,
                                     gt.translation) < 1e-3

    def test_long_walk_translation_refit(self, rng):
        cameras = ring_cameras(8)
        graph = ring_graph(cameras)
        x1, x2 = observations(cameras, 0, 3, rng)
        outcome = pose_from_posegraph(graph, 0, 3, TraversalConfig(),
                                      np.eye(8), x1, x2, K, K)
        assert outcome.success
        assert outcome.walk.vertices == (0, 1, 2, 3)
        gt = gt_pose(cameras, 0, 3)
        assert translation_error_deg(outcome.pose.translation,
                                     gt.translation) < 1e-3

    @pytest.mark.parametrize('refit', [True, False])
    def test_corrupted_edge(self, rng, refit):
        cameras = ring_cameras(8)
        graph = PoseGraph(8)
        graph.add_edge(0, 1, gt_pose(cameras, 0, 1), 0.9)
        gt = gt_pose(cameras, 1, 2)
        graph.add_edge(1, 2, RelativePose(random_rotation(rng, 60.0)
                                          @ gt.rotation, gt.translation), 0.9)
        x1, x2 = observations(cameras, 0, 2, rng)
        config = TraversalConfig(refit_translation=refit)
        outcome = pose_from_posegraph(graph, 0, 2, config, np.eye(8), x1, x2,
                                      K, K)
        assert not outcome.success
        assert outcome.pose is None
        assert outcome.walks_tried == 1
        assert outcome.best_inliers < config.min_inliers

    def test_not_visible(self, rng):
        cameras = ring_cameras(8)
        graph = PoseGraph(8)
        graph.add_edge(0, 1, gt_pose(cameras, 0, 1), 0.9)
        x1, x2 = observations(cameras, 0, 2, rng)
        with pytest.raises(NotVisibleError):
            pose_from_posegraph(graph, 0, 2, TraversalConfig(), np.eye(8),
                                x1, x2, K, K)

    def test_walk_limit(self, rng):
        cameras = ring_cameras(8)
        graph = PoseGraph(8)
        graph.add_edge(0, 1, gt_pose(cameras, 0, 1), 0.5)
        graph.add_edge(1, 2, gt_pose(cameras, 1, 2), 0.5)
        graph.add_edge(0, 3, gt_pose(cameras, 0, 3), 0.9)
        gt = gt_pose(cameras, 2, 3)
        graph.add_edge(2, 3, RelativePose(random_rotation(rng, 60.0)
                                          @ gt.rotation, gt.translation), 0.9)
        x1, x2 = observations(cameras, 0, 2, rng)
        config = TraversalConfig(refit_translation=False, max_walks=1)
        outcome = pose_from_posegraph(graph, 0, 2, config, np.eye(8), x1, x2,
                                      K, K)
        assert not outcome.success
        assert outcome.walks_tried == 1
        config.max_walks = 0
        outcome = pose_from_posegraph(graph, 0, 2, config, np.eye(8), x1, x2,
                                      K, K)
        assert outcome.success
        assert outcome.walks_tried == 2
        assert outcome.walk.vertices == (0, 1, 2)


class TestRefinement:

    def test_fixed_point(self, clean_pair):
        x1, x2 = clean_pair.points(clean_pair.matches)
        k = clean_pair.features1.intrinsics
        got = refine_pose_irls(clean_pair.pose, x1, x2, k, k, 2.0)
        np.testing.assert_allclose(got.rotation, clean_pair.pose.rotation,
                                   atol=1e-9)
        np.testing.assert_allclose(got.translation,
                                   clean_pair.pose.translation, atol=1e-9)

    @pytest.mark.parametrize('seed', range(3))
    def test_improves_perturbed_pose(self, seed):
        pair = generate_pair(PairConfig(seed=seed, n_keypoints=400,
                                        noise_px=0.5, inlier_fraction=1.0))
        x1, x2 = pair.points(pair.matches)
        assert len(x1) == 200
        k = pair.features1.intrinsics
        rng = np.random.default_rng(seed)
        start = RelativePose(random_rotation(rng, 1.0) @ pair.pose.rotation,
                             pair.pose.translation)
        got = refine_pose_irls(start, x1, x2, k, k, 30.0)
        assert rotation_error_deg(got.rotation, pair.pose.rotation) < \
            rotation_error_deg(start.rotation, pair.pose.rotation)
        assert rotation_error_deg(got.rotation, pair.pose.rotation) < 0.5

    def test_too_few_inliers(self, clean_pair):
        x1, x2 = clean_pair.points(clean_pair.matches)
        k = clean_pair.features1.intrinsics
        with pytest.raises(InsufficientInliersError):
            refine_pose_irls(clean_pair.pose, x1[:4], x2[:4], k, k, 2.0)


class TestPoseGraphFile:

    def test_roundtrip(self, rng, tmp_path):
        graph = PoseGraph(5)
        graph.add_edge(0, 1, some_pose(rng), 0.25)
        graph.add_edge(3, 1, some_pose(rng), 1.0)
        graph.add_edge(4, 2, some_pose(rng), 0.5)
        path = str(tmp_path/'posegraph.txt')
        write_pose_graph(graph, path)
        back = read_pose_graph(path)
        assert back.n_views == 5
        assert len(back) == 3
        for a, b in zip(graph.edges, back.edges):
            assert (a.source, a.destination) == (b.source, b.destination)
            assert a.quality == pytest.approx(b.quality)
            np.testing.assert_allclose(a.pose.rotation, b.pose.rotation,
                                       atol=1e-9)
            np.testing.assert_allclose(a.pose.translation,
                                       b.pose.translation, atol=1e-9)

    def test_text_format(self, rng):
        graph = PoseGraph(2)
        graph.add_edge(0, 1, RelativePose(np.eye(3), (0.0, 0.0, 1.0)), 0.5)
        out = io.StringIO()
        write_pose_graph(graph, out)
        lines = out.getvalue().splitlines()
        assert lines[:2] == ['VERTEX 0', 'VERTEX 1']
        fields = lines[2].split()
        assert fields[:3] == ['EDGE', '0', '1']
        assert [float(x) for x in fields[3:]] == [1, 0, 0, 0, 0, 0, 1, 0.5]

    def test_invalid_line(self, tmp_path):
        path = tmp_path/'bad.txt'
        path.write_text('VERTEX 0\nEDGE 0 1 2\n')
        with pytest.raises(SfmException):
            read_pose_graph(str(path))


class TestGuard:

    def test_concurrent_commits(self):
        n_views, n_threads, per_thread = 300, 4, 250
        guard = PoseGraphGuard(PoseGraph(n_views))
        pose = RelativePose(np.eye(3), (1.0, 0.0, 0.0))

        def worker(seed):
            rng = np.random.default_rng(seed)
            added = []
            for _ in range(per_thread):
                i, j = (int(x) for x in rng.choice(n_views, 2, replace=False))
                with guard.reading() as state:
                    state.graph.visible(i, j)
                with guard.writing() as state:
                    try:
                        state.graph.add_edge(i, j, pose, 0.5)
                    except DuplicateEdgeError:
                        continue
                added.append((i, j))
            return added

        with ThreadPoolExecutor(max_workers=n_threads) as executor:
            results = list(executor.map(worker, range(n_threads)))
        added = [e for r in results for e in r]
        graph = guard.graph
        assert len(graph) == len(added)
        assert len({frozenset(e) for e in added}) == len(added)
        rows, cols = zip(*added)
        adjacency = coo_matrix((np.ones(len(rows)), (rows, cols)),
                               shape=(n_views, n_views))
        n_comp, labels = connected_components(adjacency, directed=False)
        assert graph.components == n_comp
        for i in range(0, n_views, 7):
            for j in range(0, n_views, 11):
                assert graph.visible(i, j) == (labels[i] == labels[j])

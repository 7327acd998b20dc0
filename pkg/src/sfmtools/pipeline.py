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

"""Initial pose-graph construction, reporting and experiment harnesses.

View pairs are processed in decreasing image similarity. A pair already
connected in the pose-graph first gets a pose from a graph walk, checked
on the track correspondences and densified by pose-guided matching; other
pairs (and pairs whose walks fail) go through descriptor matching and
PROSAC over adaptively ranked correspondences.

"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field, replace
import logging
import math
import os
import queue
import time

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import minimum_spanning_tree

from sfmtools import (SfmException, ConfigInvalidError, DuplicateEdgeError,
                      ZeroTranslationError, NotVisibleError,
                      InsufficientInliersError, NoModelError)
from sfmtools.geom import (RelativePose, fundamental_from_pose, inlier_mask,
                           rotation_error_deg, translation_angle_error_deg,
                           random_rotation)
from sfmtools.matcher import (MatchConfig, MatchCounter, guided_match,
                              brute_force_guided_match, brute_force_match)
from sfmtools.posegraph import (PoseGraph, PoseGraphGuard, TraversalConfig,
                                pose_from_posegraph, refine_pose_irls,
                                ASTAR, BFS)
from sfmtools.robust import (RansacConfig, ScoreStore, estimate_pose_ransac,
                             rank_correspondences, update_scores)
from sfmtools.scene import generate, generate_pair, SceneConfig, PairConfig
from sfmtools.similarity import ordered_pairs
from sfmtools.tracks import TrackStore

__all__ = ['PipelineConfig', 'PairRecord', 'RunRecord', 'PoseGraphBuilder',
           'run_pipeline', 'spanning_tree_pairs', 'write_report',
           'SweepRow', 'build_sweep_graph', 'sweep_heuristic', 'write_sweep',
           'BenchRow', 'bench_matcher', 'ranking_triplet', 'bench_ranking',
           'write_bench', 'default_thread_count']

logger = logging.getLogger(__name__)

# Pair methods
WALK = 'walk'
RANSAC_FALLBACK = 'ransac_fallback'
SKIPPED = 'skipped'
METHODS = (WALK, RANSAC_FALLBACK, SKIPPED)

# Traversal without walks (pure matching + RANSAC baseline)
NONE = 'none'

THREADS_ENV = 'SFMTOOLS_THREADS'

# Rotation error (degrees) below which a sweep pose counts as accurate
SWEEP_ACCURACY_DEG = 2.0

PAIRS_FILE = 'pairs.csv'
SUMMARY_FILE = 'summary.csv'
ERRORS_FILE = 'errors.csv'


def default_thread_count():
    """Thread count from the SFMTOOLS_THREADS environment variable, or 1."""
    value = os.environ.get(THREADS_ENV)
    if not value:
        return 1
    try:
        n = int(value)
    except ValueError:
        raise ConfigInvalidError(f'{THREADS_ENV} is not an integer: {value}')
    if n < 1:
        raise ConfigInvalidError(f'{THREADS_ENV} must be positive: {value}')
    return n


@dataclass
class PipelineConfig(object):
    """Parameters of a pose-graph build.

    *lam* is the heuristic weight of walk quality against similarity to the
    destination. *traversal* is ``astar``, ``bfs`` or ``none``; with
    ``none`` (or *enable_astar* off) every pair is estimated by matching and
    RANSAC. *spanning_tree_only* restricts the pairs to a maximum-similarity
    spanning tree. With *deterministic* set, reported times are 0.

    """

    lam: float = 0.8
    max_depth: int = 5
    bin_count: int = 45
    min_similarity: float = 0.4
    min_inliers: int = 20
    ransac_max_iterations: int = 5000
    inlier_threshold_px: float = 2.0
    snn_base: float = 0.9
    snn_ratio: float = 0.8
    single_candidate_max_distance: float = 0.5
    thread_count: int = field(default_factory=default_thread_count)
    enable_astar: bool = True
    enable_epipolar_hashing: bool = True
    enable_adaptive_ranking: bool = True
    traversal: str = ASTAR
    spanning_tree_only: bool = False
    ransac_confidence: float = 0.99
    prosac_growth_max: int = 200000
    refit_translation: bool = True
    max_walks: int = 200
    seed: int = 0
    deterministic: bool = False

    def validate(self):
        """Validates all settings.

        :raises: :exc:`sfmtools.ConfigInvalidError`

        """
        if self.traversal not in (ASTAR, BFS, NONE):
            raise ConfigInvalidError(f'Unknown traversal: {self.traversal}')
        if self.thread_count < 1:
            raise ConfigInvalidError('thread_count must be >= 1')
        if not 0.0 <= self.min_similarity <= 1.0:
            raise ConfigInvalidError('min_similarity must be in [0, 1]')
        if self.single_candidate_max_distance < 0:
            raise ConfigInvalidError('single_candidate_max_distance must be '
                                     '>= 0')
        self.traversal_config().validate()
        self.match_config().validate()
        self.ransac_config().validate()

    @property
    def walks_enabled(self):
        return (self.enable_astar and self.traversal != NONE
                and not self.spanning_tree_only)

    def traversal_config(self, seed=None):
        return TraversalConfig(
            max_depth=self.max_depth, lam=self.lam,
            min_inliers=self.min_inliers,
            inlier_threshold=self.inlier_threshold_px,
            mode=BFS if self.traversal == BFS else ASTAR,
            max_walks=self.max_walks,
            refit_translation=self.refit_translation,
            seed=self.seed if seed is None else seed)

    def match_config(self):
        return MatchConfig(
            inlier_threshold=self.inlier_threshold_px,
            bin_count=self.bin_count, snn_base=self.snn_base,
            snn_ratio=self.snn_ratio,
            single_candidate_max_distance=self.single_candidate_max_distance)

    def ransac_config(self, seed=None):
        return RansacConfig(
            inlier_threshold=self.inlier_threshold_px,
            confidence=self.ransac_confidence,
            max_iterations=self.ransac_max_iterations,
            min_inliers=self.min_inliers,
            growth_max=self.prosac_growth_max,
            seed=self.seed if seed is None else seed)


@dataclass
class PairRecord(object):
    """Outcome of one view pair."""

    source: int
    destination: int
    method: str = SKIPPED
    time_s: float = 0.0
    inliers: int = 0
    rot_err_deg: float = math.nan
    trans_err_deg: float = math.nan
    walks_tried: int = 0
    nodes_visited: int = 0
    iterations: int = 0
    detail: str = ''

    @property
    def pair(self):
        return f'{self.source}-{self.destination}'


@dataclass
class RunRecord(object):
    """Result of :func:`run_pipeline`."""

    config: PipelineConfig
    graph: PoseGraph
    tracks: TrackStore
    scores: ScoreStore
    records: list

    def count(self, method):
        return sum(1 for r in self.records if r.method == method)


def pair_seed(seed, source, destination):
    """Seed of the random streams of one pair, independent of scheduling."""
    return int(np.random.SeedSequence([seed, source, destination])
               .generate_state(1)[0])


def spanning_tree_pairs(similarity):
    """Pairs of a maximum-similarity spanning tree, most similar first.

    The tree spans the complete view graph with edge weights ``2 - δ``, so
    it has n - 1 edges for n views.

    """
    s = np.clip(np.asarray(similarity, dtype=float), 0.0, 1.0)
    n = len(s)
    if n < 2:
        return []
    weights = np.triu(2.0 - s, k=1)
    tree = minimum_spanning_tree(csr_matrix(weights))
    rows, cols = tree.nonzero()
    pairs = [(int(min(i, j)), int(max(i, j))) for i, j in zip(rows, cols)]
    return sorted(pairs, key=lambda p: (-s[p], p))


class PoseGraphBuilder(object):
    """Builds the initial pose-graph of a scene.

    :param scene:  input views
    :type  scene:  :class:`sfmtools.scene.Scene`
    :param config: build parameters
    :type  config: :class:`PipelineConfig`

    """

    def __init__(self, scene, config=None):
        self.scene = scene
        self.config = config or PipelineConfig()
        self.config.validate()
        self.features = scene.features
        self.similarity = scene.similarity
        self.guard = PoseGraphGuard(PoseGraph(scene.n_views), TrackStore(),
                                    ScoreStore([len(f)
                                                for f in self.features]))
        self._match_config = self.config.match_config()

    def pairs(self):
        """View pairs to process, in processing order."""
        if self.config.spanning_tree_only:
            return spanning_tree_pairs(self.similarity)
        return ordered_pairs(self.similarity, self.config.min_similarity)

    def _walk_estimate(self, s, d, record):
        cfg = self.config
        k_s, k_d = self.features[s], self.features[d]
        with self.guard.reading() as state:
            if not state.graph.visible(s, d):
                return None
            shared = state.tracks.shared_correspondences(s, d)
            if len(shared) < cfg.min_inliers:
                return None
            x1, x2 = shared.points(k_s, k_d)
            outcome = pose_from_posegraph(
                state.graph, s, d, cfg.traversal_config(pair_seed(cfg.seed,
                                                                  s, d)),
                self.similarity, x1, x2, k_s.intrinsics, k_d.intrinsics)
        record.walks_tried = outcome.walks_tried
        record.nodes_visited = outcome.nodes_visited
        if not outcome.success:
            logger.debug(f'Pair ({s}, {d}): no walk among '
                         f'{outcome.walks_tried} reached {cfg.min_inliers} '
                         f'inliers (best {outcome.best_inliers})')
            return None

        f = fundamental_from_pose(outcome.pose, k_s.intrinsics,
                                  k_d.intrinsics)
        if cfg.enable_epipolar_hashing:
            matches = guided_match(k_s, k_d, f, self._match_config)
        else:
            matches = brute_force_guided_match(k_s, k_d, f,
                                               self._match_config)
        x1, x2 = matches.points(k_s, k_d)
        mu = cfg.inlier_threshold_px
        try:
            pose = refine_pose_irls(outcome.pose, x1, x2, k_s.intrinsics,
                                    k_d.intrinsics, mu)
        except InsufficientInliersError:
            return None
        mask = inlier_mask(pose, x1, x2, k_s.intrinsics, k_d.intrinsics, mu)
        if mask.sum() < cfg.min_inliers:
            logger.debug(f'Pair ({s}, {d}): walk pose kept {int(mask.sum())} '
                         f'guided inliers, falling back')
            return None
        record.method = WALK
        return pose, matches, mask

    def _fallback_estimate(self, s, d, record):
        cfg = self.config
        k_s, k_d = self.features[s], self.features[d]
        matches = brute_force_match(k_s, k_d, cfg.snn_ratio)
        if len(matches) < cfg.min_inliers:
            record.detail = f'{len(matches)} tentative matches'
            return None
        if cfg.enable_adaptive_ranking:
            with self.guard.reading() as state:
                ordering = rank_correspondences(state.scores, s, d, matches)
        else:
            ordering = np.argsort(matches.ratio, kind='stable')
        x1, x2 = matches.points(k_s, k_d)
        try:
            result = estimate_pose_ransac(
                x1, x2, k_s.intrinsics, k_d.intrinsics, ordering,
                cfg.ransac_config(pair_seed(cfg.seed, s, d)))
        except NoModelError as e:
            record.iterations = e.iterations
            record.detail = str(e)
            return None
        record.iterations = result.iterations
        record.method = RANSAC_FALLBACK
        return result.pose, matches, result.inliers

    def _commit(self, s, d, pose, matches, mask, record):
        k_s, k_d = self.features[s], self.features[d]
        quality = float(mask.sum())/len(matches)
        with self.guard.writing() as state:
            try:
                state.graph.add_edge(s, d, pose, quality)
            except (DuplicateEdgeError, ZeroTranslationError) as e:
                record.method = SKIPPED
                record.detail = str(e)
                return False
            state.tracks.merge_inliers(s, d, matches.subset(mask))
            update_scores(state.scores, s, d, pose, matches, k_s, k_d,
                          self.config.inlier_threshold_px)
        record.inliers = int(mask.sum())
        return True

    def process(self, s, d):
        """Estimates and commits one view pair.

        :rtype: :class:`PairRecord`

        """
        start = time.perf_counter()
        record = PairRecord(s, d)
        estimate = None
        try:
            if self.config.walks_enabled:
                estimate = self._walk_estimate(s, d, record)
            if estimate is None:
                record.method = SKIPPED
                estimate = self._fallback_estimate(s, d, record)
            committed = (estimate is not None
                         and self._commit(s, d, *estimate, record))
        except SfmException as e:
            logger.warning(f'Pair ({s}, {d}) failed: {e}')
            record.method, record.detail = SKIPPED, str(e)
            committed = False
        except Exception as e:
            logger.exception(f'Pair ({s}, {d}) raised {type(e).__name__}')
            record.method = SKIPPED
            record.detail = f'{type(e).__name__}: {e}'
            committed = False
        if not self.config.deterministic:
            record.time_s = time.perf_counter() - start
        if committed and self.scene.has_ground_truth:
            pose, gt = estimate[0], self.scene.ground_truth_pose(s, d)
            record.rot_err_deg = rotation_error_deg(pose.rotation,
                                                    gt.rotation)
            record.trans_err_deg = translation_angle_error_deg(
                pose.translation, gt.translation)
        logger.debug(f'Pair ({s}, {d}): {record.method}, {record.inliers} '
                     f'inliers')
        return record

    def run(self, progress=None):
        """Processes all pairs.

        With more than one thread the pairs are served from a work queue in
        similarity order; each worker takes the next pair when it is done.

        :param progress: optional callable receiving each finished record
        :rtype:          :class:`RunRecord`

        """
        pairs = self.pairs()
        records = [None]*len(pairs)
        work = queue.Queue()
        for item in enumerate(pairs):
            work.put(item)

        def worker():
            while True:
                try:
                    num, (s, d) = work.get_nowait()
                except queue.Empty:
                    return
                records[num] = self.process(s, d)
                if progress is not None:
                    progress(records[num])

        n_threads = min(self.config.thread_count, max(len(pairs), 1))
        if n_threads == 1:
            worker()
        else:
            with ThreadPoolExecutor(max_workers=n_threads) as executor:
                for future in [executor.submit(worker)
                               for _ in range(n_threads)]:
                    future.result()
        g = self.guard
        logger.info(f'{len(pairs)} pairs: {len(g.graph)} edges, '
                    f'{g.graph.components} components, '
                    f'{g.tracks.n_tracks} tracks')
        return RunRecord(self.config, g.graph, g.tracks, g.scores, records)


def run_pipeline(scene, config=None, progress=None):
    """Builds the initial pose-graph of a scene.

    :type  scene:  :class:`sfmtools.scene.Scene`
    :type  config: :class:`PipelineConfig`
    :rtype:        :class:`RunRecord`

    """
    return PoseGraphBuilder(scene, config).run(progress)


def _num(x, fmt='.6f'):
    return '' if x is None or not math.isfinite(x) else format(x, fmt)


def _median(values):
    return float(np.median(values)) if len(values) else math.nan


def write_report(run, directory):
    """Writes the per-pair, summary and error distribution CSV files.

    ``pairs.csv`` has one row per processed pair in processing order.
    ``summary.csv`` has average, median and total time per method.
    ``errors.csv`` lists, per method, the sorted rotation and translation
    errors with their cumulative fraction.

    :return: tuple of the three file paths

    """
    os.makedirs(directory, exist_ok=True)
    paths = tuple(os.path.join(directory, name)
                  for name in (PAIRS_FILE, SUMMARY_FILE, ERRORS_FILE))
    records = run.records

    with open(paths[0], 'w', newline='') as f:
        out = csv.writer(f, lineterminator='\n')
        out.writerow(('pair', 'method', 'time_s', 'inliers', 'rot_err_deg',
                      'trans_err_deg'))
        for r in records:
            out.writerow((r.pair, r.method, _num(r.time_s), r.inliers,
                          _num(r.rot_err_deg), _num(r.trans_err_deg)))

    with open(paths[1], 'w', newline='') as f:
        out = csv.writer(f, lineterminator='\n')
        out.writerow(('method', 'pairs', 'avg_time_s', 'med_time_s',
                      'total_time_s', 'med_rot_err_deg',
                      'med_trans_err_deg'))
        for method in METHODS:
            rows = [r for r in records if r.method == method]
            if not rows:
                continue
            t = [r.time_s for r in rows]
            rot = [r.rot_err_deg for r in rows if math.isfinite(r.rot_err_deg)]
            trans = [r.trans_err_deg for r in rows
                     if math.isfinite(r.trans_err_deg)]
            out.writerow((method, len(rows), _num(float(np.mean(t))),
                          _num(_median(t)), _num(float(np.sum(t))),
                          _num(_median(rot)), _num(_median(trans))))

    with open(paths[2], 'w', newline='') as f:
        out = csv.writer(f, lineterminator='\n')
        out.writerow(('method', 'rank', 'rot_err_deg', 'trans_err_deg',
                      'fraction'))
        for method in (WALK, RANSAC_FALLBACK):
            rows = [r for r in records if r.method == method
                    and math.isfinite(r.rot_err_deg)]
            rot = sorted(r.rot_err_deg for r in rows)
            trans = sorted(r.trans_err_deg for r in rows)
            for rank, (a, b) in enumerate(zip(rot, trans), start=1):
                out.writerow((method, rank, _num(a), _num(b),
                              _num(rank/len(rows))))
    return paths


@dataclass
class SweepRow(object):
    """One cell of a heuristic parameter sweep."""

    lam: float
    max_depth: int
    pairs: int
    nodes_visited: float
    walks_tried: float
    success_rate: float


def build_sweep_graph(scene, min_similarity=0.4, corrupt_fraction=0.1,
                      max_noise_deg=0.25, seed=0):
    """Pose-graph of ground-truth edges with quality-dependent noise.

    Every pair above *min_similarity* gets an edge. The edge rotation and
    translation are perturbed by an angle that grows as the drawn quality
    drops (up to *max_noise_deg*); a *corrupt_fraction* of edges get a
    random pose and a low-to-medium quality instead.

    :rtype: :class:`sfmtools.posegraph.PoseGraph`

    """
    rng = np.random.default_rng(seed)
    graph = PoseGraph(scene.n_views)
    for i, j in ordered_pairs(scene.similarity, min_similarity):
        gt = scene.ground_truth_pose(i, j)
        if rng.uniform() < corrupt_fraction:
            pose = RelativePose.create(random_rotation(rng),
                                       rng.normal(size=3))
            quality = rng.uniform(0.2, 0.6)
        else:
            quality = rng.uniform(0.3, 1.0)
            angle = max_noise_deg*(1.0 - quality)/0.7*rng.uniform(0.5, 1.5)
            pose = RelativePose.create(
                random_rotation(rng, angle) @ gt.rotation,
                random_rotation(rng, angle) @ gt.translation)
        graph.add_edge(i, j, pose, quality)
    return graph


def sweep_heuristic(scene, lambdas, depths, config=None, corrupt_fraction=0.1,
                    max_noise_deg=0.25, max_pairs=None):
    """Walk search success and effort over a grid of heuristic settings.

    Runs the walk-based pose recovery on all pairs that have no edge in the
    sweep graph but share at least ``config.min_inliers`` ground-truth
    correspondences. A pair succeeds if a walk is accepted and its rotation
    is within 2 degrees of the truth.

    :param lambdas:   quality weights to try
    :param depths:    maximum walk lengths to try
    :param max_pairs: evaluate at most this many pairs (evenly spaced)
    :rtype:           list of :class:`SweepRow`

    """
    config = config or PipelineConfig()
    graph = build_sweep_graph(scene, config.min_similarity, corrupt_fraction,
                              max_noise_deg, config.seed)
    problems = []
    for i in range(scene.n_views):
        for j in range(i + 1, scene.n_views):
            if graph.has_edge(i, j):
                continue
            if len(scene.ground_truth_inliers(i, j)) < config.min_inliers:
                continue
            corr, _ = scene.tentative_correspondences(i, j)
            x1, x2 = corr.points(scene.features[i], scene.features[j])
            problems.append((i, j, x1, x2, scene.ground_truth_pose(i, j)))
    if max_pairs is not None and len(problems) > max_pairs:
        pick = np.linspace(0, len(problems) - 1, max_pairs).round()
        problems = [problems[int(k)] for k in pick]
    logger.info(f'Sweep graph: {len(graph)} edges, {len(problems)} pairs')

    rows = []
    for lam in lambdas:
        for depth in depths:
            tcfg = replace(config.traversal_config(), lam=float(lam),
                           max_depth=int(depth))
            nodes, walks, good = [], [], 0
            for i, j, x1, x2, gt in problems:
                k1 = scene.features[i].intrinsics
                k2 = scene.features[j].intrinsics
                try:
                    outcome = pose_from_posegraph(graph, i, j, tcfg,
                                                  scene.similarity, x1, x2,
                                                  k1, k2)
                except NotVisibleError:
                    nodes.append(0)
                    walks.append(0)
                    continue
                nodes.append(outcome.nodes_visited)
                walks.append(outcome.walks_tried)
                if (outcome.success
                        and rotation_error_deg(outcome.pose.rotation,
                                               gt.rotation)
                        < SWEEP_ACCURACY_DEG):
                    good += 1
            n = len(problems)
            rows.append(SweepRow(float(lam), int(depth), n,
                                 float(np.mean(nodes)) if n else 0.0,
                                 float(np.mean(walks)) if n else 0.0,
                                 good/n if n else 0.0))
            logger.info(f'lambda={lam} depth={depth}: '
                        f'success {rows[-1].success_rate:.3f}, nodes '
                        f'{rows[-1].nodes_visited:.1f}')
    return rows


def write_sweep(rows, path):
    """Writes sweep rows as CSV."""
    with open(path, 'w', newline='') as f:
        out = csv.writer(f, lineterminator='\n')
        out.writerow(('lambda', 'max_depth', 'pairs', 'nodes_visited',
                      'walks_tried', 'success_rate'))
        for r in rows:
            out.writerow((_num(r.lam, '.3g'), r.max_depth, r.pairs,
                          _num(r.nodes_visited, '.3f'),
                          _num(r.walks_tried, '.3f'),
                          _num(r.success_rate, '.4f')))


@dataclass
class BenchRow(object):
    """One benchmark measurement (medians over trials where repeated)."""

    name: str
    time_s: float
    matches: int = 0
    correct: int = 0
    sampson_evaluations: int = 0
    descriptor_evaluations: int = 0
    iterations: float = 0.0
    success_rate: float = math.nan
    prefix_inlier_ratio: float = math.nan


def bench_matcher(n_keypoints=8000, seed=0, config=None):
    """Times epipolar hashing against brute-force matching on one pair.

    :return: rows for ``epipolar_hashing``, ``guided_brute_force`` and
             ``brute_force``
    :rtype:  list of :class:`BenchRow`

    """
    config = config or PipelineConfig()
    pair = generate_pair(PairConfig(seed=seed, n_keypoints=n_keypoints))
    k1, k2 = pair.features1, pair.features2
    f = fundamental_from_pose(pair.pose, k1.intrinsics, k2.intrinsics)
    truth = pair.matches.pairs()
    mcfg = config.match_config()
    runs = (('epipolar_hashing',
             lambda c: guided_match(k1, k2, f, mcfg, c)),
            ('guided_brute_force',
             lambda c: brute_force_guided_match(k1, k2, f, mcfg, c)),
            ('brute_force',
             lambda c: brute_force_match(k1, k2, config.snn_ratio, c)))
    rows = []
    for name, run in runs:
        counter = MatchCounter()
        start = time.perf_counter()
        matches = run(counter)
        elapsed = time.perf_counter() - start
        rows.append(BenchRow(name, elapsed, len(matches),
                             len(matches.pairs() & truth),
                             counter.sampson_evaluations,
                             counter.descriptor_evaluations))
        logger.info(f'{name}: {len(matches)} matches in {elapsed:.3f} s')
    return rows


def ranking_triplet(scene, config=None, views=(0, 1, 2)):
    """Correspondence orderings of the third pair of a view triplet.

    The pairs (a, b) and (b, c) are matched and their keypoint scores
    updated with the ground-truth poses; then the pair (a, c) is matched
    and its correspondences are ordered uniformly at random, by ratio test
    value and by adaptive score.

    :return: tuple (correspondences of (a, c), inlier labels, dict of
             orderings keyed ``uniform``, ``snn``, ``adaptive``)

    """
    config = config or PipelineConfig()
    a, b, c = views
    feats = scene.features
    scores = ScoreStore({v: len(feats[v]) for v in views})
    for i, j in ((a, b), (b, c)):
        matches = brute_force_match(feats[i], feats[j], config.snn_ratio)
        update_scores(scores, i, j, scene.ground_truth_pose(i, j), matches,
                      feats[i], feats[j], config.inlier_threshold_px)
    matches = brute_force_match(feats[a], feats[c], config.snn_ratio)
    labels = scene.is_inlier(a, c, matches)
    rng = np.random.default_rng(pair_seed(config.seed, a, c))
    orderings = dict(uniform=rng.permutation(len(matches)),
                     snn=np.argsort(matches.ratio, kind='stable'),
                     adaptive=rank_correspondences(scores, a, c, matches))
    return matches, labels, orderings


def bench_ranking(trials=10, seed=0, outlier_fraction=0.7, n_points=600,
                  prefix=50, config=None):
    """PROSAC effort under uniform, ratio-test and adaptive orderings.

    Each trial generates a three-view arc scene and estimates the pose of
    its outer pair with each ordering.

    :param prefix: length of the ordered prefix whose inlier share is
                   reported
    :rtype:        list of :class:`BenchRow`

    """
    config = config or PipelineConfig()
    results = {name: ([], [], [], []) for name in ('uniform', 'snn',
                                                    'adaptive')}
    for trial in range(trials):
        scene = generate(SceneConfig(seed=seed + trial, n_cameras=3,
                                     layout='arc', arc_degrees=20.0,
                                     n_points=n_points,
                                     outlier_fraction=outlier_fraction))
        matches, labels, orderings = ranking_triplet(scene, config)
        k1, k2 = scene.features[0], scene.features[2]
        x1, x2 = matches.points(k1, k2)
        for name, ordering in orderings.items():
            iterations, times, ok, ratio = results[name]
            ratio.append(float(labels[ordering[:prefix]].mean())
                         if len(ordering) else 0.0)
            start = time.perf_counter()
            try:
                res = estimate_pose_ransac(
                    x1, x2, k1.intrinsics, k2.intrinsics, ordering,
                    config.ransac_config(pair_seed(config.seed, trial, 2)))
                iterations.append(res.iterations)
                ok.append(1.0)
            except NoModelError as e:
                iterations.append(e.iterations)
                ok.append(0.0)
            times.append(time.perf_counter() - start)
    rows = []
    for name, (iterations, times, ok, ratio) in results.items():
        rows.append(BenchRow(name, _median(times),
                             iterations=_median(iterations),
                             success_rate=float(np.mean(ok)),
                             prefix_inlier_ratio=_median(ratio)))
    return rows


def write_bench(rows, path):
    """Writes benchmark rows as CSV."""
    with open(path, 'w', newline='') as f:
        out = csv.writer(f, lineterminator='\n')
        out.writerow(('name', 'time_s', 'matches', 'correct',
                      'sampson_evaluations', 'descriptor_evaluations',
                      'iterations', 'success_rate', 'prefix_inlier_ratio'))
        for r in rows:
            out.writerow((r.name, _num(r.time_s), r.matches, r.correct,
                          r.sampson_evaluations, r.descriptor_evaluations,
                          _num(r.iterations, '.1f'),
                          _num(r.success_rate, '.3f'),
                          _num(r.prefix_inlier_ratio, '.3f')))

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

"""Robust relative pose estimation with adaptive correspondence ranking.

Every keypoint carries a score, the running product of the square roots of
its outlier probabilities in the image pairs it was verified in. Scores
start at 1; a keypoint that was an inlier somewhere gets a low score. A
correspondence is ranked by the product of its two keypoint scores, so
PROSAC draws first from correspondences whose keypoints were already
verified.

"""

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.stats import binom

from sfmtools import (SfmException, DegenerateSampleError, NoModelError,
                      NoCheiralitySupportError, InsufficientInliersError,
                      ConfigInvalidError)
from sfmtools.geom import (fundamental_from_essential, fundamental_from_pose,
                           sampson_distances, decompose_essential)
from sfmtools.posegraph import refine_pose_irls

__all__ = ['RansacConfig', 'RansacResult', 'ScoreStore', 'ProsacSampler',
           'minimal_pose_solver', 'prosac_sampler', 'estimate_pose_ransac',
           'point_outlier_probability', 'update_scores',
           'rank_correspondences']

logger = logging.getLogger(__name__)

SAMPLE_SIZE = 5

# Lower bound of keypoint scores
SCORE_FLOOR = 1e-12

# Sample points closer than this (pixels) make a sample degenerate
MIN_SAMPLE_SEPARATION = 1.0


@dataclass
class RansacConfig(object):
    """Robust estimation parameters.

    :param inlier_threshold:  Sampson threshold in pixels
    :param confidence:        probability of having drawn an all-inlier
                              sample when stopping
    :param max_iterations:    hypothesis round limit
    :param min_inliers:       inliers required for a model
    :param growth_max:        PROSAC growth horizon (samples after which
                              sampling is uniform)
    :param local_optimization: refine each new best model by IRLS
    :param non_random_beta:   probability of a random correspondence being
                              consistent with a wrong model
    :param non_random_psi:    significance of the non-randomness test
    :param seed:              sampler seed

    """

    inlier_threshold: float = 2.0
    confidence: float = 0.99
    max_iterations: int = 5000
    min_inliers: int = 20
    growth_max: int = 200000
    local_optimization: bool = True
    non_random_beta: float = 0.05
    non_random_psi: float = 0.05
    seed: int = 0

    def validate(self):
        if self.inlier_threshold <= 0:
            raise ConfigInvalidError('Inlier threshold must be positive')
        if not 0 < self.confidence < 1:
            raise ConfigInvalidError(f'Confidence outside (0, 1): '
                                     f'{self.confidence}')
        if self.max_iterations < 1:
            raise ConfigInvalidError('max_iterations must be >= 1')
        if self.min_inliers < SAMPLE_SIZE:
            raise ConfigInvalidError(f'min_inliers must be >= {SAMPLE_SIZE}')


@dataclass
class RansacResult(object):
    """Pose, inlier mask and hypothesis rounds of a robust estimate."""

    pose: object
    inliers: np.ndarray
    iterations: int

    @property
    def inlier_count(self):
        return int(self.inliers.sum())


class ScoreStore(object):
    """Per-keypoint correspondence scores of all views.

    :param sizes: number of keypoints of each view (sequence or dict)

    """

    def __init__(self, sizes):
        if not isinstance(sizes, dict):
            sizes = dict(enumerate(sizes))
        self._scores = {v: np.ones(n) for v, n in sizes.items()}

    def __contains__(self, view):
        return view in self._scores

    def scores(self, view):
        """Score array of a view (live, not a copy)."""
        try:
            return self._scores[view]
        except KeyError:
            raise SfmException(f'No scores for view {view}')

    def snapshot(self, *views):
        """Copies of the score arrays of the given views."""
        return {v: self.scores(v).copy() for v in views}


# Monomial exponents of the polynomial bases of the minimal solver
_DEG1 = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)]
_DEG2 = [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2),
         (1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)]
_DEG3 = [(3, 0, 0), (2, 1, 0), (2, 0, 1), (1, 2, 0), (1, 1, 1), (1, 0, 2),
         (0, 3, 0), (0, 2, 1), (0, 1, 2), (0, 0, 3)] + _DEG2


def _product_tensor(left, right, out):
    t = np.zeros((len(left), len(right), len(out)))
    index = {e: k for k, e in enumerate(out)}
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            t[i, j, index[tuple(x + y for x, y in zip(a, b))]] = 1.0
    return t


_MUL11 = _product_tensor(_DEG1, _DEG1, _DEG2)
_MUL21 = _product_tensor(_DEG2, _DEG1, _DEG3)


def _homogeneous(n):
    n = np.asarray(n, dtype=float).reshape(-1, 2)
    return np.column_stack((n, np.ones(len(n))))


def minimal_pose_solver(n1, n2):
    """Essential matrices consistent with five normalized correspondences.

    E is written as ``x X + y Y + z Z + W`` over the null space of the
    epipolar constraints. The cubic trace constraint and the determinant
    give ten cubic equations in (x, y, z); after elimination of the cubic
    monomials, the solutions are eigenvectors of the action matrix of
    multiplication by x.

    :param n1: (5, 2) normalized coordinates in the first view
    :param n2: (5, 2) normalized coordinates in the second view
    :return:   list of unit-norm essential matrices (up to 10)
    :raises:   :exc:`sfmtools.DegenerateSampleError`

    """
    q1, q2 = _homogeneous(n1), _homogeneous(n2)
    if len(q1) != SAMPLE_SIZE or len(q2) != SAMPLE_SIZE:
        raise DegenerateSampleError(f'Need {SAMPLE_SIZE} correspondences')
    a = np.einsum('ni,nj->nij', q2, q1).reshape(SAMPLE_SIZE, 9)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    if s[-1] < 1e-12*s[0]:
        raise DegenerateSampleError('Epipolar constraints are dependent')
    basis = vt[5:].reshape(4, 3, 3)
    e = np.moveaxis(basis, 0, -1)

    eet = np.einsum('abi,cbj,ijk->ack', e, e, _MUL11)
    trace = np.einsum('aak->k', eet)
    eete = np.einsum('aci,cdj,ijk->adk', eet, e, _MUL21)
    tre = np.einsum('i,adj,ijk->adk', trace, e, _MUL21)
    cubic = (2.0*eete - tre).reshape(9, 20)

    def mul(p, q):
        return np.einsum('i,j,ijk->k', p, q, _MUL11)

    def mul3(p2, q):
        return np.einsum('i,j,ijk->k', p2, q, _MUL21)

    det = (mul3(mul(e[1, 1], e[2, 2]) - mul(e[1, 2], e[2, 1]), e[0, 0])
           - mul3(mul(e[1, 0], e[2, 2]) - mul(e[1, 2], e[2, 0]), e[0, 1])
           + mul3(mul(e[1, 0], e[2, 1]) - mul(e[1, 1], e[2, 0]), e[0, 2]))
    m = np.vstack((cubic, det))

    try:
        if np.linalg.cond(m[:, :10]) > 1e14:
            raise np.linalg.LinAlgError('ill-conditioned')
        b = np.linalg.solve(m[:, :10], m[:, 10:])
    except np.linalg.LinAlgError:
        raise DegenerateSampleError('Elimination template is singular')

    action = np.zeros((10, 10))
    action[:6] = -b[:6]
    action[6, 0] = action[7, 1] = action[8, 2] = action[9, 6] = 1.0
    values, vectors = np.linalg.eig(action)

    solutions = []
    for k in range(10):
        if abs(values[k].imag) > 1e-8*max(1.0, abs(values[k].real)):
            continue
        v = vectors[:, k].real
        if abs(v[9]) < 1e-12*np.linalg.norm(v):
            continue
        x, y, z = v[6:9]/v[9]
        essential = x*basis[0] + y*basis[1] + z*basis[2] + basis[3]
        norm = np.linalg.norm(essential)
        if norm > 0:
            solutions.append(essential/norm)
    return solutions


class ProsacSampler(object):
    """Progressive sampler over a ranked list of correspondences.

    Sample *t* (starting at 1) is drawn from the top ``n(t)`` ranked
    correspondences and always contains the ``n(t)``-th one, where ``n(t)``
    grows along the PROSAC schedule. The first sample is the top
    *sample_size* correspondences; after the schedule reaches all points,
    samples are uniform.

    :param n_points:    number of correspondences
    :param sample_size: minimal sample size
    :param growth_max:  number of samples after which all points are used
    :param rng:         numpy random generator

    """

    def __init__(self, n_points, sample_size=SAMPLE_SIZE, growth_max=200000,
                 rng=None):
        if n_points < sample_size:
            raise DegenerateSampleError(f'{n_points} correspondences, need '
                                        f'{sample_size}')
        self._n = n_points
        self._m = sample_size
        self._rng = rng if rng is not None else np.random.default_rng(0)
        m = sample_size
        t_n = float(growth_max)
        for i in range(m):
            t_n *= (m - i)/(n_points - i)
        schedule = [1]
        for k in range(m, n_points):
            t_next = t_n*(k + 1)/(k + 1 - m)
            schedule.append(schedule[-1] + int(math.ceil(t_next - t_n)))
            t_n = t_next
        self._schedule = np.array(schedule, dtype=np.int64)

    @property
    def schedule(self):
        """Iteration by which the top ``m + k`` points are in use, per k."""
        return self._schedule

    def prefix(self, t):
        """Size of the ranked prefix sampled at iteration *t*."""
        pos = int(np.searchsorted(self._schedule, t, side='left'))
        return min(self._m + pos, self._n)

    def sample(self, t):
        """Positions (into the ranking) of the sample of iteration *t*."""
        m = self._m
        if t > self._schedule[-1]:
            return self._rng.choice(self._n, size=m, replace=False)
        k = self.prefix(t)
        if k == m:
            return np.arange(m)
        head = self._rng.choice(k - 1, size=m - 1, replace=False)
        return np.append(head, k - 1)


def prosac_sampler(ordering, iteration, sample_size=SAMPLE_SIZE, rng=None,
                   growth_max=200000):
    """Correspondence indices of one PROSAC sample.

    :param ordering:  correspondence indices, best first
    :param iteration: 1-based iteration number
    :return:          array of *sample_size* correspondence indices

    """
    ordering = np.asarray(ordering)
    sampler = ProsacSampler(len(ordering), sample_size, growth_max, rng)
    return ordering[sampler.sample(iteration)]


def _confidence_bound(inliers, n, m, confidence):
    # inlier share of the points outside the sample, kept below 1
    share = np.clip((np.asarray(inliers, dtype=float) - m)/(n - m),
                    0.0, 1.0 - 1.0/n)
    p_good = share**m
    with np.errstate(divide='ignore'):
        need = np.where(p_good > 0.0,
                        math.log(1.0 - confidence)/np.log1p(-p_good),
                        np.inf)
    return np.ceil(need)


def _non_random(inliers, n, m, config):
    return inliers >= m + binom.isf(config.non_random_psi, n - m,
                                    config.non_random_beta) + 1


def _stop_iteration(sorted_mask, schedule, m, config):
    """Iteration count after which the current best model is final.

    The confidence bound over all correspondences always applies. A ranked
    prefix of at least ``max(min_inliers, 4 m)`` points stops the run
    earlier once the samples drawn inside it reach the prefix's own bound,
    provided the inlier counts of the prefix and of all correspondences
    pass the non-randomness test. No model stops the run before the bound
    of a prefix of that minimum size whose points are all inliers.

    """
    n_total = len(sorted_mask)
    n_min = max(config.min_inliers, 4*m)
    floor = float(_confidence_bound(n_min - 1, n_min, m, config.confidence))
    inl_all = int(sorted_mask.sum())
    stop = float(_confidence_bound(inl_all, n_total, m, config.confidence))
    if n_total > n_min and _non_random(inl_all, n_total, m, config):
        n = np.arange(n_min, n_total)
        inl = np.cumsum(sorted_mask)[n - 1]
        need = _confidence_bound(inl, n, m, config.confidence)
        within = np.asarray(schedule, dtype=float)[n - m]
        reachable = _non_random(inl, n, m, config) & (within >= need)
        if reachable.any():
            stop = min(stop, float(need[reachable].min()))
    return max(stop, floor)


def _sample_degenerate(x1, x2):
    for x in (x1, x2):
        d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
        d[np.diag_indices(len(x))] = np.inf
        if d.min() < MIN_SAMPLE_SEPARATION:
            return True
    return False


def estimate_pose_ransac(x1, x2, k1, k2, ordering=None, config=None):
    """Relative pose by PROSAC over ranked correspondences.

    :param x1:       (N, 2) pixels in the first view
    :param x2:       (N, 2) pixels in the second view
    :param k1:       intrinsics of the first view
    :param k2:       intrinsics of the second view
    :param ordering: correspondence indices best first (None keeps input
                     order)
    :param config:   estimation parameters
    :type  config:   :class:`RansacConfig`
    :rtype:          :class:`RansacResult`
    :raises:         :exc:`sfmtools.NoModelError`

    """
    if config is None:
        config = RansacConfig()
    x1 = np.asarray(x1, dtype=float).reshape(-1, 2)
    x2 = np.asarray(x2, dtype=float).reshape(-1, 2)
    n = len(x1)
    if n < max(SAMPLE_SIZE, config.min_inliers):
        raise NoModelError(f'{n} correspondences, need '
                           f'{max(SAMPLE_SIZE, config.min_inliers)}', 0)
    ordering = np.arange(n) if ordering is None else np.asarray(ordering)
    rng = np.random.default_rng(config.seed)
    sampler = ProsacSampler(n, SAMPLE_SIZE, config.growth_max, rng)
    n1, n2 = k1.normalize(x1), k2.normalize(x2)
    mu = config.inlier_threshold

    best_pose, best_mask, best_count = None, None, -1
    stop_at = math.inf
    t = 0
    while t < config.max_iterations and t < stop_at:
        t += 1
        sample = ordering[sampler.sample(t)]
        if _sample_degenerate(x1[sample], x2[sample]):
            continue
        try:
            candidates = minimal_pose_solver(n1[sample], n2[sample])
        except DegenerateSampleError:
            continue
        improved = None
        for e in candidates:
            f = fundamental_from_essential(e, k1, k2)
            mask = sampson_distances(x1, x2, f) < mu
            count = int(mask.sum())
            if count > best_count and (improved is None
                                       or count > improved[1]):
                improved = (e, count, mask)
        if improved is None:
            continue
        e, count, mask = improved
        try:
            pose = decompose_essential(e, x1[mask], x2[mask], k1, k2, rng=rng)
        except NoCheiralitySupportError:
            continue
        if config.local_optimization and count >= config.min_inliers:
            try:
                refined = refine_pose_irls(pose, x1, x2, k1, k2, mu)
            except InsufficientInliersError:
                refined = pose
            f = fundamental_from_pose(refined, k1, k2)
            refined_mask = sampson_distances(x1, x2, f) < mu
            if refined_mask.sum() >= count:
                pose, mask, count = refined, refined_mask, \
                    int(refined_mask.sum())
        best_pose, best_mask, best_count = pose, mask, count
        stop_at = _stop_iteration(best_mask[ordering], sampler.schedule,
                                  SAMPLE_SIZE, config)
        logger.debug(f'Iteration {t}: {count}/{n} inliers, stop at '
                     f'{stop_at}')

    if best_pose is None or best_count < config.min_inliers:
        raise NoModelError(f'Best model has {max(best_count, 0)} inliers, '
                           f'need {config.min_inliers}', t)
    return RansacResult(best_pose, best_mask, t)


def point_outlier_probability(residual, mu):
    """Probability of a correspondence being an outlier, ``min(r²/mu², 1)``.

    Non-finite residuals give probability 1.

    """
    r = np.asarray(residual, dtype=float)
    with np.errstate(invalid='ignore'):
        p = np.minimum(r*r/(mu*mu), 1.0)
    return np.where(np.isfinite(p), p, 1.0)


def update_scores(store, view_i, view_j, pose, correspondences, k_i, k_j,
                  mu):
    """Updates keypoint scores with the residuals of an accepted pose.

    Both keypoints of every correspondence have their score multiplied by
    the square root of the correspondence's outlier probability; scores
    are floored at 1e-12.

    :param store:           score store
    :type  store:           :class:`ScoreStore`
    :param pose:            accepted pose from view_i to view_j
    :param correspondences: :class:`sfmtools.matcher.Correspondences`
    :param k_i:             features of view_i
    :param k_j:             features of view_j
    :param mu:              inlier threshold in pixels

    """
    corr = correspondences
    if not len(corr):
        return
    x1, x2 = corr.points(k_i, k_j)
    f = fundamental_from_pose(pose, k_i.intrinsics, k_j.intrinsics)
    factor = np.sqrt(point_outlier_probability(sampson_distances(x1, x2, f),
                                               mu))
    for view, idx in ((view_i, corr.idx1), (view_j, corr.idx2)):
        scores = store.scores(view)
        np.multiply.at(scores, idx, factor)
        scores[idx] = np.maximum(scores[idx], SCORE_FLOOR)


def rank_correspondences(store, view_i, view_j, correspondences):
    """Correspondence indices ordered for sampling, best first.

    Sorted by ascending product of the two keypoint scores, ties broken by
    ascending ratio-test value and then by index.

    """
    corr = correspondences
    product = store.scores(view_i)[corr.idx1]*store.scores(view_j)[corr.idx2]
    return np.lexsort((np.arange(len(corr)), corr.ratio, product))

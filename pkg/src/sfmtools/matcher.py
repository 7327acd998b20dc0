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

"""Tentative correspondences, with and without a known pose.

:func:`guided_match` hashes the keypoints of the second image by the angle
of their epipolar line in the first image. All epipolar lines of the first
image pass through its epipole, so the candidates of a point are found by
looking up the bins around the angle of the line joining the point and the
epipole. The lookup is widened by a bound on the angular offset of any
candidate within the Sampson threshold, which makes the result identical to
scanning all pairs (:func:`brute_force_guided_match`).

"""

from dataclasses import dataclass
import json
import logging
import math
import os.path

import numpy as np

from sfmtools import (SfmException, DegenerateFError, ZeroLineError,
                      EpipoleCoincidentError, DimensionMismatchError,
                      ConfigInvalidError)
from sfmtools.geom import CameraIntrinsics, epipolar_terms, sampson_from_terms

__all__ = ['ImageFeatures', 'Correspondences', 'MatchConfig', 'MatchCounter',
           'EpipolarHashTable', 'valid_angle_interval', 'epipolar_angle',
           'build_hash', 'candidate_bins', 'adaptive_snn_threshold',
           'guided_match', 'brute_force_guided_match', 'brute_force_match',
           'load_features', 'save_features', 'load_global_descriptors']

logger = logging.getLogger(__name__)

# Line direction norms below this are treated as zero
LINE_EPS = 1e-14

# Angular margin (radians) added to candidate lookups
ANGLE_MARGIN = 1e-9

# Pool sizes anchoring the adaptive ratio threshold
SNN_POOL_LOW = 5
SNN_POOL_HIGH = 8000

# Rows per block in all-pairs scans
BLOCK_ROWS = 256


@dataclass(eq=False)
class ImageFeatures(object):
    """Keypoints of one image.

    :param positions:   (N, 2) pixel coordinates
    :param descriptors: (N, D) descriptor vectors
    :param scores:      (N,) detector scores
    :param width:       image width in pixels
    :param height:      image height in pixels
    :param intrinsics:  camera intrinsics
    :type  intrinsics:  :class:`sfmtools.geom.CameraIntrinsics`

    """

    positions: np.ndarray
    descriptors: np.ndarray
    scores: np.ndarray
    width: float
    height: float
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        self.descriptors = np.asarray(self.descriptors, dtype=float)
        if self.descriptors.ndim != 2:
            self.descriptors = self.descriptors.reshape(len(self.positions),
                                                        -1)
        self.scores = np.asarray(self.scores, dtype=float).reshape(-1)
        n = len(self.positions)
        if len(self.descriptors) != n or len(self.scores) != n:
            raise DimensionMismatchError(f'{n} keypoints but '
                                         f'{len(self.descriptors)} '
                                         f'descriptors and {len(self.scores)}'
                                         f' scores')
        if self.width <= 0 or self.height <= 0:
            raise SfmException(f'Illegal image size {self.width}x'
                               f'{self.height}')

    def __len__(self):
        return len(self.positions)

    @property
    def descriptor_dim(self):
        return self.descriptors.shape[1]


@dataclass(eq=False)
class Correspondences(object):
    """Index pairs into two keypoint sets.

    :param idx1:     (M,) keypoint indices in the first image
    :param idx2:     (M,) keypoint indices in the second image
    :param distance: (M,) descriptor distances
    :param ratio:    (M,) nearest to second-nearest distance ratios (0 when
                     there was no competing candidate)

    """

    idx1: np.ndarray
    idx2: np.ndarray
    distance: np.ndarray
    ratio: np.ndarray

    def __post_init__(self):
        self.idx1 = np.asarray(self.idx1, dtype=np.int64).reshape(-1)
        self.idx2 = np.asarray(self.idx2, dtype=np.int64).reshape(-1)
        self.distance = np.asarray(self.distance, dtype=float).reshape(-1)
        self.ratio = np.asarray(self.ratio, dtype=float).reshape(-1)
        n = len(self.idx1)
        if not len(self.idx2) == len(self.distance) == len(self.ratio) == n:
            raise DimensionMismatchError('Correspondence arrays differ in '
                                         'length')

    @classmethod
    def empty(cls):
        return cls(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0))

    @classmethod
    def from_pairs(cls, idx1, idx2):
        """Correspondences without descriptor information."""
        n = len(idx1)
        return cls(idx1, idx2, np.zeros(n), np.zeros(n))

    def __len__(self):
        return len(self.idx1)

    def subset(self, sel):
        """Correspondences selected by a boolean mask or index array."""
        return Correspondences(self.idx1[sel], self.idx2[sel],
                               self.distance[sel], self.ratio[sel])

    def points(self, k1, k2):
        """Pixel coordinates (x1, x2) of the correspondences."""
        return k1.positions[self.idx1], k2.positions[self.idx2]

    def pairs(self):
        return set(zip(self.idx1.tolist(), self.idx2.tolist()))


@dataclass
class MatchConfig(object):
    """Matching parameters.

    :param inlier_threshold:   Sampson threshold in pixels
    :param bin_count:          number of epipolar hash bins
    :param snn_base:           ratio threshold at large candidate pools
    :param adaptive_snn:       scale the ratio threshold with the pool size
    :param snn_ratio:          fixed ratio threshold of pose-free matching
    :param single_candidate_max_distance: descriptor distance gate when
                               only one candidate passes the epipolar test

    """

    inlier_threshold: float = 2.0
    bin_count: int = 45
    snn_base: float = 0.9
    adaptive_snn: bool = True
    snn_ratio: float = 0.8
    single_candidate_max_distance: float = 0.5

    def validate(self):
        if self.inlier_threshold <= 0:
            raise ConfigInvalidError('Inlier threshold must be positive')
        if self.bin_count < 1:
            raise ConfigInvalidError('Bin count must be >= 1')
        if not 0 < self.snn_base <= 1 or not 0 < self.snn_ratio <= 1:
            raise ConfigInvalidError('Ratio thresholds must be in (0, 1]')


@dataclass
class MatchCounter(object):
    """Work counters of a matcher run."""

    sampson_evaluations: int = 0
    descriptor_evaluations: int = 0


@dataclass(frozen=True, eq=False)
class EpipolarHashTable(object):
    """Keypoints of the second image binned by epipolar line angle.

    Bin *k* covers angles ``[a + k*w, a + (k+1)*w)`` with
    ``w = (b - a)/bin_count``. Keypoint indices are stored sorted by bin;
    ``order[offsets[k]:offsets[k+1]]`` are the occupants of bin *k*.
    Keypoints without a defined line angle (at the second image's epipole)
    are kept apart in *unbinned*, they are candidates of every point.

    """

    order: np.ndarray
    offsets: np.ndarray
    angle_min: float
    angle_max: float
    bin_count: int
    epipole: np.ndarray
    min_normal_sq: float
    unbinned: np.ndarray
    size: int

    @property
    def bin_width(self):
        return (self.angle_max - self.angle_min)/self.bin_count

    def bin_of(self, rel):
        """Bin indices of angles given relative to *angle_min*."""
        k = np.floor(np.asarray(rel)/self.bin_width)
        return np.clip(k, 0, self.bin_count - 1).astype(np.int64)

    def occupants(self, k):
        return self.order[self.offsets[k]:self.offsets[k + 1]]

    @property
    def bins(self):
        """List of keypoint index arrays, one per bin."""
        return [self.occupants(k) for k in range(self.bin_count)]


def _line_angle(la, lb):
    """Angle in [0, pi) of lines with normal (la, lb)."""
    angle = np.mod(np.arctan2(la, -lb), np.pi)
    return np.where(angle >= np.pi, 0.0, angle)


def _epipoles(f):
    u, _, vt = np.linalg.svd(np.asarray(f, dtype=float))
    return vt[2], u[:, 2]


def _is_finite_point(e):
    return abs(e[2]) > 1e-15*np.linalg.norm(e)


def valid_angle_interval(f, width2, height2):
    """Range of epipolar line angles in the first image.

    The range is spanned by the lines of the two corners of the second
    image that are outermost as seen from its epipole. It is the full
    ``[0, pi)`` when the second image contains its epipole. The interval
    is oriented to contain the line of the image center, so *b* may exceed
    pi when it straddles the 0/pi seam.

    :param       f: fundamental matrix
    :param  width2: width of the second image
    :param height2: height of the second image
    :return:        tuple (a, b) in radians
    :raises:        :exc:`sfmtools.DegenerateFError`

    """
    f = np.asarray(f, dtype=float)
    _, e2 = _epipoles(f)
    corners = np.array([[0, 0], [width2, 0], [0, height2], [width2, height2]],
                       dtype=float)
    center = np.array([width2/2.0, height2/2.0])
    if _is_finite_point(e2):
        e = e2[:2]/e2[2]
        if 0 <= e[0] <= width2 and 0 <= e[1] <= height2:
            return 0.0, math.pi
        c, v = center - e, corners - e
        side = np.arctan2(c[0]*v[:, 1] - c[1]*v[:, 0], v @ c)
    else:
        # epipolar lines of the second image are parallel to e2
        side = e2[0]*corners[:, 1] - e2[1]*corners[:, 0]
    points = np.vstack((corners[[np.argmin(side), np.argmax(side)]], center))
    lines = points @ f[:2, :] + f[2, :]
    norms = np.hypot(lines[:, 0], lines[:, 1])
    scale = max(np.abs(f).max(), 1e-300)
    if not np.all(norms > LINE_EPS*scale):
        raise DegenerateFError('Corner epipolar lines vanish')
    lo, hi, mid = _line_angle(lines[:, 0], lines[:, 1])
    width = (hi - lo) % math.pi
    if (mid - lo) % math.pi > width:
        lo, width = hi, (lo - hi) % math.pi
    return float(lo), float(lo + width)


def epipolar_angle(p, f):
    """Angle of the first-image epipolar line of a second-image point.

    :param p: (x, y) pixel in the second image
    :param f: fundamental matrix
    :return:  angle in [0, pi)
    :raises:  :exc:`sfmtools.ZeroLineError`

    """
    _, ftx2 = epipolar_terms(np.zeros((1, 2)), np.reshape(p, (1, 2)), f)
    la, lb = ftx2[0, 0], ftx2[0, 1]
    if math.hypot(la, lb) < LINE_EPS:
        raise ZeroLineError(f'Epipolar line of {tuple(p)} has no direction')
    return float(_line_angle(la, lb))


def build_hash(positions, f, bin_count, width2, height2):
    """Bins second-image keypoints by their epipolar line angle.

    :param positions: (N, 2) keypoint pixels of the second image
    :param         f: fundamental matrix
    :param bin_count: number of bins
    :rtype:           :class:`EpipolarHashTable`

    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    a, b = valid_angle_interval(f, width2, height2)
    b = max(b, a + 1e-12)
    e1, _ = _epipoles(f)
    _, ftx2 = epipolar_terms(np.zeros((0, 2)), positions, f)
    normal_sq = ftx2[:, 0]**2 + ftx2[:, 1]**2
    defined = np.sqrt(normal_sq) >= LINE_EPS
    idx = np.flatnonzero(defined)
    rel = np.mod(_line_angle(ftx2[idx, 0], ftx2[idx, 1]) - a, math.pi)
    width = (b - a)/bin_count
    k = np.clip(np.floor(rel/width), 0, bin_count - 1).astype(np.int64)
    order = np.argsort(k, kind='stable')
    offsets = np.zeros(bin_count + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(np.bincount(k, minlength=bin_count))
    return EpipolarHashTable(
        order=idx[order], offsets=offsets, angle_min=a, angle_max=b,
        bin_count=bin_count, epipole=e1/np.linalg.norm(e1),
        min_normal_sq=float(normal_sq[idx].min()) if len(idx) else 0.0,
        unbinned=np.flatnonzero(~defined), size=len(positions))


def _query_angle(p1, table):
    e = table.epipole
    x, y = float(p1[0]), float(p1[1])
    if _is_finite_point(e):
        r = math.hypot(x - e[0]/e[2], y - e[1]/e[2])
        if r < 1e-9:
            raise EpipoleCoincidentError(f'Point {(x, y)} is at the epipole')
    else:
        r = math.inf
    line = np.cross(e, (x, y, 1.0))
    return float(_line_angle(line[0], line[1])), r


def _candidate_indices(table, p1, fp1, mu):
    """Keypoint indices of all bins within reach of a first-image point."""
    everything = np.arange(table.size)
    try:
        theta, r = _query_angle(p1, table)
    except EpipoleCoincidentError:
        return everything
    if table.min_normal_sq <= 0:
        return everything
    # Distance from p1 to the epipolar line of any Sampson-passing match
    reach = mu*math.sqrt(1.0 + (fp1[0]**2 + fp1[1]**2)/table.min_normal_sq)
    if reach >= r:
        return everything
    slack = math.asin(reach/r) + ANGLE_MARGIN
    if 2*slack >= math.pi:
        return everything
    rel = (theta - table.angle_min) % math.pi
    chunks = [table.unbinned]
    taken = -1
    for shift in (-math.pi, 0.0, math.pi):
        lo = max(rel - slack + shift, 0.0)
        hi = min(rel + slack + shift, math.pi)
        if lo > hi:
            continue
        k0, k1 = int(table.bin_of(lo)), int(table.bin_of(hi))
        k0 = max(k0, taken + 1)
        if k0 > k1:
            continue
        chunks.append(table.order[table.offsets[k0]:table.offsets[k1 + 1]])
        taken = k1
    return np.concatenate(chunks)


def candidate_bins(p1, table, f, mu):
    """Candidate matches of a first-image point.

    Returns the occupants of the bin holding the angle of the line through
    the epipole and *p1*, widened to every bin a keypoint within Sampson
    distance *mu* can fall in. A point at the epipole gets all keypoints.

    :param p1:    (x, y) pixel in the first image
    :param table: hash table of the second image
    :param f:     fundamental matrix the table was built with
    :param mu:    Sampson threshold in pixels
    :return:      array of second-image keypoint indices

    """
    fx1, _ = epipolar_terms(np.reshape(p1, (1, 2)), np.zeros((0, 2)), f)
    return _candidate_indices(table, p1, fx1[0], mu)


def adaptive_snn_threshold(pool_size, snn_base=0.9):
    """Ratio test threshold for a pool of *pool_size* candidates.

    Log-linear in the pool size between half of *snn_base* at 5 candidates
    and *snn_base* at 8000, clamped outside that range.

    """
    if pool_size < 1:
        raise SfmException(f'Illegal pool size: {pool_size}')
    lo, hi = math.log10(SNN_POOL_LOW), math.log10(SNN_POOL_HIGH)
    x = 0.5 + 0.5*(math.log10(pool_size) - lo)/(hi - lo)
    return snn_base*min(max(x, 0.5), 1.0)


def _group_best(key, other, dist):
    """Per *key* value: nearest *other*, its distance, second distance, pool.

    :return: tuple (keys, best other, best distance, second distance, pool)

    """
    order = np.lexsort((other, dist, key))
    key, other, dist = key[order], other[order], dist[order]
    start = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    pool = np.diff(np.r_[start, len(key)])
    second = np.full(len(start), np.inf)
    has2 = pool > 1
    second[has2] = dist[start[has2] + 1]
    return key[start], other[start], dist[start], second, pool


def _select_matches(k1, k2, i, j, config, counter):
    """Mutual nearest neighbours with the ratio test over candidate pairs."""
    if not len(i):
        return Correspondences.empty()
    order = np.lexsort((j, i))
    i, j = i[order], j[order]
    dist = np.linalg.norm(k1.descriptors[i] - k2.descriptors[j], axis=1)
    if counter is not None:
        counter.descriptor_evaluations += len(i)

    q1, best2, d1, d2, pool = _group_best(i, j, dist)
    q2, best1, _, _, _ = _group_best(j, i, dist)
    back = np.full(len(k2), -1, dtype=np.int64)
    back[q2] = best1
    mutual = back[best2] == q1

    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(pool > 1, d1/d2, 0.0)
    ratio = np.nan_to_num(ratio, nan=1.0)
    if config.adaptive_snn:
        gamma = np.array([adaptive_snn_threshold(p, config.snn_base)
                          for p in pool])
    else:
        gamma = np.full(len(pool), config.snn_ratio)
    passed = np.where(pool > 1, ratio <= gamma,
                      d1 <= config.single_candidate_max_distance)
    keep = mutual & passed
    return Correspondences(q1[keep], best2[keep], d1[keep], ratio[keep])


def guided_match(k1, k2, f, config, counter=None):
    """Pose-guided matching by epipolar hashing.

    For every first-image keypoint the candidates of its hash bins are
    gated by the Sampson distance; the descriptor nearest neighbour among
    the survivors is kept if it is mutual and passes the ratio test with a
    threshold adapted to the number of survivors.

    :param k1:      features of the first image
    :type  k1:      :class:`ImageFeatures`
    :param k2:      features of the second image
    :param f:       fundamental matrix with ``p2^T F p1 = 0``
    :param config:  matching parameters
    :type  config:  :class:`MatchConfig`
    :param counter: optional :class:`MatchCounter` to accumulate work
    :rtype:         :class:`Correspondences`

    """
    if not len(k1) or not len(k2):
        return Correspondences.empty()
    mu = config.inlier_threshold
    table = build_hash(k2.positions, f, config.bin_count, k2.width,
                       k2.height)
    fx1, ftx2 = epipolar_terms(k1.positions, k2.positions, f)
    cand = [_candidate_indices(table, p, fp, mu)
            for p, fp in zip(k1.positions, fx1)]
    lengths = np.array([len(c) for c in cand], dtype=np.int64)
    i = np.repeat(np.arange(len(k1), dtype=np.int64), lengths)
    j = np.concatenate(cand).astype(np.int64)
    d = sampson_from_terms(fx1[i], ftx2[j], k2.positions[j])
    if counter is not None:
        counter.sampson_evaluations += len(i)
    keep = d < mu
    logger.debug(f'Epipolar hashing: {len(i)} candidates, '
                 f'{int(keep.sum())} within {mu} px')
    return _select_matches(k1, k2, i[keep], j[keep], config, counter)


def brute_force_guided_match(k1, k2, f, config, counter=None):
    """Pose-guided matching scanning all keypoint pairs.

    Same contract as :func:`guided_match`.

    """
    if not len(k1) or not len(k2):
        return Correspondences.empty()
    mu = config.inlier_threshold
    fx1, ftx2 = epipolar_terms(k1.positions, k2.positions, f)
    n2 = len(k2)
    keep_i, keep_j = [], []
    for start in range(0, len(k1), BLOCK_ROWS):
        rows = np.arange(start, min(start + BLOCK_ROWS, len(k1)))
        i = np.repeat(rows, n2)
        j = np.tile(np.arange(n2), len(rows))
        d = sampson_from_terms(fx1[i], ftx2[j], k2.positions[j])
        keep = d < mu
        keep_i.append(i[keep])
        keep_j.append(j[keep])
    if counter is not None:
        counter.sampson_evaluations += len(k1)*n2
    return _select_matches(k1, k2, np.concatenate(keep_i),
                           np.concatenate(keep_j), config, counter)


def brute_force_match(k1, k2, snn_ratio=0.8, counter=None):
    """Pose-free descriptor matching.

    Mutual nearest neighbours over all pairs with a fixed ratio test.

    :param snn_ratio: nearest to second-nearest distance ratio threshold
    :rtype:           :class:`Correspondences`

    """
    n1, n2 = len(k1), len(k2)
    if not n1 or not n2:
        return Correspondences.empty()
    d1sq = np.einsum('ij,ij->i', k1.descriptors, k1.descriptors)
    d2sq = np.einsum('ij,ij->i', k2.descriptors, k2.descriptors)
    best = np.empty(n1, dtype=np.int64)
    first = np.empty(n1)
    second = np.full(n1, np.inf)
    col_best = np.full(n2, np.inf)
    col_arg = np.zeros(n2, dtype=np.int64)
    for start in range(0, n1, BLOCK_ROWS):
        stop = min(start + BLOCK_ROWS, n1)
        block = (d1sq[start:stop, None] + d2sq[None, :]
                 - 2.0*k1.descriptors[start:stop] @ k2.descriptors.T)
        block = np.sqrt(np.maximum(block, 0.0))
        arg = np.argmin(block, axis=1)
        rows = np.arange(stop - start)
        best[start:stop] = arg
        first[start:stop] = block[rows, arg]
        if n2 > 1:
            block[rows, arg] = np.inf
            second[start:stop] = block.min(axis=1)
            block[rows, arg] = first[start:stop]
        cmin = block.min(axis=0)
        carg = np.argmin(block, axis=0) + start
        better = cmin < col_best
        col_best[better] = cmin[better]
        col_arg[better] = carg[better]
    if counter is not None:
        counter.descriptor_evaluations += n1*n2

    idx1 = np.arange(n1)
    mutual = col_arg[best] == idx1
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(np.isfinite(second), first/second, 0.0)
    ratio = np.nan_to_num(ratio, nan=1.0)
    keep = mutual & (ratio <= snn_ratio)
    dist = np.linalg.norm(k1.descriptors[idx1[keep]]
                          - k2.descriptors[best[keep]], axis=1)
    return Correspondences(idx1[keep], best[keep], dist, ratio[keep])


def save_features(features, path):
    """Writes image features to a JSON (.json) or numpy (.npz) file."""
    header = dict(descriptor_dim=int(features.descriptor_dim),
                  width=float(features.width), height=float(features.height),
                  intrinsics=features.intrinsics.to_dict())
    if path.endswith('.npz'):
        k = features.intrinsics
        np.savez_compressed(path, positions=features.positions,
                            descriptors=features.descriptors,
                            scores=features.scores,
                            header=np.array([features.width, features.height,
                                             k.fx, k.fy, k.cx, k.cy]))
    else:
        keypoints = [dict(x=float(p[0]), y=float(p[1]), score=float(s),
                          descriptor=[float(v) for v in d])
                     for p, s, d in zip(features.positions, features.scores,
                                        features.descriptors)]
        with open(path, 'w') as f:
            json.dump(dict(header, keypoints=keypoints), f)


def load_features(path, descriptor_dim=None):
    """Reads image features written by :func:`save_features`.

    :param descriptor_dim: expected descriptor dimension (checked if set)
    :rtype:                :class:`ImageFeatures`
    :raises:               :exc:`sfmtools.DimensionMismatchError`

    """
    if not os.path.isfile(path):
        raise SfmException(f'No such feature file: {path}')
    if path.endswith('.npz'):
        with np.load(path) as data:
            w, h, fx, fy, cx, cy = data['header']
            features = ImageFeatures(data['positions'], data['descriptors'],
                                     data['scores'], float(w), float(h),
                                     CameraIntrinsics(fx, fy, cx, cy))
        dim = features.descriptor_dim
    else:
        try:
            with open(path, 'r') as f:
                data = json.load(f)
            dim = int(data['descriptor_dim'])
            kps = data['keypoints']
            for kp in kps:
                if len(kp['descriptor']) != dim:
                    raise DimensionMismatchError(
                        f'{path}: descriptor of length '
                        f'{len(kp["descriptor"])}, header says {dim}')
            features = ImageFeatures(
                np.array([(kp['x'], kp['y']) for kp in kps]).reshape(-1, 2),
                np.array([kp['descriptor'] for kp in kps]).reshape(-1, dim),
                np.array([kp.get('score', 0.0) for kp in kps]),
                float(data['width']), float(data['height']),
                CameraIntrinsics.from_dict(data['intrinsics']))
        except (KeyError, TypeError, ValueError) as e:
            raise SfmException(f'Invalid feature file {path}: {e}')
    if descriptor_dim is not None and dim != descriptor_dim:
        raise DimensionMismatchError(f'{path}: descriptor dimension {dim}, '
                                     f'expected {descriptor_dim}')
    return features


def load_global_descriptors(path):
    """Reads global image descriptors from a .npy or JSON file.

    The JSON form is ``{"descriptors": [[...], ...]}``, one row per view.

    :return: (n_views, D) array

    """
    if path.endswith('.npy'):
        data = np.load(path)
    else:
        with open(path, 'r') as f:
            try:
                data = np.array(json.load(f)['descriptors'], dtype=float)
            except (KeyError, TypeError, ValueError) as e:
                raise SfmException(f'Invalid descriptor file {path}: {e}')
    if data.ndim != 2:
        raise DimensionMismatchError(f'{path}: global descriptors must form '
                                     f'a matrix, got shape {data.shape}')
    return data

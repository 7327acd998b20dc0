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

"""Synthetic scenes with known geometry.

A scene is a textured tower (a vertical cylinder) seen by cameras on a ring
or an arc around it. Each 3D point is observed in every camera that sees
its side of the tower; a share of the point identities are clutter whose
observations land at random image positions. Scenes are written to and
read from a directory holding one feature file per view, the similarity
matrix and the ground-truth cameras.

"""

from dataclasses import dataclass, asdict
import json
import logging
import os

import numpy as np

from sfmtools import SfmException, ConfigInvalidError
from sfmtools.geom import (CameraIntrinsics, RelativePose,
                           relative_pose_from_world, random_rotation)
from sfmtools.matcher import (ImageFeatures, Correspondences, save_features,
                              load_features)
from sfmtools.similarity import (similarity_from_visibility, save_similarity,
                                 load_similarity)

__all__ = ['SceneConfig', 'Camera', 'Scene', 'generate', 'write_scene',
           'read_scene', 'similarity_from_ground_truth', 'PairConfig',
           'TwoViewPair', 'generate_pair']

logger = logging.getLogger(__name__)

RING = 'ring'
ARC = 'arc'

# Observation noise is truncated at this many standard deviations
NOISE_CLIP = 3.0

MIN_DEPTH = 0.1

# Rounds of point or outlier sampling before a pair is given up
MAX_SAMPLING_ROUNDS = 100

CAMERA_FILE = 'cameras.json'
SIMILARITY_FILE = 'similarity.csv'
OBSERVATION_FILE = 'observations.npz'


@dataclass
class SceneConfig(object):
    """Synthetic scene parameters.

    *outlier_fraction* is the share of point identities that are clutter.
    Observation noise is Gaussian with standard deviation *noise_px*,
    truncated at three standard deviations.

    """

    seed: int = 0
    n_cameras: int = 30
    n_points: int = 4000
    noise_px: float = 1.0
    outlier_fraction: float = 0.2
    descriptor_dim: int = 128
    descriptor_noise: float = 0.15
    layout: str = RING
    arc_degrees: float = 90.0
    ring_radius: float = 8.0
    camera_jitter: float = 0.2
    tower_radius: float = 2.0
    tower_height: float = 4.0
    max_view_angle: float = 80.0
    image_width: int = 1024
    image_height: int = 768
    focal: float = 900.0

    def validate(self):
        """Raises :exc:`sfmtools.ConfigInvalidError` on illegal values."""
        issues = []
        if self.n_cameras < 2:
            issues.append('n_cameras must be at least 2')
        if self.n_points < 1:
            issues.append('n_points must be positive')
        if self.noise_px < 0:
            issues.append('noise_px must be >= 0')
        if not 0 <= self.outlier_fraction < 1:
            issues.append('outlier_fraction must be in [0, 1)')
        if self.descriptor_dim < 1:
            issues.append('descriptor_dim must be positive')
        if self.descriptor_noise < 0:
            issues.append('descriptor_noise must be >= 0')
        if self.layout not in (RING, ARC):
            issues.append(f'layout must be "{RING}" or "{ARC}"')
        if not 0 < self.arc_degrees <= 360:
            issues.append('arc_degrees must be in (0, 360]')
        if self.ring_radius <= self.tower_radius:
            issues.append('cameras must be outside the tower')
        if not 0 < self.max_view_angle < 90:
            issues.append('max_view_angle must be in (0, 90)')
        if (self.image_width <= 0 or self.image_height <= 0
                or self.focal <= 0):
            issues.append('image size and focal length must be positive')
        if issues:
            raise ConfigInvalidError('Invalid scene configuration: '
                                     + '; '.join(issues))


@dataclass(frozen=True, eq=False)
class Camera(object):
    """Calibrated camera, world points map to ``X_c = R X + t``."""

    rotation: np.ndarray
    translation: np.ndarray
    intrinsics: CameraIntrinsics
    width: float
    height: float

    @property
    def center(self):
        return -self.rotation.T @ self.translation

    def project(self, points):
        """Pixel positions and depths of (N, 3) world points."""
        xc = np.asarray(points, dtype=float) @ self.rotation.T \
            + self.translation
        with np.errstate(divide='ignore', invalid='ignore'):
            return self.intrinsics.project(xc), xc[:, 2]

    def to_dict(self):
        return dict(rotation=self.rotation.tolist(),
                    translation=self.translation.tolist(),
                    intrinsics=self.intrinsics.to_dict(),
                    width=self.width, height=self.height)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(np.array(d['rotation'], dtype=float).reshape(3, 3),
                       np.array(d['translation'], dtype=float).reshape(3),
                       CameraIntrinsics.from_dict(d['intrinsics']),
                       float(d['width']), float(d['height']))
        except (KeyError, TypeError, ValueError) as e:
            raise SfmException(f'Invalid camera record: {e}')

    @classmethod
    def look_at(cls, center, target, intrinsics, width, height, roll=None):
        """Camera at *center* looking at *target*, z up, image y down.

        :param roll: optional extra rotation (3x3) applied in camera frame

        """
        forward = np.asarray(target, dtype=float) - center
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, (0.0, 0.0, 1.0))
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        r = np.vstack((right, down, forward))
        if roll is not None:
            r = roll @ r
        return cls(r, -r @ center, intrinsics, float(width), float(height))


class Scene(object):
    """Views with features, co-visibility similarity and ground truth.

    :param features:   list of :class:`sfmtools.matcher.ImageFeatures`
    :param similarity: (n, n) image similarity matrix
    :param cameras:    ground-truth :class:`Camera` list, or None
    :param point_ids:  per view, the point identity of each keypoint (or
                       None when unknown)
    :param clutter:    per point identity, True for clutter
    :param config:     generating :class:`SceneConfig`, if any

    """

    def __init__(self, features, similarity, cameras=None, point_ids=None,
                 clutter=None, config=None, points=None):
        self.features = list(features)
        self.similarity = np.asarray(similarity, dtype=float)
        self.cameras = cameras
        self.point_ids = point_ids
        self.clutter = clutter
        self.config = config
        self.points = points
        n = len(self.features)
        if self.similarity.shape != (n, n):
            raise SfmException(f'Similarity matrix of shape '
                               f'{self.similarity.shape} for {n} views')
        if cameras is not None and len(cameras) != n:
            raise SfmException(f'{len(cameras)} cameras for {n} views')

    @property
    def n_views(self):
        return len(self.features)

    @property
    def has_ground_truth(self):
        return self.cameras is not None

    def ground_truth_pose(self, i, j):
        """True relative pose from view *i* to view *j*.

        Identity for ``i == j``.

        :raises: :exc:`sfmtools.SfmException` without ground truth

        """
        if self.cameras is None:
            raise SfmException('Scene has no ground-truth cameras')
        if i == j:
            return RelativePose.identity()
        ci, cj = self.cameras[i], self.cameras[j]
        return relative_pose_from_world(ci.rotation, ci.translation,
                                        cj.rotation, cj.translation)

    def _shared(self, i, j):
        if self.point_ids is None:
            raise SfmException('Scene has no keypoint identities')
        common, a, b = np.intersect1d(self.point_ids[i], self.point_ids[j],
                                      assume_unique=True,
                                      return_indices=True)
        order = np.argsort(a, kind='stable')
        return common[order], a[order], b[order]

    def tentative_correspondences(self, i, j):
        """Keypoint pairs of views *i* and *j* sharing a point identity.

        :return: (:class:`Correspondences`, boolean inlier mask); clutter
                 pairs are the outliers

        """
        common, a, b = self._shared(i, j)
        inlier = np.ones(len(common), dtype=bool) if self.clutter is None \
            else ~self.clutter[common]
        return Correspondences.from_pairs(a, b), inlier

    def ground_truth_inliers(self, i, j):
        """Keypoint pairs of views *i* and *j* observing the same 3D point."""
        corr, inlier = self.tentative_correspondences(i, j)
        return corr.subset(inlier)

    def is_inlier(self, i, j, correspondences):
        """Boolean mask of correspondences that are true point matches."""
        ids_i = self.point_ids[i][correspondences.idx1]
        ids_j = self.point_ids[j][correspondences.idx2]
        real = ids_i == ids_j
        if self.clutter is not None:
            real &= ~self.clutter[ids_i]
        return real


def _camera_centers(config, rng):
    n = config.n_cameras
    if config.layout == RING:
        angles = 2*np.pi*np.arange(n)/n
    else:
        angles = np.radians(config.arc_degrees)*(np.arange(n)/(n - 1) - 0.5)
    radius = config.ring_radius + rng.normal(0.0, config.camera_jitter, n)
    heights = rng.uniform(-0.5, 0.5, n)
    return np.column_stack((radius*np.cos(angles), radius*np.sin(angles),
                            heights))


def _perturbed(base, noise, rng):
    d = base + noise*rng.normal(size=base.shape)/np.sqrt(base.shape[1])
    return d/np.linalg.norm(d, axis=1)[:, None]


def _noise(rng, sigma, n):
    if sigma == 0:
        return np.zeros((n, 2))
    return np.clip(rng.normal(0.0, sigma, (n, 2)), -NOISE_CLIP*sigma,
                   NOISE_CLIP*sigma)


def similarity_from_ground_truth(scene):
    """Co-visibility similarity of the non-clutter points of a scene.

    :type  scene: :class:`Scene`
    :rtype:       (n, n) ndarray
    :raises:      :exc:`sfmtools.SfmException` without keypoint identities

    """
    if scene.point_ids is None or scene.clutter is None:
        raise SfmException('Scene has no keypoint identities')
    visibility = np.zeros((scene.n_views, len(scene.clutter)), dtype=bool)
    for v, ids in enumerate(scene.point_ids):
        visibility[v, ids] = True
    return similarity_from_visibility(visibility[:, ~scene.clutter])


def generate(config=None):
    """Generates a synthetic tower scene.

    The same configuration (seed included) always gives the same scene.

    :type  config: :class:`SceneConfig`
    :rtype:        :class:`Scene`

    """
    config = config or SceneConfig()
    config.validate()
    rng = np.random.default_rng(config.seed)
    w, h = config.image_width, config.image_height
    k = CameraIntrinsics(config.focal, config.focal, w/2.0, h/2.0)

    cameras = []
    for center in _camera_centers(config, rng):
        target = rng.normal(0.0, 0.2, 3)
        roll = random_rotation(rng, rng.normal(0.0, 2.0))
        cameras.append(Camera.look_at(center, target, k, w, h, roll))

    f = config.outlier_fraction
    n_clutter = int(round(config.n_points*f/(1.0 - f)))
    n_total = config.n_points + n_clutter
    azimuth = rng.uniform(0.0, 2*np.pi, n_total)
    z = rng.uniform(-config.tower_height/2, config.tower_height/2, n_total)
    normals = np.column_stack((np.cos(azimuth), np.sin(azimuth),
                               np.zeros(n_total)))
    points = np.column_stack((config.tower_radius*normals[:, :2], z))
    clutter = np.zeros(n_total, dtype=bool)
    clutter[config.n_points:] = True
    base = _perturbed(rng.normal(size=(n_total, config.descriptor_dim)),
                      0.0, rng)

    min_cos = np.cos(np.radians(config.max_view_angle))
    features, point_ids = [], []
    for cam in cameras:
        pix, depth = cam.project(points)
        ray = cam.center - points
        ray /= np.linalg.norm(ray, axis=1)[:, None]
        seen = ((depth > MIN_DEPTH) & ((ray*normals).sum(axis=1) > min_cos)
                & (pix[:, 0] >= 0) & (pix[:, 0] <= w)
                & (pix[:, 1] >= 0) & (pix[:, 1] <= h))
        ids = rng.permutation(np.flatnonzero(seen))
        pos = pix[ids] + _noise(rng, config.noise_px, len(ids))
        fake = clutter[ids]
        pos[fake] = rng.uniform((0.0, 0.0), (w, h), (int(fake.sum()), 2))
        pos = np.clip(pos, (0.0, 0.0), (w, h))
        desc = _perturbed(base[ids], config.descriptor_noise, rng)
        features.append(ImageFeatures(pos, desc, rng.uniform(size=len(ids)),
                                      w, h, k))
        point_ids.append(ids)

    scene = Scene(features, np.eye(config.n_cameras), cameras, point_ids,
                  clutter, config, points)
    scene.similarity = similarity_from_ground_truth(scene)
    logger.debug(f'Generated scene with {config.n_cameras} views and '
                 f'{n_total} point identities ({n_clutter} clutter)')
    return scene


def _feature_file(directory, view, fmt):
    return os.path.join(directory, f'view_{view:04d}.{fmt}')


def write_scene(scene, directory, fmt='json'):
    """Writes a scene to a directory.

    :param fmt: feature file format, ``json`` or ``npz``

    """
    if fmt not in ('json', 'npz'):
        raise SfmException(f'Unknown feature format {fmt}')
    os.makedirs(directory, exist_ok=True)
    for v, features in enumerate(scene.features):
        save_features(features, _feature_file(directory, v, fmt))
    save_similarity(scene.similarity, os.path.join(directory,
                                                   SIMILARITY_FILE))
    if scene.cameras is not None:
        record = dict(cameras=[c.to_dict() for c in scene.cameras])
        if scene.config is not None:
            record['config'] = asdict(scene.config)
        with open(os.path.join(directory, CAMERA_FILE), 'w') as f:
            json.dump(record, f, indent=1)
    if scene.point_ids is not None:
        arrays = {f'view_{v}': ids for v, ids in enumerate(scene.point_ids)}
        if scene.clutter is not None:
            arrays['clutter'] = scene.clutter
        np.savez_compressed(os.path.join(directory, OBSERVATION_FILE),
                            **arrays)


def read_scene(directory):
    """Reads a scene written by :func:`write_scene`.

    Only the view feature files and the similarity matrix are required;
    cameras and keypoint identities are loaded when present.

    :rtype: :class:`Scene`

    """
    if not os.path.isdir(directory):
        raise SfmException(f'No such scene directory: {directory}')
    names = sorted(n for n in os.listdir(directory)
                   if n.startswith('view_') and n.endswith(('.json', '.npz')))
    if not names:
        raise SfmException(f'{directory}: no view feature files')
    features = []
    for name in names:
        path = os.path.join(directory, name)
        dim = features[0].descriptor_dim if features else None
        features.append(load_features(path, descriptor_dim=dim))
    similarity = load_similarity(os.path.join(directory, SIMILARITY_FILE))

    cameras = config = None
    path = os.path.join(directory, CAMERA_FILE)
    if os.path.isfile(path):
        with open(path, 'r') as f:
            record = json.load(f)
        cameras = [Camera.from_dict(c) for c in record.get('cameras', [])]
        if 'config' in record:
            config = SceneConfig(**record['config'])
    point_ids = clutter = None
    path = os.path.join(directory, OBSERVATION_FILE)
    if os.path.isfile(path):
        with np.load(path) as data:
            point_ids = [data[f'view_{v}'] for v in range(len(features))]
            clutter = data['clutter'] if 'clutter' in data else None
    return Scene(features, similarity, cameras, point_ids, clutter, config)


@dataclass
class PairConfig(object):
    """Two-view problem parameters.

    :param n_keypoints:     keypoints per image
    :param shared_fraction: share of keypoints observing a common 3D point
    :param n_tentative:     size of the tentative correspondence set
                            (defaults to the number of shared points)
    :param inlier_fraction: share of true matches among tentative ones
    :param motion:          ``lateral``, ``forward`` or ``random``

    """

    seed: int = 0
    n_keypoints: int = 1000
    shared_fraction: float = 0.5
    n_tentative: int = 0
    inlier_fraction: float = 0.8
    noise_px: float = 1.0
    rotation_deg: float = 10.0
    baseline: float = 1.0
    motion: str = 'lateral'
    min_depth: float = 4.0
    max_depth: float = 12.0
    descriptor_dim: int = 128
    descriptor_noise: float = 0.15
    image_width: int = 1024
    image_height: int = 768
    focal: float = 900.0

    def validate(self):
        issues = []
        if self.n_keypoints < 1:
            issues.append('n_keypoints must be positive')
        if not 0 < self.shared_fraction <= 1:
            issues.append('shared_fraction must be in (0, 1]')
        if not 0 <= self.inlier_fraction <= 1:
            issues.append('inlier_fraction must be in [0, 1]')
        if self.motion not in ('lateral', 'forward', 'random'):
            issues.append(f'unknown motion "{self.motion}"')
        if self.baseline <= 0:
            issues.append('baseline must be positive')
        if not 0 < self.min_depth < self.max_depth:
            issues.append('need 0 < min_depth < max_depth')
        if issues:
            raise ConfigInvalidError('Invalid pair configuration: '
                                     + '; '.join(issues))


@dataclass(eq=False)
class TwoViewPair(object):
    """Two images of a common set of points with known relative pose.

    ``tentative`` mixes true matches with random keypoint pairings;
    ``labels`` marks the true ones. Tentative ratio values are random and
    carry no information.

    """

    features1: ImageFeatures
    features2: ImageFeatures
    pose: RelativePose
    matches: Correspondences
    tentative: Correspondences
    labels: np.ndarray

    def points(self, correspondences=None):
        corr = self.tentative if correspondences is None else correspondences
        return corr.points(self.features1, self.features2)


def _motion_direction(motion, rng):
    if motion == 'lateral':
        d = np.array([1.0, rng.normal(0, 0.2), rng.normal(0, 0.2)])
    elif motion == 'forward':
        d = np.array([rng.normal(0, 0.2), rng.normal(0, 0.2), 1.0])
    else:
        d = rng.normal(size=3)
    return d/np.linalg.norm(d)


def generate_pair(config=None):
    """Generates a two-view problem.

    :type  config: :class:`PairConfig`
    :rtype:        :class:`TwoViewPair`

    """
    config = config or PairConfig()
    config.validate()
    rng = np.random.default_rng(config.seed)
    w, h = config.image_width, config.image_height
    k = CameraIntrinsics(config.focal, config.focal, w/2.0, h/2.0)
    r = random_rotation(rng, config.rotation_deg)
    c = config.baseline*_motion_direction(config.motion, rng)
    pose = RelativePose.create(r, -r @ c)

    n_shared = max(int(round(config.n_keypoints*config.shared_fraction)), 1)
    pix1 = np.zeros((0, 2))
    pix2 = np.zeros((0, 2))
    rounds = 0
    while len(pix1) < n_shared:
        if rounds == MAX_SAMPLING_ROUNDS:
            raise SfmException(f'Only {len(pix1)} of {n_shared} points are '
                               f'visible in both views after {rounds} '
                               f'sampling rounds')
        rounds += 1
        m = 4*n_shared
        uv = rng.uniform((0.0, 0.0), (w, h), (m, 2))
        depth = rng.uniform(config.min_depth, config.max_depth, m)
        x1 = np.column_stack((k.normalize(uv), np.ones(m)))*depth[:, None]
        x2 = (x1 - c) @ r.T
        with np.errstate(divide='ignore', invalid='ignore'):
            uv2 = k.project(x2)
        ok = ((x2[:, 2] > MIN_DEPTH) & (uv2[:, 0] >= 0) & (uv2[:, 0] <= w)
              & (uv2[:, 1] >= 0) & (uv2[:, 1] <= h))
        pix1 = np.vstack((pix1, uv[ok]))
        pix2 = np.vstack((pix2, uv2[ok]))
    pix1, pix2 = pix1[:n_shared], pix2[:n_shared]

    n_total = max(config.n_keypoints, n_shared)
    n_extra = n_total - n_shared
    dim = config.descriptor_dim
    base = _perturbed(rng.normal(size=(n_shared + 2*n_extra, dim)), 0.0, rng)
    views = []
    for pix, own in ((pix1, base[n_shared:n_shared + n_extra]),
                     (pix2, base[n_shared + n_extra:])):
        pos = np.vstack((pix + _noise(rng, config.noise_px, n_shared),
                         rng.uniform((0.0, 0.0), (w, h), (n_extra, 2))))
        desc = np.vstack((_perturbed(base[:n_shared], config.descriptor_noise,
                                     rng), own))
        order = rng.permutation(n_total)
        views.append((np.clip(pos, (0.0, 0.0), (w, h))[order], desc[order],
                      np.argsort(order)))
    (pos1, desc1, where1), (pos2, desc2, where2) = views
    f1 = ImageFeatures(pos1, desc1, rng.uniform(size=n_total), w, h, k)
    f2 = ImageFeatures(pos2, desc2, rng.uniform(size=n_total), w, h, k)
    idx1, idx2 = where1[:n_shared], where2[:n_shared]
    order = np.argsort(idx1)
    matches = Correspondences.from_pairs(idx1[order], idx2[order])

    n_tentative = config.n_tentative or n_shared
    n_in = min(int(round(n_tentative*config.inlier_fraction)), n_shared)
    n_out = n_tentative - n_in
    pick = rng.choice(n_shared, n_in, replace=False)
    true_pairs = matches.pairs()
    out = []
    draws = 0
    while len(out) < n_out:
        if draws == MAX_SAMPLING_ROUNDS*n_out:
            raise SfmException(f'Cannot draw {n_out} false matches among '
                               f'{n_total} keypoints')
        draws += 1
        a, b = int(rng.integers(n_total)), int(rng.integers(n_total))
        if (a, b) not in true_pairs:
            out.append((a, b))
    out = np.array(out, dtype=np.int64).reshape(-1, 2)
    labels = np.concatenate((np.ones(n_in, dtype=bool),
                             np.zeros(n_out, dtype=bool)))
    mix = rng.permutation(n_tentative)
    tentative = Correspondences(
        np.concatenate((matches.idx1[pick], out[:, 0]))[mix],
        np.concatenate((matches.idx2[pick], out[:, 1]))[mix],
        np.zeros(n_tentative), rng.uniform(size=n_tentative))
    return TwoViewPair(f1, f2, pose, matches, tentative, labels[mix])

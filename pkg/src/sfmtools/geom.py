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

"""Two-view geometry primitives.

Conventions used throughout sfmtools:

* A :class:`RelativePose` from view *i* to view *j* maps a point expressed
  in the camera frame of *i* into the camera frame of *j*,
  ``X_j = R X_i + t``. The translation is a unit direction.
* Essential and fundamental matrices satisfy ``x_j^T E x_i = 0`` and
  ``p_j^T F p_i = 0`` with *p* in pixels.
* Composition follows matrix order, ``compose(a, b)`` applies *b* first.

"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy.spatial.transform import Rotation

from sfmtools import (ZeroTranslationError, DegenerateGradientError,
                      NoCheiralitySupportError, ParallelRaysError,
                      SfmException)

__all__ = ['CameraIntrinsics', 'RelativePose', 'Triangulation', 'skew',
           'is_rotation', 'invert', 'compose', 'essential_from_pose',
           'fundamental_from_essential', 'fundamental_from_pose',
           'epipolar_terms', 'sampson_from_terms', 'sampson_distance',
           'sampson_distances', 'signed_sampson_residuals', 'inlier_mask',
           'decompose_essential', 'triangulate', 'triangulate_normalized',
           'fit_translation', 'rotation_error_deg', 'translation_error_deg',
           'translation_angle_error_deg', 'random_rotation',
           'relative_pose_from_world']

logger = logging.getLogger(__name__)

# Translations shorter than this are treated as zero
TRANSLATION_EPS = 1e-12

# Sampson denominators below this have no usable gradient
GRADIENT_EPS = 1e-16

# Minimum angle (radians) between viewing rays for triangulation
PARALLEL_RAY_EPS = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics(object):
    """Pinhole intrinsics.

    :param fx: focal length in pixels along x
    :param fy: focal length in pixels along y
    :param cx: principal point x
    :param cy: principal point y

    """

    fx: float
    fy: float
    cx: float
    cy: float

    @property
    def matrix(self):
        """The 3x3 calibration matrix K."""
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def inverse(self):
        """The inverse of the calibration matrix."""
        return np.array([[1.0/self.fx, 0.0, -self.cx/self.fx],
                         [0.0, 1.0/self.fy, -self.cy/self.fy],
                         [0.0, 0.0, 1.0]])

    def normalize(self, points):
        """Convert pixel coordinates to normalized image coordinates.

        :param points: (N, 2) pixel coordinates
        :return:       (N, 2) normalized coordinates
        :rtype:        :class:`numpy.ndarray`

        """
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.column_stack(((points[:, 0] - self.cx)/self.fx,
                                (points[:, 1] - self.cy)/self.fy))

    def project(self, points):
        """Project (N, 3) camera frame points to pixels."""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        z = points[:, 2]
        return np.column_stack((self.fx*points[:, 0]/z + self.cx,
                                self.fy*points[:, 1]/z + self.cy))

    def to_dict(self):
        return dict(fx=self.fx, fy=self.fy, cx=self.cx, cy=self.cy)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(float(d['fx']), float(d['fy']), float(d['cx']),
                       float(d['cy']))
        except (KeyError, TypeError, ValueError) as e:
            raise SfmException(f'Invalid intrinsics record: {e}')


@dataclass(frozen=True, eq=False)
class RelativePose(object):
    """Rigid motion from one view's camera frame to another's.

    :param rotation:    3x3 rotation matrix
    :param translation: translation direction, unit norm (zero only for
                        degenerate compositions and the identity)

    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, 'rotation', r)
        object.__setattr__(self, 'translation', t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def create(cls, rotation, translation):
        """Pose with the translation normalized to unit length.

        :raises: :exc:`sfmtools.ZeroTranslationError` for a zero translation

        """
        t = np.asarray(translation, dtype=float).reshape(3)
        norm = np.linalg.norm(t)
        if norm < TRANSLATION_EPS:
            raise ZeroTranslationError('Pose translation has zero length')
        return cls(rotation, t/norm)

    @property
    def degenerate(self):
        """True if the translation carries no direction."""
        return bool(np.linalg.norm(self.translation) < TRANSLATION_EPS)

    def as_quaternion(self):
        """Rotation as a (w, x, y, z) unit quaternion."""
        x, y, z, w = Rotation.from_matrix(self.rotation).as_quat()
        return np.array([w, x, y, z])

    @classmethod
    def from_quaternion(cls, q, translation):
        """Pose from a (w, x, y, z) quaternion and a translation."""
        w, x, y, z = q
        r = Rotation.from_quat([x, y, z, w]).as_matrix()
        return cls(r, translation)

    def __repr__(self):
        rv = Rotation.from_matrix(self.rotation).as_rotvec()
        return (f'RelativePose(rotvec={np.round(rv, 6).tolist()}, '
                f't={np.round(self.translation, 6).tolist()})')


@dataclass(frozen=True)
class Triangulation(object):
    """Result of triangulating one correspondence.

    :param point:   3D point in the first view's camera frame
    :param depth1:  depth in the first view
    :param depth2:  depth in the second view
    :param reprojection_error: mean reprojection error in pixels

    """

    point: np.ndarray
    depth1: float
    depth2: float
    reprojection_error: float


def skew(v):
    """Cross-product matrix of a 3-vector."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def is_rotation(m, tol=1e-9):
    """Returns True if *m* is orthonormal with determinant +1."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        return False
    return bool(np.allclose(m.T @ m, np.eye(3), atol=tol)
                and abs(np.linalg.det(m) - 1.0) < tol)


def _unit(t):
    norm = np.linalg.norm(t)
    if norm < TRANSLATION_EPS:
        return np.zeros(3)
    return t/norm


def invert(p):
    """Inverse relative pose, the motion from view *j* back to view *i*.

    :param p: pose from view i to view j
    :type  p: :class:`RelativePose`
    :rtype:   :class:`RelativePose`

    """
    r_inv = p.rotation.T
    return RelativePose(r_inv, _unit(-r_inv @ p.translation))


def compose(a, b):
    """Composite motion applying *b* first and then *a*.

    The translation of the result is renormalized to unit length. A
    near-zero composite translation is returned as a zero vector, which
    the resulting pose reports through :attr:`RelativePose.degenerate`.

    :param a: second motion
    :param b: first motion
    :rtype:   :class:`RelativePose`

    """
    r = a.rotation @ b.rotation
    t = a.rotation @ b.translation + a.translation
    return RelativePose(r, _unit(t))


def essential_from_pose(p):
    """Essential matrix ``[t]x R`` of a relative pose."""
    return skew(p.translation) @ p.rotation


def fundamental_from_essential(e, k1, k2):
    """Fundamental matrix ``K2^-T E K1^-1``.

    :param e:  essential matrix
    :param k1: intrinsics of the first view
    :type  k1: :class:`CameraIntrinsics`
    :param k2: intrinsics of the second view
    :type  k2: :class:`CameraIntrinsics`

    """
    return k2.inverse.T @ np.asarray(e, dtype=float) @ k1.inverse


def fundamental_from_pose(p, k1, k2):
    """Fundamental matrix of a relative pose."""
    return fundamental_from_essential(essential_from_pose(p), k1, k2)


def epipolar_terms(x1, x2, f):
    """Per-point epipolar lines used by the Sampson distance.

    :param x1: (N, 2) pixel coordinates in the first image
    :param x2: (M, 2) pixel coordinates in the second image
    :param f:  fundamental matrix
    :return:   tuple (F x1, F^T x2) of (N, 3) and (M, 3) arrays

    """
    f = np.asarray(f, dtype=float)
    x1 = np.asarray(x1, dtype=float).reshape(-1, 2)
    x2 = np.asarray(x2, dtype=float).reshape(-1, 2)
    fx1 = x1 @ f[:, :2].T + f[:, 2]
    ftx2 = x2 @ f[:2, :] + f[2, :]
    return fx1, ftx2


def sampson_from_terms(fx1, ftx2, x2, signed=False):
    """Sampson distance from gathered epipolar terms.

    Rows of *fx1*, *ftx2* and *x2* are paired elementwise. Pairs without a
    usable gradient get an infinite distance (NaN when *signed*).

    """
    num = x2[:, 0]*fx1[:, 0] + x2[:, 1]*fx1[:, 1] + fx1[:, 2]
    den = (fx1[:, 0]*fx1[:, 0] + fx1[:, 1]*fx1[:, 1]
           + ftx2[:, 0]*ftx2[:, 0] + ftx2[:, 1]*ftx2[:, 1])
    bad = den < GRADIENT_EPS
    with np.errstate(divide='ignore', invalid='ignore'):
        d = num/np.sqrt(den)
    if signed:
        d[bad] = np.nan
        return d
    d = np.abs(d)
    d[bad] = np.inf
    return d


def sampson_distances(x1, x2, f):
    """Sampson distances of paired correspondences (vectorized).

    :param x1: (N, 2) pixels in the first image
    :param x2: (N, 2) pixels in the second image
    :param f:  fundamental matrix with ``x2^T F x1 = 0``
    :return:   (N,) distances in pixels, inf where the gradient vanishes

    """
    x2 = np.asarray(x2, dtype=float).reshape(-1, 2)
    fx1, ftx2 = epipolar_terms(x1, x2, f)
    return sampson_from_terms(fx1, ftx2, x2)


def signed_sampson_residuals(x1, x2, f):
    """Signed Sampson residuals, used as least-squares residuals."""
    x2 = np.asarray(x2, dtype=float).reshape(-1, 2)
    fx1, ftx2 = epipolar_terms(x1, x2, f)
    return sampson_from_terms(fx1, ftx2, x2, signed=True)


def sampson_distance(p1, p2, f):
    """First-order geometric error of a single correspondence.

    :param p1: point (x, y) in the first image
    :param p2: point (x, y) in the second image
    :param f:  fundamental matrix
    :return:   distance in pixels
    :rtype:    float
    :raises:   :exc:`sfmtools.DegenerateGradientError`

    """
    d = sampson_distances(np.reshape(p1, (1, 2)), np.reshape(p2, (1, 2)), f)
    if not np.isfinite(d[0]):
        raise DegenerateGradientError('Sampson denominator vanishes')
    return float(d[0])


def inlier_mask(pose, x1, x2, k1, k2, threshold):
    """Correspondences with Sampson distance below *threshold* pixels."""
    f = fundamental_from_pose(pose, k1, k2)
    return sampson_distances(x1, x2, f) < threshold


def _homogeneous(n):
    n = np.asarray(n, dtype=float).reshape(-1, 2)
    return np.column_stack((n, np.ones(len(n))))


def triangulate_normalized(n1, n2, pose):
    """Linear triangulation of normalized correspondences (vectorized).

    :param n1:   (N, 2) normalized coordinates in the first view
    :param n2:   (N, 2) normalized coordinates in the second view
    :param pose: relative pose from the first to the second view
    :return:     tuple (points (N, 3), depth1, depth2, ray_angle)

    Points at infinity get NaN coordinates and depths.

    """
    h1 = _homogeneous(n1)
    h2 = _homogeneous(n2)
    r, t = pose.rotation, pose.translation
    p2 = np.column_stack((r, t))
    n = len(h1)
    a = np.empty((n, 4, 4))
    a[:, 0, :] = 0.0
    a[:, 0, 0] = -1.0
    a[:, 0, 2] = h1[:, 0]
    a[:, 1, :] = 0.0
    a[:, 1, 1] = -1.0
    a[:, 1, 2] = h1[:, 1]
    a[:, 2, :] = h2[:, 0, None]*p2[2] - p2[0]
    a[:, 3, :] = h2[:, 1, None]*p2[2] - p2[1]
    _, _, vh = np.linalg.svd(a)
    xh = vh[:, -1, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        points = xh[:, :3]/xh[:, 3:4]
    points[np.abs(xh[:, 3]) < 1e-15] = np.nan
    depth1 = points[:, 2]
    depth2 = (points @ r.T + t)[:, 2]
    ray1 = h1 @ r.T
    cross = np.linalg.norm(np.cross(ray1, h2), axis=1)
    angle = np.arctan2(cross, np.einsum('ij,ij->i', ray1, h2))
    return points, depth1, depth2, angle


def triangulate(p1, p2, pose, k1, k2):
    """Triangulate a single pixel correspondence.

    :param p1:   pixel (x, y) in the first view
    :param p2:   pixel (x, y) in the second view
    :param pose: relative pose from the first to the second view
    :param k1:   intrinsics of the first view
    :param k2:   intrinsics of the second view
    :rtype:      :class:`Triangulation`
    :raises:     :exc:`sfmtools.ParallelRaysError`

    Depths are reported with their sign, points behind a camera give
    negative depths.

    """
    n1 = k1.normalize(p1)
    n2 = k2.normalize(p2)
    points, d1, d2, angle = triangulate_normalized(n1, n2, pose)
    if not angle[0] >= PARALLEL_RAY_EPS or not np.all(np.isfinite(points)):
        raise ParallelRaysError('Viewing rays are parallel')
    x = points[0]
    x2 = pose.rotation @ x + pose.translation
    e1 = np.linalg.norm(k1.project(x)[0] - np.asarray(p1, dtype=float))
    e2 = np.linalg.norm(k2.project(x2)[0] - np.asarray(p2, dtype=float))
    return Triangulation(x, float(d1[0]), float(d2[0]), float((e1 + e2)/2))


def decompose_essential(e, x1, x2, k1, k2, max_points=64, rng=None):
    """Relative pose of an essential matrix selected by cheirality.

    The four (R, t) decompositions are scored by the number of
    correspondences triangulating in front of both cameras; at most
    *max_points* correspondences are used.

    :param e:  essential matrix
    :param x1: (N, 2) pixels in the first view
    :param x2: (N, 2) pixels in the second view
    :param k1: intrinsics of the first view
    :param k2: intrinsics of the second view
    :return:   best pose
    :rtype:    :class:`RelativePose`
    :raises:   :exc:`sfmtools.NoCheiralitySupportError`

    """
    u, _, vt = np.linalg.svd(np.asarray(e, dtype=float))
    if np.linalg.det(u) < 0:
        u = -u
    if np.linalg.det(vt) < 0:
        vt = -vt
    w = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    r1 = u @ w @ vt
    r2 = u @ w.T @ vt
    t = u[:, 2]

    n1 = k1.normalize(x1)
    n2 = k2.normalize(x2)
    if len(n1) > max_points:
        if rng is None:
            rng = np.random.default_rng(0)
        idx = np.sort(rng.choice(len(n1), size=max_points, replace=False))
        n1, n2 = n1[idx], n2[idx]

    best, best_count = None, 0
    for r, tt in ((r1, t), (r1, -t), (r2, t), (r2, -t)):
        pose = RelativePose(r, tt)
        _, d1, d2, _ = triangulate_normalized(n1, n2, pose)
        with np.errstate(invalid='ignore'):
            count = int(np.sum((d1 > 0) & (d2 > 0)))
        if count > best_count:
            best, best_count = pose, count
    if best is None:
        raise NoCheiralitySupportError('No decomposition has points in front '
                                       'of both cameras')
    return best


def fit_translation(rotation, n1, n2):
    """Translation direction for a known rotation (least squares).

    Every correspondence gives ``t . (R x1 x x2) = 0``; the direction is the
    smallest right singular vector of the stacked constraints. The sign is
    not resolved.

    :param rotation: 3x3 rotation
    :param n1:       (N, 2) normalized coordinates in the first view, N >= 2
    :param n2:       (N, 2) normalized coordinates in the second view
    :return:         unit translation
    :raises:         :exc:`sfmtools.ZeroTranslationError`

    """
    a = np.cross(_homogeneous(n1) @ np.asarray(rotation).T, _homogeneous(n2))
    if len(a) < 2:
        raise ZeroTranslationError('Need two correspondences for a direction')
    _, s, vt = np.linalg.svd(a)
    if len(s) > 1 and s[1] < TRANSLATION_EPS:
        raise ZeroTranslationError('Translation direction is not determined')
    return vt[-1]/np.linalg.norm(vt[-1])


def rotation_error_deg(a, b):
    """Angle in degrees of the rotation taking *a* to *b*."""
    d = np.asarray(a, dtype=float).T @ np.asarray(b, dtype=float)
    return float(np.degrees(Rotation.from_matrix(d).magnitude()))


def translation_error_deg(a, b, sign_invariant=False):
    """Angle in degrees between two translation directions.

    :param sign_invariant: if True, t and -t are treated as equal
    :raises: :exc:`sfmtools.ZeroTranslationError` if either is zero

    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if (np.linalg.norm(a) < TRANSLATION_EPS
            or np.linalg.norm(b) < TRANSLATION_EPS):
        raise ZeroTranslationError('Cannot measure angle of zero translation')
    angle = np.degrees(np.arctan2(np.linalg.norm(np.cross(a, b)), a @ b))
    if sign_invariant:
        angle = min(angle, 180.0 - angle)
    return float(angle)


def translation_angle_error_deg(a, b):
    """Translation direction error, blind to the sign of either vector."""
    return translation_error_deg(a, b, sign_invariant=True)


def random_rotation(rng, angle_deg=None):
    """Random rotation matrix.

    :param       rng: numpy random generator
    :param angle_deg: if set, rotation by this angle about a random axis,
                      otherwise uniformly distributed
    """
    if angle_deg is None:
        return Rotation.random(None, rng).as_matrix()
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return Rotation.from_rotvec(np.radians(angle_deg)*axis).as_matrix()


def relative_pose_from_world(r_i, t_i, r_j, t_j):
    """Relative pose between two world-to-camera transforms.

    Camera k maps world points by ``X_k = R_k X + t_k``.

    :raises: :exc:`sfmtools.ZeroTranslationError` for coincident centers

    """
    r = np.asarray(r_j) @ np.asarray(r_i).T
    t = np.asarray(t_j) - r @ np.asarray(t_i)
    return RelativePose.create(r, t)

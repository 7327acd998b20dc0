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

"""Generic shared functionality for sfmtools."""

# sfmtools version number
__version__ = '0.1.0'


class SfmException(Exception):
    """General sfmtools exception."""


class ZeroTranslationError(SfmException):
    """Relative pose translation has (near) zero length."""


class DegenerateGradientError(SfmException):
    """Sampson denominator vanishes for a correspondence."""


class NoCheiralitySupportError(SfmException):
    """No essential matrix decomposition puts points in front of cameras."""


class ParallelRaysError(SfmException):
    """Viewing rays are (near) parallel, point cannot be triangulated."""


class DuplicateEdgeError(SfmException):
    """An edge already connects the two views."""


class NotVisibleError(SfmException):
    """Views are not connected in the pose-graph."""


class InsufficientInliersError(SfmException):
    """Too few inliers for the requested refinement."""


class DegenerateFError(SfmException):
    """Fundamental matrix does not define usable epipolar lines."""


class ZeroLineError(SfmException):
    """Epipolar line has a zero normal."""


class EpipoleCoincidentError(SfmException):
    """Point coincides with the epipole."""


class DegenerateSampleError(SfmException):
    """Minimal sample cannot produce a model."""


class NoModelError(SfmException):
    """Robust estimation found no model with enough inliers.

    :param iterations: number of hypothesis rounds that were run
    :type  iterations: int

    """

    def __init__(self, msg, iterations=0):
        super().__init__(msg)
        self.iterations = iterations


class DimensionMismatchError(SfmException):
    """Descriptor or array dimensions do not agree."""


class ConfigInvalidError(SfmException):
    """Configuration value is out of range or inconsistent."""

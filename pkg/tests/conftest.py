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

"""Shared fixtures of the sfmtools test suite."""

import numpy as np
import pytest

from sfmtools.geom import CameraIntrinsics
from sfmtools.scene import generate, generate_pair, SceneConfig, PairConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def intrinsics():
    return CameraIntrinsics(900.0, 900.0, 512.0, 384.0)


@pytest.fixture(scope='session')
def small_scene():
    """Twelve-camera ring around a tower, 30 degrees between cameras."""
    return generate(SceneConfig(seed=3, n_cameras=12, n_points=800))


@pytest.fixture(scope='session')
def clean_pair():
    """Noise-free lateral two-view problem."""
    return generate_pair(PairConfig(seed=5, n_keypoints=300, noise_px=0.0))


@pytest.fixture(scope='session')
def noisy_pair():
    """500 tentative correspondences, 80% true, 1 px noise."""
    return generate_pair(PairConfig(seed=7, n_keypoints=1000,
                                    shared_fraction=0.5, n_tentative=500,
                                    inlier_fraction=0.8, noise_px=1.0))

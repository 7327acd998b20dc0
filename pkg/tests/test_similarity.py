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

import numpy as np
import pytest

from sfmtools import DimensionMismatchError, SfmException
from sfmtools.similarity import (similarity_from_descriptors,
                                 similarity_from_visibility, ordered_pairs,
                                 save_similarity, load_similarity)


class TestSimilarity:

    def test_identical_descriptors(self):
        s = similarity_from_descriptors([[1.0, 2.0], [2.0, 4.0]])
        np.testing.assert_allclose(s, np.ones((2, 2)))

    def test_inner_products(self):
        s = similarity_from_descriptors([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0],
                                         [-1.0, 0.0]])
        r = np.sqrt(0.5)
        np.testing.assert_allclose(s, [[1.0, r, 0.0, 0.0],
                                       [r, 1.0, r, 0.0],
                                       [0.0, r, 1.0, 0.0],
                                       [0.0, 0.0, 0.0, 1.0]], atol=1e-12)

    def test_symmetric_unit_diagonal(self, rng):
        s = similarity_from_descriptors(rng.normal(size=(20, 64)))
        np.testing.assert_allclose(s, s.T)
        np.testing.assert_allclose(np.diag(s), 1.0)
        assert s.min() >= 0.0 and s.max() <= 1.0

    @pytest.mark.parametrize('bad', [[1.0, 2.0, 3.0], [[1.0, 2.0], [3.0]]])
    def test_not_a_matrix(self, bad):
        with pytest.raises(DimensionMismatchError):
            similarity_from_descriptors(bad)

    def test_visibility(self):
        v = np.array([[1, 1, 0, 0],
                      [1, 0, 1, 0],
                      [0, 0, 0, 0]], dtype=bool)
        s = similarity_from_visibility(v)
        np.testing.assert_allclose(s, [[1.0, 0.5, 0.0],
                                       [0.5, 1.0, 0.0],
                                       [0.0, 0.0, 1.0]])


class TestOrderedPairs:

    def test_most_similar_first(self):
        s = [[1.0, 0.9, 0.5],
             [0.9, 1.0, 0.3],
             [0.5, 0.3, 1.0]]
        assert ordered_pairs(s) == [(0, 1), (0, 2)]

    def test_threshold_is_exclusive(self):
        s = [[1.0, 0.4], [0.4, 1.0]]
        assert ordered_pairs(s, 0.4) == []
        assert ordered_pairs(s, 0.39) == [(0, 1)]

    def test_nothing_above_one(self, rng):
        s = similarity_from_descriptors(rng.normal(size=(5, 3)))
        assert ordered_pairs(s, 1.0) == []

    def test_ties(self):
        s = np.full((3, 3), 0.8)
        assert ordered_pairs(s) == [(0, 1), (0, 2), (1, 2)]


class TestSimilarityFile:

    def test_roundtrip(self, rng, tmp_path):
        s = similarity_from_descriptors(rng.normal(size=(6, 8)))
        path = str(tmp_path/'similarity.csv')
        save_similarity(s, path)
        np.testing.assert_allclose(load_similarity(path), s, rtol=1e-9)

    def test_not_square(self, tmp_path):
        path = tmp_path/'similarity.csv'
        path.write_text('1,0.5,0.2\n0.5,1,0.1\n')
        with pytest.raises(SfmException):
            load_similarity(str(path))

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

import io

import numpy as np

from sfmtools.matcher import Correspondences
from sfmtools.tracks import TrackStore


def pairs(idx1, idx2):
    return Correspondences.from_pairs(np.array(idx1), np.array(idx2))


class TestTrackStore:

    def test_single_pair(self):
        store = TrackStore()
        assert store.merge_inliers(0, 1, pairs(range(50), range(50))) == 0
        assert store.n_tracks == 50
        assert store.n_observations == 100
        assert store.track_of(0, 7) == {0: 7, 1: 7}

    def test_chain(self):
        store = TrackStore()
        store.merge_inliers(0, 1, pairs(range(10), range(10)))
        store.merge_inliers(1, 2, pairs(range(10), range(10, 20)))
        assert store.n_tracks == 10
        assert store.track_of(2, 13) == {0: 3, 1: 3, 2: 13}
        shared = store.shared_correspondences(0, 2)
        np.testing.assert_array_equal(shared.idx1, np.arange(10))
        np.testing.assert_array_equal(shared.idx2, np.arange(10, 20))
        back = store.shared_correspondences(2, 0)
        np.testing.assert_array_equal(back.idx1, np.arange(10, 20))
        np.testing.assert_array_equal(back.idx2, np.arange(10))

    def test_repeated_merge(self):
        store = TrackStore()
        store.merge_inliers(0, 1, pairs([1, 2], [3, 4]))
        assert store.merge_inliers(1, 0, pairs([3, 4], [1, 2])) == 0
        assert store.n_tracks == 2

    def test_conflict_refused(self):
        store = TrackStore()
        store.merge_inliers(0, 1, pairs([0, 1], [0, 1]))
        store.merge_inliers(1, 2, pairs([0, 1], [0, 1]))
        assert store.merge_inliers(0, 2, pairs([0], [5])) == 1
        assert store.track_of(0, 0) == {0: 0, 1: 0, 2: 0}
        assert store.track_of(2, 5) == {2: 5}
        assert store.is_flagged(0, 0)
        assert store.is_flagged(2, 5)
        assert not store.is_flagged(0, 1)
        shared = store.shared_correspondences(0, 1)
        assert shared.pairs() == {(1, 1)}

    def test_flag_spreads_on_merge(self):
        store = TrackStore()
        store.merge_inliers(0, 1, pairs([0], [0]))
        store.merge_inliers(1, 2, pairs([0], [0]))
        store.merge_inliers(0, 2, pairs([0], [5]))
        store.merge_inliers(3, 0, pairs([4], [0]))
        assert store.track_of(3, 4) == {0: 0, 1: 0, 2: 0, 3: 4}
        assert store.is_flagged(3, 4)
        assert len(store.shared_correspondences(3, 1)) == 0

    def test_unrelated_views(self):
        store = TrackStore()
        store.merge_inliers(0, 1, pairs([0, 1], [0, 1]))
        store.merge_inliers(2, 3, pairs([0, 1], [0, 1]))
        assert len(store.shared_correspondences(0, 2)) == 0
        assert len(store.shared_correspondences(5, 0)) == 0
        assert store.track_of(5, 0) is None
        assert not store.is_flagged(5, 0)

    def test_write(self):
        store = TrackStore()
        store.merge_inliers(1, 0, pairs([2, 0], [3, 1]))
        store.merge_inliers(1, 2, pairs([2], [9]))
        out = io.StringIO()
        store.write(out)
        assert out.getvalue() == ('TRACK 0 (0,1) (1,0)\n'
                                  'TRACK 1 (0,3) (1,2) (2,9)\n')

    def test_write_file(self, tmp_path):
        store = TrackStore()
        store.merge_inliers(0, 1, pairs([0], [0]))
        path = str(tmp_path/'tracks.txt')
        store.write(path)
        with open(path) as f:
            assert f.read() == 'TRACK 0 (0,0) (1,0)\n'

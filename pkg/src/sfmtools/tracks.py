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

"""Multi-view point tracks built from verified pair inliers."""

from collections import defaultdict
import logging

import numpy as np

from sfmtools.matcher import Correspondences
from sfmtools.posegraph import UnionFind

__all__ = ['TrackStore']

logger = logging.getLogger(__name__)


class TrackStore(object):
    """Union-find over (view, keypoint) observations.

    A track holds at most one keypoint per view. A merge that would put two
    keypoints of one view into the same track is refused and both tracks are
    flagged; flagged tracks (and tracks later merged with them) are left out
    of :meth:`shared_correspondences`.

    """

    def __init__(self):
        self._uf = UnionFind()
        self._members = dict()
        self._flagged = set()
        self._by_view = defaultdict(set)

    def _add(self, obs):
        if obs not in self._uf:
            self._uf.add(obs)
            self._members[obs] = {obs[0]: obs[1]}
            self._by_view[obs[0]].add(obs[1])

    @property
    def n_tracks(self):
        return self._uf.components

    @property
    def n_observations(self):
        return len(self._uf)

    def merge_inliers(self, view_i, view_j, correspondences):
        """Merges the tracks of inlier correspondences of a view pair.

        :param correspondences: inlier :class:`Correspondences` of the pair
        :return:                number of refused (conflicting) merges

        """
        refused = 0
        for p, q in zip(correspondences.idx1.tolist(),
                        correspondences.idx2.tolist()):
            a, b = (view_i, p), (view_j, q)
            self._add(a)
            self._add(b)
            ra, rb = self._uf.find(a), self._uf.find(b)
            if ra == rb:
                continue
            ma, mb = self._members[ra], self._members[rb]
            if len(ma) > len(mb):
                ma, mb = mb, ma
            if any(v in mb for v in ma):
                self._flagged.update((ra, rb))
                refused += 1
                continue
            root = self._uf.union(a, b)
            merged = self._members.pop(ra)
            merged.update(self._members.pop(rb))
            self._members[root] = merged
            if ra in self._flagged or rb in self._flagged:
                self._flagged.difference_update((ra, rb))
                self._flagged.add(root)
        if refused:
            logger.debug(f'Pair ({view_i}, {view_j}): {refused} conflicting '
                         f'track merges refused')
        return refused

    def track_of(self, view, kp):
        """Track members ``{view: kp}`` of an observation, or None."""
        if (view, kp) not in self._uf:
            return None
        return dict(self._members[self._uf.find((view, kp))])

    def is_flagged(self, view, kp):
        return ((view, kp) in self._uf
                and self._uf.find((view, kp)) in self._flagged)

    def shared_correspondences(self, view_s, view_d):
        """Keypoint pairs of unflagged tracks seen in both views.

        :rtype: :class:`sfmtools.matcher.Correspondences`, sorted by the
                keypoint index in *view_s*

        """
        idx_s, idx_d = [], []
        for kp in sorted(self._by_view.get(view_s, ())):
            root = self._uf.find((view_s, kp))
            if root in self._flagged:
                continue
            other = self._members[root].get(view_d)
            if other is not None:
                idx_s.append(kp)
                idx_d.append(other)
        return Correspondences.from_pairs(np.array(idx_s, dtype=np.int64),
                                          np.array(idx_d, dtype=np.int64))

    def tracks(self):
        """All tracks as sorted lists of (view, kp), ordered by first one."""
        return sorted(sorted(m.items()) for m in self._members.values())

    def write(self, out):
        """Writes ``TRACK <id> (view,kp) ...`` lines.

        :param out: file name or text stream

        """
        if isinstance(out, str):
            with open(out, 'w') as f:
                return self.write(f)
        for num, track in enumerate(self.tracks()):
            obs = ' '.join(f'({v},{k})' for v, k in track)
            out.write(f'TRACK {num} {obs}\n')

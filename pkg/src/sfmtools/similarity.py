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

"""Global image similarity and pair scheduling."""

import numpy as np

from sfmtools import DimensionMismatchError, SfmException

__all__ = ['similarity_from_descriptors', 'similarity_from_visibility',
           'ordered_pairs', 'save_similarity', 'load_similarity']


def _finish(s):
    s = np.clip((s + s.T)/2.0, 0.0, 1.0)
    np.fill_diagonal(s, 1.0)
    return s


def similarity_from_descriptors(descriptors):
    """Inner-product similarity of global image descriptors.

    Rows are normalized to unit length first; negative inner products are
    clamped to 0.

    :param descriptors: (n, D) array, one descriptor per view
    :return:            (n, n) symmetric matrix with unit diagonal
    :raises:            :exc:`sfmtools.DimensionMismatchError`

    """
    try:
        x = np.array(descriptors, dtype=float)
    except ValueError as e:
        raise DimensionMismatchError(f'Descriptors differ in length: {e}')
    if x.ndim != 2:
        raise DimensionMismatchError(f'Descriptors must form an (n, D) '
                                     f'matrix, got shape {x.shape}')
    norms = np.linalg.norm(x, axis=1)
    norms[norms == 0] = 1.0
    x /= norms[:, None]
    return _finish(x @ x.T)


def similarity_from_visibility(visibility):
    """Co-visibility similarity from a (views x points) boolean matrix.

    ``|V_i & V_j| / sqrt(|V_i| |V_j|)``, the cosine of the visibility
    vectors; views seeing nothing have similarity 0 to all others.

    """
    v = np.asarray(visibility, dtype=float)
    shared = v @ v.T
    counts = np.sqrt(np.diag(shared))
    denom = np.outer(counts, counts)
    with np.errstate(divide='ignore', invalid='ignore'):
        s = np.where(denom > 0, shared/denom, 0.0)
    return _finish(s)


def ordered_pairs(similarity, min_similarity=0.4):
    """View pairs above a similarity threshold, most similar first.

    :param     similarity: (n, n) similarity matrix
    :param min_similarity: pairs must exceed this value
    :return:               list of (i, j) with i < j, ties ordered by (i, j)

    """
    s = np.asarray(similarity)
    i, j = np.triu_indices(len(s), k=1)
    keep = s[i, j] > min_similarity
    i, j = i[keep], j[keep]
    order = np.lexsort((j, i, -s[i, j]))
    return [(int(a), int(b)) for a, b in zip(i[order], j[order])]


def save_similarity(similarity, path):
    """Writes the similarity matrix as CSV."""
    np.savetxt(path, np.asarray(similarity), delimiter=',', fmt='%.10g')


def load_similarity(path):
    """Reads a similarity matrix written by :func:`save_similarity`."""
    s = np.loadtxt(path, delimiter=',', ndmin=2)
    if s.shape[0] != s.shape[1]:
        raise SfmException(f'{path}: similarity matrix is not square')
    return s

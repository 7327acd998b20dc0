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

"""Shared code for the sfm_build, sfm_sweep and sfm_bench scripts."""

import logging
import sys

from sfmtools import SfmException
from sfmtools.pipeline import PipelineConfig, NONE
from sfmtools.posegraph import ASTAR, BFS
from sfmtools.util import SfmAppResources, SfmPropertiesFile

__all__ = ['get_app_properties', 'add_pipeline_arguments',
           'pipeline_config', 'load_conf', 'configure_logging']

TRAVERSALS = (ASTAR, BFS, NONE)

# Pipeline settings accepted in config files, mapped to PipelineConfig
# field names; a tuple type lists the allowed choices
PIPELINE_PROPERTIES = (('lambda', float, 'lam'),
                       ('max_depth', int, 'max_depth'),
                       ('bin_count', int, 'bin_count'),
                       ('min_similarity', float, 'min_similarity'),
                       ('min_inliers', int, 'min_inliers'),
                       ('ransac_max_iterations', int, 'ransac_max_iterations'),
                       ('inlier_threshold_px', float, 'inlier_threshold_px'),
                       ('snn_base', float, 'snn_base'),
                       ('snn_ratio', float, 'snn_ratio'),
                       ('single_candidate_max_distance', float,
                        'single_candidate_max_distance'),
                       ('thread_count', int, 'thread_count'),
                       ('enable_astar', bool, 'enable_astar'),
                       ('enable_epipolar_hashing', bool,
                        'enable_epipolar_hashing'),
                       ('enable_adaptive_ranking', bool,
                        'enable_adaptive_ranking'),
                       ('traversal', TRAVERSALS, 'traversal'),
                       ('spanning_tree_only', bool, 'spanning_tree_only'),
                       ('ransac_confidence', float, 'ransac_confidence'),
                       ('prosac_growth_max', int, 'prosac_growth_max'),
                       ('refit_translation', bool, 'refit_translation'),
                       ('max_walks', int, 'max_walks'),
                       ('seed', int, 'seed'),
                       ('deterministic', bool, 'deterministic'))

# Command line options, (flag, property, type, help)
_VALUE_OPTIONS = (('--lambda', 'lambda', float,
                   'walk heuristic quality weight [0.8]'),
                  ('--max-depth', 'max_depth', int, 'maximum walk length [5]'),
                  ('--bin-count', 'bin_count', int,
                   'epipolar hash bins [45]'),
                  ('--min-similarity', 'min_similarity', float,
                   'pairs need a larger similarity [0.4]'),
                  ('--min-inliers', 'min_inliers', int,
                   'inliers to accept a pose [20]'),
                  ('--ransac-max-iterations', 'ransac_max_iterations', int,
                   'PROSAC iteration limit [5000]'),
                  ('--inlier-threshold', 'inlier_threshold_px', float,
                   'Sampson inlier threshold in pixels [2]'),
                  ('--snn-base', 'snn_base', float,
                   'ratio threshold at large candidate pools [0.9]'),
                  ('--snn-ratio', 'snn_ratio', float,
                   'ratio threshold of pose-free matching [0.8]'),
                  ('--single-candidate-max-distance',
                   'single_candidate_max_distance', float,
                   'descriptor distance gate for single candidates [0.5]'),
                  ('--threads', 'thread_count', int,
                   'worker threads [$SFMTOOLS_THREADS or 1]'),
                  ('--ransac-confidence', 'ransac_confidence', float,
                   'PROSAC confidence [0.99]'),
                  ('--prosac-growth-max', 'prosac_growth_max', int,
                   'PROSAC growth horizon [200000]'),
                  ('--max-walks', 'max_walks', int,
                   'walks tried per pair, 0 for no limit [200]'),
                  ('--seed', 'seed', int, 'random seed [0]'))

# Switches turning a boolean property to the given value
_SWITCHES = (('--no-astar', 'enable_astar', False,
              'disable pose-graph walks'),
             ('--no-epipolar-hashing', 'enable_epipolar_hashing', False,
              'guided matching by brute force'),
             ('--no-adaptive-ranking', 'enable_adaptive_ranking', False,
              'order PROSAC by ratio test only'),
             ('--spanning-tree-only', 'spanning_tree_only', True,
              'match only a maximum-similarity spanning tree'),
             ('--no-refit-translation', 'refit_translation', False,
              'use composed walk translations as is'),
             ('--deterministic', 'deterministic', True,
              'write zero times for reproducible output'))


def _dest(name):
    return name.replace('-', '_').lstrip('_')


def get_app_properties(path=None, create=False):
    """Gets a properties config object for the app.

    :param   path: explicit INI file (the user config ``sfm_build.ini``
                   if None)
    :type    path: str
    :param create: if True, create config file if it does not exist
    :return:       validated properties file
    :rtype:        :class:`sfmtools.util.SfmPropertiesFile`
    :raises:       :exc:`sfmtools.SfmException`

    """
    default_prop = tuple((name, _type)
                         for name, _type, _ in PIPELINE_PROPERTIES)
    default_prop += (('verbose', bool),)
    general_prop = (('output_dir', str),)
    ar = SfmAppResources(appname='sfm_build', author='Cloudberries')
    if path is None:
        path = ar.user_config_ini_path()
    try:
        if create and path == ar.user_config_ini_path():
            conf = ar.user_properties_ini(defaults=default_prop,
                                          general=general_prop, create=True)
        else:
            conf = SfmPropertiesFile(path, defaults=default_prop,
                                     general=general_prop, create=create)
    except SfmException:
        raise SfmException(f'Could not load config file "{path}"')
    issues = conf.validate()
    if issues:
        issues_str = ', '.join(f'"{i}"' for i in issues)
        raise SfmException(f'Invalid config file: {issues_str}')
    return conf


def add_pipeline_arguments(parser):
    """Registers the pipeline and config file options on a parser."""
    for flag, _, _type, _help in _VALUE_OPTIONS:
        parser.add_argument(flag, metavar='N' if _type is int else 'X',
                            nargs=1, type=_type, default=[None], help=_help)
    parser.add_argument('--traversal', nargs=1, type=str.lower,
                        default=[None], choices=TRAVERSALS,
                        help='walk search order, none for pure RANSAC '
                        '[astar]')
    for flag, _, _, _help in _SWITCHES:
        parser.add_argument(flag, action='store_true', help=_help)
    parser.add_argument('-c', '--conf', action='store_true',
                        help='use the application config file')
    parser.add_argument('--conf-file', metavar='INI', nargs=1, type=str,
                        default=[None], help='use this config file')
    parser.add_argument('-p', '--profile', metavar='NAME', nargs=1,
                        type=str, default=[None, ],
                        help='profile in config file')


def pipeline_config(args, conf=None, profile=None):
    """Builds the pipeline configuration from parsed arguments.

    Precedence is command line, then config profile, then config defaults,
    then built-in defaults (the thread count default may come from
    SFMTOOLS_THREADS).

    :param    args: namespace from a parser set up with
                    :func:`add_pipeline_arguments`
    :param    conf: properties file, or None
    :type     conf: :class:`sfmtools.util.SfmPropertiesFile`
    :rtype:         :class:`PipelineConfig`

    """
    fields = {name: field for name, _, field in PIPELINE_PROPERTIES}
    values = dict()
    if conf:
        for name, value in conf.values(profile).items():
            if name in fields:
                values[fields[name]] = value

    for flag, name, _, _ in _VALUE_OPTIONS:
        value, = getattr(args, _dest(flag))
        if value is not None:
            values[fields[name]] = value
    traversal, = args.traversal
    if traversal is not None:
        values['traversal'] = traversal
    for flag, name, value, _ in _SWITCHES:
        if getattr(args, _dest(flag)):
            values[fields[name]] = value

    config = PipelineConfig(**values)
    config.validate()
    return config


def load_conf(args):
    """Properties file selected by --conf or --conf-file, or None."""
    conf_file, = args.conf_file
    if conf_file is not None:
        return get_app_properties(path=conf_file)
    elif args.conf:
        return get_app_properties()
    return None


def configure_logging(verbose=False, debug=False):
    """Sends sfmtools log records to stderr at INFO (or DEBUG) level."""
    if not verbose and not debug:
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: '
                                           '%(message)s'))
    logger = logging.getLogger('sfmtools')
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if debug else logging.INFO)

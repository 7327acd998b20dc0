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

"""Builds the initial pose-graph of a scene."""

from argparse import ArgumentParser, RawDescriptionHelpFormatter
import os
import sys
import textwrap

from sfmtools import SfmException, __version__
from sfmtools.apps.sfmbuild import (add_pipeline_arguments, pipeline_config,
                                    load_conf, configure_logging)
from sfmtools.matcher import load_features, load_global_descriptors
from sfmtools.pipeline import (run_pipeline, write_report, WALK,
                               RANSAC_FALLBACK, SKIPPED)
from sfmtools.posegraph import write_pose_graph
from sfmtools.scene import Scene, read_scene
from sfmtools.similarity import similarity_from_descriptors
from sfmtools.util import Utility


class Arguments(object):
    """Handles command line argument parsing.

    Parses sysv.args arguments and registers relevant as attributes
    on the :class:`Arguments` object.

    """

    def __init__(self):
        epilog = """
        Default argument values are shown in [brackets]. Input is either a
        scene directory (as written by sfm_generate) or a list of feature
        files with --features together with a global descriptor file. With
        --conf the config file sfm_build.ini in the user config directory is
        loaded; --conf-file loads a given file. Command line options take
        precedence over the selected --profile, which takes precedence over
        the [DEFAULT] section. The output directory receives posegraph.txt,
        tracks.txt, pairs.csv, summary.csv and errors.csv.

        """
        epilog = textwrap.dedent(epilog)
        formatter = RawDescriptionHelpFormatter
        parser = ArgumentParser(description='Build an initial pose-graph.',
                                formatter_class=formatter, epilog=epilog)
        parser.add_argument('scene', metavar='DIR', nargs='?', type=str,
                            default=None, help='scene directory')
        parser.add_argument('-f', '--features', metavar='FILE',
                            action='extend', nargs='+', default=[], type=str,
                            help='per-view feature files (.json or .npz)')
        parser.add_argument('-d', '--descriptors', metavar='FILE', nargs=1,
                            type=str, default=[None],
                            help='global image descriptors (.npy or .json)')
        parser.add_argument('-o', '--output', metavar='DIR', nargs=1,
                            type=str, default=[None],
                            help='output directory [sfm_output]')
        add_pipeline_arguments(parser)
        parser.add_argument('-v', '--verbose', action='store_true',
                            help='enable verbose output to stderr')
        parser.add_argument('--debug', action='store_true',
                            help='enable debug logging to stderr')
        parser.add_argument('--exc', action='store_true',
                            help='show full python exception traces')
        parser.add_argument('--version', action='version',
                            version=f'%(prog)s {__version__}')
        args = parser.parse_args(sys.argv[1:])

        self.scene = args.scene
        self.features = args.features
        self.descriptors, = args.descriptors
        self.output, = args.output
        self.profile, = args.profile
        self.verbose = args.verbose
        self.debug = args.debug
        self.exc = args.exc

        # Load config file if requested
        self.conf = load_conf(args)
        if self.conf:
            c_prop = self.conf.get_property
        else:
            c_prop = lambda prop, profile, default: default
        profile = self.profile
        self.config = pipeline_config(args, self.conf, profile)

        if self.output is None and profile is not None:
            self.output = c_prop('output_dir', profile=profile, default=None)
        if self.output is None:
            self.output = 'sfm_output'
        self.output = os.path.expanduser(self.output)
        if not self.verbose:
            self.verbose = c_prop('verbose', profile=profile, default=False)


def main():
    args = None
    try:
        args = Arguments()
        verb = lambda msg: sys.stderr.write(msg+'\n') if args.verbose else None
        configure_logging(args.verbose, args.debug)
        if args.conf:
            _conf_file = Utility.path_relative_to_home(args.conf.filename)
            verb(f'\nLoaded app properties file:\n{_conf_file}')

        if args.scene and args.features:
            raise SfmException('Give either a scene directory or --features')
        if args.scene:
            scene = read_scene(args.scene)
            verb(f'\nLoaded scene {args.scene} with {scene.n_views} views')
        elif args.features:
            if args.descriptors is None:
                raise SfmException('--features requires --descriptors')
            features = []
            for path in args.features:
                dim = features[0].descriptor_dim if features else None
                features.append(load_features(path, descriptor_dim=dim))
            sim = similarity_from_descriptors(
                load_global_descriptors(args.descriptors))
            scene = Scene(features, sim)
            verb(f'\nLoaded {scene.n_views} feature files')
        else:
            raise SfmException('No input, give a scene directory or '
                               '--features')

        config = args.config
        verb(f'- traversal          : {config.traversal}'
             f'{" (spanning tree)" if config.spanning_tree_only else ""}')
        verb(f'- lambda / max depth : {config.lam} / {config.max_depth}')
        verb(f'- threads            : {config.thread_count}')

        def progress(record):
            verb(f'- pair {record.pair:>9}: {record.method} '
                 f'({record.inliers} inliers)')
        run = run_pipeline(scene, config, progress=progress)

        os.makedirs(args.output, exist_ok=True)
        write_pose_graph(run.graph, os.path.join(args.output,
                                                 'posegraph.txt'))
        run.tracks.write(os.path.join(args.output, 'tracks.txt'))
        write_report(run, args.output)

        _out_dir = Utility.path_relative_to_home(args.output)
        verb(f'\nBuilt pose-graph with {len(run.graph)} edges and '
             f'{run.graph.components} components:')
        for method in (WALK, RANSAC_FALLBACK, SKIPPED):
            verb(f'- {method:<18} : {run.count(method)} pairs')
        verb(f'\nOutput written to {_out_dir}\n')
    except Exception as e:
        sys.stderr.write(f'\nError: {e}\n\n')
        if args and args.exc:
            raise e
        sys.exit(1)


if __name__ == '__main__':
    main()

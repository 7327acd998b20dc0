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

"""Sweeps the walk heuristic weight and depth on a scene."""

from argparse import ArgumentParser, RawDescriptionHelpFormatter
import sys
import textwrap

from sfmtools import SfmException, __version__
from sfmtools.apps.sfmbuild import (add_pipeline_arguments, pipeline_config,
                                    load_conf, configure_logging)
from sfmtools.pipeline import sweep_heuristic, write_sweep
from sfmtools.scene import SceneConfig, generate, read_scene
from sfmtools.util import Utility


class Arguments(object):
    """Handles command line argument parsing.

    Parses sysv.args arguments and registers relevant as attributes
    on the :class:`Arguments` object.

    """

    def __init__(self):
        epilog = """
        Default argument values are shown in [brackets]. The scene must have
        ground-truth cameras and keypoint identities (as written by
        sfm_generate); without a scene directory a ring scene is generated
        with --seed. Every pair above the similarity threshold gets a noisy
        ground-truth edge; the other pairs with enough true correspondences
        are solved from graph walks for every (lambda, depth) combination.

        """
        epilog = textwrap.dedent(epilog)
        formatter = RawDescriptionHelpFormatter
        parser = ArgumentParser(description='Sweep walk heuristic '
                                            'parameters.',
                                formatter_class=formatter, epilog=epilog)
        parser.add_argument('scene', metavar='DIR', nargs='?', type=str,
                            default=None, help='scene directory')
        parser.add_argument('-o', '--output', metavar='CSV', nargs=1,
                            type=str, required=True, help='output CSV file')
        parser.add_argument('--lambdas', metavar='X', nargs='+', type=float,
                            default=[0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
                            help='quality weights [0 0.2 0.4 0.6 0.8 1]')
        parser.add_argument('--depths', metavar='N', nargs='+', type=int,
                            default=[1, 2, 3, 4, 5, 6],
                            help='maximum walk lengths [1 2 3 4 5 6]')
        parser.add_argument('--corrupt-fraction', metavar='F', nargs=1,
                            type=float, default=[0.1],
                            help='share of edges with a random pose [0.1]')
        parser.add_argument('--max-noise', metavar='DEG', nargs=1,
                            type=float, default=[0.25],
                            help='edge noise angle at lowest quality [0.25]')
        parser.add_argument('--max-pairs', metavar='N', nargs=1, type=int,
                            default=[None], help='evaluate at most N pairs')
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
        self.output, = args.output
        self.lambdas = args.lambdas
        self.depths = args.depths
        self.corrupt_fraction, = args.corrupt_fraction
        self.max_noise, = args.max_noise
        self.max_pairs, = args.max_pairs
        self.profile, = args.profile
        self.verbose = args.verbose
        self.debug = args.debug
        self.exc = args.exc
        self.conf = load_conf(args)
        self.config = pipeline_config(args, self.conf, self.profile)


def main():
    args = None
    try:
        args = Arguments()
        verb = lambda msg: sys.stderr.write(msg+'\n') if args.verbose else None
        configure_logging(args.verbose, args.debug)

        if args.scene:
            scene = read_scene(args.scene)
        else:
            scene = generate(SceneConfig(seed=args.config.seed))
        if not scene.has_ground_truth or scene.point_ids is None:
            raise SfmException('Sweep needs ground-truth cameras and '
                               'keypoint identities')
        verb(f'\nSweeping {len(args.lambdas)} weights x {len(args.depths)} '
             f'depths on {scene.n_views} views')
        rows = sweep_heuristic(scene, args.lambdas, args.depths, args.config,
                               corrupt_fraction=args.corrupt_fraction,
                               max_noise_deg=args.max_noise,
                               max_pairs=args.max_pairs)
        write_sweep(rows, args.output)
        for r in rows:
            verb(f'- lambda {r.lam:.2f} depth {r.max_depth}: success '
                 f'{r.success_rate:.3f}, nodes {r.nodes_visited:.1f}')
        _out_file = Utility.path_relative_to_home(args.output)
        verb(f'\nSweep written to {_out_file}\n')
    except Exception as e:
        sys.stderr.write(f'\nError: {e}\n\n')
        if args and args.exc:
            raise e
        sys.exit(1)


if __name__ == '__main__':
    main()

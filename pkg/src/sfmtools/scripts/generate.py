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

"""Generates a synthetic scene with ground truth."""

from argparse import ArgumentParser, RawDescriptionHelpFormatter
import os
import sys
import textwrap

from sfmtools import SfmException, __version__
from sfmtools.apps.sfmbuild import configure_logging
from sfmtools.scene import SceneConfig, generate, write_scene
from sfmtools.util import Utility


class Arguments(object):
    """Handles command line argument parsing.

    Parses sysv.args arguments and registers relevant as attributes
    on the :class:`Arguments` object.

    """

    def __init__(self):
        epilog = """
        Default argument values are shown in [brackets]. The scene is a
        textured tower seen by cameras on a ring (or an arc) around it. The
        output directory receives one feature file per view, the view
        similarity matrix (similarity.csv), the ground-truth cameras
        (cameras.json) and the point identity of every keypoint
        (observations.npz).

        """
        epilog = textwrap.dedent(epilog)
        formatter = RawDescriptionHelpFormatter
        parser = ArgumentParser(description='Generate a synthetic scene.',
                                formatter_class=formatter, epilog=epilog)
        parser.add_argument('output', metavar='DIR', type=str,
                            help='output directory')
        parser.add_argument('--seed', metavar='N', nargs=1, type=int,
                            default=[0], help='random seed [0]')
        parser.add_argument('--cameras', metavar='N', nargs=1, type=int,
                            default=[30], help='number of cameras [30]')
        parser.add_argument('--points', metavar='N', nargs=1, type=int,
                            default=[4000], help='number of 3D points [4000]')
        parser.add_argument('--noise', metavar='PX', nargs=1, type=float,
                            default=[1.0], help='keypoint noise std [1]')
        parser.add_argument('--outliers', metavar='F', nargs=1, type=float,
                            default=[0.2], help='clutter share of point '
                            'identities [0.2]')
        parser.add_argument('--descriptor-dim', metavar='N', nargs=1,
                            type=int, default=[128],
                            help='descriptor dimension [128]')
        parser.add_argument('--layout', nargs=1, type=str.lower,
                            default=['ring'], choices=['ring', 'arc'],
                            help='camera layout')
        parser.add_argument('--arc-degrees', metavar='DEG', nargs=1,
                            type=float, default=[90.0],
                            help='angle spanned by an arc layout [90]')
        parser.add_argument('--format', nargs=1, type=str.lower,
                            default=['json'], choices=['json', 'npz'],
                            help='feature file format')
        parser.add_argument('--overwrite', action='store_true',
                            help='write into an existing non-empty directory')
        parser.add_argument('-v', '--verbose', action='store_true',
                            help='enable verbose output to stderr')
        parser.add_argument('--debug', action='store_true',
                            help='enable debug logging to stderr')
        parser.add_argument('--exc', action='store_true',
                            help='show full python exception traces')
        parser.add_argument('--version', action='version',
                            version=f'%(prog)s {__version__}')
        args = parser.parse_args(sys.argv[1:])

        self.output = args.output
        self.seed, = args.seed
        self.cameras, = args.cameras
        self.points, = args.points
        self.noise, = args.noise
        self.outliers, = args.outliers
        self.descriptor_dim, = args.descriptor_dim
        self.layout, = args.layout
        self.arc_degrees, = args.arc_degrees
        self.format, = args.format
        self.overwrite = args.overwrite
        self.verbose = args.verbose
        self.debug = args.debug
        self.exc = args.exc


def main():
    args = None
    try:
        args = Arguments()
        verb = lambda msg: sys.stderr.write(msg+'\n') if args.verbose else None
        configure_logging(args.verbose, args.debug)

        if (os.path.isdir(args.output) and os.listdir(args.output)
                and not args.overwrite):
            raise SfmException(f'Output directory {args.output} is not '
                               f'empty (use --overwrite)')
        config = SceneConfig(seed=args.seed, n_cameras=args.cameras,
                             n_points=args.points, noise_px=args.noise,
                             outlier_fraction=args.outliers,
                             descriptor_dim=args.descriptor_dim,
                             layout=args.layout, arc_degrees=args.arc_degrees)
        scene = generate(config)
        write_scene(scene, args.output, fmt=args.format)

        _out_dir = Utility.path_relative_to_home(args.output)
        sizes = [len(f) for f in scene.features]
        verb(f'\nGenerated scene in {_out_dir}:')
        verb(f'- views              : {scene.n_views}')
        verb(f'- keypoints per view : {min(sizes)} to {max(sizes)}')
        verb(f'- clutter identities : {int(scene.clutter.sum())}')
        verb('')
    except Exception as e:
        sys.stderr.write(f'\nError: {e}\n\n')
        if args and args.exc:
            raise e
        sys.exit(1)


if __name__ == '__main__':
    main()

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

"""Times the matchers and the correspondence orderings."""

from argparse import ArgumentParser, RawDescriptionHelpFormatter
import sys
import textwrap

from sfmtools import SfmException, __version__
from sfmtools.apps.sfmbuild import (add_pipeline_arguments, pipeline_config,
                                    load_conf, configure_logging)
from sfmtools.pipeline import bench_matcher, bench_ranking, write_bench
from sfmtools.util import Utility


class Arguments(object):
    """Handles command line argument parsing.

    Parses sysv.args arguments and registers relevant as attributes
    on the :class:`Arguments` object.

    """

    def __init__(self):
        epilog = """
        Default argument values are shown in [brackets]. The matcher
        benchmark matches one synthetic pair with epipolar hashing, with
        pose-guided brute force and with plain descriptor brute force. The
        ranking benchmark estimates the outer pair of three-view scenes with
        PROSAC under uniform, ratio-test and adaptive orderings. Rows report
        medians over trials.

        """
        epilog = textwrap.dedent(epilog)
        formatter = RawDescriptionHelpFormatter
        parser = ArgumentParser(description='Benchmark matching and '
                                            'robust estimation.',
                                formatter_class=formatter, epilog=epilog)
        parser.add_argument('-o', '--output', metavar='CSV', nargs=1,
                            type=str, required=True, help='output CSV file')
        parser.add_argument('--keypoints', metavar='N', nargs=1, type=int,
                            default=[8000],
                            help='keypoints per image for matching [8000]')
        parser.add_argument('--trials', metavar='N', nargs=1, type=int,
                            default=[10], help='ranking trials [10]')
        parser.add_argument('--outliers', metavar='F', nargs=1, type=float,
                            default=[0.7], help='clutter share in ranking '
                            'scenes [0.7]')
        parser.add_argument('--points', metavar='N', nargs=1, type=int,
                            default=[600], help='points in ranking scenes '
                            '[600]')
        parser.add_argument('--skip', nargs=1, type=str.lower, default=[None],
                            choices=['matcher', 'ranking'],
                            help='leave out one benchmark')
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

        self.output, = args.output
        self.keypoints, = args.keypoints
        self.trials, = args.trials
        self.outliers, = args.outliers
        self.points, = args.points
        self.skip, = args.skip
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
        if args.trials < 1 or args.keypoints < 1:
            raise SfmException('--trials and --keypoints must be positive')

        rows = []
        if args.skip != 'matcher':
            verb(f'\nMatching {args.keypoints} keypoints per image')
            rows += bench_matcher(args.keypoints, args.config.seed,
                                  args.config)
        if args.skip != 'ranking':
            verb(f'\nRanking benchmark over {args.trials} trials')
            rows += bench_ranking(args.trials, args.config.seed,
                                  args.outliers, args.points,
                                  config=args.config)
        write_bench(rows, args.output)
        for r in rows:
            verb(f'- {r.name:<18}: {r.time_s:.3f} s')
        _out_file = Utility.path_relative_to_home(args.output)
        verb(f'\nBenchmark written to {_out_file}\n')
    except Exception as e:
        sys.stderr.write(f'\nError: {e}\n\n')
        if args and args.exc:
            raise e
        sys.exit(1)


if __name__ == '__main__':
    main()

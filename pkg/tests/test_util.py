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

import argparse
import logging
import os

import pytest

from sfmtools import SfmException, ConfigInvalidError
from sfmtools.apps.sfmbuild import (get_app_properties,
                                    add_pipeline_arguments, pipeline_config,
                                    load_conf, configure_logging)
from sfmtools.pipeline import PipelineConfig
from sfmtools.util import (SfmAppResources, SfmConfigFile, SfmPropertiesFile,
                           Utility)

EXAMPLE_INI = os.path.join(os.path.dirname(__file__), os.pardir, 'src',
                           'sfmtools', 'examples', 'sfm_build.ini')

PROPERTIES = dict(defaults=(('lambda', float), ('max_depth', int)),
                  general=(('output_dir', str),))


def parse(*argv):
    parser = argparse.ArgumentParser()
    add_pipeline_arguments(parser)
    return parser.parse_args(list(argv))


@pytest.fixture
def no_thread_env(monkeypatch):
    monkeypatch.delenv('SFMTOOLS_THREADS', raising=False)


@pytest.fixture
def ini(tmp_path):
    path = tmp_path/'sfm_build.ini'
    path.write_text('[DEFAULT]\n'
                    'lambda = 0.5\n'
                    'max_depth = 3\n'
                    'spanning_tree_only = true\n'
                    '\n'
                    '[fast]\n'
                    'lambda = 0.3  # inline comment\n'
                    'traversal = bfs\n'
                    'thread_count = 2\n'
                    'output_dir = /tmp/fast\n')
    return str(path)


class TestConfigFile:

    def test_missing(self, tmp_path):
        with pytest.raises(SfmException):
            SfmConfigFile(str(tmp_path/'missing.ini'))

    def test_create(self, tmp_path):
        path = str(tmp_path/'new.ini')
        conf = SfmConfigFile(path, create=True)
        assert os.path.isfile(path)
        assert conf.filename == path
        assert conf.profile_names() == []

    def test_profiles(self, tmp_path):
        path = str(tmp_path/'new.ini')
        conf = SfmConfigFile(path, create=True)
        conf.add_profile('first')['key'] = 'value'
        conf.add_profile('first', silent=True)
        with pytest.raises(SfmException):
            conf.add_profile('first')
        with pytest.raises(SfmException):
            conf.add_profile('DEFAULT')
        with pytest.raises(SfmException):
            conf.profile('second')
        conf.default_profile()['shared'] = '1'
        conf.save()
        again = SfmConfigFile(path)
        assert again.profile_names() == ['first']
        assert again.profile('first')['key'] == 'value'
        assert again.profile('first')['shared'] == '1'


class TestPropertiesFile:

    def test_typed_values(self, tmp_path):
        conf = SfmPropertiesFile(str(tmp_path/'p.ini'), create=True,
                                 **PROPERTIES)
        assert conf.get_property('lambda') is None
        assert conf.get_property('lambda', default=0.8) == 0.8
        conf.set_property('lambda', 0.25)
        conf.set_property('max_depth', 4)
        conf.add_profile('run')
        conf.set_property('max_depth', 2, profile='run')
        conf.set_property('output_dir', '/data', profile='run')
        assert conf.get_property('lambda') == 0.25
        assert conf.get_property('max_depth') == 4
        assert conf.get_property('max_depth', profile='run') == 2
        # profiles fall back to the defaults section
        assert conf.get_property('lambda', profile='run') == 0.25
        assert conf.get_property('output_dir', profile='run') == '/data'
        assert conf.properties == {'lambda', 'max_depth', 'output_dir'}
        assert conf.validate() == []

    def test_illegal_properties(self, tmp_path):
        conf = SfmPropertiesFile(str(tmp_path/'p.ini'), create=True,
                                 **PROPERTIES)
        conf.add_profile('run')
        with pytest.raises(SfmException):
            conf.get_property('output_dir')
        with pytest.raises(SfmException):
            conf.get_property('colour', profile='run')
        with pytest.raises(SfmException):
            conf.set_property('max_depth', 'deep')

    def test_values_and_choices(self, tmp_path):
        path = tmp_path/'p.ini'
        path.write_text('[DEFAULT]\nlambda = 0.5\nmode = BFS\nfast = true\n'
                        '\n[run]\nlambda = 0.25\n')
        conf = SfmPropertiesFile(str(path),
                                 defaults=(('lambda', float),
                                           ('mode', ('astar', 'bfs')),
                                           ('fast', bool)))
        assert conf.values() == {'lambda': 0.5, 'mode': 'bfs', 'fast': True}
        assert conf.values('run') == {'lambda': 0.25, 'mode': 'bfs',
                                      'fast': True}
        conf.set_property('mode', 'astar')
        assert conf.get_property('mode', profile='run') == 'astar'
        with pytest.raises(SfmException):
            conf.set_property('mode', 'dfs')
        with pytest.raises(SfmException):
            conf.set_property('fast', 'yes')

    def test_overlapping_lists(self, tmp_path):
        with pytest.raises(SfmException):
            SfmPropertiesFile(str(tmp_path/'p.ini'), create=True,
                              defaults=(('a', int),), general=(('a', str),))

    def test_validate(self, tmp_path):
        path = tmp_path/'p.ini'
        path.write_text('[DEFAULT]\nlambda = high\ncolour = red\n\n'
                        '[run]\nmax_depth = 2.5\n')
        issues = SfmPropertiesFile(str(path), **PROPERTIES).validate()
        assert 'Default property has wrong type: lambda' in issues
        assert 'Illegal default property name: colour' in issues
        assert '[run] property has wrong type: max_depth' in issues


class TestUtility:

    @pytest.mark.parametrize('value, expected', [('True', True),
                                                 ('false', False),
                                                 (' TRUE ', True),
                                                 (False, False)])
    def test_str_to_bool(self, value, expected):
        assert Utility.str_to_bool(value) is expected

    @pytest.mark.parametrize('value', ['yes', '1', '', None])
    def test_str_to_bool_invalid(self, value):
        with pytest.raises(SfmException):
            Utility.str_to_bool(value, 'flag')

    def test_path_relative_to_home(self, tmp_path, monkeypatch):
        monkeypatch.setenv('HOME', str(tmp_path))
        path = os.path.join(str(tmp_path), 'scenes', 'tower')
        assert Utility.path_relative_to_home(path) == os.path.join(
            '~', 'scenes', 'tower')
        assert Utility.path_relative_to_home('/') == '/'

    def test_app_resources(self, tmp_path):
        ar = SfmAppResources('sfm_build', homedir=str(tmp_path))
        path = ar.user_config_dir(create=True)
        assert os.path.isdir(path)
        assert path.startswith(str(tmp_path))
        assert ar.user_config_ini_path().endswith('sfm_build.ini')
        conf = ar.user_properties_ini(create=True, **PROPERTIES)
        assert os.path.isfile(conf.filename)


class TestPipelineConfig:

    def test_builtin_defaults(self, no_thread_env):
        assert pipeline_config(parse()) == PipelineConfig()

    def test_command_line(self, no_thread_env):
        config = pipeline_config(parse('--lambda', '0.6', '--max-depth', '4',
                                       '--traversal', 'BFS', '--no-astar',
                                       '--deterministic', '--threads', '3'))
        assert config.lam == 0.6
        assert config.max_depth == 4
        assert config.traversal == 'bfs'
        assert not config.enable_astar
        assert config.deterministic
        assert config.thread_count == 3

    def test_precedence(self, no_thread_env, ini):
        conf = get_app_properties(ini)
        config = pipeline_config(parse(), conf)
        assert (config.lam, config.max_depth) == (0.5, 3)
        assert config.spanning_tree_only
        assert config.traversal == 'astar'
        config = pipeline_config(parse(), conf, 'fast')
        assert (config.lam, config.max_depth) == (0.3, 3)
        assert config.traversal == 'bfs'
        assert config.thread_count == 2
        config = pipeline_config(parse('--lambda', '0.9'), conf, 'fast')
        assert config.lam == 0.9

    def test_thread_environment(self, monkeypatch, ini):
        monkeypatch.setenv('SFMTOOLS_THREADS', '5')
        assert pipeline_config(parse()).thread_count == 5
        conf = get_app_properties(ini)
        assert pipeline_config(parse(), conf, 'fast').thread_count == 2
        assert pipeline_config(parse('--threads', '7'), conf,
                               'fast').thread_count == 7

    def test_invalid_values(self, no_thread_env, tmp_path):
        with pytest.raises(ConfigInvalidError):
            pipeline_config(parse('--threads', '0'))
        path = tmp_path/'bad.ini'
        path.write_text('[DEFAULT]\ndeterministic = yes\n')
        with pytest.raises(SfmException):
            pipeline_config(parse(), get_app_properties(str(path)))

    def test_example_file(self, no_thread_env):
        conf = get_app_properties(EXAMPLE_INI)
        assert set(conf.profile_names()) == {'baseline', 'bfs', 'mst'}
        assert pipeline_config(parse(), conf, 'baseline').traversal == 'none'
        assert pipeline_config(parse(), conf, 'mst').spanning_tree_only

    def test_invalid_file(self, tmp_path):
        path = tmp_path/'bad.ini'
        path.write_text('[DEFAULT]\ncolour = red\n')
        with pytest.raises(SfmException):
            get_app_properties(str(path))
        with pytest.raises(SfmException):
            get_app_properties(str(tmp_path/'missing.ini'))

    def test_load_conf(self, ini):
        assert load_conf(parse()) is None
        conf = load_conf(parse('--conf-file', ini))
        assert conf.get_property('max_depth') == 3


class TestLogging:

    def test_quiet(self):
        logger = logging.getLogger('sfmtools')
        before = list(logger.handlers)
        configure_logging()
        assert logger.handlers == before

    def test_verbose(self):
        logger = logging.getLogger('sfmtools')
        before, level = list(logger.handlers), logger.level
        try:
            configure_logging(verbose=True)
            assert logger.level == logging.INFO
            assert len(logger.handlers) == len(before) + 1
        finally:
            logger.handlers = before
            logger.setLevel(level)

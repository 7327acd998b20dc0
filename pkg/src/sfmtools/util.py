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
"""Config files, per-user resources and small helpers."""

import configparser
import os
import os.path
import platform
import tempfile

from sfmtools import SfmException

__all__ = ['SfmAppResources', 'SfmConfigFile', 'SfmPropertiesFile',
           'Utility']

# Per-platform config roots relative to the home directory
_CONFIG_ROOTS = {'Linux': ('.config',),
                 'Darwin': ('Library', 'Application Support')}


class SfmAppResources(object):
    """Standard locations of sfmtools config data for one app.

    :param appname: name of the app, used as INI file prefix
    :type  appname: str
    :param  author: app author (Windows path component)
    :type   author: str
    :param roaming: use the roaming folder on Windows (otherwise local)
    :param homedir: if set, overrides path to user home directory
    :type  homedir: str

    """

    def __init__(self, appname, author='NoAuthor', roaming=False,
                 homedir=None):
        self._platform = platform.system()
        if self._platform not in ('Linux', 'Darwin', 'Windows'):
            raise SfmException(f'Platform {self._platform} not supported')
        self._home = os.path.expanduser('~') if homedir is None else homedir
        self._appname = appname
        self._author = author
        self._roaming = roaming

    def user_config_dir(self, create=False):
        """Directory holding the user's sfmtools config files.

        :param  create: if True create directory if it does not already exist

        """
        if self._platform == 'Windows':
            top = 'Roaming' if self._roaming else 'Local'
            parts = ('AppData', top, self._author)
        else:
            parts = _CONFIG_ROOTS[self._platform]
        path = os.path.join(self._home, *parts, 'sfmtools')
        if create:
            os.makedirs(path, exist_ok=True)
        return path

    def user_config_ini_path(self, prefix=None):
        """Full path of ``<prefix>.ini`` (default ``<appname>.ini``)."""
        return os.path.join(self.user_config_dir(),
                            f'{prefix or self._appname}.ini')

    def user_properties_ini(self, prefix=None, defaults=(), general=(),
                            create=False):
        """Properties file in the user config folder.

        Arguments as for :class:`SfmPropertiesFile`; with *create* the
        config directory and the file are created when missing.

        :rtype: :class:`SfmPropertiesFile`

        """
        self.user_config_dir(create=create)
        return SfmPropertiesFile(self.user_config_ini_path(prefix),
                                 defaults=defaults, general=general,
                                 create=create)


class SfmConfigFile(configparser.ConfigParser):
    """INI file with a ``[DEFAULT]`` section and named profiles.

    Inline ``#`` and ``;`` comments are allowed.

    :param filename: name of config INI file
    :type  filename: str
    :param   create: if True, create the file if it does not already exist

    """

    def __init__(self, filename, create=False):
        super().__init__(inline_comment_prefixes=('#', ';'))
        self._filename = filename
        try:
            found = self.read(filename)
        except configparser.Error as e:
            raise SfmException(f'Invalid INI file {filename}: {e}')
        if found:
            return
        if not create:
            raise SfmException(f'File {filename} does not exist')
        with open(filename, 'w') as f:
            self.write(f)

    def _check_name(self, name):
        if name == self.default_section:
            raise SfmException(f'Illegal profile name: {name}')

    def add_profile(self, name, silent=False):
        """Adds a profile and returns its section.

        :param silent: if False, an existing profile raises an exception
        :rtype:        :class:`configparser.SectionProxy`

        """
        self._check_name(name)
        if self.has_section(name):
            if not silent:
                raise SfmException(f'Profile already exists: {name}')
        else:
            self.add_section(name)
        return self[name]

    def profile(self, name):
        """Section of profile *name*.

        :rtype: :class:`configparser.SectionProxy`

        """
        self._check_name(name)
        if not self.has_section(name):
            raise SfmException(f'No such profile: {name}')
        return self[name]

    def profile_names(self):
        return self.sections()

    def default_profile(self):
        """The ``[DEFAULT]`` section."""
        return self[self.default_section]

    def save(self):
        """Writes the file, replacing the old one atomically."""
        directory = os.path.dirname(os.path.abspath(self._filename))
        with tempfile.NamedTemporaryFile(mode='w', delete=False,
                                         dir=directory) as tf:
            self.write(tf)
        try:
            os.replace(tf.name, self._filename)
        except OSError as e:
            os.remove(tf.name)
            raise SfmException(f'Could not replace config file: {e}')

    @property
    def filename(self):
        return self._filename


class SfmPropertiesFile(SfmConfigFile):
    """Config file restricted to a schema of typed properties.

    Property types are callables converting the stored string; ``bool``
    accepts only "True" and "False" (any case) and a tuple of strings is
    a choice, compared in lower case. Profiles read through to the
    ``[DEFAULT]`` section.

    :param filename: name of config INI file
    :type  filename: str
    :param defaults: (name, type) of properties allowed in every section
    :param  general: additional (name, type) allowed in profiles only
    :param   create: if True, create the file if it does not already exist

    """

    def __init__(self, filename, defaults=(), general=(), create=False):
        super().__init__(filename=filename, create=create)
        self._default_properties = dict(defaults)
        self._general_properties = dict(general)
        if self._default_properties.keys() & self._general_properties.keys():
            raise SfmException('overlapping "defaults" and "general" lists')
        self._properties = {**self._default_properties,
                            **self._general_properties}

    def _section(self, name, profile):
        allowed = (self._default_properties if profile is None
                   else self._properties)
        if name not in allowed:
            kind = 'default property' if profile is None else 'property'
            raise SfmException(f'Not a legal {kind}: {name}')
        if profile is None:
            return self.default_profile()
        return self.profile(profile)

    def _convert(self, name, value):
        _type = self._properties[name]
        if _type is bool:
            return Utility.str_to_bool(value, name)
        if isinstance(_type, tuple):
            value = str(value).strip().lower()
            if value not in _type:
                raise SfmException(f'Property {name} must be one of '
                                   f'{", ".join(_type)}')
            return value
        try:
            return _type(value)
        except (TypeError, ValueError):
            raise SfmException(f'Could not convert property {name} value '
                               f'"{value}" to type {_type.__name__}')

    def get_property(self, name, profile=None, default=None):
        """Typed value of a property, or *default* when it is not set.

        :param profile: profile to read (``[DEFAULT]`` if None)
        :type  profile: str

        """
        section = self._section(name, profile)
        if name not in section:
            return default
        return self._convert(name, section[name])

    def set_property(self, name, value, profile=None):
        """Stores a property value after checking that it converts."""
        section = self._section(name, profile)
        self._convert(name, str(value))
        section[name] = str(value)

    def values(self, profile=None):
        """All properties set for *profile*, as a dict of typed values.

        Values of the profile override the ``[DEFAULT]`` section.

        """
        section = (self.default_profile() if profile is None
                   else self.profile(profile))
        return {name: self._convert(name, section[name])
                for name in section if name in self._properties}

    def validate(self):
        """Names and types of all stored properties.

        Ranges are checked by :meth:`sfmtools.pipeline.PipelineConfig.validate`.

        :return: list of problems, empty if the file is valid

        """
        issues = []
        checks = [(None, 'Default property', 'default property',
                   self._default_properties)]
        checks += [(p, f'[{p}] property', f'[{p}] property', self._properties)
                   for p in self.profile_names()]
        for profile, label, kind, allowed in checks:
            section = (self.default_profile() if profile is None
                       else self.profile(profile))
            for prop in section:
                if prop not in allowed:
                    issues.append(f'Illegal {kind} name: {prop}')
                    continue
                try:
                    self.get_property(prop, profile=profile)
                except SfmException:
                    issues.append(f'{label} has wrong type: {prop}')
        return issues

    @property
    def properties(self):
        """Names allowed in profiles."""
        return set(self._properties)


class Utility(object):
    """Small helpers used by the scripts."""

    _BOOLS = {'true': True, 'false': False}

    @classmethod
    def path_relative_to_home(cls, path, shortest=True):
        """Path written with ``~`` for the home directory.

        :param shortest: if True, only rewrite when the result is shorter
        :rtype:          str

        """
        abs_path = os.path.abspath(path)
        home = os.path.expanduser('~')
        if os.path.commonpath([abs_path, home]) != home:
            return path
        rel = os.path.relpath(abs_path, home)
        rel_path = '~' if rel == os.curdir else os.path.join('~', rel)
        if os.path.isdir(abs_path):
            rel_path = os.path.join(rel_path, '')
        if shortest and len(rel_path) >= len(path):
            return path
        return rel_path

    @classmethod
    def str_to_bool(cls, value, name='value'):
        """Converts "True" and "False" (any case) to bool.

        :raises: :exc:`sfmtools.SfmException` for other values

        """
        if isinstance(value, bool):
            return value
        try:
            return cls._BOOLS[str(value).strip().lower()]
        except KeyError:
            raise SfmException(f'Config option "{name}" must be one of the '
                               f'strings "True" or "False"')

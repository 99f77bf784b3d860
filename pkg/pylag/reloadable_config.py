# This file is part of pylag.
#
# Copyright (C) 2021 pylag developers
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

import json
import logging
import os
import zlib
from typing import List, Optional

import _jsonnet

from pylag import ConfigError

PRESETS_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'config'))

# Since 0.18 the jsonnet import callback returns file contents as bytes.
_IMPORT_AS_BYTES = tuple(int(part) for part in getattr(_jsonnet, 'version', 'v0.0.0').lstrip('v').split('.')[:2]) \
                   >= (0, 18)


class ReloadableConfig:
    """Reloadable jsonnet experiment manifest reader.

    This reader will always read most up-to-date version of the manifest from disk
    on each call to `get_config()`. Imports are resolved relative to the manifest, so presets
    can share `defaults.libsonnet`. Whenever the manifest or one of its imports changes,
    a log event is emitted.

    Attributes:
        filename: Filename of the manifest.
        ext_vars: External variables visible to jsonnet through `std.extVar`.
    """

    logger = logging.getLogger('reloadable-config')

    def __init__(self, filename: str, ext_vars: Optional[dict] = None):
        assert(isinstance(filename, str))
        assert(isinstance(ext_vars, dict) or ext_vars is None)

        self.filename = filename
        self.ext_vars = {key: str(value) for key, value in (ext_vars or {}).items()}
        self._checksum = None
        self._checksum_config = None
        self._config = None
        self._mtime = None
        self._imported_paths_to_mtimes = {}

    @staticmethod
    def presets() -> List[str]:
        """Names of the manifests shipped in the `config` directory."""
        if not os.path.isdir(PRESETS_DIR):
            return []
        return sorted(name[:-len('.jsonnet')] for name in os.listdir(PRESETS_DIR) if name.endswith('.jsonnet'))

    @staticmethod
    def from_preset(name: str, ext_vars: Optional[dict] = None) -> 'ReloadableConfig':
        assert(isinstance(name, str))

        filename = os.path.join(PRESETS_DIR, f"{name}.jsonnet")
        if not os.path.isfile(filename):
            raise ConfigError(f"Unknown preset '{name}', available presets: {', '.join(ReloadableConfig.presets())}")

        return ReloadableConfig(filename, ext_vars)

    @property
    def checksum(self) -> Optional[int]:
        """crc32 of the evaluated manifest, `None` until it has been read."""
        return self._checksum_config

    def _import_callback(self, paths: list):

        def callback(path, file):
            abs_path = os.path.join(path or os.path.dirname(self.filename), file)
            paths.append(abs_path)

            with open(abs_path) as file_obj:
                content = file_obj.read()
                return abs_path, content.encode('utf-8') if _IMPORT_AS_BYTES else content

        return callback

    def _load_mtimes(self, imported_paths: List[str]) -> dict:
        return {path: os.path.getmtime(path) for path in imported_paths}

    def _mtimes_changed(self, imported_paths_to_mtimes: dict) -> bool:
        try:
            return any(os.path.getmtime(path) != mtime for path, mtime in imported_paths_to_mtimes.items())

        except OSError:
            return True

    def get_config(self) -> dict:
        """Reads the manifest from disk and returns it evaluated.

        Returns:
            Current configuration as a `dict`.

        Raises:
            ConfigError: If the file is missing or jsonnet fails to evaluate it.
        """
        try:
            mtime = os.path.getmtime(self.filename)
        except OSError as e:
            raise ConfigError(f"Unable to read configuration from '{self.filename}' ({e})")

        if self._config is not None and self._mtime is not None:
            if mtime == self._mtime \
                    and not self._mtimes_changed(self._imported_paths_to_mtimes):
                return self._config

        with open(self.filename) as data_file:
            content_file = data_file.read()
            imported_paths = []

            try:
                content_config = _jsonnet.evaluate_snippet(self.filename, content_file, ext_vars=self.ext_vars,
                                                           import_callback=self._import_callback(imported_paths))
                result = json.loads(content_config)
            except (RuntimeError, ValueError) as ex:
                self.logger.error(f"Failed to read config: {ex}")
                raise ConfigError(f"Failed to evaluate '{self.filename}' ({ex})") from ex

            if not isinstance(result, dict):
                raise ConfigError(f"Configuration in '{self.filename}' is not an object")

            # Report if file has been newly loaded or reloaded
            checksum = zlib.crc32(content_file.encode('utf-8'))
            checksum_config = zlib.crc32(content_config.encode('utf-8'))

            if self._checksum is None:
                self.logger.info(f"Loaded configuration from '{self.filename}'")
                self.logger.debug(f"Config file is: " + json.dumps(result, indent=4))
            elif self._checksum != checksum:
                self.logger.info(f"Reloaded configuration from '{self.filename}'")
                self.logger.debug(f"Reloaded config file is: " + json.dumps(result, indent=4))
            elif self._imported_paths_to_mtimes != self._load_mtimes(imported_paths):
                self.logger.info(f"Reloaded configuration from '{self.filename}' (due to imported file changed)")
                self.logger.debug(f"Reloaded config file is: " + json.dumps(result, indent=4))
            elif self._checksum_config != checksum_config:
                self.logger.debug(f"Parsed configuration from '{self.filename}'")
                self.logger.debug(f"Parsed config file is: " + json.dumps(result, indent=4))

            self._checksum = checksum
            self._checksum_config = checksum_config
            self._config = result
            self._mtime = mtime
            self._imported_paths_to_mtimes = self._load_mtimes(imported_paths)

            return result

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

from unittest.mock import MagicMock

import pytest

from pylag import ConfigError
from pylag.experiments import ExperimentConfig
from pylag.reloadable_config import ReloadableConfig


class TestReloadableConfig:
    @staticmethod
    def write_sample_config(tmpdir):
        file = tmpdir.join("sample_config.json")
        file.write("""{"name": "sample"}""")
        return str(file)

    @staticmethod
    def write_advanced_config(tmpdir, value):
        file = tmpdir.join("advanced_config.jsonnet")
        file.write("""{"name": \"""" + value + """\", "out": "out/" + self.name}""")
        return str(file)

    @staticmethod
    def write_defaults(tmpdir, sigma, beta):
        defaults_file = tmpdir.join("defaults.libsonnet")
        defaults_file.write("""{
            params: {
                sigma: """ + str(sigma) + """,
                beta: """ + str(beta) + """
            }
        }""")

    @staticmethod
    def write_importing_config(tmpdir):
        file = tmpdir.join("importing_config.jsonnet")
        file.write("""
            local defaults = import "defaults.libsonnet";
            {
                "doubleSigma": defaults.params.sigma * 2,
                "tripleBeta": defaults.params.beta * 3
            }""")
        return str(file)

    def test_should_read_simple_file(self, tmpdir):
        # when
        config = ReloadableConfig(self.write_sample_config(tmpdir)).get_config()

        # then
        assert config == {"name": "sample"}

    def test_should_read_advanced_file(self, tmpdir):
        # when
        config = ReloadableConfig(self.write_advanced_config(tmpdir, "sweep")).get_config()

        # then
        assert len(config) == 2
        assert config["name"] == "sweep"
        assert config["out"] == "out/sweep"

    def test_should_read_file_again_if_changed(self, tmpdir):
        # given
        reloadable_config = ReloadableConfig(self.write_advanced_config(tmpdir, "first"))
        reloadable_config.logger = MagicMock()

        # when
        config = reloadable_config.get_config()

        # then
        assert config["name"] == "first"

        # and
        # [a log message that the config was loaded gets generated]
        assert reloadable_config.logger.info.call_count == 1

        # when
        self.write_advanced_config(tmpdir, "second")
        config = reloadable_config.get_config()

        # then
        assert config["name"] == "second"

        # and
        # [a log message that the config was reloaded gets generated]
        assert reloadable_config.logger.info.call_count == 2

    def test_should_not_reevaluate_unchanged_file(self, tmpdir):
        # given
        reloadable_config = ReloadableConfig(self.write_sample_config(tmpdir))
        reloadable_config.logger = MagicMock()

        # when
        first = reloadable_config.get_config()
        second = reloadable_config.get_config()

        # then
        assert first is second
        assert reloadable_config.logger.info.call_count == 1

    def test_should_import_other_config_file(self, tmpdir):
        # when
        self.write_defaults(tmpdir, 0.1, 2.0)
        config = ReloadableConfig(self.write_importing_config(tmpdir)).get_config()

        # then
        assert config["doubleSigma"] == 0.2
        assert config["tripleBeta"] == 6.0

    def test_should_reevaluate_if_other_config_file_changed(self, tmpdir):
        # given
        reloadable_config = ReloadableConfig(self.write_importing_config(tmpdir))

        # when
        self.write_defaults(tmpdir, 0.1, 2.0)
        config = reloadable_config.get_config()

        # then
        assert config["doubleSigma"] == 0.2
        assert config["tripleBeta"] == 6.0

        # when
        self.write_defaults(tmpdir, 0.25, 1.0)
        config = reloadable_config.get_config()

        # then
        assert config["doubleSigma"] == 0.5
        assert config["tripleBeta"] == 3.0

    def test_should_pass_external_variables(self, tmpdir):
        # given
        file = tmpdir.join("ext_config.jsonnet")
        file.write("""{"name": std.extVar("name"), "sigma": std.parseJson(std.extVar("sigma"))}""")

        # when
        config = ReloadableConfig(str(file), {"name": "ext", "sigma": 0.3}).get_config()

        # then
        assert config == {"name": "ext", "sigma": 0.3}

    def test_should_expose_checksum(self, tmpdir):
        # given
        reloadable_config = ReloadableConfig(self.write_sample_config(tmpdir))

        # expect
        assert reloadable_config.checksum is None
        reloadable_config.get_config()
        assert isinstance(reloadable_config.checksum, int)

    def test_should_fail_on_missing_file(self, tmpdir):
        with pytest.raises(ConfigError):
            ReloadableConfig(str(tmpdir.join("missing.jsonnet"))).get_config()

    def test_should_fail_on_invalid_jsonnet(self, tmpdir):
        # given
        file = tmpdir.join("broken.jsonnet")
        file.write("""{"name": }""")
        reloadable_config = ReloadableConfig(str(file))
        reloadable_config.logger = MagicMock()

        # expect
        with pytest.raises(ConfigError):
            reloadable_config.get_config()
        assert reloadable_config.logger.error.call_count == 1

    def test_should_fail_on_non_object(self, tmpdir):
        # given
        file = tmpdir.join("list.jsonnet")
        file.write("""[1, 2, 3]""")

        # expect
        with pytest.raises(ConfigError):
            ReloadableConfig(str(file)).get_config()


class TestPresets:
    def test_should_list_presets(self):
        # when
        presets = ReloadableConfig.presets()

        # then
        assert 'speed-sweep' in presets
        assert 'tipping-asexual' in presets
        assert 'defaults' not in presets

    def test_should_fail_on_unknown_preset(self):
        with pytest.raises(ConfigError):
            ReloadableConfig.from_preset('no-such-preset')

    @pytest.mark.parametrize('name', ReloadableConfig.presets())
    def test_every_preset_should_be_a_valid_experiment(self, name):
        # when
        cfg = ExperimentConfig.from_dict(ReloadableConfig.from_preset(name).get_config())

        # then
        assert cfg.name == name
        assert len(cfg.series) >= 1
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

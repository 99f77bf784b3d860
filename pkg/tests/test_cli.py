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
import os

import pandas as pd
import pytest

from pylag import ConfigError
from pylag.cli import EXIT_CONFIG, EXIT_OK, _parse_assignments, load_experiment, main


def write_config(tmpdir, content: str) -> str:
    file = tmpdir.join("experiment.jsonnet")
    file.write(content)
    return str(file)


class TestAssignments:
    def test_should_parse_assignments(self):
        assert _parse_assignments(['params.sigma=0.2', 'name=a=b']) == {'params.sigma': '0.2', 'name': 'a=b'}

    @pytest.mark.parametrize('item', ['sigma', '=0.2'])
    def test_should_reject_malformed_assignment(self, item):
        with pytest.raises(ConfigError):
            _parse_assignments([item])


class TestLoadExperiment:
    def test_should_require_exactly_one_source(self, tmpdir):
        with pytest.raises(ConfigError):
            load_experiment(None, None, {})

        with pytest.raises(ConfigError):
            load_experiment(write_config(tmpdir, "{name: 'a'}"), 'speed-sweep', {})

    def test_should_override_and_pass_external_variables(self, tmpdir):
        # given
        config = write_config(tmpdir, "{name: std.extVar('label'), params: {sigma: 0.1}}")

        # when
        cfg = load_experiment(config, None, {'label': 'ext', 'params.sigma': '0.2', 'params.beta': '2'})

        # then
        assert cfg.name == 'ext'
        assert cfg.params.sigma == 0.2
        assert cfg.params.beta == 2.0

    def test_should_load_preset(self):
        # when
        cfg = load_experiment(None, 'kernel-sweep', {'workers': '3'})

        # then
        assert cfg.name == 'kernel-sweep'
        assert cfg.workers == 3


class TestMain:
    def test_should_write_schema(self, tmpdir):
        # when
        code = main(['schema', '--out', str(tmpdir)])

        # then
        assert code == EXIT_OK
        with open(os.path.join(str(tmpdir), 'schema.json')) as file:
            assert 'params.sigma' in json.load(file)

    def test_should_tabulate_kernels(self, tmpdir):
        # when
        code = main(['kernels', '--speeds', '0,0.1', '--out', str(tmpdir)])

        # then
        assert code == EXIT_OK
        assert len(pd.read_csv(os.path.join(str(tmpdir), 'lagrangian.csv'))) == 5 * 2
        assert os.path.isfile(os.path.join(str(tmpdir), 'hamiltonian.csv'))

    def test_should_run_asymptotics_on_preset(self, tmpdir):
        # when
        code = main(['asymptotics', '--preset', 'speed-sweep', '--set', 'sweep.num=2', '--out', str(tmpdir)])

        # then
        assert code == EXIT_OK
        frame = pd.read_csv(os.path.join(str(tmpdir), 'asymptotics.csv'))
        assert len(frame) == 6 * 2

        # and
        with open(os.path.join(str(tmpdir), 'manifest.json')) as file:
            assert json.load(file)['sweep']['num'] == 2
        with open(os.path.join(str(tmpdir), 'summary.json')) as file:
            assert json.load(file)['points'] == 12

    def test_should_reject_missing_config(self, tmpdir):
        assert main(['compare', '--config', str(tmpdir.join('missing.jsonnet'))]) == EXIT_CONFIG

    def test_should_reject_invalid_config(self, tmpdir):
        # given
        config = write_config(tmpdir, "{name: 'bad', kind: 'compare', params: {sigma: -1}}")

        # expect
        assert main(['compare', '--config', config, '--out', str(tmpdir)]) == EXIT_CONFIG

    def test_should_reject_config_without_source(self):
        assert main(['tipping']) == EXIT_CONFIG

    def test_should_reject_unknown_command(self):
        with pytest.raises(SystemExit):
            main(['plot'])

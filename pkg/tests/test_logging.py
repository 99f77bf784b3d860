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

import logging

from pylag.logging import LOG_FORMAT, setup_logging


class TestSetupLogging:
    def test_should_configure_root_logger(self):
        # when
        setup_logging(debug=True)

        # then
        root = logging.getLogger()
        assert root.level == logging.DEBUG
        assert root.handlers[0].formatter._fmt == LOG_FORMAT

        # when
        setup_logging()

        # then
        assert root.level == logging.INFO

    def test_should_leave_other_loggers_alone(self):
        # given
        levels = {name: logging.getLogger(name).level for name in logging.root.manager.loggerDict}

        # when
        setup_logging()

        # then
        assert {name: logging.getLogger(name).level for name in levels} == levels

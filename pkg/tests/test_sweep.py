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

import threading
import time
from unittest.mock import MagicMock

import pytest

from pylag.sweep import RowCollector, SweepPoint, SweepRunner


def points(count: int) -> list:
    return [SweepPoint(key=(0, index), value=0.1 * index, payload=index) for index in range(count)]


class TestRowCollector:
    def test_should_flush_in_key_order(self):
        # given
        collector = RowCollector()

        # when
        collector.append((1, 0), [{'v': 'c'}])
        collector.append((0, 1), [{'v': 'b1'}, {'v': 'b2'}])
        collector.append((0, 0), [{'v': 'a'}])

        # then
        assert len(collector) == 4
        assert [row['v'] for row in collector.flush()] == ['a', 'b1', 'b2', 'c']
        assert len(collector) == 0


class TestSweepRunner:
    def test_should_run_sequentially(self):
        # when
        rows = SweepRunner().run(points(5), lambda point: [{'value': point.value, 'index': point.payload}])

        # then
        assert [row['index'] for row in rows] == [0, 1, 2, 3, 4]

    @pytest.mark.timeout(30)
    def test_should_keep_sweep_order_with_workers(self):
        # given
        threads = set()

        def task(point):
            # later points finish first
            time.sleep(0.01 * (5 - point.payload))
            threads.add(threading.get_ident())
            return [{'index': point.payload}]

        # when
        rows = SweepRunner(workers=3).run(points(5), task)

        # then
        assert [row['index'] for row in rows] == [0, 1, 2, 3, 4]
        assert len(threads) > 1

    def test_should_record_failed_point(self):
        # given
        runner = SweepRunner()
        runner.logger = MagicMock()

        def task(point):
            if point.payload == 1:
                raise ValueError("boom")
            return [{'status': 'ok'}]

        # when
        rows = runner.run(points(3), task)

        # then
        assert [row['status'] for row in rows] == ['ok', 'error: ValueError', 'ok']
        assert runner.logger.warning.call_count == 1

    def test_should_require_positive_workers(self):
        with pytest.raises(AssertionError):
            SweepRunner(workers=0)

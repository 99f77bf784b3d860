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
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, NamedTuple, Tuple


class SweepPoint(NamedTuple):
    """One point of a sweep. Rows are ordered by `key` when the collector is flushed."""
    key: Tuple
    value: Any
    payload: Any


class RowCollector:
    """Collects result rows from concurrent workers.

    Rows can be appended from any thread. `flush()` returns them sorted by their sweep key,
    so the output does not depend on the order in which the workers finish.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._rows = []

    def append(self, key: Tuple, rows: List[dict]):
        assert(isinstance(rows, list))

        with self._lock:
            self._rows.extend((key, index, row) for index, row in enumerate(rows))

    def flush(self) -> List[dict]:
        with self._lock:
            rows = sorted(self._rows, key=lambda entry: (entry[0], entry[1]))
            self._rows = []
        return [row for _, _, row in rows]

    def __len__(self):
        with self._lock:
            return len(self._rows)


class SweepRunner:
    """Dispatches sweep points to a pool of worker threads.

    A single solve is sequential, but distinct points share nothing, so they are handed out to
    `workers` threads. Every task returns the list of rows for its point. A task that raises is
    logged and contributes one row with an `error` status instead.

    Attributes:
        workers: Number of worker threads, 1 runs the points in the calling thread.
    """

    logger = logging.getLogger('sweep')

    def __init__(self, workers: int = 1):
        assert(isinstance(workers, int))
        assert(workers >= 1)

        self.workers = workers

    def _execute(self, task: Callable[[SweepPoint], List[dict]], point: SweepPoint, collector: RowCollector):
        try:
            rows = task(point)
        except Exception as e:
            self.logger.warning(f"Sweep point {point.key} failed ({type(e).__name__}: {e})")
            rows = [{'status': f"error: {type(e).__name__}"}]

        collector.append(point.key, rows)
        self.logger.debug(f"Sweep point {point.key} done")

    def run(self, points: List[SweepPoint], task: Callable[[SweepPoint], List[dict]]) -> List[dict]:
        """Runs `task` on every point and returns all rows in sweep order."""
        assert(isinstance(points, list))
        assert(callable(task))

        collector = RowCollector()
        self.logger.info(f"Running {len(points)} sweep points on {self.workers} worker(s)")

        if self.workers == 1:
            for point in points:
                self._execute(task, point, collector)
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                for point in points:
                    executor.submit(self._execute, task, point, collector)

        return collector.flush()

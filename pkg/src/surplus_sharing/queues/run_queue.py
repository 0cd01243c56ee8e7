from __future__ import annotations

import abc
import logging
from typing import Any, Iterable, Optional, Sequence

import huey
import huey.api

import surplus_sharing.tasks as tasks

logger = logging.getLogger(__name__)


class JobQueue(abc.ABC):
    @abc.abstractmethod
    def submit(self, *args, **kwargs) -> Any:
        """Submit a task to the job queue in open-loop, with any required args."""

    @abc.abstractmethod
    def process(self, *args, **kwargs) -> int:
        """Process tasks waiting in the job queue."""


class RunQueue(JobQueue):
    """Model runs, sweep points and verifications as `huey` tasks.

    Every function in `tasks.__all__` becomes an attribute of the queue.
    With `immediate=True` (default) a submitted task runs in-process and its
    result is ready at once; otherwise tasks wait until `process()`.

    >>> queue = RunQueue()
    >>> queue.submit('verify_instance', 0).get().seed
    0
    """

    huey: huey.MemoryHuey
    """`huey` object for submitting tasks"""

    def __init__(
        self, immediate: bool = True, name: Optional[str] = None, **kwargs
    ) -> None:
        self.huey = huey.MemoryHuey(
            name or 'surplus_sharing', immediate=immediate, **kwargs
        )
        for task in tasks.__all__:
            self.add_task(task)

    def add_task(self, task: str) -> None:
        setattr(self, task, self.huey.task()(getattr(tasks, task)))

    def submit(self, task: str, *args, **kwargs) -> huey.api.Result:
        """Send `task(*args, **kwargs)` to queue.

        The signature of `task` should be identical when submitted and when
        processed - the function lives in the `tasks` module.
        """
        return getattr(self, task)(*args, **kwargs)

    def map(
        self, task: str, argsets: Iterable[Sequence[Any]]
    ) -> list[huey.api.Result]:
        return [self.submit(task, *args) for args in argsets]

    def process(self) -> int:
        """Execute waiting tasks in submission order, in this process.
        Returns the number of tasks executed."""
        count = 0
        while (task := self.huey.dequeue()) is not None:
            self.huey.execute(task)
            count += 1
        logger.debug('Processed %d tasks', count)
        return count

    @staticmethod
    def gather(results: Iterable[huey.api.Result]) -> list[Any]:
        """Block on each result in order. A task that raised re-raises here
        as `huey.exceptions.TaskException`."""
        return [result.get(blocking=True) for result in results]

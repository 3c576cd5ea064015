from __future__ import annotations

import abc
import typing as t
from concurrent.futures import ProcessPoolExecutor

T = t.TypeVar("T")
R = t.TypeVar("R")


class Executor(metaclass=abc.ABCMeta):
    """Runs sweep cells. Results always come back in submission order."""

    @abc.abstractmethod
    def map(self, fn: t.Callable[[T], R], items: t.Iterable[T]) -> list[R]:
        raise NotImplementedError


class SequentialExecutor(Executor):
    """SequentialExecutor runs cells one after the other in the calling process."""

    def map(self, fn: t.Callable[[T], R], items: t.Iterable[T]) -> list[R]:
        return [fn(item) for item in items]


class PoolExecutor(Executor):
    """PoolExecutor runs cells in a pool of worker processes.

    ``fn`` and the items must be picklable.
    """

    def __init__(self, workers: int) -> None:
        if workers < 1:
            raise ValueError(f"workers must be a positive integer, got {workers}")
        self.workers = workers

    def map(self, fn: t.Callable[[T], R], items: t.Iterable[T]) -> list[R]:
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))


def make_default_executor(workers: int = 1) -> Executor:
    if workers > 1:
        return PoolExecutor(workers)
    return SequentialExecutor()

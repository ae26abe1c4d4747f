"""
Seeded sample streams
=====================

Counter-based random streams for reproducible, shardable Monte Carlo.

Samples are drawn in fixed blocks of ``STREAM_BLOCK``. Block ``k`` of
stream ``s`` under seed ``seed`` is always generated by a Philox generator
keyed with ``SeedSequence(seed, spawn_key=(s, k))``, so any prefix of a
stream can be rebuilt by any worker without communication, and results
never depend on how blocks are distributed over workers.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, List, Tuple

import numpy as np
from joblib import Parallel, delayed

from src.config.settings import DEFAULT_N_JOBS, STREAM_BLOCK
from src.errors import ValidationError

logger = logging.getLogger(__name__)


def block_generator(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Generator for one block of one stream"""
    if seed < 0:
        raise ValidationError(f"seed must be nonnegative, got {seed}")
    sequence = np.random.SeedSequence(seed, spawn_key=(stream, block))
    return np.random.Generator(np.random.Philox(sequence))


def block_layout(n: int, block_size: int = STREAM_BLOCK) -> List[Tuple[int, int]]:
    """(block index, block length) pairs covering n draws"""
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    full, rest = divmod(n, block_size)
    layout = [(k, block_size) for k in range(full)]
    if rest:
        layout.append((full, rest))
    return layout


def _run_block(seed: int, stream: int, block: int, size: int,
               block_fn: Callable[[np.random.Generator, int], Any]) -> Any:
    return block_fn(block_generator(seed, block, stream), size)


def map_blocks(seed: int, n: int, block_fn: Callable[[np.random.Generator, int], Any],
               stream: int = 0, n_jobs: int = DEFAULT_N_JOBS) -> List[Any]:
    """
    Apply ``block_fn(rng, size)`` to every block of the stream.

    Results come back in block order whatever the worker count.
    """
    layout = block_layout(n)
    if n_jobs == 1 or len(layout) == 1:
        return [_run_block(seed, stream, k, size, block_fn) for k, size in layout]

    logger.debug("Sharding %d blocks over %d workers", len(layout), n_jobs)
    return Parallel(n_jobs=n_jobs)(
        delayed(_run_block)(seed, stream, k, size, block_fn) for k, size in layout
    )


def draw(seed: int, n: int, block_fn: Callable[[np.random.Generator, int], np.ndarray],
         stream: int = 0, n_jobs: int = DEFAULT_N_JOBS) -> np.ndarray:
    """Concatenate the per-block draws of a stream into one array"""
    return np.concatenate(map_blocks(seed, n, block_fn, stream=stream, n_jobs=n_jobs), axis=0)


@dataclass(frozen=True)
class RunningMoments:
    """Count, mean and centred second moment of a sample"""

    count: int
    mean: float
    m2: float

    @classmethod
    def of(cls, values: np.ndarray) -> "RunningMoments":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls(0, 0.0, 0.0)
        mean = float(values.mean())
        return cls(int(values.size), mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        # Chan et al. pairwise update
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return RunningMoments(count, mean, m2)

    @property
    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    @property
    def std_error(self) -> float:
        if self.count < 2:
            return 0.0
        return float(np.sqrt(self.variance / self.count))


def _moments_block(rng: np.random.Generator, size: int,
                   value_fn: Callable[[np.random.Generator, int], np.ndarray]) -> RunningMoments:
    return RunningMoments.of(value_fn(rng, size))


def sharded_moments(seed: int, n: int, value_fn: Callable[[np.random.Generator, int], np.ndarray],
                    stream: int = 0, n_jobs: int = DEFAULT_N_JOBS) -> RunningMoments:
    """
    Mean and variance of a per-sample statistic over n stream draws.

    ``value_fn(rng, size)`` returns ``size`` values of the statistic; the
    block summaries are merged in block order.
    """
    summaries = map_blocks(seed, n, _BoundMoments(value_fn), stream=stream, n_jobs=n_jobs)
    total = RunningMoments(0, 0.0, 0.0)
    for summary in summaries:
        total = total.merge(summary)
    return total


class _BoundMoments:
    """Picklable wrapper turning a value function into a block summariser"""

    def __init__(self, value_fn: Callable[[np.random.Generator, int], np.ndarray]):
        self.value_fn = value_fn

    def __call__(self, rng: np.random.Generator, size: int) -> RunningMoments:
        return _moments_block(rng, size, self.value_fn)

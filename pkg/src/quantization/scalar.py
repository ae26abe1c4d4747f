"""
Scalar Quantizers
=================

Interval quantizers of the real line. Cells are left-closed and
right-open; the first and last cells are the unbounded tails
(-inf, b_1) and [b_{m-1}, inf).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from src.config.settings import TAIL_SPAN_MASS
from src.data.sources import ScalarSource, SourceModel, scalar_component
from src.errors import ValidationError

logger = logging.getLogger(__name__)

KINDS = ("uniform", "almost_regular", "custom")


def uniform_step_for_distortion(D: float, r: float) -> float:
    """Cell length 2(1+r)^(1/r) D^(1/r) at which a uniform cell has r-th moment D"""
    if not D > 0 or not r > 0:
        raise ValidationError(f"D and r must be positive, got D={D}, r={r}")
    return 2.0 * (1.0 + r) ** (1.0 / r) * D ** (1.0 / r)


def source_span(source: SourceModel) -> Tuple[float, float]:
    """Interval outside which each tail of the source holds at most TAIL_SPAN_MASS"""
    component: ScalarSource = scalar_component(source)
    lo, hi = component.support
    if not math.isfinite(lo):
        lo = float(component.ppf(TAIL_SPAN_MASS))
    if not math.isfinite(hi):
        hi = float(component.isf(TAIL_SPAN_MASS))
    return lo, hi


@dataclass(frozen=True, eq=False)
class ScalarQuantizer:
    """
    Boundaries b_1 < ... < b_{m-1} and one reconstruction per cell.
    """

    boundaries: np.ndarray
    reconstructions: np.ndarray
    kind: str = "custom"
    step: Optional[float] = None
    offset: float = 0.0
    pattern: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        x_hat = np.asarray(self.reconstructions, dtype=float)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "reconstructions", x_hat)

        if self.kind not in KINDS:
            raise ValidationError(f"Unknown quantizer kind: {self.kind!r}")
        if b.ndim != 1 or b.size == 0 or not np.all(np.isfinite(b)):
            raise ValidationError("boundaries must be a nonempty finite sequence")
        if np.any(np.diff(b) <= 0):
            raise ValidationError("boundaries must be strictly increasing")
        if x_hat.shape != (b.size + 1,):
            raise ValidationError(
                f"need {b.size + 1} reconstructions for {b.size} boundaries, got {x_hat.size}"
            )
        if self.kind != "custom":
            left, right, _ = self.cells()
            if np.any(x_hat < left) or np.any(x_hat > right):
                raise ValidationError("every reconstruction must lie in the closure of its cell")

    @classmethod
    def uniform(cls, step: float, offset: float = 0.0,
                span: Tuple[float, float] = (-1.0, 1.0)) -> "ScalarQuantizer":
        """Cells [offset + k*step, offset + (k+1)*step) covering ``span``, midpoint reconstructions"""
        return cls.almost_regular((1.0,), step, offset=offset, span=span, kind="uniform")

    @classmethod
    def almost_regular(cls, pattern: Sequence[float], step: float, offset: float = 0.0,
                       span: Tuple[float, float] = (-1.0, 1.0),
                       reconstructions: Optional[np.ndarray] = None,
                       kind: str = "almost_regular") -> "ScalarQuantizer":
        """Cell lengths step * pattern repeated periodically from ``offset``"""
        pattern = tuple(float(p) for p in pattern)
        if not pattern or any(not p > 0 for p in pattern):
            raise ValidationError(f"pattern entries must be positive, got {pattern}")
        if not step > 0:
            raise ValidationError(f"step must be positive, got {step}")
        lo, hi = span
        if not hi > lo:
            raise ValidationError(f"empty span {span}")

        period = step * sum(pattern)
        first = math.floor((lo - offset) / period + 1e-9)
        last = math.ceil((hi - offset) / period - 1e-9)
        last = max(last, first + 1)
        starts = offset + period * np.arange(first, last, dtype=float)
        within = step * np.concatenate([[0.0], np.cumsum(pattern[:-1])])
        b = (starts[:, None] + within[None, :]).ravel()
        b = np.append(b, offset + period * last)

        if reconstructions is None:
            mids = 0.5 * (b[:-1] + b[1:])
            reconstructions = np.concatenate(
                [[b[0] - 0.5 * step * pattern[-1]], mids, [b[-1] + 0.5 * step * pattern[0]]]
            )
        return cls(b, reconstructions, kind=kind, step=step, offset=offset, pattern=pattern)

    @classmethod
    def custom(cls, boundaries, reconstructions) -> "ScalarQuantizer":
        return cls(np.asarray(boundaries, dtype=float), np.asarray(reconstructions, dtype=float))

    @property
    def n_cells(self) -> int:
        return self.boundaries.size + 1

    def cells(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(left, right, reconstruction) per cell, tails included"""
        left = np.concatenate([[-np.inf], self.boundaries])
        right = np.concatenate([self.boundaries, [np.inf]])
        return left, right, self.reconstructions

    @property
    def lengths(self) -> np.ndarray:
        left, right, _ = self.cells()
        return right - left

    def index(self, x) -> np.ndarray:
        return np.searchsorted(self.boundaries, np.asarray(x, dtype=float), side="right")

    def quantize(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """Cell indices and reconstructions"""
        idx = self.index(x)
        return idx, self.reconstructions[idx]

    def with_reconstructions(self, reconstructions: np.ndarray) -> "ScalarQuantizer":
        return ScalarQuantizer(self.boundaries, reconstructions, kind=self.kind,
                               step=self.step, offset=self.offset, pattern=self.pattern)

    def split(self, cell: int, point: float) -> "ScalarQuantizer":
        """Refine one bounded cell at ``point``; the half without the old reconstruction gets its midpoint"""
        left, right, x_hat = self.cells()
        if not 0 < cell < self.n_cells - 1:
            raise ValidationError("only bounded cells can be split")
        if not left[cell] < point < right[cell]:
            raise ValidationError(f"split point {point} is not inside cell {cell}")
        old = x_hat[cell]
        if old < point:
            pair = [old, 0.5 * (point + right[cell])]
        else:
            pair = [0.5 * (left[cell] + point), old]
        b = np.insert(self.boundaries, cell, point)
        recon = np.concatenate([x_hat[:cell], pair, x_hat[cell + 1:]])
        return ScalarQuantizer(b, recon, kind="custom")

    def describe(self) -> str:
        if self.kind == "uniform":
            return f"uniform:{self.step:.6g},{self.offset:.6g}"
        if self.kind == "almost_regular":
            return f"pattern:{','.join(f'{p:g}' for p in self.pattern)}@{self.step:.6g}"
        return f"custom[{self.n_cells} cells]"

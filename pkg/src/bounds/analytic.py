"""
Analytic Bounds
===============

Closed-form bounds and asymptotes on the excess rate of symbol-wise
quantizers over the rate-distortion function. Values are in nats unless
the name says bits; everything reduces to log-Gamma.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional

import numpy as np
import pandas as pd
from scipy.special import gammaln

from src.errors import ValidationError

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)

FIGURE1_COLUMNS = [
    "d",
    "lb_bits_per_dim",
    "zador_ub_bits_per_dim",
    "lattice",
    "lattice_ub_bits_per_dim",
    "moment_source",
    "moment_std_err",
]


@dataclass(frozen=True)
class BoundPoint:
    """A bound in nats, or nats per dimension when ``per_dim`` is set"""

    d: int
    r: float
    value: float
    D: Optional[float] = None
    per_dim: bool = False


def _check(d: int, r: float = 2.0):
    if d < 1 or int(d) != d:
        raise ValidationError(f"dimension must be a positive integer, got {d}")
    if not r > 0:
        raise ValidationError(f"r must be positive, got {r}")


def nats_to_bits(value):
    return value / LOG2


def unit_ball_volume(d: int) -> float:
    """V_d = pi^(d/2) / Gamma(1 + d/2)"""
    _check(d)
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(1 + 0.5 * d))


def slb_constant(d: int, r: float) -> float:
    """(d/r) log((r/d) (V_d Gamma(1 + d/r))^(r/d) e)"""
    _check(d, r)
    log_vg = 0.5 * d * math.log(math.pi) - gammaln(1 + 0.5 * d) + gammaln(1 + d / r)
    return (d / r) * (math.log(r / d) + (r / d) * log_vg + 1.0)


def excess_rate_lb(d: int, r: float) -> float:
    """(d/r) log(Gamma(1 + d/r)^(r/d) e / (1 + d/r))"""
    _check(d, r)
    return (d / r) * ((r / d) * gammaln(1 + d / r) + 1.0 - math.log1p(d / r))


def shannon_lower_bound(h: float, d: int, r: float, D: float) -> float:
    """h + (d/r) log(1/D) - slb_constant(d, r)"""
    if not D > 0:
        raise ValidationError(f"D must be positive, got {D}")
    return h - (d / r) * math.log(D) - slb_constant(d, r)


def interval_moment(r: float) -> float:
    """Normalized r-th moment 1 / (2^r (1 + r)) of an interval about its midpoint"""
    if not r > 0:
        raise ValidationError(f"r must be positive, got {r}")
    return 1.0 / (2.0 ** r * (1.0 + r))


def tessellating_excess(ell: float, d: int, r: float) -> float:
    """Excess rate of a tessellating quantizer whose cell has normalized moment ``ell``"""
    if not ell > 0:
        raise ValidationError(f"normalized moment must be positive, got {ell}")
    return slb_constant(d, r) + (d / r) * math.log(ell)


def tessellating_rate(h: float, d: int, r: float, D: float, ell: float) -> float:
    """High-resolution rate h + (d/r) log(1/D) + (d/r) log(ell) of a tessellating quantizer"""
    if not D > 0 or not ell > 0:
        raise ValidationError("D and ell must be positive")
    return h - (d / r) * math.log(D) + (d / r) * math.log(ell)


def zador_rc_ub_per_dim(d: int) -> float:
    """Random-coding upper bound on the quadratic excess rate per dimension"""
    _check(d)
    log_arg = (math.log(2 * math.pi * math.e) + gammaln(1 + 2.0 / d)
               + (2.0 / d) * gammaln(1 + 0.5 * d) - math.log(math.pi * d))
    return 0.5 * log_arg


def excess_rate_lb_per_dim_quadratic(d: int) -> float:
    """excess_rate_lb(d, 2) / d in closed form"""
    _check(d)
    log_arg = (math.log(2 * math.pi * math.e) + (2.0 / d) * gammaln(1 + 0.5 * d)
               - math.log(math.pi * (2 + d)))
    return 0.5 * log_arg


def gish_pierce_constant() -> float:
    """1/2 log(pi e / 6), the scalar quadratic excess rate"""
    return 0.5 * math.log(math.pi * math.e / 6.0)


def zador_scalar_rate(h: float, D: float) -> float:
    """Uniform-quantizer asymptote h + 1/2 log(1/D) - 1/2 log 12"""
    if not D > 0:
        raise ValidationError(f"D must be positive, got {D}")
    return h - 0.5 * math.log(D) - 0.5 * math.log(12.0)


def gaussian_rate_distortion(sigma: float, D: float) -> float:
    """R(D) = max(0, 1/2 log(sigma^2 / D)) for a Gaussian under squared error"""
    if not sigma > 0 or not D > 0:
        raise ValidationError("sigma and D must be positive")
    return max(0.0, 0.5 * math.log(sigma ** 2 / D))


BOUND_KINDS = ("excess_lb", "zador_ub", "shannon_lb")


def bound_point(kind: str, d: int, r: float = 2.0, D: Optional[float] = None,
                h: Optional[float] = None, per_dim: bool = False) -> BoundPoint:
    """
    One named bound as a BoundPoint.

    ``excess_lb`` is the excess-rate lower bound, ``zador_ub`` the
    random-coding upper bound (quadratic only) and ``shannon_lb`` the
    Shannon lower bound, which needs ``h`` and ``D``. With ``per_dim`` the
    value is divided by d.
    """
    _check(d, r)
    if kind == "excess_lb" and r == 2.0:
        per = excess_rate_lb_per_dim_quadratic(d)
        value = per if per_dim else d * per
    elif kind == "excess_lb":
        total = excess_rate_lb(d, r)
        value = total / d if per_dim else total
    elif kind == "zador_ub":
        if r != 2.0:
            raise ValidationError("the random-coding bound is available for r = 2 only")
        per = zador_rc_ub_per_dim(d)
        value = per if per_dim else d * per
    elif kind == "shannon_lb":
        if h is None or D is None:
            raise ValidationError("shannon_lb needs the differential entropy h and D")
        total = shannon_lower_bound(h, d, r, D)
        value = total / d if per_dim else total
    else:
        raise ValidationError(f"Unknown bound {kind!r}; expected one of {', '.join(BOUND_KINDS)}")
    return BoundPoint(d=int(d), r=float(r), value=value, D=D, per_dim=per_dim)


def figure1_table(dims: Iterable[int],
                  moments: Optional[Mapping[int, Iterable[Dict]]] = None) -> pd.DataFrame:
    """
    Per-dimension quadratic bounds in bits, one row per (d, lattice).

    Args:
        dims: dimensions to tabulate
        moments: for each d, records with keys ``lattice``, ``ell``,
            ``moment_source`` and ``moment_std_err``; ``ell`` may be None
            for a lattice whose moment is unavailable

    Returns:
        DataFrame with FIGURE1_COLUMNS; rows without a lattice have blank
        lattice columns
    """
    moments = moments or {}
    rows = []
    for d in dims:
        base = {
            "d": int(d),
            "lb_bits_per_dim": nats_to_bits(bound_point("excess_lb", d, per_dim=True).value),
            "zador_ub_bits_per_dim": nats_to_bits(bound_point("zador_ub", d, per_dim=True).value),
        }
        records = list(moments.get(d, []))
        if not records:
            rows.append({**base, "lattice": None, "lattice_ub_bits_per_dim": np.nan,
                         "moment_source": None, "moment_std_err": np.nan})
            continue
        for record in records:
            ell = record.get("ell")
            ub = np.nan if ell is None else nats_to_bits(tessellating_excess(ell, d, 2.0) / d)
            rows.append({
                **base,
                "lattice": record["lattice"],
                "lattice_ub_bits_per_dim": ub,
                "moment_source": record.get("moment_source"),
                "moment_std_err": record.get("moment_std_err", np.nan),
            })
    return pd.DataFrame(rows, columns=FIGURE1_COLUMNS)

"""Blocked performance indices over windows of N control periods.

gamma1/gamma2 are RMS current errors in the alpha-beta and x-y planes.
gamma3 is the switching index ``2*pi/(N*Ts*omega_e) * sum(SC)/6`` evaluated
with the block-mean electrical frequency; ``switch_rate`` is the plain
commutation rate ``sum(SC)/(6*N*Ts)`` kept alongside it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class IncompleteWindow(RuntimeError):
    pass


@dataclass(frozen=True)
class MetricsBlock:
    gamma1: float
    gamma2: float
    gamma3: float
    t_end: float
    omega: float
    lambda_xy: float
    lambda_sc: float
    switch_rate: float = 0.0
    omega_e: float = 0.0


@dataclass
class MetricsAccumulator:
    N: int
    Ts: float
    sum_sq_ab: float = 0.0
    sum_sq_xy: float = 0.0
    sum_sc: int = 0
    count: int = 0
    omega_e_avg: float = 0.0
    omega_avg: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("metrics window N must be >= 1")

    def accumulate(self, e_ab, e_xy, sc: int, omega_e: float, omega: float = 0.0):
        if self.count >= self.N:
            raise IncompleteWindow("window already full; finalize first")
        self.sum_sq_ab += e_ab[0] ** 2 + e_ab[1] ** 2
        self.sum_sq_xy += e_xy[0] ** 2 + e_xy[1] ** 2
        self.sum_sc += int(sc)
        self.count += 1
        self.omega_e_avg += (omega_e - self.omega_e_avg) / self.count
        self.omega_avg += (omega - self.omega_avg) / self.count
        return self

    def accumulate_many(self, sq_ab, sq_xy, sc, omega_e, omega):
        """Vectorised form of :meth:`accumulate` for arrays of per-sample values."""
        n = len(sq_ab)
        if self.count + n > self.N:
            raise IncompleteWindow("samples overflow the window")
        if n == 0:
            return self
        total = self.count + n
        self.sum_sq_ab += float(np.sum(sq_ab))
        self.sum_sq_xy += float(np.sum(sq_xy))
        self.sum_sc += int(np.sum(sc))
        self.omega_e_avg = (self.omega_e_avg * self.count + float(np.sum(omega_e))) / total
        self.omega_avg = (self.omega_avg * self.count + float(np.sum(omega))) / total
        self.count = total
        return self

    def reset(self):
        self.sum_sq_ab = self.sum_sq_xy = 0.0
        self.sum_sc = self.count = 0
        self.omega_e_avg = self.omega_avg = 0.0

    def finalize(self, t_end: float = 0.0, lambda_xy: float = 0.0, lambda_sc: float = 0.0) -> MetricsBlock:
        if self.count != self.N:
            raise IncompleteWindow(f"window has {self.count} of {self.N} samples")
        N, Ts = self.N, self.Ts
        w_e = abs(self.omega_e_avg)
        changes = self.sum_sc / 6.0
        gamma3 = 2.0 * math.pi / (N * Ts * w_e) * changes if w_e > 1e-9 else math.nan
        block = MetricsBlock(
            gamma1=math.sqrt(self.sum_sq_ab / N),
            gamma2=math.sqrt(self.sum_sq_xy / N),
            gamma3=gamma3,
            t_end=t_end,
            omega=self.omega_avg,
            lambda_xy=lambda_xy,
            lambda_sc=lambda_sc,
            switch_rate=changes / (N * Ts),
            omega_e=self.omega_e_avg,
        )
        self.reset()
        return block


def accumulate(acc: MetricsAccumulator, e_ab, e_xy, sc: int, omega_e: float) -> MetricsAccumulator:
    return acc.accumulate(e_ab, e_xy, sc, omega_e)


def finalize(acc: MetricsAccumulator, **kw) -> MetricsBlock:
    return acc.finalize(**kw)

"""Event detection on sampled signals such as z(t)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar


def zero_crossings(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Sign-change times, linearly interpolated between samples."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    s = np.sign(y)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    return t[idx] - y[idx] * (t[idx + 1] - t[idx]) / (y[idx + 1] - y[idx])


def extrema(times: np.ndarray, values: np.ndarray,
            func: Callable[[float], float] | None = None,
            xatol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Interior local extrema as (times, signed values).

    With ``func`` (the signal at arbitrary t) each sampled extremum is refined
    by a bounded scalar search on the neighbouring sample interval.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    d = np.diff(y)
    idx = np.nonzero(d[:-1] * d[1:] < 0)[0] + 1
    ts, vs = [], []
    for i in idx:
        if func is None:
            ts.append(t[i])
            vs.append(y[i])
            continue
        sgn = 1.0 if y[i] > y[i - 1] else -1.0
        res = minimize_scalar(lambda x: -sgn * func(x), bounds=(t[i - 1], t[i + 1]),
                              method="bounded", options={"xatol": xatol})
        ts.append(res.x)
        vs.append(func(res.x))
    return np.asarray(ts), np.asarray(vs)


@dataclass(frozen=True)
class Envelope:
    peak_times: np.ndarray
    peaks: np.ndarray
    trough_times: np.ndarray
    troughs: np.ndarray

    @property
    def period(self) -> float:
        """Mean spacing of successive envelope peaks."""
        if len(self.peak_times) < 2:
            return float("nan")
        return float(np.mean(np.diff(self.peak_times)))

    def recurrence(self, periods: int = 2) -> float:
        """Largest relative spread of envelope peaks and troughs over the first
        ``periods`` envelope periods (``periods + 1`` successive values)."""
        n = periods + 1
        if len(self.peaks) < n or len(self.troughs) < n:
            return float("inf")
        spreads = []
        for vals in (self.peaks[:n], self.troughs[:n]):
            spreads.append(np.ptp(vals) / np.max(np.abs(vals)))
        return float(max(spreads))


def envelope(ext_times: np.ndarray, ext_values: np.ndarray) -> Envelope:
    """Envelope of an oscillation from the magnitudes of its extrema.

    Local maxima (minima) of the sequence |extremum| are the envelope peaks
    (troughs).
    """
    a = np.abs(np.asarray(ext_values, dtype=float))
    t = np.asarray(ext_times, dtype=float)
    if len(a) < 3:
        empty = np.zeros(0)
        return Envelope(empty, empty, empty, empty)
    pk = [i for i in range(1, len(a) - 1) if a[i] > a[i - 1] and a[i] >= a[i + 1]]
    tr = [i for i in range(1, len(a) - 1) if a[i] < a[i - 1] and a[i] <= a[i + 1]]
    return Envelope(t[pk], a[pk], t[tr], a[tr])

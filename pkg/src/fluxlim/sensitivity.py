"""Flux-limited chemotactic sensitivity ``S(|grad c|^2)``."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class FluxLimiter:
    """``S(sigma) = k_s (1 + sigma)^(-theta/2)`` or a tabulated curve.

    A tabulated limiter interpolates ``table_sigma -> table_value`` linearly
    and is held constant past the last sample.  ``k_s``/``theta`` are then
    the bound the table is expected to respect (see :func:`verify_bound`).
    """

    k_s: float = 1.0
    theta: float = 1.0
    kind: str = "prototype"
    table_sigma: np.ndarray = field(default=None, repr=False, compare=False)
    table_value: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.k_s > 0:
            raise ValueError(f"k_s must be positive, got {self.k_s}")
        if not self.theta >= 0:
            raise ValueError(f"theta must be nonnegative, got {self.theta}")
        if self.kind not in ("prototype", "user-supplied"):
            raise ValueError(f"unknown limiter kind {self.kind!r}")
        if self.kind == "user-supplied":
            sig = np.asarray(self.table_sigma, dtype=float)
            val = np.asarray(self.table_value, dtype=float)
            if sig.ndim != 1 or sig.shape != val.shape or sig.size < 2:
                raise ValueError("tabulated limiter needs matching 1-D sigma/value arrays")
            if sig[0] != 0.0 or np.any(np.diff(sig) <= 0):
                raise ValueError("tabulated sigma must start at 0 and increase strictly")
            if not np.all(np.isfinite(val)):
                raise ValueError("tabulated values must be finite")
            object.__setattr__(self, "table_sigma", sig)
            object.__setattr__(self, "table_value", val)

    @classmethod
    def tabulated(cls, sigma, value, k_s: float = 1.0, theta: float = 1.0) -> "FluxLimiter":
        return cls(k_s, theta, "user-supplied", np.asarray(sigma), np.asarray(value))

    @classmethod
    def from_csv(cls, path, k_s: float = 1.0, theta: float = 1.0) -> "FluxLimiter":
        sig, val = [], []
        with open(Path(path), newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    s, v = float(row[0]), float(row[1])
                except ValueError:
                    if not sig:  # header line
                        continue
                    raise
                sig.append(s)
                val.append(v)
        return cls.tabulated(sig, val, k_s, theta)

    @property
    def in_proven_regime(self) -> bool:
        return self.theta > 0

    def eval_array(self, sigma: np.ndarray) -> np.ndarray:
        if self.kind == "prototype":
            return self.k_s * (1.0 + sigma) ** (-0.5 * self.theta)
        return np.interp(sigma, self.table_sigma, self.table_value)

    def to_dict(self) -> dict:
        out = {"k_s": self.k_s, "theta": self.theta, "kind": self.kind}
        if self.kind == "user-supplied":
            out["table"] = [[float(s), float(v)] for s, v in zip(self.table_sigma, self.table_value)]
        return out


def eval(lim: FluxLimiter, sigma):
    """``S(sigma)``; ``sigma`` is the squared gradient and must be >= 0."""
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise ValueError("negative gradient-square")
    out = lim.eval_array(s)
    return float(out) if out.ndim == 0 else out


def eval_prime(lim: FluxLimiter, sigma):
    """``S'(sigma)``, only available in closed form for the prototype."""
    if lim.kind != "prototype":
        raise ValueError("no derivative")
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise ValueError("negative gradient-square")
    out = -0.5 * lim.theta * lim.k_s * (1.0 + s) ** (-0.5 * lim.theta - 1.0)
    return float(out) if out.ndim == 0 else out


def verify_bound(lim: FluxLimiter, k_s_claim: float, theta_claim: float, samples: int = 200) -> bool:
    """Check ``|S(sigma)| <= k_s_claim (1 + sigma)^(-theta_claim/2)`` on
    ``sigma = 0`` plus ``samples - 1`` log-spaced points up to ``1e8``."""
    if samples < 10:
        raise ValueError("need at least 10 samples")
    sigma = np.concatenate([[0.0], np.logspace(-6, 8, samples - 1)])
    if lim.kind == "user-supplied":
        # include the table knots so the piecewise-linear curve is checked where it bends
        sigma = np.union1d(sigma, lim.table_sigma[lim.table_sigma <= 1e8])
    bound = k_s_claim * (1.0 + sigma) ** (-0.5 * theta_claim)
    return bool(np.all(np.abs(lim.eval_array(sigma)) <= bound * (1.0 + 1e-12)))

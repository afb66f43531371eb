"""Synthetic benchmark objectives (maximization form) and the sub-box
hypothesis factory used to stage good/weak/poor guidance against them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .space import Hypothesis, SearchSpace, box_hypothesis

_TWO_PI = 2.0 * math.pi


def _ackley(x: np.ndarray) -> float:
    d = x.size
    s1 = math.sqrt(float(np.sum(x * x)) / d)
    s2 = float(np.sum(np.cos(_TWO_PI * x))) / d
    return -20.0 * math.exp(-0.2 * s1) - math.exp(s2) + 20.0 + math.e


def _levy(x: np.ndarray) -> float:
    w = 1.0 + (x - 1.0) / 4.0
    head = math.sin(math.pi * w[0]) ** 2
    tail = (w[-1] - 1.0) ** 2 * (1.0 + math.sin(_TWO_PI * w[-1]) ** 2)
    mid = float(
        np.sum((w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(math.pi * w[:-1] + 1.0) ** 2))
    )
    return head + mid + tail


def _branin(x: np.ndarray) -> float:
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    t = 1.0 / (8.0 * math.pi)
    return (
        (x[1] - b * x[0] ** 2 + c * x[0] - 6.0) ** 2
        + 10.0 * (1.0 - t) * math.cos(x[0])
        + 10.0
    )


def _sphere(x: np.ndarray) -> float:
    return float(np.sum(x * x))


@dataclass(eq=False)
class ObjectiveSpec:
    """A benchmark in maximization form with a known optimum."""

    name: str
    space: SearchSpace
    optimum_x: np.ndarray
    optimum_value: float
    _fn: Callable[[np.ndarray], float]

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def key(self) -> str:
        return f"{self.name}:{self.dim}"

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise ValueError(f"{self.name}: expected {self.dim} coordinates")
        if not self.space.contains(x):
            raise ValueError(f"{self.name}: point outside the domain: {x!r}")
        return -self._fn(x)

    __call__ = evaluate


def _box(lo: float, hi: float, d: int) -> SearchSpace:
    return SearchSpace(np.full(d, lo), np.full(d, hi))


_FAMILIES = {
    "ackley": (lambda d: _box(-32.768, 32.768, d), lambda d: np.zeros(d), 0.0, _ackley),
    "levy": (lambda d: _box(-10.0, 10.0, d), lambda d: np.ones(d), 0.0, _levy),
    "sphere": (lambda d: _box(-5.12, 5.12, d), lambda d: np.zeros(d), 0.0, _sphere),
}

BRANIN_OPT_VALUE = -10.0 / (8.0 * math.pi)


def get_objective(key: str) -> ObjectiveSpec:
    """Look up ``name:dim`` (for example ``sphere:2``). Branin is 2-d only
    and may be spelled plain ``branin``."""
    key = key.strip().lower()
    name, _, dim_s = key.partition(":")
    if name == "branin":
        if dim_s not in ("", "2"):
            raise KeyError("branin is defined for dimension 2 only")
        space = SearchSpace([-5.0, 0.0], [10.0, 15.0])
        return ObjectiveSpec(
            "branin", space, np.array([math.pi, 2.275]), BRANIN_OPT_VALUE, _branin
        )
    if name not in _FAMILIES:
        raise KeyError(f"unknown objective {name!r}")
    if not dim_s:
        raise KeyError(f"objective {name!r} needs an explicit dimension, e.g. {name}:2")
    d = int(dim_s)
    if d < 1:
        raise KeyError("objective dimension must be positive")
    space_fn, opt_fn, opt_val, fn = _FAMILIES[name]
    return ObjectiveSpec(name, space_fn(d), opt_fn(d), opt_val, fn)


QUALITIES = ("good", "weak", "poor")


def make_quality_hypothesis(
    spec: ObjectiveSpec, quality: str, width: float = 2.0
) -> Hypothesis:
    """Sub-box hypothesis of the given guidance quality.

    ``good`` centers the box on the optimum. ``weak`` shifts each center
    20% of the way toward the lower bound and further by half the box
    width, so the optimum sits just outside. ``poor`` hugs the lower
    corner of the domain. Boxes are clipped to the domain; only the good
    box contains the optimum.
    """
    if quality not in QUALITIES:
        raise KeyError(f"quality must be one of {QUALITIES}, got {quality!r}")
    if width <= 0:
        raise ValueError("width must be positive")
    lb = spec.space.lower
    ub = spec.space.upper
    opt = spec.optimum_x
    half = width / 2.0
    if quality == "good":
        center = opt.astype(float)
    elif quality == "weak":
        center = opt - 0.2 * (opt - lb) - half
    else:
        center = lb + half
    lo = np.clip(center - half, lb, ub)
    hi = np.clip(center + half, lb, ub)
    return box_hypothesis(f"{spec.name}_{quality}", spec.space, lo, hi)

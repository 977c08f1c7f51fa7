"""Link functions mapping a reward gap to a win probability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from .exceptions import ConfigError, DomainExceedsLinearRegion

KINDS = ("sigmoid", "piecewise_linear", "scaled")


@dataclass(frozen=True)
class LinkSpec:
    """A link ``sigma`` with ``sigma(x) + sigma(-x) = 1``.

    ``scaled`` evaluates ``inner(scale * x)``; only one level of nesting is
    allowed.
    """

    kind: str = "sigmoid"
    scale: float = 1.0
    inner: Optional["LinkSpec"] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown link kind {self.kind!r}")
        if self.kind == "scaled":
            if not (math.isfinite(self.scale) and self.scale > 0):
                raise ConfigError("scaled link needs a finite positive scale")
            if self.inner is None:
                object.__setattr__(self, "inner", LinkSpec("sigmoid"))
            if self.inner.kind == "scaled":
                raise ConfigError("scaled links cannot be nested")

    @property
    def valid_radius(self) -> float:
        """Largest |x| for which the link is usable."""
        if self.kind == "sigmoid":
            return math.inf
        if self.kind == "piecewise_linear":
            return 0.5
        return self.inner.valid_radius / self.scale

    def value(self, x):
        if self.kind == "sigmoid":
            return expit(x)
        if self.kind == "piecewise_linear":
            return np.clip(0.5 + np.asarray(x, dtype=float), 0.0, 1.0)
        return self.inner.value(self.scale * np.asarray(x, dtype=float))

    def derivative(self, x):
        if self.kind == "sigmoid":
            p = expit(x)
            return p * (1.0 - p)
        if self.kind == "piecewise_linear":
            x = np.asarray(x, dtype=float)
            return np.where(np.abs(x) <= 0.5, 1.0, 0.0)
        return self.scale * self.inner.derivative(self.scale * np.asarray(x, dtype=float))

    def antiderivative(self, x):
        """A primitive of ``value``; the MLE objective's per-record loss is
        ``antiderivative(z) - o * z``, the log-loss when the link is the sigmoid."""
        x = np.asarray(x, dtype=float)
        if self.kind == "sigmoid":
            return np.logaddexp(0.0, x)
        if self.kind == "piecewise_linear":
            inside = 0.5 * (np.clip(x, -0.5, 0.5) + 0.5) ** 2
            return inside + np.maximum(x - 0.5, 0.0)
        return self.inner.antiderivative(self.scale * x) / self.scale

    def kappa(self, B: float, feat_diff_bound: float = 2.0) -> float:
        """Smallest derivative over ``|x| <= feat_diff_bound * B``.

        Every supported link has a derivative that is even and nonincreasing
        in ``|x|`` on its valid domain, so the minimum sits at the endpoint.
        """
        if not B > 0:
            raise ValueError("B must be positive")
        if not 0 < feat_diff_bound <= 2:
            raise ValueError("feat_diff_bound must lie in (0, 2]")
        radius = feat_diff_bound * B
        if radius > self.valid_radius:
            raise DomainExceedsLinearRegion(
                f"arguments up to {radius:g} exceed the linear region |x| <= {self.valid_radius:g}"
            )
        return float(self.derivative(radius))

    def to_config(self) -> dict:
        if self.kind == "scaled":
            return {"kind": "scaled", "scale": self.scale, "inner": self.inner.kind}
        return {"kind": self.kind}

    @classmethod
    def from_config(cls, cfg: dict) -> "LinkSpec":
        unknown = set(cfg) - {"kind", "scale", "inner"}
        if unknown:
            raise ConfigError(f"unknown link keys: {sorted(unknown)}")
        kind = cfg.get("kind", "sigmoid")
        if kind == "scaled":
            if "scale" not in cfg:
                raise ConfigError("scaled link requires 'scale'")
            inner = cls(cfg.get("inner", "sigmoid"))
            return cls("scaled", float(cfg["scale"]), inner)
        if "scale" in cfg or "inner" in cfg:
            raise ConfigError(f"'scale'/'inner' only apply to scaled links, not {kind!r}")
        return cls(kind)


SIGMOID = LinkSpec("sigmoid")
PIECEWISE_LINEAR = LinkSpec("piecewise_linear")


def link_value(s: LinkSpec, x):
    return s.value(x)


def link_derivative(s: LinkSpec, x):
    return s.derivative(x)


def kappa_for(s: LinkSpec, B: float, feat_diff_bound: float = 2.0) -> float:
    return s.kappa(B, feat_diff_bound)

"""Sparsity penalties: L1, SCAD, and hard thresholding.

Each penalty is described by a small frozen :class:`Penalty` record; the
value and (right-)derivative functions below accept scalars or arrays and
are applied entrywise.  Derivatives are the ingredient for the local linear
approximation used by the estimators: a concave penalty is replaced by the
weighted L1 term ``p'(|current|) * |theta|`` and re-solved.
"""

from dataclasses import dataclass, replace

import numpy as np

FAMILIES = ("l1", "scad", "hard")

SCAD_DEFAULT_A = 3.7


@dataclass(frozen=True)
class Penalty:
    """A penalty family with its tuning constants.

    ``lam`` may be left as ``None`` for deferred selection (e.g. a rate
    experiment fills it per cell); evaluating a penalty with ``lam=None``
    is an error.  ``a`` applies to SCAD only and must exceed 2.
    """

    family: str
    lam: float | None = None
    a: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown penalty family {self.family!r}; expected one of {FAMILIES}")
        if self.lam is not None and not (self.lam >= 0.0):
            raise ValueError(f"lambda must be >= 0, got {self.lam!r}")
        if self.family == "scad":
            a = SCAD_DEFAULT_A if self.a is None else float(self.a)
            if not a > 2.0:
                raise ValueError(f"SCAD requires a > 2, got {a!r}")
            object.__setattr__(self, "a", a)
        elif self.a is not None:
            raise ValueError(f"parameter a applies to SCAD only, not {self.family!r}")

    def with_lambda(self, lam):
        return replace(self, lam=float(lam))


def _require_lambda(pen):
    if pen.lam is None:
        raise ValueError("penalty has no lambda set")
    return float(pen.lam)


def penalty_value(pen, theta):
    """Entrywise penalty value ``p_lambda(|theta|)``.

    Closed forms:

    * L1: ``lam * |t|``
    * SCAD: ``lam * t`` on ``[0, lam]``;
      ``-(t^2 - 2*a*lam*t + lam^2) / (2*(a - 1))`` on ``(lam, a*lam]``;
      ``(a + 1) * lam^2 / 2`` beyond ``a*lam``
    * hard: ``lam^2 - (t - lam)^2`` for ``t < lam``, else ``lam^2``
    """
    lam = _require_lambda(pen)
    t = np.abs(np.asarray(theta, dtype=float))
    if pen.family == "l1":
        out = lam * t
    elif pen.family == "scad":
        a = pen.a
        mid = -(t * t - 2.0 * a * lam * t + lam * lam) / (2.0 * (a - 1.0))
        out = np.where(t <= lam, lam * t, np.where(t <= a * lam, mid, (a + 1.0) * lam * lam / 2.0))
    else:  # hard
        out = np.where(t < lam, lam * lam - (t - lam) ** 2, lam * lam)
    if np.isscalar(theta) or np.ndim(theta) == 0:
        return float(out)
    return out


def penalty_derivative(pen, theta):
    """Entrywise right-derivative ``p'_lambda(theta)`` for ``theta >= 0``.

    * L1: ``lam`` everywhere (the right derivative at 0)
    * SCAD: ``lam`` on ``[0, lam]``; ``(a*lam - t)_+ / (a - 1)`` beyond
    * hard: ``2 * (lam - t)_+``
    """
    lam = _require_lambda(pen)
    t = np.asarray(theta, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("penalty_derivative is defined for theta >= 0")
    if pen.family == "l1":
        out = np.full_like(t, lam)
    elif pen.family == "scad":
        a = pen.a
        out = np.where(t <= lam, lam, np.maximum(a * lam - t, 0.0) / (a - 1.0))
    else:  # hard
        out = 2.0 * np.maximum(lam - t, 0.0)
    if np.isscalar(theta) or np.ndim(theta) == 0:
        return float(out)
    return out


def parse_penalty(text):
    """Parse ``"family[:lambda[:a]]"`` strings, e.g. ``"scad:0.1:3.7"``.

    The lambda part may be omitted (deferred selection).  Raises
    ``ValueError`` on malformed input.
    """
    parts = str(text).strip().lower().split(":")
    if not parts or parts[0] not in FAMILIES:
        raise ValueError(
            f"cannot parse penalty {text!r}; expected family in {FAMILIES}, "
            "optionally followed by :lambda and (SCAD) :a"
        )
    family = parts[0]
    lam = None
    a = None
    try:
        if len(parts) >= 2 and parts[1] != "":
            lam = float(parts[1])
        if len(parts) >= 3:
            if family != "scad":
                raise ValueError(f"penalty {family!r} takes no third parameter")
            a = float(parts[2])
        if len(parts) > 3:
            raise ValueError("too many ':' fields")
    except ValueError as exc:
        raise ValueError(f"cannot parse penalty {text!r}: {exc}") from None
    return Penalty(family, lam, a)


def format_penalty(pen):
    """Inverse of :func:`parse_penalty` (always includes ``a`` for SCAD)."""
    if pen.lam is None:
        return pen.family
    if pen.family == "scad":
        return f"{pen.family}:{pen.lam:g}:{pen.a:g}"
    return f"{pen.family}:{pen.lam:g}"

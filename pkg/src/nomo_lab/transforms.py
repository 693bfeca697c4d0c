"""
Linear maps between absolute coordinates and {centre of mass, internal}.

A transform ``t`` sends absolute coordinates to new ones, ``x' = t x``.
Row 0 is the centre-of-mass row (t_0i = m_i / M); every other row has zero
sum, so those coordinates are unchanged by a uniform translation. Momenta
transform contragrediently, which makes a kinetic form G become t G t^T and
a potential form V become t^-T V t^-1.

Frames are identified by strings:

``absolute``
    laboratory-frame particle coordinates
``cm:<id>``
    (centre of mass, internal coordinates)
``anchored<r>:<id>``
    (absolute coordinate of particle r, internal coordinates)
``internal:<id>``
    internal coordinates only
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadCmRowError,
    BadInternalRowError,
    FrameMismatchError,
    NotTranslationInvariantError,
    ReferenceIndexError,
    SingularTransformError,
    TransformError,
)
from .model import ABSOLUTE, FormKind, HarmonicModel, QuadraticForm, _frozen

ROW_TOL = 1e-12
MAX_CONDITION = 1e12

_ANCHORED = re.compile(r"^anchored(\d+):(.+)$")


@dataclass(frozen=True, eq=False)
class CoordinateTransform:
    t: np.ndarray
    t_inv: np.ndarray
    masses: np.ndarray
    name: str

    @property
    def n(self) -> int:
        return self.t.shape[0]

    @property
    def internal_frame(self) -> str:
        return f"internal:{self.name}"

    @property
    def cm_frame(self) -> str:
        return f"cm:{self.name}"

    def anchored_frame(self, reference: int = 0) -> str:
        if not 0 <= reference < self.n:
            raise ReferenceIndexError(f"reference {reference} outside [0, {self.n})")
        return f"anchored{reference}:{self.name}"

    def frame_matrix(self, frame: str) -> np.ndarray:
        """Matrix S with x_absolute = S y for coordinates y in ``frame``.

        Defined for the three full-dimensional frames of this transform.
        """
        if frame == ABSOLUTE:
            return np.eye(self.n)
        if frame == self.cm_frame:
            return self.t_inv.copy()
        m = _ANCHORED.match(frame)
        if m and m.group(2) == self.name:
            r = int(m.group(1))
            if r >= self.n:
                raise ReferenceIndexError(f"reference {r} outside [0, {self.n})")
            s = np.empty((self.n, self.n))
            s[:, 0] = 1.0
            s[:, 1:] = self.t_inv[:, 1:] - self.t_inv[r, 1:]
            return s
        raise FrameMismatchError(f"frame {frame!r} is not a full frame of transform {self.name!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "t": self.t.tolist(),
            "t_inv": self.t_inv.tolist(),
            "masses": self.masses.tolist(),
        }


def _wrap(t: np.ndarray, model: HarmonicModel, name: str) -> CoordinateTransform:
    cond = np.linalg.cond(t)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularTransformError(f"transform condition number {cond:.3g} exceeds {MAX_CONDITION:.0e}")
    t_inv = np.linalg.inv(t)
    return CoordinateTransform(_frozen(t), _frozen(t_inv), model.masses, name)


def heavy_center_transform(model: HarmonicModel, reference: int = 0) -> CoordinateTransform:
    """CM row plus x_j - x_reference for every other particle j, in index order."""
    n = model.n
    if not 0 <= reference < n:
        raise ReferenceIndexError(f"reference {reference} outside [0, {n})")
    t = np.zeros((n, n))
    t[0] = model.masses / model.total_mass
    row = 1
    for j in range(n):
        if j == reference:
            continue
        t[row, j] = 1.0
        t[row, reference] = -1.0
        row += 1
    return _wrap(t, model, f"ref{reference}")


def validate_transform(t, model: HarmonicModel, name: str | None = None) -> CoordinateTransform:
    """Check a user-supplied transform against the CM-row and zero-sum constraints."""
    t = np.array(t, dtype=float)
    n = model.n
    if t.shape != (n, n):
        raise TransformError(f"transform must be {n}x{n}, got shape {t.shape}")
    cm = model.masses / model.total_mass
    if np.max(np.abs(t[0] - cm)) > ROW_TOL:
        raise BadCmRowError(f"row 0 must equal m_i/M = {cm.tolist()}, got {t[0].tolist()}")
    sums = t[1:].sum(axis=1)
    scale = np.maximum(1.0, np.max(np.abs(t[1:]), axis=1))
    bad = np.flatnonzero(np.abs(sums) > ROW_TOL * scale)
    if bad.size:
        j = int(bad[0]) + 1
        raise BadInternalRowError(f"internal row {j} sums to {sums[j - 1]:.3g}, must be 0")
    if name is None:
        name = "custom-" + hashlib.sha1(t.tobytes()).hexdigest()[:8]
    return _wrap(t, model, name)


def push_kinetic(form: QuadraticForm, transform: CoordinateTransform):
    """Split a kinetic form into its CM part and the internal kinetic form.

    Returns
    -------
    tcm : QuadraticForm
        1x1 form 1/(2M) on the centre-of-mass momentum.
    trel : QuadraticForm
        (N-1)x(N-1) form with entries 1/2 sum_i t_ji t_ki / m_i.
    """
    if form.kind is not FormKind.KINETIC:
        raise ValueError("push_kinetic needs a kinetic form")
    if form.frame != ABSOLUTE:
        raise FrameMismatchError(f"kinetic form must be in the absolute frame, got {form.frame!r}")
    t = transform.t
    full = t @ form.matrix @ t.T
    cross = np.max(np.abs(full[0, 1:]))
    if cross > ROW_TOL * np.max(np.abs(full)):
        raise ValueError(f"kinetic form couples CM and internal momenta ({cross:.3g}); masses do not match the transform")
    tcm = QuadraticForm(FormKind.KINETIC, full[:1, :1], f"cmcoord:{transform.name}")
    trel = QuadraticForm(FormKind.KINETIC, full[1:, 1:], transform.internal_frame)
    return tcm, trel


def push_potential(form: QuadraticForm, transform: CoordinateTransform) -> QuadraticForm:
    """Express a translation-invariant potential in internal coordinates only."""
    if form.kind is not FormKind.POTENTIAL:
        raise ValueError("push_potential needs a potential form")
    if form.frame != ABSOLUTE:
        raise FrameMismatchError(f"potential form must be in the absolute frame, got {form.frame!r}")
    s = transform.t_inv
    full = s.T @ form.matrix @ s
    scale = max(1.0, np.max(np.abs(full)))
    leak = np.max(np.abs(full[0]))
    if leak > ROW_TOL * scale:
        raise NotTranslationInvariantError(f"potential couples to the CM coordinate ({leak:.3g})")
    return QuadraticForm(FormKind.POTENTIAL, full[1:, 1:], transform.internal_frame)


def tcm_absolute(model: HarmonicModel) -> QuadraticForm:
    """(sum_i p_i)^2 / (2M) as a kinetic form in absolute momenta."""
    n = model.n
    return QuadraticForm(FormKind.KINETIC, np.full((n, n), 0.5 / model.total_mass), ABSOLUTE)


def pull_back_kinetic(form: QuadraticForm, transform: CoordinateTransform) -> QuadraticForm:
    """Map an internal kinetic form back to absolute momenta."""
    if form.frame != transform.internal_frame:
        raise FrameMismatchError(f"expected frame {transform.internal_frame!r}, got {form.frame!r}")
    s = transform.t_inv[:, 1:]
    return QuadraticForm(FormKind.KINETIC, s @ form.matrix @ s.T, ABSOLUTE)

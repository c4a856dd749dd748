"""Numerical tolerances and runtime switches shared by every module."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    rank: float = 1e-9
    """Smallest singular value accepted for an affinely independent base."""
    zero_direction: float = 1e-12
    """A point closer than this to a flat has no direction relative to it."""
    on_flat: float = 1e-9
    """Points this close to a base flat are excluded from its bouquet."""
    face_accept: float = 1e-12
    """Barycentric slack when accepting a face projection."""
    containment: float = 1e-10
    """Barycentric slack of the closed-simplex containment test."""
    trilateration_clamp: float = 1e-9
    """Negative squared heights above -clamp are rounded to zero."""
    orthonormal: float = 1e-9


TOL = Tolerances()


def jit_enabled() -> bool:
    """True unless ``SPARSEGEOM_DISABLE_JIT`` is set to a truthy value."""
    flag = os.environ.get("SPARSEGEOM_DISABLE_JIT", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


def configure_logging() -> None:
    level = os.environ.get("SPARSEGEOM_LOG", "WARNING").upper()
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("sparsegeom").setLevel(getattr(logging, level, logging.WARNING))

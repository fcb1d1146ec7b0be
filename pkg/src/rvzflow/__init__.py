"""Rauzy-Veech-Zorich renormalization, zippered rectangles and periodic orbit counts."""

from __future__ import annotations

from .counting import CountReport, EnumQuery, count_orbits, count_once, enumerate_words, fit_slope
from .errors import (
    BoundTooLargeError,
    ConstraintError,
    DegenerateError,
    IncompatibleError,
    InvalidWordError,
    ReduciblePermutationError,
    RVZError,
    StallError,
)
from .induction import IETPoint, encode, periodic_point, rv_step, zorich_step
from .linalg import RenormMatrix, col_norm, elementary_matrix, is_primitive, perron
from .measure import McConfig, lemma2_bracket, mc_cylinder, mc_expansion
from .perm import Permutation, RauzyClass, apply_op, rauzy_class
from .words import Letter, Word, canonical_form, cylinder_leb, is_admissible
from .zippered import DeltaCoords, ZippedRectangle, area, first_return, flow, from_delta, to_delta, u_map

__version__ = "0.1.0"

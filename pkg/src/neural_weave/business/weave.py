"""
Weave matrix construction for plain, twill and satin patterns.

Rows run along v (one weft pick each), columns along u (one warp end
each). ``warp_over[r, c]`` marks cells where the warp passes over.
"""

import math
from typing import Tuple

import numpy as np

from ..domain.enums import WeaveFamily
from ..domain.exceptions import UnsupportedWeaveError, unsupported_weave_error
from ..domain.models import WeaveKind, WeaveMatrix

MIN_WEAVE_SIZE = 2
MAX_WEAVE_SIZE = 16

# Pattern index W used by material sampling
PATTERN_CATALOG: Tuple[WeaveKind, ...] = (
    WeaveKind.plain(),
    WeaveKind.twill(3),
    WeaveKind.twill(5),
    WeaveKind.twill(8),
    WeaveKind.satin(5, 5),
    WeaveKind.satin(8, 8),
    WeaveKind.satin(5, 10),
)


def catalog_pattern(index: int) -> WeaveKind:
    """Weave kind for pattern index W in 0..6."""
    if not 0 <= index < len(PATTERN_CATALOG):
        raise UnsupportedWeaveError(f"Pattern index must be in 0..{len(PATTERN_CATALOG) - 1}", details=str(index))
    return PATTERN_CATALOG[index]


def satin_move(n: int) -> int:
    """
    Smallest satin move number for an n-end repeat.

    A valid move s satisfies 1 < s < n - 1 and gcd(s, n) = 1, which keeps
    interlacings isolated. Sizes 2, 3, 4 and 6 admit none.
    """
    for s in range(2, n - 1):
        if math.gcd(s, n) == 1:
            return s
    raise unsupported_weave_error(f"satin{n}", "no regular satin move exists for this size")


def _check_size(kind: WeaveKind, value: int) -> None:
    if not MIN_WEAVE_SIZE <= value <= MAX_WEAVE_SIZE:
        raise unsupported_weave_error(kind.label, f"size {value} outside {MIN_WEAVE_SIZE}..{MAX_WEAVE_SIZE}")


def build_weave_matrix(kind: WeaveKind) -> WeaveMatrix:
    """
    Build the canonical interlacing grid for a weave kind.

    Raises:
        UnsupportedWeaveError: For sizes outside 2..16 or satins without a move
    """
    if kind.family == WeaveFamily.PLAIN:
        grid = np.array([[True, False], [False, True]])
        return WeaveMatrix(grid, kind)

    _check_size(kind, kind.n)
    _check_size(kind, kind.m)

    if kind.family == WeaveFamily.TWILL:
        if kind.m != kind.n:
            raise unsupported_weave_error(kind.label, "twill repeats are square")
        grid = np.eye(kind.n, dtype=bool)
        return WeaveMatrix(grid, kind)

    if kind.family == WeaveFamily.SATIN:
        # n ends by m picks; rows past n repeat the n-row satin sequence
        if kind.m % kind.n != 0:
            raise unsupported_weave_error(kind.label, "pick count must be a multiple of the end count")
        move = satin_move(kind.n)
        grid = np.zeros((kind.m, kind.n), dtype=bool)
        for row in range(kind.m):
            grid[row, (row * move) % kind.n] = True
        return WeaveMatrix(grid, kind)

    raise unsupported_weave_error(str(kind.family), "unknown weave family")

"""Two-symbol coding of the circle factor.

The map f is a full degree-2 covering: branch 0 carries [0, 1/2] onto
[0, 1] and branch 1 carries [1/2, 1] onto [0, 1], so every finite 0/1
word is admissible.  Inverse branches are solved on the lift (bisection
bracket, then Newton), words compose right to left, and the level-n
cylinders tile the interval in lexicographic = spatial order.

Boundary convention: theta = 1/2 belongs to symbol 1 and theta = 0 to
symbol 0; cylinder work happens on the closed interval [0, 1] so the
right endpoint 1 (the circle point 0) is a legal lift coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .circle_map import PerturbationSpec, f_eval, g_eval

__all__ = [
    "Word",
    "Cylinder",
    "BranchSolverError",
    "inverse_branch",
    "apply_word",
    "cylinder",
    "branch_fixed_point",
    "level_endpoints",
    "level_anchors",
    "anchor_birkhoff_sums",
    "cylinder_rows",
    "word_index",
    "index_word",
]

Word = tuple[int, ...]

_BISECT_STEPS = 12  # brackets to width 2^-13 < 1e-3
_NEWTON_STEPS = 60
_NEWTON_TOL = 1e-15


class BranchSolverError(Exception):
    """Inverse-branch solve failed its residual contract."""


def _check_word(w: Sequence[int]) -> Word:
    word = tuple(int(s) for s in w)
    if any(s not in (0, 1) for s in word):
        raise ValueError(f"word symbols must be 0 or 1, got {w!r}")
    return word


def _solve_branch(spec: PerturbationSpec, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Solve 2y + g(y) = x + a for y in [a/2, (a+1)/2], vectorized."""
    target = x + a
    lo = 0.5 * a
    hi = 0.5 * (a + 1.0)
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        g, _ = g_eval(spec, mid)
        high = 2.0 * mid + g > target
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    y = 0.5 * (lo + hi)
    for _ in range(_NEWTON_STEPS):
        g, gp = g_eval(spec, y)
        resid = 2.0 * y + g - target
        y = np.clip(y - resid / (2.0 + gp), 0.5 * a, 0.5 * (a + 1.0))
        if np.max(np.abs(resid)) < _NEWTON_TOL:
            break
    g, gp = g_eval(spec, y)
    resid = np.abs(2.0 * y + g - target)
    if np.max(resid) >= 1e-14:
        raise BranchSolverError(
            f"branch solve residual {np.max(resid):.3e} exceeds 1e-14"
        )
    return y


def inverse_branch(spec: PerturbationSpec, a: int, x):
    """Preimage of x under f in the half selected by symbol a, with |g_a'| = 1/f'.

    x (scalar or array) is a lift coordinate in [0, 1]; the result lies in
    [a/2, (a+1)/2] and satisfies f(y) = x to residual below 1e-14.
    """
    if a not in (0, 1):
        raise ValueError("symbol must be 0 or 1")
    scalar = np.ndim(x) == 0
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((xv < 0.0) | (xv > 1.0)):
        raise ValueError("x must lie in [0, 1]")
    y = _solve_branch(spec, np.full_like(xv, float(a)), xv)
    _, gp = g_eval(spec, y)
    deriv = 1.0 / (2.0 + gp)
    if scalar:
        return float(y[0]), float(deriv[0])
    return y, deriv


def _apply_symbols(spec, symbols_per_step: Iterable, x: np.ndarray):
    """Apply inverse branches right to left; each step's symbols may be an array."""
    y = x
    deriv = np.ones_like(x)
    for syms in symbols_per_step:
        a = np.broadcast_to(np.asarray(syms, dtype=float), y.shape)
        y = _solve_branch(spec, a, y)
        _, gp = g_eval(spec, y)
        deriv /= 2.0 + gp
    return y, deriv


def apply_word(spec: PerturbationSpec, w: Sequence[int], x):
    """Composed inverse branch g_w(x) and its chain-rule derivative.

    For w = w_1 ... w_n the branches apply right to left, so the image lies
    in the cylinder of w and the derivative is the product of 1/f' along
    the returned point's forward orbit.  The empty word is the identity.
    """
    word = _check_word(w)
    scalar = np.ndim(x) == 0
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    y, deriv = _apply_symbols(spec, reversed(word), xv)
    if scalar:
        return float(y[0]), float(deriv[0])
    return y, deriv


def branch_fixed_point(spec: PerturbationSpec, a: int, tol: float = 1e-15) -> float:
    """Fixed point of the inverse branch g_a, found by contraction iteration.

    Branch 0 fixes 0; branch 1 fixes the lift coordinate 1 (circle point 0).
    """
    if a not in (0, 1):
        raise ValueError("symbol must be 0 or 1")
    y = 0.25 + 0.5 * a
    for _ in range(200):
        nxt, _ = inverse_branch(spec, a, y)
        if abs(nxt - y) < tol:
            return nxt
        y = nxt
    raise BranchSolverError(f"branch-{a} fixed point did not converge")


@dataclass(frozen=True)
class Cylinder:
    """Interval of points whose first n symbols equal the word."""

    word: Word
    lo: float
    hi: float
    anchor: float


def cylinder(spec: PerturbationSpec, w: Sequence[int]) -> Cylinder:
    """Cylinder interval [g_w(0), g_w(1)] with its canonical periodic anchor.

    The anchor is g_{w'}(x_s) where s is the last symbol and x_s the fixed
    point of branch s; that lands on the cylinder endpoint matching s.
    """
    word = _check_word(w)
    if not word:
        return Cylinder((), 0.0, 1.0, 0.0)
    lo, _ = apply_word(spec, word, 0.0)
    hi, _ = apply_word(spec, word, 1.0)
    anchor = lo if word[-1] == 0 else hi
    return Cylinder(word, lo, hi, anchor)


# ---------------------------------------------------------------------------
# level enumeration (vectorized over all 2^n words)
# ---------------------------------------------------------------------------

def word_index(w: Sequence[int]) -> int:
    """Lexicographic index of a word: first symbol is the most significant bit."""
    word = _check_word(w)
    idx = 0
    for s in word:
        idx = (idx << 1) | s
    return idx


def index_word(idx: int, n: int) -> Word:
    """Inverse of word_index at level n."""
    return tuple((idx >> (n - 1 - k)) & 1 for k in range(n))


def level_endpoints(spec: PerturbationSpec, n: int) -> np.ndarray:
    """The 2^n + 1 sorted cylinder endpoints at level n.

    In lexicographic word order, cylinder i at level n is
    [endpoints[i], endpoints[i + 1]].
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    pts = np.array([0.0, 1.0])
    for _ in range(n):
        left, _ = inverse_branch(spec, 0, pts)
        right, _ = inverse_branch(spec, 1, pts)
        pts = np.concatenate([left, right[1:]])
    return pts


def level_anchors(spec: PerturbationSpec, n: int) -> np.ndarray:
    """Anchor points of all level-n cylinders in lexicographic order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = level_endpoints(spec, n)
    idx = np.arange(1 << n)
    return np.where(idx & 1 == 0, pts[idx], pts[idx + 1])


def anchor_birkhoff_sums(spec: PerturbationSpec, n: int, fn) -> np.ndarray:
    """Birkhoff sums S_n fn at every level-n anchor, in lexicographic order.

    Uses f(x_w) = x_{shift w} to share suffix sums across the word tree:
    the level-k sums are fn(anchor) plus the level-(k-1) sums of the
    words with the first symbol dropped.  fn must accept arrays.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sums = np.asarray(fn(level_anchors(spec, 1)), dtype=float)
    for k in range(2, n + 1):
        anchors = level_anchors(spec, k)
        mask = (1 << (k - 1)) - 1
        idx = np.arange(1 << k) & mask
        sums = np.asarray(fn(anchors), dtype=float) + sums[idx]
    return sums


def cylinder_rows(spec: PerturbationSpec, n: int):
    """Level-n cylinder table: (word, lo, hi, anchor, deriv_at_anchor) rows.

    deriv_at_anchor is the reciprocal n-step expansion 1 / (f^n)'(anchor),
    the chain-rule derivative of the composed inverse branch along the
    anchor's forward orbit.
    """
    if not 1 <= n <= 16:
        raise ValueError("n must be in 1..16")
    pts = level_endpoints(spec, n)
    anchors = level_anchors(spec, n)
    sums = anchor_birkhoff_sums(
        spec, n, lambda x: np.log(f_eval(spec, np.asarray(x) % 1.0)[1])
    )
    derivs = np.exp(-sums)
    rows = []
    for i in range(1 << n):
        word = "".join(str(b) for b in index_word(i, n))
        rows.append((word, float(pts[i]), float(pts[i + 1]), float(anchors[i]), float(derivs[i])))
    return rows

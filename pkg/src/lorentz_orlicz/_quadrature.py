"""Adaptive Gauss-Legendre quadrature in logarithmic coordinates.

Integrands here are power-like, so every routine works in ``x = ln t`` and
takes the *logarithm* of the integrand (Jacobian included) as a function of
``x``.  Working in log space keeps values finite at abscissae far below the
smallest double when the integral itself is perfectly ordinary.
"""

from __future__ import annotations

import math
import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(16)

DEFAULT_RTOL = 1e-12


def _rule(logf, a, b, owner=None):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    vals = np.exp(logf(x) if owner is None else logf(x, owner))
    return half * (vals @ _WEIGHTS)


def log_quad(logf, xa, xb, rtol=DEFAULT_RTOL, max_rounds=60, max_active=200_000, with_owner=False):
    """Integrate ``exp(logf(x))`` over each ``[xa[i], xb[i]]``.

    All intervals are refined together.  An interval is accepted once the
    16-point rule on it agrees with the sum over its two halves to ``rtol``,
    either relative to itself or relative to the running total of the
    integral it belongs to (so noise in a negligible region cannot stall the
    refinement).  ``logf`` receives a 2-D array of abscissae, one row per
    subinterval, and must be vectorised; with ``with_owner`` it also gets
    the index of the original interval each row belongs to.
    """
    xa = np.atleast_1d(np.asarray(xa, dtype=float))
    xb = np.atleast_1d(np.asarray(xb, dtype=float))
    out = np.zeros(xa.shape)
    if xa.size == 0:
        return out
    owner = np.arange(xa.size)
    a, b = xa.copy(), xb.copy()
    keep = b > a
    owner, a, b = owner[keep], a[keep], b[keep]
    coarse = _rule(logf, a, b, owner if with_owner else None) if a.size else np.empty(0)
    for rnd in range(max_rounds):
        if a.size == 0:
            break
        mid = 0.5 * (a + b)
        own = owner if with_owner else None
        left = _rule(logf, a, mid, own)
        right = _rule(logf, mid, b, own)
        fine = left + right
        err = np.abs(fine - coarse)
        pending = np.zeros(xa.shape)
        np.add.at(pending, owner, np.abs(fine))
        scale = (np.abs(out) + pending)[owner]
        last = rnd == max_rounds - 1 or 2 * a.size > max_active
        done = (err <= rtol * np.abs(fine)) | (err <= 1e-3 * rtol * scale) | last
        np.add.at(out, owner[done], fine[done])
        todo = ~done
        owner = np.concatenate([owner[todo], owner[todo]])
        a, b = np.concatenate([a[todo], mid[todo]]), np.concatenate([mid[todo], b[todo]])
        coarse = np.concatenate([left[todo], right[todo]])
    return out


def log_quad_one(logf, xa, xb, rtol=DEFAULT_RTOL):
    """Scalar convenience wrapper around :func:`log_quad`."""
    return float(log_quad(logf, [xa], [xb], rtol=rtol)[0])


def log_quad_infinite(logf, x0, direction, rtol=DEFAULT_RTOL, max_width=2.0 ** 16):
    """Integrate ``exp(logf(x))`` from ``x0`` to ``-inf`` (direction -1) or ``+inf`` (+1).

    The half-line is cut into chunks of doubling width (1, 1, 2, 4, ...) and
    all chunks are integrated in one batch.  Used only where no self-similar
    structure is available; convergence has been established analytically,
    so the integrand decays exponentially in ``x``.
    """
    widths = [0.0, 1.0]
    while widths[-1] < max_width:
        widths.append(2.0 * widths[-1])
    w = np.array(widths)
    ends = x0 + direction * w
    # far chunks whose endpoint bound is negligible are skipped; the
    # integrand is eventually monotone, so endpoints bound each chunk
    lv = logf(ends[None, :])[0]
    widths_log = np.log(np.diff(w))
    bound = np.maximum(lv[:-1], lv[1:]) + widths_log
    keep = bound >= bound[0] + math.log(rtol * 1e-3)
    keep[: np.argmax(bound) + 1] = True
    a, b = (ends[1:], ends[:-1]) if direction < 0 else (ends[:-1], ends[1:])
    return float(np.sum(log_quad(logf, a[keep], b[keep], rtol=rtol)))


def self_similar_sum(integrate_level1, z0, ratio, direction, lam, lo, hi):
    """Integral over ``[lo, hi]`` of a tail made of self-similar levels.

    Level ``j >= 1`` spans ``z0 * ratio**(direction*(j-1))`` to
    ``z0 * ratio**(direction*j)``; the integral over any part of level ``j``
    equals ``lam**(j-1)`` times the integral over the corresponding part of
    level 1.  ``integrate_level1(a, b)`` integrates over ``[a, b]`` inside
    level 1.  ``hi`` (direction +1) or ``lo`` (direction -1) may be infinite
    or zero; convergence (``lam < 1``) is the caller's responsibility.
    """
    lnr = math.log(ratio)
    ln_z0 = math.log(z0)

    def w_of(z):
        if z == 0.0:
            return math.inf if direction < 0 else -math.inf
        if math.isinf(z):
            return math.inf if direction > 0 else -math.inf
        return direction * (math.log(z) - ln_z0) / lnr

    wa, wb = sorted((w_of(lo), w_of(hi)))
    wa = max(wa, 0.0)
    if not wb > wa:
        return 0.0

    def to_level1(w, j):
        return math.exp(ln_z0 + direction * (w - (j - 1)) * lnr)

    def part(w1, w2, j):
        a, b = sorted((to_level1(w1, j), to_level1(w2, j)))
        if not b > a:
            return 0.0
        return lam ** (j - 1) * integrate_level1(a, b)

    ja = math.floor(wa) + 1
    jb = math.inf if math.isinf(wb) else max(math.ceil(wb), 1)
    if ja >= jb:
        return part(wa, wb, ja)
    total = part(wa, float(ja), ja)
    full = integrate_level1(*sorted((z0, z0 * ratio ** direction)))
    if math.isinf(jb):
        total += full * lam ** ja / (1.0 - lam)
        return total
    n_full = jb - ja - 1
    if n_full > 0:
        if lam == 1.0:
            total += full * n_full
        else:
            total += full * lam ** ja * (1.0 - lam ** n_full) / (1.0 - lam)
    total += part(float(jb - 1), wb, jb)
    return total

"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive: direct enumeration with itertools,
scalar searches, and a generic projected-gradient solver.  Nothing imports
the package code paths it is used to verify.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def enumerate_strategy_expectations(l, s, d, value_fn, setting_probs=None):
    """<value> under every deterministic strategy, by direct enumeration.

    ``value_fn(settings, outcomes)`` takes 1-based settings and 0-based
    outcomes.  Returns a list of d^(l*s) expectations.
    """
    joint_settings = list(itertools.product(range(1, s + 1), repeat=l))
    if setting_probs is None:
        setting_probs = [1.0 / len(joint_settings)] * len(joint_settings)
    out = []
    for assignment in itertools.product(range(d), repeat=l * s):
        # assignment[(party) * s + (setting - 1)] is that party's outcome
        total = 0.0
        for pi, settings in zip(setting_probs, joint_settings):
            outcomes = tuple(assignment[p * s + (settings[p] - 1)] for p in range(l))
            total += pi * value_fn(settings, outcomes)
        out.append(total)
    return out


def enumerate_strategy_distributions(l, s, d, setting_probs=None):
    """Dense (H, K) table of deterministic-strategy distributions.

    Results are indexed in the package's mixed-radix order (settings digits
    first), recomputed here from scratch.
    """
    joint_settings = list(itertools.product(range(s), repeat=l))
    if setting_probs is None:
        setting_probs = [1.0 / len(joint_settings)] * len(joint_settings)
    k = (d * s) ** l
    rows = []
    for assignment in itertools.product(range(d), repeat=l * s):
        probs = np.zeros(k)
        for pi, settings in zip(setting_probs, joint_settings):
            idx = 0
            for u in settings:
                idx = idx * s + u
            for p in range(l):
                idx = idx * d + assignment[p * s + settings[p]]
            probs[idx] += pi
        rows.append(probs)
    return np.array(rows)


def golden_section_max(fn, lo, hi, iters=200):
    """Maximize a unimodal scalar function on [lo, hi]."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fn(d)
        else:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
    x = (a + b) / 2.0
    return x, fn(x)


def project_simplex(v):
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def projected_gradient_kl(q, vertex_table, iters=20000, tol=1e-14):
    """Minimize D(q | lam @ vertex_table) in bits by projected gradient with backtracking."""
    sup = q > 0.0
    qs = q[sup]
    e = vertex_table[:, sup]
    h = e.shape[0]
    lam = np.full(h, 1.0 / h)

    def div(l):
        p = l @ e
        if np.any(p <= 0.0):
            return math.inf
        return float(np.dot(qs, np.log2(qs / p)))

    cur = div(lam)
    step = 1.0
    for _ in range(iters):
        p = lam @ e
        grad = -(e @ (qs / p)) / math.log(2.0)
        step = min(step * 2.0, 1e6)
        while True:
            cand = project_simplex(lam - step * grad)
            val = div(cand)
            if val <= cur + 1e-18 or step < 1e-18:
                break
            step *= 0.5
        if abs(cur - val) <= tol * max(1.0, abs(cur)) and np.allclose(cand, lam, atol=1e-15):
            lam, cur = cand, val
            break
        lam, cur = cand, val
    return cur, lam


def chsh_angle_oracle(theta, coarse=17, refine_rounds=60):
    """Best CHSH expectation for cos(theta)|00> + sin(theta)|11> over planar settings.

    Correlations are computed from the closed form
    E(pa, pb) = cos(pa) cos(pb) + sin(2 theta) sin(pa) sin(pb); the four
    measurement angles are optimized by a coarse grid followed by cyclic
    golden-section refinement.
    """
    s2 = math.sin(2.0 * theta)

    def corr(pa, pb):
        return math.cos(pa) * math.cos(pb) + s2 * math.sin(pa) * math.sin(pb)

    def chsh(angles):
        a1, a2, b1, b2 = angles
        return corr(a1, b1) + corr(a1, b2) + corr(a2, b1) - corr(a2, b2)

    grid = np.linspace(-math.pi, math.pi, coarse)
    best, best_val = None, -math.inf
    for a1, a2, b1, b2 in itertools.product(grid, repeat=4):
        v = chsh((a1, a2, b1, b2))
        if v > best_val:
            best, best_val = [a1, a2, b1, b2], v
    width = grid[1] - grid[0]
    for _ in range(refine_rounds):
        for i in range(4):
            def slice_fn(x, i=i):
                pt = list(best)
                pt[i] = x
                return chsh(pt)

            x, v = golden_section_max(slice_fn, best[i] - width, best[i] + width)
            best[i], best_val = x, v
        width = max(width * 0.7, 1e-9)
    return best_val

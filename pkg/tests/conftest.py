"""Shared helpers: independent oracles and randomized generators.

The energy oracle re-implements the signal chain in plain Python so the
numpy implementation is checked against an independent route, not itself.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from labanmotion.laban import (
    Cell,
    Direction,
    LabanColumn,
    LabanScore,
    LabanSymbol,
    Level,
    VALID_LIMB_SYMBOLS,
)
from labanmotion.skeleton import JointName, SkeletonFrame, SkeletonSequence


# ---------------------------------------------------------------------------
# Brute-force energy oracle (pure Python, no numpy)
# ---------------------------------------------------------------------------

def oracle_smooth(xs: list[float], sigma: float, rate: float) -> list[float]:
    s = sigma * rate
    r = math.ceil(3.0 * s)
    weights = [math.exp(-(k * k) / (2.0 * s * s)) for k in range(-r, r + 1)]
    total = sum(weights)
    weights = [w / total for w in weights]
    n = len(xs)
    out = []
    for i in range(n):
        acc = 0.0
        for k in range(-r, r + 1):
            j = min(max(i + k, 0), n - 1)  # edge replication
            acc += weights[k + r] * xs[j]
        out.append(acc)
    return out


def _oracle_derivs(x: list[float], dt: float) -> tuple[list[float], list[float]]:
    n = len(x)
    v = [0.0] * n
    a = [0.0] * n
    for i in range(1, n - 1):
        v[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt)
        a[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / (dt * dt)
    v[0] = (x[1] - x[0]) / dt
    v[n - 1] = (x[n - 1] - x[n - 2]) / dt
    a[0] = (x[2] - 2.0 * x[1] + x[0]) / (dt * dt)
    a[n - 1] = (x[n - 1] - 2.0 * x[n - 2] + x[n - 3]) / (dt * dt)
    return v, a


def _oracle_minmax(xs: list[float]) -> list[float]:
    lo, hi = min(xs), max(xs)
    if hi == lo:
        return [0.0] * len(xs)
    return [(x - lo) / (hi - lo) for x in xs]


def oracle_energy(seq: SkeletonSequence, part: JointName, sigma: float) -> list[float]:
    """values = normalized |acceleration| - normalized |speed| per sample."""
    rate = seq.sample_rate
    dt = 1.0 / rate
    coords = [[float(f.positions[part][c]) for f in seq.frames] for c in range(3)]
    vs, accs = [], []
    for c in range(3):
        x = oracle_smooth(coords[c], sigma, rate)
        v, a = _oracle_derivs(x, dt)
        vs.append(v)
        accs.append(a)
    n = len(seq.frames)
    inv = 1.0 / math.sqrt(3.0)
    raw_ea = [inv * math.sqrt(accs[0][i] ** 2 + accs[1][i] ** 2 + accs[2][i] ** 2) for i in range(n)]
    raw_es = [inv * math.sqrt(vs[0][i] ** 2 + vs[1][i] ** 2 + vs[2][i] ** 2) for i in range(n)]
    ea = _oracle_minmax(raw_ea)
    es = _oracle_minmax(raw_es)
    return [ea[i] - es[i] for i in range(n)]


# ---------------------------------------------------------------------------
# Geometry helpers
# ---------------------------------------------------------------------------

def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random proper rotation matrix (quaternion method)."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotate_about(v: np.ndarray, axis: np.ndarray, angle_rad: float) -> np.ndarray:
    """Rodrigues rotation of v about a unit axis."""
    axis = axis / np.linalg.norm(axis)
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return v * c + np.cross(axis, v) * s + axis * (axis @ v) * (1.0 - c)


def transform_sequence(seq: SkeletonSequence, R: np.ndarray, t: np.ndarray) -> SkeletonSequence:
    frames = [
        SkeletonFrame(
            timestamp=f.timestamp,
            positions={j: R @ p + t for j, p in f.positions.items()},
        )
        for f in seq.frames
    ]
    return SkeletonSequence(frames=frames, sample_rate=seq.sample_rate)


# ---------------------------------------------------------------------------
# Random valid score generator (times on a centisecond grid)
# ---------------------------------------------------------------------------

_ARM_MODE = ("LeftArm", "RightArm", "Head")
_SPLIT_MODE = ("LeftUpperArm", "LeftForearm", "RightUpperArm", "RightForearm", "Head")


def random_score(rng: np.random.Generator) -> LabanScore:
    pool = _ARM_MODE if rng.random() < 0.5 else _SPLIT_MODE
    n_cols = int(rng.integers(1, len(pool) + 1))
    names = list(rng.choice(pool, size=n_cols, replace=False))
    columns = []
    end_cs_max = 0
    for name in sorted(names):
        cells = []
        t_cs = 0  # centiseconds
        for _ in range(int(rng.integers(1, 6))):
            gap = int(rng.integers(0, 3)) * 25
            dur = int(rng.integers(5, 200))
            start = t_cs + gap
            sym = VALID_LIMB_SYMBOLS[int(rng.integers(0, len(VALID_LIMB_SYMBOLS)))]
            # avoid adjacent identical symbols so canonical forms stay stable
            if cells and cells[-1].symbol == sym and gap == 0:
                sym = VALID_LIMB_SYMBOLS[
                    (VALID_LIMB_SYMBOLS.index(sym) + 1) % len(VALID_LIMB_SYMBOLS)
                ]
            cells.append(Cell(sym, start / 100.0, dur / 100.0))
            t_cs = start + dur
        end_cs_max = max(end_cs_max, t_cs)
        columns.append(LabanColumn(name=name, cells=tuple(cells)))
    total = (end_cs_max + int(rng.integers(0, 100))) / 100.0
    meta = ()
    if rng.random() < 0.5:
        meta = tuple(sorted({("source", "test"), ("trial", str(int(rng.integers(0, 1000))))}))
    return LabanScore(columns=tuple(columns), total_duration=total, meta=meta)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260808)

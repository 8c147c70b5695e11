#!/usr/bin/env python3
# SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
# SPDX-License-Identifier: Apache-2.0
"""Step-by-step replay of the realized-QoE pipeline, written from the
pipeline description rather than from the C++ sources.

For every frame from the trace start through the end of the epoch:
  1. feed the pose errors of predictions whose target frame has now been
     observed into six scalar Kalman filters (x, y, z, roll, pitch, yaw);
  2. anchor the history at the latest upload instant t0 + k/rate <= t and
     resample it (nearest frame, window max(H - (t - anchor), 0.5/rate));
  3. extrapolate with least-squares velocity and mean angular velocity over
     the lookahead t + W - anchor, then add the filter biases;
  4. score the IoU of visible cells against the true pose at t + W.
The epoch value is the mean over frames with timestamps in the epoch.

usage: replay_qoe.py TRACE.csv BANDWIDTH_HZ EPOCH [--expect VALUE]
"""

import argparse
import csv
import math
import sys

import numpy as np

FPS = 30.0
W = 0.1          # lookahead, s
H = 1.0          # history window, s
Q, R, P0 = 1e-4, 1e-2, 1.0
ALPHA, T_MAX, SNR = 1e6, 0.1, 15.0
CANDIDATES = [30, 15, 10, 6, 5, 3, 2, 1]
HFOV = VFOV = math.pi / 2
NEAR, FAR = 0.05, 100.0
BOUNDS = (np.array([-0.5, -0.5, 0.0]), np.array([0.5, 0.5, 2.0]))
DIMS = (4, 4, 2)
EPS = 1e-9


# ---------------------------------------------------------------- rotations
def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([aw * bw - ax * bx - ay * by - az * bz,
                     aw * bx + ax * bw + ay * bz - az * by,
                     aw * by - ax * bz + ay * bw + az * bx,
                     aw * bz + ax * by - ay * bx + az * bw])


def canonical(q):
    q = q / math.sqrt(float(q @ q))
    for c in q:
        if c != 0.0:
            return -q if c < 0.0 else q
    return q


def rot_matrix(q):
    w, x, y, z = q
    return np.array([[1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                     [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                     [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)]])


def euler_zyx(q):
    m = rot_matrix(q)
    pitch = math.asin(max(-1.0, min(1.0, -m[2, 0])))
    return np.array([math.atan2(m[2, 1], m[2, 2]), pitch, math.atan2(m[1, 0], m[0, 0])])


def quat_from_euler_zyx(e):
    def axis(i, a):
        v = np.zeros(4)
        v[0] = math.cos(a / 2)
        v[1 + i] = math.sin(a / 2)
        return v
    return canonical(quat_mul(quat_mul(axis(2, e[2]), axis(1, e[1])), axis(0, e[0])))


def rotvec(q):
    if q[0] < 0:
        q = -q
    s = math.sqrt(q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
    if s < 1e-12:
        return 2.0 * q[1:]
    return q[1:] * (2.0 * math.atan2(s, q[0]) / s)


def quat_exp(v):
    a = float(np.linalg.norm(v))
    if a < 1e-12:
        return canonical(np.array([1.0, *(0.5 * v)]))
    return np.array([math.cos(a / 2), *(v * math.sin(a / 2) / a)])


def wrap(a):
    return math.remainder(a, 2 * math.pi)


# ---------------------------------------------------------------- visibility
def cells():
    size = (BOUNDS[1] - BOUNDS[0]) / np.array(DIMS)
    out = []
    for i in range(DIMS[0]):
        for j in range(DIMS[1]):
            for k in range(DIMS[2]):
                lo = BOUNDS[0] + size * np.array([i, j, k])
                out.append(((i, j, k), lo, lo + size, lo + 0.5 * size))
    return out


CELLS = cells()


def in_frustum(pos, q, c):
    d = rot_matrix(q).T @ (c - pos)  # camera frame: +x forward, +y left, +z up
    return (NEAR <= d[0] <= FAR and abs(d[1]) <= d[0] * math.tan(HFOV / 2)
            and abs(d[2]) <= d[0] * math.tan(VFOV / 2))


def segment_blocked(a, b, lo, hi):
    # Liang-Barsky clipping of a + s (b - a), s in (0, 1), against the box
    s0, s1 = -math.inf, math.inf
    d = b - a
    for ax in range(3):
        if d[ax] == 0.0:
            if a[ax] < lo[ax] or a[ax] > hi[ax]:
                return False
            continue
        ta, tb = (lo[ax] - a[ax]) / d[ax], (hi[ax] - a[ax]) / d[ax]
        s0, s1 = max(s0, min(ta, tb)), min(s1, max(ta, tb))
    return s0 <= s1 and s1 > 0.0 and s0 < 1.0


def visible(pos, q):
    dist = {idx: float(np.linalg.norm(c - pos)) for idx, _, _, c in CELLS}
    out = set()
    for idx, _, _, c in CELLS:
        if not in_frustum(pos, q, c):
            continue
        if any(dist[o] < dist[idx] and segment_blocked(pos, c, lo, hi) for o, lo, hi, _ in CELLS):
            continue
        out.add(idx)
    return out


def iou(a, b):
    u = len(a | b)
    return 1.0 if u == 0 else len(a & b) / u


# ---------------------------------------------------------------- link
def sampling_rate(b):
    if b <= 0:
        return None
    s = ALPHA / (b * math.log2(1 + SNR))
    ok = [c for c in CANDIDATES if c * s < 1 and s + c * s * s / (2 * (1 - c * s)) <= T_MAX]
    return max(ok) if ok else None


# ---------------------------------------------------------------- pipeline
def load(path):
    rows = list(csv.DictReader(open(path)))
    t = np.array([float(r["t"]) for r in rows])
    pos = np.array([[float(r["px"]), float(r["py"]), float(r["pz"])] for r in rows])
    quat = np.array([canonical(np.array([float(r[k]) for k in ("qw", "qx", "qy", "qz")])) for r in rows])
    return t, pos, quat


def nearest(t, x):
    k = round((x - t[0]) * FPS)
    return int(min(max(k, 0), len(t) - 1))


def history(t, anchor, rate, window):
    n = math.ceil(window * rate - EPS)
    idx = []
    for k in range(n - 1, -1, -1):
        x = anchor - k / rate
        if x < t[0] - EPS:
            continue
        i = nearest(t, x)
        if not idx or idx[-1] != i:
            idx.append(i)
    return idx


def predict(t, pos, quat, idx, lookahead, bias):
    last = idx[-1]
    p, q = pos[last].copy(), quat[last].copy()
    if len(idx) > 1:
        ts = t[idx]
        A = np.vstack([ts - ts.mean(), np.ones(len(ts))]).T
        v = np.linalg.lstsq(A, pos[idx], rcond=None)[0][0]
        omega = np.mean([rotvec(quat_mul(quat[b], quat[a] * np.array([1, -1, -1, -1]))) / (t[b] - t[a])
                         for a, b in zip(idx, idx[1:])], axis=0)
        p = p + v * lookahead
        if np.any(omega != 0):
            q = canonical(quat_mul(quat_exp(omega * lookahead), q))
    p = p + bias[:3]
    if np.any(bias[3:] != 0):
        q = quat_from_euler_zyx(euler_zyx(q) + bias[3:])
    return p, q


def realized(path, bandwidth, epoch):
    t, pos, quat = load(path)
    rate = sampling_rate(bandwidth)
    if rate is None:
        return 0.0
    first = math.ceil(epoch * FPS - EPS)
    last = math.ceil((epoch + 1) * FPS - EPS) - 1
    bias, var = np.zeros(6), np.full(6, P0)
    pending, values = [], []
    for k in range(last + 1):
        for target, pp, pq in [x for x in pending if x[0] <= k]:
            err = np.concatenate([pos[target] - pp,
                                  [wrap(a - b) for a, b in zip(euler_zyx(quat[target]), euler_zyx(pq))]])
            prior = var + Q
            gain = prior / (prior + R)
            bias, var = bias + gain * err, (1 - gain) * prior
        pending = [x for x in pending if x[0] > k]
        anchor = t[0] + math.floor((t[k] - t[0]) * rate + EPS) / rate
        idx = history(t, anchor, rate, max(H - (t[k] - anchor), 0.5 / rate))
        pp, pq = predict(t, pos, quat, idx, t[k] + W - anchor, bias)
        target = nearest(t, t[k] + W)
        values.append(iou(visible(pos[target], quat[target]), visible(pp, pq)))
        pending.append((target, pp, pq))
    return float(np.mean(values[first:last + 1]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("trace")
    ap.add_argument("bandwidth", type=float)
    ap.add_argument("epoch", type=int)
    ap.add_argument("--expect", type=float)
    a = ap.parse_args()
    v = realized(a.trace, a.bandwidth, a.epoch)
    print(f"{v:.17g}")
    if a.expect is not None and abs(v - a.expect) > 1e-12:
        print(f"mismatch: expected {a.expect:.17g}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

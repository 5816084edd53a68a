"""Quadtree repulsion kernels, JIT-compiled for large graphs.

The tree is stored in flat arrays (children allocated after their parent, so
a reverse index sweep aggregates mass bottom-up). Leaves hold a linked chain
of bodies; chains only grow past one body at the subdivision depth cap, which
keeps near-coincident points from recursing forever. Traversal treats a
region of extent s at distance d from its center of mass as a point mass
when s/d < theta, except for regions that geometrically contain the queried
body (those always open, so a body never feels its own mass).

All arithmetic is float64 and sequentially ordered, so results are
bit-reproducible for identical inputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MAX_DEPTH = 48


@njit(cache=True)
def _bh_kernel(px, py, mass, theta, coefficient, cap):
    n = px.shape[0]
    fx = np.zeros(n, np.float64)
    fy = np.zeros(n, np.float64)
    if n < 2:
        return fx, fy, 0

    min_x = px[0]
    max_x = px[0]
    min_y = py[0]
    max_y = py[0]
    for i in range(1, n):
        if px[i] < min_x:
            min_x = px[i]
        if px[i] > max_x:
            max_x = px[i]
        if py[i] < min_y:
            min_y = py[i]
        if py[i] > max_y:
            max_y = py[i]
    root_cx = 0.5 * (min_x + max_x)
    root_cy = 0.5 * (min_y + max_y)
    span_x = max_x - min_x
    span_y = max_y - min_y
    root_half = 0.5 * (span_x if span_x > span_y else span_y)

    child = np.full((cap, 4), -1, np.int64)
    first_body = np.full(cap, -1, np.int64)
    next_body = np.full(n, -1, np.int64)
    count = np.zeros(cap, np.int64)
    internal = np.zeros(cap, np.bool_)
    node_cx = np.zeros(cap, np.float64)
    node_cy = np.zeros(cap, np.float64)
    node_half = np.zeros(cap, np.float64)
    com_x = np.zeros(cap, np.float64)
    com_y = np.zeros(cap, np.float64)
    node_mass = np.zeros(cap, np.float64)

    node_cx[0] = root_cx
    node_cy[0] = root_cy
    node_half[0] = root_half
    n_nodes = 1

    for b in range(n):
        node = 0
        depth = 0
        while True:
            if count[node] == 0:
                first_body[node] = b
                count[node] = 1
                break
            if not internal[node]:
                if depth >= _MAX_DEPTH:
                    next_body[b] = first_body[node]
                    first_body[node] = b
                    count[node] += 1
                    break
                resident = first_body[node]
                internal[node] = True
                first_body[node] = -1
                quadrant = 0
                if px[resident] > node_cx[node]:
                    quadrant += 1
                if py[resident] > node_cy[node]:
                    quadrant += 2
                if n_nodes >= cap:
                    return fx, fy, -1
                slot = n_nodes
                n_nodes += 1
                half = 0.5 * node_half[node]
                node_cx[slot] = node_cx[node] + (half if quadrant & 1 else -half)
                node_cy[slot] = node_cy[node] + (half if quadrant & 2 else -half)
                node_half[slot] = half
                child[node, quadrant] = slot
                first_body[slot] = resident
                count[slot] = 1
            count[node] += 1
            quadrant = 0
            if px[b] > node_cx[node]:
                quadrant += 1
            if py[b] > node_cy[node]:
                quadrant += 2
            if child[node, quadrant] == -1:
                if n_nodes >= cap:
                    return fx, fy, -1
                slot = n_nodes
                n_nodes += 1
                half = 0.5 * node_half[node]
                node_cx[slot] = node_cx[node] + (half if quadrant & 1 else -half)
                node_cy[slot] = node_cy[node] + (half if quadrant & 2 else -half)
                node_half[slot] = half
                child[node, quadrant] = slot
            node = child[node, quadrant]
            depth += 1

    # Children sit after parents, so a reverse sweep sees children first.
    for node in range(n_nodes - 1, -1, -1):
        if count[node] == 0:
            continue
        total = 0.0
        weighted_x = 0.0
        weighted_y = 0.0
        if internal[node]:
            for q in range(4):
                c = child[node, q]
                if c != -1 and count[c] > 0:
                    total += node_mass[c]
                    weighted_x += node_mass[c] * com_x[c]
                    weighted_y += node_mass[c] * com_y[c]
        else:
            b = first_body[node]
            while b != -1:
                total += mass[b]
                weighted_x += mass[b] * px[b]
                weighted_y += mass[b] * py[b]
                b = next_body[b]
        node_mass[node] = total
        com_x[node] = weighted_x / total
        com_y[node] = weighted_y / total

    theta_sq = theta * theta
    stack = np.empty(4 * _MAX_DEPTH + 64, np.int64)
    for i in range(n):
        xi = px[i]
        yi = py[i]
        mi = mass[i]
        acc_x = 0.0
        acc_y = 0.0
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top]
            if count[node] == 0:
                continue
            if not internal[node]:
                b = first_body[node]
                while b != -1:
                    if b != i:
                        dx = xi - px[b]
                        dy = yi - py[b]
                        dist_sq = dx * dx + dy * dy
                        if dist_sq > 0.0:
                            factor = coefficient * mi * mass[b] / dist_sq
                            acc_x += factor * dx
                            acc_y += factor * dy
                    b = next_body[b]
            else:
                dx = xi - com_x[node]
                dy = yi - com_y[node]
                dist_sq = dx * dx + dy * dy
                extent = 2.0 * node_half[node]
                contains_i = (
                    abs(xi - node_cx[node]) <= node_half[node]
                    and abs(yi - node_cy[node]) <= node_half[node]
                )
                if not contains_i and dist_sq > 0.0 and extent * extent < theta_sq * dist_sq:
                    factor = coefficient * mi * node_mass[node] / dist_sq
                    acc_x += factor * dx
                    acc_y += factor * dy
                else:
                    for q in range(4):
                        c = child[node, q]
                        if c != -1:
                            stack[top] = c
                            top += 1
        fx[i] = acc_x
        fy[i] = acc_y

    return fx, fy, 0


def repulsion_forces(
    px: np.ndarray, py: np.ndarray, mass: np.ndarray, theta: float, coefficient: float
) -> tuple[np.ndarray, np.ndarray]:
    """Approximate pairwise repulsion k*m_u*m_v/d for every body.

    Grows the tree capacity and retries on the rare overflow (deeply nested
    near-coincident clusters).
    """
    n = px.shape[0]
    cap = max(64, 4 * n)
    while True:
        fx, fy, status = _bh_kernel(px, py, mass, theta, coefficient, cap)
        if status == 0:
            return fx, fy
        cap *= 4

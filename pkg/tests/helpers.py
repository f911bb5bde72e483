"""Shared fixtures for the RUB certificate suites.

Random matrices at desk scale (m <= 12) essentially never reach the
max/min ratio below sqrt(2) that the lambda = 2 recovery certificate
needs, so the suites mix in deterministic well-spread row sets where the
certificate genuinely fires: icosahedron directions in R^3 and the D4
half root system in R^4 (one row per antipodal pair).
"""

import math

import numpy as np

from sparselab.ensembles import KINDS, entry_distribution, matrix_from_entries, sample_matrix
from sparselab.rng import substream


def icosahedron_matrix(seed: int | None = None):
    """12 unit rows along icosahedron vertices, optionally rotated."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    rows = []
    for a in (1.0, -1.0):
        for b in (phi, -phi):
            rows += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
    rows = np.array(rows) / math.sqrt(1.0 + phi * phi)
    if seed is not None:
        gauss = substream(seed, 77).standard_normal((3, 3))
        rotation, _ = np.linalg.qr(gauss)
        rows = rows @ rotation
    return matrix_from_entries(rows / 12.0, seed=0 if seed is None else seed)


def d4_matrix():
    """12 unit rows: one per antipodal pair of the D4 root system in R^4."""
    rows = []
    for i in range(4):
        for j in range(i + 1, 4):
            for sj in (1.0, -1.0):
                v = np.zeros(4)
                v[i], v[j] = 1.0, sj
                rows.append(v / math.sqrt(2.0))
    return matrix_from_entries(np.array(rows) / 12.0)


def certificate_suite(count: int = 50):
    """Seeded tiny ensemble matrices plus the deterministic fixtures."""
    shapes = [(12, 3), (12, 4), (10, 4), (12, 6), (9, 8),
              (12, 10), (8, 10), (12, 12), (11, 13), (12, 14)]
    matrices = []
    for i in range(count):
        m, n = shapes[i % len(shapes)]
        dist = entry_distribution(KINDS[i % len(KINDS)])
        matrices.append(sample_matrix(m, n, dist, 9000 + i))
    matrices += [icosahedron_matrix(), d4_matrix(),
                 icosahedron_matrix(seed=21), icosahedron_matrix(seed=22)]
    return matrices

"""File formats: schema-versioned CSV and a little-endian binary matrix.

Tabular CSV layout: line 1 is the schema string (``sparselab.<kind>.v1``),
line 2 the column names, then data rows.  Floats are written with
``repr``, the shortest decimal that round-trips, so identical runs give
byte-identical files.  Vector-valued fields pack space-separated numbers
into one quoted cell.

Binary matrix layout (little endian): magic ``SLABMAT1`` (8 bytes),
uint32 m, uint32 n, uint8 distribution tag, 3 pad bytes, uint64 seed,
then m*n float64 entries row-major.
"""

from __future__ import annotations

import csv
import io
import os
import struct
import tempfile

import numpy as np

from .ensembles import (MeasurementMatrix, SparseSignal, entry_distribution,
                        matrix_from_entries)
from .errors import InputError
from .nets import EpsilonNet

MAGIC = b"SLABMAT1"
_HEADER = struct.Struct("<8sIIB3xQ")

DIST_TAGS = {"laplace": 0, "symmetrized_exponential": 1, "gaussian": 2,
             "rademacher": 3, "custom_mixture": 4, None: 255}
TAG_DISTS = {v: k for k, v in DIST_TAGS.items()}


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def pack_vector(values) -> str:
    return " ".join(fmt(v) for v in np.asarray(values).ravel())


def unpack_vector(text: str, dtype=float) -> np.ndarray:
    parts = text.split()
    return np.array([dtype(p) for p in parts], dtype=dtype)


def write_atomic(path: str, data) -> None:
    """Write via a temp file in the target directory plus rename, so an
    interrupted run never leaves a partial file at the destination."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, mode) as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Table:
    def __init__(self, schema: str, columns):
        self.schema = schema
        self.columns = list(columns)
        self.buffer = io.StringIO()
        self.buffer.write(schema + "\r\n")
        self.writer = csv.writer(self.buffer)
        self.writer.writerow(self.columns)

    def row(self, *cells):
        self.writer.writerow([fmt(c) for c in cells])

    def text(self) -> str:
        return self.buffer.getvalue()


def _read_table(text: str, schema: str):
    lines = text.splitlines()
    if not lines or lines[0] != schema:
        raise InputError(f"expected schema {schema!r}, got {lines[0]!r}" if lines
                         else "empty file")
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    header, data = rows[0], rows[1:]
    return header, data


# -- matrices ---------------------------------------------------------------

MATRIX_SCHEMA = "sparselab.matrix.v1"


def matrix_to_csv(matrix: MeasurementMatrix) -> str:
    table = _Table(MATRIX_SCHEMA, ["m", "n", "dist", "seed"])
    kind = matrix.dist.kind if matrix.dist is not None else ""
    table.row(matrix.m, matrix.n, kind, matrix.seed)
    for row in matrix.entries:
        table.writer.writerow([fmt(v) for v in row])
    return table.text()


def matrix_from_csv(text: str) -> MeasurementMatrix:
    header, data = _read_table(text, MATRIX_SCHEMA)
    if header != ["m", "n", "dist", "seed"]:
        raise InputError("bad matrix CSV header")
    m, n, kind, seed = data[0]
    entries = np.array([[float(v) for v in row] for row in data[1:]])
    dist = entry_distribution(kind) if kind else None
    result = matrix_from_entries(entries, dist=dist, seed=int(seed))
    if result.m != int(m) or result.n != int(n):
        raise InputError("matrix CSV dimensions disagree with its entries")
    return result


def matrix_to_bytes(matrix: MeasurementMatrix) -> bytes:
    kind = matrix.dist.kind if matrix.dist is not None else None
    header = _HEADER.pack(MAGIC, matrix.m, matrix.n, DIST_TAGS[kind], matrix.seed)
    return header + np.ascontiguousarray(matrix.entries, dtype="<f8").tobytes()


def matrix_from_bytes(blob: bytes) -> MeasurementMatrix:
    magic, m, n, tag, seed = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise InputError("bad magic; not a sparselab binary matrix")
    entries = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size,
                            count=m * n).reshape(m, n).astype(np.float64)
    kind = TAG_DISTS[tag]
    dist = entry_distribution(kind) if kind is not None else None
    return matrix_from_entries(entries, dist=dist, seed=seed)


def load_matrix(path: str) -> MeasurementMatrix:
    if path.endswith(".bin"):
        with open(path, "rb") as handle:
            return matrix_from_bytes(handle.read())
    with open(path, "r", newline="") as handle:
        return matrix_from_csv(handle.read())


# -- signals ----------------------------------------------------------------

SIGNAL_SCHEMA = "sparselab.signal.v1"


def signal_to_csv(signal: SparseSignal) -> str:
    table = _Table(SIGNAL_SCHEMA, ["n", "support", "values"])
    table.row(signal.n, pack_vector(signal.support), pack_vector(signal.values))
    return table.text()


def signal_from_csv(text: str) -> SparseSignal:
    header, data = _read_table(text, SIGNAL_SCHEMA)
    if header != ["n", "support", "values"]:
        raise InputError("bad signal CSV header")
    n, support, values = data[0]
    return SparseSignal(n=int(n), support=unpack_vector(support, int),
                        values=unpack_vector(values, float))


def load_signal(path: str) -> SparseSignal:
    with open(path, "r", newline="") as handle:
        return signal_from_csv(handle.read())


# -- nets -------------------------------------------------------------------

NET_SCHEMA = "sparselab.net.v1"


def net_to_csv(net: EpsilonNet) -> str:
    table = _Table(NET_SCHEMA, ["n", "s", "epsilon", "support", "values"])
    for point in net.points:
        table.row(net.n, net.s, net.epsilon,
                  pack_vector(point.support), pack_vector(point.values))
    return table.text()


def net_from_csv(text: str) -> EpsilonNet:
    header, data = _read_table(text, NET_SCHEMA)
    if header != ["n", "s", "epsilon", "support", "values"]:
        raise InputError("bad net CSV header")
    points = []
    sizes: dict = {}
    n = s = None
    epsilon = None
    for row in data:
        n, s, epsilon = int(row[0]), int(row[1]), float(row[2])
        support = unpack_vector(row[3], int)
        points.append(SparseSignal(n=n, support=support,
                                   values=unpack_vector(row[4], float)))
        key = tuple(support.tolist())
        sizes[key] = sizes.get(key, 0) + 1
    if n is None:
        raise InputError("net CSV has no points")
    return EpsilonNet(n=n, s=s, epsilon=epsilon, points=points,
                      per_support_sizes=sizes)


# -- analysis results -------------------------------------------------------

RUB_SCHEMA = "sparselab.rub.v1"
RECOVERY_SCHEMA = "sparselab.recovery.v1"
NSP_SCHEMA = "sparselab.nsp.v1"
CONCENTRATION_SCHEMA = "sparselab.concentration.v1"
PHASE_SCHEMA = "sparselab.phase_diagram.v1"
FIT_SCHEMA = "sparselab.fit.v1"


def rub_to_csv(estimate) -> str:
    table = _Table(RUB_SCHEMA, ["k", "lower", "upper", "method",
                                "lower_is_certified", "upper_is_certified",
                                "samples_or_supports", "seed"])
    table.row(estimate.sparsity_level, estimate.lower, estimate.upper,
              estimate.method, estimate.lower_is_certified,
              estimate.upper_is_certified, estimate.samples_or_supports,
              estimate.seed)
    return table.text()


def recovery_to_csv(result, exact_recovery=None, rec_tol=None) -> str:
    table = _Table(RECOVERY_SCHEMA,
                   ["status", "objective", "feasibility_residual",
                    "iterations", "exact_recovery", "rec_tol"])
    table.row(result.status, result.objective, result.feasibility_residual,
              result.iterations,
              "" if exact_recovery is None else exact_recovery,
              "" if rec_tol is None else rec_tol)
    return table.text()


def nsp_to_csv(result) -> str:
    table = _Table(NSP_SCHEMA, ["status", "kernel_dim", "margin",
                                "samples", "witness"])
    witness = "" if result.witness is None else pack_vector(result.witness)
    table.row(result.status, result.kernel_dim, result.margin,
              result.samples, witness)
    return table.text()


def concentration_to_csv(report) -> str:
    exc_cols = [f"exc_{fmt(d)}" for d in report.delta_values]
    table = _Table(CONCENTRATION_SCHEMA,
                   ["dist", "seed", "trials", "lower_ref", "m", "mean",
                    "std", "min", "max", *exc_cols])
    for i, m in enumerate(report.m_values):
        table.row(report.dist.kind, report.seed, report.trials,
                  report.lower_ref, m, report.means[i], report.stds[i],
                  report.mins[i], report.maxs[i],
                  *[report.exceedance[i, j] for j in range(len(report.delta_values))])
    return table.text()


def phase_diagram_to_csv(diagram) -> str:
    table = _Table(PHASE_SCHEMA, ["n", "dist", "value_law", "trials_per_cell",
                                  "master_seed", "s", "m", "success"])
    for i, s in enumerate(diagram.s_grid):
        for j, m in enumerate(diagram.m_grid):
            table.row(diagram.n, diagram.dist.kind, diagram.value_law,
                      diagram.trials_per_cell, diagram.master_seed, s, m,
                      diagram.success[i, j])
    return table.text()


def phase_diagram_from_csv(text: str):
    from .experiments import PhaseDiagram

    header, data = _read_table(text, PHASE_SCHEMA)
    expected = ["n", "dist", "value_law", "trials_per_cell", "master_seed",
                "s", "m", "success"]
    if header != expected:
        raise InputError("bad phase diagram CSV header")
    if not data:
        raise InputError("phase diagram CSV has no cells")
    n = int(data[0][0])
    dist = entry_distribution(data[0][1])
    value_law = data[0][2]
    trials = int(data[0][3])
    seed = int(data[0][4])
    s_grid = sorted({int(r[5]) for r in data})
    m_grid = sorted({int(r[6]) for r in data})
    success = np.zeros((len(s_grid), len(m_grid)))
    s_index = {s: i for i, s in enumerate(s_grid)}
    m_index = {m: j for j, m in enumerate(m_grid)}
    for row in data:
        success[s_index[int(row[5])], m_index[int(row[6])]] = float(row[7])
    return PhaseDiagram(n=n, s_grid=tuple(s_grid), m_grid=tuple(m_grid),
                        success=success, trials_per_cell=trials, dist=dist,
                        value_law=value_law, master_seed=seed)


def load_phase_diagram(path: str):
    with open(path, "r", newline="") as handle:
        return phase_diagram_from_csv(handle.read())


def fit_to_csv(fit, exponent=None) -> str:
    table = _Table(FIT_SCHEMA, ["a", "b", "contour_level", "residual",
                                "s_points_used", "m_star", "scaling_exponent"])
    table.row(fit.a, fit.b, fit.contour_level, fit.residual,
              pack_vector(fit.s_points_used), pack_vector(fit.m_star),
              "" if exponent is None else exponent)
    return table.text()

"""Command line front end.

Subcommands: gen-matrix, recover, rub, nsp, net, concentration,
phase-diagram, fit.  Parameters come from ``--key value`` flags and/or a
flat ``key = value`` config file (``#`` comments); flags override the
file.  Outputs are written atomically (temp file + rename) and every run
appends a digest-carrying record to ``runlog.jsonl`` in the output
directory.

Environment: ``SPARSELAB_OUT`` sets the base directory for relative
output paths; ``SPARSELAB_THREADS`` sets worker count for phase-diagram
cells.

Exit codes: 0 ok, 2 config error, 3 size/cap error, 4 numerical failure,
5 assertion failure.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .ensembles import (KINDS, VALUE_LAWS, entry_distribution, measure,
                        sample_matrix)
from .errors import (ConfigError, NumericalError, ParameterError,
                     SizeCapError, SparselabError)
from .experiments import (concentration_experiment, contour_crossings,
                          fit_threshold, phase_diagram, scaling_exponent)
from .nets import build_sparse_net, densify_net, verify_covering
from .rng import derive_seed
from .rub import nsp_oracle, rub_constants
from .solver import check_exact_recovery, l1_minimize
from . import storage, svg

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIZE = 3
EXIT_NUMERICAL = 4
EXIT_ASSERTION = 5


# -- parameter schema ---------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise ValueError("must be positive")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise ValueError("must be >= 0")
    return v


def _positive_float(text):
    v = float(text)
    if v <= 0:
        raise ValueError("must be positive")
    return v


def _epsilon(text):
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise ValueError("must lie in (0, 1]")
    return v


def _contour(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise ValueError("must lie in (0, 1)")
    return v


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text
    return parse


def _int_list(text):
    """Comma list ('2,4,8') or inclusive range ('10:10:200' = start:step:stop)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range syntax is start:step:stop")
        start, step, stop = (int(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError("need step > 0 and stop >= start")
        return list(range(start, stop + 1, step))
    values = [int(p) for p in text.split(",") if p != ""]
    if not values:
        raise ValueError("empty list")
    return values


def _float_list(text):
    values = [float(p) for p in text.split(",") if p != ""]
    if not values:
        raise ValueError("empty list")
    return values


def _path(text):
    if not text:
        raise ValueError("empty path")
    return text


@dataclass(frozen=True)
class Param:
    name: str
    parse: callable
    default: object = None
    required: bool = False
    help: str = ""


@dataclass(frozen=True)
class RunConfig:
    command: str
    parameters: dict
    schema_version: int = SCHEMA_VERSION


@dataclass
class RunRecord:
    command: str
    parameters: dict
    started: str
    finished: str = ""
    outputs: dict = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps({
            "command": self.command,
            "parameters": {k: repr(v) for k, v in self.parameters.items()},
            "started": self.started, "finished": self.finished,
            "outputs": self.outputs, "version": self.version,
        }, sort_keys=True)


def _validate_rub(params):
    if params.get("matrix") is None and (params.get("m") is None
                                         or params.get("n") is None):
        raise ConfigError("rub needs either --matrix or both --m and --n")
    if params["method"] == "exact_tiny" and params.get("m") is not None \
            and params["m"] > 16:
        raise SizeCapError("exact RUB is capped at m <= 16")


def _validate_nsp(params):
    if params.get("matrix") is None and (params.get("m") is None
                                         or params.get("n") is None):
        raise ConfigError("nsp needs either --matrix or both --m and --n")


COMMANDS: dict[str, tuple[list[Param], callable]] = {}


def _command(name, params, validate=None):
    def register(runner):
        COMMANDS[name] = (params, runner, validate)
        return runner
    return register


def parse_config(argv) -> RunConfig:
    """Build a validated RunConfig from argv (flags override config file)."""
    if not argv:
        raise ConfigError("no command given; one of: " + ", ".join(COMMANDS))
    command, *rest = argv
    if command in ("-h", "--help"):
        raise _HelpRequested(_usage())
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; one of: "
                          + ", ".join(COMMANDS))
    schema, _, validate = COMMANDS[command]
    by_name = {p.name: p for p in schema}

    flags: dict[str, str] = {}
    config_path = None
    i = 0
    while i < len(rest):
        token = rest[i]
        if not token.startswith("--"):
            raise ConfigError(f"expected a --flag, got {token!r}")
        key, eq, inline = token[2:].partition("=")
        key = key.replace("-", "_")
        if eq:
            value = inline
        else:
            i += 1
            if i >= len(rest):
                raise ConfigError(f"flag --{key} is missing a value")
            value = rest[i]
        if key == "config":
            config_path = value
        elif key in by_name:
            flags[key] = value
        else:
            raise ConfigError(f"unknown option --{key} for {command}")
        i += 1

    raw: dict[str, str] = {}
    if config_path is not None:
        raw.update(_read_config_file(config_path, command, by_name))
    raw.update(flags)  # flags win

    params: dict = {}
    for param in schema:
        if param.name in raw:
            try:
                params[param.name] = param.parse(raw[param.name])
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for --{param.name}: {raw[param.name]!r} ({exc})")
        elif param.required:
            raise ConfigError(f"{command} requires --{param.name}")
        else:
            params[param.name] = param.default
    if validate is not None:
        validate(params)
    return RunConfig(command=command, parameters=params)


def _read_config_file(path, command, by_name):
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        else:
            key, _, value = line.partition(" ")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if key not in by_name:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} for {command}")
        values[key] = value
    return values


class _HelpRequested(Exception):
    pass


def _usage() -> str:
    lines = [f"sparselab {__version__} - sparse recovery laboratory", "",
             "usage: sparselab <command> [--config FILE] [--key value ...]", ""]
    for name, (schema, _, _) in COMMANDS.items():
        lines.append(f"  {name}")
        for p in schema:
            req = " (required)" if p.required else (
                f" [default {p.default}]" if p.default is not None else "")
            lines.append(f"      --{p.name.replace('_', '-'):<18} {p.help}{req}")
    return "\n".join(lines)


# -- command runners ----------------------------------------------------------
# Each runner returns {relative_output_path: str_or_bytes}; run() writes them.


def _load_or_sample_matrix(params):
    if params.get("matrix") is not None:
        return storage.load_matrix(params["matrix"])
    dist = entry_distribution(params["dist"])
    return sample_matrix(params["m"], params["n"], dist, params["seed"])


@_command("gen-matrix", [
    Param("m", _positive_int, required=True, help="row count"),
    Param("n", _positive_int, required=True, help="column count"),
    Param("dist", _choice(*KINDS), "laplace", help="entry law"),
    Param("seed", _nonneg_int, 0, help="64-bit seed"),
    Param("format", _choice("csv", "bin"), None, help="output format (default by extension)"),
    Param("out", _path, required=True, help="output path"),
])
def _run_gen_matrix(params):
    matrix = sample_matrix(params["m"], params["n"],
                           entry_distribution(params["dist"]), params["seed"])
    form = params["format"] or ("bin" if params["out"].endswith(".bin") else "csv")
    data = storage.matrix_to_bytes(matrix) if form == "bin" \
        else storage.matrix_to_csv(matrix)
    return {params["out"]: data}


@_command("recover", [
    Param("matrix", _path, required=True, help="matrix file (.csv or .bin)"),
    Param("signal", _path, required=True, help="signal CSV"),
    Param("feas_tol", _positive_float, None, help="feasibility tolerance"),
    Param("opt_tol", _positive_float, 1e-8, help="optimality tolerance"),
    Param("rec_tol", _positive_float, 1e-6, help="exact-recovery tolerance"),
    Param("solution_out", _path, None, help="optional solution CSV"),
    Param("out", _path, required=True, help="recovery result CSV"),
])
def _run_recover(params):
    matrix = storage.load_matrix(params["matrix"])
    signal = storage.load_signal(params["signal"])
    y = measure(matrix, signal)
    result = l1_minimize(matrix, y, feas_tol=params["feas_tol"],
                         opt_tol=params["opt_tol"])
    success = check_exact_recovery(result, signal, params["rec_tol"])
    outputs = {params["out"]: storage.recovery_to_csv(result, success,
                                                      params["rec_tol"])}
    if params["solution_out"]:
        support = np.nonzero(result.solution)[0]
        from .ensembles import SparseSignal
        sol = SparseSignal(n=matrix.n, support=support,
                           values=result.solution[support])
        outputs[params["solution_out"]] = storage.signal_to_csv(sol)
    return outputs


@_command("rub", [
    Param("matrix", _path, None, help="matrix file (else sampled from m,n,dist,seed)"),
    Param("m", _positive_int, None, help="rows (when sampling)"),
    Param("n", _positive_int, None, help="columns (when sampling)"),
    Param("dist", _choice(*KINDS), "laplace", help="entry law (when sampling)"),
    Param("k", _positive_int, required=True, help="sparsity level"),
    Param("method", _choice("exact_tiny", "monte_carlo"), "exact_tiny", help="estimator"),
    Param("budget", _positive_int, 200_000, help="supports / samples budget"),
    Param("seed", _nonneg_int, 0, help="seed"),
    Param("out", _path, required=True, help="RUB estimate CSV"),
], validate=_validate_rub)
def _run_rub(params):
    matrix = _load_or_sample_matrix(params)
    estimate = rub_constants(matrix, params["k"], params["method"],
                             params["budget"], params["seed"])
    return {params["out"]: storage.rub_to_csv(estimate)}


@_command("nsp", [
    Param("matrix", _path, None, help="matrix file (else sampled from m,n,dist,seed)"),
    Param("m", _positive_int, None, help="rows (when sampling)"),
    Param("n", _positive_int, None, help="columns (when sampling)"),
    Param("dist", _choice(*KINDS), "laplace", help="entry law (when sampling)"),
    Param("s", _positive_int, required=True, help="sparsity level"),
    Param("sample_budget", _positive_int, 20_000, help="kernel samples for dim >= 3"),
    Param("seed", _nonneg_int, 0, help="seed"),
    Param("out", _path, required=True, help="NSP result CSV"),
], validate=_validate_nsp)
def _run_nsp(params):
    matrix = _load_or_sample_matrix(params)
    result = nsp_oracle(matrix, params["s"], params["sample_budget"],
                        params["seed"])
    return {params["out"]: storage.nsp_to_csv(result)}


@_command("net", [
    Param("n", _positive_int, required=True, help="ambient dimension"),
    Param("s", _positive_int, required=True, help="sparsity"),
    Param("epsilon", _epsilon, required=True, help="net radius, in (0, 1]"),
    Param("seed", _nonneg_int, 0, help="seed"),
    Param("probes", _nonneg_int, 10_000, help="covering probes (0 skips the check)"),
    Param("out", _path, required=True, help="net CSV"),
])
def _run_net(params):
    net = build_sparse_net(params["n"], params["s"], params["epsilon"],
                           params["seed"])
    if params["probes"]:
        worst = verify_covering(net, params["probes"], params["seed"])
        if worst > net.epsilon:
            # documented densification pass, then the check must pass
            net = densify_net(net, params["probes"], params["seed"])
            recheck = verify_covering(net, params["probes"],
                                      derive_seed(params["seed"], 1))
            assert recheck <= net.epsilon, "covering still fails after densification"
    return {params["out"]: storage.net_to_csv(net)}


@_command("concentration", [
    Param("n", _positive_int, 2, help="probe dimension"),
    Param("probe_index", _nonneg_int, 0, help="probe is the unit basis vector e_i"),
    Param("dist", _choice(*KINDS), "laplace", help="entry law"),
    Param("m_values", _int_list, required=True, help="row counts, e.g. 50,200,800"),
    Param("deltas", _float_list, [0.1, 0.25, 0.5], help="exceedance half-widths"),
    Param("trials", _positive_int, 10_000, help="matrix draws per m"),
    Param("seed", _nonneg_int, 0, help="seed"),
    Param("out", _path, required=True, help="concentration report CSV"),
])
def _run_concentration(params):
    if params["probe_index"] >= params["n"]:
        raise ConfigError("probe index must be < n")
    probe = np.zeros(params["n"])
    probe[params["probe_index"]] = 1.0
    report = concentration_experiment(probe, entry_distribution(params["dist"]),
                                      params["m_values"], params["deltas"],
                                      params["trials"], params["seed"])
    return {params["out"]: storage.concentration_to_csv(report)}


@_command("phase-diagram", [
    Param("n", _positive_int, required=True, help="ambient dimension"),
    Param("s", _int_list, required=True, help="sparsity grid, e.g. 2,4,8,16"),
    Param("m", _int_list, required=True, help="row grid, e.g. 10:10:200"),
    Param("dist", _choice(*KINDS), "laplace", help="entry law"),
    Param("value_law", _choice(*VALUE_LAWS), "gaussian", help="signal value law"),
    Param("trials", _positive_int, 100, help="trials per cell"),
    Param("seed", _nonneg_int, 0, help="master seed"),
    Param("svg", _path, None, help="optional heatmap SVG path"),
    Param("out", _path, required=True, help="phase diagram CSV"),
])
def _run_phase_diagram(params):
    diagram = phase_diagram(params["n"], params["s"], params["m"],
                            entry_distribution(params["dist"]),
                            params["value_law"], params["trials"],
                            params["seed"])
    outputs = {params["out"]: storage.phase_diagram_to_csv(diagram)}
    if params["svg"]:
        try:
            crossings = contour_crossings(diagram)
        except SparselabError:
            crossings = None
        outputs[params["svg"]] = svg.phase_heatmap_svg(diagram, crossings)
    return outputs


@_command("fit", [
    Param("diagram", _path, required=True, help="phase diagram CSV"),
    Param("contour", _contour, 0.5, help="success level to fit"),
    Param("out", _path, required=True, help="fit CSV"),
])
def _run_fit(params):
    diagram = storage.load_phase_diagram(params["diagram"])
    fit = fit_threshold(diagram, params["contour"])
    try:
        exponent = scaling_exponent(diagram, params["contour"])
    except SparselabError:
        exponent = None
    return {params["out"]: storage.fit_to_csv(fit, exponent)}


# -- execution ----------------------------------------------------------------


def _out_dir() -> str:
    return os.environ.get("SPARSELAB_OUT", ".")


def _resolve(path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(_out_dir(), path)


def run(config: RunConfig) -> RunRecord:
    """Execute a parsed config: compute, write outputs atomically, log."""
    _, runner, _ = COMMANDS[config.command]
    record = RunRecord(command=config.command, parameters=config.parameters,
                       started=time.strftime("%Y-%m-%dT%H:%M:%S"))
    outputs = runner(config.parameters)
    for path, data in outputs.items():
        target = _resolve(path)
        storage.write_atomic(target, data)
        blob = data if isinstance(data, bytes) else data.encode()
        record.outputs[target] = hashlib.sha256(blob).hexdigest()
    record.finished = time.strftime("%Y-%m-%dT%H:%M:%S")
    _append_runlog(record)
    return record


def _append_runlog(record: RunRecord) -> None:
    path = os.path.join(_out_dir(), "runlog.jsonl")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "a") as handle:
        fcntl.flock(handle, fcntl.LOCK_EX)
        try:
            handle.write(record.to_json() + "\n")
        finally:
            fcntl.flock(handle, fcntl.LOCK_UN)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = parse_config(argv)
        record = run(config)
    except _HelpRequested as help_text:
        print(help_text)
        return EXIT_OK
    except (ConfigError, ParameterError) as exc:
        print(f"sparselab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeCapError as exc:
        print(f"sparselab: size/cap error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"sparselab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (AssertionError, SparselabError) as exc:
        print(f"sparselab: assertion failure: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    except OSError as exc:
        print(f"sparselab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in record.outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

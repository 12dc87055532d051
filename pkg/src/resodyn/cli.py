"""Config-driven batch front-end.

One task per invocation, selected inside a JSON config:

    resodyn --config run.json [--out DIR] [--threads N] [--verbose]

Exit codes: 0 success, 2 validation error, 3 numerical failure; failures
emit a machine-readable JSON object on stderr.  All outputs are written
atomically (temp file + rename) and are byte-identical across reruns of the
same config.  Any config leaf can be overridden through the environment,
e.g. ``RESODYN_THERMAL__BETA=2.0``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .dephasing import (
    DephasingModel,
    asymptotic_generator,
    exact_trajectory,
    full_decoherence,
)
from .dynamics import RateSummary, ResonanceDynamics, Trajectory
from .equilibrium import equilibrium_offdiagonal_qubit
from .errors import NumericalError, ResodynError, ValidationError
from .model import DensityMatrix, SystemSpec, ThermalConfig
from .register import (
    RegisterSpec,
    coherent_subspace_report,
    collective_system,
    independent_register_trajectory,
)
from .spectral import FormFactor

ENV_PREFIX = "RESODYN_"
TASKS = ("rates", "spectrum", "evolve", "dephasing-compare", "equilibrium", "register")


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _require(cfg: dict, key: str, path: str):
    if key not in cfg:
        raise ValidationError(f"missing required field {path}.{key}", field=f"{path}.{key}")
    return cfg[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path} must be a number", field=path)
    return float(value)


def _complex_entry(value, path: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_number(value[0], path), _number(value[1], path))
    raise ValidationError(f"{path} must be a number or an [re, im] pair", field=path)


def _complex_matrix(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{path} must be a non-empty matrix", field=path)
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise ValidationError(f"{path}[{i}] must be a list", field=path)
        rows.append([_complex_entry(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    return np.array(rows, dtype=complex)


def apply_env_overrides(cfg: dict, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    for key, raw in sorted(environ.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        segments = [s.lower() for s in key[len(ENV_PREFIX):].split("__") if s]
        if not segments:
            continue
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        for seg in segments[:-1]:
            node = node.setdefault(seg, {})
            if not isinstance(node, dict):
                raise ValidationError(f"cannot override non-object config path {seg}",
                                      field=".".join(segments))
        node[segments[-1]] = value
    return cfg


def parse_system(cfg: dict) -> SystemSpec:
    block = _require(cfg, "system", "")
    energies = _require(block, "energies", "system")
    if not isinstance(energies, list) or len(energies) < 2:
        raise ValidationError("system.energies must list at least two numbers",
                              field="system.energies")
    coupling = _complex_matrix(_require(block, "coupling", "system"), "system.coupling")
    return SystemSpec(tuple(_number(e, "system.energies") for e in energies), coupling)


def parse_thermal(cfg: dict) -> ThermalConfig:
    block = _require(cfg, "thermal", "")
    beta = _number(_require(block, "beta", "thermal"), "thermal.beta")
    lam = _number(_require(block, "lambda", "thermal"), "thermal.lambda")
    wp = block.get("omega_prime")
    return ThermalConfig(beta=beta, coupling_constant=lam,
                         omega_prime=None if wp is None else _number(wp, "thermal.omega_prime"))


def parse_form_factor(cfg: dict) -> FormFactor:
    return FormFactor.from_config(_require(cfg, "form_factor", ""))


def parse_times(task: dict, default_stop: float) -> np.ndarray:
    spec = task.get("times")
    if spec is None:
        return np.linspace(0.0, default_stop, 201)
    if isinstance(spec, list):
        return np.asarray([_number(x, "task.times") for x in spec], dtype=float)
    if isinstance(spec, dict):
        start = _number(spec.get("start", 0.0), "task.times.start")
        stop = _number(_require(spec, "stop", "task.times"), "task.times.stop")
        num = int(spec.get("num", 201))
        return np.linspace(start, stop, num)
    raise ValidationError("task.times must be a list or {start, stop, num}",
                          field="task.times")


def parse_register(cfg: dict) -> RegisterSpec:
    block = _require(cfg, "register", "")
    L = int(_number(_require(block, "L", "register"), "register.L"))
    delta = _require(block, "delta", "register")
    delta = (tuple(_number(d, "register.delta") for d in delta)
             if isinstance(delta, list) else _number(delta, "register.delta"))
    coupling = _complex_matrix(_require(block, "G", "register"), "register.G")
    mode = block.get("mode", "independent")
    return RegisterSpec(L=L, delta=delta, coupling=coupling, mode=mode)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-resodyn-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(_jsonify(obj), sort_keys=True, indent=2) + "\n")


def trajectory_csv(traj: Trajectory) -> str:
    n = traj.dim
    header = ["t"]
    for m in range(n):
        for k in range(n):
            header.append(f"re_rho_{m + 1}_{k + 1}")
            header.append(f"im_rho_{m + 1}_{k + 1}")
    lines = [",".join(header)]
    for i, t in enumerate(traj.times):
        row = [_fmt(t)]
        for m in range(n):
            for k in range(n):
                z = traj.rho[i, m, k]
                row.append(_fmt(z.real))
                row.append(_fmt(z.imag))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def rates_json_obj(summary: RateSummary) -> dict:
    return {
        "tau_thermalization": summary.tau_thermalization,
        "tau_decoherence": summary.tau_decoherence,
        "ratio": summary.ratio,
        "per_frequency": [{"e": e, "decay_time": tau} for e, tau in summary.per_frequency],
    }


def emit_plot_data(traj: Trajectory, path: str, resonances=None) -> list[str]:
    """Write the CSV trajectory plus a JSON companion with rates/resonances."""
    atomic_write_text(path, trajectory_csv(traj))
    companion = os.path.splitext(path)[0] + "_summary.json"
    summary = {"rates": rates_json_obj(traj.rates) if traj.rates else None,
               "resonances": resonances.to_json_obj() if resonances is not None else None,
               "n_times": int(traj.times.size)}
    write_json(companion, summary)
    return [path, companion]


# ---------------------------------------------------------------------------
# task runners
# ---------------------------------------------------------------------------

def _default_rho0(n: int, task: dict) -> DensityMatrix:
    if "rho0" in task:
        return DensityMatrix(_complex_matrix(task["rho0"], "task.rho0"))
    return DensityMatrix(np.full((n, n), 1.0 / n, dtype=complex))


def run_config(cfg: dict, outdir: str, threads: int | None = None,
               verbose: bool = False) -> list[str]:
    task = _require(cfg, "task", "")
    name = _require(task, "name", "task")
    if name not in TASKS:
        raise ValidationError(f"unknown task {name!r}; choose one of {TASKS}",
                              field="task.name")
    g = parse_form_factor(cfg)
    thermal = parse_thermal(cfg)
    os.makedirs(outdir, exist_ok=True)
    paths: list[str] = []

    def out(pname: str) -> str:
        return os.path.join(outdir, pname)

    if name == "rates":
        engine = ResonanceDynamics(parse_system(cfg), g, thermal, threads=threads)
        obj = {"rates": rates_json_obj(engine.rates()),
               "resonances": engine.resonances.to_json_obj()}
        write_json(out("rates.json"), obj)
        paths.append(out("rates.json"))

    elif name == "spectrum":
        engine = ResonanceDynamics(parse_system(cfg), g, thermal, threads=threads)
        write_json(out("spectrum.json"), engine.resonances.to_json_obj())
        paths.append(out("spectrum.json"))

    elif name == "evolve":
        system = parse_system(cfg)
        engine = ResonanceDynamics(system, g, thermal, threads=threads)
        rho0 = _default_rho0(system.dim, task)
        times = parse_times(task, default_stop=_default_horizon(engine))
        traj = engine.reduced_density_trajectory(rho0, times)
        paths.extend(emit_plot_data(traj, out("trajectory.csv"), engine.resonances))

    elif name == "dephasing-compare":
        paths.append(_run_dephasing_compare(cfg, g, thermal, task, out("dephasing_compare.json")))

    elif name == "equilibrium":
        system = parse_system(cfg)
        report = equilibrium_offdiagonal_qubit(system, g, thermal.beta, thermal.lam)
        write_json(out("equilibrium.json"), report.to_json_obj())
        paths.append(out("equilibrium.json"))

    elif name == "register":
        reg = parse_register(cfg)
        if reg.mode == "collective":
            report = coherent_subspace_report(reg, g, thermal.beta)
            obj = report.to_json_obj()
            obj["dimension"] = 2**reg.L
            obj["energies"] = list(collective_system(reg).system.energies)
            write_json(out("register_report.json"), obj)
            paths.append(out("register_report.json"))
        else:
            rho0_list = [
                DensityMatrix(_complex_matrix(r, f"task.rho0_list[{i}]"))
                for i, r in enumerate(_require(task, "rho0_list", "task"))
            ]
            times = parse_times(task, default_stop=10.0)
            lazy = independent_register_trajectory(reg, rho0_list, times, g, thermal)
            traj = lazy.dense()
            paths.extend(emit_plot_data(traj, out("register_trajectory.csv")))

    if verbose:
        for p in paths:
            print(p, file=sys.stderr)
    return paths


def _default_horizon(engine: ResonanceDynamics) -> float:
    rate = max((m.epsilon.imag for m in engine.resonances.modes), default=0.0)
    if rate <= 0:
        return 10.0
    return min(10.0 / rate, 1e6)


def _run_dephasing_compare(cfg: dict, g: FormFactor, thermal: ThermalConfig,
                           task: dict, path: str) -> str:
    system = parse_system(cfg)
    model = DephasingModel.from_system(system, g, thermal.beta, thermal.lam)
    n = system.dim
    rho0 = _default_rho0(n, task)

    deltas = {(m, k): asymptotic_generator(model, m, k)
              for m in range(n) for k in range(n) if m != k}
    decay = max((abs(d) for d in deltas.values() if not math.isinf(d.imag)), default=1.0)
    horizon = min(10.0 / max(thermal.lam**2 * decay, 1e-12), 1e6)
    times = parse_times(task, default_stop=horizon)

    exact = exact_trajectory(model, rho0, times)
    engine = ResonanceDynamics(system, g, thermal)
    predicted = engine.reduced_density_trajectory(rho0, times)
    deviation = np.max(np.abs(exact.rho - predicted.rho))

    obj = {
        "model": {"gammas": list(model.gammas), "energies": list(model.energies),
                  "form_factor": g.to_config(), "beta": thermal.beta,
                  "lambda": thermal.lam},
        "decoherence": "full" if full_decoherence(model) else "incomplete",
        "generators": [{"m": m + 1, "n": k + 1, "delta": [d.real, d.imag]}
                       for (m, k), d in sorted(deltas.items())],
        "t": list(map(float, times)),
        "exact": _jsonify(exact.rho),
        "resonance": _jsonify(predicted.rho),
        "deviation": float(deviation),
    }
    write_json(path, obj)
    return path


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _emit_error(kind: str, exc: Exception) -> None:
    payload = {"error": {"type": kind, "class": type(exc).__name__, "message": str(exc)}}
    field = getattr(exc, "field", None)
    if field:
        payload["error"]["field"] = field
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="resodyn",
        description="Resonance dynamics of open N-level systems: rates, spectra, "
                    "trajectories, dephasing comparisons, equilibrium corrections.")
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for per-frequency assembly")
    parser.add_argument("--verbose", action="store_true", help="list written artifacts")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ValidationError("config root must be a JSON object")
        cfg = apply_env_overrides(cfg)
        outdir = args.out or cfg.get("output", {}).get("dir", ".")
        run_config(cfg, outdir, threads=args.threads, verbose=args.verbose)
    except (OSError, json.JSONDecodeError) as exc:
        _emit_error("validation", exc)
        return 2
    except ValidationError as exc:
        _emit_error("validation", exc)
        return 2
    except NumericalError as exc:
        _emit_error("numerical", exc)
        return 3
    except ResodynError as exc:
        _emit_error("numerical", exc)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line front-end: ``umaxcircle {analyze,simulate,bound}``.

Every run reads one JSON config, validates it strictly (unknown keys are
rejected), materializes all defaults and embeds the resolved config in each
report.  Floats are written with 17 significant digits and no wall-clock data
is written, so a rerun with the same config and seed is byte-identical.

Exit codes: 0 success, 2 config error, 3 condition violation, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .density import DensitySpec, Mixture, Tabulated, Uniform, VonMises, product_integral, regular_offsets
from .errors import (
    B3Violation,
    ConditionError,
    ConfigError,
    DegenerateHessian,
    DomainError,
    ModeMismatch,
    UmaxError,
)
from .extremum import FD_STEP, analytic_hessian, find_max_oracle, hessian_fd, validate_conditions
from .kernels import GAP_SUM, GENERATOR_PARAMS, PAIRWISE_SUM, TWO_PI, GFunction, KernelSpec, g_second_derivative
from .limit_law import MODES, U_MAX, U_MIN, LimitLaw, limit_constant_gapsum, limit_constant_general
from .poisson_bound import BoundReport, probe_lhs, silverman_brown_check
from .simulator import EVALUATORS, SimulationConfig, run_replicates

EXIT_OK, EXIT_CONFIG, EXIT_CONDITION, EXIT_NUMERIC = 0, 2, 3, 4
U64 = 2**64
REGULAR_TOL = 1e-5

# registry name -> (kernel family, generator family, parameter names)
REGISTRY = {
    "perimeter": (GAP_SUM, "sin-half", ()),
    "area": (GAP_SUM, "half-sin", ()),
    "circumscribed-distance": (GAP_SUM, "sec-half", ()),
    "generalized-perimeter": (GAP_SUM, "pow-sin", ("y",)),
    "pairwise-distance": (PAIRWISE_SUM, "sin-half", ()),
    "inverse-distance": (PAIRWISE_SUM, "csc-half", ()),
    "alexander-stolarsky": (GAP_SUM, "alexander-stolarsky", ("a", "b", "c")),
}

SECTION_DEFAULTS = {
    "analyze": {"oracle_grid": None, "fd_step": FD_STEP},
    "simulate": {"n": None, "replicates": None, "evaluator": "auto"},
    "bound": {"n_grid": None, "t_grid": [1.0], "mc_samples": 1_000_000, "probe_trials": 0},
}
TOP_KEYS = ("kernel", "density", "mode", "master_seed", "output_prefix", *SECTION_DEFAULTS)


# -- serialization ------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _to_json(obj, level: int = 0) -> str:
    pad, inner = "  " * level, "  " * (level + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_to_json(v, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{_to_json(v, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    return json.dumps(str(obj))


def write_json(path: Path, obj) -> None:
    path.write_text(_to_json(obj) + "\n", encoding="utf-8")


def _csv_cell(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_csv_cell(x) for x in row])


# -- config -------------------------------------------------------------------

def _reject_unknown(section: str, cfg: dict, allowed) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{section} must be an object")
    extra = sorted(set(cfg) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(extra)}")


def _int(value, what: str, lo: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{what} must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{what} must be >= {lo}, got {value}")
    return value


def _real(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{what} must be a finite number, got {value!r}")
    return float(value)


def _resolve_kernel(cfg) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("kernel must be an object")
    if "name" in cfg:
        _reject_unknown("kernel", cfg, ("name", "m", "params"))
        name = cfg["name"]
        if name not in REGISTRY:
            raise ConfigError(f"unknown kernel name {name!r}; known: {', '.join(REGISTRY)}")
        names = REGISTRY[name][2]
        params = cfg.get("params", {})
        _reject_unknown(f"kernel.params ({name})", params, names)
        missing = [k for k in names if k not in params]
        if missing:
            raise ConfigError(f"kernel {name} needs params {', '.join(missing)}")
        out = {"name": name, "m": _int(cfg.get("m"), "kernel.m", 2),
               "params": {k: _real(params[k], f"kernel.params.{k}") for k in names}}
        if name == "alexander-stolarsky":
            out["params"]["c"] = _int(params["c"], "kernel.params.c", 0)
        return out
    _reject_unknown("kernel", cfg, ("family", "generator", "m", "params", "values"))
    family = cfg.get("family")
    if family not in (GAP_SUM, PAIRWISE_SUM):
        raise ConfigError(f"kernel.family must be {GAP_SUM!r} or {PAIRWISE_SUM!r} (or give a registry name)")
    gen = cfg.get("generator")
    if gen not in GENERATOR_PARAMS:
        raise ConfigError(f"unknown generator {gen!r}")
    out = {"family": family, "generator": gen, "m": _int(cfg.get("m"), "kernel.m", 2)}
    names = GENERATOR_PARAMS[gen]
    if names is None:
        vals = cfg.get("values")
        if not isinstance(vals, list):
            raise ConfigError("tabulated generator needs a 'values' list")
        out["values"] = [_real(v, "kernel.values[]") for v in vals]
    else:
        params = cfg.get("params", {})
        _reject_unknown(f"kernel.params ({gen})", params, names)
        missing = [k for k in names if k not in params]
        if missing:
            raise ConfigError(f"generator {gen} needs params {', '.join(missing)}")
        out["params"] = {k: _real(params[k], f"kernel.params.{k}") for k in names}
    return out


def _as_sign(a: float, b: float, c: int) -> int | None:
    """Concave-increasing (+1) or convex-decreasing (-1) classification of ``r``."""
    if a >= 0 and b <= 0 and c >= 1:
        return (-1) ** c
    if a >= 0 and b <= 0 and c == 0 and a * a + b * b != 0:
        return -1
    if a == 0 and 0 < b <= 1 and c == 0:
        return 1
    return None


def _default_mode(kcfg: dict, g: GFunction) -> str:
    """Natural mode of a kernel when the config does not name one."""
    name = kcfg.get("name")
    if name in ("circumscribed-distance", "inverse-distance"):
        return U_MIN
    if name == "generalized-perimeter":
        return U_MAX if kcfg["params"]["y"] > 0 else U_MIN
    if name == "alexander-stolarsky":
        p = kcfg["params"]
        sign = _as_sign(p["a"], p["b"], p["c"])
        if sign is not None:
            return U_MAX if sign > 0 else U_MIN
    if kcfg.get("family") == PAIRWISE_SUM or name in ("perimeter", "area", "pairwise-distance"):
        return U_MAX
    # gap-sum: a convex generator makes the regular polygon a minimum
    try:
        g2 = g_second_derivative(g, TWO_PI / kcfg["m"])
    except DomainError:
        return U_MAX
    return U_MIN if g2 > 0 else U_MAX


def _build_kernel(kcfg: dict) -> KernelSpec:
    if "name" in kcfg:
        family, gen, names = REGISTRY[kcfg["name"]]
        g = GFunction(gen, tuple(kcfg["params"][k] for k in names))
        return KernelSpec(family, kcfg["m"], g=g, name=kcfg["name"])
    if kcfg["generator"] == "tabulated":
        g = GFunction.tabulated(kcfg["values"])
    else:
        names = GENERATOR_PARAMS[kcfg["generator"]]
        g = GFunction(kcfg["generator"], tuple(kcfg["params"][k] for k in names))
    return KernelSpec(kcfg["family"], kcfg["m"], g=g)


def _resolve_density(cfg, base_dir: Path, where: str = "density") -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where} must be an object")
    fam = cfg.get("family")
    if fam == "uniform":
        _reject_unknown(where, cfg, ("family",))
        return {"family": "uniform"}
    if fam == "von-mises":
        _reject_unknown(where, cfg, ("family", "mu", "kappa"))
        return {"family": "von-mises", "mu": _real(cfg.get("mu", 0.0), f"{where}.mu"),
                "kappa": _real(cfg.get("kappa", 1.0), f"{where}.kappa")}
    if fam == "tabulated":
        _reject_unknown(where, cfg, ("family", "path", "values", "normalize"))
        normalize = cfg.get("normalize", False)
        if not isinstance(normalize, bool):
            raise ConfigError(f"{where}.normalize must be true or false")
        if ("path" in cfg) == ("values" in cfg):
            raise ConfigError(f"{where}: give exactly one of 'path' or 'values'")
        if "path" in cfg:
            path = Path(cfg["path"])
            if not path.is_absolute():
                path = (base_dir / path).resolve()
            return {"family": "tabulated", "path": str(path), "normalize": normalize}
        return {"family": "tabulated", "values": [_real(v, f"{where}.values[]") for v in cfg["values"]],
                "normalize": normalize}
    if fam == "mixture":
        _reject_unknown(where, cfg, ("family", "weights", "components"))
        comps = cfg.get("components")
        weights = cfg.get("weights")
        if not isinstance(comps, list) or not isinstance(weights, list):
            raise ConfigError(f"{where} needs 'weights' and 'components' lists")
        return {"family": "mixture", "weights": [_real(w, f"{where}.weights[]") for w in weights],
                "components": [_resolve_density(c, base_dir, f"{where}.components[{i}]")
                               for i, c in enumerate(comps)]}
    raise ConfigError(f"unknown density family {fam!r}")


def _build_density(dcfg: dict) -> DensitySpec:
    fam = dcfg["family"]
    if fam == "uniform":
        return Uniform()
    if fam == "von-mises":
        return VonMises(dcfg["mu"], dcfg["kappa"])
    if fam == "tabulated":
        if "path" in dcfg:
            return Tabulated.from_csv(dcfg["path"], normalize=dcfg["normalize"])
        vals = np.asarray(dcfg["values"], dtype=float)
        if dcfg["normalize"]:
            vals = vals / (vals.sum() * TWO_PI / vals.size)
        return Tabulated(tuple(vals))
    return Mixture(tuple(dcfg["weights"]), tuple(_build_density(c) for c in dcfg["components"]))


def _resolve_section(name: str, cfg) -> dict:
    defaults = SECTION_DEFAULTS[name]
    cfg = {} if cfg is None else cfg
    _reject_unknown(name, cfg, defaults)
    out = {k: cfg.get(k, v) for k, v in defaults.items()}
    if name == "analyze":
        if out["oracle_grid"] is not None:
            _int(out["oracle_grid"], "analyze.oracle_grid", 4)
        out["fd_step"] = _real(out["fd_step"], "analyze.fd_step")
        if not 0.0 < out["fd_step"] < 0.1:
            raise ConfigError("analyze.fd_step must lie in (0, 0.1)")
    elif name == "simulate":
        _int(out["n"], "simulate.n", 2)
        _int(out["replicates"], "simulate.replicates", 1)
        if out["evaluator"] not in EVALUATORS:
            raise ConfigError(f"simulate.evaluator must be one of {EVALUATORS}")
    else:
        if not isinstance(out["n_grid"], list) or not out["n_grid"]:
            raise ConfigError("bound.n_grid must be a non-empty list of integers")
        for n in out["n_grid"]:
            _int(n, "bound.n_grid[]", 2)
        if not isinstance(out["t_grid"], list) or not out["t_grid"]:
            raise ConfigError("bound.t_grid must be a non-empty list")
        out["t_grid"] = [_real(t, "bound.t_grid[]") for t in out["t_grid"]]
        if min(out["t_grid"]) < 0.0:
            raise ConfigError("bound.t_grid values must be >= 0")
        _int(out["mc_samples"], "bound.mc_samples", 10_000)
        _int(out["probe_trials"], "bound.probe_trials", 0)
    return out


def resolve_config(raw, command: str, base_dir: Path, seed: int | None = None) -> dict:
    """Validate ``raw`` and return it with every default materialized."""
    _reject_unknown("config", raw, TOP_KEYS)
    if "kernel" not in raw:
        raise ConfigError("config needs a 'kernel' entry")
    kernel = _resolve_kernel(raw["kernel"])
    density = _resolve_density(raw.get("density", {"family": "uniform"}), base_dir)
    master_seed = raw.get("master_seed", 0) if seed is None else seed
    _int(master_seed, "master_seed", 0)
    if master_seed >= U64:
        raise ConfigError("master_seed must fit in 64 bits")
    out = {"kernel": kernel, "density": density}
    mode = raw.get("mode")
    if mode is not None and mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    out["mode"] = mode
    out["master_seed"] = master_seed
    prefix = raw.get("output_prefix", "")
    if not isinstance(prefix, str) or "/" in prefix or "\\" in prefix:
        raise ConfigError("output_prefix must be a plain string without path separators")
    out["output_prefix"] = prefix
    out["analyze"] = _resolve_section("analyze", raw.get("analyze"))
    for section in ("simulate", "bound"):
        if section == command or section in raw:
            out[section] = _resolve_section(section, raw.get(section))
    return out


class Experiment:
    """Resolved config together with the objects it describes."""

    def __init__(self, cfg: dict):
        try:
            self.kernel = _build_kernel(cfg["kernel"])
            self.density = _build_density(cfg["density"])
            self.density.validate()
        except (UmaxError, ValueError, TypeError, OSError) as exc:
            raise ConfigError(str(exc)) from exc
        if cfg["mode"] is None:
            cfg["mode"] = _default_mode(cfg["kernel"], self.kernel.g)
        self.cfg = cfg
        self.mode = cfg["mode"]


# -- analysis -----------------------------------------------------------------

def analyze(exp: Experiment) -> dict:
    """Maximizers, Hessians, condition checks and the limit law as a report dict."""
    spec, p, mode = exp.kernel, exp.density, exp.mode
    target = spec if mode == U_MAX else spec.negated()
    acfg = exp.cfg["analyze"]
    oracle = find_max_oracle(target, grid_n=acfg["oracle_grid"])
    m = spec.m
    if acfg["fd_step"] != FD_STEP:
        fd = [hessian_fd(target, w, step=acfg["fd_step"]).det_neg_G for w in oracle.ordered_maximizers]
        oracle = replace(oracle, det_neg_hessian=tuple(fd))
    validation = validate_conditions(target, oracle)

    maximizers, analytic_dets = [], []
    for w, det_fd in zip(oracle.ordered_maximizers, oracle.det_neg_hessian):
        entry = {"W": list(w.beta), "min_gap": float(np.min(np.diff(np.r_[0.0, w.as_array(), TWO_PI])))}
        det_an = None
        if spec.family in (GAP_SUM, PAIRWISE_SUM):
            try:
                det_an = analytic_hessian(target, w).det_neg_G
            except DomainError:
                det_an = None
        analytic_dets.append(det_an)
        entry["det_neg_hessian_analytic"] = det_an
        entry["det_neg_hessian_fd"] = det_fd
        entry["det_relative_gap"] = abs(det_an - det_fd) / abs(det_an) if det_an else None
        # determinants of the Hessian of the kernel itself (not of the analysed sign-flipped one)
        det_used = det_an if det_an is not None else det_fd
        flip = (-1.0) ** (m - 1)
        if mode == U_MAX:
            entry["det_neg_G"], entry["det_G"] = det_used, flip * det_used
        else:
            entry["det_neg_G"], entry["det_G"] = flip * det_used, det_used
        entry["B3_integral"] = product_integral(p, w)
        maximizers.append(entry)

    if not validation.nondegenerate:
        raise DegenerateHessian("; ".join(validation.messages) or "singular Hessian at a maximizer")
    if not validation.negative_definite:
        raise ConditionError("; ".join(validation.messages) or "Hessian not negative definite")

    k_fd = limit_constant_general(oracle, p)
    if all(d is not None for d in analytic_dets):
        k_an = limit_constant_general(replace(oracle, det_neg_hessian=tuple(analytic_dets)), p)
        path = "analytic"
    else:
        k_an, path = k_fd, "finite-difference"
    law = LimitLaw.from_k_ordered(m, k_an, mode)
    law_fd = LimitLaw.from_k_ordered(m, k_fd, mode)

    closed = None
    if spec.family == GAP_SUM and oracle.r == 1:
        dev = np.max(np.abs(oracle.ordered_maximizers[0].as_array() - regular_offsets(m).as_array()))
        if dev < REGULAR_TOL:
            try:
                closed = LimitLaw.from_k_ordered(m, limit_constant_gapsum(spec.g, m, p, mode), mode)
            except (ModeMismatch, B3Violation, DomainError):
                closed = None

    extremum = oracle.M if mode == U_MAX else -oracle.M
    report = {
        "command": "analyze",
        "version": __version__,
        "config": exp.cfg,
        "kernel_resolved": {"family": spec.family, "m": m, **spec.g.to_dict()},
        "mode": mode,
        "extremum": "maximum" if mode == U_MAX else "minimum",
        "M": extremum,
        "r": oracle.r,
        "k": oracle.k,
        "maximizers": maximizers,
        "validation": {**validation.to_dict(), "B3_positive": any(e["B3_integral"] >= 1e-12 for e in maximizers)},
        "K_path": path,
        "K_ordered": law.k_ordered,
        "K_total": law.k_total,
        "c": law.coefficient,
        "K_ordered_fd": law_fd.k_ordered,
        "c_fd": law_fd.coefficient,
        "c_closed_form": None if closed is None else closed.coefficient,
        "limit_law": law.to_dict(),
    }
    return report


def _law_from_report(rep: dict) -> tuple[LimitLaw, float]:
    return LimitLaw(rep["limit_law"]["m"], rep["c"], rep["mode"]), rep["M"]


# -- commands -----------------------------------------------------------------

def cmd_analyze(exp: Experiment, out: Path, threads: int = 1) -> list[Path]:
    rep = analyze(exp)
    path = out / f"{exp.cfg['output_prefix']}analysis.json"
    write_json(path, rep)
    return [path]


def cmd_simulate(exp: Experiment, out: Path, threads: int = 1) -> list[Path]:
    rep = analyze(exp)
    law, M = _law_from_report(rep)
    scfg = exp.cfg["simulate"]
    sim = SimulationConfig(
        kernel=exp.kernel, density=exp.density, n=scfg["n"], replicates=scfg["replicates"],
        master_seed=exp.cfg["master_seed"], mode=exp.mode, evaluator=scfg["evaluator"],
    )
    res = run_replicates(sim, law, M, threads=threads)
    prefix = exp.cfg["output_prefix"]
    t = res.ecdf.values
    csv_path = out / f"{prefix}ecdf.csv"
    write_csv(csv_path, ("t", "F_hat", "F_limit"),
              zip(t, np.arange(1, t.size + 1) / t.size, law.cdf(np.maximum(t, 0.0))))
    summary = {
        "command": "simulate",
        "version": __version__,
        "config": exp.cfg,
        "seed": exp.cfg["master_seed"],
        "M": M,
        "c": law.coefficient,
        "K_total": law.k_total,
        "n": sim.n,
        "replicates": sim.replicates,
        "ks_distance": res.ks_distance,
        "H_n": res.h_summary,
        "T_n": {"min": float(np.min(t)), "median": float(np.median(t)), "max": float(np.max(t)),
                "mean": float(np.mean(t)), "limit_mean": math.gamma(1.0 + 1.0 / law.shape_exponent)
                / law.coefficient ** (1.0 / law.shape_exponent)},
    }
    json_path = out / f"{prefix}simulation.json"
    write_json(json_path, summary)
    return [csv_path, json_path]


def cmd_bound(exp: Experiment, out: Path, threads: int = 1) -> list[Path]:
    rep = analyze(exp)
    law, M = _law_from_report(rep)
    bcfg = exp.cfg["bound"]
    seed = exp.cfg["master_seed"]
    m = exp.kernel.m
    reports, rows = [], []
    for t in bcfg["t_grid"]:
        diag = silverman_brown_check(
            exp.kernel, exp.density, law, M, t, bcfg["n_grid"], bcfg["mc_samples"], seed
        )
        for d in diag:
            br = BoundReport(
                n=d.n, m=m, z=d.z, p_hat=d.p_hat, p_std_err=d.p_std_err,
                tau_hat=d.tau_hat, tau_std_err=d.tau_std_err, lam=d.lambda_hat, rhs=d.rhs,
                samples=bcfg["mc_samples"],
            )
            if bcfg["probe_trials"] > 0:
                br.lhs_probe, br.lhs_probe_std_err = probe_lhs(
                    exp.kernel, exp.density, d.n, d.z, d.lambda_hat, bcfg["probe_trials"],
                    seed, exp.mode, threads,
                )
            reports.append({"t": t, **br.to_dict()})
            row = [t, d.n, d.z, d.p_hat, d.p_std_err, d.lambda_hat, d.lambda_std_err, d.lambda_limit]
            for r in range(m - 1):
                row += [d.tau_hat[r], d.tau_std_err[r], d.scaled_dependence[r]]
            row += [d.rhs, br.lhs_probe, br.lhs_probe_std_err]
            rows.append(row)
    header = ["t", "n", "z", "p_hat", "p_std_err", "lambda_hat", "lambda_std_err", "lambda_limit"]
    for r in range(1, m):
        header += [f"tau_{r}", f"tau_{r}_std_err", f"n_pow_2m_minus_{r}_p_tau_{r}"]
    header += ["rhs", "lhs_probe", "lhs_probe_std_err"]
    prefix = exp.cfg["output_prefix"]
    csv_path = out / f"{prefix}bound_diagnostics.csv"
    write_csv(csv_path, header, rows)
    json_path = out / f"{prefix}bound.json"
    write_json(json_path, {
        "command": "bound",
        "version": __version__,
        "config": exp.cfg,
        "seed": seed,
        "M": M,
        "c": law.coefficient,
        "K_total": law.k_total,
        "reports": reports,
    })
    return [csv_path, json_path]


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "bound": cmd_bound}


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="umaxcircle", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="JSON experiment config")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--seed", type=_u64, default=None, help="override master_seed")
        sp.add_argument("--threads", type=int, default=1, help="maximum worker threads")
    return ap


def _error_object(code: int, exc: BaseException) -> dict:
    return {"error": {"exit_code": code, "type": type(exc).__name__, "message": str(exc)}}


def _fail(code: int, exc: BaseException, out: Path | None) -> int:
    obj = _error_object(code, exc)
    sys.stderr.write(_to_json(obj) + "\n")
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "error.json", obj)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    out = args.out
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        try:
            raw = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = resolve_config(raw, args.command, args.config.resolve().parent, args.seed)
        exp = Experiment(cfg)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc, out)
    try:
        paths = COMMANDS[args.command](exp, out, args.threads)
    except ConditionError as exc:
        return _fail(EXIT_CONDITION, exc, out)
    except (UmaxError, ArithmeticError, ValueError) as exc:
        return _fail(EXIT_NUMERIC, exc, out)
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

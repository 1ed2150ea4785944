"""Command-line front end: ``simulate``, ``verify``, ``diagnose``, ``criterion``, ``demo``.

Configuration is a flat ``key=value`` file plus ``key=value`` overrides on the
command line (later wins).  Every output starts with a header recording the
tool version and the resolved configuration; ``--replay FILE`` re-runs from
such a header and reproduces the file byte for byte.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .criterion import cadlag_verdict, counterexample_demo
from .experiment import REF_POSITIVE_STABLE, REF_SAS, Model, run_replicates
from .kernel import Kernel, c_alpha, indicator_kernel, lepage_integrand, load_tabulated_kernel, ou_kernel
from .measure import ControlMeasure, lebesgue, load_atoms_csv, load_density_csv
from .randomness import REFERENCE, RngStream, sample_positive_stable, sample_sas
from .reference import FrechetLaw, scale_abs_jump, scale_pos_jump, scale_vp
from .series import SeriesConfig, partial_sum_ladder, tail_diagnostics
from .stats import ks_one_sample, ks_two_sample

log = logging.getLogger("cadlag_series")

TOOL = "cadlag-series"

# acceptance thresholds per verify target
THRESHOLDS = {"marginal": 0.04, "absjump": 0.03, "posjump": 0.03, "vp": 0.04}
IDENTITY_RTOL = 1e-12


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def _opt(cast):
    def parse(text):
        return None if text is None or str(text).lower() in ("", "none") else cast(text)
    return parse


@dataclass(frozen=True)
class Key:
    cast: Callable
    default: Any = None


_SERIES_KEYS = {
    "alpha": Key(float, 1.5),
    "kernel": Key(str, "indicator"),
    "kernel_jumps": Key(str, ""),
    "measure": Key(str, "lebesgue"),
    "series": Key(str, "lepage"),
    "terms": Key(_opt(int)),
    "level": Key(_opt(float)),
    "replicates": Key(int, 1),
    "grid": Key(int, 1024),
    "mc_draws": Key(int, 1024),
}

# "out" and "workers" steer execution only; they are never recorded
_RUN_KEYS = {"seed": Key(int, 0), "out": Key(str, "out"), "workers": Key(int, 1)}
EXECUTION_KEYS = ("out", "workers")

COMMAND_KEYS = {
    "simulate": {**_RUN_KEYS, **_SERIES_KEYS, "ledger": Key(str, "full")},
    "verify": {**_RUN_KEYS, **_SERIES_KEYS, "target": Key(str), "p": Key(_opt(float))},
    "diagnose": {
        **_RUN_KEYS,
        "alpha": Key(float, 1.5),
        "kernel": Key(str, "indicator"),
        "kernel_jumps": Key(str, ""),
        "measure": Key(str, "lebesgue"),
        "mode": Key(str),
        "jmax": Key(int, 10000),
        "mc_draws": Key(int, 4096),
        "ladder": Key(str, "100,1000,10000"),
        "replicates": Key(int, 200),
        "grid": Key(int, 1024),
    },
    "criterion": {
        **_RUN_KEYS,
        "alpha": Key(float, 1.5),
        "kernel": Key(str, "indicator"),
        "kernel_jumps": Key(str, ""),
        "measure": Key(str, "lebesgue"),
        "p1": Key(float, 2.0),
        "p2": Key(float, 1.0),
        "timegrid": Key(int, 33),
    },
    "demo": {**_RUN_KEYS, "p": Key(float, 4.0), "jmax": Key(int, 6)},
}


def parse_pairs(lines) -> dict[str, str]:
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def read_header(path: str | Path) -> dict[str, str]:
    """Configuration recorded in an output file: the ``# key=value`` header of a
    CSV, or the ``config`` object of a JSON report."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        cfg = {k: ("none" if v is None else str(v)) for k, v in doc["config"].items()}
        return cfg
    pairs = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if "=" in body and not body.startswith("derived:"):
            pairs.append(body)
    return parse_pairs(pairs)


def resolve(command: str, raw: dict[str, str]) -> dict[str, Any]:
    if command not in COMMAND_KEYS:
        raise ConfigError(f"unknown command {command!r}")
    keys = COMMAND_KEYS[command]
    raw = dict(raw)
    given = raw.pop("command", command)
    if given != command:
        raise ConfigError(f"configuration was recorded for {given!r}, not {command!r}")
    unknown = sorted(set(raw) - set(keys))
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
    cfg = {}
    for name, key in keys.items():
        try:
            cfg[name] = key.cast(raw[name]) if name in raw else key.default
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}: {raw[name]!r}") from exc
    if command in ("simulate", "verify"):
        if cfg["terms"] is not None and cfg["level"] is not None:
            raise ConfigError("set either terms (J) or level (u), not both")
        if cfg["terms"] is None and cfg["level"] is None:
            cfg["terms"] = 10000
    _validate(command, cfg)
    return cfg


def _validate(command: str, cfg: dict) -> None:
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if cfg["seed"] < 0 or cfg["seed"] >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if "alpha" in cfg and not 0 < cfg["alpha"] < 2:
        raise ConfigError("alpha must lie in (0, 2)")
    if command == "verify":
        targets = verify_targets(cfg)
        if not targets or any(t not in THRESHOLDS for t in targets):
            raise ConfigError(f"target must be one or more of {', '.join(THRESHOLDS)}")
        if "vp" in targets and cfg["p"] is None:
            raise ConfigError("target=vp needs p")
    if command == "diagnose" and cfg["mode"] not in ("tails", "convergence"):
        raise ConfigError("mode must be tails or convergence")
    if command == "simulate" and cfg["ledger"] not in ("full", "none"):
        raise ConfigError("ledger must be full or none")


def recorded(command: str, cfg: dict) -> dict:
    out = {"command": command}
    out.update({k: v for k, v in cfg.items() if k not in EXECUTION_KEYS})
    return out


def build_kernel(spec: str, jumps: str = "") -> Kernel:
    name, _, arg = spec.partition(":")
    if name == "indicator":
        return indicator_kernel()
    if name == "ou":
        return ou_kernel(float(arg) if arg else 1.0)
    if name == "tabulated":
        if not arg:
            raise ConfigError("tabulated kernel needs a file: tabulated:<values.csv>")
        return load_tabulated_kernel(arg, jumps or None)
    raise ConfigError(f"unknown kernel {spec!r}")


def build_measure(spec: str) -> ControlMeasure:
    name, _, arg = spec.partition(":")
    if name == "lebesgue":
        return lebesgue()
    if name == "atoms" and arg:
        return load_atoms_csv(arg)
    if name == "density" and arg:
        return load_density_csv(arg)
    raise ConfigError(f"unknown measure {spec!r}")


def build_model(cfg: dict) -> Model:
    series = SeriesConfig(cfg["alpha"], terms=None if cfg["level"] is not None else cfg["terms"],
                          level=cfg["level"], replicates=cfg["replicates"], grid=cfg["grid"],
                          seed=cfg["seed"])
    return Model(build_kernel(cfg["kernel"], cfg["kernel_jumps"]), build_measure(cfg["measure"]),
                 series, cfg["series"], cfg["mc_draws"])


# ---------------------------------------------------------------------------
# output


def fmt(x) -> str:
    """Shortest round-trip decimal."""
    return repr(float(x))


def header_lines(command: str, cfg: dict) -> list[str]:
    lines = [f"# {TOOL} {__version__}"]
    for k, v in recorded(command, cfg).items():
        lines.append(f"# {k}={'none' if v is None else v}")
    return lines


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_report(path: Path, command: str, cfg: dict, body: dict, runtime_ms: float) -> dict:
    """JSON report.  Wall time goes to a ``.timing.json`` sidecar so that the
    report itself is reproducible byte for byte."""
    doc = {"tool": TOOL, "version": __version__, "config": recorded(command, cfg)}
    doc.update(body)
    doc = _jsonable(doc)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    timing = path.with_name(path.stem + ".timing.json")
    timing.write_text(json.dumps({"runtime_ms": round(runtime_ms, 3)}) + "\n")
    return doc


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# commands


@dataclass(frozen=True)
class _CsvRows:
    """Formats one replicate's path and ledger rows inside a worker."""

    grid_text: tuple
    ledger: bool

    def __call__(self, rep) -> tuple[str, str]:
        i = str(rep.index)
        path = "".join(f"{i},{t},{v!r}\n" for t, v in zip(self.grid_text, rep.grid_values.tolist()))
        if not self.ledger:
            return path, ""
        led = "".join(
            f"{i},{t!r},{d!r},{j}\n"
            for t, d, j in zip(rep.ledger_times.tolist(), rep.ledger_sizes.tolist(), rep.ledger_terms.tolist())
        )
        return path, led


def run_simulate(cfg: dict) -> dict[str, Path]:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    model = build_model(cfg)
    grid = tuple(fmt(t) for t in np.arange(cfg["grid"] + 1) / cfg["grid"])
    with_ledger = cfg["ledger"] == "full"
    rows = run_replicates(model, workers=cfg["workers"], post=_CsvRows(grid, with_ledger))
    head = "\n".join(header_lines("simulate", cfg)) + "\n"
    files = {"paths": out / "paths.csv"}
    with files["paths"].open("w") as fh:
        fh.write(head + "replicate,t,value\n")
        fh.writelines(r[0] for r in rows)
    if with_ledger:
        files["ledger"] = out / "ledger.csv"
        with files["ledger"].open("w") as fh:
            fh.write(head + "replicate,t,size,term_index\n")
            fh.writelines(r[1] for r in rows)
    log.info("simulate: %d replicates in %.0f ms", len(rows), 1e3 * (time.perf_counter() - t0))
    return files


def marginal_scale(kernel: Kernel, measure: ControlMeasure, alpha: float, t: float = 1.0) -> float:
    """SaS scale of ``X(t)``: ``(int |f(t, s)|**alpha m(ds))**(1/alpha)``."""
    val = measure.integrate(lambda s: np.abs(kernel.eval(t, s)) ** alpha, kernel.s_breakpoints(t)).value
    return val ** (1.0 / alpha)


def verify_body(cfg: dict, model: Optional[Model] = None, reps=None) -> dict:
    """Statistics for one verify target.  ``reps`` may be shared across targets."""
    model = model or build_model(cfg)
    kernel, measure, alpha = model.kernel, model.measure, model.config.alpha
    target = cfg["target"]
    threshold = THRESHOLDS[target]
    p_values = (cfg["p"],) if target == "vp" else ()
    if target == "vp":
        scale = scale_vp(kernel, measure, alpha, cfg["p"])  # raises when p <= alpha
    if reps is None:
        reps = run_replicates(model, p_values, workers=cfg["workers"], keep_path=False)
    n = len(reps)
    seed = model.config.seed
    if target == "marginal":
        scale = marginal_scale(kernel, measure, alpha)
        x = np.array([r.x1 for r in reps])
        ref = sample_sas(RngStream(seed, (REFERENCE, REF_SAS)), alpha, scale, n)
        stat = ks_two_sample(x, ref)
        return {"target": target, "scale": scale, "replicates": n, "statistic": stat,
                "threshold": threshold, "pass": stat < threshold}
    if target == "absjump":
        sigma = scale_abs_jump(kernel, measure, alpha)
        x = np.array([r.max_abs_jump for r in reps])
        ident = np.array([r.identity_value for r in reps])
        err = float(np.max(np.abs(x - ident) / np.maximum(np.abs(ident), np.finfo(float).tiny)))
        stat = ks_one_sample(x, FrechetLaw(alpha, sigma).cdf)
        ident_ok = err <= IDENTITY_RTOL
        return {"target": target, "scale": sigma, "replicates": n, "statistic": stat,
                "threshold": threshold, "ledger_identity_max_rel_error": err,
                "ledger_identity_holds": ident_ok, "pass": stat < threshold and ident_ok}
    if target == "posjump":
        scales = scale_pos_jump(kernel, measure, alpha)
        x = np.array([r.max_jump for r in reps])
        proof = ks_one_sample(x, FrechetLaw(alpha, scales.proof_form).cdf)
        shown = ks_one_sample(x, FrechetLaw(alpha, scales.displayed_form).cdf)
        return {"target": target, "replicates": n,
                "scale": {"proof_form": scales.proof_form, "displayed_form": scales.displayed_form},
                "statistics": {"proof_form": proof, "displayed_form": shown},
                "statistic": proof, "threshold": threshold, "pass": proof < threshold}
    # vp
    x = np.array([r.vp[0] for r in reps])
    ref = sample_positive_stable(RngStream(seed, (REFERENCE, REF_POSITIVE_STABLE)), alpha / cfg["p"], scale, n)
    stat = ks_two_sample(x, ref)
    return {"target": target, "p": cfg["p"], "scale": scale, "replicates": n, "statistic": stat,
            "threshold": threshold, "pass": stat < threshold}


def verify_targets(cfg: dict) -> list[str]:
    return [t.strip() for t in str(cfg["target"] or "").split(",") if t.strip()]


def run_verify(cfg: dict) -> dict:
    """One report per target, ``verify_<target>.json``.  A comma-separated
    ``target`` list shares one simulation; each report records its own target,
    so replaying any single report reproduces it."""
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    targets = verify_targets(cfg)
    model = build_model(cfg)
    reps = None
    if len(targets) > 1:
        if "vp" in targets:
            scale_vp(model.kernel, model.measure, model.config.alpha, cfg["p"])  # fail before simulating
        p_values = (cfg["p"],) if "vp" in targets else ()
        reps = run_replicates(model, p_values, workers=cfg["workers"], keep_path=False)
    docs = {}
    for target in targets:
        one = {**cfg, "target": target}
        body = verify_body(one, model, reps)
        docs[target] = write_report(out / f"verify_{target}.json", "verify", one, body,
                                    1e3 * (time.perf_counter() - t0))
    if len(docs) == 1:
        return next(iter(docs.values()))
    return {"pass": all(d["pass"] for d in docs.values()),
            "statistic": {t: d["statistic"] for t, d in docs.items()}}


def run_diagnose(cfg: dict) -> dict:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    kernel = build_kernel(cfg["kernel"], cfg["kernel_jumps"])
    measure = build_measure(cfg["measure"])
    alpha = cfg["alpha"]
    stream = RngStream(cfg["seed"], ())
    if cfg["mode"] == "tails":
        rep = tail_diagnostics(lepage_integrand(kernel, measure, alpha), measure, cfg["jmax"], stream,
                               mc_draws=cfg["mc_draws"])
        # ||H(., r, v)|| > 1 iff r < c**alpha m(S) sup|f(., v)|**alpha; average over V ~ m / m(S)
        closed = c_alpha(alpha) ** alpha * measure.integrate(lambda s: kernel.section_sup_abs(s) ** alpha).value
        rel = abs(rep.tail_integral - closed) / closed if closed > 0 else float("inf")
        body = {"mode": "tails", **rep.to_dict(), "closed_form": closed,
                "statistic": {"tail_integral_rel_error": rel, "last_decile_max": rep.last_decile_max},
                "threshold": {"tail_integral_rel_error": 0.02, "last_decile_max": 0.1},
                "pass": rel < 0.02 and rep.last_decile_max < 0.1}
    else:
        ladder = [int(x) for x in cfg["ladder"].split(",") if x.strip()]
        if not ladder:
            raise ConfigError("ladder must not be empty")
        rep = partial_sum_ladder(kernel, measure, alpha, ladder, cfg["replicates"], stream,
                                 resolution=cfg["grid"])
        d = rep.to_dict()
        body = {"mode": "convergence", **d, "statistic": [p["median"] for p in d["pairs"]],
                "threshold": "strictly decreasing", "pass": d["medians_strictly_decreasing"]}
    return write_report(out / f"diagnose_{cfg['mode']}.json", "diagnose", cfg, body,
                        1e3 * (time.perf_counter() - t0))


def run_criterion(cfg: dict) -> dict:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    if not 1 < cfg["alpha"] < 2:
        raise ConfigError(f"the cadlag criterion assumes 1 < alpha < 2, got alpha={cfg['alpha']}")
    kernel = build_kernel(cfg["kernel"], cfg["kernel_jumps"])
    grid = np.linspace(0.0, 1.0, cfg["timegrid"])
    rep = cadlag_verdict(kernel, build_measure(cfg["measure"]), cfg["alpha"], cfg["p1"], cfg["p2"], grid)
    d = rep.to_dict()
    body = {**d, "statistic": {"beta1_hat": d["b1"]["beta1_hat"], "beta2_hat": d["b2"]["beta2_hat"]},
            "threshold": {"beta_lower_bound_gt": 0.5}, "pass": rep.satisfied}
    return write_report(out / "criterion.json", "criterion", cfg, body, 1e3 * (time.perf_counter() - t0))


def run_demo(cfg: dict) -> dict:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    rep = counterexample_demo(cfg["p"], cfg["jmax"], RngStream(cfg["seed"], ()))
    head = header_lines("demo", cfg) + [f"# derived: r={rep.r}"]
    rows = rep.rows()
    cols = list(rows[0])
    with (out / "demo_terms.csv").open("w") as fh:
        fh.write("\n".join(head + [",".join(cols)]) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) if c == "j" else fmt(row[c]) for c in cols) + "\n")
    with (out / "demo_increments.csv").open("w") as fh:
        fh.write("\n".join(head + ["k,j_from,j_to,sup_norm"]) + "\n")
        for (k, lo, hi), v in zip(rep.blocks, rep.increments):
            fh.write(f"{k},{lo},{hi},{fmt(v)}\n")
    d = rep.to_dict()
    body = {**d, "statistic": {"increments_decreasing_from_k2": rep.increments_decreasing,
                               "cumulative_bound_increasing": rep.cumulative_increasing},
            "threshold": None, "pass": rep.increments_decreasing and rep.cumulative_increasing}
    return write_report(out / "demo.json", "demo", cfg, body, 1e3 * (time.perf_counter() - t0))


RUNNERS = {
    "simulate": run_simulate,
    "verify": run_verify,
    "diagnose": run_diagnose,
    "criterion": run_criterion,
    "demo": run_demo,
}


def load_config(command: str, config_file: Optional[str] = None, replay: Optional[str] = None,
                overrides=()) -> dict:
    raw: dict[str, str] = {}
    if replay:
        raw.update(read_header(replay))
    if config_file:
        raw.update(parse_pairs(Path(config_file).read_text().splitlines()))
    raw.update(parse_pairs(overrides))
    return resolve(command, raw)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(RUNNERS))
    parser.add_argument("overrides", nargs="*", metavar="key=value")
    parser.add_argument("-c", "--config", help="key=value configuration file")
    parser.add_argument("--replay", help="re-run from the header of an output file")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_intermixed_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.command, args.config, args.replay, args.overrides)
        result = RUNNERS[args.command](cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"{TOOL} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, dict) and "pass" in result:
        print(json.dumps({"pass": result["pass"], "statistic": result.get("statistic")}))
        return 0
    for name, path in result.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

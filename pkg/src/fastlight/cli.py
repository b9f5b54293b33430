"""Command-line front end.

    fastlight {analytic|simulate|verify|sweep} --config PATH --out DIR
              [--seed N] [--threads N] [--param PATH --values CSV]

``--config`` takes a YAML file or the name of a bundled preset
(``paper_fig2``, ``paper_fig3``, ``sharp_oracle``, ``vacuum``).
Exit codes: 0 success, 1 config error, 2 numerical failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import diagnostics as dg
from .analytic import AnalyticScenario, analytic_snapshot
from .model import (
    FastLightError,
    MediumSegment,
    PulseSpec,
    beer_alpha,
)
from .solver import (
    NumericalFailure,
    RecordRequest,
    Scenario,
    SimGrid,
    WindowOverflowError,
    default_grid,
    run,
)

log = logging.getLogger("fastlight")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3

LAB_HEADER = "x_cm,x_over_ctau,re_omega_per_ns,im_omega_per_ns,abs_omega_per_ns"
RETARDED_HEADER = "xi_ns,xi_over_tau,re_omega_per_ns,im_omega_per_ns"

PRESETS = ("paper_fig2", "paper_fig3", "sharp_oracle", "vacuum")

_SCHEMA = {
    "pulse": {"tau_ns", "amplitude", "t_peak_ns", "trunc_halfwidth", "edge", "ramp_len"},
    "medium": {"x0_cm", "x1_cm", "alpha_l", "g_ns2", "t2star_ns", "n_detuning", "fluct_eps0",
               "init_c1", "init_c2"},
    "grid": {"xi_min_ns", "xi_max_ns", "d_xi_ns", "x_min_cm", "x_max_cm", "dx_cm"},
    "output": {"snapshot_times_ns", "snapshot_stations_cm", "out_dir", "track_points"},
    "run": {"seed", "threads"},
}


class ConfigError(FastLightError):
    pass


@dataclass
class ConfigFile:
    scenario: Scenario
    raw: dict
    out_dir: str | None = None
    threads: int = 1


# ---------------------------------------------------------------- config


def _num(raw, key, path, default=None, required=False):
    if key not in raw or raw[key] is None:
        if required:
            raise ConfigError(f"{path}.{key}: missing required value")
        return default
    v = raw[key]
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _cplx(raw, key, path, default):
    if key not in raw:
        return default
    v = raw[key]
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"{path}.{key}: expected a number or [re, im], got {v!r}")


def _check_keys(raw, allowed, path):
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping")
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")


def config_to_scenario(raw: dict) -> ConfigFile:
    """Validate a config tree and build the scenario it describes."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a mapping")
    _check_keys(raw, set(_SCHEMA), "config")
    try:
        p = raw.get("pulse")
        if p is None:
            raise ConfigError("pulse: missing section (pulse.tau_ns is required)")
        _check_keys(p, _SCHEMA["pulse"], "pulse")
        pulse = _build("pulse", lambda: PulseSpec(
            tau=_num(p, "tau_ns", "pulse", required=True),
            amplitude=_num(p, "amplitude", "pulse"),
            t_peak=_num(p, "t_peak_ns", "pulse", 0.0),
            trunc_halfwidth=_num(p, "trunc_halfwidth", "pulse", math.inf),
            edge=str(p.get("edge", "hard")),
            ramp_len=_num(p, "ramp_len", "pulse", 0.0),
        ))

        media = raw.get("medium", []) or []
        if not isinstance(media, list):
            raise ConfigError("medium: expected a list of segments")
        segments = []
        for i, m in enumerate(media):
            path = f"medium[{i}]"
            _check_keys(m, _SCHEMA["medium"], path)
            x0 = _num(m, "x0_cm", path, required=True)
            g = _num(m, "g_ns2", path, required=True)
            t2 = m.get("t2star_ns", "sharp")
            t2star = math.inf if t2 == "sharp" else _num(m, "t2star_ns", path)
            if ("x1_cm" in m) == ("alpha_l" in m):
                raise ConfigError(f"{path}: give exactly one of x1_cm or alpha_l")
            if "x1_cm" in m:
                x1 = _num(m, "x1_cm", path)
            else:
                x1 = x0 + _num(m, "alpha_l", path) / _build(path, lambda: beer_alpha(g, t2star))
            n_det = m.get("n_detuning", 41)
            if isinstance(n_det, bool) or not isinstance(n_det, int):
                raise ConfigError(f"{path}.n_detuning: expected an integer, got {n_det!r}")
            segments.append(_build(path, lambda: MediumSegment(
                x0, x1, g, t2star, n_detuning=1 if math.isinf(t2star) else n_det,
                init_c1=_cplx(m, "init_c1", path, 0j), init_c2=_cplx(m, "init_c2", path, 1 + 0j),
                fluct_eps0=_num(m, "fluct_eps0", path, 0.0),
            )))
        for i in range(len(segments)):
            for j in range(i + 1, len(segments)):
                a, b = segments[i], segments[j]
                if a.x0 < b.x1 and b.x0 < a.x1:
                    raise ConfigError(f"medium[{i}] and medium[{j}] overlap")
        if any(segments[i].x0 > segments[i + 1].x0 for i in range(len(segments) - 1)):
            raise ConfigError("medium: segments must be listed in order of position")

        gr = raw.get("grid", {}) or {}
        _check_keys(gr, _SCHEMA["grid"], "grid")
        d_xi = _num(gr, "d_xi_ns", "grid", pulse.tau / 40)
        dx_raw = gr.get("dx_cm", "auto")
        dx = None if dx_raw == "auto" else _num(gr, "dx_cm", "grid")
        base = _build("grid", lambda: default_grid(
            pulse, segments, d_xi=d_xi,
            x_min=_num(gr, "x_min_cm", "grid"), x_max=_num(gr, "x_max_cm", "grid"),
        ))
        grid = _build("grid", lambda: SimGrid(
            _num(gr, "xi_min_ns", "grid", base.xi_min),
            _num(gr, "xi_max_ns", "grid", base.xi_max),
            d_xi, base.x_min, base.x_max, dx,
        ))

        out = raw.get("output", {}) or {}
        _check_keys(out, _SCHEMA["output"], "output")
        record = RecordRequest(
            times=tuple(float(t) for t in out.get("snapshot_times_ns", []) or []),
            stations=tuple(float(x) for x in out.get("snapshot_stations_cm", []) or []),
            track_points=int(out.get("track_points", RecordRequest().track_points)),
        )
        rn = raw.get("run", {}) or {}
        _check_keys(rn, _SCHEMA["run"], "run")
        seed = int(rn.get("seed", 0))
        threads = int(rn.get("threads", 1))
        scenario = _build("config", lambda: Scenario(pulse, tuple(segments), grid, seed, record))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return ConfigFile(scenario, raw, out.get("out_dir"), threads)


def _build(path, fn):
    try:
        return fn()
    except ConfigError:
        raise
    except (FastLightError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _float(v):
    return float(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def scenario_to_config(scn: Scenario, threads: int = 1, out_dir: str | None = None) -> dict:
    """Config tree that :func:`config_to_scenario` maps back to ``scn`` exactly."""
    p = scn.pulse
    media = []
    for s in scn.segments:
        media.append({
            "x0_cm": s.x0, "x1_cm": s.x1, "g_ns2": s.g,
            "t2star_ns": "sharp" if s.sharp else s.t2star,
            "n_detuning": s.n_detuning, "fluct_eps0": s.fluct_eps0,
            "init_c1": [s.init_c1.real, s.init_c1.imag],
            "init_c2": [s.init_c2.real, s.init_c2.imag],
        })
    g = scn.grid
    out = {
        "snapshot_times_ns": list(scn.record.times),
        "snapshot_stations_cm": list(scn.record.stations),
        "track_points": scn.record.track_points,
    }
    if out_dir is not None:
        out["out_dir"] = str(out_dir)
    return {
        "pulse": {
            "tau_ns": p.tau, "amplitude": p.amplitude, "t_peak_ns": p.t_peak,
            "trunc_halfwidth": _float(p.trunc_halfwidth), "edge": p.edge, "ramp_len": p.ramp_len,
        },
        "medium": media,
        "grid": {
            "xi_min_ns": g.xi_min, "xi_max_ns": g.xi_max, "d_xi_ns": g.d_xi,
            "x_min_cm": g.x_min, "x_max_cm": g.x_max, "dx_cm": "auto" if g.dx is None else g.dx,
        },
        "output": out,
        "run": {"seed": scn.fluct_seed, "threads": threads},
    }


def load_raw(path) -> dict:
    path = str(path)
    p = Path(path)
    if not p.exists() and path in PRESETS:
        text = resources.files("fastlight").joinpath("presets", f"{path}.yaml").read_text()
    elif p.exists():
        text = p.read_text()
    else:
        raise ConfigError(f"config file {path!r} not found (presets: {', '.join(PRESETS)})")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return raw if raw is not None else {}


def read_config(path) -> ConfigFile:
    return config_to_scenario(load_raw(path))


def parse_config(path) -> Scenario:
    return read_config(path).scenario


def set_path(raw: dict, dotted: str, value):
    """Set ``raw[a][b][...]`` from ``"a.b..."``; integer parts index lists."""
    keys = dotted.split(".")
    node = raw
    for k in keys[:-1]:
        node = node[int(k)] if isinstance(node, list) else node.setdefault(k, {})
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    return f"{v:.17g}"


def lab_csv(snap) -> str:
    lines = [LAB_HEADER]
    xr = snap.x_over_ctau
    for x, xn, om in zip(snap.x, xr, snap.omega):
        lines.append(",".join(_fmt(v) for v in (x, xn, om.real, om.imag, abs(om))))
    return "\n".join(lines) + "\n"


def retarded_csv(xi, omega, tau) -> str:
    lines = [RETARDED_HEADER]
    for s, om in zip(xi, omega):
        lines.append(",".join(_fmt(v) for v in (s, s / tau, om.real, om.imag)))
    return "\n".join(lines) + "\n"


def render_csvs(result) -> dict:
    """File name -> CSV text for every recorded snapshot."""
    tau = result.scenario.pulse.tau
    files = {}
    for i, (t, snap) in enumerate(sorted(result.lab.items())):
        files[f"lab_{i:02d}_t{t:+.6f}ns.csv"] = lab_csv(snap)
    for i, (x, row) in enumerate(sorted(result.retarded.items())):
        files[f"station_{i:02d}_x{x:+.6f}cm.csv"] = retarded_csv(result.xi, row, tau)
    files["station_exit.csv"] = retarded_csv(result.xi, result.exit_field, tau)
    return files


def _jsonable(o):
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if isinstance(o, dict):
        return {k: _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.generic):
        return _jsonable(o.item())
    return o


def write_summary(out: Path, payload: dict):
    (out / "summary.json").write_text(json.dumps(_jsonable(payload), indent=2) + "\n")


# ---------------------------------------------------------------- commands


def cmd_analytic(cfg: ConfigFile, out_dir) -> Path:
    scn = cfg.scenario
    active = [s for s in scn.segments if s.g > 0]
    if len(active) != 1:
        raise ConfigError("analytic: config must contain exactly one medium segment with g > 0")
    pulse = replace(scn.pulse, trunc_halfwidth=math.inf, edge="hard", ramp_len=0.0)
    an = _build("analytic", lambda: AnalyticScenario(pulse, active[0]))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x = np.linspace(scn.grid.x_min, scn.grid.x_max, scn.record.track_points)
    for i, t in enumerate(scn.record.times):
        (out / f"lab_{i:02d}_t{t:+.6f}ns.csv").write_text(lab_csv(analytic_snapshot(an, t, x)))
    summary = {
        "vg_over_c": an.vg_over_c,
        "one_minus_c_over_vg": an.one_minus_c_over_vg,
        "phi0_ns": an.phi0,
        "phi1_ns": an.phi1,
        "advance_tau": dg.peak_advance(an),
        "alpha_per_cm": None if active[0].sharp else beer_alpha(active[0].g, active[0].t2star),
        "config_echo": scenario_to_config(scn, cfg.threads),
        "version": __version__,
    }
    write_summary(out, summary)
    return out


def simulate(scn: Scenario, threads: int = 1):
    result = run(scn, threads=threads)
    analytic = None
    try:
        analytic = dg.analytic_counterpart(scn)
    except FastLightError:
        pass
    result.metrics = dg.compute_metrics(result, analytic)
    return result


def cmd_simulate(cfg: ConfigFile, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = simulate(cfg.scenario, cfg.threads)
    for name, text in render_csvs(result).items():
        (out / name).write_text(text)
    payload = result.metrics.to_dict()
    payload.update(
        config_echo=scenario_to_config(cfg.scenario, cfg.threads),
        seed=result.seed,
        version=__version__,
    )
    write_summary(out, payload)
    return out


def sweep_rows(scn: Scenario, param_path: str, values, threads: int = 1, out_dir=None) -> list[dict]:
    """One summary row per parameter value; runs concurrently when ``threads > 1``."""
    base = scenario_to_config(scn)

    def one(i, v):
        raw = copy.deepcopy(base)
        set_path(raw, param_path, v)
        row = {"value": v, "advance_tau": None, "area_out": None, "max_trailing_amp": None}
        try:
            cfg = config_to_scenario(raw)
            result = simulate(cfg.scenario)
        except ConfigError as exc:
            return {**row, "status": f"config_error: {exc}"}
        except WindowOverflowError:
            return {**row, "status": "window_overflow"}
        except NumericalFailure:
            return {**row, "status": "numerical_failure"}
        m = result.metrics
        if out_dir is not None:
            sub = Path(out_dir) / f"run_{i:03d}"
            sub.mkdir(parents=True, exist_ok=True)
            for name, text in render_csvs(result).items():
                (sub / name).write_text(text)
            payload = m.to_dict()
            payload.update(config_echo=raw, seed=result.seed, version=__version__)
            write_summary(sub, payload)
        return {
            **row,
            "advance_tau": m.advance_tau,
            "area_out": m.area_out,
            "max_trailing_amp": m.ringing.max_trailing_amp if m.ringing else None,
            "status": "ok",
        }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(len(values)), values))
    return [one(i, v) for i, v in enumerate(values)]


def cmd_sweep(cfg: ConfigFile, param_path: str, values, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep_rows(cfg.scenario, param_path, values, cfg.threads, out)
    lines = ["value,advance_tau,area_out,max_trailing_amp,status"]
    for r in rows:
        cells = [r["value"], r["advance_tau"], r["area_out"], r["max_trailing_amp"]]
        lines.append(",".join("" if c is None else _fmt(c) for c in cells) + f",{r['status']}")
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return out


def verify_config(cfg: ConfigFile) -> list:
    """Property checks on one configured run (conservation, causality, determinism)."""
    from . import acceptance as acc

    scn = cfg.scenario
    r1 = simulate(scn, cfg.threads)
    r2 = simulate(scn, cfg.threads)
    eps_free = all(s.fluct_eps0 == 0 for s in scn.segments)
    checks = acc.check_properties(r1, "config run", reality=eps_free)
    checks.append(acc.check_determinism(
        "".join(render_csvs(r1).values()).encode(), "".join(render_csvs(r2).values()).encode()
    ))
    if not any(s.g > 0 for s in scn.segments):
        err = float(np.max(np.abs(r1.exit_field - r1.input_field), initial=0.0))
        checks.append(acc.Check("vacuum exit equals input", "0", err, "exact", err == 0.0))
    return checks


def cmd_verify(out_dir, cfg: ConfigFile | None = None, quick: bool = True) -> int:
    from . import acceptance as acc

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg is None:
        checks = acc.run_all(quick=quick, progress=log.info)
    else:
        checks = [acc.check_beer(), *acc.check_group_velocity(), *acc.check_analytic_advance()]
        checks += verify_config(cfg)
    report = [c.line() for c in checks]
    (out / "verify_report.txt").write_text("\n".join(report) + "\n")
    (out / "verify_report.json").write_text(json.dumps(
        _jsonable([c.__dict__ for c in checks]), indent=2, default=str) + "\n")
    for line in report:
        print(line)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fastlight", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=["analytic", "simulate", "verify", "sweep"])
    ap.add_argument("--config", help="YAML config file or bundled preset name")
    ap.add_argument("--out", help="output directory (default: output.out_dir or ./out)")
    ap.add_argument("--seed", type=int, help="override run.seed")
    ap.add_argument("--threads", type=int, help="override run.threads")
    ap.add_argument("--param", help="dotted config path to sweep, e.g. medium.0.fluct_eps0")
    ap.add_argument("--values", help="comma-separated sweep values")
    ap.add_argument("--full", action="store_true", help="verify at full acceptance resolution")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _parse_values(text: str):
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            vals.append(int(tok))
        except ValueError:
            vals.append(float(tok))
    return vals


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "verify" else logging.WARNING,
                        format="%(message)s")
    try:
        cfg = None
        if args.config:
            raw = load_raw(args.config)
            if args.seed is not None:
                set_path(raw, "run.seed", args.seed)
            if args.threads is not None:
                set_path(raw, "run.threads", args.threads)
            cfg = config_to_scenario(raw)
        elif args.command != "verify":
            raise ConfigError("--config is required")
        out_dir = args.out or (cfg.out_dir if cfg and cfg.out_dir else "out")

        if args.command == "analytic":
            cmd_analytic(cfg, out_dir)
        elif args.command == "simulate":
            cmd_simulate(cfg, out_dir)
        elif args.command == "sweep":
            if not args.param or not args.values:
                raise ConfigError("sweep needs --param and --values")
            cmd_sweep(cfg, args.param, _parse_values(args.values), out_dir)
        else:
            return cmd_verify(out_dir, cfg, quick=not args.full)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, WindowOverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

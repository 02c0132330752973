"""``chsh-lab`` command-line front end.

Commands: quantum, lhv, sweep, optimize, audit. Output is CSV (default) or
JSON, on stdout unless ``--out`` is given. Output contains no timestamps, so
identical configurations give identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import audit, eprb, lhv, operators
from .linalg import hermitian_eigensystem
from .operators import STANDARD_PLANAR_DEG, AngleConfig
from .optimize import MIN_RESOLUTION, optimize_angles

COMMANDS = ("quantum", "lhv", "sweep", "optimize", "audit")
FORMATS = ("csv", "json")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INVARIANT = 4


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str = "audit"
    # (theta, phi) in degrees for a, a', b, b'; phi = 0 is the x-z plane
    angles: tuple[tuple[float, float], ...] = tuple((t, 0.0) for t in STANDARD_PLANAR_DEG)
    model: str = "sphere-sign"
    n_pairs: int = 100_000
    reps: int = 10
    seed: int = 42
    output_path: Optional[str] = None
    format: str = "csv"
    n_values: tuple[int, ...] = (100, 1000, 10000)
    resolution: int = MIN_RESOLUTION
    workers: int = 1

    @property
    def angle_config(self) -> AngleConfig:
        return AngleConfig.spherical(self.angles)


_FIELDS = {f.name for f in fields(RunConfig)}


# -- parsing ------------------------------------------------------------------


def parse_angles(text: str) -> tuple[tuple[float, float], ...]:
    """``A,A',B,B'`` (planar degrees) or ``t:p,t:p,t:p,t:p`` (spherical degrees)."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 4:
        raise UsageError(f"malformed angles {text!r}: expected four comma-separated values")
    out = []
    for p in parts:
        bits = p.split(":")
        if len(bits) > 2:
            raise UsageError(f"malformed angle {p!r}: use THETA or THETA:PHI")
        try:
            theta = float(bits[0])
            phi = float(bits[1]) if len(bits) == 2 else 0.0
        except ValueError:
            raise UsageError(f"malformed angle {p!r}: not a number") from None
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise UsageError(f"malformed angle {p!r}: not finite")
        out.append((theta, phi))
    return tuple(out)


def _angles_from_json(value) -> tuple[tuple[float, float], ...]:
    if isinstance(value, str):
        return parse_angles(value)
    if isinstance(value, list) and len(value) == 4:
        text = ",".join(f"{a[0]!r}:{a[1]!r}" if isinstance(a, list) and len(a) == 2 else repr(a) for a in value)
        return parse_angles(text)
    raise UsageError(f"malformed angles in config file: {value!r}")


def render_angles(angles: Sequence[tuple[float, float]]) -> str:
    if all(p == 0.0 for _, p in angles):
        return ",".join(repr(float(t)) for t, _ in angles)
    return ",".join(f"{float(t)!r}:{float(p)!r}" for t, p in angles)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"malformed integer list {text!r}") from None
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chsh-lab", description="CHSH quantum and local hidden-variable laboratory.")
    p.add_argument("command", nargs="?", default=None, help=f"one of {', '.join(COMMANDS)} (default audit)")
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--angles", help="A,A',B,B' in degrees (x-z plane), or THETA:PHI per setting")
    p.add_argument("--model", help="hidden-variable model name")
    p.add_argument("--n", dest="n_pairs", type=int, help="pairs per ensemble")
    p.add_argument("--reps", type=int, help="repetitions per N in sweeps")
    p.add_argument("--seed", type=int, help="64-bit unsigned seed")
    p.add_argument("--out", dest="output_path", help="output file (default stdout)")
    p.add_argument("--format", choices=FORMATS, help="csv or json")
    p.add_argument("--n-values", dest="n_values", help="comma-separated ensemble sizes for sweep")
    p.add_argument("--resolution", type=int, help="grid points per angle for optimize")
    p.add_argument("--workers", type=int, help="worker threads (results do not depend on it)")
    return p


def _load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path!r} is not valid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path!r} must hold a JSON object")
    unknown = set(data) - _FIELDS
    if unknown:
        raise UsageError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    out = dict(data)
    if "angles" in out:
        out["angles"] = _angles_from_json(out["angles"])
    if "n_values" in out:
        nv = out["n_values"]
        out["n_values"] = _int_list(nv) if isinstance(nv, str) else tuple(int(x) for x in nv)
    return out


def _validate(cfg: RunConfig) -> RunConfig:
    if cfg.command not in COMMANDS:
        raise UsageError(f"unknown command {cfg.command!r}; choose from {', '.join(COMMANDS)}")
    if cfg.format not in FORMATS:
        raise UsageError(f"unknown format {cfg.format!r}")
    try:
        cfg.angle_config
    except ValueError as exc:
        raise UsageError(f"malformed angles: {exc}") from None
    try:
        lhv.get_model(cfg.model)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    for name in ("n_pairs", "reps", "seed", "resolution", "workers"):
        value = getattr(cfg, name)
        if not isinstance(value, int) or isinstance(value, bool):
            raise UsageError(f"{name} must be an integer, got {value!r}")
    if cfg.n_pairs < 1:
        raise UsageError(f"invalid n: must be >= 1, got {cfg.n_pairs}")
    if cfg.reps < 2:
        raise UsageError(f"invalid reps: must be >= 2, got {cfg.reps}")
    if not 0 <= cfg.seed <= lhv.SEED_MASK:
        raise UsageError(f"invalid seed: must fit in 64 unsigned bits, got {cfg.seed}")
    if cfg.resolution < MIN_RESOLUTION:
        raise UsageError(f"invalid resolution: must be >= {MIN_RESOLUTION}, got {cfg.resolution}")
    if cfg.workers < 1:
        raise UsageError(f"invalid workers: must be >= 1, got {cfg.workers}")
    if not cfg.n_values or any(n < 1 for n in cfg.n_values):
        raise UsageError(f"invalid n-values: {cfg.n_values}")
    if cfg.output_path is not None:
        suffix = Path(cfg.output_path).suffix.lower().lstrip(".")
        if not cfg.output_path:
            raise UsageError("output path must not be empty")
        if suffix in FORMATS and suffix != cfg.format:
            raise UsageError(f"conflicting flags: --format {cfg.format} but --out ends in .{suffix}")
    return cfg


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    ns = build_parser().parse_args(list(sys.argv[1:] if argv is None else argv))
    values: dict = {}
    if ns.config:
        values.update(_load_config_file(ns.config))
    flags = {
        "command": ns.command,
        "model": ns.model,
        "n_pairs": ns.n_pairs,
        "reps": ns.reps,
        "seed": ns.seed,
        "output_path": ns.output_path,
        "format": ns.format,
        "resolution": ns.resolution,
        "workers": ns.workers,
        "angles": parse_angles(ns.angles) if ns.angles is not None else None,
        "n_values": _int_list(ns.n_values) if ns.n_values is not None else None,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    suffix = Path(values.get("output_path") or "").suffix.lower().lstrip(".")
    if "format" not in values and suffix in FORMATS:
        values["format"] = suffix
    if "angles" in values:
        values["angles"] = tuple((float(t), float(p)) for t, p in values["angles"])
    if values.get("n_values") is not None:
        values["n_values"] = tuple(int(n) for n in values["n_values"])
    return _validate(replace(RunConfig(), **values))


def render_config(cfg: RunConfig) -> list[str]:
    """argv that ``parse_config`` maps back to ``cfg``."""
    argv = [
        cfg.command,
        # joined form, so a leading minus is not mistaken for an option
        f"--angles={render_angles(cfg.angles)}",
        "--model", cfg.model,
        "--n", str(cfg.n_pairs),
        "--reps", str(cfg.reps),
        "--seed", str(cfg.seed),
        "--format", cfg.format,
        "--n-values", ",".join(str(n) for n in cfg.n_values),
        "--resolution", str(cfg.resolution),
        "--workers", str(cfg.workers),
    ]
    if cfg.output_path is not None:
        argv += ["--out", cfg.output_path]
    return argv


# -- output -------------------------------------------------------------------


def format_number(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".15g")
    return str(x)


def _json_value(x):
    if isinstance(x, float):
        return x if not math.isfinite(x) else float(format(x, ".15g"))
    return x


def render(columns: Sequence[str], rows: Sequence[dict], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(row[c]) for c in columns])
        return buf.getvalue()
    records = [{c: _json_value(row[c]) for c in columns} for row in rows]
    return json.dumps(records, indent=2, allow_nan=False) + "\n"


def _histogram_text(hist) -> str:
    return ";".join(f"{k}:{v}" for k, v in sorted(hist.items()))


# -- commands -----------------------------------------------------------------


def run_quantum(cfg: RunConfig):
    ac = cfg.angle_config
    rows = []
    names = ("E(a,b)", "E(a,b')", "E(a',b)", "E(a',b')")
    for name, (_, u, v) in zip(names, ac.terms()):
        rows.append({"quantity": name, "value": eprb.correlation_E(u, v)})
    rows.append({"quantity": "s_weak_quantum", "value": operators.s_weak_quantum(ac)})
    rows.append({"quantity": "s_strong_expectation", "value": operators.s_strong_quantum(ac)})
    evals, _ = hermitian_eigensystem(operators.bell_operator_strong(ac))
    for k, lam in enumerate(evals, start=1):
        rows.append({"quantity": f"bell_eigenvalue_{k}", "value": float(lam) + 0.0})
    return ("quantity", "value"), rows


def run_lhv(cfg: RunConfig):
    model = lhv.get_model(cfg.model)
    ac = cfg.angle_config
    rows = []
    if model.counterfactual:
        est = lhv.s_strong(lhv.sample_ensemble(model, cfg.n_pairs, cfg.seed, workers=cfg.workers), model, ac)
        rows.append({"estimator": "s_strong", "value": est.value, "n_pairs": est.n_pairs, "dof_note": est.dof_note, "histogram": _histogram_text(est.per_term_histogram)})
    est = lhv.s_weak_lhv(lhv.weak_ensembles(model, cfg.n_pairs, cfg.seed, workers=cfg.workers), model, ac)
    rows.append({"estimator": "s_weak", "value": est.value, "n_pairs": est.n_pairs, "dof_note": est.dof_note, "histogram": _histogram_text(est.per_term_histogram)})
    return ("estimator", "value", "n_pairs", "dof_note", "histogram"), rows


def run_sweep(cfg: RunConfig):
    model = lhv.get_model(cfg.model)
    table = lhv.convergence_sweep(model, cfg.angle_config, cfg.n_values, cfg.reps, cfg.seed, workers=cfg.workers)
    return ("n", "mean_s_weak", "max_s_weak", "stddev"), [asdict(r) for r in table]


def run_optimize(cfg: RunConfig):
    res = optimize_angles("s_weak_quantum", cfg.resolution, workers=cfg.workers)
    a, ap, b, bp = res.angles_deg
    row = {"a": a, "a_prime": ap, "b": b, "b_prime": bp, "value": res.value, "grid_value": res.grid_value}
    return ("a", "a_prime", "b", "b_prime", "value", "grid_value"), [row]


def run_audit_command(cfg: RunConfig):
    settings = audit.AuditSettings(
        n_pairs=cfg.n_pairs, reps=cfg.reps, seed=cfg.seed, n_values=cfg.n_values, resolution=cfg.resolution, workers=cfg.workers
    )
    report = audit.run_audit(settings)
    return audit.AUDIT_COLUMNS, audit.claim_rows(report), report


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    status = EXIT_OK
    try:
        if cfg.command == "audit":
            columns, rows, report = run_audit_command(cfg)
            if report.refuted:
                status = EXIT_INVARIANT
        else:
            handler = {"quantum": run_quantum, "lhv": run_lhv, "sweep": run_sweep, "optimize": run_optimize}[cfg.command]
            columns, rows = handler(cfg)
    except lhv.InvariantViolation as exc:
        print(f"chsh-lab: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    text = render(columns, rows, cfg.format)
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"chsh-lab: cannot write {cfg.output_path!r}: {exc.strerror}", file=sys.stderr)
            return EXIT_IO
    else:
        stdout.write(text)
    if status == EXIT_INVARIANT:
        ids = ", ".join(c.claim_id for c in report.refuted)
        print(f"chsh-lab: audit refuted claim(s): {ids}", file=sys.stderr)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"chsh-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

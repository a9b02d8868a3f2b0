"""Command-line entry points.

Subcommands::

    msns simulate <config>
    msns spectrum <config>
    msns dispersion <config>
    msns check-compat <config> <state-file>
    msns check-exponents --p P --q Q

Each subcommand writes its outputs plus ``manifest.json`` into
``<root>/<command>/`` where ``root`` is ``outputs.dir`` from the config (or
``out``), overridden by the ``MSNS_OUTPUT_DIR`` environment variable.
Exit codes: 0 success, 1 validation error or failed check, 2 solver failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULTS, RunConfig, load_config
from .coupled import check_compatibility, simulate
from .diagnostics import admissible_exponents
from .errors import MsnsError, ValidationError
from .io import RunManifest, config_hash, write_eigenvalues, write_json, write_series, write_snapshots
from .spectral import ms_dispersion, ms_eigenvalues, spectrum, verify_spectrum
from .state import State
from .svg import emit_svg

__all__ = ["run_cli", "main"]

log = logging.getLogger("msns")


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 and show the config schema
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n\nconfiguration schema (defaults):\n")
        sys.stderr.write(json.dumps(DEFAULTS, indent=2) + "\n")
        raise SystemExit(1)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="msns", description="Two-phase capillary flow simulator and spectrum analyzer.")
    p.add_argument("--version", action="version", version=f"msns {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (
        ("simulate", "run the nonlinear evolution"),
        ("spectrum", "eigenvalues of the linearization and structural checks"),
        ("dispersion", "decoupled interface rates against the analytic dispersion relation"),
    ):
        s = sub.add_parser(name, help=text)
        s.add_argument("config", help="JSON configuration file")
    s = sub.add_parser("check-compat", help="check initial-data compatibility")
    s.add_argument("config")
    s.add_argument("state_file", help="JSON state record (last line is used for JSON lines)")
    s = sub.add_parser("check-exponents", help="admissible r for given (p, q)")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--q", type=float, required=True)
    return p


def _out_dir(command: str, cfg: RunConfig | None) -> Path:
    root = os.environ.get("MSNS_OUTPUT_DIR") or (cfg.outputs["dir"] if cfg else "out")
    path = Path(root) / command
    path.mkdir(parents=True, exist_ok=True)
    return path


def _manifest(command: str, cfg: RunConfig | None, extra: dict | None = None) -> RunManifest:
    doc = cfg.to_dict() if cfg else {}
    if extra:
        doc = {**doc, "args": extra}
    return RunManifest(command, doc, __version__, config_hash(doc))


def _cmd_simulate(args, out: Path, man: RunManifest, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    res = simulate(cfg.sim, h0=cfg.initial_state().h)
    man.timings["simulate_s"] = time.perf_counter() - t0
    man.add(write_series(res.series, out / "series.csv"))
    if res.snapshots:
        man.add(write_snapshots(res.snapshots, out / "snapshots.jsonl"))
    summary = {
        "steps": len(res.iterations),
        "mean_iterations": float(np.mean(res.iterations)) if res.iterations else 0.0,
        "final_max_h": float(np.max(np.abs(res.final.h))),
        "final_E": res.series.records[-1].E,
    }
    man.add(write_json(summary, out / "summary.json"))
    if cfg.outputs["svg"]:
        man.add(emit_svg(res.final, "height-profile", out / "height.svg"))
        base = cfg.params.sigma * cfg.grid.domain.width
        excess = res.series.column("E") - base
        man.add(emit_svg(res.series, "energy-decay", out / "energy.svg", baseline=base, log=bool(np.all(excess > 0))))
    print(f"simulate: {summary['steps']} steps, max|h| = {summary['final_max_h']:.6e}")
    return 0


def _cmd_spectrum(args, out: Path, man: RunManifest, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    res = spectrum(cfg.params, cfg.grid)
    man.timings["eigen_s"] = time.perf_counter() - t0
    rep = verify_spectrum(res)
    man.timings["verify_s"] = time.perf_counter() - t0 - man.timings["eigen_s"]
    man.add(write_eigenvalues(res.eigenvalues, out / "eigenvalues.csv"))
    report = {
        "passed": rep.passed,
        "checks": rep.checks,
        "details": rep.details,
        "gap": res.gap,
        "zero_tol": res.zero_tol,
        "n_eigenvalues": int(res.eigenvalues.size),
    }
    man.add(write_json(report, out / "report.json"))
    if cfg.outputs["svg"]:
        man.add(emit_svg(res, "spectrum-scatter", out / "spectrum.svg"))
    print(rep)
    print(f"gap = {res.gap:.6g}")
    return 0 if rep.passed else 1


def _cmd_dispersion(args, out: Path, man: RunManifest, cfg: RunConfig) -> int:
    g, P = cfg.grid, cfg.params
    lam = np.sort(-ms_eigenvalues(P, g).real)
    lam = lam[lam > 1e-8 * lam[-1]]
    rows = []
    for m, val in enumerate(lam[: g.nx // 2], start=1):
        k = m * np.pi / g.domain.width
        ex = ms_dispersion(k, P, g.domain)
        rows.append((m, k, ex, float(val), abs(val - ex) / ex))
    path = out / "dispersion.csv"
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("mode,k,lambda_exact,lambda_discrete,rel_err\n")
        for m, k, ex, val, err in rows:
            fh.write(f"{m},{k:.17g},{ex:.17g},{val:.17g},{err:.17g}\n")
    man.add(path)
    for m, _, ex, val, err in rows[:5]:
        print(f"mode {m}: exact {ex:.6g} discrete {val:.6g} rel err {err:.2e}")
    return 0


def _read_state(path: Path, cfg: RunConfig) -> State:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read state file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        # JSON lines (snapshot file): take the last record
        lines = [ln for ln in text.splitlines() if ln.strip()]
        try:
            data = json.loads(lines[-1])
        except (json.JSONDecodeError, IndexError) as exc:
            raise ValidationError(f"{path}: invalid JSON state ({exc})") from exc
    if not isinstance(data, dict) or "h" not in data:
        raise ValidationError(f"{path}: state record must be an object with at least 'h'")
    return State.from_dict(cfg.grid, data)


def _cmd_check_compat(args, out: Path, man: RunManifest, cfg: RunConfig) -> int:
    st = _read_state(Path(args.state_file), cfg)
    rep = check_compatibility(st, st.h, cfg.params, cfg.grid)
    man.add(write_json({"passed": rep.passed, "failed": rep.failed, "residuals": rep.residuals,
                        "tolerances": rep.tolerances}, out / "compat.json"))
    print(rep)
    print(f"compatible={str(rep.passed).lower()}")
    return 0 if rep.passed else 1


def _cmd_check_exponents(args, out: Path, man: RunManifest, cfg) -> int:
    ex = admissible_exponents(args.p, args.q)
    man.add(write_json({"p": ex.p, "q": ex.q, "r_lower": ex.r_lower, "r_upper": ex.r_upper,
                        "admissible": ex.admissible, "pq_admissible": ex.pq_admissible}, out / "exponents.json"))
    print(f"r interval ({ex.r_lower:g}, {ex.r_upper:.4f}]")
    print(f"admissible={str(ex.admissible).lower()}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "spectrum": _cmd_spectrum,
    "dispersion": _cmd_dispersion,
    "check-compat": _cmd_check_compat,
    "check-exponents": _cmd_check_exponents,
}


def run_cli(argv=None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code."""
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = None
    try:
        if hasattr(args, "config"):
            cfg = load_config(args.config)
        extra = {"p": args.p, "q": args.q} if args.command == "check-exponents" else None
        out = _out_dir(args.command, cfg)
        man = _manifest(args.command, cfg, extra)
        t0 = time.perf_counter()
        code = _COMMANDS[args.command](args, out, man, cfg)
        man.timings["total_s"] = time.perf_counter() - t0
        man.status = "ok" if code == 0 else "check failed"
        man.write(out / "manifest.json")
        return code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MsnsError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())

"""Configuration-driven command-line front end.

Exit-code contract: 0 success, 2 config error, 3 numeric assertion failure,
4 fit failure.  The default output directory comes from ``--out``, falling
back to the ``DIRACLAB_OUT`` environment variable and then the config.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import reporting
from .config import (
    RunConfig,
    beta_grid_from_config,
    lattice_from_config,
    load_config,
    model_from_config,
    region_from_config,
)
from .errors import (
    CheckFailure,
    ConfigError,
    DiracLabError,
    FitError,
    RescalingError,
    ZeroModeError,
)
from .model import positive_projector
from .nuclearity import (
    beta0_rescaling,
    nuclearity_scan,
    rescaling_check,
    resolvent_trace_scan,
)
from .quasiequiv import refinement_series, seeded_instances
from .reporting import RunManifest
from .verify import run_suites

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3
EXIT_FIT = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diraclab",
        description="Trace-norm, determinant-bound and quasiequivalence scans "
                    "for quasifree states of a lattice Dirac field.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("model-info", "print model dimensions, spectral gap and extremes"),
        ("nuclearity-scan", "trace norms and determinant bounds over a beta grid"),
        ("resolvent-scan", "smoothed localized resolvent trace norms over a beta grid"),
        ("rescale-check", "singular-value identity and beta0 scaling under rescaling"),
        ("quasiequiv", "ground state vs smooth perturbation across refinements"),
        ("factor-check", "real-subspace intersection diagnostics on seeded instances"),
        ("verify", "run the seeded verification suites"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to a TOML run configuration")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--parallel", action="store_true",
                         help="evaluate beta-grid points concurrently")
        cmd.add_argument("--format", choices=("csv", "json", "both"), default=None,
                         help="override output formats")
    return parser


def _out_dir(args, cfg: RunConfig) -> Path:
    if args.out:
        base = args.out
    else:
        base = os.environ.get("DIRACLAB_OUT") or cfg.output.directory
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _formats(args, cfg: RunConfig) -> tuple:
    if args.format == "both":
        return ("csv", "json")
    if args.format:
        return (args.format,)
    return cfg.output.formats


def _emit(manifest: RunManifest, out: Path, stem: str, formats, table=None, payload=None):
    if "csv" in formats and table is not None:
        header, rows = table
        reporting.write_csv(manifest.record(out / f"{stem}.csv"), header, rows)
    if "json" in formats and payload is not None:
        reporting.write_json(manifest.record(out / f"{stem}.json"), payload)


def cmd_model_info(cfg: RunConfig, args) -> int:
    model = model_from_config(cfg)
    state = positive_projector(model, cfg.model.zero_mode_policy)
    gap = model.spectral_gap
    m0 = model.m0
    print(f"one-particle dimension: {model.dim}")
    print(f"eigenvalue extremes: [{model.eigenvalues.min():.6g}, {model.eigenvalues.max():.6g}]")
    print(f"spectral gap |lambda|_min: {gap:.6g}")
    print(f"m0 = v0 * m: {m0:.6g}")
    shift = gap**2 - m0**2
    if shift >= -1e-12 * max(m0**2, 1.0):
        verdict = ">= m0^2 within roundoff"
    else:
        verdict = "below m0^2: discretization shift"
    print(f"gap^2 - m0^2: {shift:.6g} ({verdict})")
    print(f"ground state pure: {state.is_pure}, gapped: {state.gapped}")
    return EXIT_OK


def cmd_nuclearity_scan(cfg: RunConfig, args, out: Path, manifest: RunManifest) -> int:
    model = model_from_config(cfg)
    region = region_from_config(cfg, model.lattice)
    betas = beta_grid_from_config(cfg)
    workers = os.cpu_count() or 1 if args.parallel else 1
    report = nuclearity_scan(model, region, betas, cfg.scan.p, workers=workers)
    if report.degenerate:
        print("warning: region is empty or degenerate; all norms vanish, no fit",
              file=sys.stderr)
        manifest.notes.append("degenerate region: fit skipped")
    _emit(manifest, out, "nuclearity", _formats(args, cfg),
          reporting.nuclearity_table(report), reporting.nuclearity_payload(report))
    if report.violations:
        for v in report.violations:
            print(f"invariant violated: {v}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_resolvent_scan(cfg: RunConfig, args, out: Path, manifest: RunManifest) -> int:
    model = model_from_config(cfg)
    region = region_from_config(cfg, model.lattice)
    if region.chi is None:
        region = region.with_smooth_chi(max(cfg.region.chi_falloff, 1))
    betas = beta_grid_from_config(cfg)
    report = resolvent_trace_scan(model, region, betas, cfg.scan.s_power)
    _emit(manifest, out, "resolvent", _formats(args, cfg),
          reporting.resolvent_table(report), reporting.resolvent_payload(report))
    print(f"fitted log-log slope over window: {report.slope:.4f} "
          f"(window points: {int(report.window.sum())})")
    print(f"sup over grid of beta^{report.s_power} * norm: {report.c_sup:.6g}")
    return EXIT_OK


def cmd_rescale_check(cfg: RunConfig, args, out: Path, manifest: RunManifest) -> int:
    model = model_from_config(cfg)
    region = region_from_config(cfg, model.lattice)
    betas = beta_grid_from_config(cfg)
    mid_beta = float(np.sqrt(betas[0] * betas[-1]))
    identity_reports = []
    beta0_reports = []
    for lam in cfg.check.lambdas:
        identity_reports.append(rescaling_check(model, region, mid_beta, lam))
        beta0_reports.append(beta0_rescaling(model, region, betas, lam, p_values=(1.0,)))
    _emit(manifest, out, "rescale", _formats(args, cfg),
          reporting.rescale_table(identity_reports, beta0_reports),
          {"identity": [vars(r) for r in identity_reports],
           "beta0": [{"lambda": r.lam, "beta0_base": r.beta0_base,
                      "beta0_rescaled": r.beta0_rescaled, "ratio": r.ratio}
                     for r in beta0_reports]})
    for rep, b0 in zip(identity_reports, beta0_reports):
        print(f"lambda={rep.lam:g}: max singular-value deviation {rep.max_singval_deviation:.3e}, "
              f"beta0 ratio {b0.ratio:.4f}")
    return EXIT_OK


def cmd_quasiequiv(cfg: RunConfig, args, out: Path, manifest: RunManifest) -> int:
    lattice = lattice_from_config(cfg)
    region = region_from_config(cfg, lattice)
    fraction = region.fraction if not region.is_empty else 0.5
    reports = refinement_series(
        sizes=cfg.check.sizes,
        spacing=cfg.model.spacing,
        mass=cfg.model.mass,
        region_fraction=fraction,
        rank=cfg.check.rank,
        decay=cfg.check.decay,
        scale=cfg.check.scale,
    )
    _emit(manifest, out, "quasiequiv", _formats(args, cfg),
          reporting.quasiequiv_table(reports),
          {"rows": [vars(r) | {"slack": r.ps_inequality_slack} for r in reports]})
    distances = [r.trace_distance for r in reports]
    print(f"trace distances across refinements: {[f'{d:.6g}' for d in distances]}")
    return EXIT_OK


def cmd_factor_check(cfg: RunConfig, args, out: Path, manifest: RunManifest, seed: int) -> int:
    instances = seeded_instances(seed, cfg.check.factor_instances,
                                 spacing=cfg.model.spacing)
    rows = []
    failures = 0
    for inst in instances:
        failures += 0 if inst.report.trivial_intersection else 1
        rows.append([inst.index, inst.n_sites, inst.mass, inst.beta, inst.region_sites,
                     inst.report.intersection_dim, inst.report.min_angle])
    header = ["instance", "n_sites", "mass", "beta_thermal", "region_sites",
              "intersection_dim", "min_angle"]
    _emit(manifest, out, "factor", _formats(args, cfg), (header, rows),
          {"rows": [dict(zip(header, row)) for row in rows]})
    print(f"{len(rows) - failures}/{len(rows)} instances with trivial intersection")
    return EXIT_OK if failures == 0 else EXIT_CHECK


def cmd_verify(cfg: RunConfig, args, out: Path, manifest: RunManifest, seed: int) -> int:
    results = run_suites(cfg, seed=seed)
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name}: {status} ({res.detail})")
    _emit(manifest, out, "verify", _formats(args, cfg), reporting.verify_table(results),
          {"results": [vars(r) for r in results], "seed": seed})
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    seed = cfg.output.seed if args.seed is None else args.seed
    if args.command == "model-info":
        try:
            return cmd_model_info(cfg, args)
        except ZeroModeError as exc:
            print(f"zero-mode error: {exc}", file=sys.stderr)
            return EXIT_CHECK
        except DiracLabError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CHECK

    out = _out_dir(args, cfg)
    manifest = RunManifest(command=args.command, config_hash=cfg.source_hash, seed=seed)
    try:
        if args.command == "nuclearity-scan":
            code = cmd_nuclearity_scan(cfg, args, out, manifest)
        elif args.command == "resolvent-scan":
            code = cmd_resolvent_scan(cfg, args, out, manifest)
        elif args.command == "rescale-check":
            code = cmd_rescale_check(cfg, args, out, manifest)
        elif args.command == "quasiequiv":
            code = cmd_quasiequiv(cfg, args, out, manifest)
        elif args.command == "factor-check":
            code = cmd_factor_check(cfg, args, out, manifest, seed)
        elif args.command == "verify":
            code = cmd_verify(cfg, args, out, manifest, seed)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        manifest.notes.append(f"partial outputs: fit failed ({exc})")
        code = EXIT_FIT
    except (CheckFailure, RescalingError, ZeroModeError) as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        code = EXIT_CHECK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    manifest.exit_status = code
    manifest.save(out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line entry point: ``ppcm <subcommand> [--key value ...]``.

Every key of :class:`ppcm.config.RunConfig` is accepted as a flag and
overrides ``--config``. Each run writes its CSV tables and a
``manifest.json`` into ``--out``; ``ppcm replay MANIFEST`` re-runs the
recorded command and compares digests.

Exit status: 0 success, 2 configuration error, 3 numerical or domain
error, 4 failed check (oracle mismatch or replay digest mismatch).
"""
from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
import tempfile
from dataclasses import fields
from pathlib import Path

from . import phase_model as pm
from . import sweep_lab as sl
from .config import RunConfig, parse_config, parse_flag, resolve
from .errors import ConfigError, DomainError, PPCMError, SchemaError
from .estimators import estimate_prob, fit_epsilon_sweep, invert_small_g, mle_g
from .fock_oracle import fisher_chain_check, oracle_check, qfi_adjudication
from .shot_simulator import NoiseParams, OverlapParams, ShotRecord, run_repetitions
from .tables import digest_file, emit_table, read_table, write_manifest

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4
CONFIG_KEYS = [f.name for f in fields(RunConfig)]
FISHER_CHAIN_RTOL = 1e-4


def _base(cfg: RunConfig) -> pm.ModelParams:
    return pm.ModelParams(cfg.theta_i, cfg.theta_f, cfg.epsilon, cfg.g, cfg.n, cfg.kappa)


def _noise(cfg: RunConfig) -> NoiseParams:
    return NoiseParams(cfg.bg_fraction, cfg.bg_prob)


# --------------------------------------------------------------------------
# subcommands; each returns ({file name: rows, schema}, stdout lines)
# --------------------------------------------------------------------------

def run_model(cfg, seed, args):
    p = _base(cfg)
    if args["quantity"] == "pd":
        pair = pm.accepted_probability(p)
        ev = pm.evaluate(p.theta_i, p.theta_f, p.epsilon, p.g, p.n, p.kappa)
        vals = [("p_d", pair.p_d), ("p_r", pair.p_r), ("sensitivity", pm.sensitivity(p)),
                ("fringe_phase", float(ev.fringe_phase)), ("log_envelope", float(ev.log_envelope))]
    elif args["quantity"] == "fi":
        f = pm.fisher_projective(p)
        vals = [("f_p", f), ("log10_f_p", pm.log_fisher_projective(p) / math.log(10.0)),
                ("sensitivity", pm.sensitivity(p)),
                ("cramer_rao_per_event", pm.cramer_rao(f) if f > 0 else math.inf)]
    else:
        q = pm.quantum_fisher_joint(p.theta_i, p.n, p.kappa)
        b = pm.fisher_budget_small_g(p.n, p.epsilon, p.kappa)
        vals = [("qfi_as_printed", q.as_printed), ("qfi_generator_variance", q.generator_variance),
                ("budget_f_p", b.f_p), ("budget_pd_qd", b.pd_qd), ("budget_pr_qr", b.pr_qr),
                ("budget_f_tot", b.f_tot)]
    rows = [{"quantity": k, "value": float(v)} for k, v in vals]
    return {"model.csv": (rows, "model")}, [f"{k} = {float(v)!r}" for k, v in vals]


def run_oracle_check(cfg, seed, args):
    rows = oracle_check(tol=cfg.oracle_tol)
    chain = fisher_chain_check(rtol=FISHER_CHAIN_RTOL)
    report = qfi_adjudication()
    worst_p = max(r["abs_err"] for r in rows)
    worst_f = max(r["rel_err"] for r in chain)
    ok = all(r["pass"] for r in rows) and all(r["pass"] for r in chain)
    lines = [
        f"probability: {len(rows)} nodes, max abs err {worst_p:.3e} (tol {cfg.oracle_tol:g})",
        f"fisher chain: {len(chain)} nodes, max rel err {worst_f:.3e} (tol {FISHER_CHAIN_RTOL:g})",
        f"qfi: max rel err to generator variance {max(r['rel_err_generator'] for r in report):.3e}",
        "PASS" if ok else "FAIL",
    ]
    files = {"oracle_check.csv": (rows, "oracle_check"), "fisher_chain.csv": (chain, "fisher_chain"),
             "qfi_report.csv": (report, "qfi_report")}
    return files, lines, ok


def run_surface(cfg, seed, args):
    rows = sl.fi_surface(cfg.surface_n, cfg.surface_g_grid, cfg.eps_grid, cfg.kappa, cfg.theta_i, cfg.theta_f)
    return {"fi_surface.csv": (rows, "fi_surface")}, [f"{len(rows)} grid nodes"]


def run_delay_scan(cfg, seed, args):
    overlap = OverlapParams(cfg.fwhm_pump, cfg.fwhm_single, cfg.peak_overlap)
    rows = sl.delay_scan(cfg.delays, cfg.g0, cfg.delay_n_list, _base(cfg), _noise(cfg), cfg.n_total, cfg.nu,
                         overlap, seed, cfg.exact)
    lines = []
    for n in cfg.delay_n_list:
        sub = [r for r in rows if r["n"] == n]
        try:
            fit = sl.fit_delay_peak([r["delay_fs"] for r in sub], [r["p_hat"] for r in sub])
            lines.append(f"n={n:g}: peak {fit['centre']:.1f} fs, fwhm {fit['fwhm']:.1f} fs")
        except (RuntimeError, DomainError) as exc:
            lines.append(f"n={n:g}: no peak fit ({exc})")
    return {"delay_scan.csv": (rows, "delay_scan")}, lines


def _scaling_config(cfg, seed):
    return sl.ScalingConfig(
        base=_base(cfg), nu=cfg.nu, n_total=cfg.n_total, mode=cfg.mode, designated_g=cfg.designated_g,
        noise=_noise(cfg), noise_onset_n=cfg.noise_onset_n, weighted_slope=cfg.weighted_slope,
        delta_p_mode=cfg.delta_p_mode, master_seed=seed,
    )


def _fit_rows(points, names):
    rows = []
    for name in names:
        fit = sl.fit_power_law(points, name)
        rows.append({"field": name, "exponent": fit.exponent, "prefactor": fit.prefactor,
                     "r_squared": fit.r_squared})
    return rows


def run_sweep(cfg, seed, args):
    points = sl.scaling_sweep(cfg.n_list, cfg.g_grid, _scaling_config(cfg, seed))
    fits = _fit_rows(points, ("delta_g", "f_extracted_per_event", "f_extracted_per_rep"))
    lines = [f"{r['field']}: exponent {r['exponent']:.4f}, prefactor {r['prefactor']:.4g}" for r in fits]
    files = {"scaling.csv": ([p.row() for p in points], "scaling"), "powerlaw.csv": (fits, "powerlaw")}
    return files, lines


def run_theory_curve(cfg, seed, args):
    rows = sl.theory_curve_large_n(cfg.theory_g, cfg.theory_n_grid, _base(cfg), cfg.operating_phase)
    return {"theory_curve.csv": (rows, "theory_curve")}, [f"{len(rows)} points"]


def run_calibrate(cfg, seed, args):
    if args.get("points"):
        pts = [(r["epsilon"], r["p_hat"], int(r["n_total"]))
               for r in read_table(args["points"], "calibrate_input")]
    else:
        pts = sl.synthetic_epsilon_sweep(cfg.g, cfg.calib_n, cfg.sweep_epsilons, cfg.calib_total, seed,
                                         _base(cfg), _noise(cfg))
    res = fit_epsilon_sweep(pts, cfg.calib_n)
    rows = [{"epsilon": e, "p_hat": p, "n_total": t, "residual": r}
            for (e, p, t), r in zip(pts, res.diagnostics["residuals"])]
    summary = [{"g_hat": res.g_hat, "std_err": res.std_err, "method": res.method}]
    lines = [f"g_hat = {res.g_hat!r} +/- {res.std_err!r}",
             f"chi2 = {res.diagnostics['chi2']:.3f} on {res.diagnostics['dof']} dof"]
    return {"calibrate.csv": (rows, "calibrate"), "calibrate_summary.csv": (summary, "calibrate_summary")}, lines


def run_estimate(cfg, seed, args):
    files = {}
    if args.get("records"):
        records = [ShotRecord(int(r["n_d"]), int(r["n_r"])) for r in read_table(args["records"], "records")]
    else:
        _, records = run_repetitions(_base(cfg), _noise(cfg), cfg.nu, cfg.n_total, seed)
        files["records.csv"] = ([{"n_d": r.n_d, "n_r": r.n_r} for r in records], "records")
    p_hat = estimate_prob(records)
    total = sum(r.total for r in records)
    inv = invert_small_g(p_hat, cfg.n, cfg.epsilon, total)
    fixed = pm.ModelParams(cfg.theta_i, cfg.theta_f, cfg.epsilon, 0.0, cfg.n, cfg.kappa)
    mle = mle_g(records, fixed)
    rows = [{"g_hat": r.g_hat, "std_err": r.std_err, "method": r.method} for r in (inv, mle)]
    files["estimate.csv"] = (rows, "estimate")
    lines = [f"{r.method}: g_hat = {r.g_hat!r} +/- {r.std_err!r}" for r in (inv, mle)]
    return files, lines


def run_fit_powerlaw(cfg, seed, args):
    rows = read_table(args["input"], "scaling")
    points = [sl.ScalingPoint(r["n"], r["delta_g"], r["f_extracted_per_event"], r["f_extracted_per_rep"],
                              r["s_slope"], r["delta_p"]) for r in rows]
    fits = _fit_rows(points, (cfg.fit_field,))
    f = fits[0]
    lines = [f"{f['field']}: exponent {f['exponent']!r}, prefactor {f['prefactor']!r}, r2 {f['r_squared']!r}"]
    return {"powerlaw.csv": (fits, "powerlaw")}, lines


COMMANDS = {
    "model": run_model,
    "oracle-check": run_oracle_check,
    "surface": run_surface,
    "delay-scan": run_delay_scan,
    "sweep": run_sweep,
    "theory-curve": run_theory_curve,
    "calibrate": run_calibrate,
    "estimate": run_estimate,
    "fit-powerlaw": run_fit_powerlaw,
}
INPUT_ARGS = ("points", "records", "input")


# --------------------------------------------------------------------------
# orchestration
# --------------------------------------------------------------------------

def execute(name: str, cfg: RunConfig, seed: int, args: dict, out_dir) -> tuple[dict, list[str], bool]:
    """Run one subcommand, write its tables and manifest; return digests."""
    result = COMMANDS[name](cfg, seed, args)
    files, lines = result[0], result[1]
    ok = result[2] if len(result) > 2 else True
    out_dir = Path(out_dir)
    digests = {fname: emit_table(rows, schema, out_dir / fname) for fname, (rows, schema) in files.items()}
    inputs = {args[k]: digest_file(args[k]) for k in INPUT_ARGS if args.get(k)}
    write_manifest(out_dir, {"name": name, "args": args}, cfg.to_dict(), seed, digests, inputs)
    return digests, lines, ok


def replay(manifest_path, out_dir=None) -> tuple[bool, list[str]]:
    man = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    cfg = resolve(man["config"])
    lines = []
    for path, want in man.get("inputs", {}).items():
        if digest_file(path) != want:
            lines.append(f"input {path} changed since the recorded run")
            return False, lines
    with tempfile.TemporaryDirectory() as tmp:
        digests, _, _ = execute(man["command"]["name"], cfg, man["master_seed"], man["command"]["args"],
                                out_dir or tmp)
    ok = True
    for fname, want in sorted(man["files"].items()):
        got = digests.get(fname)
        same = got == want
        ok &= same
        lines.append(f"{'match' if same else 'MISMATCH'} {fname}")
    return ok, lines


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (override --config)")
    for key in CONFIG_KEYS:
        names = [f"--{key}"]
        if "_" in key:
            names.append(f"--{key.replace('_', '-')}")
        g.add_argument(*names, dest=f"cfg_{key}", metavar="VALUE", default=None)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit); drawn from entropy if omitted")
    p.add_argument("--out", help="output directory (default: ppcm-out/<subcommand>)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppcm", description="Projective photon-counting metrology toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "model":
            p.add_argument("quantity", choices=("pd", "fi", "qfi"))
        if name == "calibrate":
            p.add_argument("--points", help="CSV with epsilon,p_hat,n_total (synthetic sweep if omitted)")
        if name == "estimate":
            p.add_argument("--records", help="CSV with n_d,n_r (simulated if omitted)")
        if name == "fit-powerlaw":
            p.add_argument("--input", required=True, help="scaling CSV")
        _add_config_flags(p)
    p = sub.add_parser("replay", help="re-run a manifest and compare digests")
    p.add_argument("manifest")
    p.add_argument("--out", help="keep the re-run outputs here")
    return parser


def _resolve_config(ns) -> RunConfig:
    base = RunConfig()
    if ns.config:
        try:
            text = Path(ns.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        base = parse_config(text)
    overrides = {}
    for key in CONFIG_KEYS:
        raw = getattr(ns, f"cfg_{key}")
        if raw is not None:
            overrides[key] = parse_flag(key, raw)
    return resolve(overrides, base)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "replay":
            ok, lines = replay(ns.manifest, ns.out)
            print("\n".join(lines))
            return EXIT_OK if ok else EXIT_CHECK
        cfg = _resolve_config(ns)
        if ns.seed is None:
            seed = secrets.randbits(64)
            print(f"master_seed = {seed}")
        else:
            if not 0 <= ns.seed < 2**64:
                raise ConfigError("--seed", "must be an unsigned 64-bit integer")
            seed = ns.seed
        args = {k: getattr(ns, k) for k in ("quantity", *INPUT_ARGS) if getattr(ns, k, None) is not None}
        for k in INPUT_ARGS:
            if k in args:
                if not Path(args[k]).is_file():
                    raise ConfigError(f"--{k}", f"no such file {args[k]!r}")
                args[k] = str(Path(args[k]).resolve())
        out = ns.out or str(Path("ppcm-out") / ns.command)
        _, lines, ok = execute(ns.command, cfg, seed, args, out)
        print("\n".join(lines))
        print(f"wrote {out}/manifest.json")
        return EXIT_OK if ok else EXIT_CHECK
    except (ConfigError, SchemaError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PPCMError, ArithmeticError, ValueError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

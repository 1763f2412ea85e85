"""Command-line interface: ``finsler-xray <command> --config PATH [--out DIR]``.

Exit codes: 0 success, 1 domain or check failure, 2 usage or config failure.
JSON reports are written with sorted keys; CSV floats use 17 significant
digits, so identical configs give byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, FinslerError, GridMismatch
from .geodesics import trace_tangential
from .herglotz import check_foliation, check_herglotz
from .norms import check_axioms

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _checks(norm, seed: int) -> dict:
    ax = check_axioms(norm, sample_count=200, seed=seed)
    herg = check_herglotz(norm)
    fol = check_foliation(norm)
    return {"pass": bool(ax.passed and herg.passed and fol.passed), "axioms": ax.to_json(),
            "herglotz": herg.to_json(), "foliation": fol.to_json()}


def _gate(norm, cfg: RunConfig, force: bool, out: Path) -> bool:
    if force:
        return True
    rep = _checks(norm, cfg.seed)
    if not rep["pass"]:
        _write_json(out / "check.json", rep)
        print("norm fails the admissibility checks (use --force to override)", file=sys.stderr)
    return rep["pass"]


def cmd_check(cfg: RunConfig, out: Path, force: bool) -> int:
    rep = _checks(cfg.norm(), cfg.seed)
    _write_json(out / "check.json", rep)
    print(f"axioms: {'pass' if rep['axioms']['pass'] else 'FAIL'}  "
          f"herglotz: {'pass' if rep['herglotz']['pass'] else 'FAIL'} (min margin {rep['herglotz']['min_margin']:.6g})  "
          f"foliation: {'pass' if rep['foliation']['pass'] else 'FAIL'}")
    return EXIT_OK if rep["pass"] else EXIT_FAIL


def cmd_trace(cfg: RunConfig, out: Path, force: bool) -> int:
    norm = cfg.norm()
    radii = cfg.section("trace").get("r0")
    if not isinstance(radii, list) or not radii:
        raise ConfigError("trace.r0 must be a non-empty list")
    for r0 in radii:
        if not norm.R <= float(r0) < 1.0:
            raise ConfigError(f"turning radius {r0} outside [{norm.R}, 1)")
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for i, r0 in enumerate(radii):
        rec = trace_tangential(norm, float(r0), rtol=cfg.ode_tol, atol=cfg.ode_tol)
        name = f"trace_{i:03d}.csv"
        rec.to_csv(out / name)
        summary.append({"file": name, "r0": rec.r0, "T": rec.T, "omega_exit": rec.omega_exit,
                        "a": rec.accel.a})
    _write_json(out / "trace.json", {"traces": summary})
    print(f"wrote {len(summary)} geodesic records to {out}")
    return EXIT_OK


def _pipeline(cfg: RunConfig, norm):
    from .tomography import Pipeline
    n_r, k_max, n_theta = cfg.require_grids()
    return Pipeline(norm, n_r=n_r, k_max=k_max, n_theta=n_theta, quad_tol=cfg.quad_tol,
                    rtol=cfg.ode_tol, atol=cfg.ode_tol)


def _field(cfg: RunConfig, pipe):
    terms = cfg.section("field").get("terms")
    if not isinstance(terms, list):
        raise ConfigError("field.terms must be a list")
    try:
        return pipe.function(terms)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad field term: {exc}") from exc


def cmd_forward(cfg: RunConfig, out: Path, force: bool) -> int:
    norm = cfg.norm()
    cfg.require_grids()
    if not _gate(norm, cfg, force, out):
        return EXIT_FAIL
    pipe = _pipeline(cfg, norm)
    f = _field(cfg, pipe)
    method = cfg.section("field").get("method", "direct")
    if method not in ("direct", "abel"):
        raise ConfigError("field.method must be 'direct' or 'abel'")
    sino = pipe.forward_direct(f) if method == "direct" else pipe.forward_abel(f)
    out.mkdir(parents=True, exist_ok=True)
    sino.to_csv(out / "sinogram.csv")
    f.to_csv(out / "field.csv", n_theta=pipe.n_theta)
    _write_json(out / "forward.json", {"method": method, "n_r": pipe.grid.size, "n_theta": pipe.n_theta,
                                       "k_max": pipe.k_max, "max_abs": float(np.max(np.abs(sino.values))),
                                       "files": ["sinogram.csv", "field.csv"]})
    print(f"sinogram ({method}) written to {out / 'sinogram.csv'}; max |If| = {np.max(np.abs(sino.values)):.6g}")
    return EXIT_OK


def _report_reconstruction(cfg, pipe, rec, out: Path, extra: dict) -> dict:
    from .tomography import relative_l2_error
    out.mkdir(parents=True, exist_ok=True)
    rec.to_csv(out / "reconstruction.csv", n_theta=pipe.n_theta)
    report = dict(extra, n_r=pipe.grid.size, k_max=pipe.k_max, n_theta=pipe.n_theta,
                  reconstruction_l2=rec.l2_norm(), files=["reconstruction.csv"])
    if "field" in cfg.raw:
        report["rel_l2"] = relative_l2_error(rec, _field(cfg, pipe))
    return report


def cmd_invert(cfg: RunConfig, out: Path, force: bool) -> int:
    from .tomography import Sinogram
    norm = cfg.norm()
    cfg.require_grids()
    src = cfg.raw.get("sinogram")
    if not isinstance(src, str):
        raise ConfigError("config needs 'sinogram': path to a CSV sinogram")
    if not _gate(norm, cfg, force, out):
        return EXIT_FAIL
    try:
        sino = Sinogram.from_csv(cfg.path(src))
    except OSError as exc:
        raise ConfigError(f"cannot read sinogram: {exc}") from exc
    pipe = _pipeline(cfg, norm)
    if sino.r0.size != pipe.grid.size or np.max(np.abs(sino.r0 - pipe.grid)) > 1e-12:
        raise GridMismatch("sinogram radii do not match grids.n_r")
    rec = pipe.reconstruct(sino, lam=cfg.lam)
    report = _report_reconstruction(cfg, pipe, rec, out, {"sinogram": src})
    _write_json(out / "invert.json", report)
    msg = f"reconstruction written to {out / 'reconstruction.csv'}"
    if "rel_l2" in report:
        msg += f"; rel-L2 = {report['rel_l2']:.6g}"
    print(msg)
    return EXIT_OK


def cmd_roundtrip(cfg: RunConfig, out: Path, force: bool) -> int:
    norm = cfg.norm()
    cfg.require_grids()
    if not _gate(norm, cfg, force, out):
        return EXIT_FAIL
    pipe = _pipeline(cfg, norm)
    f = _field(cfg, pipe)
    sino = pipe.forward_direct(f)
    rec = pipe.reconstruct(sino, lam=cfg.lam)
    out.mkdir(parents=True, exist_ok=True)
    sino.to_csv(out / "sinogram.csv")
    f.to_csv(out / "field.csv", n_theta=pipe.n_theta)
    report = _report_reconstruction(cfg, pipe, rec, out, {})
    report["files"] = ["sinogram.csv", "field.csv", "reconstruction.csv"]
    _write_json(out / "roundtrip.json", report)
    print(f"rel-L2 = {report['rel_l2']:.6g}")
    return EXIT_OK


def cmd_elastic(cfg: RunConfig, out: Path, force: bool) -> int:
    from .elastic import StiffnessProfile, build_slice_norm, conformal_scaling
    sec = cfg.section("elastic")
    if "profile" not in sec or "R" not in sec:
        raise ConfigError("elastic needs 'R' and 'profile'")
    R = float(sec["R"])
    profile = StiffnessProfile.from_json(sec["profile"])
    norm = build_slice_norm(profile, R)
    rng = np.random.default_rng(cfg.seed)
    n = int(sec.get("samples", 50))
    r = rng.uniform(R, 1.0, n)
    beta = rng.uniform(0, 2 * np.pi, n)
    rho, phi = np.cos(beta), np.sin(beta) / r
    radii = np.linspace(R, 1.0, 9)
    speed = 1.0 / norm(radii, np.zeros_like(radii), 1.0 / radii)
    radial_speed = 1.0 / norm(radii, np.ones_like(radii), np.zeros_like(radii))
    report = {
        "R": R,
        "axioms": check_axioms(norm, sample_count=n, seed=cfg.seed).to_json(),
        "herglotz": check_herglotz(norm, n_r=int(sec.get("n_r", 50))).to_json(),
        "speed_profile": {"r": radii.tolist(), "tangential": speed.tolist(), "radial": radial_speed.tolist()},
        "isotropic": bool(np.max(np.abs(speed - radial_speed) / radial_speed) < 1e-8),
    }
    conf = sec.get("conformal")
    if conf is not None:
        s = float(conf.get("s", 0.21))
        kind = conf.get("kind", "constant")
        if kind == "constant":
            fs = lambda x: 1.0 + s + 0.0 * np.asarray(x)
        elif kind == "linear":
            fs = lambda x: 1.0 + s * (1.0 - np.asarray(x))
        else:
            raise ConfigError("elastic.conformal.kind must be 'constant' or 'linear'")
        res = conformal_scaling(profile, fs, R, r, rho, phi)
        report["conformal"] = {"kind": kind, "s": s, "max_deviation_sqrt": res["dev_sqrt"],
                               "max_deviation_inverse_sqrt": res["dev_inverse_sqrt"]}
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "elastic.json", report)
    print(f"elastic slice norm: isotropic={report['isotropic']}  herglotz={report['herglotz']['pass']}"
          + (f"  |F_s/F - sqrt(f_s)|={report['conformal']['max_deviation_sqrt']:.3g}"
             f"  |F_s/F - 1/sqrt(f_s)|={report['conformal']['max_deviation_inverse_sqrt']:.3g}"
             if conf is not None else ""))
    return EXIT_OK


def cmd_linearize(cfg: RunConfig, out: Path, force: bool) -> int:
    from .linearization import verify_conformal_linearization
    from .profiles import profile_from_json
    norm = cfg.norm()
    sec = cfg.section("linearize")
    f = profile_from_json(sec.get("f", 1.0))
    dths = sec.get("delta_theta")
    if not isinstance(dths, list) or not dths:
        raise ConfigError("linearize.delta_theta must be a non-empty list")
    step = float(sec.get("step", 1e-4))
    rows = verify_conformal_linearization(norm, f, [float(x) for x in dths], step=step)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "linearize.json", [r.to_json() for r in rows])
    worst = max(r.rel_err for r in rows)
    print(f"max relative mismatch |d_s d - I f| / |I f| = {worst:.3g} over {len(rows)} angles")
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "trace": cmd_trace,
    "forward": cmd_forward,
    "invert": cmd_invert,
    "roundtrip": cmd_roundtrip,
    "elastic": cmd_elastic,
    "linearize": cmd_linearize,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finsler-xray",
                                description="Geodesic X-ray tomography for spherically symmetric Finsler norms.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides the config's 'output')")
    p.add_argument("--seed", type=int, help="seed for randomized checks (overrides the config)")
    p.add_argument("--force", action="store_true", help="skip admissibility checks before tomography")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        overrides = {} if args.seed is None else {"seed": args.seed}
        cfg = load_config(args.config, overrides)
        out = Path(args.out) if args.out else cfg.output
        return COMMANDS[args.command](cfg, out, args.force)
    except (ConfigError, GridMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FinslerError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

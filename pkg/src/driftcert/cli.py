"""Command-line entry point.

Subcommands: verify-lyapunov, explosion, phase, brackets, histogram.
Every run is reproducible: identical flags, config and seed give
byte-identical CSV/JSON outputs for any value of DRIFTCERT_THREADS.
Numeric flags may also come from an INI-style config file (sections
[model], [run] and one per command); flags override file values.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from . import report
from .certify import CertificationError, fit_drift_constants, verify_drift
from .explosion import (blowup_bound_check, choose_wedge, verify_instability,
                        wedge_region, wedge_start)
from .lyapunov import (band_radius, cover_params, global_phi, make_piece,
                       strong_subcover)
from .params import ModelParams, State
from .polyvec import (bracket_generations, control_fields, drift_field,
                      hormander_rank, lie_bracket, noise_fields)
from .sim import (ExplodedError, ensemble, ensemble_states_at,
                  histogram_from_points, invariant_histogram, phase_diagram,
                  tv_distance)

EXIT_OK = 0
EXIT_SCI_FAIL = 1
EXIT_USAGE = 2


class ConfigError(Exception):
    pass


_MODEL_KEYS = ("a1", "a2", "alpha1", "alpha2", "kappa1", "kappa2")
_RUN_KEYS = ("seed", "out_dir")

_DEFAULTS = {
    "verify-lyapunov": {
        "a1": -1.0, "a2": -1.0, "alpha1": 1.0, "alpha2": 2.0,
        "kappa1": 0.0, "kappa2": 1.0, "seed": 0, "out_dir": "out",
        "n_samples": 10_000,
    },
    "explosion": {
        "a1": -1.0, "a2": -1.0, "alpha1": 2.0, "alpha2": 1.0,
        "kappa1": 0.1, "kappa2": 0.1, "seed": 0, "out_dir": "out",
        "n_samples": 10_000, "n_paths": 1000, "n_starts": 50,
        "dt": 1e-3, "horizon": 30.0, "threshold": 1e4,
    },
    "phase": {
        "a1": -1.0, "a2": -1.0, "alpha1": 1.0, "alpha2": 2.0,
        "kappa1": 0.1, "kappa2": 0.1, "seed": 0, "out_dir": "out",
        "grid_min": 0.5, "grid_max": 2.5, "grid_n": 8,
        "n_paths": 200, "dt": 1e-3, "horizon": 15.0, "threshold": 1e4,
    },
    "brackets": {
        "a1": -1.0, "a2": -1.0, "alpha1": 1.0, "alpha2": 2.0,
        "kappa1": 0.0, "kappa2": 1.0, "seed": 0, "out_dir": "out",
        "max_depth": 3,
    },
    "histogram": {
        "a1": -1.0, "a2": -1.0, "alpha1": 1.0, "alpha2": 2.0,
        "kappa1": 1.0, "kappa2": 1.0, "seed": 0, "out_dir": "out",
        "z0a": "5,5", "z0b": "-5,0", "burn_in": 100.0, "horizon": 10_000.0,
        "dt": 1e-3, "threshold": 1e6, "bins": 32,
        "box": "-10,4,-5,5", "decay_paths": 2000, "decay_times": "1,2,4,8",
    },
}

_INT_KEYS = {"seed", "n_samples", "n_paths", "n_starts", "grid_n", "bins",
             "decay_paths", "max_depth"}
_STR_KEYS = {"out_dir", "z0a", "z0b", "box", "decay_times"}


def _coerce(key, value):
    if key in _STR_KEYS:
        return str(value)
    if key in _INT_KEYS:
        return int(str(value))
    return float(str(value))


def load_config(command: str, args: argparse.Namespace) -> dict:
    """defaults <- config file <- explicit flags, with validation."""
    cfg = dict(_DEFAULTS[command])
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        ini = configparser.ConfigParser()
        ini.read(path)
        for section in ("model", "run", command):
            if section in ini:
                for key, value in ini[section].items():
                    if key not in cfg:
                        raise ConfigError(
                            f"unknown config key {key!r} in [{section}]")
                    try:
                        cfg[key] = _coerce(key, value)
                    except ValueError as e:
                        raise ConfigError(f"bad value for {key}: {e}") from e
    for key in cfg:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            cfg[key] = _coerce(key, flag)
    return cfg


def model_from_cfg(cfg: dict) -> ModelParams:
    try:
        return ModelParams(cfg["a1"], cfg["a2"], cfg["alpha1"], cfg["alpha2"],
                           cfg["kappa1"], cfg["kappa2"])
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_point(text: str) -> State:
    try:
        x, y = (float(v) for v in text.split(","))
        return State(x, y)
    except ValueError as e:
        raise ConfigError(f"bad point {text!r}: expected 'x,y'") from e


# ---------------------------------------------------------------------------
# commands

def cmd_verify_lyapunov(cfg: dict) -> int:
    p = model_from_cfg(cfg)
    if p.alpha2 <= p.alpha1:
        print("error: alpha2 must exceed alpha1; with alpha1 > alpha2 "
              "solutions explode from the wedge and no covering exists",
              file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(cfg)
    seed = cfg["seed"]
    n = cfg["n_samples"]
    cp = cover_params(p)
    pk = p.with_kappa(p.kappa1, cp.kappa2_star)
    R = band_radius(cp)
    band = (R, 100.0 * R)

    jobs = [(f"phi{i}", make_piece(i, pk, cp).phi, strong_subcover(i, cp))
            for i in range(1, 6)]
    gp = global_phi(pk, cp)
    jobs.append(("Phi", gp.field, gp.field.domain))

    certs, rows, labels, margins = [], [], [], []
    all_passed = True
    for idx, (label, field, region) in enumerate(jobs):
        try:
            C, D = fit_drift_constants(pk, field, region, band, n,
                                       seed=seed + 10 * idx)
            cert = verify_drift(pk, field, region, band, n, C, D,
                                seed=seed + 10 * idx + 5)
            entry = report.drift_cert_dict(cert, pk)
            passed = cert.passed
            margins.append(cert.min_margin)
            rows.append([label, region.describe, report.fmt9(C), report.fmt9(D),
                         report.fmt9(cert.min_margin), n, str(passed)])
        except CertificationError as e:
            entry = {"kind": "drift", "field": label, "region": region.describe,
                     "params": report.params_dict(pk), "band": list(band),
                     "seed": seed + 10 * idx, "n_samples": n,
                     "passed": False, "fit_error": str(e)}
            passed = False
            margins.append(float("nan"))
            rows.append([label, region.describe, "nan", "nan", "nan", n, "False"])
        labels.append(label)
        certs.append(entry)
        all_passed &= passed
        print(f"certificate {label:4s}: {'PASS' if passed else 'FAIL'}")

    doc = {
        "params": report.params_dict(pk),
        "kappa2_star": cp.kappa2_star,
        "cover_params": {k: getattr(cp, k) for k in (
            "sigma", "delta", "beta", "gamma", "eta", "Dcap", "Ncap",
            "C1", "C2", "C3", "C4", "C5", "kappa2_star")},
        "R": R,
        "band": list(band),
        "certificates": certs,
        "all_passed": all_passed,
    }
    report.write_json(out / "verify_lyapunov.json", doc)
    report.write_csv(out / "certificates.csv",
                     ["field", "region", "C", "D", "min_margin", "n", "passed"],
                     rows)
    from .plots import plot_margin_bars
    plot_margin_bars(labels, np.nan_to_num(np.array(margins), nan=-1.0),
                     out / "margins.svg")
    return EXIT_OK if all_passed else EXIT_SCI_FAIL


def cmd_explosion(cfg: dict) -> int:
    p = model_from_cfg(cfg)
    if p.alpha1 <= p.alpha2:
        print("error: explosion analysis requires alpha1 > alpha2 "
              "(otherwise the system is ergodic)", file=sys.stderr)
        return EXIT_USAGE
    if cfg["n_paths"] < 1 or cfg["n_samples"] < 1 or cfg["n_starts"] < 1:
        print("error: n_paths, n_samples and n_starts must be positive",
              file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(cfg)
    seed = cfg["seed"]
    ws = choose_wedge(p, seed=1234 + seed)
    try:
        cert = verify_instability(p, ws, cfg["n_samples"], seed=seed)
        cert_entry = report.instability_cert_dict(cert, p)
        cert_ok = cert.passed
    except CertificationError as e:
        cert_entry = {"kind": "instability", "passed": False, "fit_error": str(e),
                      "params": report.params_dict(p)}
        cert_ok = False
    print(f"instability certificate: {'PASS' if cert_ok else 'FAIL'}")

    rng = np.random.default_rng(seed + 3)
    starts = wedge_region(ws).sample(rng, cfg["n_starts"], (ws.M, 30.0 * ws.M))
    rows, bounds, t_nums = [], [], []
    blowup_ok = True
    for x, y in starts:
        try:
            t_num, bound = blowup_bound_check(p, ws, State(float(x), float(y)))
            ok = t_num <= 1.05 * bound
        except CertificationError:
            t_num, bound, ok = float("nan"), float("nan"), False
        blowup_ok &= ok
        rows.append([x, y, t_num, bound, str(ok)])
        bounds.append(bound)
        t_nums.append(t_num)
    print(f"blow-up bound table ({cfg['n_starts']} starts): "
          f"{'PASS' if blowup_ok else 'FAIL'}")

    z0 = wedge_start(p, seed=1234 + seed)
    es = ensemble(p, z0, cfg["n_paths"], cfg["dt"], cfg["horizon"],
                  cfg["threshold"], master_seed=seed)
    print(f"ensemble: fraction={es.explosion_fraction:.3f} "
          f"ci=({es.wilson_ci95[0]:.4f},{es.wilson_ci95[1]:.4f})")

    report.write_json(out / "instability_certificate.json", cert_entry)
    report.write_csv(out / "blowup_bounds.csv",
                     ["x0", "y0", "t_num", "bound", "within_tol"], rows)
    report.write_csv(out / "ensemble.csv", report.ENSEMBLE_HEADER,
                     [report.ensemble_row(p.alpha1, p.alpha2, es)])
    report.write_json(out / "explosion_summary.json", {
        "params": report.params_dict(p),
        "wedge": {"xi": ws.xi, "M": ws.M, "C_blow": ws.C_blow},
        "start": [z0.x, z0.y],
        "dt": cfg["dt"], "horizon": cfg["horizon"],
        "threshold": cfg["threshold"], "seed": seed,
        "certificate_passed": cert_ok,
        "blowup_table_passed": blowup_ok,
        "explosion_fraction": es.explosion_fraction,
        "wilson_ci95": list(es.wilson_ci95),
        "mean_t_exp": es.mean_t_exp,
    })
    from .plots import plot_blowup_scatter
    plot_blowup_scatter(bounds, t_nums, out / "blowup.svg")
    ok = cert_ok and blowup_ok and es.explosion_fraction > 0.0
    return EXIT_OK if ok else EXIT_SCI_FAIL


def cmd_phase(cfg: dict) -> int:
    p0 = model_from_cfg(cfg)
    if cfg["grid_n"] < 2 or cfg["n_paths"] < 1:
        print("error: grid_n must be >= 2 and n_paths >= 1", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(cfg)
    alphas = np.linspace(cfg["grid_min"], cfg["grid_max"], cfg["grid_n"])
    pd = phase_diagram(alphas, alphas, (p0.a1, p0.a2),
                       (p0.kappa1, p0.kappa2), None,
                       cfg["n_paths"], cfg["dt"], cfg["horizon"],
                       cfg["threshold"], master_seed=cfg["seed"],
                       start_fn=wedge_start)
    report.phase_to_csv(pd, out / "phase.csv")
    from .plots import plot_phase_heatmap
    plot_phase_heatmap(pd, out / "phase.svg")
    frac = pd.fractions()
    print(f"phase diagram {cfg['grid_n']}x{cfg['grid_n']}: "
          f"fractions in [{frac.min():.3f}, {frac.max():.3f}]")
    return EXIT_OK


def _poly_str(poly) -> str:
    if poly.is_zero():
        return "0"
    terms = []
    for (i, j), c in poly.coeffs:
        mono = "*".join(s for s, d in (("x^%d" % i, i), ("y^%d" % j, j)) if d > 0)
        mono = mono.replace("^1", "")
        terms.append(f"{report.fmt9(c)}{'*' + mono if mono else ''}")
    return " + ".join(terms).replace("+ -", "- ")


def _field_str(f) -> str:
    return f"({_poly_str(f.px)}, {_poly_str(f.py)})"


def cmd_brackets(cfg: dict) -> int:
    p = model_from_cfg(cfg)
    out = _out_dir(cfg)
    depth = cfg["max_depth"]
    X0 = drift_field(p)
    X1, X2 = noise_fields(p)
    Z, W1, W2 = control_fields(p)
    b20 = lie_bracket(X2, X0)
    b220 = lie_bracket(X2, b20)
    w2z = lie_bracket(W2, Z)
    w2w2z = lie_bracket(W2, w2z)
    k2 = p.kappa2

    lines = []
    lines.append(f"X0 = {_field_str(X0)}")
    lines.append(f"X1 = {_field_str(X1)}")
    lines.append(f"X2 = {_field_str(X2)}")
    lines.append(f"[X2, X0]        = {_field_str(b20)}")
    lines.append(f"[X2, [X2, X0]]  = {_field_str(b220)}   "
                 f"(2*kappa2 = {report.fmt9(2 * k2)} on d/dx)")
    lines.append(f"W1 = {_field_str(W1)}")
    lines.append(f"W2 = {_field_str(W2)}")
    lines.append(f"[W2, Z]         = {_field_str(w2z)}")
    lines.append(f"[W2, [W2, Z]]   = {_field_str(w2w2z)}")
    note = ("note: computed [W2,[W2,Z]] = (2*kappa2^2, 0); the direction "
            "constant is sometimes quoted as kappa2^2, smaller by a factor "
            "of 2; the scalar is immaterial to the span argument")
    lines.append(note)

    sample_points = [State(0.0, 0.0), State(-3.0, 0.0), State(2.0, 1.0),
                     State(-1.0, -2.0)]
    ranks = []
    for z in sample_points:
        row = {"point": [z.x, z.y]}
        for d in range(1, depth + 1):
            row[f"rank_depth_{d}"] = hormander_rank(p, z, d)
        ranks.append(row)
        rk = ", ".join(f"depth {d}: {row[f'rank_depth_{d}']}"
                       for d in range(1, depth + 1))
        lines.append(f"rank at ({z.x:g}, {z.y:g}): {rk}")

    n_brackets = sum(len(g) for g in bracket_generations(p, depth))
    lines.append(f"bracket fields generated up to depth {depth}: {n_brackets}")
    text = "\n".join(lines)
    print(text)
    report.write_json(out / "brackets.json", {
        "params": report.params_dict(p),
        "fields": {"X0": _field_str(X0), "X1": _field_str(X1),
                   "X2": _field_str(X2), "W1": _field_str(W1),
                   "W2": _field_str(W2)},
        "brackets": {"[X2,X0]": _field_str(b20),
                     "[X2,[X2,X0]]": _field_str(b220),
                     "[W2,Z]": _field_str(w2z),
                     "[W2,[W2,Z]]": _field_str(w2w2z)},
        "direction_note": note,
        "ranks": ranks,
    })
    return EXIT_OK


def cmd_histogram(cfg: dict) -> int:
    p = model_from_cfg(cfg)
    out = _out_dir(cfg)
    seed = cfg["seed"]
    za = _parse_point(cfg["z0a"])
    zb = _parse_point(cfg["z0b"])
    try:
        box_vals = [float(v) for v in cfg["box"].split(",")]
        x_lo, x_hi, y_lo, y_hi = box_vals
    except ValueError as e:
        raise ConfigError(f"bad box {cfg['box']!r}: expected 'x_lo,x_hi,y_lo,y_hi'") from e
    box = ((x_lo, x_hi), (y_lo, y_hi))
    bins = (cfg["bins"], cfg["bins"])
    try:
        ha = invariant_histogram(p, za, cfg["burn_in"], cfg["horizon"],
                                 cfg["dt"], box, bins, seed=seed, path_index=0,
                                 threshold=cfg["threshold"])
        hb = invariant_histogram(p, zb, cfg["burn_in"], cfg["horizon"],
                                 cfg["dt"], box, bins, seed=seed, path_index=1,
                                 threshold=cfg["threshold"])
    except ExplodedError as e:
        print(f"error: occupation path exploded ({e}); no histogram",
              file=sys.stderr)
        return EXIT_SCI_FAIL
    tv = tv_distance(ha, hb)
    print(f"tv distance between starts: {tv:.4f}")

    doc = {
        "params": report.params_dict(p),
        "z0a": [za.x, za.y], "z0b": [zb.x, zb.y],
        "burn_in": cfg["burn_in"], "horizon": cfg["horizon"], "dt": cfg["dt"],
        "box": box_vals, "bins": cfg["bins"], "seed": seed,
        "tv_distance": tv,
    }

    from .plots import plot_histogram_density, plot_tv_decay
    report.histogram_to_file(ha, out / "histogram_a.csv")
    report.histogram_to_file(hb, out / "histogram_b.csv")
    plot_histogram_density(ha, out / "density_a.svg",
                           title=f"start ({za.x:g},{za.y:g})")
    plot_histogram_density(hb, out / "density_b.svg",
                           title=f"start ({zb.x:g},{zb.y:g})")

    if cfg["decay_paths"] > 0:
        # the far start gives the strongest decay signal against the
        # long-run reference accumulated from start A
        times = [float(v) for v in cfg["decay_times"].split(",")]
        states, _ = ensemble_states_at(p, zb, cfg["decay_paths"], cfg["dt"],
                                       times, cfg["threshold"],
                                       master_seed=seed + 101)
        tvs = []
        for k in range(len(times)):
            hk = histogram_from_points(states[k, :, 0], states[k, :, 1],
                                       box, bins)
            tvs.append(tv_distance(hk, ha))
        slope = float(np.polyfit(times, np.log(tvs), 1)[0])
        doc["decay"] = {"times": times, "tv": tvs, "log_slope": slope,
                        "n_paths": cfg["decay_paths"]}
        plot_tv_decay(times, tvs, out / "tv_decay.svg")
        print(f"tv decay log-slope: {slope:.4f}")

    report.write_json(out / "histogram.json", doc)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftcert",
        description="Lyapunov and explosion certificates plus Monte Carlo "
                    "simulation for the planar quadratic SDE family")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    for key in _MODEL_KEYS:
        common.add_argument(f"--{key}", type=float, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out-dir", dest="out_dir", default=None)
    common.add_argument("--config", default=None,
                        help="INI config file; flags override its values")

    pv = sub.add_parser("verify-lyapunov", parents=[common],
                        help="build the covering and verify all drift certificates")
    pv.add_argument("--n-samples", dest="n_samples", type=int, default=None)
    pv.set_defaults(func=cmd_verify_lyapunov)

    pe = sub.add_parser("explosion", parents=[common],
                        help="wedge, instability certificate, blow-up bounds, ensemble")
    pe.add_argument("--n-samples", dest="n_samples", type=int, default=None)
    pe.add_argument("--n-paths", dest="n_paths", type=int, default=None)
    pe.add_argument("--n-starts", dest="n_starts", type=int, default=None)
    pe.add_argument("--dt", type=float, default=None)
    pe.add_argument("--horizon", type=float, default=None)
    pe.add_argument("--threshold", type=float, default=None)
    pe.set_defaults(func=cmd_explosion)

    pp = sub.add_parser("phase", parents=[common],
                        help="explosion-fraction grid over (alpha1, alpha2)")
    pp.add_argument("--grid-min", dest="grid_min", type=float, default=None)
    pp.add_argument("--grid-max", dest="grid_max", type=float, default=None)
    pp.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    pp.add_argument("--n-paths", dest="n_paths", type=int, default=None)
    pp.add_argument("--dt", type=float, default=None)
    pp.add_argument("--horizon", type=float, default=None)
    pp.add_argument("--threshold", type=float, default=None)
    pp.set_defaults(func=cmd_phase)

    pb = sub.add_parser("brackets", parents=[common],
                        help="noise/drift fields, bracket table, span ranks")
    pb.add_argument("--max-depth", dest="max_depth", type=int, default=None)
    pb.set_defaults(func=cmd_brackets)

    ph = sub.add_parser("histogram", parents=[common],
                        help="occupation histograms, TV distance, TV decay")
    ph.add_argument("--z0a", default=None, help="first start 'x,y'")
    ph.add_argument("--z0b", default=None, help="second start 'x,y'")
    ph.add_argument("--burn-in", dest="burn_in", type=float, default=None)
    ph.add_argument("--horizon", type=float, default=None)
    ph.add_argument("--dt", type=float, default=None)
    ph.add_argument("--threshold", type=float, default=None)
    ph.add_argument("--bins", type=int, default=None)
    ph.add_argument("--box", default=None, help="'x_lo,x_hi,y_lo,y_hi'")
    ph.add_argument("--decay-paths", dest="decay_paths", type=int, default=None,
                    help="paths for the TV-decay estimate (0 disables)")
    ph.add_argument("--decay-times", dest="decay_times", default=None)
    ph.set_defaults(func=cmd_histogram)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.command, args)
        return args.func(cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

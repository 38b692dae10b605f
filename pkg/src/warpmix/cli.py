"""Command-line driver: ``warpmix simulate | fit | summarize``.

Data files are long-format CSV (``subject_id,t,y[,covariates...]``) with a
mandatory header row. Every file this tool writes starts with a comment
line carrying the hash of the effective configuration and the seed.

Exit codes: 0 success, 1 usage or configuration error, 2 data or I/O
error, 3 numerical failure of a chain.
"""

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .basis import make_knots
from .labeling import LabelPlan, log_transform, plan_labels
from .model import FREE, LABEL_NAMES, DataError, Dataset, GroundTruth, Hyperparameters
from .posterior import fitted_curve, paf_distribution, register_curve, shape_estimate, warp_summary
from .sampler import ChainConfig, ChainOutput, NumericalError, run_chain
from .simgen import SimConfig, mode_filter, recovery_metrics, simulate_dataset

log = logging.getLogger("warpmix")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
BLOCKS = ("c", "pi", "eta", "gamma1", "gamma2", "B", "scalars")
SCALAR_COLUMNS = ChainOutput.SCALARS + ("loglik",)
LABEL_CODES = {v: k for k, v in LABEL_NAMES.items()}


class ConfigError(ValueError):
    """Malformed or unknown configuration entries."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------
FIT_KEYS = {
    "data", "knots", "hyperparameters", "chain", "labels", "covariates",
    "rescale_time", "domain", "log_transform",
}


def _strict(section: dict, allowed, where: str) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    return section


def _names(cls):
    return {f.name for f in fields(cls)}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _header(chash: str, seed) -> str:
    return f"# config_hash={chash} seed={seed}\n"


def _read_header(path) -> dict:
    with open(path) as fh:
        line = fh.readline()
    if not line.startswith("#"):
        return {}
    return dict(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)


# ----------------------------------------------------------------------
# data files
# ----------------------------------------------------------------------
def write_dataset(path, data: Dataset, chash: str, seed, covariate_names=()):
    with open(path, "w", newline="") as fh:
        fh.write(_header(chash, seed))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "t", "y", *covariate_names])
        for sid, t, y, x in zip(data.subject_ids, data.times, data.values, data.covariates):
            xs = [f"{v:.17g}" for v in x]
            for tj, yj in zip(t, y):
                w.writerow([sid, f"{tj:.17g}", f"{yj:.17g}", *xs])


def read_dataset(path, covariates=()) -> Dataset:
    """Parse a long-format CSV; subjects keep their first-appearance order."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise DataError(f"cannot read data file {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty data file")
    head = [h.strip() for h in rows[0]]
    if head[:3] != ["subject_id", "t", "y"]:
        raise DataError(f"{path}: header must start with subject_id,t,y (got {head[:3]})")
    missing = [c for c in covariates if c not in head]
    if missing:
        raise DataError(f"{path}: covariate column(s) not found: {missing}")
    cidx = [head.index(c) for c in covariates]
    order, t, y, x = [], {}, {}, {}
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != len(head):
            raise DataError(f"{path}:{lineno}: expected {len(head)} fields, got {len(r)}")
        sid = r[0]
        try:
            tv, yv = float(r[1]), float(r[2])
            xv = [float(r[k]) for k in cidx]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if sid not in t:
            order.append(sid)
            t[sid], y[sid], x[sid] = [], [], xv
        elif xv != x[sid]:
            raise DataError(f"{path}:{lineno}: covariates vary within subject {sid}")
        t[sid].append(tv)
        y[sid].append(yv)
    times, values = [], []
    for sid in order:
        tt, yy = np.array(t[sid]), np.array(y[sid])
        k = np.argsort(tt, kind="stable")
        times.append(tt[k])
        values.append(yy[k])
    X = np.array([x[s] for s in order], dtype=float).reshape(len(order), len(cidx))
    return Dataset(times, values, covariates=X, subject_ids=order)


def write_labels(path, data: Dataset, chash: str, seed):
    with open(path, "w", newline="") as fh:
        fh.write(_header(chash, seed))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "label"])
        for sid, lab in zip(data.subject_ids, data.labels):
            w.writerow([sid, LABEL_NAMES[int(lab)]])


def read_labels(path, data: Dataset) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    pos = {s: k for k, s in enumerate(data.subject_ids)}
    lab = np.full(data.n_subjects, FREE)
    for r in rows[1:]:
        if r[0] not in pos:
            raise DataError(f"{path}: unknown subject {r[0]}")
        if r[1] not in LABEL_CODES:
            raise DataError(f"{path}: unknown label {r[1]!r}")
        lab[pos[r[0]]] = LABEL_CODES[r[1]]
    return lab


def _truth_to_json(truth: GroundTruth, cfg: SimConfig, labels) -> dict:
    d = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(truth).items()}
    d["labels"] = [LABEL_NAMES[int(v)] for v in labels]
    d["n_interior_shape"] = cfg.n_interior_shape
    d["n_interior_warp"] = cfg.n_interior_warp
    return d


def read_truth(path) -> GroundTruth:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read ground truth {path}: {exc}") from exc
    keep = {k: d[k] for k in _names(GroundTruth) if k in d}
    for k in ("gamma1", "gamma2", "phi", "pi", "c", "eta"):
        if keep.get(k) is not None:
            keep[k] = np.asarray(keep[k], dtype=float)
    return GroundTruth(**keep)


# ----------------------------------------------------------------------
# draws on disk
# ----------------------------------------------------------------------
def _block_matrix(chain: ChainOutput, block: str, ids):
    J = len(chain)
    if block == "scalars":
        cols = list(SCALAR_COLUMNS)
        return cols, np.column_stack([getattr(chain, k) for k in SCALAR_COLUMNS])
    arr = getattr(chain, block)
    if block in ("c", "pi"):
        return list(ids), arr
    if block == "eta":
        cols = [f"{s}:{q}" for s in ids for q in range(arr.shape[2])]
    elif block == "B":
        cols = [f"B{r}_{q}" for r in range(arr.shape[1]) for q in range(arr.shape[2])]
    else:
        cols = [f"{block}_{k}" for k in range(arr.shape[1])]
    return cols, arr.reshape(J, -1)


def write_draws(outdir: Path, chain: ChainOutput, ids, chash, seed):
    outdir.mkdir(parents=True, exist_ok=True)
    for block in BLOCKS:
        cols, mat = _block_matrix(chain, block, ids)
        with open(outdir / f"{block}.csv", "w") as fh:
            fh.write(_header(chash, seed))
            fh.write(",".join(cols) + "\n")
            if mat.size:
                np.savetxt(fh, mat, fmt="%.17g", delimiter=",")


def load_draws(fit_dir) -> tuple:
    """Rebuild a ChainOutput (plus manifest) from a fit directory."""
    fit_dir = Path(fit_dir)
    try:
        manifest = json.loads((fit_dir / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{fit_dir}: no readable manifest.json ({exc})") from exc
    N, Qs, l = manifest["n_subjects"], manifest["q_star"], manifest["n_covariates"]

    def block(name, width):
        if width == 0:
            return np.zeros((manifest["n_draws"], 0))
        arr = np.loadtxt(fit_dir / "draws" / f"{name}.csv", delimiter=",", skiprows=2, ndmin=2)
        return arr.reshape(-1, width)

    sc = block("scalars", len(SCALAR_COLUMNS))
    J = sc.shape[0]
    lo, hi = manifest["internal_domain"]
    kv_s = make_knots(lo, hi, manifest["knots"]["p"])
    kv_w = make_knots(lo, hi, manifest["knots"]["h"])
    chain = ChainOutput(
        c=block("c", N), pi=block("pi", N), eta=block("eta", N * Qs).reshape(J, N, Qs),
        gamma1=block("gamma1", kv_s.dimension), gamma2=block("gamma2", kv_s.dimension),
        B=block("B", l * Qs).reshape(J, l, Qs),
        **{k: sc[:, j] for j, k in enumerate(SCALAR_COLUMNS)},
        accept_eta=np.full(N, np.nan), accept_pi=np.full(N, np.nan), accept_rho=float("nan"),
        tau=np.full(N, np.nan), kv_s=kv_s, kv_w=kv_w,
        identity_target=np.asarray(manifest["identity_target"]),
    )
    return chain, manifest


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def _replicate_seeds(seed: int, n: int):
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def cmd_simulate(args) -> int:
    raw = load_config(args.config) if args.config else {}
    _strict(raw, _names(SimConfig), "simulation config")
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        base = SimConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_rep = args.replicates or 1
    seeds = [base.seed] if n_rep == 1 else _replicate_seeds(base.seed, n_rep)
    effective = asdict(base)
    chash = config_hash({"command": "simulate", **effective, "replicates": n_rep})
    entries = []
    for r, seed in enumerate(seeds):
        cfg = SimConfig(**{**effective, "seed": seed})
        data, truth = simulate_dataset(cfg)
        stem = "data" if n_rep == 1 else f"rep{r:03d}"
        write_dataset(out / f"{stem}.csv", data, chash, seed)
        write_labels(out / f"{stem}_labels.csv", data, chash, seed)
        with open(out / f"{stem}_truth.json", "w") as fh:
            json.dump(_truth_to_json(truth, cfg, data.labels), fh, indent=1)
        entries.append({"replicate": r, "seed": seed, "data": f"{stem}.csv",
                        "labels": f"{stem}_labels.csv", "truth": f"{stem}_truth.json"})
    manifest = {"command": "simulate", "config": effective, "config_hash": chash,
                "seed": base.seed, "replicates": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    print(f"wrote {n_rep} dataset(s) to {out}")
    return EXIT_OK


def _resolve_labels(opts, data: Dataset, base_dir: Path) -> tuple:
    opts = opts or {"mode": "none"}
    mode = opts.get("mode", "none")
    if mode == "none":
        _strict(opts, {"mode"}, "labels")
        return np.full(data.n_subjects, FREE), {}
    if mode == "explicit":
        _strict(opts, {"mode", "feature1", "feature2"}, "labels")
        plan = LabelPlan(list(opts.get("feature1", [])), list(opts.get("feature2", [])))
        return plan.labels_for(data), {}
    if mode == "file":
        _strict(opts, {"mode", "path"}, "labels")
        return read_labels(base_dir / opts["path"], data), {}
    if mode == "heuristic":
        _strict(opts, {"mode", "n_peak", "n_noise", "band"}, "labels")
        plan = plan_labels(data, int(opts.get("n_peak", 0)), int(opts.get("n_noise", 0)), opts["band"])
        return plan.labels_for(data), {"feature1": plan.feature1_ids, "feature2": plan.feature2_ids}
    raise ConfigError(f"unknown labels mode {mode!r}")


def _fit_one(job) -> dict:
    """Fit one data file; runs inside a worker process."""
    raw, data_path, out, seed, chash = job
    base_dir = Path(raw.get("_base_dir", "."))
    t0 = time.time()
    data = read_dataset(data_path, raw.get("covariates", []))
    provenance = _read_header(data_path)

    # the domain mapping is computed on raw times so it can be inverted later
    lo_raw, hi_raw = raw.get("domain") or (float(data.t_flat.min()), float(data.t_flat.max()))
    rescale = bool(raw.get("rescale_time", False))
    times = [(t - lo_raw) / (hi_raw - lo_raw) for t in data.times] if rescale else data.times
    values = [log_transform(y) for y in data.values] if raw.get("log_transform") else data.values
    X = data.covariates
    if X.shape[1]:
        X = X - X.mean(axis=0)
    data = Dataset(times, values, covariates=X, subject_ids=data.subject_ids)
    labels, label_plan = _resolve_labels(raw.get("labels"), data, base_dir)
    data = data.with_labels(labels)

    knots = {"p": 15, "h": 1, **raw.get("knots", {})}
    hp = Hyperparameters(**raw.get("hyperparameters", {}))
    ccfg = ChainConfig(**{**raw.get("chain", {}), "seed": seed,
                          "n_interior_shape": knots["p"], "n_interior_warp": knots["h"]})
    chain = run_chain(data, hp, ccfg)

    out.mkdir(parents=True, exist_ok=True)
    write_draws(out / "draws", chain, data.subject_ids, chash, seed)
    manifest = {
        "command": "fit", "config_hash": chash, "seed": seed, "data": str(data_path),
        "data_provenance": provenance, "n_subjects": data.n_subjects,
        "n_covariates": data.n_covariates, "covariates": raw.get("covariates", []),
        "q_star": chain.eta.shape[2], "n_draws": len(chain), "knots": knots,
        "subject_ids": data.subject_ids, "labels": [LABEL_NAMES[int(v)] for v in labels],
        "label_plan": label_plan,
        "time_map": {"rescaled": rescale, "lo": lo_raw, "hi": hi_raw},
        "internal_domain": [chain.kv_s.domain_lo, chain.kv_s.domain_hi],
        "identity_target": chain.identity_target.tolist(),
        "log_transform": bool(raw.get("log_transform", False)),
        "hyperparameters": asdict(hp), "chain": asdict(ccfg),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    diagnostics = {
        "accept_eta": chain.accept_eta.tolist(),
        "accept_pi": [None if np.isnan(v) else v for v in chain.accept_pi],
        "accept_rho": None if np.isnan(chain.accept_rho) else chain.accept_rho,
        "tau": chain.tau.tolist(), "clamped_evaluations": int(chain.clamp_count),
        "median_loglik": float(np.median(chain.loglik)), "seconds": time.time() - t0,
    }
    (out / "diagnostics.json").write_text(json.dumps(diagnostics, indent=1))
    return {"out": str(out), "median_loglik": diagnostics["median_loglik"]}


def cmd_fit(args) -> int:
    if not args.config:
        raise ConfigError("fit needs --config")
    raw = load_config(args.config)
    _strict(raw, FIT_KEYS, "fit config")
    _strict(raw.get("knots", {}), {"p", "h"}, "knots")
    _strict(raw.get("hyperparameters", {}), _names(Hyperparameters), "hyperparameters")
    _strict(raw.get("chain", {}), _names(ChainConfig) - {"n_interior_shape", "n_interior_warp"}, "chain")
    if "data" not in raw:
        raise ConfigError("fit config needs a 'data' entry")
    try:
        Hyperparameters(**raw.get("hyperparameters", {}))
        ChainConfig(**raw.get("chain", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    base_dir = Path(args.config).resolve().parent
    seed = args.seed if args.seed is not None else int(raw.get("chain", {}).get("seed", 0))
    effective = {**raw, "chain": {**raw.get("chain", {}), "seed": seed}}
    chash = config_hash({"command": "fit", **effective})
    effective["_base_dir"] = str(base_dir)

    paths = raw["data"] if isinstance(raw["data"], list) else [raw["data"]]
    paths = [base_dir / p for p in paths]
    out = Path(args.out)
    n_rep = args.replicates or 1
    seeds = [seed] if n_rep == 1 else _replicate_seeds(seed, n_rep)
    jobs = []
    for p in paths:
        for r, s in enumerate(seeds):
            sub = out if len(paths) == 1 and n_rep == 1 else out / (p.stem if n_rep == 1 else f"{p.stem}_chain{r}")
            jobs.append((effective, p, sub, s, chash))
    threads = max(1, args.threads or 1)
    if threads == 1 or len(jobs) == 1:
        results = [_fit_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_fit_one, jobs))
    for r in results:
        print(f"{r['out']}: median log-likelihood {r['median_loglik']:.2f}")
    return EXIT_OK


def _write_table(path, header, rows, chash, seed):
    with open(path, "w", newline="") as fh:
        fh.write(_header(chash, seed))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v for v in r])


def _summary_rows(summary, to_natural, extra=()):
    g = to_natural(summary.grid)
    return [(*extra, g[k], summary.median[k], summary.lower[k], summary.upper[k]) for k in range(len(g))]


def cmd_summarize(args) -> int:
    what = args.what
    fit_dirs = [Path(d) for d in args.draws]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if what == "metrics":
        if not args.truth or len(args.truth) != len(fit_dirs):
            raise ConfigError("metrics needs one --truth file per --draws directory")
        rows = []
        for d, tp in zip(fit_dirs, args.truth):
            chain, man = load_draws(d)
            m = recovery_metrics(chain, read_truth(tp))
            rows.append([str(d), man["seed"], m["median_loglik"], m["rmise_f1"], m["rmise_f2"],
                         m["rmise_f1_std"], m["rmise_f2_std"], m["rho_hat"], m["rho_sq_error"]])
        keep = set(mode_filter([r[2] for r in rows]).tolist()) if len(rows) > 1 else {0}
        for k, r in enumerate(rows):
            r.append(int(k in keep))
        header = ["fit", "seed", "median_loglik", "rmise_f1", "rmise_f2", "rmise_f1_std",
                  "rmise_f2_std", "rho_hat", "rho_sq_error", "retained"]
        _write_table(out / "metrics.csv", header, rows, config_hash({"metrics": [str(d) for d in fit_dirs]}), "-")
        print(f"wrote {out / 'metrics.csv'}")
        return EXIT_OK

    for d in fit_dirs:
        chain, man = load_draws(d)
        tm = man["time_map"]
        if tm["rescaled"]:
            span = tm["hi"] - tm["lo"]
            to_nat = lambda u, lo=tm["lo"], s=span: lo + s * np.asarray(u)  # noqa: E731
        else:
            to_nat = np.asarray
        lo, hi = man["internal_domain"]
        chash, seed = man["config_hash"], man["seed"]
        dest = out if len(fit_dirs) == 1 else out / d.name
        dest.mkdir(parents=True, exist_ok=True)
        ids = man["subject_ids"]
        band = ["grid", "median", "lower", "upper"]
        if what == "shapes":
            grid = np.linspace(lo, hi, args.grid_points)
            for k in (1, 2):
                s = shape_estimate(chain, k, grid, args.level)
                _write_table(dest / f"shape_f{k}.csv", band, _summary_rows(s, to_nat), chash, seed)
        elif what in ("fits", "warps"):
            grid = np.linspace(lo, hi, args.grid_points)
            fn = fitted_curve if what == "fits" else warp_summary
            rows = []
            for i, sid in enumerate(ids):
                s = fn(chain, i, grid, args.level)
                if what == "warps":
                    s.median, s.lower, s.upper = to_nat(s.median), to_nat(s.lower), to_nat(s.upper)
                rows += _summary_rows(s, to_nat, (sid,))
            _write_table(dest / f"{what}.csv", ["subject_id", *band], rows, chash, seed)
        elif what == "register":
            data = _reload_fit_data(man)
            rows = []
            for i, sid in enumerate(ids):
                for feature in (1, 2):
                    nt, vals = register_curve(chain, i, data, feature)
                    rows += [(sid, feature, to_nat(data.times[i][j]), to_nat(nt[j]), vals[j]) for j in range(len(nt))]
            _write_table(dest / "registered.csv", ["subject_id", "feature", "t", "t_registered", "y"], rows, chash, seed)
        elif what == "paf":
            grid = np.linspace(lo, hi, args.grid_points)
            paf = to_nat(paf_distribution(chain, grid))
            _write_table(dest / "paf.csv", ["paf"], [(v,) for v in paf], chash, seed)
        print(f"wrote {what} for {d} to {dest}")
    return EXIT_OK


def _reload_fit_data(man) -> Dataset:
    data = read_dataset(man["data"], man.get("covariates", []))
    tm = man["time_map"]
    times = [(t - tm["lo"]) / (tm["hi"] - tm["lo"]) for t in data.times] if tm["rescaled"] else data.times
    values = [log_transform(y) for y in data.values] if man.get("log_transform") else data.values
    return Dataset(times, values, subject_ids=data.subject_ids)


# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="warpmix", description="Registration and mixed-membership fitting of two-feature curves.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, help="overrides the configured seed")
        sp.add_argument("--replicates", type=int, help="number of replicate datasets or chains")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")

    common(sub.add_parser("simulate", help="generate synthetic datasets"))
    common(sub.add_parser("fit", help="run the sampler on one or more data files"))
    s = sub.add_parser("summarize", help="posterior summaries of fitted chains")
    common(s)
    s.add_argument("--draws", nargs="+", required=True, help="fit output directories")
    s.add_argument("--what", required=True, choices=["fits", "shapes", "warps", "register", "paf", "metrics"])
    s.add_argument("--truth", nargs="+", help="ground-truth files, one per fit (metrics only)")
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--grid-points", type=int, default=1001)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.replicates is not None and args.replicates < 1:
        print("error: --replicates must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    handler = {"simulate": cmd_simulate, "fit": cmd_fit, "summarize": cmd_summarize}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, KeyError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

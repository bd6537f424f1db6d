"""Command line front end: ``liouville <command> --config run.json --out DIR``.

Configuration schema (JSON object, unknown keys are rejected)::

    {
      "domain":      {"annulus": {"R1": 2, "R2": 0.5}}   # or circles/fourier/points,
                                                         # or a path to such a file,
                                                         # or {"model": {"R": 1, "q": 0.25}}
      "lambda":      [1e-3, 1e-4],
      "constants":   {"M": 1.0, "theta": 0.3, ...},       # SolverConstants overrides
      "resolution":  {"boundary": 256, "series": 128, "free_boundary": 257,
                      "n_elements": 12, "order": 16, "n_theta": 1},
      "options":     {...}                                # command specific, see OPTIONS
    }

Every output file carries the SHA-256 of the canonical config and the
constants actually used. Floats are printed with 17 significant digits, so
identical configs give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import LiouvilleError

log = logging.getLogger("liouville_max")

COMMANDS = ("map", "free-boundary", "measure", "resonances", "match-solve", "inner-modes",
            "fundamental-set", "modulate", "assemble", "residual-study", "branch", "validate")

TOP_KEYS = {"domain", "lambda", "constants", "resolution", "options"}
RESOLUTION_KEYS = {"boundary", "series", "free_boundary", "n_elements", "order", "n_theta",
                   "focus_width"}
CONSTANT_KEYS = {"M", "m1", "m_rho", "m2", "m_rho_bar", "theta", "eps", "omega_star", "sigma",
                 "K"}
OPTIONS = {
    "map": {"samples"},
    "free-boundary": set(),
    "measure": {"n_r"},
    "resonances": {"N"},
    "match-solve": {"alpha", "fields", "n_modes", "allow_resonant"},
    "inner-modes": {"alpha", "kmax"},
    "fundamental-set": {"omega", "eps", "T"},
    "modulate": {"Q", "window", "max_iter", "tol"},
    "assemble": {"strict"},
    "residual-study": set(),
    "branch": {"n_points", "lam_min", "nonradial_k", "nonradial_lam_stop"},
    "validate": {"n_profile"},
}
NEEDS_LAMBDA = {"modulate", "assemble", "residual-study", "validate"}


class ConfigError(ValueError):
    """Invalid run configuration (exit status 2)."""


@dataclass
class RunConfig:
    domain: object = None
    lam: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    resolution: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @property
    def hash(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def res(self, key, default):
        return self.resolution.get(key, default)


def _check_keys(where: str, got, allowed):
    if not isinstance(got, dict):
        raise ConfigError(f"{where} must be an object")
    bad = sorted(set(got) - set(allowed))
    if bad:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(bad)}")


def parse_config(raw: dict, command: str, base_dir: Path = Path(".")) -> RunConfig:
    """Validate ``raw`` for ``command``; raises :class:`ConfigError`."""
    from .solver import SolverConstants

    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    _check_keys("config", raw, TOP_KEYS)
    _check_keys("resolution", raw.get("resolution", {}), RESOLUTION_KEYS)
    _check_keys("constants", raw.get("constants", {}), CONSTANT_KEYS)
    _check_keys(f"options for {command}", raw.get("options", {}), OPTIONS[command])
    lam = raw.get("lambda", [])
    if not isinstance(lam, list) or not all(isinstance(x, (int, float)) for x in lam):
        raise ConfigError("lambda must be a list of numbers")
    if any(not (0 < x < 1) for x in lam):
        raise ConfigError("every lambda must lie in (0, 1)")
    if command in NEEDS_LAMBDA and not lam:
        raise ConfigError(f"{command} needs a non-empty lambda list")
    try:
        SolverConstants(**raw.get("constants", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid constants: {e}") from e
    dom = raw.get("domain", {"annulus": {"R1": 2.0, "R2": 0.5}})
    if isinstance(dom, str):
        p = Path(dom) if Path(dom).is_absolute() else base_dir / dom
        try:
            dom = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read domain file {p}: {e}") from e
    if not isinstance(dom, dict):
        raise ConfigError("domain must be an object or a file path")
    return RunConfig(dom, [float(x) for x in lam], dict(raw.get("constants", {})),
                     dict(raw.get("resolution", {})), dict(raw.get("options", {})), raw, base_dir)


# ----------------------------------------------------------------------------
# deterministic emission


def fmt(x) -> str:
    """17 significant digits; integers and strings unchanged."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def to_json(obj, indent: int = 0) -> str:
    """Canonical JSON with sorted keys and 17-digit floats (non-finite as strings)."""
    pad, pad1 = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad1}{json.dumps(str(k))}: {to_json(v, indent + 1)}'
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj.tolist() if isinstance(obj, np.ndarray) else obj)
        if not seq:
            return "[]"
        return "[" + ", ".join(to_json(v, indent + 1) for v in seq) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json([obj.real, obj.imag], indent)
    if isinstance(obj, (float, np.floating)) and not math.isfinite(float(obj)):
        return json.dumps(fmt(obj))
    if isinstance(obj, (bool, np.bool_, int, np.integer, float, np.floating)):
        return fmt(obj)
    return json.dumps(str(obj))


class Emitter:
    """Writes files into ``out`` with the config hash and constants embedded."""

    def __init__(self, out: Path, cfg: RunConfig, command: str, seed: int | None):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.meta = {"command": command, "config_hash": cfg.hash, "seed": seed,
                     "constants": _constants(cfg).as_dict()}
        self.files: list[str] = []

    def json(self, name: str, payload: dict):
        body = dict(payload)
        body["meta"] = self.meta
        (self.out / name).write_text(to_json(body) + "\n")
        self.files.append(name)

    def csv(self, name: str, header, rows):
        buf = io.StringIO()
        buf.write(f"# config_hash={self.meta['config_hash']}\n")
        buf.write(f"# constants={json.dumps(self.meta['constants'], sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
        (self.out / name).write_text(buf.getvalue())
        self.files.append(name)


# ----------------------------------------------------------------------------
# pipeline pieces


def _constants(cfg: RunConfig):
    from .solver import SolverConstants
    return SolverConstants(**cfg.constants)


def _model_only(cfg: RunConfig):
    from .geometry import AnnulusModel
    m = cfg.domain.get("model")
    if m is None:
        return None
    _check_keys("domain.model", m, {"R", "q", "R1", "R2"})
    if "R" in m and "q" in m:
        R, q = float(m["R"]), float(m["q"])
        return AnnulusModel(R / math.sqrt(q), R * math.sqrt(q))
    return AnnulusModel(float(m["R1"]), float(m["R2"]))


def _cmap(cfg: RunConfig):
    from .geometry import AnnulusModel, ConformalMap, build_conformal_map, domain_from_json
    model = _model_only(cfg)
    if model is not None:
        return ConformalMap.identity(model)
    ann = cfg.domain.get("annulus")
    if isinstance(ann, dict) and not any(ann.get("center", [0.0, 0.0])):
        # centred annulus: the map is the identity, skip the numerical fit
        return ConformalMap.identity(AnnulusModel(float(ann["R1"]), float(ann["R2"])))
    try:
        dom = domain_from_json(cfg.domain)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"malformed domain: {e}") from e
    return build_conformal_map(dom, (cfg.res("boundary", 256), cfg.res("series", 128)))


def _fb(cfg, cmap):
    from .geometry import free_boundary
    return free_boundary(cmap, n=cfg.res("free_boundary", 257))


def _disc(cfg, model, cmap, width=0.1):
    from .solver import PolarDiscretization
    nt = cfg.res("n_theta", 1)
    d = PolarDiscretization(model, n_theta=nt, n_elements=cfg.res("n_elements", 12),
                            order=cfg.res("order", 16), focus_width=cfg.res("focus_width", width))
    if not cmap.is_identity:
        d = PolarDiscretization(model, d.mesh, nt, np.abs(cmap.inverse_derivative(d.points())) ** 2)
    return d


def cmd_map(cfg, em):
    cm = _cmap(cfg)
    n = int(cfg.options.get("samples", 16))
    m = cm.model
    rr = np.linspace(m.R2, m.R1, n + 2)[1:-1]
    zeta = rr * np.exp(2j * np.pi * np.arange(n) / n)
    z = cm.inverse(zeta)
    em.csv("map_samples.csv", ["zeta_re", "zeta_im", "z_re", "z_im"],
           zip(zeta.real, zeta.imag, z.real, z.imag))
    em.json("map.json", {"model": m.as_dict(), "identity": cm.is_identity,
                         "boundary_residual": cm.boundary_residual,
                         "round_trip_error": float(np.max(cm.round_trip_error(z))),
                         "cauchy_riemann_residual": float(np.max(cm.cauchy_riemann_residual(z)))})


def cmd_free_boundary(cfg, em):
    from .geometry import normal_balance_defect
    cm = _cmap(cfg)
    fb = _fb(cfg, cm)
    em.csv("free_boundary.csv", ["s", "x", "y", "normal_deriv", "curvature"], fb.to_table())
    em.json("free_boundary.json", {"model": cm.model.as_dict(), "length": fb.length,
                                   "flux_integral": fb.flux_integral(),
                                   "normal_balance_defect": normal_balance_defect(fb, cm.model),
                                   "chart_width": fb.chart_width})


def cmd_measure(cfg, em):
    from .harmonic import harmonic_measure
    model = _model_only(cfg) or _cmap(cfg).model
    hm = harmonic_measure(model)
    n = int(cfg.options.get("n_r", 33))
    rm = np.linspace(model.R2, model.R, n)
    rp = np.linspace(model.R, model.R1, n)
    em.csv("measure.csv", ["r", "H"], list(zip(rm, hm.H_minus(rm))) + list(zip(rp[1:], hm.H_plus(rp[1:]))))
    em.json("measure.json", {"model": model.as_dict(), "measure": hm.as_dict()})


def cmd_resonances(cfg, em):
    from .matching import gap_threshold_index, mode0_resonance, resonance_sequence
    model = _model_only(cfg) or _cmap(cfg).model
    N = int(cfg.options.get("N", 20))
    if N < 1:
        raise ConfigError("N must be >= 1")
    a = resonance_sequence(model, N)
    em.csv("resonances.csv", ["n", "alpha_n"], zip(range(1, N + 1), a))
    em.json("resonances.json", {"model": model.as_dict(), "mode0_resonance": mode0_resonance(model),
                                "gap_threshold_index": gap_threshold_index(model)})


def _alpha(cfg, model, cmap=None):
    if "alpha" in cfg.options:
        return float(cfg.options["alpha"])
    if not cfg.lam:
        raise ConfigError("give options.alpha or a lambda list")
    from .profile import scaling_params
    cmap = cmap or _cmap(cfg)
    return scaling_params(cfg.lam[0], _fb(cfg, cmap), model, M=_constants(cfg).M).alpha


def cmd_match_solve(cfg, em):
    from .harmonic import AnnulusGrid
    from .matching import matching_solve
    model = _model_only(cfg) or _cmap(cfg).model
    alpha = _alpha(cfg, model)
    src = cfg.options.get("fields")
    if src is None:
        grid = AnnulusGrid.build(model, 64, 33)
        gp = np.zeros((grid.theta.size, grid.r_plus.size))
        gm = np.zeros((grid.theta.size, grid.r_minus.size))
    else:
        p = Path(src) if Path(src).is_absolute() else cfg.base_dir / src
        try:
            data = json.loads(p.read_text())
            gp, gm = np.asarray(data["g_plus"], float), np.asarray(data["g_minus"], float)
        except (OSError, KeyError, ValueError) as e:
            raise ConfigError(f"cannot read fields {p}: {e}") from e
        grid = AnnulusGrid.build(model, gp.shape[0], gp.shape[1])
    res = matching_solve(gp, gm, alpha, model, n_modes=cfg.options.get("n_modes"), grid=grid,
                         allow_resonant=bool(cfg.options.get("allow_resonant", False)))
    k = np.fft.fftfreq(res.h1_modes.size, d=1.0 / res.h1_modes.size).astype(int)
    em.csv("match_modes.csv", ["n", "h1_re", "h1_im", "h2_re", "h2_im"],
           zip(k, res.h1_modes.real, res.h1_modes.imag, res.h2_modes.real, res.h2_modes.imag))
    em.json("match.json", {"alpha": alpha, "boundary_error": res.boundary_error,
                           "norm_report": res.norm_report})


def cmd_inner_modes(cfg, em):
    from .inner_linear import sl_spectrum
    cm = _cmap(cfg)
    alpha = _alpha(cfg, cm.model, cm)
    sp = sl_spectrum(_fb(cfg, cm), alpha, kmax=cfg.options.get("kmax"), model=cm.model)
    em.csv("inner_modes.csv", ["index", "k", "omega", "weyl"],
           zip(range(sp.n), sp.freq_index, sp.omegas, sp.weyl()))
    em.json("inner_modes.json", {"alpha": alpha, "length": sp.length, "R": sp.R})


def cmd_fundamental_set(cfg, em):
    from .inner_linear import fundamental_set
    omega = float(cfg.options.get("omega", 0.5))
    fs = fundamental_set(omega, eps=float(cfg.options.get("eps", _constants(cfg).eps)),
                         T=float(cfg.options.get("T", 30.0)))
    cols = [fs.eta, fs.k_plus, fs.k_minus] + ([fs.l] if fs.l is not None else [])
    em.csv("fundamental_set.csv", ["eta", "k_plus", "k_minus", "l"][:len(cols)], zip(*cols))
    em.json("fundamental_set.json", {"omega": omega, "branch": fs.branch,
                                     "wronskian": fs.wronskian,
                                     "wronskian_drift": fs.wronskian_drift,
                                     "residual": fs.residual})


def cmd_modulate(cfg, em):
    from .inner_linear import sl_spectrum
    from .modulation import orthogonality_closure
    from .profile import scaling_params
    sc = _constants(cfg)
    cm = _cmap(cfg)
    fb = _fb(cfg, cm)
    rows, out = [], []
    for lam in cfg.lam:
        sp = scaling_params(lam, fb, cm.model, M=sc.M)
        spec = sl_spectrum(fb, sp.alpha)
        h = orthogonality_closure(sp, fb, spec, Q=float(cfg.options.get("Q", math.inf)),
                                  window=cfg.options.get("window"), omega_star=sc.omega_star,
                                  eps=sc.eps, tol=float(cfg.options.get("tol", 1e-8)),
                                  max_iter=int(cfg.options.get("max_iter", 50)))
        rows += [(lam, i, p) for i, p in enumerate(h.projections)]
        out.append({"lambda": lam, "beta": sp.beta, "converged": h.converged,
                    "iterations": h.iterations, "contraction": h.contraction,
                    "norms": h.coeffs.norms, "modes": len(h.coeffs.modes)})
    em.csv("closure.csv", ["lambda", "iteration", "projection"], rows)
    em.json("modulate.json", {"runs": out})
    if not all(r["converged"] for r in out):
        raise _Partial("orthogonality closure did not converge")


def cmd_assemble(cfg, em):
    from .harmonic import outer_w0
    from .profile import scaling_params
    from .solver import assemble_u0
    sc = _constants(cfg)
    cm = _cmap(cfg)
    fb = _fb(cfg, cm)
    lam = cfg.lam[0]
    sp = scaling_params(lam, fb, cm.model, M=sc.M)
    oa = outer_w0(cm.model, sp, fb)
    disc = _disc(cfg, cm.model, cm)
    ga = assemble_u0(sp, oa, None, sc, disc, fb, cm, strict=bool(cfg.options.get("strict", False)))
    em.csv("u0.csv", ["r", "theta", "u0", "chi0"],
           ((disc.r[i], disc.theta[j], ga.u0[i, j], ga.cutoffs["chi0"][i, j])
            for i in range(disc.shape[0]) for j in range(disc.shape[1])))
    em.json("assemble.json", {"lambda": lam, "beta": sp.beta, "report": ga.report,
                              "partition_defect": ga.partition_defect()})


def cmd_residual_study(cfg, em):
    from .solver import residual_scaling_study
    cm = _cmap(cfg)
    st = residual_scaling_study(cfg.lam, _constants(cfg), cm.model, cm,
                                n_elements=cfg.res("n_elements", 48), order=cfg.res("order", 12),
                                n_theta=cfg.res("n_theta", 1))
    em.csv("residual_study.csv", ["lambda", "beta", "inner", "outer", "ratio"],
           ((r["lambda"], r["beta"], r["inner"], r["outer"], r["ratio"]) for r in st["rows"]))
    em.json("residual_study.json", st)


def cmd_branch(cfg, em):
    from .solver import nonradial_branch, radial_branches
    model = _model_only(cfg) or _cmap(cfg).model
    o = cfg.options
    brs = radial_branches(model, int(o.get("n_points", 40)), float(o.get("lam_min", 1e-8)))
    rows = [(b.label, p["lambda"], p["c"], p["r0"], p["mass"], p["normalized_mass"], p["sup_u"])
            for b in brs for p in b.table()]
    em.csv("branch.csv", ["branch", "lambda", "c", "r0", "mass", "normalized_mass", "sup_u"], rows)
    payload = {"model": model.as_dict(), "labels": [b.label for b in brs]}
    if "nonradial_k" in o:
        nb = nonradial_branch(model, int(o["nonradial_k"]),
                              lam_stop=float(o.get("nonradial_lam_stop", 0.1)))
        keys = ["lambda", "sup_u", "mass", "concentration", "n_peaks", "residual"]
        em.csv("branch_nonradial.csv", keys, ([p[k] for k in keys] for p in nb.points))
        payload["nonradial"] = {"label": nb.label, "k": nb.k, "lam_range": nb.lam_range}
    em.json("branch.json", payload)


def cmd_validate(cfg, em):
    from .solver import validate_theorem
    cm = _cmap(cfg)
    rep = validate_theorem(cfg.lam, cm.model, cm, n_profile=int(cfg.options.get("n_profile", 201)))
    keys = ["lambda", "beta", "normalized_mass", "mass_rel_error", "profile_defect", "r_peak",
            "r_peak_error"]
    em.csv("validate.csv", keys, ([r[k] for k in keys] for r in rep["rows"]))
    em.json("validate.json", rep)


HANDLERS = {c: globals()["cmd_" + c.replace("-", "_")] for c in COMMANDS}


class _Partial(LiouvilleError):
    """Outputs were written but flagged incomplete."""


def _figures(out: Path, files: list[str]):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; --figures ignored")
        return
    for name in files:
        if not name.endswith(".csv"):
            continue
        with open(out / name) as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        head, body = rows[0], rows[1:]
        try:
            data = np.array([[float(x) for x in r] for r in body])
        except ValueError:
            continue
        if data.ndim != 2 or data.shape[1] < 2:
            continue
        fig, ax = plt.subplots()
        for j in range(1, data.shape[1]):
            ax.plot(data[:, 0], data[:, j], label=head[j])
        ax.set_xlabel(head[0])
        ax.legend()
        fig.savefig(out / name.replace(".csv", ".png"), dpi=100)
        plt.close(fig)


def run(command: str, cfg: RunConfig, out: Path, seed: int | None = None,
        figures: bool = False) -> int:
    """Execute ``command``; returns the process exit status."""
    try:
        em = Emitter(out, cfg, command, seed)
    except (TypeError, ValueError) as e:
        log.error("invalid config: %s", e)
        return 2
    status, err = 0, None
    try:
        HANDLERS[command](cfg, em)
    except (ConfigError, ValueError) as e:
        log.error("invalid config: %s", e)
        return 2
    except (LiouvilleError, np.linalg.LinAlgError, FloatingPointError) as e:
        status, err = 3, f"{type(e).__name__}: {e}"
        log.error("numerical failure: %s", err)
    (Path(out) / "status.json").write_text(to_json({
        "status": "ok" if status == 0 else "failed", "error": err,
        "partial": status != 0, "files": em.files, "meta": em.meta}) + "\n")
    if figures and status == 0:
        _figures(Path(out), em.files)
    return status


def _limit_threads(n: int | None):
    if not n:
        return None
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        log.warning("threadpoolctl not installed; --threads ignored")
        return None
    return threadpool_limits(limits=int(n))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="liouville", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=None,
                   help="recorded only; solver arithmetic is deterministic")
    p.add_argument("--figures", action="store_true", help="PNG of each CSV (needs matplotlib)")
    a = p.parse_args(argv)
    logging.basicConfig(level=os.environ.get("LIOUVILLE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = json.loads(a.config.read_text()) if a.config else {}
        cfg = parse_config(raw, a.command, a.config.parent if a.config else Path("."))
    except (OSError, json.JSONDecodeError, ConfigError) as e:
        print(f"liouville: invalid config: {e}", file=sys.stderr)
        return 2
    _guard = _limit_threads(a.threads)
    return run(a.command, cfg, a.out, a.seed, a.figures)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: experiment configuration, execution, CSV emission, plots.

Config files are flat ``key = value`` text ('#' comments, comma-separated
vectors).  Every subcommand is deterministic under a fixed seed and writes its
CSV schema into the output directory; plots are optional conveniences rendered
from the CSV rows and never gate anything.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import fields as field_lib
from .approx import (
    CertificationError,
    default_blend_smoothness,
    extend,
    rate_experiment,
)
from .domain import DomainSpec, LevelTooCoarseError, verify_alpha_type
from .grid import AnisoProfile, MultiIndex
from .recovery import operator_norm_proxy, recovery_experiment, stechkin_experiment
from .spaces import (
    QuadratureConfig,
    SpaceParams,
    averaged_modulus,
    besov_derivative_norm,
    besov_norm,
    sup_modulus,
)

BUNDLED = {"unit_square", "unit_interval", "l_shape", "two_squares"}


@dataclass
class ExperimentConfig:
    """Parsed flat-key configuration with documented defaults."""

    domain: str = "unit_square"
    alpha: tuple[str, ...] = ("1.5", "1.5")
    p: float = 2.0
    q: float = 2.0
    s: float = 2.0
    theta: float = math.inf
    lam: tuple[int, ...] = (0, 0)
    m: tuple[int, ...] | None = None
    k_min: int = 2
    k_max: int = 6
    field: str = "sin_cos"
    depth: int = 12
    nodes: int = 6
    level: int = 4
    shift_nodes: int = 16
    sup_shifts: int = 32
    i_min: int = -2
    i_max: int | None = None    # dyadic t-grid top index; defaults to k_max + 4
    seed: int = 0
    n_probes: int = 16
    rho_stages: tuple[int, ...] = (4, 6, 8, 10)
    rho_margin: float = 1.05
    mode: str = "narrow"
    out: str = "out"
    plot: bool = False

    @classmethod
    def parse(cls, path: str | Path) -> "ExperimentConfig":
        cfg = cls()
        text = Path(path).read_text(encoding="utf-8")
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if not hasattr(cfg, key):
                raise ValueError(f"{path}:{ln}: unknown key {key!r}")
            setattr(cfg, key, _convert(key, val, ln, path))
        return cfg

    # derived objects -------------------------------------------------------

    def profile(self) -> AnisoProfile:
        return AnisoProfile.make(list(self.alpha))

    def domain_spec(self) -> DomainSpec:
        if self.domain in BUNDLED:
            text = resources.files("anisoapprox.data").joinpath(f"{self.domain}.txt").read_text()
            return DomainSpec.from_text(text)
        return DomainSpec.load(self.domain)

    def lam_index(self, dim: int) -> MultiIndex:
        lam = tuple(self.lam)[:dim]
        if len(lam) < dim:
            lam = lam + (0,) * (dim - len(lam))
        return MultiIndex(lam)

    def blend(self, profile: AnisoProfile) -> MultiIndex:
        if self.m is not None:
            return MultiIndex(tuple(self.m)[: profile.dim])
        return default_blend_smoothness(profile)

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(
            nodes_per_axis=self.nodes,
            level=self.level,
            shift_nodes=self.shift_nodes,
            sup_shifts=self.sup_shifts,
            i_min=self.i_min,
            i_max=self.k_max + 4 if self.i_max is None else self.i_max,
        )

    def make_field(self, profile: AnisoProfile, dim: int):
        return field_lib.named_field(self.field, dim, profile, self.depth)


def _convert(key: str, val: str, ln: int, path):
    tuple_int = {"lam", "m", "rho_stages"}
    tuple_str = {"alpha"}
    floats = {"p", "q", "s", "theta", "rho_margin"}
    ints = {"k_min", "k_max", "depth", "nodes", "level", "shift_nodes", "sup_shifts",
            "i_min", "i_max", "seed", "n_probes"}
    bools = {"plot"}
    try:
        if key in tuple_str:
            return tuple(tok.strip() for tok in val.split(","))
        if key in tuple_int:
            return tuple(int(tok) for tok in val.split(","))
        if key in floats:
            return math.inf if val.lower() in ("inf", "infinity") else float(val)
        if key in ints:
            return int(val)
        if key in bools:
            return val.lower() in ("1", "true", "yes")
        return val
    except ValueError as exc:
        raise ValueError(f"{path}:{ln}: bad value for {key!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[h]) for h in header])


def maybe_plot(path: Path, header: list[str], rows: list[dict], x: str, ys: list[str]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    xs = [row[x] for row in rows]
    for y in ys:
        ax.plot(xs, [row[y] for row in rows], marker="o", label=y)
    ax.set_xlabel(x)
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path.with_suffix(".png"), dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# subcommands

def run_check_domain(cfg: ExperimentConfig, out: Path) -> int:
    domain = cfg.domain_spec()
    profile = cfg.profile()
    m = cfg.blend(profile)
    rep = verify_alpha_type(domain, profile, m, cfg.k_max, mode=cfg.mode, seed=cfg.seed)
    rows = []
    for lc in rep.levels:
        rows.append(
            {
                "k": lc.k,
                "level": " ".join(map(str, lc.kappa)),
                "admissible": int(lc.admissible),
                "covering_ok": int(lc.cond1_ok),
                "chains_ok": int(lc.cond2_ok),
                "n_interior": lc.n_interior,
                "n_active": lc.n_active,
                "gamma0": " ".join(map(str, lc.gamma0)) if lc.gamma0 else "",
                "c0": lc.c0 if lc.c0 is not None else float("nan"),
                "sublevel": lc.sublevel if lc.sublevel is not None else -1,
            }
        )
    header = ["k", "level", "admissible", "covering_ok", "chains_ok", "n_interior",
              "n_active", "gamma0", "c0", "sublevel"]
    write_csv(out / "domain_check.csv", header, rows)
    if rep.passes:
        print(f"certification ({cfg.mode}): passes, K0={rep.K0}, gamma0={rep.gamma0}, "
              f"c0={rep.c0:.3g}" + (f", sublevel={rep.sublevel}" if rep.sublevel is not None else ""))
        return 0
    print(f"certification ({cfg.mode}): FAILS, witness={rep.witness}")
    return 1


def run_approx_rate(cfg: ExperimentConfig, out: Path) -> int:
    domain = cfg.domain_spec()
    profile = cfg.profile()
    f = cfg.make_field(profile, domain.dim)
    lam = cfg.lam_index(domain.dim)
    rep = rate_experiment(f, domain, profile, lam, cfg.p, cfg.q, "E",
                          range(cfg.k_min, cfg.k_max + 1), m=cfg.blend(profile),
                          cfg=cfg.quadrature())
    header = ["k", "error", "log2_error", "predicted_exponent", "fitted_slope"]
    rows = rep.rows()
    write_csv(out / "approx_rate.csv", header, rows)
    if cfg.plot:
        maybe_plot(out / "approx_rate", header, rows, "k", ["error"])
    print(f"approx-rate: fitted_slope={rep.fitted_slope}, predicted={rep.predicted_exponent}, "
          f"exact={rep.exact}")
    if not rep.condition_ok:
        print(
            "rate condition violated: 1 - sum_j (lam_j + (1/p-1/q)_+)/alpha_j must be positive; "
            f"got {rep.condition_value:.4f} -- rate not guaranteed",
            file=sys.stderr,
        )
        return 2
    return 0


def run_recover_rate(cfg: ExperimentConfig, out: Path) -> int:
    domain = cfg.domain_spec()
    profile = cfg.profile()
    f = cfg.make_field(profile, domain.dim)
    lam = cfg.lam_index(domain.dim)
    rep = recovery_experiment([f], domain, profile, lam, cfg.p, cfg.q,
                              range(cfg.k_min, cfg.k_max + 1), m=cfg.blend(profile),
                              cfg=cfg.quadrature())
    header = ["n", "error", "predicted_exponent", "fitted_slope"]
    rows = [
        {"n": n, "error": e, "predicted_exponent": rep.predicted_exponent,
         "fitted_slope": rep.fitted_slope if rep.fitted_slope is not None else float("nan")}
        for n, e in zip(rep.ns, rep.errors)
    ]
    write_csv(out / "recover_rate.csv", header, rows)
    if cfg.plot:
        maybe_plot(out / "recover_rate", header, rows, "n", ["error"])
    print(f"recover-rate: fitted_slope={rep.fitted_slope}, predicted={rep.predicted_exponent}")
    print("note: measured errors are upper-bound constructions (no lower bounds computed)")
    return 0 if rep.condition_ok else 2


def run_stechkin(cfg: ExperimentConfig, out: Path) -> int:
    domain = cfg.domain_spec()
    profile = cfg.profile()
    f = cfg.make_field(profile, domain.dim)
    lam = cfg.lam_index(domain.dim)
    qcfg = cfg.quadrature()
    ks = list(range(cfg.k_min, cfg.k_max + 1))
    proxies = {
        k: operator_norm_proxy(domain, profile, lam, cfg.q, cfg.s, k,
                               n_probes=cfg.n_probes, seed=cfg.seed, cfg=qcfg)
        for k in ks
    }
    rhos = [proxies[k] * cfg.rho_margin for k in cfg.rho_stages if k in proxies]
    rep = stechkin_experiment([f], domain, profile, lam, cfg.p, cfg.q, cfg.s,
                              rhos, ks, m=cfg.blend(profile), n_probes=cfg.n_probes,
                              seed=cfg.seed, cfg=qcfg)
    header = ["rho", "k", "norm_proxy", "error"]
    rows = [
        {"rho": pt.rho, "k": pt.k, "norm_proxy": pt.norm_proxy, "error": pt.error}
        for pt in rep.points
    ]
    write_csv(out / "stechkin.csv", header, rows)
    if cfg.plot:
        maybe_plot(out / "stechkin", header, rows, "rho", ["error"])
    print(f"stechkin: fitted_slope={rep.fitted_slope}, predicted={rep.predicted_slope}")
    print("note: measured errors are upper-bound constructions (no lower bounds computed)")
    return 0


def run_extend_norm(cfg: ExperimentConfig, out: Path) -> int:
    domain = cfg.domain_spec()
    profile = cfg.profile()
    m = cfg.blend(profile)
    f = cfg.make_field(profile, domain.dim)
    qcfg = cfg.quadrature()
    cert = verify_alpha_type(domain, profile, m, cfg.k_max, mode="narrow", seed=cfg.seed)
    if not cert.passes:
        print(f"certification fails: witness={cert.witness}", file=sys.stderr)
        return 1
    params = SpaceParams(cfg.p, cfg.theta, profile)
    src = besov_norm(f, domain, params, qcfg)
    rows = []
    for k_top in range(max(cert.K0 + 1, cfg.k_min), cfg.k_max + 1):
        ext = extend(f, domain, profile, m, k_top, cert)
        box = DomainSpec.make([
            (
                [lo - 0.25 for lo, _ in ext.support_box()],
                [hi + 0.25 for _, hi in ext.support_box()],
            )
        ])
        ext_norm = besov_derivative_norm(ext.as_field(), box, params, qcfg)
        rows.append({"k_max": k_top, "source_norm": src, "extension_norm": ext_norm,
                     "ratio": ext_norm / src})
    header = ["k_max", "source_norm", "extension_norm", "ratio"]
    write_csv(out / "extend_norm.csv", header, rows)
    if cfg.plot:
        maybe_plot(out / "extend_norm", header, rows, "k_max", ["ratio"])
    print("extend-norm: ratios " + ", ".join(f"{r['ratio']:.4g}" for r in rows))
    return 0


def run_moduli(cfg: ExperimentConfig, out: Path) -> int:
    domain = cfg.domain_spec()
    profile = cfg.profile()
    f = cfg.make_field(profile, domain.dim)
    qcfg = cfg.quadrature()
    l = profile.l
    rows = []
    for j in range(domain.dim):
        for i in range(-2, cfg.k_max + 3):
            t = 2.0**-i
            rows.append(
                {
                    "axis": j,
                    "t": t,
                    "omega_sup": sup_modulus(f, domain, j, l[j], t, cfg.p, qcfg),
                    "omega_avg": averaged_modulus(f, domain, j, l[j], t, cfg.p, qcfg),
                }
            )
    header = ["axis", "t", "omega_sup", "omega_avg"]
    write_csv(out / "moduli.csv", header, rows)
    if cfg.plot:
        maybe_plot(out / "moduli", header, [r for r in rows if r["axis"] == 0], "t",
                   ["omega_sup", "omega_avg"])
    print(f"moduli: wrote {len(rows)} rows")
    return 0


COMMANDS = {
    "check-domain": run_check_domain,
    "approx-rate": run_approx_rate,
    "recover-rate": run_recover_rate,
    "stechkin": run_stechkin,
    "extend-norm": run_extend_norm,
    "moduli": run_moduli,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="anisoapprox",
        description="Convergence-rate experiments for anisotropic spline quasi-interpolation",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--plot", action="store_true", help="also render line charts")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    parser.add_argument("--k-min", type=int, default=None)
    parser.add_argument("--k-max", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.parse(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.k_min is not None:
        cfg.k_min = args.k_min
    if args.k_max is not None:
        cfg.k_max = args.k_max
    cfg.plot = cfg.plot or args.plot
    out = Path(cfg.out)
    try:
        return COMMANDS[args.command](cfg, out)
    except (LevelTooCoarseError, CertificationError, ValueError) as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

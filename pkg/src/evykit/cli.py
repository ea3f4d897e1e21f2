"""
Command-line entry point::

    evykit <evy|kernel|fit|simulate|msy|audit> --config <path> [--data <csv>] [--out <dir>]

Exit codes: 0 success, 2 configuration error, 3 domain or precondition
error (including requested minimal catches above the viable yields and
audits finding violations), 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from .core import ConstraintSet, DomainError, InvalidArgumentError, geq
from .estimation import fit, wrss
from .io import (
    ConfigError,
    DataError,
    __version__,
    full,
    load_config,
    provenance,
    read_observations,
    read_trajectory,
    sig3,
    write_report,
    write_trajectory,
)
from .lotka_volterra import LotkaVolterra, lv_evy_closed_form
from .simulate import audit, run
from .viability import AnalyticKernel, favorable_factors, grid_kernel
from .yields import msy_multispecies, msy_schaefer

log = logging.getLogger("evykit")

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4
SPECIES = ("prey", "pred")


class _Out:
    """Output directory writer stamping every file with the provenance header."""

    def __init__(self, directory, cfg):
        self.dir = directory
        self.header = provenance(cfg.sha256)
        os.makedirs(directory, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def open(self, name):
        fh = open(self.path(name), "w", encoding="utf-8", newline="")
        for line in self.header:
            fh.write(line + "\n")
        return fh

    def report(self, name, rows):
        with open(self.path(name), "w", encoding="utf-8") as fh:
            write_report(fh, self.header, rows)

    def table(self, name, header, rows):
        with self.open(name) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)


def cmd_evy(cfg, out, args) -> int:
    cfg.require("model", "constraints")
    params, cons = cfg.model, cfg.constraints
    res = lv_evy_closed_form(params, cons, cfg.state0)
    try:
        factors = favorable_factors(LotkaVolterra(params), cons)
        favorable = "yes" if np.all(geq(factors, 1.0)) else "no"
    except DomainError:
        factors, favorable = np.full(2, np.nan), "no"
    exceeds = [i for i in range(2) if not geq(res.evy[i], cons.catch[i])]

    rows = [("evy",)]
    rows += [(f"evy_{s}", sig3(res.evy[i])) for i, s in enumerate(SPECIES)]
    rows += [(f"branch_{s}", res.branch[i].value) for i, s in enumerate(SPECIES)]
    rows += [("equilibrium_catches",)]
    rows += [(f"equilibrium_catch_{s}", sig3(res.equilibrium[i])) for i, s in enumerate(SPECIES)]
    rows += [("favorable_conditions",)]
    rows += [(f"growth_factor_{s}", sig3(factors[i])) for i, s in enumerate(SPECIES)]
    rows += [("holds", favorable)]
    rows += [("audit",)]
    rows += [(f"min_catch_{s}", sig3(cons.catch[i])) for i, s in enumerate(SPECIES)]
    for i in exceeds:
        rows.append((f"violation_{SPECIES[i]}", f"min_catch {sig3(cons.catch[i])} exceeds evy {sig3(res.evy[i])}"))
    rows.append(("status", "ok" if not exceeds else "min_catch above evy"))
    out.report("evy.txt", rows)
    out.table(
        "evy.csv",
        ["evy_prey", "evy_pred", "equilibrium_catch_prey", "equilibrium_catch_pred",
         "branch_prey", "branch_pred", "favorable"],
        [[*map(full, res.evy), *map(full, res.equilibrium), *(b.value for b in res.branch), favorable]],
    )
    if exceeds:
        log.error("requested minimal catches exceed the ecosystem viable yields for %s",
                  ", ".join(SPECIES[i] for i in exceeds))
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_kernel(cfg, out, args) -> int:
    cfg.require("model", "constraints")
    model = LotkaVolterra(cfg.model)
    g = cfg.grid
    grid = grid_kernel(model, cfg.constraints, g.bounds, g.resolution, g.max_iters, g.n_samples)
    try:
        agreement = grid.agreement(AnalyticKernel(model, cfg.constraints))
    except DomainError:
        agreement = None
    with out.open("kernel.csv") as fh:
        grid.write_csv(fh)
    n_cells = int(np.prod(grid.resolution))
    n_kernel = int(grid.kernel.sum())
    rows = [
        ("kernel",),
        ("resolution", "x".join(map(str, grid.resolution))),
        ("bounds", ", ".join(full(v) for v in grid.bounds.ravel())),
        ("cells", n_cells),
        ("kernel_cells", n_kernel),
        ("empty", "yes" if n_kernel == 0 else "no"),
        ("layers", len(grid.layers)),
        ("stationary_index", "none" if grid.stationary_index is None else grid.stationary_index),
        ("agreement_percent", "n/a" if agreement is None else sig3(100.0 * agreement)),
    ]
    out.report("kernel.txt", rows)
    return EXIT_OK


def cmd_fit(cfg, out, args) -> int:
    if not args.data:
        raise ConfigError("fit needs --data <observations.csv>")
    series = read_observations(args.data)
    fc = cfg.fit.fit_config(series, cfg.model)
    res = fit(series, fc)
    f0 = wrss(fc.initial_guess, series, fc.weights)
    p = res.params
    names = ("R", "L", "alpha", "beta", "K")
    rows = [("parameters",)] + [(k, sig3(v)) for k, v in zip(names, p.as_array())]
    rows += [
        ("fit",),
        ("objective", f"{res.objective:.3g}"),
        ("initial_objective", f"{f0:.3g}"),
        ("converged", "yes" if res.converged else "no"),
        ("iterations", res.iterations),
    ]
    out.report("fit.txt", rows)
    out.table(
        "fit_params.csv",
        [*names, "objective", "initial_objective", "converged", "iterations"],
        [[*map(full, p.as_array()), full(res.objective), full(f0), int(res.converged), res.iterations]],
    )
    out.table(
        "fit_trajectory.csv",
        ["year", "biomass_prey_obs", "biomass_pred_obs", "biomass_prey_pred", "biomass_pred_pred"],
        [[int(y), *map(full, series.biomass[t]), *map(full, res.trajectory_pred[t])] for t, y in enumerate(series.years)],
    )
    return EXIT_OK


def _simulate(cfg):
    cfg.require("model", "state0")
    s = cfg.simulate
    if s.policy.is_viable and cfg.constraints is None:
        raise ConfigError(f"policy {s.policy.kind} needs a [constraints] section")
    return run(LotkaVolterra(cfg.model), cfg.state0, s.policy, cfg.constraints, s.horizon, s.start_year)


def _audit_rows(report):
    rows = [
        ("audit",),
        ("violations", len(report.violations)),
        ("biomass_ok", "yes" if report.biomass_ok else "no"),
        ("catch_ok", "yes" if report.catch_ok else "no"),
        ("first_violation_year", "none" if report.first_violation_year is None else report.first_violation_year),
    ]
    for v in report.violations:
        rows.append(("violation", f"year {v.year} {SPECIES[v.species]} {v.kind} {sig3(v.value)} < {sig3(v.minimum)}"))
    return rows


def cmd_simulate(cfg, out, args) -> int:
    traj = _simulate(cfg)
    with out.open("trajectory.csv") as fh:
        write_trajectory(fh, traj)
    final = traj.states[-1]
    rows = [
        ("simulation",),
        ("policy", cfg.simulate.policy.kind),
        ("horizon", traj.horizon),
        ("final_prey", sig3(final[0])),
        ("final_pred", sig3(final[1])),
        ("mean_catch_prey", sig3(traj.catches[:, 0].mean())),
        ("mean_catch_pred", sig3(traj.catches[:, 1].mean())),
        ("extinction", "yes" if traj.extinction.any() else "no"),
    ]
    if cfg.constraints is not None:
        rows += _audit_rows(audit(traj, cfg.constraints))
    out.report("simulate.txt", rows)
    return EXIT_OK


def cmd_msy(cfg, out, args) -> int:
    cfg.require("model")
    p = cfg.model
    model = LotkaVolterra(p)
    m = cfg.msy
    bounds = m.search_bounds
    if bounds is None:
        bounds = np.array([[0.0, p.R - 1.0], [0.0, max(p.beta * p.K - (1.0 - p.L), 0.0)]])
    cons = cfg.constraints or ConstraintSet((0.0, 0.0), (0.0, 0.0))
    results = msy_multispecies(model, cons, bounds, m.resolution, m.refine_steps)
    sch = msy_schaefer(p)
    rows, table = [], []
    for i, r in enumerate(results):
        rows.append((f"msy_{SPECIES[i]}",))
        if r is None:
            rows.append(("msy", "none"))
            table.append([SPECIES[i], "", "", "", "", "", ""])
            continue
        viable = ("yes" if r.viable else "no") if cfg.constraints is not None else "n/a"
        e = r.equilibrium
        rows += [
            ("msy", sig3(r.msy)),
            ("biomass_prey", sig3(e.state[0])),
            ("biomass_pred", sig3(e.state[1])),
            ("effort_prey", sig3(e.efforts[0])),
            ("effort_pred", sig3(e.efforts[1])),
            ("viable", viable),
        ]
        table.append([SPECIES[i], full(r.msy), *map(full, e.state), *map(full, e.efforts), viable])
    rows += [("single_species_prey",), ("msy", sig3(sch.msy)), ("biomass", sig3(sch.biomass))]
    out.report("msy.txt", rows)
    table.append(["schaefer_prey", full(sch.msy), full(sch.biomass), "0.0", "", "", "n/a"])
    out.table("msy.csv", ["species", "msy", "y_E", "z_E", "v_E", "w_E", "viable"], table)
    return EXIT_OK


def cmd_audit(cfg, out, args) -> int:
    cfg.require("constraints")
    traj = read_trajectory(args.data) if args.data else _simulate(cfg)
    report = audit(traj, cfg.constraints)
    source = args.data if args.data else f"simulated {cfg.simulate.policy.kind}"
    out.report("audit.txt", [("source", source)] + _audit_rows(report))
    out.table(
        "audit.csv",
        ["year", "species", "kind", "value", "minimum"],
        [[v.year, SPECIES[v.species], v.kind, full(v.value), full(v.minimum)] for v in report.violations],
    )
    return EXIT_OK if report.ok else EXIT_DOMAIN


COMMANDS = {
    "evy": cmd_evy,
    "kernel": cmd_kernel,
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "msy": cmd_msy,
    "audit": cmd_audit,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evykit", description="Viable yields of harvested ecosystems.")
    ap.add_argument("--version", action="version", version=f"evykit {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--data", help="observation or trajectory CSV")
    ap.add_argument("--out", help="output directory (default: [output] dir, else current directory)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="evykit: %(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        out = _Out(args.out or cfg.output_dir or ".", cfg)
        return COMMANDS[args.command](cfg, out, args)
    except (ConfigError, InvalidArgumentError) as exc:
        log.error("config: %s", exc)
        return EXIT_CONFIG
    except DomainError as exc:
        log.error("%s", exc)
        return EXIT_DOMAIN
    except (DataError, OSError) as exc:
        log.error("i/o: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

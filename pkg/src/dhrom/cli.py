"""Command-line front end.

Every verb reads an optional JSON project file (``--config``) whose
``units`` header must declare SI units with temperatures in degC. Named
pipes, profiles and networks from the file are resolved first, then the
bundled presets. Results are written as CSV files into ``--out``.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import control, costmodel, fom, network, presets, rom
from .thermo import PipeGeometry

EXPECTED_UNITS = {"length": "m", "time": "s", "temperature": "degC",
                  "mass_flux": "kg/s", "velocity": "m/s"}


class ConfigError(ValueError):
    pass


PIPE_PRESETS = {
    "table1": presets.rig_pipe,
    "rig": presets.rig_pipe,
    "table2": presets.table2_pipe,
    "system2": presets.system2_pipe,
}
PROFILE_PRESETS = {"daily": network.daily_supply_profile}


@dataclass
class ProjectConfig:
    pipes: dict = field(default_factory=dict)
    profiles: dict = field(default_factory=dict)
    networks: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: Optional[str]) -> "ProjectConfig":
        if path is None:
            return cls()
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        units = doc.get("units")
        if not isinstance(units, dict):
            raise ConfigError("config needs a 'units' header, e.g. " + json.dumps(EXPECTED_UNITS))
        for key, value in units.items():
            if key in EXPECTED_UNITS and value != EXPECTED_UNITS[key]:
                raise ConfigError(f"unit of {key} must be {EXPECTED_UNITS[key]!r}, got {value!r}")
        return cls(doc.get("pipes", {}), doc.get("profiles", {}), doc.get("networks", {}))

    def pipe(self, name: str) -> fom.PipeConfig:
        if name in self.pipes:
            return _pipe_from_dict(name, self.pipes[name])
        if name in PIPE_PRESETS:
            return PIPE_PRESETS[name]()
        sys1 = network.system1()
        if name in {p.name for p in sys1.pipes}:
            return sys1.pipe(name).config
        available = sorted(set(self.pipes) | set(PIPE_PRESETS) | {"P1", "P2", "P3"})
        raise ConfigError(f"unknown pipe {name!r}; available: {', '.join(available)}")

    def profile(self, spec) -> rom.InputProfile:
        if isinstance(spec, (int, float)):
            return rom.InputProfile.constant(float(spec))
        if isinstance(spec, str):
            try:
                return rom.InputProfile.constant(float(spec))
            except ValueError:
                pass
            if spec in self.profiles:
                return self.profile(self.profiles[spec])
            if spec in PROFILE_PRESETS:
                return PROFILE_PRESETS[spec]()
            available = sorted(set(self.profiles) | set(PROFILE_PRESETS))
            raise ConfigError(f"unknown profile {spec!r}; available: {', '.join(available)}")
        if isinstance(spec, dict):
            try:
                return rom.InputProfile(spec["times"], spec["values"], spec.get("mode", "step"))
            except KeyError as exc:
                raise ConfigError(f"profile needs 'times' and 'values' (missing {exc})") from None
        raise ConfigError(f"cannot interpret profile {spec!r}")

    def network(self, name: str) -> network.NetworkTopology:
        if name in self.networks:
            doc = self.networks[name]
            pipes = []
            for entry in doc["pipes"]:
                cfg = self.pipe(entry["pipe"]) if isinstance(entry["pipe"], str) \
                    else _pipe_from_dict(entry["name"], entry["pipe"])
                pipes.append(network.Pipe(entry["name"], cfg, entry["from"], entry["to"]))
            return network.NetworkTopology(doc.get("producer", "producer"), pipes)
        if name == "system1":
            return network.system1()
        raise ConfigError(f"unknown network {name!r}; available: {', '.join(sorted(self.networks) + ['system1'])}")


def _pipe_from_dict(name: str, d: dict) -> fom.PipeConfig:
    if "preset" in d:
        if d["preset"] not in PIPE_PRESETS:
            raise ConfigError(f"pipe {name}: unknown preset {d['preset']!r}")
        return PIPE_PRESETS[d["preset"]]()
    try:
        dn = d.get("dn", "DN25")
        radii = getattr(presets, dn) if isinstance(dn, str) else dn
        length = float(d["length"])
    except (KeyError, AttributeError) as exc:
        raise ConfigError(f"pipe {name}: {exc}") from None
    geom = PipeGeometry(length=length, depth=float(d.get("depth", presets.BURIAL_DEPTH)), **radii)
    kwargs = dict(geometry=geom, fluid=presets.WATER, steel=presets.STEEL,
                  insulation=presets.PUR_INSULATION, casing=presets.PE_CASING,
                  k_soil=float(d.get("k_soil", presets.K_SOIL)))
    if "mass_flux" in d:
        return fom.PipeConfig.from_mass_flux(float(d["mass_flux"]), **kwargs)
    if "velocity" in d:
        return fom.PipeConfig(velocity=float(d["velocity"]), **kwargs)
    raise ConfigError(f"pipe {name}: give 'velocity' or 'mass_flux'")


def write_csv(path: Path, header: list[str], columns) -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def _out(args) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_tfs(tf_dir: Path, name: str, config: fom.PipeConfig):
    paths = [tf_dir / f"F1_{name}.txt", tf_dir / f"F2_{name}.txt"]
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise ConfigError(
            f"no transfer functions for pipe {name} ({', '.join(missing)}); "
            f"run 'dhrom identify --pipe {name}' first or pass --identify"
        )
    fp = config.fingerprint()
    return tuple(rom.TransferFunction.load(p, expect_fingerprint=fp) for p in paths)


def cmd_fom_sim(args, cfg: ProjectConfig) -> int:
    pipe = cfg.pipe(args.pipe)
    disc = fom.Discretization.from_dx(pipe.geometry.length, args.dx)
    sys_ = fom.assemble(pipe, disc)
    dt = args.dt if args.dt is not None else 0.5 * rom.positive_dt(sys_)
    print(f"dt_max = {sys_.dt_max:.6g} s, dt used = {dt:.6g} s")
    if dt > sys_.dt_max:
        raise fom.StabilityError(f"dt={dt:g} s exceeds the stability limit dt_max={sys_.dt_max:g} s")
    if dt > rom.positive_dt(sys_):
        print(f"warning: dt exceeds {rom.positive_dt(sys_):.6g} s; the scheme loses positivity")
    T0 = args.T0
    x0 = fom.StateVector.uniform(sys_, T0)
    res = fom.simulate(sys_, x0, cfg.profile(args.inlet), cfg.profile(args.ground), dt, args.t_end,
                       keep_states=args.states)
    path = _out(args) / f"fom_{args.pipe}.csv"
    if args.t_end <= 0:
        write_csv(path, ["t", "T_out"], [[], []])
    elif args.states:
        header = ["t", "T_out"] + [f"x{i}" for i in range(sys_.size)]
        write_csv(path, header, [res.t, res.outlet, *res.states.T])
    else:
        write_csv(path, ["t", "T_out"], [res.t, res.outlet])
    print(f"wrote {path}")
    return 0


def cmd_identify(args, cfg: ProjectConfig) -> int:
    pipe = cfg.pipe(args.pipe)
    t_max = None
    if args.t_max1 or args.t_max2:
        d1, d2 = rom.default_horizons(pipe)
        t_max = (args.t_max1 or d1, args.t_max2 or d2)
    resp = rom.step_responses(pipe, dx=args.dx, t_max=t_max)
    out = _out(args)
    if args.sweep:
        orders = list(range(8, 97, 4))
        c1 = rom.rmse_curve(resp.t_inlet, resp.inlet, orders)
        c2 = rom.rmse_curve(resp.t_ground, resp.ground, orders, kind=rom.GROUND)
        path = out / f"rmse_curve_{args.pipe}.csv"
        write_csv(path, ["N", "rmse_F1", "rmse_F2"], [orders, [c1[n] for n in orders], [c2[n] for n in orders]])
        print(f"wrote {path}")
    F1, F2 = rom.identify_pair(resp, args.n1, args.n2)
    e1 = rom.reconstruction_rmse(F1, resp.t_inlet, resp.inlet)
    e2 = rom.reconstruction_rmse(F2, resp.t_ground, resp.ground)
    F1.save(out / f"F1_{args.pipe}.txt")
    F2.save(out / f"F2_{args.pipe}.txt")
    write_csv(out / f"step_{args.pipe}_F1.csv", ["t", "F1"], [resp.t_inlet, resp.inlet])
    write_csv(out / f"step_{args.pipe}_F2.csv", ["t", "F2"], [resp.t_ground, resp.ground])
    print(f"F1: N={F1.order} rmse={e1:.3e} asymptote={F1.asymptote:.6g}")
    print(f"F2: N={F2.order} rmse={e2:.3e} asymptote={F2.asymptote:.6g}")
    return 0


def cmd_rom_sim(args, cfg: ProjectConfig) -> int:
    pipe = cfg.pipe(args.pipe)
    F1, F2 = _load_tfs(Path(args.tf_dir), args.pipe, pipe)
    t, y = rom.simulate_rom(F1, F2, cfg.profile(args.inlet), cfg.profile(args.ground),
                            args.dt, args.t_end, args.T0)
    path = _out(args) / f"rom_{args.pipe}.csv"
    write_csv(path, ["t", "T_out"], [t, y])
    print(f"wrote {path}")
    return 0


def _network_tfs(args, top, out: Path):
    if args.identify:
        tfs, orders = network.identify_network(top, dx=args.dx)
        for name, (F1, F2) in tfs.items():
            F1.save(out / f"F1_{name}.txt")
            F2.save(out / f"F2_{name}.txt")
            print(f"{name}: N1={orders[name]} N2={F2.order}")
        return tfs
    return {p.name: _load_tfs(Path(args.tf_dir), p.name, p.config) for p in top.pipes}


def cmd_network_sim(args, cfg: ProjectConfig) -> int:
    top = cfg.network(args.network)
    supply = cfg.profile(args.supply)
    out = _out(args)
    names = [p.name for p in top.pipes]

    def plan(backend, dt, tfs=None):
        return network.SimulationPlan(dt, args.t_end, backend, supply, T_g=args.T_g, T0=args.T0,
                                      dx=args.dx, transfer_functions=tfs or {}, coupling=args.coupling)

    if args.benchmark:
        tfs = _network_tfs(args, top, out)
        ref = network.simulate_network(top, plan("fom", args.fom_dt))
        write_csv(out / "network_fom.csv", ["t"] + names, [ref.t] + [ref.outlets[n] for n in names])
        rows = []
        for dt in args.dt_list:
            res = network.simulate_network(top, plan("rom", dt, tfs))
            write_csv(out / f"network_rom_dt{dt:g}.csv", ["t"] + names, [res.t] + [res.outlets[n] for n in names])
            errs = [rom.rmse(network.project_linear(res.t, res.outlets[n], ref.t), ref.outlets[n]) for n in names]
            rows.append([dt] + errs)
            print(f"dt_ROM={dt:g} s: " + "  ".join(f"{n}={e:.3e}" for n, e in zip(names, errs)))
        write_csv(out / "rmse_table.csv", ["dt_rom"] + [f"rmse_{n}" for n in names], list(zip(*rows)))
        return 0
    tfs = _network_tfs(args, top, out) if args.backend == "rom" else {}
    res = network.simulate_network(top, plan(args.backend, args.dt, tfs))
    path = out / f"network_{args.backend}.csv"
    write_csv(path, ["t"] + names, [res.t] + [res.outlets[n] for n in names])
    print(f"internal step {res.dt_internal:.6g} s; wrote {path}")
    return 0


def cmd_control(args, cfg: ProjectConfig) -> int:
    pipe = cfg.pipe(args.pipe)
    out = _out(args)
    if args.tf_dir:
        F1, F2 = _load_tfs(Path(args.tf_dir), args.pipe, pipe)
    else:
        F1, F2 = rom.identify_pair(rom.step_responses(pipe), args.n1, args.n2)
    plant = control.Plant(F1, F2, T0=args.T0, T_g=args.T_g if args.T_g is not None else args.T0)
    if args.tune:
        K_u, tau_u = control.find_ultimate_gain(plant, dt=args.dt)
        zn = control.ziegler_nichols(K_u, tau_u)
        print(f"K_u = {K_u:.4f}, tau_u = {tau_u:.1f} s")
        print(f"Ziegler-Nichols: K_p = {zn.K_p:.4f}, K_i = {zn.K_i:.4f}")
        return 0
    K_p = args.kp
    if args.optimize_ki:
        K_i = control.optimize_ki(plant, K_p, tuple(args.ki_range), setpoint=args.setpoint, dt=args.dt,
                                  overshoot_tol=args.overshoot_tol)
        print(f"optimal K_i = {K_i:.5f} for K_p = {K_p:g}")
    else:
        K_i = args.ki
    if args.scenario == "2":
        setpoint = control.scenario2(plant).setpoint
    elif args.scenario == "1":
        setpoint = rom.InputProfile.constant(args.setpoint)
    else:
        setpoint = cfg.profile(args.scenario)
    t_end = args.t_end if args.t_end is not None else (3600.0 if args.scenario == "2" else 1800.0)
    sc = control.Scenario(setpoint, plant, t_end, args.dt, band=args.band)
    res = control.run_scenario(sc, control.PIGains(K_p, K_i))
    path = out / "control.csv"
    write_csv(path, ["t", "T_setting", "T_in", "T_out"], [res.t, res.setpoint, res.T_in, res.T_out])
    print(f"K_p = {K_p:g}, K_i = {K_i:g}")
    for s in res.segments:
        settle = "not settled" if s.settling_time is None else f"settled after {s.settling_time:g} s"
        print(f"segment t={s.start:g}..{s.end:g} s, setpoint {s.setpoint:g}: "
              f"overshoot {s.overshoot:.3f} degC, {settle}")
    print(f"wrote {path}")
    return 0


def cmd_cost(args, cfg: ProjectConfig) -> int:
    out = _out(args)
    if args.grid:
        P = np.unique(np.round(np.logspace(0, 5, 41)).astype(int))
        Q = np.unique(np.round(np.logspace(0, 9, 46)).astype(int))
        grid = costmodel.regime_grid(P, Q)
        pp, qq = np.meshgrid(P, Q, indexing="ij")
        path = out / "regime_grid.csv"
        write_csv(path, ["P", "Q", "sign"], [pp.ravel(), qq.ravel(), grid.ravel()])
        print(f"wrote {path}")
        return 0
    rep = costmodel.CostReport.build(args.P, args.Q, args.c_ov)
    header = ["P", "Q", "C_FOM", "C_ROM", "R", "P_min", "Q_max"]
    cols = [[rep.P], [rep.Q], [rep.C_fom], [rep.C_rom], [rep.R], [rep.P_min], [rep.Q_max]]
    if rep.R_adjusted is not None:
        header += ["C_OV", "A", "R_adjusted"]
        cols += [[rep.C_ov], [rep.A], [rep.R_adjusted]]
    path = out / "cost.csv"
    write_csv(path, header, cols)
    for h, c in zip(header, cols):
        print(f"{h} = {c[0]:.6g}")
    return 0


def cmd_bench(args, cfg: ProjectConfig) -> int:
    pipe = cfg.pipe(args.pipe)
    res = costmodel.bench(args.kernel, pipe, runs=args.runs, dx=args.dx, steps=args.steps, dt=args.dt)
    path = _out(args) / f"bench_{args.kernel}.csv"
    write_csv(path, ["run", "seconds"], [np.arange(1, res.runs + 1), res.times])
    print(f"{args.kernel}: P={res.P} Q={res.Q} runs={res.runs} mean={res.mean:.4g} s "
          f"best={res.best:.4g} s worst={res.worst:.4g} s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dhrom", description="Pipe and network thermal models")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON project file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="accepted for compatibility; all runs are deterministic")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("fom-sim", parents=[common], help="full-order simulation of one pipe")
    p.add_argument("--pipe", default="table2")
    p.add_argument("--inlet", default="1", help="profile name or constant (degC)")
    p.add_argument("--ground", default="0", help="profile name or constant (degC)")
    p.add_argument("--T0", type=float, default=0.0)
    p.add_argument("--dx", type=float, default=0.5)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=300.0)
    p.add_argument("--states", action="store_true", help="also write every state variable")
    p.set_defaults(func=cmd_fom_sim)

    p = sub.add_parser("identify", parents=[common], help="identify F1 and F2 of one pipe")
    p.add_argument("--pipe", default="table2")
    p.add_argument("--n1", type=int, default=48)
    p.add_argument("--n2", type=int, default=16)
    p.add_argument("--t-max1", type=float, default=None)
    p.add_argument("--t-max2", type=float, default=None)
    p.add_argument("--dx", type=float, default=0.5)
    p.add_argument("--sweep", action="store_true", help="also write the RMSE curve for N = 8..96")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("rom-sim", parents=[common], help="reduced-order simulation of one pipe")
    p.add_argument("--pipe", default="table2")
    p.add_argument("--tf-dir", default=".")
    p.add_argument("--inlet", default="1")
    p.add_argument("--ground", default="0")
    p.add_argument("--T0", type=float, default=0.0)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=300.0)
    p.set_defaults(func=cmd_rom_sim)

    p = sub.add_parser("network-sim", parents=[common], help="simulate a pipe network")
    p.add_argument("--network", default="system1")
    p.add_argument("--backend", choices=["fom", "rom"], default="rom")
    p.add_argument("--supply", default="daily")
    p.add_argument("--T_g", type=float, default=10.0)
    p.add_argument("--T0", type=float, default=None)
    p.add_argument("--dt", type=float, default=2.0)
    p.add_argument("--dx", type=float, default=0.5)
    p.add_argument("--t-end", type=float, default=86400.0)
    p.add_argument("--coupling", choices=["direct", "delay"], default="direct")
    p.add_argument("--tf-dir", default=".")
    p.add_argument("--identify", action="store_true", help="identify transfer functions before simulating")
    p.add_argument("--benchmark", action="store_true", help="compare ROM runs against a FOM reference")
    p.add_argument("--fom-dt", type=float, default=2.0)
    p.add_argument("--dt-list", type=float, nargs="+", default=[2.0, 60.0, 120.0, 360.0])
    p.set_defaults(func=cmd_network_sim)

    p = sub.add_parser("control", parents=[common], help="PI control of one pipe")
    p.add_argument("--pipe", default="system2")
    p.add_argument("--tf-dir", default=None)
    p.add_argument("--n1", type=int, default=48)
    p.add_argument("--n2", type=int, default=16)
    p.add_argument("--T0", type=float, default=0.0)
    p.add_argument("--T_g", type=float, default=None)
    p.add_argument("--kp", type=float, default=0.211)
    p.add_argument("--ki", type=float, default=0.0085)
    p.add_argument("--tune", action="store_true", help="search K_u, tau_u and print Ziegler-Nichols gains")
    p.add_argument("--optimize-ki", action="store_true")
    p.add_argument("--ki-range", type=float, nargs=2, default=[0.002, 0.01])
    p.add_argument("--overshoot-tol", type=float, default=0.5)
    p.add_argument("--band", type=float, default=1.0)
    p.add_argument("--scenario", default="1", help="'1', '2' or a setpoint profile name")
    p.add_argument("--setpoint", type=float, default=60.0)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=None, help="default 1800 s, 3600 s for scenario 2")
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("cost", parents=[common], help="flop-count cost model")
    p.add_argument("--P", type=int, default=8012)
    p.add_argument("--Q", type=int, default=86401)
    p.add_argument("--c-ov", type=float, default=None)
    p.add_argument("--grid", action="store_true", help="write the FOM/ROM regime map")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("bench", parents=[common], help="time a stepping kernel")
    p.add_argument("--kernel", choices=["fom", "rom"], default="rom")
    p.add_argument("--pipe", default="table2")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--dx", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=3600)
    p.add_argument("--dt", type=float, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


NUMERICAL_ERRORS = (fom.StabilityError, rom.HorizonExhausted, rom.IdentificationError,
                    control.TuningError, np.linalg.LinAlgError, FloatingPointError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ProjectConfig.load(args.config)
        return args.func(args, cfg)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, network.TopologyError, ValueError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

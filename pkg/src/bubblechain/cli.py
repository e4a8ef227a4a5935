"""Command-line scenario runner: ``bubblechain run|validate|gatecount <config>``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .compiler import (
    compile_trotter_circuit,
    compiled_report,
    entangling_count_vs_time,
    qubit_embedding_estimate,
    simulate_density,
)
from .config import ScenarioConfig, load_config
from .effective import compare_series, derive_manifold_mapping
from .errors import BubbleChainError, ConfigError, TooLarge
from .evolution import (
    ExactPropagator,
    TimeSeries,
    TrotterPlan,
    aggregate_symmetric,
    evolve_exact,
    evolve_trotter,
    physicality_fraction,
    post_select,
    sample_measurements,
    table_to_csv,
    time_integrated_population,
)
from .model import (
    ALL_ROLES,
    ModelParams,
    Sector,
    derive_reflection,
    identify_string_states,
    physical_subspace,
)
from .qudit import StateVector

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NORM_GUARD = 1e-8


def resolve_initial_state(cfg: ScenarioConfig, params: ModelParams | None = None) -> StateVector:
    params = params or cfg.params
    reg = params.register
    if cfg.initial_weights:
        try:
            return StateVector.superposition(reg, cfg.initial_weights)
        except TooLarge:
            raise
        except BubbleChainError as exc:
            raise ConfigError(f"invalid explicit initial state: {exc}") from exc
    preset = cfg.initial_preset or ("PLUS" if cfg.scenario in ("fluctuations", "breaking") else "S")
    expected = {"S_ONE": Sector.ONE, "S_HALF": Sector.HALF}.get(preset)
    if expected is not None and expected is not params.sector:
        raise ConfigError(f"preset {preset} does not belong to sector {params.sector.value}")
    try:
        roles = {"PLUS": ALL_ROLES, "MINUS": ALL_ROLES, "B": ("straight", "broken")}.get(preset, ("straight",))
        states = identify_string_states(params, seed=cfg.seed, require=roles)
        return states.preset(preset, reg)
    except TooLarge:
        raise
    except BubbleChainError as exc:
        raise ConfigError(f"cannot resolve preset {preset}: {exc}") from exc


def mirror_pairs(params: ModelParams, labels) -> list[list[str]]:
    refl = derive_reflection(params.sector)
    labels = set(labels)
    out = []
    for lab in sorted(labels):
        img = refl.apply(lab).label
        if img != lab and img in labels and lab < img:
            out.append([lab, img])
    return out


def _check_norms(series: TimeSeries) -> None:
    drift = np.max(np.abs(series.populations.sum(axis=1) - 1.0))
    if drift > NORM_GUARD:
        raise FloatingPointError(f"population sum drifted by {drift:.3g}")


def _postprocess(cfg: ScenarioConfig, series: TimeSeries) -> TimeSeries:
    active = series.active_labels()
    series = series.restrict(active)
    groups = list(cfg.aggregate)
    if cfg.mirror_aggregate:
        used = {s for g in groups for s in g}
        groups += [p for p in mirror_pairs(cfg.params, active) if not used.intersection(p)]
    return aggregate_symmetric(series, groups)


def _prefixed(prefix: str, series: TimeSeries) -> dict[str, np.ndarray]:
    return {f"{prefix}:{k}": v for k, v in series.observables.items()}


class Runner:
    def __init__(self, cfg: ScenarioConfig, out_dir: Path, jobs: int | None = None):
        self.cfg = cfg
        self.out = out_dir
        self.jobs = jobs
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.write_text(text)
        self.written.append(path)
        return path

    def sidecar(self, **extra) -> None:
        meta = {
            "version": __version__,
            "config": self.cfg.to_dict(),
            "seed": self.cfg.seed,
            "bond_order": "left-to-right",
        }
        meta.update(extra)
        self.write("run.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")

    def run(self) -> list[Path]:
        handler = {
            "fluctuations": self.fluctuations,
            "breaking": self.breaking,
            "full-populations": self.full_populations,
            "resonance-scan": self.resonance_scan,
            "gatecount": self.gatecount,
            "effective-compare": self.effective_compare,
        }[self.cfg.scenario]
        handler()
        return self.written

    def _plan(self) -> TrotterPlan:
        t = self.cfg.t_total if self.cfg.t_total is not None else (max(self.cfg.times) if self.cfg.times else 0.0)
        return TrotterPlan(t, self.cfg.n_steps)

    def _exact_and_trotter(self):
        cfg = self.cfg
        psi0 = resolve_initial_state(cfg)
        exact = evolve_exact(cfg.params, psi0, cfg.times)
        trotter = evolve_trotter(cfg.params, psi0, TrotterPlan(max(cfg.times), cfg.n_steps), times=cfg.times)
        _check_norms(exact)
        _check_norms(trotter)
        labels = sorted(set(exact.active_labels()) | set(trotter.active_labels()))
        return psi0, exact.restrict(labels), trotter.restrict(labels)

    def fluctuations(self) -> None:
        cfg = self.cfg
        psi0, exact, trotter = self._exact_and_trotter()
        exact, trotter = _postprocess(cfg, exact), _postprocess(cfg, trotter)
        cols = {**_prefixed("exact", exact), **_prefixed("trotter", trotter)}
        mapping = None
        if cfg.params.sector is Sector.HALF and cfg.params.n_plaquettes == 3:
            mapping = derive_manifold_mapping(cfg.params)
            _, analytic = compare_series(cfg.params, cfg.times)
            for k, lab in enumerate(mapping.labels):
                cols[f"analytic:{lab}"] = analytic[:, k]
        self.write("populations.csv", table_to_csv(cfg.times, cols))
        self._sampling(psi0=psi0)
        self.sidecar(manifold_mapping=mapping.as_dict() if mapping else None)

    def breaking(self) -> None:
        cfg = self.cfg
        psi0, exact, trotter = self._exact_and_trotter()
        states = identify_string_states(cfg.params, seed=cfg.seed, require=("straight",))
        cols = {}
        if states.broken is not None:
            cols["exact:P_B"] = exact.column(states.broken) if states.broken.label in exact.labels else np.zeros(len(cfg.times))
            cols["trotter:P_B"] = trotter.column(states.broken) if states.broken.label in trotter.labels else np.zeros(len(cfg.times))
        exact, trotter = _postprocess(cfg, exact), _postprocess(cfg, trotter)
        cols.update(_prefixed("exact", exact))
        cols.update(_prefixed("trotter", trotter))
        self.write("populations.csv", table_to_csv(cfg.times, cols))
        self._sampling(psi0=psi0)
        self.sidecar(broken_state=states.broken.label if states.broken else None,
                     straight_state=states.straight.label)

    def full_populations(self) -> None:
        cfg = self.cfg
        series = evolve_exact(cfg.params, resolve_initial_state(cfg), cfg.times)
        _check_norms(series)
        self.write("populations.csv", _postprocess(cfg, series).to_csv(tol=-1))
        self.sidecar()

    def resonance_scan(self) -> None:
        cfg = self.cfg
        states = identify_string_states(cfg.params, seed=cfg.seed, require=("straight",))
        if states.broken is None:
            raise ConfigError("resonance-scan needs a sector with a broken-string state")
        tasks = [(cfg, float(r)) for r in cfg.scan_ratios]
        jobs = self.jobs or min(len(tasks), os.cpu_count() or 1)
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_scan_point, tasks))
        else:
            results = [_scan_point(t) for t in tasks]
        scan = []
        for ratio, series in zip(cfg.scan_ratios, results):
            self.write(f"scan_ratio_{ratio:.6g}.csv", _postprocess(cfg, series).to_csv())
            scan.append(series)
        profile = time_integrated_population(scan, states.broken)
        rows = ["ratio,weight"] + [f"{r!r},{w!r}" for r, w in zip(map(float, cfg.scan_ratios), map(float, profile))]
        self.write("profile.csv", "\n".join(rows) + "\n")
        self.sidecar(broken_state=states.broken.label, ratio_definition="g_par2/g_perp2 with g_par2 fixed")

    def gatecount(self) -> None:
        cfg = self.cfg
        plan = self._plan()
        seq = compile_trotter_circuit(cfg.params, plan, mode=cfg.compiler_mode, elide=cfg.elide,
                                      max_angle=cfg.max_angle)
        report = compiled_report(seq, plan.n_steps)
        reference = qubit_embedding_estimate(plan.n_steps)
        text = report.to_text() + (
            f"[reference]\nnative_entangling_target = {reference.native_entangling}\n"
            f"qubit_cnot_per_step = {reference.qubit_cnot_per_step}\n"
            f"qubit_cnot_total = {reference.qubit_cnot_total}\n"
            f"overhead_factor = {reference.overhead_factor!r}\n"
        )
        self.write("gatecount.txt", text)
        body, mats = seq.to_text()
        self.write("circuit.txt", body)
        self.write("matrices.txt", mats)
        self.write("provenance.txt", "".join(f"{n} {g.kind} {g.provenance}\n" for n, g in enumerate(seq.gates)))
        if cfg.times:
            rows = entangling_count_vs_time(cfg.params, cfg.times, cfg.n_steps, mode=cfg.compiler_mode,
                                            max_angle=cfg.max_angle)
            self.write("counts_vs_time.csv",
                       "t,native_entangling\n" + "".join(f"{t!r},{c}\n" for t, c in rows))
        self.sidecar(report=report.as_dict(), reference=reference.as_dict(), plan=plan.as_dict())

    def effective_compare(self) -> None:
        cfg = self.cfg
        mapping = derive_manifold_mapping(cfg.params)
        full, analytic = compare_series(cfg.params, cfg.times)
        cols = {}
        for k, lab in enumerate(mapping.labels):
            cols[f"full:{lab}"] = full[:, k]
            cols[f"analytic:{lab}"] = analytic[:, k]
        cols["max_abs_deviation"] = np.max(np.abs(full - analytic), axis=1)
        self.write("comparison.csv", table_to_csv(cfg.times, cols))
        self.sidecar(manifold_mapping=mapping.as_dict(),
                     max_abs_deviation=float(np.max(cols["max_abs_deviation"])))

    def _sampling(self, psi0: StateVector) -> None:
        cfg = self.cfg
        if cfg.shots is None:
            return
        params = cfg.params
        states = identify_string_states(params, seed=cfg.seed, require=("straight",))
        sub = physical_subspace(params, [states.straight])
        reg = params.register
        rows = []
        for k, t in enumerate(cfg.times):
            seq = compile_trotter_circuit(params, TrotterPlan(t, cfg.n_steps), mode=cfg.compiler_mode,
                                          elide=cfg.elide, max_angle=cfg.max_angle)
            if cfg.noise_p > 0:
                probs = np.real(np.diag(simulate_density(seq, psi0.amplitudes, cfg.noise_p)))
            else:
                probs = np.abs(seq.apply(psi0.amplitudes)) ** 2
            counts = sample_measurements(probs, cfg.shots, cfg.seed + k, register=reg)
            frac = physicality_fraction(counts, sub)
            rows.append((t, seq.entangling_count, frac, post_select(counts, sub)))
        labels = sorted({lab for *_, ps in rows for lab in ps})
        lines = [",".join(["t", "native_entangling", "physical_fraction", *labels])]
        for t, n, frac, ps in rows:
            lines.append(",".join([format(t, ".17g"), str(n), format(frac, ".17g"),
                                   *(format(ps.get(lab, 0.0), ".17g") for lab in labels)]))
        self.write("samples.csv", "\n".join(lines) + "\n")


def _scan_point(task) -> TimeSeries:
    cfg, ratio = task
    params = cfg.params.with_(g_perp2=cfg.params.g_par2 / ratio)
    psi0 = resolve_initial_state(cfg, params)
    prop = ExactPropagator(params)
    amps = prop.amplitudes(psi0.amplitudes, cfg.times)
    series = TimeSeries(cfg.times, params.register.labels(), (np.abs(amps) ** 2).T,
                        {"ratio": ratio, "params": params.as_dict()})
    _check_norms(series)
    return series


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bubblechain", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run the configured scenario"),
                        ("validate", "check a configuration without running it"),
                        ("gatecount", "compile the configured model and report gate counts")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--output-dir", "-o", default=None)
        p.add_argument("--jobs", "-j", type=int, default=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "gatecount":
            cfg.scenario = "gatecount"
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if args.command == "validate":
            resolve_initial_state(cfg) if cfg.scenario != "gatecount" else None
            print(f"ok: scenario={cfg.scenario} sector={cfg.params.sector.value} "
                  f"plaquettes={cfg.params.n_plaquettes}")
            return EXIT_OK
        out = Path(args.output_dir or cfg.output_dir)
        written = Runner(cfg, out, args.jobs).run()
        for p in written:
            print(p)
        return EXIT_OK
    except (TooLarge, FloatingPointError) as exc:
        print(f"numeric guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BubbleChainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

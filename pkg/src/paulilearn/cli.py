"""Command-line front end: analyze, simulate, fit, feasible, gauge-check, report.

Exit codes: 0 success, 2 validation failure, 3 empty feasible region, 4 parse error.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import click
import numpy as np

from .cbsim import (
    CBConfig,
    CBDataset,
    CPTPNoiseSpec,
    ClosureError,
    DEFAULT_DEPTHS,
    run_cycle_cb,
    run_intercept_cb,
    run_interleaved_cb,
    run_protocol_suite,
    run_standard_cb,
)
from .channel import NoiseModel
from .estimate import (
    EmptyRegionError,
    IncompleteCoverageError,
    feasible_region,
    fit_all,
    intercept_estimate,
    reconstruct_learnable,
    sp_lower_bound,
)
from .gauge import (
    GaugeTransform,
    GaugeWindowError,
    apply_gauge,
    certify_indistinguishable,
    default_eta,
    validity_window,
)
from .graph import build_graph, learnable_basis_report
from .pauli import CliffordGate, PauliOp, conjugate, gate_from_json, library_gate
from .validation import SchemaError, validate_json

__all__ = ["main", "cli", "CLIError", "EXIT_OK", "EXIT_INVALID", "EXIT_EMPTY", "EXIT_PARSE"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_EMPTY = 3
EXIT_PARSE = 4

FORMATS = ("json", "csv", "md", "svg")


class CLIError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


# Input loading


def _read_json(path: str | Path) -> Any:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise CLIError(EXIT_PARSE, f"{p}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if text.splitlines() else ""
        raise CLIError(EXIT_PARSE, f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}\n  {line}\n"
                                   f"  {' ' * (exc.colno - 1)}^") from None


def _checked(obj: Any, schema: str, path: str | Path) -> Any:
    try:
        validate_json(obj, schema)
    except SchemaError as exc:
        raise CLIError(EXIT_INVALID, f"{path}: {exc}") from None
    return obj


def load_gateset(path: str | Path) -> list[CliffordGate]:
    obj = _checked(_read_json(path), "gateset", path)
    n = obj.get("n")
    gates = []
    for k, item in enumerate(obj["gates"]):
        where = f"{path}: gates[{k}]"
        if isinstance(item, str) or "library" in item:
            name = item if isinstance(item, str) else item["library"]
            try:
                g = library_gate(name, n)
            except ValueError as exc:
                raise CLIError(EXIT_PARSE, f"{where}: {exc}") from None
            if isinstance(item, dict) and "name" in item:
                g = g.renamed(item["name"])
        else:
            try:
                g = gate_from_json({"name": f"G{k}", **item})
            except ValueError as exc:
                raise CLIError(EXIT_INVALID, f"{where}: {exc}") from None
        gates.append(g)
    ns = {g.n for g in gates}
    if len(ns) > 1:
        raise CLIError(EXIT_INVALID, f"{path}: gates act on different qubit counts {sorted(ns)}")
    return gates


def _is_cptp_spec(obj: dict) -> bool:
    if "sp_flip" in obj or "meas_flip" in obj:
        return True
    return any(set(v) - {"n", "basis", "values"} for v in obj.get("gates", {}).values())


def load_noise(path: str | Path) -> NoiseModel | CPTPNoiseSpec:
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise CLIError(EXIT_INVALID, f"{path}: noise file must hold a JSON object")
    if _is_cptp_spec(obj):
        _checked(obj, "cptp_spec", path)
        try:
            return CPTPNoiseSpec.from_json(obj)
        except ValueError as exc:
            raise CLIError(EXIT_INVALID, f"{path}: {exc}") from None
    _checked(obj, "noise_model", path)
    try:
        m = NoiseModel.from_json(obj)
    except ValueError as exc:
        raise CLIError(EXIT_INVALID, f"{path}: {exc}") from None
    bad = {k: r.summary() for k, r in m.validate("cptp").items() if not r.ok}
    if bad:
        raise CLIError(EXIT_INVALID, f"{path}: noise model is not CPTP: {bad}")
    return m


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    return dict(_checked(_read_json(path), "run_config", path))


def load_datasets(paths: Sequence[str]) -> CBDataset:
    parts = []
    for p in paths:
        obj = _checked(_read_json(p), "dataset", p)
        try:
            parts.append(CBDataset.from_json(obj))
        except (ValueError, TypeError, KeyError) as exc:
            raise CLIError(EXIT_INVALID, f"{p}: {exc}") from None
    if len(parts) == 1:
        return parts[0]
    out = CBDataset.merge(parts)
    out.metadata["seed"] = parts[0].metadata.get("seed")
    out.metadata["gate"] = parts[0].metadata.get("gate")
    out.metadata["n"] = parts[0].metadata.get("n")
    return out


# Output helpers


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _finite(x: float) -> float | None:
    return float(x) if np.isfinite(x) else None


def _emit(out: str | None, files: dict[str, str], fmt: str, stdout_key: str | None) -> None:
    """Write every file into ``out`` (if given) and print the chosen format to stdout."""
    if out is not None:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (d / name).write_text(text)
    if stdout_key is not None and stdout_key in files:
        click.echo(files[stdout_key], nl=False)
    elif out is None:
        raise CLIError(EXIT_PARSE, f"format {fmt!r} is not available for this command")


def _csv(rows: list[dict], fields: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _svg(kind: str, *args, **kw) -> str:
    try:
        from . import plotting
    except ImportError as exc:
        raise CLIError(EXIT_INVALID, str(exc)) from None
    return getattr(plotting, f"{kind}_svg")(*args, **kw)


def _resolve_gate_name(cfg: dict, gates: list[CliffordGate] | None,
                       noise: NoiseModel | CPTPNoiseSpec) -> str:
    if "gate" in cfg:
        return cfg["gate"]
    names = [g.name for g in gates] if gates else list(
        noise.gates if isinstance(noise, NoiseModel) else noise.gate_ptms)
    if len(names) != 1:
        raise CLIError(EXIT_INVALID, f"several gates available {names}; set \"gate\" in the config")
    return names[0]


def _graph_for(ds: CBDataset, gateset: str | None):
    if gateset is not None:
        gates = load_gateset(gateset)
    else:
        name = ds.metadata.get("gate")
        n = ds.metadata.get("n")
        if name is None:
            raise CLIError(EXIT_INVALID, "dataset does not name its gate; pass --gateset")
        try:
            gates = [library_gate(name, n)]
        except ValueError:
            raise CLIError(EXIT_INVALID, f"gate {name!r} is not a library gate; pass --gateset")
    return build_graph(gates)


# Commands


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact", prog_name="paulilearn")
def cli():
    """Learnability analysis, CB simulation and gauge bounds for Pauli noise."""


def _fmt_option(default: str):
    return click.option("--format", "fmt", type=click.Choice(FORMATS), default=default,
                        show_default=True, help="What to print to stdout.")


_out_option = click.option("--out", type=click.Path(file_okay=False), default=None,
                           help="Directory receiving every output file.")
_seed_option = click.option("--seed", type=int, default=None,
                            help="RNG seed (overrides the config; default 0).")


@cli.command()
@click.option("--gateset", required=True, type=click.Path(), help="Gate-set JSON file.")
@_out_option
@_seed_option
@_fmt_option("json")
def analyze(gateset, out, seed, fmt):
    """Learnable and unlearnable degrees of freedom of a gate set."""
    gates = load_gateset(gateset)
    try:
        g = build_graph(gates)
    except ValueError as exc:
        raise CLIError(EXIT_INVALID, str(exc)) from None
    report = learnable_basis_report(g)
    obj = report.to_json()
    obj["seed"] = 0 if seed is None else seed
    validate_json(obj, "learnable_report")
    rows = [{"gate": gname, "pauli": lab, "learnable": int(v)}
            for gname, tab in report.individual.items() for lab, v in tab.items()]
    files = {
        "analysis.json": dumps(obj),
        "analysis.md": report.to_markdown(),
        "pattern_graph.dot": report.to_dot(),
        "individual.csv": _csv(rows, ["gate", "pauli", "learnable"]),
    }
    key = {"json": "analysis.json", "md": "analysis.md", "csv": "individual.csv"}.get(fmt)
    _emit(out, files, fmt, key)
    click.echo(f"UDF={report.udf} LDF={report.ldf} |edges|={report.num_edges}", err=True)


def _run_experiments(noise, cfg: dict, gates, gate_name: str, seed: int, engine: str
                     ) -> CBDataset:
    base = dict(gate=gate_name, depths=tuple(cfg.get("depths", DEFAULT_DEPTHS)),
                circuits=cfg.get("circuits", 30), shots=cfg.get("shots", 200),
                seed=seed, engine=engine)
    if "experiments" not in cfg:
        return run_protocol_suite(noise, gate_name, **{k: v for k, v in base.items()
                                                       if k != "gate"}, gates=gates)
    runners = {"standard": run_standard_cb, "interleaved": run_interleaved_cb,
               "cycle": run_cycle_cb, "intercept": run_intercept_cb}
    parts = []
    for ex in cfg["experiments"]:
        c = CBConfig(protocol=ex["protocol"], paulis=tuple(ex["paulis"]),
                     layer=ex.get("layer"), **{**base, **({"depths": tuple(ex["depths"])}
                                                          if "depths" in ex else {})})
        parts.append(runners[c.protocol](noise, c, gates))
    ds = CBDataset.merge(parts)
    ds.metadata.update(gate=gate_name, n=noise.n, seed=seed)
    return ds


@cli.command()
@click.option("--noise", required=True, type=click.Path(), help="Pauli model or CPTP spec JSON.")
@click.option("--config", type=click.Path(), default=None, help="Run configuration JSON.")
@click.option("--gateset", type=click.Path(), default=None, help="Gate-set JSON (custom gates).")
@click.option("--engine", type=click.Choice(["pauli_fast", "ptm_dense"]), default=None)
@_out_option
@_seed_option
@_fmt_option("json")
def simulate(noise, config, gateset, engine, out, seed, fmt):
    """Simulate cycle-benchmarking experiments."""
    cfg = load_config(config)
    model = load_noise(noise)
    gates = load_gateset(gateset) if gateset else None
    seed = seed if seed is not None else cfg.get("seed", 0)
    engine = engine or cfg.get("engine") or (
        "ptm_dense" if isinstance(model, CPTPNoiseSpec) else "pauli_fast")
    if engine == "pauli_fast" and isinstance(model, CPTPNoiseSpec):
        raise CLIError(EXIT_INVALID, "the pauli_fast engine cannot take a Kraus/CPTP noise spec; "
                                     "use --engine ptm_dense or a Pauli noise model")
    gate_name = _resolve_gate_name(cfg, gates, model)
    try:
        ds = _run_experiments(model, cfg, gates, gate_name, seed, engine)
    except (ClosureError, ValueError, KeyError) as exc:
        raise CLIError(EXIT_INVALID, str(exc)) from None
    obj = ds.to_json()
    validate_json(obj, "dataset")
    files = {"dataset.json": dumps(obj), "dataset.csv": ds.to_csv()}
    key = {"json": "dataset.json", "csv": "dataset.csv"}.get(fmt)
    _emit(out, files, fmt, key)
    click.echo(f"{len(ds.records)} records, {len(ds.keys())} experiment keys, seed {seed}",
               err=True)


def _fit_payload(ds: CBDataset, g, bootstrap: int, seed: int):
    fits = fit_all(ds, bootstrap=bootstrap, seed=seed)
    est = None
    if fits:
        try:
            est = reconstruct_learnable(fits, g)
        except IncompleteCoverageError as exc:
            est = exc.estimates
    icb = {}
    if any(r.protocol == "intercept" for r in ds.records):
        try:
            icb = intercept_estimate(ds, bootstrap=bootstrap, seed=seed)
        except ValueError as exc:
            raise CLIError(EXIT_INVALID, str(exc)) from None
    fit_json = []
    for f in fits:
        d = f.to_json()
        for k in ("rate", "rate_se", "amplitude", "amplitude_se"):
            d[k] = _finite(d[k])
        fit_json.append(d)
    obj = {
        "seed": seed,
        "gate": ds.metadata.get("gate") or g.gates[0].name,
        "fits": fit_json,
        "learnable": est.to_json() if est is not None else None,
        "intercept": {k: v.to_json() for k, v in icb.items()},
    }
    validate_json(obj, "fit_report")
    return fits, est, icb, obj


def _missing_message(est) -> str:
    return ("fits leave learnable directions undetermined: " + ", ".join(est.missing)
            + ". Add interleaved or cycle CB experiments whose orbits cover them "
              "(the default protocol suite does).")


@cli.command()
@click.option("--data", "data", required=True, multiple=True, type=click.Path(),
              help="Dataset JSON (repeatable).")
@click.option("--gateset", type=click.Path(), default=None)
@click.option("--config", type=click.Path(), default=None)
@_out_option
@_seed_option
@_fmt_option("json")
def fit(data, gateset, config, out, seed, fmt):
    """Fit decays and reconstruct learnable fidelities."""
    cfg = load_config(config)
    ds = load_datasets(data)
    seed = seed if seed is not None else cfg.get("seed", ds.metadata.get("seed", 0))
    g = _graph_for(ds, gateset)
    fits, est, icb, obj = _fit_payload(ds, g, cfg.get("bootstrap", 200), seed)
    curves = []
    for f in fits:
        for x, m in zip(f.x, f.means):
            model = f.amplitude * f.rate**x if f.fittable else float("nan")
            curves.append({"key": f.key, "x": float(x), "mean": float(m), "model": float(model)})
    bars = []
    if est is not None:
        for nm, v, s in zip(est.basis_names, est.fidelity_values, est.fidelity_stderr):
            bars.append({"functional": nm, "value": float(v), "se": float(s)})
    for k, e in icb.items():
        bars.append({"functional": f"intercept {k}", "value": e.value, "se": e.se})
    md = ["# Fit report", "", f"seed: {seed}", "", "| functional | value | se |", "|---|---|---|"]
    md += [f"| {b['functional']} | {b['value']:.5f} | {b['se']:.5f} |" for b in bars]
    files = {
        "fit.json": dumps(obj),
        "decays.csv": _csv(curves, ["key", "x", "mean", "model"]),
        "learnable.csv": _csv(bars, ["functional", "value", "se"]),
        "fit.md": "\n".join(md) + "\n",
    }
    if fmt == "svg":
        files["decays.svg"] = _svg("decay", [
            {"key": f.key, "x": f.x, "means": f.means, "amplitude": f.amplitude, "rate": f.rate}
            for f in fits])
        if bars:
            files["learnable.svg"] = _svg("bars", [b["functional"] for b in bars],
                                          [b["value"] for b in bars], [b["se"] for b in bars])
    key = {"json": "fit.json", "csv": "learnable.csv", "md": "fit.md", "svg": "decays.svg"}[fmt]
    _emit(out, files, fmt, key)
    if est is not None and est.missing:
        raise CLIError(EXIT_INVALID, _missing_message(est))


def _sp_bounds(icb, region, g) -> list[dict]:
    out = []
    gate = g.gates[0]
    for lab, e in icb.items():
        a = PauliOp.from_label(lab)
        b = conjugate(gate, a).unsigned()
        key = f"{gate.name}:{lab}"
        if key not in region.fidelity_intervals:
            continue
        bound = sp_lower_bound(e, region, (a.label, b.label), gate.name)
        d = bound.to_json()
        d["summary"] = bound.summary()
        out.append(d)
    return out


@cli.command()
@click.option("--data", "data", required=True, multiple=True, type=click.Path(),
              help="Dataset JSON (repeatable; intercept data adds SP bounds).")
@click.option("--gateset", type=click.Path(), default=None)
@click.option("--config", type=click.Path(), default=None)
@click.option("--eps", type=float, default=None, help="Slack on error rates (default max se).")
@_out_option
@_seed_option
@_fmt_option("json")
def feasible(data, gateset, config, eps, out, seed, fmt):
    """Physical feasibility region of the unlearnable gauge parameters."""
    cfg = load_config(config)
    ds = load_datasets(data)
    seed = seed if seed is not None else cfg.get("seed", ds.metadata.get("seed", 0))
    g = _graph_for(ds, gateset)
    fits, est, icb, _ = _fit_payload(ds, g, cfg.get("bootstrap", 200), seed)
    if est is None:
        raise CLIError(EXIT_INVALID, "no decay data to reconstruct learnable fidelities from")
    if est.missing:
        raise CLIError(EXIT_INVALID, _missing_message(est))
    eps = eps if eps is not None else cfg.get("eps")
    try:
        region = feasible_region(est, g, eps=eps, grid=cfg.get("grid", 401))
    except EmptyRegionError as exc:
        raise CLIError(EXIT_EMPTY, str(exc)) from None
    except ValueError as exc:
        raise CLIError(EXIT_INVALID, str(exc)) from None
    obj = region.to_json()
    obj["seed"] = seed
    obj["sp_bound"] = {"bounds": _sp_bounds(icb, region, g)} if icb else None
    validate_json(obj, "region")
    pts = region.boundary()
    rows = [{region.coords[k]: float(p[k]) for k in range(len(p))} for p in pts]
    files = {"region.json": dumps(obj), "boundary.csv": _csv(rows, list(region.coords))}
    if fmt == "svg":
        files["region.svg"] = _svg("region", region.axes, region.mask, region.coords)
    key = {"json": "region.json", "csv": "boundary.csv", "svg": "region.svg"}.get(fmt)
    _emit(out, files, fmt, key)
    click.echo(f"eps={region.eps:.4g} box={[tuple(round(x, 5) for x in b) for b in region.box]} "
               f"rectangle={region.is_rectangle}", err=True)


@cli.command("gauge-check")
@click.option("--noise", required=True, type=click.Path(), help="Pauli noise model JSON.")
@click.option("--gateset", required=True, type=click.Path())
@click.option("--gauge", "gauge_path", type=click.Path(), default=None,
              help="Gauge JSON; default depolarizing gauge on qubit 0 at the default eta.")
@click.option("--other", type=click.Path(), default=None,
              help="Compare against this model instead of a gauged copy.")
@click.option("--trials", type=int, default=200, show_default=True)
@_out_option
@_seed_option
@_fmt_option("json")
def gauge_check(noise, gateset, gauge_path, other, trials, out, seed, fmt):
    """Certify that two Pauli noise models give identical statistics."""
    seed = 0 if seed is None else seed
    m1 = load_noise(noise)
    if isinstance(m1, CPTPNoiseSpec):
        raise CLIError(EXIT_INVALID, "gauge-check needs a Pauli noise model")
    gates = load_gateset(gateset)
    files = {}
    t = None
    if other is not None:
        m2 = load_noise(other)
        if isinstance(m2, CPTPNoiseSpec):
            raise CLIError(EXIT_INVALID, "gauge-check needs a Pauli noise model")
    else:
        if gauge_path is not None:
            gobj = _checked(_read_json(gauge_path), "gauge", gauge_path)
            t = GaugeTransform.from_json(gobj)
        else:
            t = GaugeTransform.depolarizing(0)
        try:
            m2 = apply_gauge(m1, t, gates)
        except GaugeWindowError as exc:
            raise CLIError(EXIT_INVALID, str(exc)) from None
        except ValueError as exc:
            raise CLIError(EXIT_INVALID, str(exc)) from None
        files["gauged_model.json"] = dumps(m2.to_json())
    try:
        rep = certify_indistinguishable(m1, m2, gates, trials=trials, seed=seed)
    except ValueError as exc:
        raise CLIError(EXIT_INVALID, str(exc)) from None
    obj = rep.to_json()
    obj["seed"] = seed
    obj["verdict"] = "indistinguishable" if rep.indistinguishable else "distinguishable"
    obj["gauge"] = t.to_json() if t is not None else None
    obj["eta"] = (float(t.eta) if t.eta is not None else default_eta(m1)) if (
        t is not None and t.kind != "composite") else None
    obj["window"] = list(validity_window(m1))
    validate_json(obj, "gauge_check")
    md = (f"# Gauge check\n\nverdict: {obj['verdict']}\n\n"
          f"- experiments: {rep.trials}\n- max deviation: {rep.max_deviation:.3e}\n"
          f"- tolerance: {rep.tol:.1e}\n- worst: {rep.worst}\n")
    files["gauge_check.json"] = dumps(obj)
    files["gauge_check.md"] = md
    key = {"json": "gauge_check.json", "md": "gauge_check.md"}.get(fmt)
    _emit(out, files, fmt, key)
    click.echo(obj["verdict"], err=True)
    if not rep.indistinguishable:
        raise CLIError(EXIT_INVALID, f"models are distinguishable (max deviation "
                                     f"{rep.max_deviation:.3e} > {rep.tol:.1e})")


@cli.command()
@click.option("--gateset", required=True, type=click.Path())
@click.option("--data", "data", multiple=True, type=click.Path(), help="Dataset JSON (optional).")
@click.option("--config", type=click.Path(), default=None)
@_out_option
@_seed_option
@_fmt_option("md")
def report(gateset, data, config, out, seed, fmt):
    """Analysis plus (when data is given) fits and the feasible region in one document."""
    cfg = load_config(config)
    gates = load_gateset(gateset)
    try:
        g = build_graph(gates)
    except ValueError as exc:
        raise CLIError(EXIT_INVALID, str(exc)) from None
    rep = learnable_basis_report(g)
    ds = load_datasets(data) if data else None
    if seed is None:
        seed = cfg.get("seed", ds.metadata.get("seed", 0) if ds else 0)
    analysis = rep.to_json()
    analysis["seed"] = seed
    obj = {"seed": seed, "analysis": analysis}
    md = [rep.to_markdown()]
    if ds is not None:
        fits, est, icb, fobj = _fit_payload(ds, g, cfg.get("bootstrap", 200), seed)
        obj["fit"] = fobj
        if est is not None:
            md += ["## Learnable estimates", "", "| functional | value | se |", "|---|---|---|"]
            md += [f"| {nm} | {v:.5f} | {s:.5f} |" for nm, v, s in
                   zip(est.basis_names, est.fidelity_values, est.fidelity_stderr)]
            md.append("")
        if est is not None and not est.missing and rep.udf in (1, 2):
            try:
                region = feasible_region(est, g, eps=cfg.get("eps"), grid=cfg.get("grid", 401))
            except EmptyRegionError as exc:
                raise CLIError(EXIT_EMPTY, str(exc)) from None
            robj = region.to_json()
            robj["seed"] = seed
            robj["sp_bound"] = {"bounds": _sp_bounds(icb, region, g)} if icb else None
            obj["region"] = robj
            md += ["## Feasible region", "", f"eps = {region.eps:.4g}, "
                   f"rectangular: {'yes' if region.is_rectangle else 'no'} "
                   f"(box fill {region.box_fill:.3f})", ""]
            md += [f"- {c}: [{lo:.5f}, {hi:.5f}]" for c, (lo, hi) in zip(region.coords, region.box)]
            if robj["sp_bound"]:
                md += ["", "## State-preparation bounds", ""]
                md += [f"- {b['pair'][0]}/{b['pair'][1]}: {b['summary']}"
                       for b in robj["sp_bound"]["bounds"]]
            md.append("")
    validate_json(obj, "report")
    files = {"report.json": dumps(obj), "report.md": "\n".join(md)}
    key = {"json": "report.json", "md": "report.md"}.get(fmt)
    _emit(out, files, fmt, key)


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the exit code instead of raising SystemExit when called directly."""
    try:
        cli.main(args=list(argv) if argv is not None else None, standalone_mode=False)
    except CLIError as exc:
        click.echo(f"error: {exc}", err=True)
        code = exc.code
    except SchemaError as exc:
        click.echo(f"error: output failed its schema: {exc}", err=True)
        code = EXIT_INVALID
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        code = 1
    except click.ClickException as exc:
        exc.show()
        code = EXIT_PARSE
    else:
        code = EXIT_OK
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":  # pragma: no cover
    main()

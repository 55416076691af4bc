"""Command-line front end: one experiment per invocation, artifacts plus a manifest."""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from pathlib import Path

from . import __version__
from .contraction import (
    DEFAULT_GRID,
    ContractionParams,
    classify_element,
    empirical_contraction_constant,
    is_D_contracting_segment,
)
from .counting import build_automaton, growth_rate, sphere_counts
from .errors import RaagError, ResourceLimitError, UsageError
from .excursion import CSV_FIELDS as EXCURSION_FIELDS
from .excursion import SpecialSubgroup, loglaw_experiment, strong_independence_probe
from .genericity import CSV_FIELDS as GENERICITY_FIELDS
from .genericity import DEFAULT_LIMIT, iter_genericity
from .group import RAAG, STANDARD_GROUPS, load_group
from .io import CsvStream, RunManifest, canonical_json, write_csv, write_json
from .lemmas import LEMMAS, lemma_check
from .metric import (
    CACHE_ENV,
    count_geodesics,
    enumerate_ball,
    enumerate_geodesics,
    evict_ball_cache,
    load_cached_ball,
    path_from_codes,
    save_ball_cache,
)

COMMANDS = (
    "group-info",
    "growth",
    "geodesics",
    "contract-test",
    "classify",
    "genericity",
    "lemma-check",
    "excursion",
    "probe-independence",
    "cache",
)

# arguments that change how a run executes but not what it computes
_RUNTIME_KEYS = {"out_dir", "workers", "cache_dir"}


def resolve_group(spec: str) -> RAAG:
    """A group file path, or one of the built-in names F2, Z2, Z3, Z2*Z."""
    if spec in STANDARD_GROUPS and not Path(spec).exists():
        return STANDARD_GROUPS[spec]()
    return load_group(spec)


def _int_list(text: str) -> list:
    try:
        out = [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _names(text: str) -> list:
    return [x for x in text.replace(",", " ").split() if x]


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _non_negative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="raagkit", description="Exact computations in right-angled Artin groups.")
    p.add_argument("--version", action="version", version=f"raagkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--group", required=True, help="group file, or one of " + ", ".join(STANDARD_GROUPS))
        sp.add_argument("--out-dir", default=".", help="directory for artifacts (default: current)")
        sp.add_argument("--workers", type=_positive, default=os.cpu_count() or 1)
        return sp

    add("group-info", "vertices, edges, digest and the first sphere sizes").add_argument(
        "--max-n", type=_non_negative, default=6
    )

    sp = add("growth", "exact sphere and ball sizes with a growth-rate estimate")
    sp.add_argument("--max-n", type=_non_negative, default=10)

    sp = add("geodesics", "enumerate geodesics between two elements")
    sp.add_argument("--source", default="1")
    sp.add_argument("--target", required=True)
    sp.add_argument("--cap", type=_positive, default=200)

    sp = add("contract-test", "test a segment for contraction at a finite scale")
    sp.add_argument("--start", default="1")
    sp.add_argument("--word", required=True, help="letters of the segment, read from --start")
    sp.add_argument("--D", type=_positive, default=None)
    sp.add_argument("--R", type=_positive, required=True)
    sp.add_argument("--grid", type=_int_list, default=list(DEFAULT_GRID))
    sp.add_argument("--cap", type=_positive, default=200)

    sp = add("classify", "classify elements by their power-path axis")
    sp.add_argument("--element", action="append", required=True)
    sp.add_argument("--D", type=_positive, default=2)
    sp.add_argument("--R", type=_positive, default=3)
    sp.add_argument("--m", type=_positive, default=2)
    sp.add_argument("--grid", type=_int_list, default=list(DEFAULT_GRID))

    sp = add("genericity", "fraction of contracting elements in balls")
    sp.add_argument("--n", type=_int_list, required=True)
    sp.add_argument("--D", type=_positive, default=2)
    sp.add_argument("--R", type=_positive, default=3)
    sp.add_argument("--m", type=_positive, default=2)
    sp.add_argument("--grid", type=_int_list, default=list(DEFAULT_GRID))
    sp.add_argument("--cap", type=_positive, default=200)
    sp.add_argument("--mode", choices=("auto", "exhaustive", "sampled"), default="auto")
    sp.add_argument("--samples", type=_positive, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--limit", type=_positive, default=DEFAULT_LIMIT, help="largest ball classified exhaustively")
    sp.add_argument("--max-time", type=float, default=None, help="wall-time limit in seconds")

    sp = add("lemma-check", "empirical check of one contraction inequality")
    sp.add_argument("--lemma", choices=sorted(LEMMAS), required=True)
    sp.add_argument("--trials", type=_positive, default=500)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--D", type=_positive, default=2)
    sp.add_argument("--R", type=_positive, default=4)
    sp.add_argument("--max-length", type=_positive, default=6)

    sp = add("excursion", "coarse excursions of uniform sphere samples")
    sp.add_argument("--lambda", dest="lam", type=_names, required=True, help="vertices of the special subgroup")
    sp.add_argument("--K", type=_non_negative, default=0)
    sp.add_argument("--n", type=_int_list, required=True)
    sp.add_argument("--samples", type=_positive, default=200)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--cap", type=_positive, default=200)
    sp.add_argument("--C1", type=float, default=None)
    sp.add_argument("--C2", type=float, default=None)

    sp = add("probe-independence", "projection of subgroup cosets onto an axis")
    sp.add_argument("--f", required=True)
    sp.add_argument("--lambda", dest="lam", type=_names, required=True)
    sp.add_argument("--r", type=_int_list, required=True)
    sp.add_argument("--m", type=_positive, default=5)

    sp = add("cache", "build, validate or evict the ball cache")
    sp.add_argument("action", choices=("build", "validate", "evict"))
    sp.add_argument("--radius", type=_non_negative, default=6)
    sp.add_argument("--cache-dir", default=None, help=f"defaults to ${CACHE_ENV}")
    return p


# --- commands ----------------------------------------------------------------------------


def _cmd_group_info(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    a = build_automaton(group)
    info = {
        "vertices": list(group.names),
        "edges": sorted(sorted(group.graph.names[v] for v in e) for e in group.graph.edges),
        "digest": group.digest,
        "automaton_states": a.state_count,
        "spheres": sphere_counts(a, cfg["max_n"]),
    }
    manifest.add_output(write_json(out / "group-info.json", info))
    return info


def _cmd_growth(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    a = build_automaton(group)
    spheres = sphere_counts(a, cfg["max_n"])
    rows, total = [], 0
    for n, s in enumerate(spheres):
        total += s
        rows.append([n, s, total])
    manifest.add_output(write_csv(out / "growth.csv", ["n", "sphere", "ball"], rows))
    summary = {"n_max": cfg["max_n"], "spheres": spheres}
    if cfg["max_n"] >= 4:
        est = growth_rate(a, cfg["max_n"])
        summary.update(lambda_hat=est.lambda_hat, sphere_ratio=est.sphere_ratio, polynomial=est.polynomial)
    manifest.add_output(write_json(out / "growth.json", summary))
    return summary


def _cmd_geodesics(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    x, y = group.parse(cfg["source"]), group.parse(cfg["target"])
    en = enumerate_geodesics(x, y, cfg["cap"])
    result = {
        "source": str(x),
        "target": str(y),
        "distance": len(en.paths[0]) - 1,
        "count": en.count if not en.truncated else count_geodesics(x, y),
        "truncated": en.truncated,
        "geodesics": [group.format_codes(p.letters()) for p in en.paths],
    }
    manifest.add_output(write_json(out / "geodesics.json", result))
    return {k: v for k, v in result.items() if k != "geodesics"}


def _cmd_contract_test(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    start = group.parse(cfg["start"])
    seg = path_from_codes(start, group.parse_word(cfg["word"]))
    seg.check()
    caps = {"geodesic_cap": cfg["cap"]}
    report = empirical_contraction_constant(seg, cfg["R"], cfg["grid"], caps)
    result = report.as_dict()
    if cfg["D"] is not None:
        ok, w = is_D_contracting_segment(seg, ContractionParams(D=cfg["D"], R=cfg["R"], geodesic_cap=cfg["cap"]))
        result["test"] = {"D": cfg["D"], "passed": ok, "witness": w.as_dict() if w else None}
    manifest.add_output(write_json(out / "contract-test.json", result))
    return {"D_star": report.D_star, **({"passed": result["test"]["passed"]} if "test" in result else {})}


def _cmd_classify(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    params = ContractionParams(D=cfg["D"], R=cfg["R"], D_grid=tuple(cfg["grid"]))
    rows = []
    for text in cfg["element"]:
        g = group.parse(text)
        c = classify_element(g, params, cfg["m"])
        rows.append([str(g), c.status, "" if c.D_star is None else c.D_star, c.D, c.R, c.m])
    manifest.add_output(write_csv(out / "classify.csv", ["g", "status", "D_star", "D", "R", "m"], rows))
    return {"classified": len(rows)}


def _cmd_genericity(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    rows = []
    csv_path = out / "genericity.csv"
    try:
        with CsvStream(csv_path, GENERICITY_FIELDS) as stream:
            for row in iter_genericity(
                group,
                cfg["n"],
                cfg["D"],
                cfg["R"],
                cfg["m"],
                mode=cfg["mode"],
                samples=cfg["samples"],
                seed=cfg["seed"],
                limit=cfg["limit"],
                D_grid=cfg["grid"],
                geodesic_cap=cfg["cap"],
                workers=cfg.get("workers", 1),
                time_limit=cfg["max_time"],
            ):
                stream.write(row.csv_row())
                rows.append(row)
    finally:
        manifest.add_output(csv_path)
        manifest.add_output(write_json(out / "genericity.json", {"rows": [r.as_dict() for r in rows]}))
    return {"rows": [[r.n, f"{r.contracting_count}/{r.sampled}"] for r in rows]}


def _cmd_lemma_check(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    rep = lemma_check(cfg["lemma"], group, cfg["trials"], cfg["seed"], cfg["D"], cfg["R"], max_length=cfg["max_length"])
    result = rep.as_dict()
    manifest.add_output(write_json(out / "lemma-check.json", result))
    return {k: result[k] for k in ("lemma", "instances", "max_observed", "violation_count")}


def _subgroup(group: RAAG, names: list) -> SpecialSubgroup:
    # "ab" is read as a, b when it is not itself a vertex name
    out = []
    for nm in names:
        if nm not in group.names and all(ch in group.names for ch in nm):
            out.extend(nm)
        else:
            out.append(nm)
    return SpecialSubgroup(group, out)


def _cmd_excursion(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    H = _subgroup(group, cfg["lam"])
    res = loglaw_experiment(group, H, cfg["n"], cfg["samples"], cfg["seed"], cfg["K"], cfg["cap"], cfg["C1"], cfg["C2"])
    manifest.add_output(write_csv(out / "excursion.csv", EXCURSION_FIELDS, [r.csv_row() for r in res.rows]))
    manifest.add_output(write_json(out / "excursion.json", res.as_dict()))
    return {"medians": {n: s["median"] for n, s in sorted(res.per_n.items())}, "C1": res.C1, "C2": res.C2}


def _cmd_probe(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    H = _subgroup(group, cfg["lam"])
    f = group.parse(cfg["f"])
    results = [strong_independence_probe(f, H, r, cfg["m"]) for r in cfg["r"]]
    rows = [[p.r, p.m, p.value, str(p.coset), p.cosets_examined] for p in results]
    manifest.add_output(write_csv(out / "probe-independence.csv", ["r", "m", "value", "coset", "cosets"], rows))
    return {"values": {p.r: p.value for p in results}}


def _cmd_cache(group: RAAG, cfg: dict, out: Path, manifest: RunManifest) -> dict:
    cache_dir = cfg.get("cache_dir") or os.environ.get(CACHE_ENV)
    if not cache_dir:
        raise UsageError(f"no cache directory: pass --cache-dir or set {CACHE_ENV}")
    action = cfg["action"]
    if action == "evict":
        return {"evicted": evict_ball_cache(group, cache_dir)}
    if action == "validate":
        ball = load_cached_ball(group, cache_dir)
        return {"valid": ball is not None, "radius": None if ball is None else ball.radius}
    ball = enumerate_ball(group, cfg["radius"], cache_dir=cache_dir)
    path = save_ball_cache(ball, cache_dir)
    return {"path": str(path), "radius": ball.radius, "size": ball.size}


_HANDLERS = {
    "group-info": _cmd_group_info,
    "growth": _cmd_growth,
    "geodesics": _cmd_geodesics,
    "contract-test": _cmd_contract_test,
    "classify": _cmd_classify,
    "genericity": _cmd_genericity,
    "lemma-check": _cmd_lemma_check,
    "excursion": _cmd_excursion,
    "probe-independence": _cmd_probe,
    "cache": _cmd_cache,
}


def config_from_args(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("out_dir", "workers")}


def run(config: dict, out_dir: str | Path = ".", workers: int = 1) -> int:
    """Execute one command; returns the exit status.  Artifacts and a manifest go to ``out_dir``."""
    out = Path(out_dir)
    cfg = {k: v for k, v in config.items() if k not in _RUNTIME_KEYS}
    command = cfg.get("command")
    if command not in _HANDLERS:
        raise UsageError(f"unknown command {command!r}")
    group = resolve_group(cfg["group"])
    manifest = RunManifest(config=cfg, group_digest=group.digest)
    manifest_path = out / f"{command}.manifest.json"
    try:
        summary = _HANDLERS[command](group, {**config, "workers": workers}, out, manifest)
    except ResourceLimitError as exc:
        manifest.finish("partial", str(exc))
        manifest.write(manifest_path)
        raise
    except Exception as exc:
        manifest.finish("failed", f"{type(exc).__name__}: {exc}")
        manifest.write(manifest_path)
        raise
    manifest.finish("ok")
    manifest.write(manifest_path)
    sys.stdout.write(canonical_json(summary))
    return 0


def main(argv: list | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = config_from_args(args)
        return run(config, args.out_dir, args.workers)
    except RaagError as exc:
        sys.stderr.write(f"raagkit: error: {exc}\n")
        completed = getattr(exc, "completed", None)
        if completed is not None:
            sys.stderr.write(f"raagkit: largest completed value: {completed}\n")
        return exc.exit_code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())

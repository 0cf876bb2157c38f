"""Command-line front end: forward tables and inversion reports.

Two subcommands:

* ``forward`` computes phase shifts of a layered potential at one or
  more wave numbers and writes a fixed-point table next to a
  full-precision machine file;
* ``invert`` synthesizes data shifts from a stated true potential
  (optionally noisy), runs the stability-index search per wave number,
  and writes a per-iteration index table plus a structured report.

Both read an optional JSON run configuration; an empty or missing
"search"/"box"/"potential" group falls back to the reference defaults.
Table files carry the timestamp in a strippable ``# generated`` header
line; machine files contain no timestamp at all, so identical
configuration and seed reproduce them bit for bit. All files are
written atomically.

Exit codes: 0 every run stable, 2 some run unstable, 3 some run
exhausted, 1 configuration or solver error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .forward import LayeredPotential, PhaseShiftSet, SolverError, add_noise, phase_shifts
from .global_search import SearchParams, reduced_random_search
from .objective import AdmissibleBox, UndefinedObjectiveError

SCHEMA_VERSION = 1

#: Stream tag separating the noise draws from the per-iteration batch
#: draws (which use (seed, iteration), iteration >= 1). Noisy data then
#: depend only on the master seed and the wave-number position, so the
#: same noisy dataset can be re-fed to different solver settings.
_NOISE_STREAM = 791

EXIT_STABLE = 0
EXIT_ERROR = 1
EXIT_UNSTABLE = 2
EXIT_EXHAUSTED = 3

_VERDICT_EXIT = {"stable": EXIT_STABLE, "unstable": EXIT_UNSTABLE, "exhausted": EXIT_EXHAUSTED}


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run description; defaults are the reference
    parameter set (batch 5000, keep 1%, minimize 16% of the kept, box of
    two layers within radius 10 and values in [-20, 0], 31 shifts)."""

    mode: str = "invert"
    radii: tuple = (8.0,)
    values: tuple = (-10.0,)
    k_values: tuple = (2.5,)
    l_max: int = 30
    noise: float = 0.0
    max_layers: int = 2
    box_radius: float = 10.0
    q_low: float = -20.0
    q_high: float = 0.0
    search: SearchParams = SearchParams()

    def box(self):
        return AdmissibleBox(self.max_layers, self.box_radius, self.q_low, self.q_high)

    def potential(self):
        return LayeredPotential(list(self.radii), list(self.values))


_TOP_KEYS = {"mode", "potential", "k_values", "l_max", "noise", "search", "box"}
_POTENTIAL_KEYS = {"radii", "values"}
_BOX_KEYS = {"max_layers", "radius", "q_low", "q_high"}
_SEARCH_KEYS = {
    "batch_size", "keep_fraction", "minimizing_fraction", "stability_threshold",
    "flatness_factor", "max_iterations", "merge_tol", "seed",
}


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _number_list(raw, key, errors):
    if not isinstance(raw, list) or not raw or not all(_is_number(x) for x in raw):
        errors.append(f"{key}: must be a nonempty list of finite numbers")
        return None
    return [float(x) for x in raw]


def parse_config(path=None, mode=None):
    """Read and validate a JSON run configuration.

    Every violated constraint is reported, not just the first; an empty
    file (or path=None) yields the defaults. mode, when given, is the
    subcommand and must agree with an explicit "mode" entry.
    """
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
        if text.strip():
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as err:
                raise ValueError(f"{path}: not valid JSON: {err}") from err
            if not isinstance(raw, dict):
                raise ValueError(f"{path}: top level must be a JSON object")

    errors = []
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        errors.append(f"unknown keys: {', '.join(sorted(unknown))}")

    fields = {}
    file_mode = raw.get("mode")
    if file_mode is not None and file_mode not in ("forward", "invert"):
        errors.append(f"mode: must be 'forward' or 'invert', got {file_mode!r}")
    elif file_mode is not None and mode is not None and file_mode != mode:
        errors.append(f"mode: config says {file_mode!r} but the subcommand is {mode!r}")
    fields["mode"] = mode or file_mode or "invert"

    box_raw = raw.get("box", {})
    if not isinstance(box_raw, dict):
        errors.append("box: must be an object")
        box_raw = {}
    if set(box_raw) - _BOX_KEYS:
        errors.append(f"box: unknown keys: {', '.join(sorted(set(box_raw) - _BOX_KEYS))}")
    max_layers = box_raw.get("max_layers", 2)
    if not (isinstance(max_layers, int) and not isinstance(max_layers, bool) and max_layers >= 1):
        errors.append(f"box.max_layers: must be a positive integer, got {max_layers!r}")
        max_layers = 2
    box_radius = box_raw.get("radius", 10.0)
    if not (_is_number(box_radius) and box_radius > 0):
        errors.append(f"box.radius: must be a positive number, got {box_radius!r}")
        box_radius = 10.0
    q_low = box_raw.get("q_low", -20.0)
    q_high = box_raw.get("q_high", 0.0)
    if not (_is_number(q_low) and _is_number(q_high) and q_low <= q_high):
        errors.append(f"box.q_low/q_high: need finite q_low <= q_high, got {q_low!r}, {q_high!r}")
        q_low, q_high = -20.0, 0.0
    fields.update(max_layers=max_layers, box_radius=float(box_radius),
                  q_low=float(q_low), q_high=float(q_high))

    pot_raw = raw.get("potential", {})
    if not isinstance(pot_raw, dict):
        errors.append("potential: must be an object with radii and values")
        pot_raw = {}
    if set(pot_raw) - _POTENTIAL_KEYS:
        errors.append(
            f"potential: unknown keys: {', '.join(sorted(set(pot_raw) - _POTENTIAL_KEYS))}"
        )
    radii = _number_list(pot_raw.get("radii", [8.0]), "potential.radii", errors)
    values = _number_list(pot_raw.get("values", [-10.0]), "potential.values", errors)
    if radii is not None and values is not None:
        if len(radii) != len(values):
            errors.append("potential: radii and values must have equal length")
        if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
            errors.append("potential.radii: must be positive and strictly ascending")
        if radii and radii[-1] > box_radius:
            errors.append(
                f"potential.radii: outermost layer {radii[-1]} exceeds box radius {box_radius}"
            )
        fields.update(radii=tuple(radii), values=tuple(values))

    k_values = _number_list(raw.get("k_values", [2.5]), "k_values", errors)
    if k_values is not None:
        if any(k <= 0 for k in k_values):
            errors.append("k_values: wave numbers must be positive")
        fields["k_values"] = tuple(k_values)

    l_max = raw.get("l_max", 30)
    if not (isinstance(l_max, int) and not isinstance(l_max, bool) and l_max >= 0):
        errors.append(f"l_max: must be a nonnegative integer, got {l_max!r}")
    else:
        fields["l_max"] = l_max

    noise = raw.get("noise", 0.0)
    if not (_is_number(noise) and noise >= 0):
        errors.append(f"noise: must be a nonnegative number, got {noise!r}")
    else:
        fields["noise"] = float(noise)

    search_raw = raw.get("search", {})
    if not isinstance(search_raw, dict):
        errors.append("search: must be an object")
        search_raw = {}
    if set(search_raw) - _SEARCH_KEYS:
        errors.append(
            f"search: unknown keys: {', '.join(sorted(set(search_raw) - _SEARCH_KEYS))}"
        )
        search_raw = {k: v for k, v in search_raw.items() if k in _SEARCH_KEYS}
    # replicate the parameter constraints so every violation is listed;
    # SearchParams itself stops at the first one
    checks = [
        ("batch_size", lambda v: _is_number(v) and v == int(v) and v >= 1,
         "must be a positive integer"),
        ("keep_fraction", lambda v: _is_number(v) and 0 < v < 1, "must be in (0, 1)"),
        ("minimizing_fraction", lambda v: _is_number(v) and 0 < v < 1, "must be in (0, 1)"),
        ("stability_threshold", lambda v: _is_number(v) and v > 0, "must be positive"),
        ("flatness_factor", lambda v: _is_number(v) and v > 1, "must exceed 1"),
        ("max_iterations", lambda v: _is_number(v) and v == int(v) and v >= 1,
         "must be a positive integer"),
        ("merge_tol", lambda v: _is_number(v) and v > 0, "must be positive"),
        ("seed", lambda v: _is_number(v) and v == int(v) and v >= 0,
         "must be a nonnegative integer"),
    ]
    search_ok = True
    for key, good, message in checks:
        if key in search_raw and not good(search_raw[key]):
            errors.append(f"search.{key}: {message}, got {search_raw[key]!r}")
            search_ok = False
    if search_ok:
        try:
            fields["search"] = SearchParams(**search_raw)
        except ValueError as err:
            errors.append(f"search: {err}")

    if errors:
        source = path if path is not None else "<defaults>"
        raise ValueError(f"{source}: invalid configuration:\n  " + "\n  ".join(errors))
    return RunConfig(**fields)


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    handle = tempfile.NamedTemporaryFile(
        "w", dir=directory, prefix=".tmp-", suffix=os.path.basename(path),
        delete=False, encoding="utf-8",
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        os.unlink(handle.name)
        raise


def _timestamp_header(title):
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return f"# {title}\n# generated {stamp}\n"


def _json_text(payload):
    return json.dumps(payload, indent=1) + "\n"


def _potential_payload(potential):
    return {
        "breakpoints": [float(r) for r in potential.breakpoints],
        "values": [float(v) for v in potential.values],
    }


def cmd_forward(config, out_dir):
    """Write forward_table.txt (5-decimal fixed point) and
    forward_shifts.json (full precision) for every requested k."""
    potential = config.potential()
    shift_sets = [phase_shifts(potential, k, config.l_max) for k in config.k_values]

    lines = [_timestamp_header("phase shifts by angular momentum and wave number").rstrip("\n")]
    lines.append("l " + " ".join(f"k={k:g}" for k in config.k_values))
    for l in range(config.l_max + 1):
        lines.append(
            f"{l} " + " ".join(f"{s.shifts[l]:.5f}" for s in shift_sets)
        )
    _atomic_write(os.path.join(out_dir, "forward_table.txt"), "\n".join(lines) + "\n")

    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "forward",
        "potential": _potential_payload(potential),
        "l_max": config.l_max,
        "runs": [
            {"k": float(k), "shifts": [float(x) for x in s.shifts]}
            for k, s in zip(config.k_values, shift_sets)
        ],
    }
    _atomic_write(os.path.join(out_dir, "forward_shifts.json"), _json_text(payload))
    return EXIT_STABLE


def _record_payload(record):
    return {
        "radii": [float(r) for r in record.config.radii],
        "values": [float(v) for v in record.config.values],
        "phi": float(record.phi),
        "iteration": record.iteration,
        "index": record.index,
    }


def cmd_invert(config, out_dir, workers=1):
    """Synthesize data from the configured truth, search per wave
    number, and write invert_indices.txt plus invert_report.json."""
    truth = config.potential()
    box = config.box()
    params = config.search

    runs = []
    table = [_timestamp_header("stability index by wave number and iteration").rstrip("\n")]
    table.append("k iteration index")
    exit_code = EXIT_STABLE
    for position, k in enumerate(config.k_values):
        data = phase_shifts(truth, k, config.l_max)
        if config.noise > 0.0:
            noise_rng = np.random.default_rng(
                np.random.SeedSequence((params.seed, _NOISE_STREAM, position))
            )
            data = add_noise(data, config.noise, noise_rng)
        report = reduced_random_search(data, box, params, workers=workers)
        for j, index in enumerate(report.indices, start=1):
            table.append(f"{k:g} {j} {index:.6f}")
        runs.append({
            "k": float(k),
            "noise": config.noise,
            "data_shifts": [float(x) for x in data.shifts],
            "verdict": report.verdict,
            "exit_code": _VERDICT_EXIT[report.verdict],
            "indices": [float(d) for d in report.indices],
            "d_av": float(report.d_av),
            "failed_starts": report.failed_starts,
            "merge_policy": report.merge_policy,
            "best": _record_payload(report.best),
            "minimizing_set": [_record_payload(r) for r in report.minimizing_set],
        })
        exit_code = max(exit_code, _VERDICT_EXIT[report.verdict])

    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "invert",
        "truth": _potential_payload(truth),
        "l_max": config.l_max,
        "noise": config.noise,
        "box": {"max_layers": config.max_layers, "radius": config.box_radius,
                "q_low": config.q_low, "q_high": config.q_high},
        "search": {
            "batch_size": params.batch_size,
            "keep_fraction": params.keep_fraction,
            "minimizing_fraction": params.minimizing_fraction,
            "stability_threshold": params.stability_threshold,
            "flatness_factor": params.flatness_factor,
            "max_iterations": params.max_iterations,
            "merge_tol": params.merge_tol,
            "seed": params.seed,
        },
        "runs": runs,
    }
    _atomic_write(os.path.join(out_dir, "invert_indices.txt"), "\n".join(table) + "\n")
    _atomic_write(os.path.join(out_dir, "invert_report.json"), _json_text(payload))
    return exit_code


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="scatinv",
        description="Phase-shift tables and stability-index inversion for "
                    "layered spherical potentials.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("forward", "compute phase-shift tables for a layered potential"),
        ("invert", "recover a layered potential from synthesized shifts"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="JSON run configuration (defaults if omitted)")
        cmd.add_argument("--out", default=".", help="output directory (default: .)")
        cmd.add_argument("--seed", type=int, help="override the configured seed")
        if name == "invert":
            cmd.add_argument("--workers", type=int, default=1,
                             help="local-search worker processes (default: 1)")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        config = parse_config(args.config, mode=args.command)
        if args.seed is not None:
            if args.seed < 0:
                raise ValueError("--seed must be nonnegative")
            config = replace(config, search=replace(config.search, seed=args.seed))
        os.makedirs(args.out, exist_ok=True)
        if args.command == "forward":
            return cmd_forward(config, args.out)
        return cmd_invert(config, args.out, workers=args.workers)
    except (ValueError, OSError, SolverError, UndefinedObjectiveError) as err:
        print(f"scatinv: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

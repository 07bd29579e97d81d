"""Command-line driver.

Examples::

    casiga run --benchmark plate_hole --technology cas1 --quad 2 --levels 8 --out results
    casiga run --config plate.cfg
    casiga patch --benchmark cook --elements 4 --out cook4.json

``run`` writes ``<stem>.csv`` (convergence table) and ``<stem>_level<k>.vtk``
(legacy VTK structured grid of sampled fields) into the output directory,
where ``<stem>`` is ``<benchmark>_<technology>_q<quad>``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields

from . import benchmarks as bm
from .io import save_patch, write_table, write_vtk_structured
from .mechanics import Technology
from .solver import SolverError
from .splines import GeometryError

log = logging.getLogger("casiga")

ALIASES = {"plate": "plate_hole", "block": "block3d"}
FIELD_MODES = ("none", "last", "all")


@dataclass
class RunConfig:
    benchmark: str
    technology: str = "cs"
    quad: int = 3
    levels: int = 0
    output: str = "results"
    samples: int = 3
    fields: str = "last"

    def __post_init__(self):
        self.benchmark = ALIASES.get(self.benchmark, self.benchmark)
        if self.benchmark not in bm.BENCHMARKS:
            raise ValueError("unknown benchmark %r (expected one of %s)"
                             % (self.benchmark, ", ".join(bm.BENCHMARKS)))
        self.technology = Technology.parse(self.technology).value
        self.quad = int(self.quad)
        if self.quad not in (2, 3):
            raise ValueError("quad must be 2 or 3, got %r" % (self.quad,))
        self.levels = int(self.levels)
        if self.levels == 0:
            self.levels = 1 if self.benchmark == "block3d" else 8
        if self.levels < 1:
            raise ValueError("levels must be positive")
        if self.benchmark == "block3d" and self.levels != 1:
            raise ValueError("block3d runs on its fixed 16x16x16 mesh only (levels=1)")
        self.samples = int(self.samples)
        if self.samples < 2:
            raise ValueError("samples per element edge must be at least 2")
        if self.fields not in FIELD_MODES:
            raise ValueError("fields must be one of %s" % (FIELD_MODES,))

    @property
    def stem(self):
        return "%s_%s_q%d" % (self.benchmark, self.technology, self.quad)

    def to_text(self):
        return "".join("%s = %s\n" % (k, v) for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text):
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("line %d: expected key = value" % lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ValueError("line %d: unknown key %r" % (lineno, key))
            values[key] = value
        return cls(**values)


def run(config):
    """Run a configured study; returns a process exit status."""
    os.makedirs(config.output, exist_ok=True)
    case = bm.BenchmarkCase(config.benchmark, config.technology, config.quad, config.levels)
    on_level = None
    if config.fields == "all":
        on_level = lambda problem, U, level: _export(config, problem, U, level)
    try:
        report = bm.run_convergence(case, on_level=on_level)
        if config.fields == "last":
            _export(config, report.problem, report.U, len(report.rows))
    except (SolverError, GeometryError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return 1
    write_table(report, os.path.join(config.output, config.stem + ".csv"))
    return 0


def _export(config, problem, U, level):
    samples = bm.sample_grid(problem, config.technology, U, config.samples)
    path = os.path.join(config.output, "%s_level%d.vtk" % (config.stem, level))
    write_vtk_structured(path, samples, nu=problem.material.nu,
                         title="%s level %d" % (config.stem, level))


def build_parser():
    parser = argparse.ArgumentParser(prog="casiga", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a benchmark convergence study")
    r.add_argument("--config", help="key = value config file; flags override it")
    r.add_argument("--benchmark", choices=bm.BENCHMARKS + tuple(ALIASES))
    r.add_argument("--technology", choices=[t.value for t in Technology])
    r.add_argument("--quad", type=int, choices=(2, 3))
    r.add_argument("--levels", type=int)
    r.add_argument("--out", dest="output")
    r.add_argument("--samples", type=int, help="samples per element edge for field export")
    r.add_argument("--fields", choices=FIELD_MODES)

    p = sub.add_parser("patch", help="write a benchmark geometry as a patch file")
    p.add_argument("--benchmark", required=True, choices=bm.BENCHMARKS + tuple(ALIASES))
    p.add_argument("--elements", type=int, default=2, help="elements per direction")
    p.add_argument("--out", required=True)
    return parser


def _config_from_args(args):
    values = {}
    if args.config:
        with open(args.config) as fh:
            values = asdict(RunConfig.from_text(fh.read()))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if "benchmark" not in values:
        raise ValueError("--benchmark is required (or give it in --config)")
    return RunConfig(**values)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "patch":
        name = ALIASES.get(args.benchmark, args.benchmark)
        builders = {"cook": bm.cook_patch, "plate_hole": bm.plate_patch, "block3d": bm.block_patch}
        try:
            save_patch(builders[name](args.elements), args.out)
        except ValueError as exc:
            parser.error(str(exc))
        return 0
    try:
        config = _config_from_args(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    return run(config)


if __name__ == "__main__":
    sys.exit(main())

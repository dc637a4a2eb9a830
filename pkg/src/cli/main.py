import argparse
import dataclasses
import json
import logging
import platform
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import scipy
from threadpoolctl import threadpool_limits

from src.cli.config import RunConfig, load_config
from src.cli.constants import MESH_FILE, OBSERVATIONS_FILE, TRUTH_FILE, Commands, ExitCodes
from src.diagnostics.report import build_report, write_report
from src.exceptions import (ChainAbortedError, ConfigError, DegenerateBoundaryError, FactorizationError,
                            GrainModelError, MeshParseError, MeshValidationError, NonConformalMeshError,
                            PrecisionBoundsError, ResidualDriftError, TraceIntegrityError)
from src.gmrf.precision import rho_bounds
from src.mesh.boundaries import extract_boundaries
from src.mesh.grain_mesh import load_mesh, save_mesh
from src.mesh.neighborhoods import build_field_graphs
from src.mesh.observations import load_observations, save_observations
from src.sampler.chain import run_chain
from src.sampler.trace_io import read_manifest, read_trace, write_manifest, write_trace
from src.synth.geometry import generate_geometry
from src.synth.simulate import simulate_data
from src.utils.hashing import file_sha256
from src.utils.random import BIT_GENERATOR, make_rng

logger = logging.getLogger(__name__)


def versions() -> dict:
    return {'python': platform.python_version(), 'numpy': np.__version__, 'scipy': scipy.__version__,
            'pandas': pd.__version__}


def _manifest(cfg: RunConfig, **extra) -> dict:
    manifest = {
        'command': cfg.command,
        'seed': cfg.seed,
        'bit_generator': BIT_GENERATOR,
        'config_hash': cfg.hash(),
        'config': cfg.model_payload(),
        'versions': versions(),
    }
    manifest.update(extra)
    return manifest


def _finite_or_none(value: float):
    return float(value) if np.isfinite(value) else None


def cmd_simulate(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    synth = cfg.synth.check()

    if cfg.mesh is not None:
        mesh = load_mesh(cfg.mesh)
        mesh_path = Path(cfg.mesh)
    else:
        mesh = generate_geometry(synth)
        mesh_path = out / MESH_FILE
        save_mesh(mesh, mesh_path)

    data = simulate_data(mesh, synth, rng=make_rng(cfg.seed))
    save_observations(data.y, out / OBSERVATIONS_FILE)
    with open(out / TRUTH_FILE, 'w') as f:
        json.dump({'synth': {key: value for key, value in dataclasses.asdict(synth).items() if key != 'truth'},
                   'truth': synth.truth.as_dict(), 'realized': data.truth_dict()}, f, indent=2, sort_keys=True)
        f.write('\n')

    files = {path.name: file_sha256(path) for path in (mesh_path, out / OBSERVATIONS_FILE, out / TRUTH_FILE)}
    write_manifest(out, _manifest(cfg, files=files, n_elements=mesh.M, n_grains=mesh.G))
    logger.info(f'Simulated dataset written to {out}')
    return files


def _load_inputs(cfg: RunConfig):
    mesh = load_mesh(cfg.mesh)
    y = load_observations(cfg.observations, mesh.M)
    bg = extract_boundaries(mesh)
    return mesh, y, bg


def _input_hashes(cfg: RunConfig) -> dict:
    return {'mesh': file_sha256(cfg.mesh), 'observations': file_sha256(cfg.observations)}


def cmd_fit(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    mesh, y, bg = _load_inputs(cfg)
    graphs = build_field_graphs(mesh, bg)

    trace = run_chain(y, mesh, bg, graphs, cfg.chain, make_rng(cfg.seed), priors=cfg.priors, dump_dir=out)
    files = write_trace(trace, out)
    manifest = _manifest(cfg, inputs=_input_hashes(cfg), trace_files=files, retained_rows=trace.n_retained,
                         acceptance=trace.acceptance, timings=trace.timings,
                         dimensions={'elements': mesh.M, 'grains': mesh.G, 'beta': bg.dim_beta,
                                     'gamma': bg.dim_gamma})
    write_manifest(out, manifest)
    return manifest


def cmd_diagnose(cfg: RunConfig) -> dict:
    trace_dir = Path(cfg.trace if cfg.trace is not None else cfg.out)
    manifest = read_manifest(trace_dir)
    if cfg.seed is None:
        cfg.seed = manifest.get('seed')
    if manifest.get('config_hash') != cfg.hash():
        raise TraceIntegrityError(f'trace in {trace_dir} was produced by a different config or seed '
                                  f'({manifest.get("config_hash")} != {cfg.hash()})')
    if manifest.get('inputs') != _input_hashes(cfg):
        raise TraceIntegrityError(f'mesh or observations differ from those the trace in {trace_dir} was fitted to')

    mesh, y, bg = _load_inputs(cfg)
    scalars, snapshots = read_trace(trace_dir, manifest)
    report = build_report(y, mesh, bg, scalars, snapshots, p_effective=cfg.p_effective,
                          snapshot_index=cfg.snapshot, n_bins=cfg.profile_bins)
    return write_report(report, Path(cfg.out))


def cmd_validate_mesh(cfg: RunConfig) -> dict:
    mesh = load_mesh(cfg.mesh)
    bg = extract_boundaries(mesh)
    graphs = build_field_graphs(mesh, bg)
    summary = {'elements': mesh.M, 'grains': mesh.G, 'nodes': mesh.n_nodes}
    for which in ('beta', 'gamma'):
        lower, upper = rho_bounds(graphs.of(which))
        summary[f'dim_{which}'] = graphs.of(which).dim
        summary[f'rho_bounds_{which}'] = [_finite_or_none(lower), _finite_or_none(upper)]
    print(json.dumps(summary, indent=2, sort_keys=True))
    return summary


COMMANDS = {
    Commands.SIMULATE: cmd_simulate,
    Commands.FIT: cmd_fit,
    Commands.DIAGNOSE: cmd_diagnose,
    Commands.VALIDATE_MESH: cmd_validate_mesh,
}


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return ExitCodes.CONFIG
    if isinstance(exc, (FactorizationError, PrecisionBoundsError, ChainAbortedError, ResidualDriftError)):
        return ExitCodes.NUMERIC
    if isinstance(exc, (OSError, TraceIntegrityError, MeshParseError, MeshValidationError, NonConformalMeshError,
                        DegenerateBoundaryError)):
        return ExitCodes.IO
    if isinstance(exc, GrainModelError):
        return ExitCodes.CONFIG
    raise exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='grain-gmrf',
                                     description='Grain-boundary GMRF stress model: simulate, fit, diagnose.')
    parser.add_argument('command', choices=Commands.ALL)
    parser.add_argument('--config', type=str, default=None, help='YAML run config (default: shipped template)')
    parser.add_argument('--seed', type=int, default=None, help='RNG seed, overrides run.seed')
    parser.add_argument('--threads', type=int, default=None, help='BLAS thread count, overrides run.threads')
    parser.add_argument('--out', type=str, default=None, help='output directory, overrides run.out')
    parser.add_argument('--mesh', type=str, default=None, help='mesh file, overrides run.mesh')
    parser.add_argument('--observations', type=str, default=None, help='observation CSV, overrides run.observations')
    parser.add_argument('--trace', type=str, default=None, help='fit output directory to diagnose')
    parser.add_argument('--log-level', type=str, default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--progress', action='store_true', help='show a progress bar while fitting')
    return parser


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    cfg.command = args.command
    for name in ('seed', 'threads', 'out', 'mesh', 'observations', 'trace'):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    if args.progress:
        cfg.chain.progress = True
    return cfg


def run(cfg: RunConfig) -> dict:
    cfg.check()
    with threadpool_limits(limits=cfg.threads):
        return COMMANDS[cfg.command](cfg)


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        run(apply_overrides(load_config(args.config), args))
    except (GrainModelError, OSError) as exc:
        code = exit_code(exc)
        if isinstance(exc, ChainAbortedError) and exc.dump_path is not None:
            logger.error(f'{exc} (state dumped to {exc.dump_path})')
        else:
            logger.error(f'{type(exc).__name__}: {exc}')
        return code
    return ExitCodes.OK


if __name__ == '__main__':
    sys.exit(main())

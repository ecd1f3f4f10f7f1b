"""Command-line experiment runner.

Builds (or loads) a system, sets up a hierarchy, solves ``A x = 0`` from a
seeded random guess with preconditioned GMRES and reports one row per
entry of the sweep.  Example::

    lair --problem adr2d --n 64 --kappa-sweep 1e-10,1e-4,1 --solver lair2
"""
import json
import math
import re
import sys
from dataclasses import dataclass, field

import click
import numpy as np

from .diagnostics import (FIDELITY_COLUMNS, DenseSizeError, cycle_complexity,
                          fidelity_row, jacobi_delta, projection_norm_check, wpd)
from .hierarchy import SetupConfig, setup
from .krylov import SolveConfig, gmres, random_initial_guess
from .problems import (REACTION_FIELDS, VELOCITY_FIELDS, PdeSpec,
                       advection_diffusion_reaction, block_diag_scale,
                       synthetic_block_advection)
from .report import (SolveRow, format_generic_table, format_table, table_to_csv,
                     to_csv, to_jsonl)
from .sparse_core import as_csr, read_matrix_market, write_matrix_market
from .strength_split import classical_soc, rs_first_pass
from .transfer import RestrictionConfig

__all__ = ['ExperimentConfig', 'build_system', 'solver_config', 'run_experiment',
           'fidelity_table', 'projection_table', 'main']

PROBLEMS = ('adr1d', 'adr2d', 'adr3d')
SOLVER_PATTERN = re.compile(r'^(lair1|lair2|lair_block|classical_pt|neumann(\d+))$')
NAMED_STEPS = {'h2': lambda h: h * h, 'h': lambda h: h, 'sqrth': math.sqrt}


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment table."""
    problem: str = 'adr2d'
    load: str = None
    n: int = 64
    beta: str = None
    angle: float = 0.3
    reaction: str = 'zero'
    sigma: float = 0.0
    kappas: tuple = (0.0,)
    dts: tuple = (None,)
    block_size: int = 1
    block_scale: bool = True
    solver: str = 'lair2'
    interp: str = None
    distance: int = None
    theta_c: float = 0.4
    theta_r: float = None
    theta_d: float = 0.001
    solve: SolveConfig = field(default_factory=SolveConfig)

    @property
    def dim(self):
        return int(self.problem[3])

    @property
    def sweep(self):
        """``(kappa, dt, param)`` triples in input order."""
        if len(self.dts) > 1:
            return [(self.kappas[0], dt, dt) for dt in self.dts]
        return [(k, self.dts[0], k) for k in self.kappas]


def _pde_spec(cfg, kappa, dt):
    beta = cfg.beta
    if beta is None:
        beta = 'curved' if cfg.dim == 2 else 'constant'
    h = 1.0 / (cfg.n + 1)
    if isinstance(dt, str):
        dt = NAMED_STEPS[dt](h)
    return PdeSpec(dim=cfg.dim, n=cfg.n, kappa=kappa, beta=beta, reaction=cfg.reaction,
                   angle=cfg.angle, sigma=cfg.sigma, dt=dt)


def build_system(cfg, kappa=0.0, dt=None):
    """Matrix and metadata for one sweep entry (block systems are scaled by
    their inverse block diagonal unless ``block_scale`` is off)."""
    if cfg.load is not None:
        A = read_matrix_market(cfg.load)
        meta = dict(source=cfg.load)
    else:
        spec = _pde_spec(cfg, kappa, dt)
        if cfg.block_size > 1:
            A, meta = synthetic_block_advection(spec, cfg.block_size)
        else:
            A, meta = advection_diffusion_reaction(spec)
    if cfg.block_size > 1 and cfg.block_scale:
        A, _ = block_diag_scale(A, cfg.block_size)
    return A, meta


def solver_config(cfg):
    """Map the solver selector onto a :class:`SetupConfig`."""
    m = SOLVER_PATTERN.match(cfg.solver)
    if m is None:
        raise ValueError(f'unknown solver {cfg.solver!r}')
    name = m.group(1)
    if name == 'lair_block' and cfg.block_size < 2:
        raise ValueError('lair_block needs --block-size > 1')
    if name == 'classical_pt':
        restriction = RestrictionConfig('transpose')
    elif name.startswith('neumann'):
        restriction = RestrictionConfig('neumann', neumann_order=int(m.group(2)))
    else:
        distance = 1 if name == 'lair1' else 2
        if cfg.distance is not None:
            distance = cfg.distance
        restriction = RestrictionConfig('lair', distance, cfg.theta_r)
    return SetupConfig(theta_c=cfg.theta_c, restriction=restriction,
                       interpolation=cfg.interp, theta_d=cfg.theta_d,
                       block_size=cfg.block_size)


def _solve_row(A, cfg, param):
    H = setup(A, solver_config(cfg))
    cc = cycle_complexity(H).cycle_complexity
    n = A.shape[0]
    x0 = random_initial_guess(n, cfg.solve.seed)
    _, rep = gmres(A, np.zeros(n), x0, H.aspreconditioner(), cfg.solve, cc)
    rho = rep.measured_cf
    if rho == 0:
        digits = 0.0
    elif math.isnan(rho):
        digits = math.inf
    else:
        digits = wpd(cc, rho)
    stats = [L.stats for L in H.levels[:-1]]
    return SolveRow(param, float(rho), float(cc), float(digits), rep.iterations,
                    rep.converged, sum(s['r_fallbacks'] for s in stats),
                    sum(s['p_fallbacks'] for s in stats))


def run_experiment(cfg):
    """Solve every sweep entry; rows come back in input order."""
    rows = []
    for kappa, dt, param in cfg.sweep:
        A, _ = build_system(cfg, kappa, dt)
        if cfg.load is not None:
            param = cfg.load
        rows.append(_solve_row(A, cfg, param))
    return rows


def fidelity_table(cfg, force=False):
    """Fidelity of the Neumann and local restrictions, one row per sweep entry."""
    out = []
    for kappa, dt, param in cfg.sweep:
        A, _ = build_system(cfg, kappa, dt)
        row = fidelity_row(A, cfg.theta_c, force=force)
        out.append(dict(param=param, **row))
    return out


def projection_table(cfg, force=False):
    """Norm of the residual coarse-grid projection with ``Z = 0`` and one
    F-Jacobi sweep, with the extreme singular values it is compared to."""
    out = []
    for kappa, dt, param in cfg.sweep:
        A, meta = build_system(cfg, kappa, dt)
        split = rs_first_pass(classical_soc(A, cfg.theta_c))
        A_ff = as_csr(A)[split.f_points][:, split.f_points].toarray()
        check = projection_norm_check(A, split, jacobi_delta(A_ff), force=force)
        out.append(dict(param=param, n=A.shape[0], h=meta.get('h', math.nan),
                        norm_sq=check.lhs, sigma_min=check.sigma_min,
                        sigma_max=check.sigma_max))
    return out


def _float_list(text):
    return tuple(float(v) for v in text.split(',') if v.strip())


def _dt_value(text):
    text = text.strip()
    return text if text in NAMED_STEPS else float(text)


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, 'w', newline='\n') as fh:
            fh.write(text)


@click.command(context_settings=dict(help_option_names=['-h', '--help']))
@click.option('--problem', type=click.Choice(PROBLEMS), default=None,
              help='Built-in generator (default adr2d).')
@click.option('--load', type=click.Path(dir_okay=False), default=None,
              help='Matrix Market file to solve instead of a generator.')
@click.option('--n', type=int, default=64, show_default=True, help='Points per axis.')
@click.option('--dim', type=click.IntRange(1, 3), default=None,
              help='Dimension; shorthand for --problem adr{dim}d.')
@click.option('--kappa', type=float, default=None, help='Diffusion coefficient.')
@click.option('--kappa-sweep', default=None, help='Comma-separated diffusion values.')
@click.option('--dt', default=None, help='Time step: a number or h2, h, sqrth.')
@click.option('--dt-sweep', default=None, help='Comma-separated time steps.')
@click.option('--beta', type=click.Choice(VELOCITY_FIELDS), default=None,
              help='Velocity field (default curved in 2D, constant otherwise).')
@click.option('--angle', type=float, default=0.3, show_default=True,
              help='Direction of the constant velocity field.')
@click.option('--reaction', type=click.Choice(REACTION_FIELDS), default='zero',
              show_default=True)
@click.option('--sigma', type=float, default=0.0, show_default=True,
              help='Value of the constant reaction field.')
@click.option('--block-size', type=click.IntRange(1), default=1, show_default=True)
@click.option('--block-scale/--no-block-scale', default=True, show_default=True,
              help='Scale block systems by the inverse block diagonal.')
@click.option('--solver', default='lair2', show_default=True,
              help='lair1, lair2, lair_block, neumann<k> or classical_pt.')
@click.option('--interp', type=click.Choice(['one_point', 'classical_modified', 'ideal']),
              default=None, help='Interpolation (default by block size).')
@click.option('--distance', type=click.Choice(['1', '2']), default=None,
              help='Override the restriction distance.')
@click.option('--theta-c', type=float, default=0.4, show_default=True)
@click.option('--theta-r', type=float, default=None,
              help='Restriction strength threshold (default 0.1 or 0.2).')
@click.option('--theta-d', type=float, default=0.001, show_default=True)
@click.option('--tol', type=float, default=1e-12, show_default=True)
@click.option('--max-iters', type=click.IntRange(1), default=200, show_default=True)
@click.option('--restart', type=click.IntRange(1), default=100, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--mode', type=click.Choice(['solve', 'fidelity', 'projection']),
              default='solve', show_default=True)
@click.option('--force-dense', is_flag=True, help='Lift the dense-diagnostic size cap.')
@click.option('--format', 'fmt', type=click.Choice(['table', 'csv', 'jsonl']),
              default='table', show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), default=None,
              help='Write the report here instead of standard output.')
@click.option('--write-matrix', type=click.Path(dir_okay=False), default=None,
              help='Write the (first) system as Matrix Market plus a .json sidecar.')
def main(problem, load, n, dim, kappa, kappa_sweep, dt, dt_sweep, beta, angle,
         reaction, sigma, block_size, block_scale, solver, interp, distance, theta_c,
         theta_r, theta_d, tol, max_iters, restart, seed, mode, force_dense, fmt,
         out, write_matrix):
    """Run multigrid experiments on advection-diffusion-reaction systems."""
    if load is not None and (problem is not None or dim is not None):
        raise click.UsageError('give either --load or --problem/--dim, not both')
    if problem is not None and dim is not None and problem != f'adr{dim}d':
        raise click.UsageError(f'--dim {dim} contradicts --problem {problem}')
    problem = problem or (f'adr{dim}d' if dim else 'adr2d')
    if kappa is not None and kappa_sweep is not None:
        raise click.UsageError('give either --kappa or --kappa-sweep')
    if dt is not None and dt_sweep is not None:
        raise click.UsageError('give either --dt or --dt-sweep')
    try:
        kappas = _float_list(kappa_sweep) if kappa_sweep else (kappa or 0.0,)
        dts = tuple(_dt_value(v) for v in dt_sweep.split(',')) if dt_sweep \
            else (None if dt is None else _dt_value(dt),)
        if len(kappas) > 1 and len(dts) > 1:
            raise click.UsageError('sweep either kappa or dt, not both')
        cfg = ExperimentConfig(
            problem=problem, load=load, n=n, beta=beta, angle=angle, reaction=reaction,
            sigma=sigma, kappas=kappas, dts=dts, block_size=block_size,
            block_scale=block_scale, solver=solver, interp=interp,
            distance=None if distance is None else int(distance), theta_c=theta_c,
            theta_r=theta_r, theta_d=theta_d,
            solve=SolveConfig(rel_tol=tol, max_iters=max_iters, restart=restart,
                              seed=seed))
        solver_config(cfg)
        if write_matrix:
            kappa0, dt0, _ = cfg.sweep[0]
            A, meta = build_system(cfg, kappa0, dt0)
            write_matrix_market(write_matrix, A)
            side = {k: v for k, v in meta.items() if not isinstance(v, np.ndarray)}
            side['block_size'] = cfg.block_size
            if 'flow_order' in meta:
                side['flow_order'] = meta['flow_order'].tolist()
            with open(write_matrix + '.json', 'w') as fh:
                json.dump(side, fh, indent=1, sort_keys=True)
        if mode == 'solve':
            rows = run_experiment(cfg)
            text = dict(table=lambda: format_table(rows, 'dt' if len(dts) > 1 else 'kappa'),
                        csv=lambda: to_csv(rows), jsonl=lambda: to_jsonl(rows))[fmt]()
            _emit(text, out)
            sys.exit(0 if all(r.converged for r in rows) else 1)
        if mode == 'fidelity':
            records = fidelity_table(cfg, force_dense)
            columns = ('param',) + FIDELITY_COLUMNS + ('zero',)
        else:
            records = projection_table(cfg, force_dense)
            columns = ('param', 'n', 'h', 'norm_sq', 'sigma_min', 'sigma_max')
        if fmt == 'table':
            text = format_generic_table(records, columns)
        elif fmt == 'csv':
            text = table_to_csv(records, columns)
        else:
            text = ''.join(json.dumps(r) + '\n' for r in records)
        _emit(text, out)
    except DenseSizeError as exc:
        raise click.UsageError(f'{exc}; rerun with --force-dense') from None
    except (ValueError, OSError) as exc:
        raise click.UsageError(str(exc)) from None


if __name__ == '__main__':
    main()

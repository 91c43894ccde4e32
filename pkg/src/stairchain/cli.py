"""Experiment runner.

Every subcommand is fully determined by its flags and seed and writes
UTF-8 CSV (or flat key=value text for `network`); rerunning a command
reproduces its output byte for byte.  Exit code 2 flags an invalid
experiment spec.
"""
from __future__ import annotations

import csv
import io
import math

import click
import numpy as np

from . import analytics, nursing, simulate
from .analytics import Scheme
from .params import ProtocolParams, call_value_at, new_params, probability_at, to_config

__all__ = ["main"]


class IntExpr(click.ParamType):
    """Integer accepting exponent syntax, e.g. 2^32."""

    name = "integer"

    def convert(self, value, param, ctx):
        if isinstance(value, int):
            return value
        text = value.strip()
        base, sep, exponent = text.partition("^")
        try:
            if sep:
                e = int(exponent)
                if not 0 <= e <= 4096:
                    self.fail(f"exponent out of range in {text!r}", param, ctx)
                return int(base) ** e
            return int(text)
        except ValueError:
            self.fail(f"{value!r} is not an integer (use forms like 65536 or 2^32)", param, ctx)


INT_EXPR = IntExpr()
_SCHEMES = {"explicit": Scheme.EXPLICIT, "implicit": Scheme.IMPLICIT}


def _fmt(x: float) -> str:
    return format(x, ".12g")


def _build_params(k: int, n_bound: int, h: int) -> ProtocolParams:
    try:
        return new_params(k, n_bound, h)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def _emit(out: str | None, header: list[str], rows: list[list[str]]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out is None:
        click.echo(buffer.getvalue(), nl=False)
    else:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(buffer.getvalue())


def _emit_text(out: str | None, text: str) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _grid(n_min: int, n_max: int, points_per_decade: int):
    try:
        return analytics.log_grid(n_min, n_max, points_per_decade)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def params_options(command):
    for option in (
        click.option("--k", "k", type=INT_EXPR, required=True, help="Staircase length."),
        click.option("--N", "n_bound", type=INT_EXPR, required=True, help="Contender bound."),
        click.option("--H", "h", type=INT_EXPR, default=256, show_default=True,
                     help="Hash width in bits."),
    ):
        command = option(command)
    return command


@click.group()
def main() -> None:
    """Staircase-mining experiment runner."""


@main.command("params")
@params_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output path.")
def params_cmd(k: int, n_bound: int, h: int, out: str | None) -> None:
    """Echo the configuration and print the staircase table."""
    p = _build_params(k, n_bound, h)
    click.echo(to_config(p))
    rows = [
        [str(level), _fmt(probability_at(p, level)), str(call_value_at(p, level))]
        for level in range(p.k + 1)
    ]
    _emit(out, ["level", "probability", "call_value"], rows)


@main.command("expected")
@params_options
@click.option("--n", type=INT_EXPR, default=None, help="Single contender count.")
@click.option("--n-min", type=INT_EXPR, default=1, show_default=True)
@click.option("--n-max", type=INT_EXPR, default=1 << 20, show_default=True)
@click.option("--points-per-decade", type=int, default=64, show_default=True)
@click.option("--truncation-j", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def expected_cmd(k, n_bound, h, n, n_min, n_max, points_per_decade, truncation_j, out) -> None:
    """Analytic mean mined blocks and its upper bound over an n-grid."""
    p = _build_params(k, n_bound, h)
    constants = analytics.bound_constants(p, truncation_j)
    grid = [n] if n is not None else [int(v) for v in _grid(n_min, n_max, points_per_decade)]
    rows = []
    for point in grid:
        try:
            rows.append([
                str(point),
                _fmt(analytics.expected_mined_explicit(p, point)),
                _fmt(analytics.expected_mined_implicit(p, point)),
                _fmt(analytics.upper_bound_explicit(p, point, constants)),
            ])
        except ValueError as exc:
            raise click.UsageError(str(exc))
    _emit(out, ["n", "expected_explicit", "expected_implicit", "upper_bound"], rows)


@main.command("simulate")
@params_options
@click.option("--n", type=INT_EXPR, required=True, help="Contender count.")
@click.option("--trials", type=INT_EXPR, default=1000, show_default=True)
@click.option("--seed", type=INT_EXPR, default=0, show_default=True)
@click.option("--scheme", type=click.Choice(sorted(_SCHEMES)), default="explicit",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def simulate_cmd(k, n_bound, h, n, trials, seed, scheme, out) -> None:
    """Monte Carlo contention trials: mean, standard error and histogram."""
    p = _build_params(k, n_bound, h)
    try:
        config = simulate.SimConfig(params=p, n=n, trials=trials,
                                    master_seed=seed, scheme=_SCHEMES[scheme])
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if config.scheme is Scheme.EXPLICIT:
        result = simulate.simulate_contention_explicit(config)
    else:
        result = simulate.simulate_contention_implicit(config)
    observed = sorted(result.counts)
    header = ["n", "trials", "mean", "stderr"] + [f"m_{m}" for m in observed]
    row = [str(n), str(trials), _fmt(result.mean()), _fmt(result.stderr())]
    row += [str(result.counts[m]) for m in observed]
    _emit(out, header, [row])


@main.command("distribution")
@params_options
@click.option("--n", type=INT_EXPR, required=True, help="Contender count.")
@click.option("--m-max", type=INT_EXPR, default=None, help="Last m to print.")
@click.option("--scheme", type=click.Choice(sorted(_SCHEMES)), default="explicit",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def distribution_cmd(k, n_bound, h, n, m_max, scheme, out) -> None:
    """Exact pmf of the simultaneous-mining count with tail and tail bound."""
    p = _build_params(k, n_bound, h)
    try:
        if _SCHEMES[scheme] is Scheme.EXPLICIT:
            dist = analytics.distribution_explicit_closed(p, n)
        else:
            dist = analytics.distribution_implicit(p, n)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    tail = analytics.tail_from_pmf(dist.pmf)
    last = n if m_max is None else min(m_max, n)
    rows = []
    for m in range(last + 1):
        bound = _fmt(analytics.tail_bound(p, m)) if m >= 1 else ""
        rows.append([str(m), _fmt(float(dist.pmf[m])), _fmt(float(tail[m])), bound])
    _emit(out, ["m", "pmf", "tail", "tail_bound"], rows)


@main.command("compare")
@params_options
@click.option("--n-min", type=INT_EXPR, default=1, show_default=True)
@click.option("--n-max", type=INT_EXPR, default=1 << 20, show_default=True)
@click.option("--points-per-decade", type=int, default=64, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def compare_cmd(k, n_bound, h, n_min, n_max, points_per_decade, out) -> None:
    """Explicit vs implicit analytic means over an n-grid."""
    p = _build_params(k, n_bound, h)
    rows = [
        [str(int(point)),
         _fmt(analytics.expected_mined_explicit(p, int(point))),
         _fmt(analytics.expected_mined_implicit(p, int(point)))]
        for point in _grid(n_min, n_max, points_per_decade)
    ]
    _emit(out, ["n", "expected_explicit", "expected_implicit"], rows)


@main.command("nursing")
@params_options
@click.option("--x", "xs", type=float, multiple=True,
              help="Nursery ratio m/n; repeatable. Default: a log grid.")
@click.option("--x-min", type=float, default=0.01, show_default=True)
@click.option("--x-max", type=float, default=100.0, show_default=True)
@click.option("--points", type=int, default=41, show_default=True)
@click.option("--trials", type=INT_EXPR, default=10000, show_default=True)
@click.option("--mc-n", type=INT_EXPR, default=100, show_default=True,
              help="Opponent nursery size for the Monte Carlo column.")
@click.option("--seed", type=INT_EXPR, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def nursing_cmd(k, n_bound, h, xs, x_min, x_max, points, trials, mc_n, seed, out) -> None:
    """Loss asymptote L(x), exact losses at n=100 and n=10000, Monte Carlo."""
    p = _build_params(k, n_bound, h)
    if xs:
        grid = list(xs)
    else:
        if not 0 < x_min <= x_max or points < 1:
            raise click.UsageError("need 0 < x-min <= x-max and points >= 1")
        grid = [float(v) for v in np.geomspace(x_min, x_max, points)]
    rows = []
    for x in grid:
        if x <= 0:
            raise click.UsageError("x must be positive")
        mc = nursing.loss_probability_simulated(
            p, m=round(x * mc_n), n=mc_n, trials=trials, seed=seed)
        rows.append([
            _fmt(x),
            _fmt(nursing.loss_asymptote(p.p, x)),
            _fmt(nursing.loss_probability_exact(p, round(x * 100), 100)),
            _fmt(nursing.loss_probability_exact(p, round(x * 10000), 10000)),
            _fmt(mc),
        ])
    _emit(out, ["x", "L_asymptote", "L_exact_n100", "L_exact_n10000", "L_mc"], rows)


@main.command("network")
@params_options
@click.option("--nodes", type=int, default=10, show_default=True)
@click.option("--rate", type=float, default=0.02, show_default=True,
              help="Per-node candidate rate per second.")
@click.option("--mgt", type=INT_EXPR, default=60, show_default=True)
@click.option("--drift", type=float, default=0.0, show_default=True,
              help="Clock drift bound in seconds.")
@click.option("--latency", type=float, default=0.0, show_default=True)
@click.option("--duration", type=INT_EXPR, default=36000, show_default=True)
@click.option("--seed", type=INT_EXPR, default=0, show_default=True)
@click.option("--gating/--no-gating", default=True, show_default=True,
              help="Apply the slot hash gate (disable for the control arm).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def network_cmd(k, n_bound, h, nodes, rate, mgt, drift, latency, duration, seed, gating, out):
    """Discrete-event multi-node run of the implicit variant."""
    p = _build_params(k, n_bound, h)
    try:
        report = simulate.simulate_network(
            p, node_count=nodes, candidate_rate=rate, mgt=mgt,
            clock_drift_bound=drift, duration=duration, seed=seed,
            latency=latency, slot_gating=gating)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _emit_text(out, report.to_text())


@main.command("election")
@click.option("--p", "p_keep", type=float, default=0.5, show_default=True,
              help="Per-round survival probability.")
@click.option("--n", type=INT_EXPR, required=True, help="Initial contenders.")
@click.option("--trials", type=INT_EXPR, default=10000, show_default=True)
@click.option("--seed", type=INT_EXPR, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def election_cmd(p_keep, n, trials, seed, out) -> None:
    """Coin-tossing leader election statistics."""
    try:
        survivors, rounds = simulate.simulate_leader_election(p_keep, n, trials, seed)
        predicted_survivors = analytics.survivor_set_mean(p_keep)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    predicted_rounds = math.log(n) / math.log(1.0 / p_keep)
    row = [_fmt(p_keep), str(n), str(trials), _fmt(survivors), _fmt(rounds),
           _fmt(predicted_survivors), _fmt(predicted_rounds)]
    _emit(out, ["p", "n", "trials", "mean_survivors", "mean_rounds",
                "predicted_survivors", "predicted_rounds"], [row])


if __name__ == "__main__":
    main()

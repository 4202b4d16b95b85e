import json
import logging
from typing import Optional

import click
import yaml
from pydantic import BaseModel

from models.games import ControlGame, HistoryPolicy, MemoryPolicy, PetriGame
from models.nets import PetriNet
from models.reports import BisimVerdict, Verdict
from utils.config import get_settings
from utils.distribution import (
    build_snd, communication_graph, find_slice_distribution, iter_slice_distributions, validate_slice_distribution,
    validate_snd,
)
from utils.errors import InvalidDistribution
from utils.export_to_dot import to_dot
from utils.formats import dump, emit, load
from utils.games import check_deterministic, check_justified_refusal, controller_winning_bounded, materialize, strategy_winning
from utils.generators import gen_3sat_net, gen_lower_bound_cg, gen_lower_bound_pg, parse_formula, satisfiable
from utils.logger import setup_logging
from utils.solve import solve_cg, solve_pg
from utils.translate_cg2pg import VARIANTS as CG2PG_VARIANTS, cg_to_pg, controller_to_strategy_cg2pg
from utils.translate_pg2cg import HATTED, PLAIN, pg_to_cg, strategy_to_controller_pg2cg
from utils.verify import weak_bisim_check


class GameBridgeGroup(click.Group):
    """Maps library errors and unreadable files to exit code 2."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (ValueError, OSError) as error:
            logging.error(str(error))
            ctx.exit(2)


@click.group(cls=GameBridgeGroup)
@click.option("--depth", type=int, help="Exploration depth; defaults to GB_DEPTH.")
@click.option("--state-cap", type=int, help="Maximum number of explored states.")
@click.option("--search-cap", type=int, help="Maximum number of candidates a search may try.")
@click.option("--tau-cap", type=int, help="Longest internal run the bisimulation check follows.")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.option("--format", "fmt", type=click.Choice(["json", "yaml"]), default="json", show_default=True)
@click.pass_context
def cli(ctx, depth, state_cap, search_cap, tau_cap, log_level, fmt):
    """Translate between Petri games and control games and check the results."""
    setup_logging(log_level or get_settings().log_level)
    ctx.obj = {
        "depth": depth,
        "state_cap": state_cap,
        "search_cap": search_cap,
        "tau_cap": tau_cap,
        "format": fmt,
    }


def _write(obj, output: Optional[str], name: Optional[str] = None) -> None:
    if output:
        dump(obj, output, name=name)
    else:
        click.echo(emit(obj, name=name), nl=False)


def _report(ctx, payload: dict) -> None:
    data = {key: value.model_dump(mode="json") if isinstance(value, BaseModel) else value for key, value in payload.items()}
    if ctx.obj["format"] == "yaml":
        click.echo(yaml.safe_dump(data, sort_keys=False), nl=False)
    else:
        click.echo(json.dumps(data, indent=2))


def _petri_game(path: str) -> PetriGame:
    game = load(path)
    if not isinstance(game, PetriGame):
        raise click.BadParameter(f"{path} is not a petri_game file")
    return game


def _net_of(obj) -> PetriNet:
    if isinstance(obj, PetriGame):
        return obj.net
    if isinstance(obj, PetriNet):
        return obj
    raise click.BadParameter("expected a petri_net or petri_game file")


def _distribution(net: PetriNet, path: Optional[str], snd: bool, ctx):
    if path:
        return load(path, net=net)
    if snd:
        return build_snd(net, state_cap=ctx.obj["state_cap"])
    distribution = find_slice_distribution(net, search_cap=ctx.obj["search_cap"])
    if distribution is None:
        raise InvalidDistribution(f"{net.name} has no slice distribution; use --snd")
    return distribution


def _policy_strategy(game: PetriGame, path: str, ctx):
    policy = load(path)
    if not isinstance(policy, (HistoryPolicy, MemoryPolicy)):
        raise click.BadParameter(f"{path} is not a strategy file")
    return materialize(game, policy, depth=ctx.obj["depth"], state_cap=ctx.obj["state_cap"])


distribution_options = [
    click.option("--distribution", "distribution_path", type=click.Path(exists=True), help="Slice distribution or SND file."),
    click.option("--snd", is_flag=True, help="Build a singular net distribution instead of searching slices."),
]


def with_distribution(command):
    for option in reversed(distribution_options):
        command = option(command)
    return command


### COMMANDS ###


@cli.command()
@click.argument("game_file", type=click.Path(exists=True))
@click.option("--dir", "direction", type=click.Choice(["pg2cg", "cg2pg"]), required=True)
@click.option("--variant", help=f"pg2cg: {PLAIN} or {HATTED}; cg2pg: {', '.join(CG2PG_VARIANTS)}.")
@click.option("--compact", is_flag=True, help="cg2pg: states without controllable actions become environment places.")
@click.option("-o", "--output", type=click.Path(), help="Write the translated game here instead of stdout.")
@with_distribution
@click.pass_context
def translate(ctx, game_file, direction, variant, compact, output, distribution_path, snd):
    """Translate a game file in the given direction."""
    if direction == "pg2cg":
        game = _petri_game(game_file)
        res = pg_to_cg(game, _distribution(game.net, distribution_path, snd, ctx), variant or PLAIN)
        _write(res.control_game, output)
        return
    game = load(game_file)
    if not isinstance(game, ControlGame):
        raise click.BadParameter(f"{game_file} is not a control_game file")
    res = cg_to_pg(game, variant or CG2PG_VARIANTS[0], compact=compact, state_cap=ctx.obj["state_cap"])
    _write(res.petri_game, output)


@cli.command()
@click.argument("net_file", type=click.Path(exists=True))
@click.option("--partitions", is_flag=True, help="Search token partitions instead of slices.")
@click.option("-o", "--output", type=click.Path())
@click.pass_context
def distribute(ctx, net_file, partitions, output):
    """Find a slice distribution of a net or Petri game."""
    net = _net_of(load(net_file))
    if partitions:
        found = next(iter(iter_slice_distributions(net, strict=False, search_cap=ctx.obj["search_cap"])), None)
    else:
        found = find_slice_distribution(net, search_cap=ctx.obj["search_cap"])
    if found is None:
        logging.warning(f"{net.name} has no slice distribution")
        ctx.exit(1)
    report = validate_slice_distribution(found)
    logging.info(f"Distribution with {report.members} slices found OK")
    _write(found, output)


@cli.command()
@click.argument("net_file", type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path())
@click.pass_context
def snd(ctx, net_file, output):
    """Build and validate a singular net distribution."""
    net = _net_of(load(net_file))
    result = build_snd(net, state_cap=ctx.obj["state_cap"])
    report = validate_snd(result, state_cap=ctx.obj["state_cap"])
    if not report.valid:
        _report(ctx, {"snd": report})
        ctx.exit(1)
    _write(result, output)


@cli.command()
@click.argument("game_file", type=click.Path(exists=True))
@with_distribution
@click.pass_context
def commgraph(ctx, game_file, distribution_path, snd):
    """Print the communication graph and whether it is acyclic."""
    obj = load(game_file)
    if isinstance(obj, ControlGame):
        graph = communication_graph(obj)
    else:
        graph = communication_graph(_distribution(_net_of(obj), distribution_path, snd, ctx))
    _report(ctx, {
        "vertices": list(graph.vertices),
        "edges": sorted(sorted(edge) for edge in graph.edges),
        "acyclic": graph.is_acyclic,
    })


@cli.command("gen-3sat")
@click.option("--clauses", required=True, help='Clauses such as "(1,-2,3)(2,2,-1)".')
@click.option("--decide", is_flag=True, help="Report satisfiability instead of emitting the net.")
@click.option("-o", "--output", type=click.Path())
@click.pass_context
def gen_3sat(ctx, clauses, decide, output):
    """Generate the 3-SAT gadget net."""
    formula = parse_formula(clauses)
    if decide:
        _report(ctx, {"clauses": len(formula), "satisfiable": satisfiable(formula)})
        return
    _write(gen_3sat_net(formula), output)


@cli.command("gen-lb")
@click.option("--family", type=click.Choice(["pg", "cg"]), required=True)
@click.option("-n", "size", type=click.IntRange(min=1), required=True)
@click.option("-o", "--output", type=click.Path())
def gen_lb(family, size, output):
    """Generate a member of the lower-bound families."""
    _write(gen_lower_bound_pg(size) if family == "pg" else gen_lower_bound_cg(size), output)


@cli.command("check-strategy")
@click.argument("game_file", type=click.Path(exists=True))
@click.argument("strategy_file", type=click.Path(exists=True))
@click.pass_context
def check_strategy(ctx, game_file, strategy_file):
    """Check justified refusal, determinism and winning of a strategy."""
    game = _petri_game(game_file)
    strategy = _policy_strategy(game, strategy_file, ctx)
    refusal = check_justified_refusal(game, strategy, depth=ctx.obj["depth"])
    winning = strategy_winning(game, strategy, depth=ctx.obj["depth"], state_cap=ctx.obj["state_cap"])
    _report(ctx, {
        "justified_refusal": refusal,
        "deterministic": check_deterministic(game, strategy, depth=ctx.obj["depth"]),
        "winning": winning,
    })
    if not refusal.valid or winning.verdict == Verdict.NOT_WINNING:
        ctx.exit(1)


@cli.command("check-controller")
@click.argument("game_file", type=click.Path(exists=True))
@click.argument("controller_file", type=click.Path(exists=True))
@click.pass_context
def check_controller(ctx, game_file, controller_file):
    """Check that a controller wins its control game."""
    game = load(game_file)
    if not isinstance(game, ControlGame):
        raise click.BadParameter(f"{game_file} is not a control_game file")
    controller = load(controller_file, game=game)
    winning = controller_winning_bounded(game, controller, bound=ctx.obj["depth"], state_cap=ctx.obj["state_cap"])
    _report(ctx, {"winning": winning})
    if winning.verdict == Verdict.NOT_WINNING:
        ctx.exit(1)


@cli.command()
@click.argument("game_file", type=click.Path(exists=True))
@click.argument("first", type=click.Path(exists=True))
@click.argument("second", type=click.Path(exists=True), required=False)
@click.option("--variant", help="Translation variant; plain for Petri games, base for control games.")
@click.option("--compact", is_flag=True)
@with_distribution
@click.pass_context
def bisim(ctx, game_file, first, second, variant, compact, distribution_path, snd):
    """
    Check a strategy and a controller for weak bisimilarity.

    For a Petri game FIRST is a strategy and SECOND a controller of the translated game;
    for a control game FIRST is a controller and SECOND a strategy of the translated game.
    A missing SECOND is obtained by translating FIRST.
    """
    game = load(game_file)
    depth, state_cap = ctx.obj["depth"], ctx.obj["state_cap"]
    if isinstance(game, PetriGame):
        d = _distribution(game.net, distribution_path, snd, ctx)
        res = pg_to_cg(game, d, variant or PLAIN)
        strategy = _policy_strategy(game, first, ctx)
        if second:
            controller = load(second, game=res.control_game)
        else:
            controller = strategy_to_controller_pg2cg(game, d, res, strategy)
        witness = weak_bisim_check(
            game, strategy, res.control_game, controller, depth=depth,
            pg_label=res.pg_label, cg_label=res.cg_label, tau_cap=ctx.obj["tau_cap"], state_cap=state_cap,
        )
    elif isinstance(game, ControlGame):
        res = cg_to_pg(game, variant or CG2PG_VARIANTS[0], compact=compact, state_cap=state_cap)
        controller = load(first, game=game)
        if second:
            strategy = _policy_strategy(res.petri_game, second, ctx)
        else:
            strategy = controller_to_strategy_cg2pg(game, res, controller, depth=depth)
        witness = weak_bisim_check(
            res.petri_game, strategy, game, controller, depth=depth,
            pg_label=res.pg_label, cg_label=res.cg_label, tau_cap=ctx.obj["tau_cap"], state_cap=state_cap,
        )
    else:
        raise click.BadParameter(f"{game_file} is not a game file")
    _report(ctx, {"bisimulation": witness})
    if witness.verdict == BisimVerdict.FAIL:
        ctx.exit(1)


@cli.command()
@click.argument("game_file", type=click.Path(exists=True))
@click.option("--memory", type=click.IntRange(min=0), default=0, show_default=True, help="Labels of causal memory a decision may use.")
@click.option("-o", "--output", type=click.Path())
@click.pass_context
def solve(ctx, game_file, memory, output):
    """Search a finite-memory winning strategy or controller."""
    game = load(game_file)
    if isinstance(game, PetriGame):
        strategy = solve_pg(game, depth=ctx.obj["depth"], decision_memory=memory, search_cap=ctx.obj["search_cap"])
        result = None if strategy is None else strategy.rule
    elif isinstance(game, ControlGame):
        result = solve_cg(game, bound=ctx.obj["depth"], view_memory=memory, search_cap=ctx.obj["search_cap"])
    else:
        raise click.BadParameter(f"{game_file} is not a game file")
    if result is None:
        logging.warning(f"No winning finite-memory candidate for {game.name}")
        ctx.exit(1)
    _write(result, output, name=game.name)


@cli.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--game", "game_file", type=click.Path(exists=True), help="Petri game a strategy file belongs to.")
@click.pass_context
def dot(ctx, file, game_file):
    """Render a net, game, strategy or control game as DOT."""
    game = _petri_game(game_file) if game_file else None
    obj = load(file)
    if isinstance(obj, (HistoryPolicy, MemoryPolicy)):
        if game is None:
            raise click.UsageError("drawing a strategy needs --game")
        obj = materialize(game, obj, depth=ctx.obj["depth"], state_cap=ctx.obj["state_cap"])
    try:
        click.echo(to_dot(obj, game))
    except TypeError as error:
        raise click.UsageError(str(error))


if __name__ == "__main__":
    cli()

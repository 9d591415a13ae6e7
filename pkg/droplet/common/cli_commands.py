"""
Command Line Interface

Usage:
    droplet solve --mu 0.1 --n-modes 16
    droplet --command evolve --config run.cfg --out-dir results
"""
import sys
import click
from droplet import config, create_app, scenarios
from droplet.common import error_handlers
from droplet.models import DataValidationError


######################################################################
# Command to run one scenario
# Usage:
#   droplet [COMMAND] [OPTIONS]
######################################################################
@click.command("droplet")
@click.argument("command", required=False, type=click.Choice(config.COMMANDS))
@click.option("--command", "command_option", type=click.Choice(config.COMMANDS), help="Command to run (same as the argument).")
@click.option("--config", "config_file", type=str, default=None, help="Flat 'key = value' configuration file.")
@click.option("--a", type=str, default=None, help="Mobility a > 0, the slope of the law F(q) = a q - b.")
@click.option("--b", type=str, default=None, help="Offset b > 0 of the law F(q) = a q - b.")
@click.option("--mu", type=str, default=None, help="Incline mu >= 0.")
@click.option("--volume", type=str, default=None, help="Droplet volume V > 0.")
@click.option("--n-modes", "-N", "n_modes", type=str, default=None, help="Fourier truncation N >= 4.")
@click.option("--n-grid", type=str, default=None, help="Boundary grid size M >= 2N + 2.")
@click.option("--dt", type=str, default=None, help="Time step.")
@click.option("--t-end", type=str, default=None, help="Final time.")
@click.option("--frame", type=str, default=None, help="lab or comoving.")
@click.option("--shape-file", type=str, default=None, help="Initial shape as 'R N M' then 'n re im' lines.")
@click.option("--shape", type=str, default=None, help="Inline shape such as 'cos2=0.01,sin3=0.005'.")
@click.option("--out-dir", type=str, default=None, help="Artifact directory.")
@click.option("--format", "fmt", type=str, default=None, help="csv or json.")
@click.option("--seed", type=str, default=None, help="Seed of the randomized checks.")
def droplet(command, command_option, config_file, fmt, **flags):
    """
    Runs one command: solve, spectrum, evolve, stability, sweep-mu or validate
    """
    create_app()
    flags["format"] = fmt
    flags["command"] = command_option or command
    try:
        cfg = config.parse_config(flags, config_file)
    except DataValidationError as error:
        _, code = error_handlers.handle_error(error)
        sys.exit(code)
    sys.exit(scenarios.run(cfg))

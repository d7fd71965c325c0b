# cli.py
import math
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

import click
import typer
from pydantic import ValidationError
from rich.box import ROUNDED
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from pmbpqm import __version__, config
from pmbpqm.channel import QubitBSCQ, from_flip_family, helstrom_qubit, holevo as holevo_information
from pmbpqm.de import DEConfig, holevo_curve, run_density_evolution, threshold_curve
from pmbpqm.decoder import (
    Method,
    collective_helstrom,
    decode as decode_graph,
    grouped_local_measurements,
    lemma_instance,
    locally_greedy,
    pmbpqm_exact,
    pmbpqm_mc,
)
from pmbpqm.combine import varoast
from pmbpqm.errors import ResourceLimitError
from pmbpqm.graphs import fg5, fg7, get_graph, get_supported_graphs, lemma3q, load_graph
from pmbpqm.io import write_csv
from pmbpqm.log import setup_logging
from pmbpqm.parallel import item_seed, parallel_map
from pmbpqm.schemas import SweepSpec

console = Console()

app = typer.Typer(
    name="pmbpqm",
    help="PMBPQM - paired-measurement belief propagation for BSCQ channels",
    add_completion=False,
    no_args_is_help=True,
)

EXPERIMENTS = ["fg5", "fg7", "lemma3q", "de"]

FG5_COLUMNS = ["theta", "p", "P_pmbpqm", "P_helstrom", "rel_diff"]
FG7_COLUMNS = ["theta", "p", "P_pmbpqm", "P_lg"]
THRESHOLD_COLUMNS = ["theta", "q_threshold", "p_threshold", "dv", "dc", "M", "N", "seed"]
HOLEVO_COLUMNS = ["theta", "q_bound", "rate"]
DE_SUCCESS_COLUMNS = ["theta", "q", "success", "iterations"]


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log per-step detail to stderr"),
):
    """Run PMBPQM experiments and decode factor graphs."""
    setup_logging("DEBUG" if verbose else config.LOG_LEVEL)


@contextmanager
def cli_errors():
    """Turn library errors into a red message and the matching exit code."""
    try:
        yield
    except ResourceLimitError as e:
        console.print(f"[bold red]✗ Resource limit:[/bold red] {e}")
        raise typer.Exit(3)
    except ValidationError as e:
        console.print(f"[bold red]✗ Invalid parameters:[/bold red]\n{e}")
        raise typer.Exit(2)
    except (ValueError, FileNotFoundError) as e:
        # ContractViolation and GraphError are ValueErrors
        console.print(f"[bold red]✗ {e}[/bold red]")
        raise typer.Exit(2)


def parse_floats(value: Optional[str]) -> List[float]:
    if value is None or not value.strip():
        return []
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated numbers, got {value!r}")


def parse_methods(value: Optional[str]) -> List[Method]:
    if value is None:
        return [Method.PMBPQM_EXACT, Method.HELSTROM]
    try:
        return [Method(v.strip()) for v in value.split(",") if v.strip()]
    except ValueError:
        choices = ", ".join(m.value for m in Method)
        raise typer.BadParameter(f"unknown method in {value!r}; choose from {choices}")


def parse_ensembles(value: Optional[str]) -> List[tuple]:
    """'3:4,4:8' -> [(3, 4), (4, 8)]"""
    if value is None or not value.strip():
        return []
    try:
        return [tuple(int(d) for d in item.split(":")) for item in value.split(",") if item.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated dv:dc pairs, got {value!r}")


def sparkline(values: List[float], height: int = 6) -> str:
    """Vertical block sparkline of a float series, one column per value"""
    if not values:
        return "─"
    lo, hi = min(values), max(values)
    span = hi - lo or 1.0
    scaled = [int(round((v - lo) / span * (height - 1))) for v in values]
    lines = []
    for y in range(height - 1, -1, -1):
        lines.append("".join("█" if s > y else "▉" if s == y else " " for s in scaled))
    return "\n".join(lines)


def summary_panel(title: str, values: List[float], stats: List[tuple], outputs: List[Path]):
    spark = sparkline(values)
    parts = []
    for i, (label, value) in enumerate(stats):
        parts.append((("\n" if i else "") + f"{label}: ", "bold green"))
        parts.append((value, "bold white"))
    stats_text = Text.assemble(*parts)
    files = "\n".join(f"[blue]{p}[/blue]" for p in outputs)
    console.print(Panel(
        f"[bold cyan]{title}[/bold cyan]\n\n{spark}\n\n{stats_text}\n\n{files}",
        title="Run Summary",
        border_style="bright_blue",
        expand=False,
        padding=(1, 2),
    ))


# ────────────────────────────────────────────────
# Experiments
# ────────────────────────────────────────────────

def _use_mc(spec: SweepSpec) -> bool:
    return Method.PMBPQM_MC in spec.methods and Method.PMBPQM_EXACT not in spec.methods


def _pmbpqm_success(g, use_mc: bool, trials: int, seed: int) -> float:
    if use_mc:
        return pmbpqm_mc(g, trials=trials, seed=seed).success_prob
    return pmbpqm_exact(g).success_prob


def _fg5_point(args: tuple) -> tuple:
    theta, p, use_mc, trials, seed = args
    g = fg5(from_flip_family(theta, p))
    p_pm = _pmbpqm_success(g, use_mc, trials, seed)
    p_h = collective_helstrom(g).success_prob
    return (theta, p, p_pm, p_h, (p_h - p_pm) / p_h)


def _fg7_point(args: tuple) -> tuple:
    theta, p, use_mc, trials, seed = args
    g = fg7(from_flip_family(theta, p))
    return (theta, p, _pmbpqm_success(g, use_mc, trials, seed), locally_greedy(g).success_prob)


def _sweep_tasks(spec: SweepSpec) -> List[tuple]:
    use_mc = _use_mc(spec)
    points = [(float(t), p) for p in spec.p_list for t in spec.theta_grid()]
    return [
        (theta, p, use_mc, spec.trials, item_seed(spec.seed, i))
        for i, (theta, p) in enumerate(points)
    ]


def _sweep(spec: SweepSpec, point_fn, columns: List[str], title: str) -> List[tuple]:
    with console.status(f"[cyan]Running {spec.experiment} sweep..."):
        rows = parallel_map(point_fn, _sweep_tasks(spec), spec.threads)
    out = spec.out / f"{spec.experiment}.csv"
    outputs = [write_csv(out, columns, rows, spec.header_params(), spec.seed)]
    if spec.plot:
        from pmbpqm.plotting import plot_success

        outputs.append(plot_success(rows, columns, out.with_suffix(".svg"), title=title))

    first_p = spec.p_list[0]
    curve = [r[2] for r in rows if r[1] == first_p]
    summary_panel(
        f"{title} (P_pmbpqm vs theta, p={first_p:g})",
        curve,
        [("Points", f"{len(rows)}"), ("Min P_pmbpqm", f"{min(r[2] for r in rows):.6f}"),
         ("Max P_pmbpqm", f"{max(r[2] for r in rows):.6f}")],
        outputs,
    )
    return rows


def run_fg5(spec: SweepSpec) -> List[tuple]:
    """PMBPQM against the collective Helstrom bound on the 5-qubit code."""
    return _sweep(spec, _fg5_point, FG5_COLUMNS, "5-qubit code: PMBPQM vs Helstrom")


def run_fg7(spec: SweepSpec) -> List[tuple]:
    """PMBPQM against the locally greedy decoder on the 7-qubit code."""
    return _sweep(spec, _fg7_point, FG7_COLUMNS, "7-qubit code: PMBPQM vs locally greedy")


def run_lemma3q(spec: SweepSpec) -> List[tuple]:
    """Collective Helstrom against every local grouping on the 3-qubit instance."""
    w, w2 = lemma_instance()
    g = lemma3q()
    p_h = collective_helstrom(g).success_prob
    rows = [("helstrom", p_h)]
    rows += grouped_local_measurements(varoast(w, w2), w)
    rows += [("pmbpqm", pmbpqm_exact(g).success_prob), ("locally_greedy", locally_greedy(g).success_prob)]
    best_local = max(s for _, s in rows[1:4])

    table = Table(title="3-qubit instance", show_header=True, header_style="bold magenta", box=ROUNDED)
    table.add_column("Measurement", style="bold white")
    table.add_column("Success", style="green", justify="right")
    for label, value in rows:
        table.add_row(label, f"{value:.6f}")
    console.print(table)
    console.print(f"\n[italic dim]Gap to best grouping: {p_h - best_local:.6f}[/italic dim]")

    write_csv(spec.out / "lemma3q.csv", ["measurement", "success"], rows, spec.header_params(), spec.seed)
    return rows


def run_de(spec: SweepSpec) -> dict:
    """
    Threshold curves for every (dv, dc) ensemble with the Holevo curve of each rate.

    Fixed-q success runs use the first ensemble only.
    """
    m, n = spec.population
    grid = spec.theta_grid()
    params = spec.header_params()
    outputs = []
    configs = [DEConfig(dv, dc, M=m, N=n, success_eps=spec.success_eps) for dv, dc in spec.ensembles]
    cfg = configs[0]

    curves = {}
    bounds = {}
    fixed = []
    with console.status(f"[cyan]Density evolution, {len(configs)} ensemble(s), M={m}, N={n}..."):
        for c in configs:
            curves[f"({c.dv},{c.dc})"] = threshold_curve(c, grid, seed=spec.seed, threads=spec.threads,
                                                         bisect_steps=spec.bisect_steps)
            label = f"rate {c.rate:g}"
            if label not in bounds:
                bounds[label] = holevo_curve(c.rate, grid)
        for i, q in enumerate(spec.q_list):
            for j, theta in enumerate(grid):
                result = run_density_evolution(cfg.with_channel(QubitBSCQ(float(theta), q)),
                                               item_seed(spec.seed, i * len(grid) + j))
                fixed.append((float(theta), q, result.success, result.iterations))

    thresholds = [row for rows in curves.values() for row in rows]
    bound = [row for rows in bounds.values() for row in rows]
    outputs.append(write_csv(spec.out / "de_thresholds.csv", THRESHOLD_COLUMNS, thresholds, params, spec.seed))
    outputs.append(write_csv(spec.out / "holevo.csv", HOLEVO_COLUMNS, bound, params, spec.seed))
    if fixed:
        outputs.append(write_csv(spec.out / "de_success.csv", DE_SUCCESS_COLUMNS, fixed, params, spec.seed))
    if spec.plot:
        from pmbpqm.plotting import plot_thresholds

        outputs.append(plot_thresholds(curves, bounds, spec.out / "de_thresholds.svg"))

    first = next(iter(curves.values()))
    first_bound = bounds[f"rate {cfg.rate:g}"]
    summary_panel(
        f"Threshold p vs theta, ({cfg.dv},{cfg.dc}) ensemble",
        [r[2] for r in first],
        [("Ensembles", ", ".join(curves)), ("Rate", f"{cfg.rate:g}"),
         ("Max threshold p", f"{max(r[2] for r in first):.6f}"),
         ("Holevo p at max theta", f"{first_bound[-1][1] / 2:.6f}")],
        outputs,
    )
    return {"thresholds": thresholds, "holevo": bound, "success": fixed}


RUNNERS = {
    "fg5": run_fg5,
    "fg7": run_fg7,
    "lemma3q": run_lemma3q,
    "de": run_de,
}


# ────────────────────────────────────────────────
# Commands
# ────────────────────────────────────────────────

@app.command()
def run(
    experiment: str = typer.Option(..., "--experiment", "-e", click_type=click.Choice(EXPERIMENTS),
                                   help="Experiment to run"),
    theta_min: float = typer.Option(0.0, help="Smallest theta of the grid"),
    theta_max: float = typer.Option(math.pi / 2, help="Largest theta of the grid"),
    theta_steps: int = typer.Option(50, help="Number of theta grid points"),
    p_list: str = typer.Option("0,0.1,0.2", help="Comma-separated flip probabilities (fg5, fg7)"),
    q_list: str = typer.Option("", help="Comma-separated depolarizing weights for fixed-q runs (de)"),
    methods: str = typer.Option("pmbpqm_exact,helstrom",
                                help="Comma-separated methods; pmbpqm_mc alone switches to sampling"),
    dv: int = typer.Option(3, help="Variable-node degree (de)"),
    dc: int = typer.Option(6, help="Check-node degree (de)"),
    ensembles: str = typer.Option("", help="Extra comma-separated dv:dc ensembles to overlay (de)"),
    m: Optional[int] = typer.Option(None, "--M", help="Population size (de); profile default if unset"),
    n: Optional[int] = typer.Option(None, "--N", help="Iterations (de); profile default if unset"),
    trials: int = typer.Option(config.MC_TRIALS, help="Monte-Carlo trials for pmbpqm_mc"),
    seed: int = typer.Option(config.SEED, help="Random seed"),
    threads: int = typer.Option(config.THREADS, help="Worker processes"),
    out: Path = typer.Option(Path(config.OUTPUT_DIR), help="Output directory"),
    profile: str = typer.Option("full", click_type=click.Choice(["full", "ci"]), help="DE size profile"),
    plot: bool = typer.Option(True, "--plot/--no-plot", help="Write SVG figures"),
):
    """Run a named experiment and write CSV (and SVG) results"""
    with cli_errors():
        spec = SweepSpec(
            experiment=experiment,
            theta_min=theta_min,
            theta_max=theta_max,
            theta_steps=theta_steps,
            p_list=parse_floats(p_list),
            q_list=parse_floats(q_list),
            methods=parse_methods(methods),
            dv=dv,
            dc=dc,
            extra_ensembles=parse_ensembles(ensembles),
            M=m,
            N=n,
            trials=trials,
            seed=seed,
            threads=threads,
            out=out,
            profile=profile,
            plot=plot,
        )
        RUNNERS[spec.experiment](spec)


@app.command()
def decode(
    graph: str = typer.Argument(..., help="Factor-graph JSON file, or a built-in graph name"),
    method: str = typer.Option(Method.PMBPQM_EXACT.value, "--method", "-m",
                               click_type=click.Choice([m.value for m in Method])),
    theta: float = typer.Option(math.pi / 4, help="Channel theta for built-in graphs"),
    p: float = typer.Option(0.0, help="Flip probability for built-in graphs"),
    trials: int = typer.Option(config.MC_TRIALS, help="Monte-Carlo trials for pmbpqm_mc"),
    seed: int = typer.Option(config.SEED, help="Random seed"),
):
    """Decode the root bit of a factor graph"""
    with cli_errors():
        path = Path(graph)
        if path.exists():
            g = load_graph(path)
        elif graph in get_supported_graphs():
            g = get_graph(graph, from_flip_family(theta, p))
        else:
            raise FileNotFoundError(
                f"{graph!r} is neither a file nor a built-in graph ({', '.join(get_supported_graphs())})"
            )
        with console.status(f"[cyan]Decoding with {method}..."):
            result = decode_graph(g, method, trials=trials, seed=seed)

    console.print(Panel.fit(
        f"[bold green]✓ Decoded[/bold green]\n\n"
        f"Graph: [cyan]{graph}[/cyan] ({g.n_qubits} qubits)\n"
        f"Method: [bold]{result.method.value}[/bold]\n"
        f"Success probability: [bold cyan]{result.success_prob:.12g}[/bold cyan]\n"
        f"Branches: [yellow]{result.branch_count}[/yellow]",
        title="Decode Result",
        border_style="green",
        padding=(1, 2),
    ))


@app.command(name="graphs")
def list_graphs():
    """List the built-in factor graphs"""
    table = Table(title="Built-in Graphs", show_header=True, header_style="bold magenta", box=ROUNDED)
    table.add_column("Sl. No.", style="cyan bold", justify="center")
    table.add_column("Name", style="bold white")
    table.add_column("Qubits", style="green", justify="right")
    table.add_column("Nodes", style="yellow", justify="right")
    for idx, name in enumerate(get_supported_graphs(), 1):
        g = get_graph(name, QubitBSCQ(math.pi / 4, 0.0))
        table.add_row(f"[bold cyan]{idx}[/bold cyan]", name, str(g.n_qubits), str(len(g)))
    console.print(table)


@app.command()
def holevo(
    theta: float = typer.Option(..., help="Channel theta in [0, pi/2]"),
    q: float = typer.Option(0.0, help="Depolarizing weight in [0, 1]"),
):
    """Show Helstrom and Holevo quantities of a qubit channel"""
    with cli_errors():
        w = QubitBSCQ(theta, q)
        dg = w.delta_gamma
    table = Table(title=f"Channel (theta={w.theta:.6g}, q={w.q:.6g})", show_header=True,
                  header_style="bold magenta", box=ROUNDED)
    table.add_column("Quantity", style="bold white")
    table.add_column("Value", style="green", justify="right")
    table.add_row("delta", f"{dg.delta:.12g}")
    table.add_row("gamma", f"{dg.gamma:.12g}")
    table.add_row("Helstrom success", f"{helstrom_qubit(w):.12g}")
    table.add_row("Holevo information", f"{holevo_information(w):.12g}")
    console.print(table)


@app.command()
def version():
    """Print the package version"""
    console.print(f"pmbpqm {__version__}")


if __name__ == "__main__":
    app()

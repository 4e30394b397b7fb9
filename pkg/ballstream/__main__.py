"""CLI interface for ballstream."""

import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import __version__
from .config import config
from .errors import BallstreamError, DataError, InvalidInputError, InvalidStateError, SpecError
from .evaluate import (
    BudgetSpec,
    LearnerSpec,
    RunConfig,
    RunReport,
    build_learner,
    run_prequential,
    summarize,
    sweep,
)
from .ingest import (
    StreamFormat,
    StreamSource,
    check_readable,
    count_records,
    discover_categories,
    load_schema,
    load_stream,
)
from .learner import Variant
from .synth import generate as generate_stream
from .synth import is_synthetic, parse_data_spec
from .writeout import ResultWriter, read_provenance, write_libsvm

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

VARIANTS = [variant.value for variant in Variant]


def setup_logging(verbose: bool = False):
    """Set up logging configuration."""
    level = logging.DEBUG if verbose else logging.INFO

    # Create logs directory
    config.ensure_directories()

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(sys.stdout),
            logging.FileHandler(os.path.join(config.logs_dir, "ballstream.log"), encoding="utf-8"),
        ],
        force=True,
    )


class SourceOptions(BaseModel):
    """How data arguments are turned into streams; shared by run and sweep."""

    model_config = ConfigDict(extra="forbid")

    normalize: bool = False
    n: int = Field(10000, ge=1)
    label_column: str = "1"
    categorical: List[str] = Field(default_factory=list)
    schema_file: Optional[str] = None

    def open(self, data: str) -> Tuple[StreamSource, int]:
        """
        Resolve a data argument into a stream source and its declared length.

        Raises:
            SpecError: on a bad synthetic spec or an unreadable file
        """
        if is_synthetic(data):
            source = StreamSource(
                format=StreamFormat.SYNTHETIC,
                generator=parse_data_spec(data),
                n=self.n,
                normalize=self.normalize,
            )
            return source, self.n

        check_readable(data)
        fmt = StreamFormat.CSV if data.lower().endswith(".csv") else StreamFormat.LIBSVM
        label_column: Any = self.label_column
        categories: Dict[str, List[str]] = {}
        if fmt is StreamFormat.CSV:
            if self.schema_file:
                schema = load_schema(self.schema_file)
                label_column, categories = schema.label_column, schema.categorical
            elif self.categorical:
                categories = discover_categories(data, self.categorical)
        source = StreamSource(
            format=fmt,
            path=data,
            label_column=label_column,
            categorical_columns=categories,
            normalize=self.normalize,
        )
        return source, count_records(data, fmt)


class ExperimentSpec(SourceOptions):
    """One prequential run; embedded in every file the run writes."""

    data: str
    variant: Variant = Variant(config.default_variant)
    rate: float = Field(config.default_rate, gt=0, le=1)
    budget: Optional[int] = Field(None, ge=1)
    budget_frac: Optional[float] = Field(None, gt=0, le=1)
    seed: int = config.default_seed
    c_hat: float = Field(config.default_c_hat, gt=0)
    d_hat: float = Field(config.default_d_hat, gt=0)
    binary: bool = False
    out: str = config.out_dir
    dump_model: Optional[str] = None

    def provenance(self) -> Dict[str, Any]:
        """The spec without output locations, so a rerun can go anywhere."""
        return {"command": "run", **self.model_dump(mode="json", exclude={"out", "dump_model"})}

    def budget_spec(self) -> Optional[BudgetSpec]:
        if self.budget is not None and self.budget_frac is not None:
            raise SpecError("--budget and --budget-frac are mutually exclusive")
        if self.budget is not None:
            return BudgetSpec(max_balls=self.budget)
        if self.budget_frac is not None:
            return BudgetSpec(fraction=self.budget_frac)
        return None


class SweepSpec(SourceOptions):
    """A grid of runs: every data source by variant, rate, budget and seed."""

    data: List[str] = Field(min_length=1)
    variants: List[Variant] = Field(default_factory=lambda: list(Variant))
    rates: List[float] = Field(default_factory=lambda: [config.default_rate])
    budgets: List[int] = Field(default_factory=list)
    budget_fracs: List[float] = Field(default_factory=list)
    seeds: List[int] = Field(default_factory=lambda: [config.default_seed])
    shared_seed: bool = True
    c_hat: float = Field(config.default_c_hat, gt=0)
    d_hat: float = Field(config.default_d_hat, gt=0)
    binary: bool = False
    workers: int = Field(1, ge=1)
    out: str = config.out_dir

    def provenance(self) -> Dict[str, Any]:
        return {"command": "sweep", **self.model_dump(mode="json", exclude={"out", "workers"})}

    @field_validator("budget_fracs")
    @classmethod
    def _check_fracs(cls, fracs: List[float]) -> List[float]:
        for frac in fracs:
            if not 0 < frac <= 1:
                raise ValueError(f"budget fraction {frac} is outside (0, 1]")
        return fracs

    def budget_specs(self) -> List[Optional[BudgetSpec]]:
        """Absolute budgets first, then fractional ones; [None] when neither is given."""
        specs: List[Optional[BudgetSpec]] = [BudgetSpec(max_balls=b) for b in self.budgets]
        specs += [BudgetSpec(fraction=f) for f in self.budget_fracs]
        return specs or [None]

    def configs(self) -> List[RunConfig]:
        """The grid, variant-major; without --shared-seed each variant gets its own mask."""
        cfgs = []
        for number, variant in enumerate(self.variants):
            learner = LearnerSpec(variant=variant, c_hat=self.c_hat, d_hat=self.d_hat, binary=self.binary)
            for rate in self.rates:
                for budget in self.budget_specs():
                    for seed in self.seeds:
                        cfgs.append(RunConfig(
                            rate=rate,
                            seed=seed,
                            normalize=self.normalize,
                            learner=learner,
                            budget=budget,
                            mask_stream=0 if self.shared_seed else number + 1,
                        ))
        return cfgs


def execute_run(spec: ExperimentSpec) -> RunReport:
    """Run one experiment and write its result files."""
    source, length = spec.open(spec.data)
    cfg = RunConfig(
        dataset=spec.data,
        rate=spec.rate,
        seed=spec.seed,
        normalize=spec.normalize,
        learner=LearnerSpec(variant=spec.variant, c_hat=spec.c_hat, d_hat=spec.d_hat, binary=spec.binary),
        budget=spec.budget_spec(),
        stream_length=length or None,
    )
    max_balls = cfg.budget.resolve(length) if cfg.budget is not None else None
    learner = build_learner(cfg.learner, cfg.seed, max_balls)

    report = run_prequential(cfg, load_stream(source), learner=learner)

    writer = ResultWriter(spec.out, spec.provenance())
    writer.write_results_csv([report])
    writer.write_results_json([report])
    if spec.dump_model:
        writer.write_model_dump(spec.dump_model, learner.dump_records())
    return report


def execute_sweep(spec: SweepSpec) -> List[RunReport]:
    """Run a grid and write sweep.csv, sweep.json and summary.csv."""
    sources = {data: spec.open(data) for data in spec.data}
    if spec.budget_fracs:
        for data, (_, length) in sources.items():
            if not length:
                raise SpecError(f"--budget-frac needs a known stream length, {data} has none")
    cfgs = spec.configs()

    def _factory(source: StreamSource) -> Callable:
        return lambda: load_stream(source)

    reports: List[RunReport] = []
    for data, (source, length) in sources.items():
        sized = [cfg.model_copy(update={"stream_length": length or None}) for cfg in cfgs]
        reports.extend(sweep(sized, {data: _factory(source)}, workers=spec.workers))

    writer = ResultWriter(spec.out, spec.provenance(), stem="sweep")
    writer.write_results_csv(reports)
    writer.write_results_json(reports)
    writer.write_summary_csv(summarize(reports))
    return reports


def execute_generate(data: str, n: int, out: str) -> int:
    g = parse_data_spec(data)
    spec = {"command": "generate", "data": data, "n": n}
    return write_libsvm(out, generate_stream(g, n), spec)


def _exit_code(error: Exception) -> int:
    if isinstance(error, (SpecError, ValidationError)):
        return EXIT_USAGE
    if isinstance(error, InvalidStateError):
        return EXIT_INTERNAL
    if isinstance(error, (DataError, InvalidInputError)):
        return EXIT_DATA
    return EXIT_INTERNAL


class ExperimentGroup(click.Group):
    """Maps usage, data and internal errors onto exit statuses 1, 2 and 3."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except (BallstreamError, ValidationError) as e:
            code = _exit_code(e)
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"Error: {e}", err=True)
            sys.exit(code)


def _source_kwargs(normalize, n, label_column, categorical, schema) -> Dict[str, Any]:
    return {
        "normalize": normalize,
        "n": n,
        "label_column": label_column,
        "categorical": list(categorical),
        "schema_file": schema,
    }


def source_options(command):
    """Options describing how data arguments become streams."""
    options = [
        click.option("--normalize", is_flag=True, help="Scale every point to unit norm"),
        click.option("--n", "n", type=click.IntRange(min=1), default=10000, show_default=True,
                     help="Length of synthetic streams"),
        click.option("--label-column", default="1", show_default=True,
                     help="CSV label column (header name or 1-based position)"),
        click.option("--categorical", multiple=True,
                     help="CSV column to one-hot encode (repeatable; categories found in a pre-pass)"),
        click.option("--schema", type=click.Path(), help="JSON schema with label column and categories"),
        click.option("--c-hat", type=float, default=config.default_c_hat, show_default=True,
                     help="Space constant for base/base-adj"),
        click.option("--d-hat", type=float, default=config.default_d_hat, show_default=True,
                     help="Dimension estimate for auto/auto-adj"),
        click.option("--binary", is_flag=True, help="Randomized binary mode (base only, labels 0/1)"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@click.group(cls=ExperimentGroup)
@click.version_option(version=__version__)
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging")
def cli(verbose: bool):
    """ballstream - streaming ball-cover classifiers and prequential experiments."""
    setup_logging(verbose)


@cli.command()
@click.option("--data", required=True, help="Data file (.csv or LIBSVM) or synth:<kind>[:key=value,...]")
@click.option("--variant", type=click.Choice(VARIANTS), default=config.default_variant, show_default=True)
@click.option("--rate", type=float, default=config.default_rate, show_default=True,
              help="Probability that an example is used for training")
@click.option("--budget", type=int, help="Maximum number of balls")
@click.option("--budget-frac", type=float, help="Maximum number of balls as a fraction of the stream length")
@click.option("--seed", type=int, default=config.default_seed, show_default=True)
@click.option("--out", type=click.Path(), default=config.out_dir, show_default=True, help="Output directory")
@click.option("--dump-model", type=click.Path(), help="Write the final balls as line-delimited JSON")
@source_options
def run(data, variant, rate, budget, budget_frac, seed, out, dump_model,
        normalize, n, label_column, categorical, schema, c_hat, d_hat, binary):
    """Evaluate one learner prequentially on one stream."""
    spec = ExperimentSpec(
        data=data,
        variant=variant,
        rate=rate,
        budget=budget,
        budget_frac=budget_frac,
        seed=seed,
        c_hat=c_hat,
        d_hat=d_hat,
        binary=binary,
        out=out,
        dump_model=dump_model,
        **_source_kwargs(normalize, n, label_column, categorical, schema),
    )
    report = execute_run(spec)
    click.echo(
        f"{report.variant.value} on {report.dataset}: accuracy {report.final_accuracy:.4f}, "
        f"{report.final_model_size} balls ({report.model_size_fraction:.2%} of {report.steps} examples)"
    )
    click.echo(f"Results written to: {spec.out}")


@cli.command("sweep")
@click.option("--data", multiple=True, required=True, help="Data source (repeatable)")
@click.option("--variant", "variants", multiple=True, type=click.Choice(VARIANTS),
              help="Variant (repeatable; default all four)")
@click.option("--rate", "rates", multiple=True, type=float, help="Sub-sampling rate (repeatable)")
@click.option("--budget", "budgets", multiple=True, type=int, help="Ball budget (repeatable)")
@click.option("--budget-frac", "budget_fracs", multiple=True, type=float,
              help="Ball budget as a fraction of the stream length (repeatable)")
@click.option("--seed", "seeds", multiple=True, type=int, help="Seed (repeatable)")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True,
              help="Runs executed in parallel threads")
@click.option("--shared-seed/--per-variant-seed", default=True, show_default=True,
              help="Share the sub-sampling mask across variants")
@click.option("--out", type=click.Path(), default=config.out_dir, show_default=True, help="Output directory")
@source_options
def sweep_cmd(data, variants, rates, budgets, budget_fracs, seeds, workers, shared_seed, out,
              normalize, n, label_column, categorical, schema, c_hat, d_hat, binary):
    """Run a grid of variants, rates, budgets and seeds over one or more streams."""
    fields: Dict[str, Any] = {
        "data": list(data),
        "budgets": list(budgets),
        "budget_fracs": list(budget_fracs),
        "shared_seed": shared_seed,
        "workers": workers,
        "out": out,
        "c_hat": c_hat,
        "d_hat": d_hat,
        "binary": binary,
        **_source_kwargs(normalize, n, label_column, categorical, schema),
    }
    if variants:
        fields["variants"] = list(variants)
    if rates:
        fields["rates"] = list(rates)
    if seeds:
        fields["seeds"] = list(seeds)
    spec = SweepSpec(**fields)
    reports = execute_sweep(spec)
    click.echo(f"{len(reports)} runs written to: {spec.out}")


@cli.command()
@click.option("--data", required=True, help="synth:<kind>[:key=value,...]")
@click.option("--n", "n", type=click.IntRange(min=1), default=10000, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="LIBSVM file to write")
def generate(data, n, out):
    """Write a synthetic stream as a LIBSVM file."""
    count = execute_generate(data, n, out)
    click.echo(f"Wrote {count} records to {out}")


@cli.command()
@click.argument("path", type=click.Path())
@click.option("--out", type=click.Path(), required=True,
              help="Output directory (or file, for a generated stream)")
@click.option("--dump-model", type=click.Path(), help="Also dump the final balls (run specs only)")
def replay(path, out, dump_model):
    """Re-run the spec embedded in a results file."""
    spec = dict(read_provenance(path))
    command = spec.pop("command", "run")
    logger.info(f"Replaying {command} spec from {path}")
    if command == "run":
        report = execute_run(ExperimentSpec(**spec, out=out, dump_model=dump_model))
        click.echo(f"Replayed run: accuracy {report.final_accuracy:.4f}, {report.final_model_size} balls")
    elif command == "sweep":
        reports = execute_sweep(SweepSpec(**spec, out=out))
        click.echo(f"Replayed sweep: {len(reports)} runs")
    elif command == "generate":
        count = execute_generate(spec["data"], spec["n"], out)
        click.echo(f"Replayed generate: {count} records")
    else:
        raise SpecError(f"unknown command {command!r} in {path}")


def main():
    """Main entry point."""
    cli()


if __name__ == "__main__":
    main()

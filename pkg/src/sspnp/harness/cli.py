"""Command-line entry point: ``sspnp <command> [options]``.

Every command accepts ``--config FILE`` (a ``key = value`` file or a run's
``manifest.json``), the named flags below, and ``--set key=value`` for any
other config key.  Flags override the file.  Noise levels are on the
[0, 1] intensity scale; fractions such as ``35/255`` are accepted.
"""

import functools
import json
import logging
import os
import sys

import click

from ..admm import write_history
from ..estimators import INRDenoiser
from ..exceptions import SSPnPError
from ..inr import load_model, save_model
from ..metrics import quality_report
from ..operators import TASKS
from .config import PRIORS, load_config
from .experiment import ablate, degrade, make_denoiser, make_pipeline, run_experiment
from .images import load_image, save_image


def _config_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="Config file or manifest.json to start from."),
        click.option("--task", type=click.Choice(TASKS)),
        click.option("--input", "input_", help="Clean image (path or builtin:<name>)."),
        click.option("--reference", help="Clean reference for metrics."),
        click.option("--out", help="Output directory."),
        click.option("--prior", type=click.Choice(PRIORS)),
        click.option("--seed", type=int),
        click.option("--train-iters", type=int),
        click.option("--noise-std", help="Training noise level."),
        click.option("--admm-iters", type=int),
        click.option("--sigma-hi"),
        click.option("--sigma-lo"),
        click.option("--mu-base"),
        click.option("--return-z/--return-x", "return_z", default=None,
                     help="Output z^K (default) or x^K."),
        click.option("--resize", help="Resize input to WxH, e.g. 512x384."),
        click.option("--set", "extra", multiple=True, metavar="KEY=VALUE",
                     help="Any other config key; repeatable."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build_config(config_path, input_, extra, **flags):
    overrides = {k: v for k, v in flags.items() if v is not None}
    if input_ is not None:
        overrides["input"] = input_
    for item in extra:
        if "=" not in item:
            raise click.BadParameter(f"expected KEY=VALUE, got {item!r}", param_hint="--set")
        key, value = item.split("=", 1)
        overrides[key.strip().replace("-", "_")] = value.strip()
    return load_config(config_path, **overrides)


def _friendly_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SSPnPError, OSError) as err:
            raise click.ClickException(str(err)) from err
    return wrapper


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug logging.")
def main(verbose):
    """Single-shot plug-and-play image restoration."""
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("degrade")
@_config_options
@_friendly_errors
def degrade_cmd(config_path, input_, extra, **flags):
    """Apply the task's forward operator to a clean image."""
    cfg = _build_config(config_path, input_, extra, **flags)
    if cfg.input is None:
        raise click.UsageError("--input is required")
    y = degrade(load_image(cfg.input, cfg.resize_shape), cfg, cfg.seed)
    save_image(y, os.path.join(cfg.out, "observation.png"))
    path = save_image(y, os.path.join(cfg.out, "observation.npy"))
    click.echo(path)


@main.command("train-denoiser")
@click.option("--observation", required=True, help="Degraded image to train on.")
@_config_options
@_friendly_errors
def train_cmd(observation, config_path, input_, extra, **flags):
    """Step 1: train an INR denoiser on one observation."""
    cfg = _build_config(config_path, input_, extra, **flags)
    if cfg.prior == "tv":
        raise click.UsageError("the tv prior has nothing to train")
    y = load_image(observation)
    os.makedirs(cfg.out, exist_ok=True)
    train_img = cfg.operator().lift(y) if cfg.train_on == "lift" else y
    den = make_denoiser(cfg, loss_log=os.path.join(cfg.out, "loss.csv")).fit(train_img)
    path = os.path.join(cfg.out, "model.npz")
    save_model(den.model_, path)
    click.echo(f"{path}  final loss {den.loss_curve_[-1]:.6g}")


@main.command("solve")
@click.option("--observation", required=True, help="Degraded image to restore.")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              help="Trained model.npz (omit for --prior tv).")
@_config_options
@_friendly_errors
def solve_cmd(observation, model_path, config_path, input_, extra, **flags):
    """Step 2: PnP-ADMM with a frozen denoiser."""
    cfg = _build_config(config_path, input_, extra, **flags)
    y = load_image(observation)
    if cfg.prior == "tv":
        den = make_denoiser(cfg).fit(cfg.operator().lift(y))
    elif model_path is None:
        raise click.UsageError("--model is required for INR priors")
    else:
        den = INRDenoiser.from_model(load_model(model_path))
    reference = load_image(cfg.reference, cfg.resize_shape) if cfg.reference else None
    pnp = make_pipeline(cfg, denoiser=den).use_fitted(den)
    estimate = pnp.predict(y, reference=reference)
    save_image(estimate, os.path.join(cfg.out, "reconstruction.png"))
    save_image(estimate, os.path.join(cfg.out, "reconstruction.npy"))
    write_history(pnp.history_, os.path.join(cfg.out, "history.csv"))
    if reference is not None:
        click.echo(f"psnr {pnp.history_[-1].psnr:.2f} dB  ssim {pnp.history_[-1].ssim:.4f}")
    click.echo(os.path.join(cfg.out, "reconstruction.png"))


@main.command("run")
@click.option("--observation", help="Use this observation instead of degrading --input.")
@_config_options
@_friendly_errors
def run_cmd(observation, config_path, input_, extra, **flags):
    """Degrade, train, solve and evaluate in one go."""
    cfg = _build_config(config_path, input_, extra, observation=observation, **flags)
    record = run_experiment(cfg)
    if record.report is not None:
        click.echo(f"psnr {record.psnr:.2f} dB  ssim {record.ssim:.4f}")
    click.echo(record.artifacts["manifest"])


@main.command("ablate")
@click.option("--tasks", default=",".join(TASKS), show_default=True,
              help="Comma-separated tasks.")
@click.option("--priors", default="phi-inr,siren-inr", show_default=True,
              help="Comma-separated priors.")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Parallel worker threads.")
@_config_options
@_friendly_errors
def ablate_cmd(tasks, priors, workers, config_path, input_, extra, **flags):
    """Compare priors across tasks; writes ablation.csv and ablation.txt."""
    flags.pop("task")
    flags.pop("prior")
    base = _build_config(config_path, input_, extra, **flags)
    configs = [base.replace(task=t.strip(), prior=p.strip())
               for t in tasks.split(",") for p in priors.split(",")]
    table = ablate(configs, out=base.out, max_workers=workers)
    click.echo(table.to_text(), nl=False)


@main.command("metrics")
@click.argument("estimate")
@click.argument("reference")
@click.option("--json", "as_json", is_flag=True, help="Print JSON.")
@_friendly_errors
def metrics_cmd(estimate, reference, as_json):
    """PSNR and SSIM of ESTIMATE against REFERENCE."""
    report = quality_report(load_image(estimate), load_image(reference))
    if as_json:
        click.echo(json.dumps(report.as_dict(), default=float))
    else:
        click.echo(f"psnr {report.psnr_db:.4f} dB  ssim {report.ssim:.6f}")


if __name__ == "__main__":
    sys.exit(main())

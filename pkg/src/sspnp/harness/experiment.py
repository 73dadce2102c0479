"""End-to-end runs: degrade, train the prior, solve, evaluate, write artifacts.

A run directory contains::

    observation.png / observation.npy    degraded input y (npy is exact)
    reconstruction.png / .npy            the estimate
    history.csv                          k, sigma_k, mu_k, psnr, ssim, data_residual
    loss.csv                             training loss per iteration (INR priors)
    model.npz                            trained denoiser weights (INR priors)
    manifest.json                        run record, see below

``manifest.json`` holds ``format``, ``config`` (every setting except the
output directory), ``artifacts`` (paths relative to the run directory),
``metrics``, ``history``, ``digests`` (sha256 of the reconstruction and the
model) and ``timings``.  Only ``timings`` varies between two runs of the
same config; feeding the manifest back to :func:`load_config` reproduces
the run.
"""

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..admm import HISTORY_COLUMNS, write_history
from ..estimators import INRDenoiser, SingleShotPnP, TVDenoiser
from ..exceptions import ConfigError, SSPnPError, StageError
from ..inr import save_model
from ..metrics import quality_report
from ..validation import check_image
from .images import load_image, save_image

logger = logging.getLogger(__name__)

MANIFEST_FORMAT = "sspnp-run-v1"
ABLATION_COLUMNS = ("task", "prior", "psnr", "ssim")


@dataclass
class RunRecord:
    config: object
    history: list
    report: object
    timings: dict
    artifacts: dict
    out_dir: str
    reconstruction: np.ndarray = field(repr=False, default=None)

    @property
    def psnr(self):
        return None if self.report is None else self.report.psnr_db

    @property
    def ssim(self):
        return None if self.report is None else self.report.ssim


class _Stages:
    """Times each stage and tags any failure with the stage name."""

    def __init__(self):
        self.timings = {}

    def run(self, name, fn, *args, **kwargs):
        start = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        except StageError:
            raise
        except (SSPnPError, OSError, ValueError, ArithmeticError) as err:
            raise StageError(name, err) from err
        finally:
            self.timings[name] = time.perf_counter() - start


def degrade(clean, cfg, seed=None):
    """Observation ``A(clean)`` plus optional N(0, measurement_noise^2) noise."""
    clean = check_image(clean, "clean image")
    op = cfg.operator()
    y = op.apply(clean)
    if cfg.measurement_noise > 0:
        seed = cfg.seed if seed is None else seed
        rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
        y = y + rng.normal(0.0, cfg.measurement_noise, size=y.shape)
    logger.info("degrade task=%s operator=%r noise=%g %s -> %s", cfg.task, op,
                cfg.measurement_noise, clean.shape, y.shape)
    return y


def make_denoiser(cfg, loss_log=None):
    """The unfitted prior estimator selected by ``cfg.prior``."""
    if cfg.prior == "tv":
        return TVDenoiser(cfg.tv_weight, cfg.tv_iters)
    act = cfg.activation()
    return INRDenoiser(
        activation=act.kind, a1=act.a1, b1=act.b1, a2=act.a2, b2=act.b2,
        first_omega=act.first_omega, hidden_dim=cfg.hidden_dim, depth=cfg.depth,
        noise_std=cfg.noise_std, n_iter=cfg.train_iters, lr=cfg.lr,
        resample_noise=cfg.resample_noise, random_state=cfg.seed, loss_log=loss_log,
    )


def make_pipeline(cfg, denoiser=None, loss_log=None):
    """A :class:`SingleShotPnP` configured from ``cfg``."""
    return SingleShotPnP(
        operator=cfg.operator(),
        denoiser=denoiser if denoiser is not None else make_denoiser(cfg, loss_log),
        train_on=cfg.train_on, n_iter=cfg.admm_iters, sigma_hi=cfg.sigma_hi,
        sigma_lo=cfg.sigma_lo, mu_base=cfg.mu_base, prox_method=cfg.prox_method,
        cg_tol=cfg.cg_tol, cg_max_iter=cfg.cg_max_iter, init=cfg.init,
        dual_init=cfg.dual_init, return_z=cfg.return_z, random_state=cfg.seed,
    )


def _digest(arr):
    return hashlib.sha256(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).hexdigest()


def _load_inputs(cfg):
    if cfg.input is None and cfg.observation is None:
        raise ConfigError("set either 'input' (clean image) or 'observation'")
    clean = load_image(cfg.input, cfg.resize_shape) if cfg.input is not None else None
    observation = load_image(cfg.observation) if cfg.observation is not None else None
    if cfg.reference is not None:
        reference = load_image(cfg.reference, cfg.resize_shape)
    else:
        reference = clean
    return clean, observation, reference


def _write_outputs(out, cfg, y, estimate, pnp, history, report, timings):
    os.makedirs(out, exist_ok=True)
    artifacts = {
        "observation": "observation.png",
        "observation_array": "observation.npy",
        "reconstruction": "reconstruction.png",
        "reconstruction_array": "reconstruction.npy",
        "history": "history.csv",
    }
    save_image(y, os.path.join(out, artifacts["observation"]))
    save_image(y, os.path.join(out, artifacts["observation_array"]))
    save_image(estimate, os.path.join(out, artifacts["reconstruction"]))
    save_image(estimate, os.path.join(out, artifacts["reconstruction_array"]))
    write_history(history, os.path.join(out, artifacts["history"]))
    digests = {"reconstruction": _digest(estimate)}
    model = getattr(pnp.denoiser_, "model_", None)
    if model is not None:
        artifacts["model"] = "model.npz"
        save_model(model, os.path.join(out, artifacts["model"]))
        digests["model"] = model.checksum()
        if os.path.exists(os.path.join(out, "loss.csv")):
            artifacts["loss"] = "loss.csv"
    config = cfg.as_dict()
    config.pop("out")
    manifest = {
        "format": MANIFEST_FORMAT,
        "config": config,
        "artifacts": artifacts,
        "metrics": None if report is None else report.as_dict(),
        "history": [{c: asdict(rec)[c] for c in HISTORY_COLUMNS} for rec in history],
        "digests": digests,
        "timings": dict(timings),
    }
    artifacts_abs = {k: os.path.join(out, v) for k, v in artifacts.items()}
    artifacts_abs["manifest"] = os.path.join(out, "manifest.json")
    with open(artifacts_abs["manifest"], "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return artifacts_abs


def run_experiment(cfg):
    """Run one configuration end to end and write its run directory.

    Stages are ``load``, ``degrade``, ``train``, ``solve``, ``evaluate`` and
    ``write``; an error in any of them is re-raised as
    :class:`~sspnp.exceptions.StageError` naming the stage.  With
    ``prior = tv`` the training stage only records that nothing was
    learned.
    """
    stages = _Stages()
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    clean, observation, reference = stages.run("load", _load_inputs, cfg)
    if observation is None:
        y = stages.run("degrade", degrade, clean, cfg, cfg.seed)
    else:
        y = observation
    loss_log = os.path.join(out, "loss.csv") if cfg.prior != "tv" else None
    pnp = make_pipeline(cfg, loss_log=loss_log)
    stages.run("train", pnp.fit, y)
    estimate = stages.run("solve", pnp.predict, y, reference)
    report = None
    if reference is not None:
        report = stages.run("evaluate", quality_report, estimate, reference)
    artifacts = stages.run("write", _write_outputs, out, cfg, y, estimate, pnp,
                           pnp.history_, report, stages.timings)
    logger.info("run task=%s prior=%s psnr=%s out=%s", cfg.task, cfg.prior,
                None if report is None else f"{report.psnr_db:.2f}", out)
    return RunRecord(cfg, pnp.history_, report, stages.timings, artifacts, out, estimate)


# -- ablation ---------------------------------------------------------------

_FREE_KEYS = ("task", "prior", "out")


def _check_ablation(configs):
    if len(configs) < 2:
        raise ConfigError("an ablation needs at least two configs")
    base = {k: v for k, v in configs[0].as_dict().items() if k not in _FREE_KEYS}
    for cfg in configs[1:]:
        other = {k: v for k, v in cfg.as_dict().items() if k not in _FREE_KEYS}
        diff = sorted(k for k in base if base[k] != other[k])
        if diff:
            raise ConfigError(f"ablation configs may differ only in task and prior; "
                              f"they also differ in {', '.join(diff)}")
    cells = [(c.task, c.prior) for c in configs]
    if len(set(cells)) != len(cells):
        raise ConfigError("duplicate (task, prior) pair in ablation")
    priors = {}
    for task, prior in cells:
        priors.setdefault(task, set()).add(prior)
    sets = list(priors.values())
    if any(s != sets[0] for s in sets):
        raise ConfigError("inconsistent tasks across configs: every task must be run "
                          "with the same set of priors")
    if len(sets[0]) < 2:
        raise ConfigError("an ablation needs at least two priors")


@dataclass
class AblationTable:
    rows: list

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(ABLATION_COLUMNS)
            for row in self.rows:
                writer.writerow([row[c] for c in ABLATION_COLUMNS])

    def to_text(self):
        cells = [list(ABLATION_COLUMNS)]
        for row in self.rows:
            cells.append([row["task"], row["prior"], _num(row["psnr"], 2), _num(row["ssim"], 4)])
        widths = [max(len(r[i]) for r in cells) for i in range(len(ABLATION_COLUMNS))]
        lines = ["  ".join(c.ljust(w) if i < 2 else c.rjust(w)
                           for i, (c, w) in enumerate(zip(r, widths))).rstrip()
                 for r in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def lookup(self, task, prior):
        for row in self.rows:
            if row["task"] == task and row["prior"] == prior:
                return row
        raise KeyError((task, prior))


def _num(value, digits):
    return "-" if value is None else f"{value:.{digits}f}"


def ablate(configs, out=None, max_workers=1):
    """Run every config and tabulate PSNR/SSIM by task and prior.

    Configs must differ only in ``task`` and ``prior`` and cover a full
    task x prior grid.  With ``out`` set, each run writes to
    ``out/<task>_<prior>`` and the table is saved as ``ablation.csv`` and
    ``ablation.txt`` there.  Runs share no state, so ``max_workers > 1``
    runs them in threads.
    """
    configs = list(configs)
    _check_ablation(configs)
    if out is not None:
        configs = [c.replace(out=os.path.join(out, f"{c.task}_{c.prior}")) for c in configs]
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            records = list(pool.map(run_experiment, configs))
    else:
        records = [run_experiment(c) for c in configs]
    rows = [{"task": r.config.task, "prior": r.config.prior, "psnr": r.psnr, "ssim": r.ssim}
            for r in records]
    rows.sort(key=lambda r: (r["task"], r["prior"]))
    table = AblationTable(rows)
    if out is not None:
        table.to_csv(os.path.join(out, "ablation.csv"))
        with open(os.path.join(out, "ablation.txt"), "w") as fh:
            fh.write(table.to_text())
    return table

"""Run a scenario from a config and assemble its report."""
from __future__ import annotations

import logging
import os
import platform
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from .config import ConfigError, ExperimentConfig, read_config
from .report import ExperimentError, ExperimentReport, evaluate_verdicts, write_report
from .scenarios import REGISTRY, BudgetExceeded, Context

log = logging.getLogger(__name__)


def load_config(source) -> ExperimentConfig:
    return read_config(source, REGISTRY)


def _stamps(started_utc: str, wall: float) -> dict:
    return {"started_utc": started_utc, "wall_seconds": round(wall, 3), "mlab_version": __version__,
            "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "threads": os.environ.get("MLAB_THREADS", "")}


def summarize(scenario: str, tables, params) -> tuple[dict, dict]:
    return REGISTRY[scenario].summarize(tables, params)


def run(config, out_dir=None, write: bool = True) -> ExperimentReport:
    """Execute ``config`` (an ExperimentConfig, dict, path or bundled name).

    The report is written atomically to ``out_dir`` (default: the config's
    output directory) unless ``write`` is false.  Errors inside the
    scenario are re-raised as :class:`ExperimentError` naming the scenario.
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    sc = REGISTRY[cfg.scenario]
    started_utc = datetime.now(timezone.utc).isoformat(timespec="seconds")
    ctx = Context(seed=cfg.seed, max_seconds=cfg.max_seconds)
    t0 = time.monotonic()
    log.info("running %s (scenario %s, seed %d)", cfg.name, cfg.scenario, cfg.seed)
    try:
        tables, notes = sc.compute(cfg.params, ctx)
    except (BudgetExceeded, ConfigError):
        raise
    except ExperimentError as exc:
        raise ExperimentError(f"scenario {cfg.scenario}: {exc}") from exc
    except Exception as exc:
        raise ExperimentError(f"scenario {cfg.scenario} failed: {type(exc).__name__}: {exc}") from exc
    summary, fits = sc.summarize(tables, cfg.params)
    verdicts = evaluate_verdicts(cfg.verdicts, summary)
    report = ExperimentReport(cfg.name, cfg.scenario, cfg.echo(), tables, fits, summary, verdicts,
                              list(notes), _stamps(started_utc, time.monotonic() - t0))
    if write:
        paths = write_report(report, Path(out_dir if out_dir is not None else cfg.output_dir))
        log.info("wrote %s and %s", *paths)
    return report


def recompute_verdicts(report: dict) -> list[dict]:
    """Re-derive the summary and verdicts of a saved report from its tables alone."""
    rep = ExperimentReport.from_dict(report)
    summary, _ = summarize(rep.scenario, rep.tables, rep.config["params"])
    return evaluate_verdicts(rep.config.get("verdicts", []), summary)

"""Python front end for the sihft hardening and fault-injection core."""

import json

from ._core import (
    SihftError,
    assemble,
    cfg,
    disassemble,
    harden,
    normalize,
    render,
    run,
    workload_names,
    workload_source,
)
from ._core import campaign_json


def campaign(source, versions=(), seed=1, per_point=3, limit_mult=10, jobs=1, name=""):
    """Run a seeded campaign and return the report as a dict.

    `source` is assembly text or a shipped workload name. Pass the dict to
    `render_report` for the text or CSV tables.
    """
    return json.loads(campaign_json(source, list(versions), seed, per_point, limit_mult, jobs, name))


def render_report(report, fmt="text"):
    return render(json.dumps(report), fmt)


__all__ = [
    "SihftError",
    "assemble",
    "campaign",
    "campaign_json",
    "cfg",
    "disassemble",
    "harden",
    "normalize",
    "render",
    "render_report",
    "run",
    "workload_names",
    "workload_source",
]

"""Durable campaign files and the seed-data text format.

One campaign lives in one JSON document with a pinned field order, so a
load immediately followed by a save reproduces the file byte for byte.
Saves are atomic (temp file in the same directory, then rename): a crash
mid-write leaves the previous version intact.  The conventional file
extension is ``.beam.json`` and every file carries ``format_version``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Callable

from .campaign import Campaign, CampaignSettings, PendingSuggestion
from .errors import StorageError, ValidationError
from .space import (
    AxisSpec,
    Constraint,
    ConstraintSet,
    Exclusion,
    IntervalBound,
    PairRatio,
    ParameterSpace,
)
from .surrogate import Observation

__all__ = [
    "FORMAT_VERSION",
    "FILE_SUFFIX",
    "dumps_campaign",
    "save_campaign",
    "load_campaign",
    "campaign_to_payload",
    "campaign_from_payload",
    "read_seed_rows",
]

FORMAT_VERSION = 1
FILE_SUFFIX = ".beam.json"


# ----------------------------------------------------------------------
# payload construction (field order here IS the file format)
# ----------------------------------------------------------------------


def _constraint_to_payload(c: Constraint) -> dict:
    if isinstance(c, IntervalBound):
        return {"kind": "interval", "axis": c.axis, "min": c.min, "max": c.max}
    if isinstance(c, Exclusion):
        return {"kind": "exclude", "axis": c.axis, "values": list(c.values)}
    if isinstance(c, PairRatio):
        return {
            "kind": "pair_ratio",
            "numerator": c.numerator,
            "denominator": c.denominator,
            "min_ratio": c.min_ratio,
            "max_ratio": c.max_ratio,
        }
    raise StorageError(f"cannot serialize constraint of type {type(c).__name__}")


def _constraint_from_payload(d: dict) -> Constraint:
    kind = d.get("kind")
    if kind == "interval":
        return IntervalBound(axis=d["axis"], min=d["min"], max=d["max"])
    if kind == "exclude":
        return Exclusion(axis=d["axis"], values=tuple(d["values"]))
    if kind == "pair_ratio":
        return PairRatio(
            numerator=d["numerator"],
            denominator=d["denominator"],
            min_ratio=d["min_ratio"],
            max_ratio=d["max_ratio"],
        )
    raise StorageError(f"unknown constraint kind {kind!r} in campaign file")


def campaign_to_payload(campaign: Campaign) -> dict:
    s = campaign.settings
    return {
        "format_version": FORMAT_VERSION,
        "created_at": campaign.created_at,
        "state_version": campaign.state_version,
        "space": {
            "axes": [
                {"name": a.name, "low": a.low, "high": a.high, "step": a.step}
                for a in campaign.space.axes
            ],
            "fixed_context": dict(campaign.space.fixed_context),
        },
        "constraints": [
            _constraint_to_payload(c) for c in campaign.constraints.constraints
        ],
        "settings": {
            "budget": s.budget,
            "batch_size": s.batch_size,
            "policy": s.policy,
            "k": s.k,
            "gamma": s.gamma,
            "pool_cap": s.pool_cap,
            "rng_seed": s.rng_seed,
        },
        "observations": [
            {
                "index": o.config.index,
                "values": list(o.config.values),
                "outcome": o.outcome,
                "origin": o.origin,
                "recorded_at": o.recorded_at,
            }
            for o in campaign.dataset
        ],
        "pending": [
            {
                "index": p.config.index,
                "values": list(p.config.values),
                "p": p.p,
                "beta": p.beta,
                "alpha": p.alpha,
                "suggested_at": p.suggested_at,
            }
            for p in campaign.pending
        ],
        "events": list(campaign.events),
    }


def campaign_from_payload(
    payload: dict, clock: Callable[[], str] | None = None
) -> Campaign:
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise StorageError(
            f"campaign file has format_version {version!r}; this build reads "
            f"only version {FORMAT_VERSION} and has no migration for it"
        )
    try:
        space = ParameterSpace(
            axes=tuple(
                AxisSpec(a["name"], a["low"], a["high"], a["step"])
                for a in payload["space"]["axes"]
            ),
            fixed_context=dict(payload["space"].get("fixed_context", {})),
        )
        constraints = ConstraintSet(
            tuple(_constraint_from_payload(c) for c in payload["constraints"])
        )
        st = payload["settings"]
        settings = CampaignSettings(
            budget=st["budget"],
            batch_size=st["batch_size"],
            policy=st["policy"],
            k=st["k"],
            gamma=st["gamma"],
            pool_cap=st["pool_cap"],
            rng_seed=st["rng_seed"],
        )
    except KeyError as exc:
        raise StorageError(f"campaign file is missing field {exc}") from exc

    observations = []
    for row in payload.get("observations", ()):
        cfg = space.encode(row["values"])
        if cfg.index != row["index"]:
            raise ValidationError(
                f"observation values {row['values']} encode to index "
                f"{cfg.index}, not the stored index {row['index']}"
            )
        observations.append(
            Observation(cfg, row["outcome"], row["origin"], row.get("recorded_at"))
        )
    pending = []
    for row in payload.get("pending", ()):
        cfg = space.encode(row["values"])
        if cfg.index != row["index"]:
            raise ValidationError(
                f"pending values {row['values']} encode to index "
                f"{cfg.index}, not the stored index {row['index']}"
            )
        pending.append(
            PendingSuggestion(
                cfg, row["p"], row["beta"], row["alpha"], row["suggested_at"]
            )
        )
    return Campaign(
        space,
        constraints,
        settings,
        observations=observations,
        pending=pending,
        events=payload.get("events", ()),
        state_version=payload.get("state_version", 0),
        created_at=payload.get("created_at"),
        clock=clock,
    )


# ----------------------------------------------------------------------
# file I/O
# ----------------------------------------------------------------------


def dumps_campaign(campaign: Campaign) -> str:
    return json.dumps(campaign_to_payload(campaign), indent=2) + "\n"


def save_campaign(campaign: Campaign, path: str | Path) -> None:
    """Write the campaign file atomically: temp file beside it, then rename."""
    path = Path(path)
    text = dumps_campaign(campaign)
    try:
        fd, tmp_name = tempfile.mkstemp(
            prefix=path.name + ".", suffix=".tmp", dir=path.parent or "."
        )
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(text)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp_name, path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise
    except OSError as exc:
        raise StorageError(f"cannot write campaign file {path}: {exc}") from exc


def load_campaign(path: str | Path, clock: Callable[[], str] | None = None) -> Campaign:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot read campaign file {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StorageError(f"campaign file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise StorageError(f"campaign file {path} must hold a JSON object")
    return campaign_from_payload(payload, clock=clock)


# ----------------------------------------------------------------------
# seed-data text format
# ----------------------------------------------------------------------


def read_seed_rows(
    text: str, space: ParameterSpace
) -> list[tuple[list[float], int]]:
    """Parse delimited seed data into (values, outcome) rows.

    Expected shape: a comma-delimited header of every axis name plus an
    ``outcome`` column (any column order, names matched exactly), then one
    row per historical experiment with outcome 0 or 1.
    """
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ValidationError("seed data is empty")
    header = [h.strip() for h in rows[0]]
    expected = set(space.axis_names) | {"outcome"}
    if set(header) != expected or len(header) != len(expected):
        raise ValidationError(
            f"seed data header must name exactly the axes "
            f"{list(space.axis_names)} plus 'outcome'; got {header}"
        )
    col = {name: header.index(name) for name in header}
    parsed: list[tuple[list[float], int]] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(
                f"seed data line {line_no}: expected {len(header)} fields, "
                f"got {len(row)}"
            )
        try:
            values = [float(row[col[name]]) for name in space.axis_names]
            outcome_raw = row[col["outcome"]].strip()
            outcome = int(outcome_raw)
        except ValueError as exc:
            raise ValidationError(f"seed data line {line_no}: {exc}") from exc
        if outcome not in (0, 1):
            raise ValidationError(
                f"seed data line {line_no}: outcome must be 0 or 1, got {outcome_raw}"
            )
        parsed.append((values, outcome))
    return parsed

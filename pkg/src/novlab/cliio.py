"""Config-to-datum assembly and deterministic artifact writers.

All floats are serialized with repr, which round-trips exactly and
makes artifacts byte-stable across reruns on the same platform.
Validity flags are written as 1/0.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .config import ScenarioConfig
from .errors import ConfigError
from .initial import EulerDatum, builtin_datum, pair_datum

__all__ = [
    "datum_from_config",
    "perturbed_datum",
    "write_conserved_csv",
    "write_state_csv",
    "write_euler_csv",
    "write_ratios_csv",
    "write_cancellations_jsonl",
]


def _fmt(x) -> str:
    return repr(float(x))


def datum_from_config(cfg: ScenarioConfig) -> EulerDatum:
    u = builtin_datum(cfg.datum_u_family, cfg.datum_u_params)
    if cfg.datum_v_mode == "same":
        return u
    if cfg.datum_v_mode == "mirrored":
        params = dict(cfg.datum_u_params)
        params["base"] = cfg.datum_u_family
        return builtin_datum("mirrored_of", params)
    v = builtin_datum(cfg.datum_v_family, cfg.datum_v_params)
    return pair_datum(u, v)


def perturbed_datum(base: EulerDatum, cfg: ScenarioConfig) -> EulerDatum:
    """Base datum plus eps times a named bump on the chosen component."""
    if not cfg.perturb_family:
        raise ConfigError("metric mode needs metric.perturb.family")
    bump = builtin_datum(cfg.perturb_family, cfg.perturb_params)
    eps = cfg.perturb_eps
    on_u = cfg.perturb_component in ("u", "both")
    on_v = cfg.perturb_component in ("v", "both")

    def shifted(f, g):
        return lambda x: f(x) + eps * g(x)

    return EulerDatum(
        u0=shifted(base.u0, bump.u0) if on_u else base.u0,
        du0=shifted(base.du0, bump.du0) if on_u else base.du0,
        v0=shifted(base.v0, bump.v0) if on_v else base.v0,
        dv0=shifted(base.dv0, bump.dv0) if on_v else base.dv0,
        kinks=tuple(sorted(set(base.kinks) | set(bump.kinks))),
    )


def _writer(fileobj):
    return csv.writer(fileobj, lineterminator="\n")


def write_conserved_csv(fileobj, traj) -> None:
    w = _writer(fileobj)
    w.writerow(["t", "E_u", "E_v", "G", "H", "y_consistency"])
    for t, c, gap in zip(traj.times, traj.conserved_log, traj.y_checks):
        w.writerow([_fmt(t), _fmt(c.E_u), _fmt(c.E_v), _fmt(c.G), _fmt(c.H),
                    _fmt(gap)])


def write_state_csv(fileobj, state, y) -> None:
    w = _writer(fileobj)
    w.writerow(["xi", "U", "V", "W", "Z", "q", "y"])
    xi = state.grid.nodes
    for k in range(state.grid.n):
        w.writerow([_fmt(xi[k]), _fmt(state.U[k]), _fmt(state.V[k]),
                    _fmt(state.W[k]), _fmt(state.Z[k]), _fmt(state.q[k]),
                    _fmt(y[k])])


def write_euler_csv(fileobj, field) -> None:
    w = _writer(fileobj)
    w.writerow(["x", "u", "v", "ux", "ux_valid", "vx", "vx_valid"])
    for k in range(field.x.size):
        w.writerow([
            _fmt(field.x[k]), _fmt(field.u[k]), _fmt(field.v[k]),
            _fmt(field.ux[k]), int(field.ux_valid[k]),
            _fmt(field.vx[k]), int(field.vx_valid[k]),
        ])


def write_ratios_csv(fileobj, rows) -> None:
    w = _writer(fileobj)
    w.writerow(["t", "d_t_upper", "ratio", "search_mode", "eta_iterations"])
    for r in rows:
        w.writerow([_fmt(r.t), _fmt(r.d_t_upper), _fmt(r.ratio),
                    r.search_mode, int(r.eta_iterations)])


def write_cancellations_jsonl(reports, path) -> None:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, (np.floating, np.integer)):
            return clean(float(x))
        return x

    with open(path, "w", encoding="utf-8") as fh:
        for rep in reports:
            rec = {
                "case_label": rep.case_label,
                "complete": rep.complete,
                "checks": [
                    {
                        "name": c.name,
                        "kind": c.kind,
                        "claimed": clean(c.claimed),
                        "measured": clean(c.measured),
                        "scale": clean(c.scale),
                        "rel_err": clean(c.rel_err),
                    }
                    for c in rep.checks
                ],
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

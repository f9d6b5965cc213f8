"""Plain-text scenario configuration.

Grammar: one `key = value` pair per line, `#` starts a comment, blank
lines ignored.  The first meaningful line must be the schema tag
`schema = novlab-config/1`.  Keys are dotted paths; the datum.* and
metric.perturb.* groups accept arbitrary family parameters, everything
else is a fixed vocabulary.  Files are diffable run records: parsing is
strict and unknown fixed keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ConfigError

SCHEMA_TAG = "novlab-config/1"


@dataclass(frozen=True)
class ScenarioConfig:
    xi_min: float = -20.0
    xi_max: float = 20.0
    n: int = 2048
    datum_u_family: str = "gaussian_bump"
    datum_u_params: dict = field(default_factory=dict)
    # v-profile: "same" copies u, "mirrored" reflects it, "family" reads
    # datum.v.family and its parameters.
    datum_v_mode: str = "same"
    datum_v_family: str = ""
    datum_v_params: dict = field(default_factory=dict)
    t_final: float = 1.0
    dt: float = 1e-3
    record_every: int = 100
    q_lo: float = 0.01
    q_hi: float = 100.0
    slack: float = 1.5
    tol_pi: float = 1e-3
    tol_zero_rel: float = 1e-3
    fit_exponents: bool = True
    side_window: float = 0.4
    min_gap: float = 0.02
    run_cancellations: bool = True
    alpha: float = 0.5
    m_theta: int = 9
    search: str = "eta_zero"
    eta_nodes: int = 17
    descent_iters: int = 200
    perturb_family: str = ""
    perturb_params: dict = field(default_factory=dict)
    perturb_eps: float = 0.0
    perturb_component: str = "u"
    out_dir: str = "out"
    seed: int = 0
    inject: str = "none"


_FLOAT_KEYS = {
    "grid.xi_min": "xi_min",
    "grid.xi_max": "xi_max",
    "time.t_final": "t_final",
    "time.dt": "dt",
    "omega.q_lo": "q_lo",
    "omega.q_hi": "q_hi",
    "omega.slack": "slack",
    "singular.tol_pi": "tol_pi",
    "singular.tol_zero_rel": "tol_zero_rel",
    "singular.side_window": "side_window",
    "singular.min_gap": "min_gap",
    "metric.alpha": "alpha",
    "metric.perturb.eps": "perturb_eps",
}

_INT_KEYS = {
    "grid.n": "n",
    "time.record_every": "record_every",
    "metric.m_theta": "m_theta",
    "metric.eta_nodes": "eta_nodes",
    "metric.iters": "descent_iters",
    "seed": "seed",
}

_BOOL_KEYS = {
    "singular.fit": "fit_exponents",
    "singular.cancellations": "run_cancellations",
}

_STR_KEYS = {
    "datum.u.family": "datum_u_family",
    "datum.v.mode": "datum_v_mode",
    "datum.v.family": "datum_v_family",
    "metric.search": "search",
    "metric.perturb.family": "perturb_family",
    "metric.perturb.component": "perturb_component",
    "output.dir": "out_dir",
    "validate.inject": "inject",
}


def _coerce_number(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}")


def parse_config(text: str) -> ScenarioConfig:
    fields: dict = {}
    u_params: dict = {}
    v_params: dict = {}
    p_params: dict = {}
    seen_schema = False
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not seen_schema:
            if key != "schema" or value != SCHEMA_TAG:
                raise ConfigError(
                    f"line {lineno}: first entry must be 'schema = {SCHEMA_TAG}'")
            seen_schema = True
            continue
        if key == "schema":
            raise ConfigError(f"line {lineno}: duplicate schema line")
        if key in _FLOAT_KEYS:
            fields[_FLOAT_KEYS[key]] = _coerce_number(key, value)
        elif key in _INT_KEYS:
            num = _coerce_number(key, value)
            if num != int(num):
                raise ConfigError(f"{key}: expected an integer, got {value!r}")
            fields[_INT_KEYS[key]] = int(num)
        elif key in _BOOL_KEYS:
            if value not in ("true", "false"):
                raise ConfigError(f"{key}: expected true or false, got {value!r}")
            fields[_BOOL_KEYS[key]] = value == "true"
        elif key in _STR_KEYS:
            fields[_STR_KEYS[key]] = value
        elif key.startswith("datum.u."):
            u_params[key[len("datum.u."):]] = _coerce_number(key, value)
        elif key.startswith("datum.v."):
            v_params[key[len("datum.v."):]] = _coerce_number(key, value)
        elif key.startswith("metric.perturb."):
            p_params[key[len("metric.perturb."):]] = _coerce_number(key, value)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if not seen_schema:
        raise ConfigError(f"missing schema line 'schema = {SCHEMA_TAG}'")
    cfg = ScenarioConfig(**fields, datum_u_params=u_params,
                         datum_v_params=v_params, perturb_params=p_params)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ScenarioConfig) -> None:
    if not cfg.xi_max > cfg.xi_min:
        raise ConfigError("grid.xi_max must exceed grid.xi_min")
    if cfg.n < 3:
        raise ConfigError("grid.n must be at least 3")
    if cfg.dt <= 0:
        raise ConfigError("time.dt must be positive")
    ratio = abs(cfg.t_final) / cfg.dt
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ConfigError("time.t_final must be an integer multiple of time.dt")
    if cfg.record_every < 1:
        raise ConfigError("time.record_every must be >= 1")
    if not 0.0 < cfg.alpha < 1.0:
        raise ConfigError("metric.alpha must lie strictly in (0, 1)")
    if cfg.m_theta < 3:
        raise ConfigError("metric.m_theta must be >= 3")
    if cfg.eta_nodes < 2:
        raise ConfigError("metric.eta_nodes must be >= 2")
    if cfg.datum_v_mode not in ("same", "mirrored", "family"):
        raise ConfigError("datum.v.mode must be same, mirrored, or family")
    if cfg.datum_v_mode == "family" and not cfg.datum_v_family:
        raise ConfigError("datum.v.mode=family requires datum.v.family")
    if cfg.search not in ("eta_zero", "coarse_descent"):
        raise ConfigError("metric.search must be eta_zero or coarse_descent")
    if cfg.perturb_component not in ("u", "v", "both"):
        raise ConfigError("metric.perturb.component must be u, v, or both")
    if cfg.inject not in ("none", "broken_scan"):
        raise ConfigError("validate.inject must be none or broken_scan")


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path!r}: {err}")
    return parse_config(text)


def quick_override(cfg: ScenarioConfig) -> ScenarioConfig:
    """Reduced-resolution variant used by the --quick flag."""
    n = min(cfg.n, 257)
    steps = max(int(round(abs(cfg.t_final) / cfg.dt)), 1)
    quick_steps = min(steps, 50)
    dt = abs(cfg.t_final) / quick_steps if cfg.t_final != 0 else cfg.dt
    return replace(cfg, n=n, dt=dt if dt > 0 else cfg.dt,
                   record_every=max(quick_steps // 5, 1))

"""Run configuration: a flat, sectioned key=value text file.

Temperature-like tolerances are entered in millikelvin (the customary
presentation for quench studies) and converted to kelvin internally; time
quantities are plain seconds.  Every key except the problem selection and
the end time has a default; see ``configs/ni_coil.cfg`` for the documented
schema.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass

from .coil import DEFAULT_RAMP, CoilParams, CoilProblem, LinearTestProblem, RampSchedule
from .parareal import PararealConfig
from .problem import Problem
from .stepper import StepperTolerances

__all__ = ["ConfigError", "RunConfig", "load_run_config", "make_problem", "run_id"]

PROBLEM_NAMES = ("ni_coil", "linear_test")

_COIL_KEYS = (
    "e_c",
    "j_c0",
    "n",
    "t_c",
    "t_op",
    "inductance",
    "r_contact",
    "a_hts",
    "length",
    "heat_capacity",
    "cooling",
    "field_constant",
)

_DEFAULT_FINE = {
    "tol_nr_mk": 0.1,
    "tol_t_mk": 0.1,
    "dt_init": 0.1,
    "dt_min": 1e-9,
    "dt_max": 2.0,
    "nr_max_iters": 50,
}
_DEFAULT_COARSE = {
    "tol_nr_mk": 10.0,
    "tol_t_mk": 20.0,
    "dt_init": 0.5,
    "dt_min": 1e-9,
    "dt_max": 2.0,
    "nr_max_iters": 50,
}

class ConfigError(Exception):
    """The configuration file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class RunConfig:
    """Fully parsed run configuration."""

    problem_name: str
    t_start: float
    t_end: float
    coil_params: CoilParams
    ramp: RampSchedule
    linear_rate: float
    linear_initial: tuple[float, ...]
    parareal: PararealConfig
    n_windows_list: tuple[int, ...] = ()
    fine_tol_mk_list: tuple[float, ...] = ()
    out_dir: str = "out"
    workers: int | None = None


def _float_of(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key '{key}' in [{section}] is not a number: {raw!r}") from exc


def _get_float(values: dict, section: str, key: str, default=None) -> float:
    raw = values.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing required key '{key}' in section [{section}]")
        return float(default)
    return _float_of(section, key, raw)


def _get_int(values: dict, section: str, key: str, default=None) -> int:
    value = _get_float(values, section, key, default)
    if value != int(value):
        raise ConfigError(f"key '{key}' in [{section}] must be an integer")
    return int(value)


def _parse_ramp(raw: str) -> RampSchedule:
    segments = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            t_str, i_str = chunk.split(":")
            segments.append((float(t_str), float(i_str)))
        except ValueError as exc:
            raise ConfigError(f"ramp point {chunk!r} is not 'time_s:current_A'") from exc
    try:
        return RampSchedule(tuple(segments))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_float_list(raw: str) -> tuple[float, ...]:
    items = [chunk.strip() for chunk in raw.split(",") if chunk.strip()]
    try:
        return tuple(float(item) for item in items)
    except ValueError as exc:
        raise ConfigError(f"bad numeric list: {raw!r}") from exc


def _tolerances(values: dict, section: str, defaults: dict) -> StepperTolerances:
    try:
        return StepperTolerances(
            tol_nr=1e-3 * _get_float(values, section, "tol_nr_mk", defaults["tol_nr_mk"]),
            tol_t=1e-3 * _get_float(values, section, "tol_t_mk", defaults["tol_t_mk"]),
            dt_init=_get_float(values, section, "dt_init", defaults["dt_init"]),
            dt_min=_get_float(values, section, "dt_min", defaults["dt_min"]),
            dt_max=_get_float(values, section, "dt_max", defaults["dt_max"]),
            nr_max_iters=_get_int(values, section, "nr_max_iters", defaults["nr_max_iters"]),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid [{section}] tolerances: {exc}") from exc


def load_run_config(path: str) -> RunConfig:
    """Parse and validate a configuration file."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    sections = {name: dict(parser[name]) for name in parser.sections()}
    if "run" not in sections:
        raise ConfigError(f"{path}: missing required section [run]")
    run = sections["run"]

    problem_name = run.get("problem", "").strip()
    if problem_name not in PROBLEM_NAMES:
        raise ConfigError(
            f"unknown problem {problem_name!r}; choose one of {', '.join(PROBLEM_NAMES)}"
        )
    t_start = _get_float(run, "run", "t_start", 0.0)
    t_end = _get_float(run, "run", "t_end")
    if not t_start < t_end:
        raise ConfigError("need t_start < t_end")
    workers = None
    if run.get("workers") is not None:
        workers = _get_int(run, "run", "workers")
        if workers < 1:
            raise ConfigError("workers must be >= 1")
    out_dir = run.get("out_dir", "out").strip()

    coil = sections.get("coil", {})
    unknown = set(coil) - set(_COIL_KEYS)
    if unknown:
        raise ConfigError(f"unknown [coil] keys: {', '.join(sorted(unknown))}")
    coil_kwargs = {key: _get_float(coil, "coil", key) for key in _COIL_KEYS if key in coil}
    try:
        coil_params = CoilParams(**coil_kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid [coil] parameters: {exc}") from exc

    ramp_raw = sections.get("ramp", {}).get("points")
    ramp = _parse_ramp(ramp_raw) if ramp_raw is not None else DEFAULT_RAMP

    lin = sections.get("linear_test", {})
    linear_rate = _get_float(lin, "linear_test", "rate", -1.0)
    linear_initial: tuple[float, ...] = (1.0,)
    if lin.get("initial") is not None:
        linear_initial = _parse_float_list(lin["initial"])
        if not linear_initial:
            raise ConfigError("[linear_test] initial must hold at least one component")

    fine = _tolerances(sections.get("fine", {}), "fine", _DEFAULT_FINE)
    coarse = _tolerances(sections.get("coarse", {}), "coarse", _DEFAULT_COARSE)

    pr = sections.get("parareal", {})
    try:
        parareal = PararealConfig(
            n_windows=_get_int(pr, "parareal", "n_windows", 8),
            tol_pr=1e-3 * _get_float(pr, "parareal", "tol_pr_mk", 10.0),
            fine_tol=fine,
            coarse_tol=coarse,
            k_max=_get_int(pr, "parareal", "k_max", 20),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid [parareal] settings: {exc}") from exc

    study = sections.get("study", {})
    n_windows_list: tuple[int, ...] = ()
    fine_tol_mk_list: tuple[float, ...] = ()
    if study.get("n_windows_list") is not None:
        floats = _parse_float_list(study["n_windows_list"])
        if any(v != int(v) or v < 1 for v in floats):
            raise ConfigError("n_windows_list must hold positive integers")
        n_windows_list = tuple(int(v) for v in floats)
    if study.get("fine_tol_mk_list") is not None:
        fine_tol_mk_list = _parse_float_list(study["fine_tol_mk_list"])
        if any(v <= 0 for v in fine_tol_mk_list):
            raise ConfigError("fine_tol_mk_list entries must be positive")

    return RunConfig(
        problem_name=problem_name,
        t_start=t_start,
        t_end=t_end,
        coil_params=coil_params,
        ramp=ramp,
        linear_rate=linear_rate,
        linear_initial=linear_initial,
        parareal=parareal,
        n_windows_list=n_windows_list,
        fine_tol_mk_list=fine_tol_mk_list,
        out_dir=out_dir,
        workers=workers,
    )


def make_problem(cfg: RunConfig) -> Problem:
    """Instantiate the configured problem."""
    if cfg.problem_name == "ni_coil":
        return CoilProblem(cfg.coil_params, cfg.ramp)
    return LinearTestProblem(cfg.linear_rate, cfg.linear_initial)


def run_id(cfg: RunConfig) -> str:
    """Short content hash of the configuration, used to join output files."""
    parts = [
        cfg.problem_name,
        repr(cfg.t_start),
        repr(cfg.t_end),
        repr(cfg.coil_params),
        repr(cfg.ramp),
        repr(cfg.linear_rate),
        repr(cfg.linear_initial),
        repr(cfg.parareal),
        repr(cfg.n_windows_list),
        repr(cfg.fine_tol_mk_list),
    ]
    digest = hashlib.sha256("|".join(parts).encode()).hexdigest()
    return digest[:12]

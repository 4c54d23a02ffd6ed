"""Run configuration: one INI file describing the physical setup and
every algorithm's knobs.

Any key or section the loader does not know is an error, not a warning;
silently ignored typos in experiment configs are how wrong results get
published.  A missing file path or the name "default" yields the
built-in reference setup.
"""

import configparser
import os
from dataclasses import dataclass, field

from . import physics
from .ga import GaParams
from .nn import TrainConfig
from .optimize import SaParams

ENV_CONFIG = "WCRIS_CONFIG"

_PHYSICS_KEYS = {
    "num_elements",
    "num_modes",
    "spacing",
    "cell_path",
    "left_pad",
    "right_pad",
    "eps_eff",
    "offset",
    "bias_lo",
    "bias_hi",
    "carrier_hz",
    "symbol_power",
    "noise_var",
    "theta_min",
    "theta_max",
    "n_angles",
    "varactor_table",
}
_DATASET_KEYS = {"count", "seed", "sigma_floor", "sigma_boost"}
_TRAINING_KEYS = {
    "l2",
    "lr",
    "plateau_patience",
    "stop_patience",
    "min_improvement",
    "val_fraction",
    "seed",
}
_GA_KEYS = {
    "population",
    "seed",
    "crossover_prob",
    "mutation_prob",
    "allow_self_pairing",
    "epoch_cap",
}
_SA_KEYS = {
    "iterations",
    "step_scale",
    "boltzmann",
    "t_scale",
    "restart_after",
    "sign_mode",
    "accept_db",
    "seed",
}
_PATHS_KEYS = {"dataset", "model", "table", "architecture"}

_SECTIONS = {
    "physics": _PHYSICS_KEYS,
    "dataset": _DATASET_KEYS,
    "training": _TRAINING_KEYS,
    "ga": _GA_KEYS,
    "sa": _SA_KEYS,
    "paths": _PATHS_KEYS,
}


@dataclass
class DatasetConfig:
    count: int = 5000
    seed: int = 0
    sigma_floor: float = 0.008
    sigma_boost: float = 0.8


@dataclass
class RunConfig:
    geom: physics.RisGeometry = field(default_factory=physics.default_geometry)
    cell: physics.UnitCellCircuit = field(default_factory=physics.UnitCellCircuit)
    setup: physics.ChannelSetup = field(default_factory=physics.ChannelSetup)
    offset: float = physics.BIAS_LO_V
    bias_lo: float = physics.BIAS_LO_V
    bias_hi: float = physics.BIAS_HI_V
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    ga: GaParams = field(default_factory=GaParams)
    ga_epoch_cap: int | None = None
    paths: dict = field(default_factory=dict)
    sa: SaParams = field(default_factory=SaParams)
    source: str = "default"


class ConfigError(ValueError):
    pass


def _check_known(cp, path):
    for section in cp.sections():
        known = _SECTIONS.get(section)
        if known is None:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in cp[section]:
            if key not in known:
                raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")


def _get(cp, section, key, conv, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        if conv is bool:
            return cp.getboolean(section, key)
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def load_config(path=None):
    """Parse an INI run configuration; None or "default" gives defaults.

    The varactor table, when named, must exist at load time so a bad
    path fails before hours of work rather than after.
    """
    if path in (None, "", "default"):
        path = os.environ.get(ENV_CONFIG) or None
    if path in (None, "", "default"):
        return RunConfig()

    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cp.read_file(fh, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    _check_known(cp, path)

    base_geom = physics.default_geometry()
    num_modes = _get(cp, "physics", "num_modes", int, base_geom.num_modes)
    geom = physics.RisGeometry(
        num_elements=_get(cp, "physics", "num_elements", int, base_geom.num_elements),
        num_modes=num_modes,
        spacing=_get(cp, "physics", "spacing", float, base_geom.spacing),
        cell_path=_get(cp, "physics", "cell_path", float, base_geom.cell_path),
        left_pad=_get(cp, "physics", "left_pad", float, base_geom.left_pad),
        right_pad=_get(cp, "physics", "right_pad", float, base_geom.right_pad),
        eps_eff=_get(cp, "physics", "eps_eff", float, base_geom.eps_eff),
    )

    curve_path = _get(cp, "physics", "varactor_table", str, "default")
    if curve_path in ("", "default"):
        cell = physics.UnitCellCircuit()
    else:
        if not os.path.exists(curve_path):
            raise ConfigError(f"varactor table not found: {curve_path}")
        cell = physics.UnitCellCircuit(curve=physics.load_varactor_table(curve_path))

    base_setup = physics.ChannelSetup()
    setup = physics.ChannelSetup(
        carrier_hz=_get(cp, "physics", "carrier_hz", float, base_setup.carrier_hz),
        symbol_power=_get(cp, "physics", "symbol_power", float, base_setup.symbol_power),
        noise_var=_get(cp, "physics", "noise_var", float, base_setup.noise_var),
        theta_min=_get(cp, "physics", "theta_min", float, base_setup.theta_min),
        theta_max=_get(cp, "physics", "theta_max", float, base_setup.theta_max),
        n_angles=_get(cp, "physics", "n_angles", int, base_setup.n_angles),
    )

    ds = DatasetConfig(
        count=_get(cp, "dataset", "count", int, 5000),
        seed=_get(cp, "dataset", "seed", int, 0),
        sigma_floor=_get(cp, "dataset", "sigma_floor", float, 0.008),
        sigma_boost=_get(cp, "dataset", "sigma_boost", float, 0.8),
    )

    tr_base = TrainConfig()
    training = TrainConfig(
        l2=_get(cp, "training", "l2", float, tr_base.l2),
        lr=_get(cp, "training", "lr", float, tr_base.lr),
        plateau_patience=_get(cp, "training", "plateau_patience", int, tr_base.plateau_patience),
        stop_patience=_get(cp, "training", "stop_patience", int, tr_base.stop_patience),
        min_improvement=_get(cp, "training", "min_improvement", float, tr_base.min_improvement),
        val_fraction=_get(cp, "training", "val_fraction", float, tr_base.val_fraction),
        seed=_get(cp, "training", "seed", int, tr_base.seed),
    )

    try:
        ga = GaParams(
            population=_get(cp, "ga", "population", int, 8),
            seed=_get(cp, "ga", "seed", int, 0),
            crossover_prob=_get(cp, "ga", "crossover_prob", float, 1.0),
            mutation_prob=_get(cp, "ga", "mutation_prob", float, 1.0),
            allow_self_pairing=_get(cp, "ga", "allow_self_pairing", bool, True),
        )
        sa_base = SaParams()
        sa = SaParams(
            iterations=_get(cp, "sa", "iterations", int, sa_base.iterations),
            step_scale=_get(cp, "sa", "step_scale", float, sa_base.step_scale),
            boltzmann=_get(cp, "sa", "boltzmann", float, sa_base.boltzmann),
            t_scale=_get(cp, "sa", "t_scale", float, sa_base.t_scale),
            restart_after=_get(cp, "sa", "restart_after", int, sa_base.restart_after),
            sign_mode=_get(cp, "sa", "sign_mode", str, sa_base.sign_mode),
            accept_db=_get(cp, "sa", "accept_db", bool, sa_base.accept_db),
            seed=_get(cp, "sa", "seed", int, sa_base.seed),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    paths = {k: cp.get("paths", k) for k in cp["paths"]} if cp.has_section("paths") else {}

    return RunConfig(
        geom=geom,
        cell=cell,
        setup=setup,
        offset=_get(cp, "physics", "offset", float, physics.BIAS_LO_V),
        bias_lo=_get(cp, "physics", "bias_lo", float, physics.BIAS_LO_V),
        bias_hi=_get(cp, "physics", "bias_hi", float, physics.BIAS_HI_V),
        dataset=ds,
        training=training,
        ga=ga,
        ga_epoch_cap=_get(cp, "ga", "epoch_cap", int, None),
        paths=paths,
        sa=sa,
        source=path,
    )

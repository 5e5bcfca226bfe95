"""Scenario configuration, association rules and the UL power-control law.

Units: distances in km, densities per km^2, powers in linear mW once a
config is built (dBm inputs are converted on construction).  The UE base
power ``p0_dbm_hz`` is a spectral density and is multiplied by the
bandwidth exactly once, in ``NetworkConfig.p0_mw``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import AssociationError, ConfigError, DomainError


class Tier(enum.Enum):
    MACRO = "macro"
    FEMTO = "femto"

    @property
    def other(self) -> "Tier":
        return Tier.FEMTO if self is Tier.MACRO else Tier.MACRO

    @classmethod
    def parse(cls, value) -> "Tier":
        if isinstance(value, Tier):
            return value
        key = str(value).strip().lower()
        for t in cls:
            if key in (t.value, t.value[0]):
                return t
        raise DomainError(f"unknown tier {value!r}")


class AssociationMode(enum.Enum):
    DUDE = "dude"
    NO_DUDE = "no-dude"

    @classmethod
    def parse(cls, value) -> "AssociationMode":
        if isinstance(value, AssociationMode):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"dude": cls.DUDE, "decoupled": cls.DUDE, "no-dude": cls.NO_DUDE,
                   "nodude": cls.NO_DUDE, "coupled": cls.NO_DUDE}
        if key not in aliases:
            raise DomainError(f"unknown association mode {value!r} (use 'dude' or 'no-dude')")
        return aliases[key]


class AssociationCase(enum.IntEnum):
    """Where the typical UE attaches in DL and UL."""

    MACRO_BOTH = 0         # Case1: macro in DL and UL
    MACRO_DL_FEMTO_UL = 1  # Case2: decoupled, macro DL / femto UL
    FEMTO_BOTH = 2         # Case3: femto in DL and UL


# Integer code used by the vectorised classifier for the combination
# (DL femto, UL macro).  It can only occur when B_F/B_M < P_F/P_M.
FEMTO_DL_MACRO_UL = 3


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class TierConfig:
    """One BS tier: density (per km^2), DL power (dBm), antennas, UL bias, path-loss exponent."""

    density: float
    power_dbm: float
    antennas: int
    bias: float = 1.0
    alpha: float = 4.0

    def __post_init__(self):
        if not (self.density > 0 and math.isfinite(self.density)):
            raise ConfigError(f"tier density must be positive, got {self.density}")
        if int(self.antennas) != self.antennas or self.antennas < 1:
            raise ConfigError(f"antenna count must be a positive integer, got {self.antennas}")
        object.__setattr__(self, "antennas", int(self.antennas))
        if not (self.bias > 0 and math.isfinite(self.bias)):
            raise ConfigError(f"bias must be positive, got {self.bias}")
        if not (self.alpha > 2 and math.isfinite(self.alpha)):
            raise ConfigError(f"path-loss exponent must exceed 2, got {self.alpha}")
        if not math.isfinite(self.power_dbm):
            raise ConfigError("tier power must be finite")

    @property
    def power_mw(self) -> float:
        return float(dbm_to_mw(self.power_dbm))


@dataclass(frozen=True)
class NetworkConfig:
    """A full two-tier scenario.

    ``eta`` is the fractional power-control exponent, ``bandwidth`` is W in
    Hz and ``mode`` selects decoupled (DUDe) or coupled (No-DUDe) access.
    """

    macro: TierConfig
    femto: TierConfig
    ue_density: float = 3000.0
    p0_dbm_hz: float = -100.0
    eta: float = 0.0
    bandwidth: float = 10e6
    mode: AssociationMode = AssociationMode.DUDE

    def __post_init__(self):
        object.__setattr__(self, "mode", AssociationMode.parse(self.mode))
        if not (0.0 <= self.eta <= 1.0):
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if not (self.ue_density > 0 and math.isfinite(self.ue_density)):
            raise ConfigError(f"UE density must be positive, got {self.ue_density}")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.macro.power_dbm < self.femto.power_dbm:
            raise ConfigError("macro power must be at least the femto power")

    def tier(self, t) -> TierConfig:
        return self.macro if Tier.parse(t) is Tier.MACRO else self.femto

    @property
    def p0_mw(self) -> float:
        """UE base transmit power over the whole band (mW)."""
        return float(dbm_to_mw(self.p0_dbm_hz)) * self.bandwidth

    @property
    def bias_db(self) -> float:
        """B = B_F / B_M in dB."""
        return 10.0 * math.log10(self.femto.bias / self.macro.bias)

    def effective_bias(self, t) -> float:
        """UL bias actually used by the association rule.

        No-DUDe replaces B_K by P_K so that both links follow the
        max-DL-power rule.
        """
        tc = self.tier(t)
        return tc.power_mw if self.mode is AssociationMode.NO_DUDE else tc.bias

    def with_bias_db(self, bias_db: float) -> "NetworkConfig":
        return replace(self, macro=replace(self.macro, bias=1.0),
                       femto=replace(self.femto, bias=float(db_to_linear(bias_db))))

    def with_tiers(self, **kw) -> "NetworkConfig":
        """Update tier fields with ``macro_<field>`` / ``femto_<field>`` keywords."""
        m, f = {}, {}
        for k, v in kw.items():
            prefix, _, name = k.partition("_")
            {"macro": m, "femto": f}[prefix][name] = v
        return replace(self, macro=replace(self.macro, **m), femto=replace(self.femto, **f))

    @property
    def equal_alpha(self) -> bool:
        return self.macro.alpha == self.femto.alpha


@dataclass(frozen=True)
class AssociationLaw:
    """Resolved association weights and the dimensionless constants.

    ``standard_branch`` is True when B_F/B_M >= P_F/P_M, which makes the
    decoupled case (macro DL, femto UL) the only possible mixed case.
    ``upsilon`` is the femto/macro weight ratio used for the macro tier
    association probability, ``upsilon_1``, ``upsilon_1p`` and
    ``upsilon_2p`` are the three constants of the case probabilities, and
    ``zeta[tier]`` is the UL weight ratio other/serving.
    """

    dl_weight: dict
    ul_weight: dict
    alpha: dict
    standard_branch: bool
    upsilon: float
    upsilon_1: float
    upsilon_1p: float
    upsilon_2p: float
    zeta: dict = field(default_factory=dict)

    def classify(self, x_m, x_f):
        return classify(x_m, x_f, self)


def resolve_law(cfg: NetworkConfig) -> AssociationLaw:
    """Weights, branch and constants of the association rule."""
    tiers = (Tier.MACRO, Tier.FEMTO)
    dl = {t: cfg.tier(t).power_mw * cfg.tier(t).antennas for t in tiers}
    ul = {t: cfg.tier(t).antennas * cfg.effective_bias(t) for t in tiers}
    b_m, b_f = cfg.effective_bias(Tier.MACRO), cfg.effective_bias(Tier.FEMTO)
    p_m, p_f = cfg.macro.power_mw, cfg.femto.power_mw
    n_m, n_f = cfg.macro.antennas, cfg.femto.antennas
    # B_F/B_M >= P_F/P_M, compared as a ratio (bias-scale invariant).  The
    # No-DUDe case sits exactly on the boundary; treat ratios equal to
    # within rounding as the standard branch.
    lhs, rhs = b_f / b_m, p_f / p_m
    standard = lhs >= rhs * (1.0 - 1e-12)
    if cfg.mode is AssociationMode.NO_DUDE:
        standard = True
    ul_ratio = (b_f * n_f) / (b_m * n_m)
    dl_ratio = (p_f * n_f) / (p_m * n_m)
    if standard:
        ups1, ups1p, ups2p = ul_ratio, 1.0 / ul_ratio, 1.0 / dl_ratio
    else:
        ups1, ups1p, ups2p = dl_ratio, 1.0 / dl_ratio, 1.0 / ul_ratio
    zeta = {Tier.MACRO: ul[Tier.FEMTO] / ul[Tier.MACRO], Tier.FEMTO: ul[Tier.MACRO] / ul[Tier.FEMTO]}
    return AssociationLaw(
        dl_weight=dl,
        ul_weight=ul,
        alpha={Tier.MACRO: cfg.macro.alpha, Tier.FEMTO: cfg.femto.alpha},
        standard_branch=bool(standard),
        upsilon=ups1,
        upsilon_1=ups1,
        upsilon_1p=ups1p,
        upsilon_2p=ups2p,
        zeta=zeta,
    )


def classify_codes(x_m, x_f, law: AssociationLaw):
    """Vectorised association: integer codes 0/1/2 (cases) or 3.

    Code 3 is the (DL femto, UL macro) combination.  Ties go to the macro tier.
    """
    x_m = np.asarray(x_m, dtype=float)
    x_f = np.asarray(x_f, dtype=float)
    if np.any(x_m <= 0) or np.any(x_f <= 0):
        raise DomainError("distances must be positive")
    am, af = law.alpha[Tier.MACRO], law.alpha[Tier.FEMTO]
    # Compare in log domain: w_M x_M^-a_M >= w_F x_F^-a_F.
    lm, lf = np.log(x_m), np.log(x_f)
    dl_macro = (math.log(law.dl_weight[Tier.MACRO]) - am * lm) >= (math.log(law.dl_weight[Tier.FEMTO]) - af * lf)
    ul_macro = (math.log(law.ul_weight[Tier.MACRO]) - am * lm) >= (math.log(law.ul_weight[Tier.FEMTO]) - af * lf)
    code = np.where(dl_macro, np.where(ul_macro, 0, 1), np.where(ul_macro, FEMTO_DL_MACRO_UL, 2))
    return code


def classify(x_m: float, x_f: float, law: AssociationLaw) -> AssociationCase:
    """Association case of a UE at distances (x_m, x_f) from the nearest BSs."""
    code = int(classify_codes(x_m, x_f, law))
    if code == FEMTO_DL_MACRO_UL:
        raise AssociationError(
            f"UE at x_M={x_m}, x_F={x_f} is femto in DL but macro in UL; "
            "this needs B_F/B_M < P_F/P_M and has no case label"
        )
    return AssociationCase(code)


def ul_tx_power(x, alpha: float, eta: float, p0: float):
    """Fractional power control: P_0 * x^(eta*alpha)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("distance must be positive")
    out = p0 * x ** (eta * alpha)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Flat "key = value" configuration files
# ---------------------------------------------------------------------------

CONFIG_KEYS = {
    "lambda_m": float, "lambda_f": float, "lambda_u": float,
    "p_m_dbm": float, "p_f_dbm": float, "p0_dbm_hz": float,
    "n_m": int, "n_f": int, "bias_db": float, "eta": float,
    "alpha_m": float, "alpha_f": float, "w_hz": float, "mode": str,
}
REQUIRED_KEYS = ("lambda_m", "lambda_f", "n_m", "n_f", "alpha_m", "alpha_f")
CONFIG_DEFAULTS = {
    "lambda_u": 3000.0, "p_m_dbm": 43.0, "p_f_dbm": 20.0, "p0_dbm_hz": -100.0,
    "bias_db": 0.0, "eta": 0.0, "w_hz": 10e6, "mode": "dude",
}


def _convert(key, raw, lineno):
    kind = CONFIG_KEYS[key]
    try:
        if kind is int:
            v = float(raw)
            if not v.is_integer():
                raise ValueError
            return int(v)
        if kind is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}", lineno) from None


def config_from_mapping(values: dict) -> NetworkConfig:
    v = dict(CONFIG_DEFAULTS)
    v.update(values)
    missing = [k for k in REQUIRED_KEYS if k not in v]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    macro = TierConfig(v["lambda_m"], v["p_m_dbm"], v["n_m"], 1.0, v["alpha_m"])
    femto = TierConfig(v["lambda_f"], v["p_f_dbm"], v["n_f"], float(db_to_linear(v["bias_db"])), v["alpha_f"])
    return NetworkConfig(macro, femto, v["lambda_u"], v["p0_dbm_hz"], v["eta"], v["w_hz"], v["mode"])


def parse_config_text(text: str) -> NetworkConfig:
    """Parse the flat config format.

    One ``key = value`` per line; ``#`` starts a comment; blank lines are
    ignored.  Errors carry the offending line number.
    """
    values, where = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        key = key.lower()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {where[key]})", lineno)
        if not raw:
            raise ConfigError(f"{key}: empty value", lineno)
        values[key] = _convert(key, raw, lineno)
        where[key] = lineno
    try:
        return config_from_mapping(values)
    except (ConfigError, DomainError) as exc:
        # Point at the line of the first key the message mentions, if any.
        msg = str(exc)
        line = next((where[k] for k in where if k in msg), None)
        if isinstance(exc, ConfigError) and exc.line is None and line is not None:
            raise ConfigError(msg, line) from None
        raise ConfigError(msg) from None


def load_config(path) -> NetworkConfig:
    return parse_config_text(Path(path).read_text())


def format_config(cfg: NetworkConfig) -> str:
    """Inverse of ``parse_config_text`` (round-trips exactly)."""
    rows = [
        ("lambda_m", cfg.macro.density), ("lambda_f", cfg.femto.density), ("lambda_u", cfg.ue_density),
        ("p_m_dbm", cfg.macro.power_dbm), ("p_f_dbm", cfg.femto.power_dbm), ("p0_dbm_hz", cfg.p0_dbm_hz),
        ("n_m", cfg.macro.antennas), ("n_f", cfg.femto.antennas), ("bias_db", cfg.bias_db),
        ("eta", cfg.eta), ("alpha_m", cfg.macro.alpha), ("alpha_f", cfg.femto.alpha),
        ("w_hz", cfg.bandwidth), ("mode", cfg.mode.value),
    ]
    return "".join(f"{k} = {v!r}\n" if not isinstance(v, str) else f"{k} = {v}\n" for k, v in rows)

"""Exact physics of a wave-controlled reconfigurable intelligent surface.

The surface is a line of M varactor-loaded cells.  Instead of M bias
wires, a single biasing transmission line runs behind the array carrying
a superposition of N standing waves; a rectifier at each cell converts
the local waveform peak into that cell's DC varactor bias.  The bias
sets the varactor capacitance, the capacitance sets the cell's
reflection coefficient at the carrier frequency, and the reflection
profile across the array shapes the far-field pattern.

Everything in this module is deterministic and side-effect free; the
only numerical search (peak of the temporal superposition) lives in the
kernel backends selected by ``_peaks``.
"""

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._peaks import peak_amplitudes

SPEED_OF_LIGHT = 299792458.0

# Free-space wave impedance seen by a unit cell, ohms.
Z_FREE_SPACE = 376.730

# Varactor operating range; biases outside it have no defined capacitance.
BIAS_LO_V = 4.0
BIAS_HI_V = 15.0

# Linear received-power floor applied before any dB conversion.
POWER_FLOOR = 1e-12


class BiasRangeError(ValueError):
    """A bias profile left the admissible varactor voltage range."""


# ---------------------------------------------------------------------------
# geometry and biasing standing waves
# ---------------------------------------------------------------------------

# Reference layout: the line continues past the last element by half a
# cell, a 50 mm feed section (mapped to the array axis through the
# meander ratio), and a 100-cell termination run.
_REF_SPACING = 0.02
_REF_CELL_PATH = 0.13142
_REF_RIGHT_PAD = (
    0.5 * _REF_SPACING + 0.05 * (_REF_SPACING / _REF_CELL_PATH) + 100.0 * _REF_SPACING
)


@dataclass(frozen=True)
class RisGeometry:
    """Array layout and biasing-line parameters.

    The biasing line meanders, so one array cell of width ``spacing``
    holds ``cell_path`` metres of line; the ratio slows the guided wave
    by ``cell_path / spacing`` on top of the dielectric slowing.
    Standing-wave modes are pinned to zero at both ends of the line,
    which extends ``left_pad`` before element 0 and ``right_pad`` after
    element M-1 (both measured along the array axis).
    """

    num_elements: int = 100
    num_modes: int = 25
    spacing: float = _REF_SPACING        # element pitch, m
    cell_path: float = _REF_CELL_PATH    # meandered line length per cell, m
    left_pad: float = 0.5 * _REF_SPACING  # line run before element 0, m
    right_pad: float = _REF_RIGHT_PAD    # line run past element M-1, m
    eps_eff: float = 8.66                # effective permittivity of the line

    def __post_init__(self):
        if self.num_elements < 1 or self.num_modes < 1:
            raise ValueError("element and mode counts must be at least 1")
        for name in ("spacing", "cell_path", "left_pad", "right_pad"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.eps_eff < 1.0:
            raise ValueError("eps_eff below 1 is unphysical")

    @property
    def slowing_factor(self):
        """Effective refractive index of the meandered biasing line."""
        return (self.cell_path / self.spacing) * math.sqrt(self.eps_eff)

    @property
    def phase_velocity(self):
        return SPEED_OF_LIGHT / self.slowing_factor

    @property
    def span(self):
        """Distance from the first to the last element, m."""
        return (self.num_elements - 1) * self.spacing

    @property
    def total_length(self):
        """Full biasing-line extent along the array axis, m."""
        return self.left_pad + self.span + self.right_pad

    @property
    def mode_freq_hz(self):
        """Fundamental standing-wave frequency f_b = v_ph / (2 L_tot)."""
        return self.phase_velocity / (2.0 * self.total_length)

    @property
    def omega_b(self):
        return 2.0 * math.pi * self.mode_freq_hz

    def element_positions(self):
        """x coordinate of each element, x = 0 at element 0."""
        return np.arange(self.num_elements) * self.spacing


def default_geometry(num_modes=25):
    """The 100-element reference layout with a configurable mode count."""
    return RisGeometry(num_modes=num_modes)


@dataclass
class BswConfig:
    """One biasing-standing-wave excitation: DC offset plus N mode amplitudes."""

    offset: float
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.atleast_1d(np.asarray(self.amps, dtype=np.float64))
        if self.amps.ndim != 1 or self.amps.size < 1:
            raise ValueError("amps must be a non-empty 1-D array")
        if not np.isfinite(self.amps).all() or not math.isfinite(self.offset):
            raise ValueError("non-finite BSW parameters")


@lru_cache(maxsize=8)
def _spatial_modes(geom):
    """sin(n pi (x_m + left_pad) / L_tot) for every element m and mode n."""
    x = geom.element_positions() + geom.left_pad
    n = np.arange(1, geom.num_modes + 1)
    return np.sin(np.pi * np.outer(x, n) / geom.total_length)


def _check_modes(geom, bsw):
    if bsw.amps.size != geom.num_modes:
        raise ValueError(
            f"BSW carries {bsw.amps.size} modes, geometry expects {geom.num_modes}"
        )


def bsw_voltage(geom, bsw, x, t):
    """Instantaneous line voltage at position x (m) and time t (s).

    x runs from 0 (element 0) to geom.span (last element); positions on
    the pads are part of the line but outside the sampled aperture, so
    they are rejected here.
    """
    _check_modes(geom, bsw)
    if not 0.0 <= x <= geom.span:
        raise ValueError(f"x = {x} outside the aperture [0, {geom.span}]")
    n = np.arange(1, geom.num_modes + 1)
    spatial = np.sin(n * np.pi * (x + geom.left_pad) / geom.total_length)
    temporal = np.sin(n * geom.omega_b * t)
    return bsw.offset + float(np.dot(bsw.amps, spatial * temporal))


def bias_profile(geom, bsw):
    """DC bias of every element after peak rectification, volts.

    The rectifier tracks the positive peak of the local temporal
    superposition over one fundamental period, so the result is always
    >= the DC offset (the superposition vanishes at t = 0).
    """
    _check_modes(geom, bsw)
    amps = _spatial_modes(geom) * bsw.amps[None, :]
    return bsw.offset + peak_amplitudes(amps)


def rectified_bias(geom, bsw, element):
    """DC bias of a single element, volts."""
    _check_modes(geom, bsw)
    if not 0 <= element < geom.num_elements:
        raise ValueError(f"element {element} out of range")
    amps = _spatial_modes(geom)[element : element + 1] * bsw.amps[None, :]
    return float(bsw.offset + peak_amplitudes(amps)[0])


def check_bias_bounds(profile, lo=BIAS_LO_V, hi=BIAS_HI_V):
    """True when every bias in the profile lies inside [lo, hi]."""
    profile = np.asarray(profile)
    return bool(np.all(profile >= lo) and np.all(profile <= hi))


def fine_bias_profile(geom, bsw, refine=10):
    """Rectified bias on a refine*M grid over the aperture, volts.

    Diagnostic: the bound check normally samples element locations only;
    this resolves the standing-wave pattern between elements as well.
    """
    _check_modes(geom, bsw)
    x = np.linspace(0.0, geom.span, refine * geom.num_elements) + geom.left_pad
    n = np.arange(1, geom.num_modes + 1)
    modes = np.sin(np.pi * np.outer(x, n) / geom.total_length)
    return bsw.offset + peak_amplitudes(modes * bsw.amps[None, :])


# ---------------------------------------------------------------------------
# varactor curve and unit-cell circuit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VaractorCurve:
    """Measured (or fitted) varactor capacitance and resistance vs bias."""

    volts: tuple
    cap_farad: tuple
    res_ohm: tuple

    def __post_init__(self):
        v = np.asarray(self.volts, dtype=float)
        c = np.asarray(self.cap_farad, dtype=float)
        r = np.asarray(self.res_ohm, dtype=float)
        if not (v.size == c.size == r.size) or v.size < 2:
            raise ValueError("curve needs at least two aligned samples")
        if np.any(np.diff(v) <= 0):
            raise ValueError("bias points must be strictly increasing")
        if np.any(np.diff(c) >= 0) or np.any(c <= 0):
            raise ValueError("capacitance must be positive and strictly decreasing")
        if np.any(r <= 0):
            raise ValueError("resistance must be positive")

    @property
    def v_min(self):
        return self.volts[0]

    @property
    def v_max(self):
        return self.volts[-1]

    def capacitance(self, volts):
        """Junction capacitance at the given bias(es), farads."""
        return _eval_curve(self, volts, 0)

    def resistance(self, volts):
        """Series resistance at the given bias(es), ohms."""
        return _eval_curve(self, volts, 1)


@lru_cache(maxsize=16)
def _curve_interpolators(curve):
    # Monotone cubic: never overshoots, so a decreasing table stays decreasing.
    cap = PchipInterpolator(curve.volts, curve.cap_farad, extrapolate=False)
    res = PchipInterpolator(curve.volts, curve.res_ohm, extrapolate=False)
    return cap, res


def _eval_curve(curve, volts, which):
    out = _curve_interpolators(curve)[which](volts)
    if np.any(np.isnan(out)):
        raise ValueError(
            f"bias outside the curve domain [{curve.v_min}, {curve.v_max}] V"
        )
    return out


# Junction-law fit used when no measured table is supplied:
#   C(V) = CJ0 / (1 + V/PHI)^GAMMA
# anchored at C(4 V) = 0.88 pF and C(15 V) = 0.16 pF so the cell sweeps
# through both of its resonances over the usable bias range.
_VJ_PHI = 15.0
_VJ_GAMMA = math.log(0.88 / 0.16) / math.log((1 + 15.0 / _VJ_PHI) / (1 + 4.0 / _VJ_PHI))
_VJ_CJ0 = 0.88e-12 * (1 + 4.0 / _VJ_PHI) ** _VJ_GAMMA


def default_varactor_curve(n_points=23):
    """Fitted SMV1231-style curve sampled over the full bias range."""
    v = np.linspace(BIAS_LO_V, BIAS_HI_V, n_points)
    cap = _VJ_CJ0 / (1.0 + v / _VJ_PHI) ** _VJ_GAMMA
    res = 0.25 + 0.35 * ((BIAS_HI_V - v) / (BIAS_HI_V - BIAS_LO_V)) ** 1.5
    return VaractorCurve(tuple(v), tuple(cap), tuple(res))


def load_varactor_table(path):
    """Read a 3-column text table: bias V, capacitance pF, resistance ohm.

    Blank lines and lines starting with # are skipped.
    """
    volts, cap, res = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            try:
                v, c_pf, r = (float(p) for p in parts)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric entry") from exc
            volts.append(v)
            cap.append(c_pf * 1e-12)
            res.append(r)
    if len(volts) < 2:
        raise ValueError(f"{path}: varactor table needs at least two rows")
    return VaractorCurve(tuple(volts), tuple(cap), tuple(res))


def save_varactor_table(curve, path):
    """Write a curve in the 3-column text format understood by the loader."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# bias_V  capacitance_pF  resistance_ohm\n")
        for v, c, r in zip(curve.volts, curve.cap_farad, curve.res_ohm):
            fh.write(f"{float(v)!r} {float(c) * 1e12!r} {float(r)!r}\n")


@dataclass(frozen=True)
class UnitCellCircuit:
    """Lumped model of one reflecting cell.

    A series patch branch (r/l/c_patch) carries the varactor, itself a
    series RLC through its package inductance, in parallel with the
    patch capacitance; the whole branch sees the grounded substrate as
    a shunt inductance.
    """

    r_patch: float = 0.1671        # ohm
    c_patch: float = 0.97821e-12   # F
    l_patch: float = 1.9177e-9     # H
    l_shunt: float = 1.5959e-9     # H, grounded substrate
    l_pkg: float = 2.34e-9         # H, varactor package
    curve: VaractorCurve = field(default_factory=default_varactor_curve)


def _parallel(a, b):
    return a * b / (a + b)


def ris_impedance(cell, omega, volts):
    """Cell input impedance at angular frequency omega for the given bias."""
    volts = np.asarray(volts, dtype=float)
    c_v = cell.curve.capacitance(volts)
    r_v = cell.curve.resistance(volts)
    jw = 1j * omega
    z_var = r_v + jw * cell.l_pkg + 1.0 / (jw * c_v)
    z_inner = _parallel(z_var, 1.0 / (jw * cell.c_patch))
    z_branch = cell.r_patch + jw * cell.l_patch + z_inner
    return _parallel(z_branch, jw * cell.l_shunt)


def gamma_from_impedance(z):
    """Reflection coefficient of an impedance against free space."""
    return (np.asarray(z, dtype=complex) - Z_FREE_SPACE) / (
        np.asarray(z, dtype=complex) + Z_FREE_SPACE
    )


def reflection_coefficient(cell, omega, volts):
    """Cell reflection coefficient against the free-space impedance."""
    return gamma_from_impedance(ris_impedance(cell, omega, volts))


# ---------------------------------------------------------------------------
# far field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelSetup:
    """Carrier, link budget, and the sampled angle grid."""

    carrier_hz: float = 2.45e9
    symbol_power: float = 1.0
    noise_var: float = 1.0
    theta_min: float = -60.0   # degrees
    theta_max: float = 60.0
    n_angles: int = 81

    def __post_init__(self):
        if self.n_angles < 2:
            raise ValueError("angle grid needs at least 2 points")
        if not self.theta_min < self.theta_max:
            raise ValueError("empty angle range")
        if self.symbol_power <= 0 or self.noise_var <= 0:
            raise ValueError("powers must be positive")

    @property
    def angles(self):
        return np.linspace(self.theta_min, self.theta_max, self.n_angles)


def steering_vector(theta_deg, n_elements, spacing, carrier_hz):
    """Far-field phase progression across the array toward theta."""
    kappa = (
        2.0
        * math.pi
        * spacing
        * carrier_hz
        / SPEED_OF_LIGHT
        * math.sin(math.radians(theta_deg))
    )
    return np.exp(-1j * kappa * np.arange(n_elements))


@lru_cache(maxsize=8)
def _steering_matrix(setup, n_elements, spacing):
    """Stacked steering vectors for the whole angle grid, (n_angles, M)."""
    kappa = (
        2.0
        * np.pi
        * spacing
        * setup.carrier_hz
        / SPEED_OF_LIGHT
        * np.sin(np.radians(setup.angles))
    )
    return np.exp(-1j * np.outer(kappa, np.arange(n_elements)))


def received_power_linear(gamma, theta_deg, setup, spacing):
    """Floored linear SNR toward one direction for a reflection profile.

    The base station illuminates the surface uniformly, so the received
    amplitude is the steering-weighted sum of the per-cell reflections.
    """
    gamma = np.asarray(gamma)
    h = steering_vector(theta_deg, gamma.size, spacing, setup.carrier_hz)
    amp = np.dot(h, gamma)
    p = setup.symbol_power * (amp.real**2 + amp.imag**2) / setup.noise_var
    return max(float(p), POWER_FLOOR)


def received_power_db(gamma, theta_deg, setup, spacing):
    return 10.0 * math.log10(received_power_linear(gamma, theta_deg, setup, spacing))


def pattern_for_profile(geom, cell, profile, setup):
    """Received power in dB over the angle grid for a known bias profile."""
    gamma = reflection_coefficient(cell, 2.0 * math.pi * setup.carrier_hz, profile)
    amp = _steering_matrix(setup, geom.num_elements, geom.spacing) @ gamma
    p = setup.symbol_power * (amp.real**2 + amp.imag**2) / setup.noise_var
    return 10.0 * np.log10(np.maximum(p, POWER_FLOOR))


def radiation_pattern(geom, cell, bsw, setup, bias_lo=BIAS_LO_V, bias_hi=BIAS_HI_V):
    """Received power in dB over the angle grid for one BSW excitation.

    Raises BiasRangeError when the rectified profile leaves [bias_lo,
    bias_hi]; callers treat that as a rejected configuration, not a bug.
    """
    profile = bias_profile(geom, bsw)
    if not check_bias_bounds(profile, bias_lo, bias_hi):
        raise BiasRangeError(
            f"bias profile spans [{profile.min():.4f}, {profile.max():.4f}] V, "
            f"outside [{bias_lo}, {bias_hi}] V"
        )
    return pattern_for_profile(geom, cell, profile, setup)


def slnr_db(beam_powers, null_powers, noise_var):
    """Signal-to-leakage-and-noise ratio in dB.

    beam_powers and null_powers are linear received powers (not dB); the
    weakest intended beam is measured against the strongest leaked null
    plus noise.  With no nulls the denominator is the noise power alone.
    """
    beam_powers = np.atleast_1d(np.asarray(beam_powers, dtype=float))
    if beam_powers.size == 0:
        raise ValueError("at least one beam power required")
    null_powers = np.atleast_1d(np.asarray(null_powers, dtype=float)) if null_powers is not None else np.empty(0)
    worst_leak = float(null_powers.max()) if null_powers.size else 0.0
    return 10.0 * math.log10(float(beam_powers.min()) / (worst_leak + noise_var))


def fingerprint(geom, cell, setup):
    """Short stable digest of everything the radiation pattern depends on."""
    parts = [repr(geom), repr(cell), repr(setup)]
    return hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()[:16]

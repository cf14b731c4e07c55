"""Two-wavelength melt-pool pyrometry."""

import json as _json

from . import _core
from ._core import (
    ArgumentError,
    ConfigError,
    DomainError,
    Error,
    FormatError,
    IoError,
    ParseError,
    RegistrationError,
    correct_step_reading,
    intensity_ratio_uncertainty,
    one_way_anova,
    register_pair,
    relative_difference,
    segment,
    ssim,
    step_response_fraction,
)

__all__ = [
    "ArgumentError",
    "ConfigError",
    "DomainError",
    "Error",
    "FormatError",
    "IoError",
    "ParseError",
    "RegistrationError",
    "calibrate",
    "correct_step_reading",
    "default_config",
    "intensity_ratio_uncertainty",
    "observe_frame",
    "one_way_anova",
    "process_stream",
    "ratio_from_temperature",
    "read_stream",
    "register_pair",
    "relative_difference",
    "render_frame",
    "render_script",
    "segment",
    "singular_ratio",
    "ssim",
    "step_response_fraction",
    "temperature_from_ratio",
    "temperature_uncertainty",
    "uncertainty_curve",
    "validate_thermocouples",
]


def _text(doc):
    if doc is None:
        return ""
    if isinstance(doc, str):
        return doc
    return _json.dumps(doc)


def default_config():
    """Pipeline configuration defaults as a dict."""
    return _core.default_config()


def temperature_from_ratio(i12, optics=None):
    """Temperature in kelvin for the intensity ratio i12 = I550 / I620."""
    return _core.temperature_from_ratio(i12, _text(optics))


def ratio_from_temperature(t_k, optics=None):
    return _core.ratio_from_temperature(t_k, _text(optics))


def singular_ratio(optics=None):
    return _core.singular_ratio(_text(optics))


def temperature_uncertainty(i12, u_a12, u_i12, optics=None, u_transform=0.0):
    return _core.temperature_uncertainty(i12, u_a12, u_i12, _text(optics), u_transform)


def uncertainty_curve(lo=0.5, hi=2.0, points=151, u_a12=0.0163, u_i12=0.0003, optics=None):
    return _core.uncertainty_curve(lo, hi, points, u_a12, u_i12, _text(optics))


def calibrate(measurements):
    """measurements: iterable of (location, a12) pairs."""
    return _core.calibrate([(str(loc), float(a)) for loc, a in measurements])


def validate_thermocouples(rows, signed_values=False, table_decimals=None):
    """rows: iterable of (label, case, t_thermocouple_C, t_stwip_C)."""
    return _core.validate_thermocouples(
        [(str(l), str(c), float(tc), float(ts)) for l, c, tc, ts in rows], signed_values, table_decimals
    )


def render_frame(scene=None, frame_index=0):
    """Renders one synthetic frame; returns (uint16 array, saturated)."""
    return _core.render_frame(_text(scene or {}), frame_index)


def render_script(script, path):
    """Writes a synthetic layer script as a 12-bit stream; returns the frame count."""
    return _core.render_script(_text(script), str(path))


def read_stream(path, start=0, count=None):
    """Returns (frames[n, h, w] uint16, header dict)."""
    if count is None:
        return _core.read_stream(str(path), start)
    return _core.read_stream(str(path), start, count)


def observe_frame(pixels, config=None, full_path=False, bit_depth=12, frame_index=0, timestamp_ms=0.0):
    return _core.observe_frame(pixels, _text(config), full_path, bit_depth, frame_index, timestamp_ms)


def process_stream(path, config=None, full_path=False, start_ms=None, end_ms=None, workers=-1):
    return _core.process_stream(str(path), _text(config), full_path, start_ms, end_ms, workers)

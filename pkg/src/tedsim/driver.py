"""Output stage between controller and module: DAC, H-bridge, supply rail.

The requested current magnitude is quantized to the DAC grid spanning
[0, i_max] and the sign selects the H-bridge polarity.  Before the
drive is applied the terminal voltage I R + alpha (T_e - T_a) is
checked against the supply rail; if it would exceed the rail the
magnitude is reduced to the largest value the rail can push, which is
an analog limit, so the realized current leaves the DAC grid.  The
check never increases the current magnitude and never flips polarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from .ted import TedParams


class Polarity(IntEnum):
    FORWARD = 0   # positive current, cooling the skin face
    REVERSE = 1


@dataclass(frozen=True)
class DriverParams:
    dac_bits: int = 8
    i_max_a: float = 0.6
    supply_v: float = 3.7


@dataclass(frozen=True)
class DriveOutput:
    current_a: float
    code: int
    polarity: Polarity
    compliance_limited: bool = False


def dac_step_a(params: DriverParams) -> float:
    """Current per DAC code; full scale sits exactly at i_max."""
    return params.i_max_a / ((1 << params.dac_bits) - 1)


def quantize(params: DriverParams, current_a: float) -> DriveOutput:
    """Map a requested current onto the DAC grid, round half up.

    Magnitudes beyond i_max clamp to full scale.  The quantization
    error never exceeds half a step.
    """
    full_scale = (1 << params.dac_bits) - 1
    step = dac_step_a(params)
    magnitude = min(abs(current_a), params.i_max_a)
    code = min(int(math.floor(magnitude / step + 0.5)), full_scale)
    polarity = Polarity.REVERSE if current_a < 0.0 else Polarity.FORWARD
    sign = -1.0 if polarity == Polarity.REVERSE else 1.0
    return DriveOutput(current_a=sign * code * step, code=code,
                       polarity=polarity)


def compliance_check(params: DriverParams, ted: TedParams,
                     drive: DriveOutput, t_abs_k: float,
                     t_emit_k: float) -> DriveOutput:
    """Limit the drive so |I R + alpha dT| stays within the supply rail.

    Returns the drive unchanged when it already complies.  Otherwise
    the magnitude is cut to the rail-limited value in the requested
    direction.  When no current of that sign and no greater magnitude
    can satisfy the rail (back-EMF above the supply, far outside the
    sane envelope) the bridge goes high-Z: zero current.
    """
    back_emf = ted.seebeck_v_per_k * (t_emit_k - t_abs_k)
    if abs(drive.current_a * ted.resistance_ohm + back_emf) \
            <= params.supply_v:
        return drive
    if drive.current_a >= 0.0:
        hi = (params.supply_v - back_emf) / ted.resistance_ohm
        limited = hi if 0.0 <= hi <= drive.current_a else 0.0
    else:
        lo = (-params.supply_v - back_emf) / ted.resistance_ohm
        limited = lo if drive.current_a <= lo <= 0.0 else 0.0
    return DriveOutput(current_a=limited, code=drive.code,
                       polarity=drive.polarity, compliance_limited=True)

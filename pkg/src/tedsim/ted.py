"""Thermoelectric module physics and the lumped thermal plant around it.

Heat pumped at the skin-side (absorbed) face of a Peltier module driven
with current I:

    Q1 = -(R/2) I^2 + alpha T_a I + (T_a - T_e) / theta_m      [W]

where alpha is the device Seebeck coefficient [V/K], R the electrical
resistance [ohm], theta_m the internal thermal resistance [K/W], and
T_a, T_e the absolute temperatures [K] of the absorbed and emitted
faces.  Q1 > 0 means heat is being drawn out of the skin (cooling);
with the default polarity that takes I > 0, and heating the skin takes
I < 0.

Electrical power drawn by the module and heat ejected at the emitted
face:

    P   = I^2 R + alpha (T_e - T_a) I
    Q_e = Q1 + P

The module sits in a three-node thermal RC network:

    C_abs  dT_a/dt  = -Q1 + (T_skin - T_a) / R_contact
    C_emit dT_e/dt  = +Q_e + (T_ambient - T_e) / R_sink
    C_skin dT_s/dt  = (T_core - T_skin) / R_body + (T_a - T_skin) / R_contact

T_core and T_ambient are fixed boundary temperatures.  States are kept
in kelvin; only user-facing layers speak degrees Celsius.  Integration
is fixed-step classical Runge-Kutta (RK4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

KELVIN_OFFSET = 273.15

# Node temperatures outside this envelope mean the model is being used
# far outside its fitted regime and the run is aborted.
SANITY_MIN_K = 250.0
SANITY_MAX_K = 400.0


def c_to_k(t_c: float) -> float:
    return t_c + KELVIN_OFFSET


def k_to_c(t_k: float) -> float:
    return t_k - KELVIN_OFFSET


class ThermalRunaway(RuntimeError):
    """A plant node left the physically sane temperature envelope."""


@dataclass(frozen=True)
class TedParams:
    """Electro-thermal constants of the thermoelectric module."""

    seebeck_v_per_k: float = 0.028
    resistance_ohm: float = 5.8
    theta_m_k_per_w: float = 12.0


@dataclass(frozen=True)
class NetworkParams:
    """Lumped RC network coupling the module to skin and ambient."""

    c_abs_j_per_k: float
    c_emit_j_per_k: float
    c_skin_j_per_k: float
    r_contact_k_per_w: float
    r_body_k_per_w: float
    r_sink_k_per_w: float
    t_core_k: float
    t_ambient_k: float


@dataclass(frozen=True)
class PlantState:
    t_abs_k: float
    t_emit_k: float
    t_skin_k: float
    sim_time_s: float = 0.0


def heat_absorbed(ted: TedParams, t_abs_k: float, t_emit_k: float,
                  current_a: float) -> float:
    """Heat drawn from the skin-side face [W], positive = cooling skin."""
    return (-0.5 * ted.resistance_ohm * current_a * current_a
            + ted.seebeck_v_per_k * t_abs_k * current_a
            + (t_abs_k - t_emit_k) / ted.theta_m_k_per_w)


def electrical_power(ted: TedParams, t_abs_k: float, t_emit_k: float,
                     current_a: float) -> float:
    """Electrical power drawn by the module [W].

    Joule heating plus work done against the Seebeck voltage.  Negative
    only when the module runs as a generator off a thermal gradient.
    """
    return (current_a * current_a * ted.resistance_ohm
            + ted.seebeck_v_per_k * (t_emit_k - t_abs_k) * current_a)


def heat_emitted(ted: TedParams, t_abs_k: float, t_emit_k: float,
                 current_a: float) -> float:
    """Heat ejected at the emitted face [W]; energy balance Q_e = Q1 + P."""
    return (heat_absorbed(ted, t_abs_k, t_emit_k, current_a)
            + electrical_power(ted, t_abs_k, t_emit_k, current_a))


def terminal_voltage(ted: TedParams, t_abs_k: float, t_emit_k: float,
                     current_a: float) -> float:
    """Module terminal voltage I R + alpha (T_e - T_a) [V]."""
    return (current_a * ted.resistance_ohm
            + ted.seebeck_v_per_k * (t_emit_k - t_abs_k))


def max_cooling_current(ted: TedParams, t_abs_k: float,
                        i_max_a: float) -> float:
    """Current that maximizes Q1, clamped to [0, i_max].

    Q1 is concave in I with vertex at I* = alpha T_a / R; beyond the
    vertex extra current only adds Joule heat.
    """
    vertex = ted.seebeck_v_per_k * t_abs_k / ted.resistance_ohm
    return min(vertex, i_max_a)


def max_cooling_heat(ted: TedParams, t_abs_k: float, t_emit_k: float,
                     i_max_a: float) -> float:
    """Largest achievable Q1 [W] at this operating point within i_max."""
    return heat_absorbed(ted, t_abs_k, t_emit_k,
                         max_cooling_current(ted, t_abs_k, i_max_a))


def plant_derivs(ted: TedParams, net: NetworkParams,
                 t_abs_k: float, t_emit_k: float, t_skin_k: float,
                 current_a: float) -> tuple[float, float, float]:
    """Right-hand side of the three node ODEs [K/s]."""
    q1 = heat_absorbed(ted, t_abs_k, t_emit_k, current_a)
    qe = q1 + electrical_power(ted, t_abs_k, t_emit_k, current_a)
    d_abs = (-q1 + (t_skin_k - t_abs_k) / net.r_contact_k_per_w) \
        / net.c_abs_j_per_k
    d_emit = (qe + (net.t_ambient_k - t_emit_k) / net.r_sink_k_per_w) \
        / net.c_emit_j_per_k
    d_skin = ((net.t_core_k - t_skin_k) / net.r_body_k_per_w
              + (t_abs_k - t_skin_k) / net.r_contact_k_per_w) \
        / net.c_skin_j_per_k
    return d_abs, d_emit, d_skin


def plant_step(state: PlantState, current_a: float, dt_s: float,
               ted: TedParams, net: NetworkParams) -> PlantState:
    """Advance the plant one RK4 step of dt_s at constant drive current.

    dt_s must be positive and at most 0.01 s; larger steps are outside
    the regime where RK4 error stays negligible for these time
    constants.
    """
    if not 0.0 < dt_s <= 0.01:
        raise ValueError(f"dt_s out of range (0, 0.01]: {dt_s}")

    ta, te, ts = state.t_abs_k, state.t_emit_k, state.t_skin_k
    k1 = plant_derivs(ted, net, ta, te, ts, current_a)
    k2 = plant_derivs(ted, net,
                      ta + 0.5 * dt_s * k1[0],
                      te + 0.5 * dt_s * k1[1],
                      ts + 0.5 * dt_s * k1[2], current_a)
    k3 = plant_derivs(ted, net,
                      ta + 0.5 * dt_s * k2[0],
                      te + 0.5 * dt_s * k2[1],
                      ts + 0.5 * dt_s * k2[2], current_a)
    k4 = plant_derivs(ted, net,
                      ta + dt_s * k3[0],
                      te + dt_s * k3[1],
                      ts + dt_s * k3[2], current_a)
    sixth = dt_s / 6.0
    new = PlantState(
        t_abs_k=ta + sixth * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        t_emit_k=te + sixth * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        t_skin_k=ts + sixth * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        sim_time_s=state.sim_time_s + dt_s,
    )
    for t in (new.t_abs_k, new.t_emit_k, new.t_skin_k):
        if not SANITY_MIN_K <= t <= SANITY_MAX_K or math.isnan(t):
            raise ThermalRunaway(
                f"node temperature {t:.2f} K outside "
                f"[{SANITY_MIN_K}, {SANITY_MAX_K}] K at "
                f"t={new.sim_time_s:.3f} s")
    return new


def resting_core_temp_k(ted: TedParams, r_contact: float, r_body: float,
                        r_sink: float, t_skin_k: float,
                        t_ambient_k: float) -> float:
    """Boundary core temperature that puts the unpowered skin node at
    t_skin_k in equilibrium.

    At I = 0 the module is a plain conductor, so one heat flow q runs
    core -> skin -> absorbed face -> emitted face -> ambient through
    R_body, R_contact, theta_m, R_sink in series.
    """
    q = (t_skin_k - t_ambient_k) / (r_contact + ted.theta_m_k_per_w + r_sink)
    return t_skin_k + r_body * q


def resting_state(ted: TedParams, net: NetworkParams) -> PlantState:
    """Open-circuit equilibrium of the plant for the given boundaries."""
    # Series chain from skin to ambient fixes the resting heat flow.
    r_chain = (net.r_contact_k_per_w + ted.theta_m_k_per_w
               + net.r_sink_k_per_w)
    # Solve the skin node balance for T_skin, then walk the chain.
    # (T_core - T_s)/R_body = (T_s - T_amb)/r_chain
    ts = ((net.t_core_k / net.r_body_k_per_w
           + net.t_ambient_k / r_chain)
          / (1.0 / net.r_body_k_per_w + 1.0 / r_chain))
    q = (ts - net.t_ambient_k) / r_chain
    return PlantState(
        t_abs_k=ts - net.r_contact_k_per_w * q,
        t_emit_k=net.t_ambient_k + net.r_sink_k_per_w * q,
        t_skin_k=ts,
        sim_time_s=0.0,
    )


def with_time(state: PlantState, sim_time_s: float) -> PlantState:
    """Copy of state with sim_time_s pinned to an exactly computed value.

    Long runs recompute time from an integer step count instead of
    accumulating float dt, which would drift.
    """
    return replace(state, sim_time_s=sim_time_s)

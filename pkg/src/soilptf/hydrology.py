"""Soil water retention curves and derived quantities.

Retention model: theta(h) = theta_r + (theta_s - theta_r) * \
(1 + (alpha*h)^n)^(-m) with m = 1 - 1/n, h the tension head in cm,
alpha in 1/cm. Water contents are volumetric fractions. Texture summary
statistics follow the geometric-mean particle diameter formulation with
representative diameters clay 0.001 mm, silt 0.026 mm, sand 1.025 mm.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np
from scipy import special

# Tension unit conversion: 1 kPa of suction is 10.197 cm of water head.
KPA_TO_CM = 10.197

# Pressure ladder (kPa) of the point prediction targets.
TENSION_LADDER_KPA = (10, 30, 50, 100, 300, 500, 1000, 1500)

# Representative particle diameters (mm).
CLAY_DIAMETER_MM = 0.001
SILT_DIAMETER_MM = 0.026
SAND_DIAMETER_MM = 1.025


class HydrologyError(ValueError):
    pass


class VgFitError(HydrologyError):
    pass


@dataclass(frozen=True)
class VgParameters:
    """van Genuchten retention parameters.

    theta_r, theta_s: residual and saturated water content [-];
    alpha: inverse air-entry scale [1/cm]; n: shape parameter [-].
    """

    theta_r: float
    theta_s: float
    alpha: float
    n: float
    fit_rmse: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta_r < self.theta_s <= 1.0:
            raise HydrologyError(
                f"need 0 <= theta_r < theta_s <= 1, got {self.theta_r}, {self.theta_s}"
            )
        if self.alpha <= 0:
            raise HydrologyError(f"alpha must be positive, got {self.alpha}")
        if self.n <= 1:
            raise HydrologyError(f"n must exceed 1, got {self.n}")

    @property
    def m(self) -> float:
        return 1.0 - 1.0 / self.n


@dataclass(frozen=True)
class RetentionPoint:
    """One measured retention point: tension head [cm], water content [-]."""

    tension: float
    theta: float

    def __post_init__(self):
        if self.tension < 0:
            raise HydrologyError(f"tension must be >= 0 cm, got {self.tension}")
        if not 0.0 <= self.theta <= 1.0:
            raise HydrologyError(f"theta must lie in [0, 1], got {self.theta}")


def vg_theta(params: VgParameters, h):
    """Water content at tension head h (cm); h may be a scalar or array."""
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0):
        raise HydrologyError("tension head must be >= 0")
    u = np.power(params.alpha * h_arr, params.n)
    theta = params.theta_r + (params.theta_s - params.theta_r) * np.power(1.0 + u, -params.m)
    if np.isscalar(h) or h_arr.ndim == 0:
        return float(theta)
    return theta


def inflection_point(params: VgParameters, on_log_h: bool = False) -> tuple[float, float]:
    """Tension head and water content at the curve's inflection.

    Default: inflection of theta versus h, at (alpha*h)^n = m. With
    on_log_h=True: inflection of theta versus ln h, at (alpha*h)^n = 1/m.
    """
    m = params.m
    u = 1.0 / m if on_log_h else m
    h_i = u ** (1.0 / params.n) / params.alpha
    theta_i = params.theta_r + (params.theta_s - params.theta_r) * (1.0 + u) ** (-m)
    return h_i, theta_i


def derived_water_contents(
    params: VgParameters,
    tensions_kpa=TENSION_LADDER_KPA,
    inflection_on_log_h: bool = False,
) -> dict[str, float]:
    """Point targets from a retention curve: saturation, inflection and
    the water contents at the tension ladder (kPa)."""
    out = {"theta_s": vg_theta(params, 0.0)}
    out["theta_i"] = inflection_point(params, on_log_h=inflection_on_log_h)[1]
    for kpa in tensions_kpa:
        out[f"theta_{int(kpa)}"] = vg_theta(params, kpa * KPA_TO_CM)
    return out


# ----------------------------------------------------------------------
# curve fitting
# ----------------------------------------------------------------------

_MAX_ITER = 500


def _sigmoid(t):
    # two-branch form avoids exp overflow for large |t|
    return special.expit(t)


def _logit(q):
    q = min(max(q, 1e-9), 1.0 - 1e-9)
    return math.log(q / (1.0 - q))


def _unpack(u):
    """Transformed vector -> (theta_r, theta_s, alpha, n).

    u = (logit(theta_r/theta_s), logit(theta_s), log alpha, log(n-1)),
    which enforces 0 < theta_r < theta_s < 1, alpha > 0, n > 1.
    """
    ratio = float(_sigmoid(u[0]))
    theta_s = float(_sigmoid(u[1]))
    return ratio * theta_s, theta_s, math.exp(u[2]), 1.0 + math.exp(u[3])


def _pack(theta_r, theta_s, alpha, n):
    theta_s = min(max(theta_s, 1e-6), 1.0 - 1e-6)
    ratio = theta_r / theta_s if theta_s > 0 else 0.0
    return np.array([_logit(ratio), _logit(theta_s), math.log(alpha), math.log(n - 1.0)])


def _curve_residuals(u, h, theta_obs):
    theta_r, theta_s, alpha, n = _unpack(u)
    m = 1.0 - 1.0 / n
    # extreme trial parameters overflow (alpha*h)^n; inf collapses to
    # theta_r under the outer power, which is the correct dry limit
    with np.errstate(over="ignore"):
        pred = theta_r + (theta_s - theta_r) * np.power(1.0 + np.power(alpha * h, n), -m)
    return theta_obs - pred


def _fit_from_start(u0, h, theta_obs):
    """Damped Gauss-Newton minimization of the squared residual sum.

    Returns (u, sse, converged). The damping factor grows until a step
    reduces the cost and shrinks after each accepted step.
    """
    u = u0.copy()
    r = _curve_residuals(u, h, theta_obs)
    cost = float(r @ r)
    lam = 1e-3
    for _ in range(_MAX_ITER):
        J = np.empty((len(h), 4))
        step = 1e-6
        for j in range(4):
            up = u.copy()
            up[j] += step
            um = u.copy()
            um[j] -= step
            J[:, j] = (_curve_residuals(up, h, theta_obs) - _curve_residuals(um, h, theta_obs)) / (2 * step)
        # residual = obs - model, so the Gauss-Newton step solves (J'J + lam D) d = -J'r
        g = J.T @ r
        JtJ = J.T @ J
        scale = np.diag(JtJ).copy()
        scale[scale <= 0] = 1.0
        accepted = False
        for _try in range(40):
            try:
                d = np.linalg.solve(JtJ + lam * np.diag(scale), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            r_new = _curve_residuals(u + d, h, theta_obs)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                improvement = cost - cost_new
                u = u + d
                r = r_new
                cost = cost_new
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if improvement <= 1e-16 * (1.0 + cost) or float(np.abs(d).max()) < 1e-10:
                    return u, cost, True
                break
            lam *= 10.0
        if not accepted:
            return u, cost, True  # damping exhausted: stationary point
    return u, cost, False


def fit_vg(points) -> VgParameters:
    """Least-squares van Genuchten fit to measured retention points.

    Requires at least 5 points whose positive tensions span a factor of
    10 or more. Runs a damped Gauss-Newton minimization in transformed
    parameters from 5 deterministic starts (alpha in {0.005, 0.05} x
    n in {1.2, 2.0}, plus a fully data-driven start) and returns the best
    converged optimum with its fit RMSE.
    """
    pts = [p if isinstance(p, RetentionPoint) else RetentionPoint(*p) for p in points]
    if len(pts) < 5:
        raise VgFitError(f"need at least 5 retention points, got {len(pts)}")
    h = np.array([p.tension for p in pts], dtype=float)
    theta_obs = np.array([p.theta for p in pts], dtype=float)
    positive = h[h > 0]
    if positive.size == 0 or positive.max() / positive.min() < 10.0:
        raise VgFitError("retention points must span at least a decade of tension")

    theta_max = float(theta_obs.max())
    theta_min = float(theta_obs.min())
    theta_s0 = min(max(theta_max, 0.05), 0.99)
    ratio0 = min(max(theta_min / theta_s0 if theta_s0 > 0 else 0.1, 0.02), 0.9)
    starts = [
        np.array([_logit(ratio0), _logit(theta_s0), math.log(a), math.log(n0 - 1.0)])
        for a in (0.005, 0.05)
        for n0 in (1.2, 2.0)
    ]
    h_mid = float(np.median(positive))
    starts.append(np.array([_logit(ratio0), _logit(theta_s0), math.log(1.0 / h_mid), math.log(0.5)]))

    best = None
    for u0 in starts:
        u, sse, ok = _fit_from_start(u0, h, theta_obs)
        if not ok:
            continue
        if best is None or sse < best[1]:
            best = (u, sse)
    if best is None:
        raise VgFitError(f"no start converged within {_MAX_ITER} iterations")
    theta_r, theta_s, alpha, n = _unpack(best[0])
    rmse = math.sqrt(best[1] / len(pts))
    return VgParameters(theta_r=theta_r, theta_s=theta_s, alpha=alpha, n=n, fit_rmse=rmse)


# ----------------------------------------------------------------------
# texture statistics
# ----------------------------------------------------------------------

def texture_statistics(
    sand: float,
    silt: float,
    clay: float,
    diameters_mm=(SAND_DIAMETER_MM, SILT_DIAMETER_MM, CLAY_DIAMETER_MM),
) -> tuple[float, float]:
    """Geometric mean particle diameter d_g (mm) and geometric standard
    deviation sigma_g from sand/silt/clay mass percentages."""
    fractions = np.array([sand, silt, clay], dtype=float) / 100.0
    if np.any(fractions < 0):
        raise HydrologyError(f"negative texture fraction: {sand}, {silt}, {clay}")
    total = float(fractions.sum())
    if abs(total - 1.0) > 0.005:
        raise HydrologyError(f"sand+silt+clay = {total * 100:g}%, expected 100 +/- 0.5")
    log_d = np.log(np.asarray(diameters_mm, dtype=float))
    a = float(fractions @ log_d)
    spread = float(fractions @ log_d**2) - a * a
    b = math.sqrt(max(spread, 0.0))
    return math.exp(a), math.exp(b)


# ----------------------------------------------------------------------
# model configurations and target assembly
# ----------------------------------------------------------------------

BASE_FEATURES = ("sand", "silt", "clay", "bulk_density", "d_g", "sigma_g")
SCALE_FEATURES = ("internal_diameter_cm", "length_cm")
VG_FEATURES = ("theta_r", "theta_s", "alpha", "n")

POINT_TARGETS = ("theta_s", "theta_i") + tuple(f"theta_{k}" for k in TENSION_LADDER_KPA)
PARAMETRIC_TARGETS = ("theta_r", "theta_s", "log_alpha", "log_n")
SHC_TARGETS = ("log_ksat",)


@dataclass(frozen=True)
class ModelConfig:
    """Feature and target layout of one prediction model."""

    id: str
    features: tuple[str, ...]
    targets: tuple[str, ...]
    parametric: bool = False

    def __post_init__(self):
        if not self.features or not self.targets:
            raise HydrologyError(f"config {self.id!r} needs features and targets")
        if len(set(self.features)) != len(self.features):
            raise HydrologyError(f"config {self.id!r} has duplicate features")


MODEL_CONFIGS: dict[str, ModelConfig] = {
    "SWRC1": ModelConfig("SWRC1", BASE_FEATURES, POINT_TARGETS),
    "SWRC2": ModelConfig("SWRC2", BASE_FEATURES + SCALE_FEATURES, POINT_TARGETS),
    "SWRC3": ModelConfig("SWRC3", BASE_FEATURES, PARAMETRIC_TARGETS, parametric=True),
    "SWRC4": ModelConfig("SWRC4", BASE_FEATURES + SCALE_FEATURES, PARAMETRIC_TARGETS, parametric=True),
    "SHC1": ModelConfig("SHC1", BASE_FEATURES, SHC_TARGETS),
    "SHC2": ModelConfig("SHC2", BASE_FEATURES + SCALE_FEATURES, SHC_TARGETS),
    "SHC3": ModelConfig("SHC3", BASE_FEATURES + VG_FEATURES, SHC_TARGETS),
    "SHC4": ModelConfig("SHC4", BASE_FEATURES + VG_FEATURES + SCALE_FEATURES, SHC_TARGETS),
}

# Targets whose values live in natural-log space; their RMSE doubles as RMSLE.
LOG_TARGETS = ("log_alpha", "log_n", "log_ksat")


def build_targets(config: ModelConfig, params: VgParameters, ksat: float | None = None) -> dict[str, float]:
    """Target values for one sample under a model configuration.

    ksat is the saturated hydraulic conductivity in cm/day, required by
    conductivity configs and stored as its natural log.
    """
    out: dict[str, float] = {}
    need = set(config.targets)
    if need & set(POINT_TARGETS):
        points = derived_water_contents(params)
        out.update({k: v for k, v in points.items() if k in need})
    if need & set(PARAMETRIC_TARGETS):
        parametric = {
            "theta_r": params.theta_r,
            "theta_s": params.theta_s,
            "log_alpha": math.log(params.alpha),
            "log_n": math.log(params.n),
        }
        out.update({k: v for k, v in parametric.items() if k in need})
    if "log_ksat" in need:
        if ksat is None:
            raise HydrologyError(f"config {config.id!r} needs a saturated conductivity value")
        if ksat <= 0:
            raise HydrologyError(f"saturated conductivity must be positive, got {ksat}")
        out["log_ksat"] = math.log(ksat)
    missing = need - set(out)
    if missing:
        raise HydrologyError(f"cannot build targets {sorted(missing)} for config {config.id!r}")
    return out

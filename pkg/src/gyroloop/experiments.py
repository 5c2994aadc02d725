"""Configuration-driven experiment runners with deterministic CSV output.

A flat INI config selects the field model, the experiment kind, and the
numerical parameters; every runner returns a header, float rows, and a
summary with pass/fail verdicts against the built-in tolerance bands.
Re-running an identical config reproduces the CSV byte for byte (fixed
seed, ordered reductions).
"""

from __future__ import annotations

import configparser
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fields import frame, make_model
from .fastslow import (
    FastState,
    SlowState,
    decompose,
    dyf0,
    fast_norm,
    inv_dyf0,
    reconstruct,
)
from .guiding_center import integrate_gc, mu0
from .hamiltonian import noether_J
from .lorentz import ParticleState, Trajectory, gyro_average, integrate
from .loopspace import (
    loop_action,
    loop_energy,
    step_implicit_midpoint,
    step_rk4_loop,
    theta_grid,
)
from .slow_manifold import ShapeOrder, build_loop, invariance_residual, shape_function
from .slow_manifold import y1_star, y1_star_generic


class ConfigError(ValueError):
    """Config file problem, annotated with section/key context."""


KINDS = (
    "orbit",
    "loop",
    "gc-run",
    "residual-scan",
    "compare-drift",
    "noether-scan",
    "stick",
    "fastslow-check",
    "fields-check",
    "y1-check",
)


@dataclass
class ExperimentConfig:
    kind: str
    model_name: str = "uniform"
    field_params: dict = field(default_factory=dict)
    epsilons: list = field(default_factory=lambda: [1e-2])
    t_final: float = 1.0
    dt: float | None = None
    n_theta: int = 32
    order: int = 1
    integrator: str = "auto"
    seed: int = 42
    n_samples: int = 100
    xbar: tuple = (0.15, -0.1, 0.05)
    ubar: float = 0.3
    w1: float = 0.7
    w2: float = -0.4
    svar: float = 0.0
    theta0: float = 0.0
    x_init: tuple | None = None
    v_init: tuple | None = None
    out_path: str = "out.csv"

    def model(self):
        return make_model(self.model_name, **self.field_params)

    def slow_state(self):
        return SlowState(np.array(self.xbar), self.ubar, self.w1, self.w2, self.svar)

    def shape_order(self):
        return ShapeOrder.ORDER1 if self.order == 1 else ShapeOrder.ORDER0

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"run.kind '{self.kind}' not one of {KINDS}")
        if any(e <= 0 for e in self.epsilons):
            raise ConfigError("run.epsilon entries must be > 0")
        if self.t_final <= 0:
            raise ConfigError("run.t_final must be > 0")
        if self.n_theta < 8 or self.n_theta % 2:
            raise ConfigError("run.n_theta must be an even integer >= 8")
        if self.order not in (0, 1):
            raise ConfigError("run.order must be 0 or 1")


def _parse_floats(text):
    return [float(tok) for tok in text.replace(",", " ").split()]


def load_config(path):
    """Parse the INI experiment file; raise ConfigError with context."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:  # carries file/line diagnostics
        raise ConfigError(str(exc)) from exc
    if not read:
        raise ConfigError(f"cannot read config file '{path}'")

    def get(section, key, cast, default=None):
        if not parser.has_option(section, key):
            if default is None and section == "run" and key == "kind":
                raise ConfigError(f"missing required option [{section}] {key}")
            return default
        raw = parser.get(section, key)
        try:
            return cast(raw)
        except Exception as exc:
            raise ConfigError(f"bad value for [{section}] {key} = '{raw}': {exc}") from exc

    kind = get("run", "kind", str)
    if kind is None:
        raise ConfigError("missing required option [run] kind")
    cfg = ExperimentConfig(kind=kind.strip().lower())

    cfg.model_name = get("field", "model", str, cfg.model_name).strip().lower()
    if parser.has_section("field"):
        for key, raw in parser.items("field"):
            if key == "model":
                continue
            try:
                cfg.field_params[key] = float(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for [field] {key} = '{raw}'") from exc

    if parser.has_option("run", "epsilons"):
        cfg.epsilons = get("run", "epsilons", _parse_floats)
    elif parser.has_option("run", "epsilon"):
        cfg.epsilons = [get("run", "epsilon", float)]
    cfg.t_final = get("run", "t_final", float, cfg.t_final)
    cfg.dt = get("run", "dt", float, None)
    cfg.n_theta = get("run", "n_theta", int, cfg.n_theta)
    cfg.order = get("run", "order", int, cfg.order)
    cfg.integrator = get("run", "integrator", str, cfg.integrator).strip().lower()
    cfg.seed = get("run", "seed", int, cfg.seed)
    cfg.n_samples = get("run", "n_samples", int, cfg.n_samples)

    cfg.xbar = tuple(get("initial", "xbar", _parse_floats, list(cfg.xbar)))
    cfg.ubar = get("initial", "ubar", float, cfg.ubar)
    cfg.w1 = get("initial", "w1", float, cfg.w1)
    cfg.w2 = get("initial", "w2", float, cfg.w2)
    cfg.svar = get("initial", "svar", float, cfg.svar)
    cfg.theta0 = get("initial", "theta0", float, cfg.theta0)
    if parser.has_option("initial", "x"):
        cfg.x_init = tuple(get("initial", "x", _parse_floats))
    if parser.has_option("initial", "v"):
        cfg.v_init = tuple(get("initial", "v", _parse_floats))

    cfg.out_path = get("output", "path", str, cfg.out_path)
    try:
        cfg.validate()
    except ConfigError:
        raise
    return cfg


def write_csv(path, header, rows):
    """Write rows with a fixed float format (locale-free, '.' decimal)."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def fit_loglog(xs, ys):
    """Least-squares slope/intercept of log ys vs log xs, plus r^2."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def _pmap(fn, items):
    """Map preserving order; GYROLOOP_THREADS > 1 enables a thread pool."""
    try:
        n = int(os.environ.get("GYROLOOP_THREADS", "1"))
    except ValueError:
        n = 1
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _particle_start(cfg, model, eps):
    """Initial particle: explicit (x, v) or a point of the slow loop."""
    if cfg.x_init is not None and cfg.v_init is not None:
        return ParticleState(np.array(cfg.x_init), np.array(cfg.v_init))
    loop = build_loop(cfg.slow_state(), eps, model, cfg.shape_order(), cfg.n_theta)
    th = theta_grid(cfg.n_theta)
    idx = int(np.argmin(np.abs(th - (cfg.theta0 % (2 * np.pi)))))
    return ParticleState(loop.x[idx], loop.v[idx])


def run_orbit(cfg):
    model = cfg.model()
    eps = cfg.epsilons[0]
    dt = cfg.dt if cfg.dt else eps / 50.0
    stepper = "rk4" if cfg.integrator == "rk4" else "boris"
    p0 = _particle_start(cfg, model, eps)
    traj = integrate(p0, eps, model, cfg.t_final, dt, stepper)
    B = model.B(traj.x)
    absB = np.linalg.norm(B, axis=1)
    vpar = np.sum(traj.v * B, axis=1) / absB
    mu = (np.sum(traj.v**2, axis=1) - vpar**2) / (2.0 * absB)
    en = traj.energy()
    rows = [
        [traj.t[i], *traj.x[i], *traj.v[i], en[i], mu[i]]
        for i in range(len(traj))
    ]
    header = ["t", "x", "y", "z", "vx", "vy", "vz", "energy", "mu0"]
    drift = float(np.abs(en - en[0]).max() / max(abs(en[0]), 1e-300))
    summary = {"energy_rel_drift": drift}
    return header, rows, summary, True


def run_loop(cfg):
    model = cfg.model()
    eps = cfg.epsilons[0]
    dt = cfg.dt if cfg.dt else eps / 50.0
    use_midpoint = cfg.integrator in ("midpoint", "implicit-midpoint")
    loop = build_loop(cfg.slow_state(), eps, model, cfg.shape_order(), cfg.n_theta)
    n_steps = int(round(cfg.t_final / dt))
    sample_every = max(1, n_steps // 200)

    rows = []
    cur = loop
    for i in range(n_steps + 1):
        if i % sample_every == 0 or i == n_steps:
            x, y = decompose(cur, eps, model)
            rows.append(
                [
                    i * dt,
                    cur.s,
                    loop_energy(cur),
                    loop_action(cur, eps, model),
                    *cur.x.mean(axis=0),
                    *cur.v.mean(axis=0),
                    fast_norm(y),
                ]
            )
        if i < n_steps:
            if use_midpoint:
                cur = step_implicit_midpoint(cur, dt, eps, model)
            else:
                cur = step_rk4_loop(cur, dt, eps, model)
    header = [
        "t", "s", "energy", "action",
        "xbar_x", "xbar_y", "xbar_z", "vbar_x", "vbar_y", "vbar_z", "fast_norm",
    ]
    e = np.array([r[2] for r in rows])
    j = np.array([r[3] for r in rows])
    summary = {
        "energy_rel_drift": float(np.abs(e - e[0]).max() / max(abs(e[0]), 1e-300)),
        "action_drift": float(np.abs(j - j[0]).max()),
    }
    return header, rows, summary, True


def run_gc(cfg):
    model = cfg.model()
    eps = cfg.epsilons[0]
    dt = cfg.dt if cfg.dt else cfg.t_final / 100.0
    traj = integrate_gc(
        cfg.slow_state(), eps, model, cfg.t_final, dt, cfg.shape_order(), cfg.n_theta
    )
    rows = [
        [traj.t[i], *traj.states[i].xbar, traj.states[i].ubar,
         traj.states[i].w1, traj.states[i].w2, traj.mu0[i], traj.energy[i]]
        for i in range(len(traj.t))
    ]
    header = ["t", "xbar_x", "xbar_y", "xbar_z", "ubar", "w1", "w2", "mu0", "energy"]
    summary = {
        "mu0_rel_drift": float(np.abs(traj.mu0 - traj.mu0[0]).max() / max(traj.mu0[0], 1e-300)),
        "energy_rel_drift": float(
            np.abs(traj.energy - traj.energy[0]).max() / max(traj.energy[0], 1e-300)
        ),
    }
    return header, rows, summary, True


def run_residual_scan(cfg):
    model = cfg.model()
    x0 = cfg.slow_state()
    order = cfg.shape_order()

    def one(eps):
        return invariance_residual(x0, eps, model, order, cfg.n_theta)

    residuals = _pmap(one, list(cfg.epsilons))
    rows = [[e, float(cfg.order), r] for e, r in zip(cfg.epsilons, residuals)]
    header = ["epsilon", "order", "residual"]
    summary = {"max_residual": float(max(residuals))}
    if cfg.model_name == "uniform":
        passed = max(residuals) <= 1e-9
        summary["tolerance"] = 1e-9
    else:
        slope, _, r2 = fit_loglog(cfg.epsilons, residuals)
        summary.update({"slope": slope, "r2": r2})
        lo, hi = (0.85, 1.15) if cfg.order == 0 else (1.8, 2.2)
        summary.update({"slope_lo": lo, "slope_hi": hi})
        passed = lo <= slope <= hi
    return header, rows, summary, passed


def measure_drift(model, x0, eps, n_theta=32, n_per=250, n_periods=18):
    """Gyro-averaged Boris drift vs the order-1 slow drift, at one eps.

    The particle starts on a point of the order-1 slow loop; positions are
    corrected by the first-order guiding-center map x + eps v x b/|B| before
    boxcar averaging, and the mean velocity over an exact whole number of
    gyroperiods is compared with the order-1/order-0 reduced trajectories
    over the identical window.
    """
    absB = float(np.linalg.norm(model.B(np.asarray(x0.xbar))))
    t_gyro = 2.0 * np.pi * eps / absB
    dt = t_gyro / n_per
    t_final = n_periods * t_gyro

    loop = build_loop(x0, eps, model, ShapeOrder.ORDER1, n_theta)
    p0 = ParticleState(loop.x[0], loop.v[0])
    traj = integrate(p0, eps, model, t_final, dt, "boris")
    B = model.B(traj.x)
    nB = np.linalg.norm(B, axis=1)
    b = B / nB[:, None]
    corrected = traj.x + eps * np.cross(traj.v, b) / nB[:, None]
    t_mid, x_avg = gyro_average(Trajectory(traj.t, corrected, traj.v), t_gyro)

    ia = n_per // 2
    ib = ia + (n_periods - 2) * n_per
    ta, tb = t_mid[ia], t_mid[ib]
    v_oracle = (x_avg[ib] - x_avg[ia]) / (tb - ta)

    gc_dt = t_final / 800.0
    gc1 = integrate_gc(x0, eps, model, t_final, gc_dt, ShapeOrder.ORDER1, n_theta)
    gc0 = integrate_gc(x0, eps, model, t_final, gc_dt, ShapeOrder.ORDER0, n_theta)

    def mean_vel(gc):
        xs = np.array([s.xbar for s in gc.states])
        xa = np.array([np.interp(ta, gc.t, xs[:, j]) for j in range(3)])
        xb = np.array([np.interp(tb, gc.t, xs[:, j]) for j in range(3)])
        return (xb - xa) / (tb - ta)

    v1 = mean_vel(gc1)
    v0 = mean_vel(gc0)
    drift_gc = float(np.linalg.norm(v1 - v0))
    drift_oracle = float(np.linalg.norm(v_oracle - v0))
    rel_error = float(np.linalg.norm(v_oracle - v1) / drift_gc)
    return drift_gc, drift_oracle, rel_error


def run_compare_drift(cfg):
    model = cfg.model()
    x0 = cfg.slow_state()

    results = _pmap(lambda e: measure_drift(model, x0, e, cfg.n_theta), list(cfg.epsilons))
    rows = [[e, *res] for e, res in zip(cfg.epsilons, results)]
    header = ["epsilon", "drift_gc", "drift_oracle", "rel_error"]
    rels = [r[2] for r in results]
    passed = all(rel <= 10.0 * e for rel, e in zip(rels, cfg.epsilons))
    summary = {"max_rel_error": float(max(rels))}
    if len(cfg.epsilons) == 2:
        hi = rels[np.argmax(cfg.epsilons)]
        lo = rels[np.argmin(cfg.epsilons)]
        ratio = hi / lo
        summary["error_ratio"] = float(ratio)
        passed = passed and 3.0 <= ratio <= 30.0
    return header, rows, summary, passed


def run_noether_scan(cfg):
    model = cfg.model()
    x0 = cfg.slow_state()
    order = cfg.shape_order()
    m0 = mu0(x0, model)

    def one(eps):
        return noether_J(x0, eps, model, order, cfg.n_theta)

    js = _pmap(one, list(cfg.epsilons))
    rows = [[e, j, e * m0, abs(j - e * m0)] for e, j in zip(cfg.epsilons, js)]
    header = ["epsilon", "J", "eps_mu0", "abs_diff"]
    diffs = [r[3] for r in rows]
    slope, _, r2 = fit_loglog(cfg.epsilons, diffs)
    norm_slope = slope - 1.0  # exponent of the moment error |J/eps - mu0|
    summary = {"slope": slope, "moment_slope": norm_slope, "r2": r2}
    passed = slope >= 1.8 and 1.8 <= norm_slope <= 2.2
    return header, rows, summary, passed


def run_stick(cfg):
    model = cfg.model()
    x0 = cfg.slow_state()

    def one(eps):
        dt = cfg.dt if cfg.dt else eps / 50.0
        loop = build_loop(x0, eps, model, ShapeOrder.ORDER1, cfg.n_theta)
        n_steps = int(round(cfg.t_final / dt))
        check_every = max(1, n_steps // 80)
        cur = loop
        worst = 0.0
        for i in range(n_steps):
            cur = step_rk4_loop(cur, dt, eps, model)
            if (i + 1) % check_every == 0 or i == n_steps - 1:
                x, y = decompose(cur, eps, model)
                ystar = shape_function(x, eps, model, ShapeOrder.ORDER1, cfg.n_theta)
                dev = fast_norm(
                    FastState.from_vector(y.to_vector() - ystar.to_vector(), cfg.n_theta)
                )
                worst = max(worst, dev)
        return worst

    devs = _pmap(one, list(cfg.epsilons))
    rows = [[e, d] for e, d in zip(cfg.epsilons, devs)]
    header = ["epsilon", "max_dev"]
    slope, _, r2 = fit_loglog(cfg.epsilons, devs)
    summary = {"slope": slope, "r2": r2}
    return header, rows, summary, slope >= 1.8


def _random_slow(rng, model_name):
    return SlowState(
        rng.uniform(-0.3, 0.3, 3),
        rng.uniform(-1.0, 1.0),
        rng.uniform(-1.0, 1.0),
        rng.uniform(-1.0, 1.0),
        rng.uniform(0.0, 5.0),
    )


def _random_fast(rng, n_theta):
    th = theta_grid(n_theta)
    rho = np.zeros((n_theta, 3))
    for k in range(1, 4):
        rho += np.outer(np.cos(k * th), rng.uniform(-0.5, 0.5, 3))
        rho += np.outer(np.sin(k * th), rng.uniform(-0.5, 0.5, 3))
    v2 = np.zeros((n_theta, 3))
    for k in range(2, 5):
        v2 += np.outer(np.cos(k * th), rng.uniform(-0.5, 0.5, 3))
        v2 += np.outer(np.sin(k * th), rng.uniform(-0.5, 0.5, 3))
    return FastState(rho, *rng.uniform(-1.0, 1.0, 6), v2)


def run_fastslow_check(cfg):
    model = cfg.model()
    eps = cfg.epsilons[0]
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(cfg.n_samples):
        x = _random_slow(rng, cfg.model_name)
        y = _random_fast(rng, cfg.n_theta)
        loop = reconstruct(x, y, eps, model)
        x2, y2 = decompose(loop, eps, model)
        rt = max(
            float(np.abs(x.to_vector() - x2.to_vector()).max()),
            float(np.abs(y.to_vector() - y2.to_vector()).max()),
        )
        loop2 = reconstruct(x2, y2, eps, model)
        rt = max(rt, float(np.abs(loop.x - loop2.x).max()), float(np.abs(loop.v - loop2.v).max()))

        ys = _random_fast(rng, cfg.n_theta)
        dy = inv_dyf0(x, ys, model)
        back = dyf0(x, dy, model)
        inv_err = float(np.abs(back.to_vector() - ys.to_vector()).max())
        rows.append([float(i), rt, inv_err])
    header = ["sample", "roundtrip_err", "inverse_err"]
    rt_max = max(r[1] for r in rows)
    inv_max = max(r[2] for r in rows)
    summary = {"max_roundtrip_err": rt_max, "max_inverse_err": inv_max}
    return header, rows, summary, rt_max <= 1e-12 and inv_max <= 1e-7


def run_fields_check(cfg):
    model = cfg.model()
    rng = np.random.default_rng(cfg.seed)
    h = 1e-4
    eye = np.eye(3)
    rows = []
    for i in range(cfg.n_samples):
        x = rng.uniform(-0.5, 0.5, 3)
        B = model.B(x)
        curl = np.zeros(3)
        div = 0.0
        for j in range(3):
            dp = model.A(x + h * eye[j])
            dm = model.A(x - h * eye[j])
            grad_j = (dp - dm) / (2 * h)
            curl[(j + 2) % 3] += grad_j[(j + 1) % 3]
            curl[(j + 1) % 3] -= grad_j[(j + 2) % 3]
            div += (model.B(x + h * eye[j])[j] - model.B(x - h * eye[j])[j]) / (2 * h)
        curl_err = float(np.linalg.norm(curl - B) / (1.0 + np.linalg.norm(B)))
        fr = frame(model, x)
        ortho = max(
            abs(np.linalg.norm(fr.b) - 1.0),
            abs(np.linalg.norm(fr.e1) - 1.0),
            abs(np.dot(fr.e1, fr.e2)),
            float(np.abs(fr.b - np.cross(fr.e1, fr.e2)).max()),
        )
        bp = model.unit_b(x + h * fr.b)
        bm = model.unit_b(x - h * fr.b)
        kappa_fd = (bp - bm) / (2 * h)
        kappa_err = float(np.abs(kappa_fd - fr.kappa).max())
        rows.append([float(i), curl_err, abs(div), ortho, kappa_err])
    header = ["sample", "curl_err", "div_err", "ortho_err", "kappa_fd_err"]
    worst = {k: max(r[j] for r in rows) for j, k in [(1, "curl"), (2, "div"), (3, "ortho"), (4, "kappa")]}
    summary = {f"max_{k}_err": v for k, v in worst.items()}
    passed = (
        worst["curl"] <= 1e-6
        and worst["div"] <= 1e-6
        and worst["ortho"] <= 1e-12
        and worst["kappa"] <= 1e-6
    )
    return header, rows, summary, passed


def run_y1_check(cfg):
    model = cfg.model()
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(cfg.n_samples):
        x = _random_slow(rng, cfg.model_name)
        yc = y1_star(x, model, cfg.n_theta).to_vector()
        yg = y1_star_generic(x, model, cfg.n_theta).to_vector()
        denom = max(float(np.abs(yc).max()), 1e-30)
        rows.append([float(i), float(np.abs(yc - yg).max()) / denom])
    header = ["sample", "rel_err"]
    worst = max(r[1] for r in rows)
    summary = {"max_rel_err": worst}
    return header, rows, summary, worst <= 1e-6


_RUNNERS = {
    "orbit": run_orbit,
    "loop": run_loop,
    "gc-run": run_gc,
    "residual-scan": run_residual_scan,
    "compare-drift": run_compare_drift,
    "noether-scan": run_noether_scan,
    "stick": run_stick,
    "fastslow-check": run_fastslow_check,
    "fields-check": run_fields_check,
    "y1-check": run_y1_check,
}


def run(cfg, out_path=None):
    """Execute one experiment; writes the CSV and returns (passed, summary)."""
    cfg.validate()
    header, rows, summary, passed = _RUNNERS[cfg.kind](cfg)
    write_csv(out_path or cfg.out_path, header, rows)
    return passed, summary

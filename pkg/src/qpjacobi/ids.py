"""Integrated density of states, Wegner integrals, Hölder fits and the end-to-end gate."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .coeffs import DiophantineViolation, ModelSpec, check_diophantine
from .lyapunov import estimate_L
from .operator import count_below_grid
from .orbit import phase_grid

ETA_RANGE_FACTOR = 10.0
HOLDER_Q_RANGE = (0.2, 0.8)


class EtaOutOfRange(ValueError):
    pass


class InsufficientSignal(ValueError):
    pass


@dataclass(frozen=True)
class IDSCurve:
    N: int
    samples: int
    energies: tuple
    values: tuple
    std_errors: tuple


@dataclass(frozen=True)
class HolderFit:
    E: float
    eta_grid: tuple
    moduli: tuple
    std_errors: tuple
    exponent: float
    r_squared: float
    predicted_p: float
    exponent_vs_p: float
    points_used: int


@dataclass(frozen=True)
class WegnerResult:
    integral: float
    bound: float
    passed: bool
    std_error: float
    eta_in_range: bool
    eta_range: tuple
    hypothesis_violated: bool | None = None


@dataclass(frozen=True)
class MultiscaleResult:
    lhs: float
    rhs: float
    slack: float
    std_error: float
    passed: bool


def ids_finite(model: ModelSpec, x, omega, N: int, E):
    """``#{eigenvalues < E} / N`` for ``H_N(x)``; outer product over array ``x`` and ``E``."""
    x_arr, E_arr = np.asarray(x, dtype=float), np.asarray(E, dtype=float)
    out = count_below_grid(model, x_arr.ravel(), omega, N, E_arr.ravel()) / N
    out = out.reshape(x_arr.shape + E_arr.shape)
    return float(out) if out.ndim == 0 else out


def _phase_stats(per_phase):
    """Mean and standard error over the phase axis (axis 0)."""
    M = per_phase.shape[0]
    mean = per_phase.mean(axis=0)
    se = per_phase.std(axis=0, ddof=1) / math.sqrt(M)
    return mean, se


def ids_avg(model: ModelSpec, omega, N: int, E, M: int, seed: int = 0):
    """Phase-averaged IDS and its standard error (arrays if ``E`` is an array)."""
    if M < 2:
        raise ValueError("need M >= 2")
    E_arr = np.atleast_1d(np.asarray(E, dtype=float))
    per = count_below_grid(model, phase_grid(M, seed), omega, N, E_arr) / N
    mean, se = _phase_stats(per)
    if np.ndim(E) == 0:
        return float(mean[0]), float(se[0])
    return mean, se


def ids_curve(model: ModelSpec, omega, N: int, energies, M: int, seed: int = 0) -> IDSCurve:
    energies = np.sort(np.asarray(energies, dtype=float))
    mean, se = ids_avg(model, omega, N, energies, M, seed)
    return IDSCurve(int(N), int(M), tuple(energies.tolist()), tuple(mean.tolist()), tuple(se.tolist()))


def ids_quantile_energies(model: ModelSpec, omega, N: int, q, M: int, seed: int = 0, iters: int = 44):
    """Smallest energies with phase-averaged IDS >= ``q`` (vectorized bisection)."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    xs = phase_grid(M, seed)
    bound = model.sup_norm_bound() + 1.0
    lo = np.full(q.shape, -bound)
    hi = np.full(q.shape, bound)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        val = count_below_grid(model, xs, omega, N, mid).mean(axis=0) / N
        up = val >= q
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return hi


def eta_range(N: int, p: float) -> tuple:
    """Admissible window ``[10 (1/N)^(1/p), 1/N]``; the lower end sits a factor 10 above ``N^(-1/p)``."""
    return (ETA_RANGE_FACTOR * (1.0 / N) ** (1.0 / p), 1.0 / N)


def window_counts(model: ModelSpec, xs, omega, N: int, E, eta):
    """Per-phase eigenvalue counts in ``[E - eta, E + eta)``, shape ``(len(xs),) + E.shape``."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    eta = np.broadcast_to(np.asarray(eta, dtype=float), E.shape)
    c = count_below_grid(model, xs, omega, N, np.concatenate([E - eta, E + eta]))
    return c[:, E.size :] - c[:, : E.size]


def wegner_integral(model: ModelSpec, omega, N: int, E: float, eta: float, M: int, seed: int = 0,
                    eps_holder: float = 0.1, p: float | None = None, strict: bool = True,
                    gamma: float | None = None, lyapunov_N: int = 500) -> WegnerResult:
    """Phase average of the window count against ``N eta^(p - eps_holder)``.

    With ``strict`` an ``eta`` outside :func:`eta_range` raises :class:`EtaOutOfRange`;
    otherwise the result records ``eta_in_range = False``.  If ``gamma`` is given the Lyapunov
    exponent at ``E`` is estimated and ``hypothesis_violated`` is set when it is not above ``gamma``.
    """
    p = float(model.p) if p is None else float(p)
    rng = eta_range(N, p)
    ok = rng[0] <= eta <= rng[1] * (1 + 1e-12)
    if strict and not ok:
        raise EtaOutOfRange(f"eta = {eta:.3e} outside [{rng[0]:.3e}, {rng[1]:.3e}]")
    counts = window_counts(model, phase_grid(M, seed), omega, N, E, eta)[:, 0].astype(float)
    mean, se = _phase_stats(counts[:, None])
    bound = N * eta ** (p - eps_holder)
    violated = None
    if gamma is not None:
        violated = bool(estimate_L(model, 0.0, omega, E, lyapunov_N, max(M, 2), seed).L <= gamma)
    return WegnerResult(float(mean[0]), float(bound), bool(mean[0] <= bound), float(se[0]), bool(ok), rng, violated)


def multiscale_ids_check(model: ModelSpec, omega, N: int, m: int, I, M: int, seed: int = 0) -> MultiscaleResult:
    """``(1/mN) int |sigma(H_mN) in I|`` against ``(1/N) int |sigma(H_N) in I| + 4/N`` on one grid."""
    if m < 2:
        raise ValueError("need m >= 2")
    lo, hi = float(I[0]), float(I[1])
    xs = phase_grid(M, seed)
    big = count_below_grid(model, xs, omega, m * N, [lo, hi])
    small = count_below_grid(model, xs, omega, N, [lo, hi])
    lhs_i = (big[:, 1] - big[:, 0]) / (m * N)
    rhs_i = (small[:, 1] - small[:, 0]) / N
    diff_mean, diff_se = _phase_stats((lhs_i - rhs_i)[:, None])
    slack = 4.0 / N
    return MultiscaleResult(
        float(lhs_i.mean()),
        float(rhs_i.mean()),
        slack,
        float(diff_se[0]),
        bool(diff_mean[0] <= slack + 2 * diff_se[0]),
    )


def fit_power_law(eta, moduli, std_errors=None, E: float = math.nan, predicted_p: float = math.nan,
                  eps_holder: float = 0.1) -> HolderFit:
    """Least-squares slope of ``log modulus`` against ``log eta`` on points above ``3 * std_error``."""
    eta = np.asarray(eta, dtype=float)
    mod = np.asarray(moduli, dtype=float)
    se = np.zeros_like(mod) if std_errors is None else np.asarray(std_errors, dtype=float)
    if eta.size < 2 or np.any(np.diff(eta) <= 0):
        raise ValueError("eta grid must be strictly increasing")
    use = (mod > 3 * se) & (mod > 0)
    if use.sum() < 4:
        raise InsufficientSignal(f"only {int(use.sum())} grid points above noise")
    lx, ly = np.log(eta[use]), np.log(mod[use])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return HolderFit(
        float(E),
        tuple(eta.tolist()),
        tuple(mod.tolist()),
        tuple(se.tolist()),
        float(slope),
        r2,
        float(predicted_p),
        float(slope - (predicted_p - eps_holder)),
        int(use.sum()),
    )


def holder_moduli(model: ModelSpec, omega, N: int, E: float, eta_grid, M: int, seed: int = 0):
    """``N(E + eta) - N(E - eta)`` for each eta and its standard error (paired over phases)."""
    eta = np.asarray(eta_grid, dtype=float)
    per = window_counts(model, phase_grid(M, seed), omega, N, np.full(eta.shape, E), eta) / N
    return _phase_stats(per)


def holder_fit(model: ModelSpec, omega, N: int, E: float, eta_grid, M: int, seed: int = 0,
               eps_holder: float = 0.1) -> HolderFit:
    eta = np.asarray(eta_grid, dtype=float)
    if eta.size < 6:
        raise ValueError("eta grid needs at least 6 points")
    mod, se = holder_moduli(model, omega, N, E, eta, M, seed)
    return fit_power_law(eta, mod, se, E=E, predicted_p=float(model.p), eps_holder=eps_holder)


def holder_energies(model: ModelSpec, omega, N: int, count: int, M: int, seed: int = 0, interval=None):
    """Seeded energies whose phase-averaged IDS lies in ``[0.2, 0.8]`` (optionally inside ``interval``)."""
    q_lo, q_hi = HOLDER_Q_RANGE
    if interval is not None:
        ends, _ = ids_avg(model, omega, N, np.asarray(interval, dtype=float), M, seed)
        q_lo, q_hi = max(q_lo, float(ends[0])), min(q_hi, float(ends[1]))
        if q_hi <= q_lo:
            return np.array([])
    q = np.random.default_rng(seed).uniform(q_lo, q_hi, count)
    return ids_quantile_energies(model, omega, N, q, M, seed)


# ---------------------------------------------------------------------------
# gate


@dataclass
class GateReport:
    config_digest: str
    p: float
    n_b: int
    d0: int
    frequency: dict
    lyapunov: list = field(default_factory=list)
    wegner: list = field(default_factory=list)
    holder: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    hypothesis_violated: bool = False
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (not self.hypothesis_violated and not self.errors
                and all(r["pass"] for r in self.wegner))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = self.passed
        return out


def theorem_gate(config) -> GateReport:
    """Frequency certificate, ``p``, Lyapunov floor, Wegner grid, then Hölder fits.

    Sub-errors are captured in the report; a Lyapunov estimate at or below ``gamma`` (or a failed
    frequency certificate) marks ``hypothesis_violated`` and suppresses all Wegner/Hölder claims.
    """
    model = config.build_model()
    fq = config.frequency
    omega = fq.value
    g, sc, seed = config.grids, config.scales, config.seed
    freq_info = {"omega": omega, "c": fq.c, "alpha": fq.alpha, "certified_up_to": fq.certify_N, "certified": True}
    report = GateReport(config.digest(), float("nan"), model.n_b, model.d0, freq_info)
    report.notes.append("eta lower end is 10 N^(-1/p)")
    try:
        check_diophantine(omega, fq.c, fq.alpha, fq.certify_N)
    except DiophantineViolation as exc:
        freq_info["certified"] = False
        report.errors.append({"stage": "frequency", "error": str(exc)})
        report.hypothesis_violated = True
        return report
    try:
        p = float(model.p)
    except ValueError as exc:
        report.errors.append({"stage": "p", "error": str(exc)})
        report.hypothesis_violated = True
        return report
    report.p = p

    energies = np.linspace(g.energy_interval[0], g.energy_interval[1], g.energy_count)
    for E in energies:
        est = estimate_L(model, 0.0, omega, float(E), sc.lyapunov_N, g.M, seed)
        ok = est.L > config.tolerances.gamma
        report.lyapunov.append({"E": float(E), "L": est.L, "std_error": est.std_error, "above_gamma": bool(ok)})
        if not ok:
            report.hypothesis_violated = True
    if report.hypothesis_violated:
        report.notes.append("Lyapunov floor not met: Wegner and Hölder stages skipped")
        return report

    for N in sc.N:
        for factor in g.eta_factors:
            eta = factor / N
            for E in energies:
                try:
                    w = wegner_integral(model, omega, N, float(E), eta, g.M, seed, g.eps_holder, p)
                    report.wegner.append({"N": int(N), "E": float(E), "eta": eta, "integral": w.integral,
                                          "bound": w.bound, "pass": w.passed, "std_error": w.std_error})
                except EtaOutOfRange as exc:
                    report.errors.append({"stage": "wegner", "N": int(N), "eta": eta, "error": str(exc)})

    eta_grid = np.geomspace(g.holder_eta[0], g.holder_eta[1], g.holder_eta_count)
    try:
        hE = holder_energies(model, omega, sc.holder_N, g.holder_energy_count, g.M, seed, g.energy_interval)
    except ValueError as exc:
        report.errors.append({"stage": "holder", "error": str(exc)})
        hE = []
    for E in hE:
        try:
            fit = holder_fit(model, omega, sc.holder_N, float(E), eta_grid, g.M, seed, g.eps_holder)
            report.holder.append({"E": float(E), "exponent": fit.exponent, "r_squared": fit.r_squared,
                                  "predicted_p": fit.predicted_p, "exponent_vs_p": fit.exponent_vs_p,
                                  "points_used": fit.points_used, "eta_grid": list(fit.eta_grid),
                                  "moduli": list(fit.moduli)})
        except InsufficientSignal as exc:
            report.holder.append({"E": float(E), "error": str(exc)})
    return report

"""ARMA benchmark: autocorrelations, unit-root/stationarity tests, CSS fitting, order search, forecasts.

Model convention::

    r_t = phi_0 + sum_i phi_i r_{t-i} + a_t - sum_j theta_j a_{t-j}

Critical values are asymptotic (no finite-sample interpolation):

* Dickey-Fuller tau statistics from MacKinnon (2010), "Critical Values for
  Cointegration Tests", Queen's Economics Department Working Paper 1227,
  Table 1 (N=1, asymptotic row).
* KPSS eta statistics from Kwiatkowski, Phillips, Schmidt and Shin (1992),
  Journal of Econometrics 54, Table 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ConvergenceError, DataError, ParameterError
from .optim import sgd_step

log = logging.getLogger(__name__)

__all__ = [
    "ADF_CRITICAL",
    "KPSS_CRITICAL",
    "AcfResult",
    "TestReport",
    "ArmaModel",
    "acf",
    "pacf",
    "ols",
    "adf_test",
    "kpss_test",
    "css_residuals",
    "fit_arma",
    "information_criteria",
    "auto_order",
    "forecast",
    "one_step_predictions",
    "simulate_arma",
]

ADF_CRITICAL = {
    "none": {"1%": -2.56574, "5%": -1.94100, "10%": -1.61682},
    "drift": {"1%": -3.43035, "5%": -2.86154, "10%": -2.56677},
    "drift+trend": {"1%": -3.95877, "5%": -3.41049, "10%": -3.12705},  # tau3
}
ADF_ROW_NAMES = {"none": "tau1", "drift": "tau2", "drift+trend": "tau3"}

KPSS_CRITICAL = {
    "level": {"1%": 0.739, "5%": 0.463, "10%": 0.347},
    "trend": {"1%": 0.216, "5%": 0.146, "10%": 0.119},
}


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    rho: np.ndarray
    band: float  # half-width 2/sqrt(n) of the white-noise band

    def outside_band(self) -> np.ndarray:
        """Boolean mask over lags >= 1."""
        return np.abs(self.rho[1:]) > self.band


def _centered(series):
    x = np.asarray(series, dtype=np.float64)
    return x - x.mean()


def acf(series, max_lag: int) -> AcfResult:
    x = _centered(series)
    n = x.size
    if not 0 <= max_lag < n:
        raise ParameterError(f"max_lag must lie in [0, {n - 1}], got {max_lag}")
    denom = float(x @ x)
    if denom == 0.0:
        raise DataError("constant series has no autocorrelation")
    rho = np.array([1.0] + [float(x[l:] @ x[:-l]) / denom for l in range(1, max_lag + 1)])
    return AcfResult(np.arange(max_lag + 1), rho, 2.0 / math.sqrt(n))


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations at lags 0..max_lag by the Durbin-Levinson recursion."""
    rho = acf(series, max_lag).rho
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    phi = np.zeros(0)
    for k in range(1, max_lag + 1):
        if k == 1:
            a = rho[1]
        else:
            a = (rho[k] - phi @ rho[k - 1 : 0 : -1]) / (1.0 - phi @ rho[1:k])
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        out[k] = a
    return out


def ols(X, y):
    """Least squares via lstsq; returns (beta, standard errors, residuals)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = X.shape[0] - X.shape[1]
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return beta, np.sqrt(np.diag(cov)), resid


@dataclass(frozen=True)
class TestReport:
    test: str
    statistic: float
    critical_values: dict
    decision: str  # "reject" | "fail_to_reject" at 5%
    null: str
    rejects_below: bool
    details: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"test: {self.test}",
            f"null: {self.null}",
            f"statistic: {self.statistic!r}",
        ]
        for level in ("1%", "5%", "10%"):
            lines.append(f"critical_{level}: {self.critical_values[level]!r}")
        for k, v in self.details.items():
            lines.append(f"{k}: {v}")
        lines.append(f"decision_5%: {self.decision}")
        return "\n".join(lines) + "\n"


def _decide(stat, crit, below: bool) -> str:
    hit = stat < crit["5%"] if below else stat > crit["5%"]
    return "reject" if hit else "fail_to_reject"


def adf_test(series, lags: int = 1, trend: str = "drift") -> TestReport:
    """Augmented Dickey-Fuller t-test on the lagged level coefficient.

    trend: ``"none"``, ``"drift"`` (constant) or ``"drift+trend"``.
    """
    if trend not in ADF_CRITICAL:
        raise ParameterError(f"trend must be one of {list(ADF_CRITICAL)}, got {trend!r}")
    if lags < 0:
        raise ParameterError(f"lags must be >= 0, got {lags}")
    p = np.asarray(series, dtype=np.float64)
    n = p.size
    if n <= lags + 10:
        raise DataError(f"ADF with {lags} lags needs more than {lags + 10} observations, got {n}")
    dp = np.diff(p)
    t_idx = np.arange(lags, n - 1)  # dp[t] = p[t+1] - p[t]
    cols = []
    if trend != "none":
        cols.append(np.ones(t_idx.size))
    if trend == "drift+trend":
        cols.append((t_idx + 1).astype(np.float64))
    level_col = len(cols)
    cols.append(p[t_idx])
    for j in range(1, lags + 1):
        cols.append(dp[t_idx - j])
    X = np.column_stack(cols)
    beta, se, _ = ols(X, dp[t_idx])
    stat = float(beta[level_col] / se[level_col])
    crit = ADF_CRITICAL[trend]
    return TestReport(
        test=f"ADF ({trend}, lags={lags}, row {ADF_ROW_NAMES[trend]})",
        statistic=stat,
        critical_values=dict(crit),
        decision=_decide(stat, crit, below=True),
        null="unit root (non-stationary)",
        rejects_below=True,
        details={"gamma": repr(float(beta[level_col])), "nobs": t_idx.size},
    )


def kpss_test(series, trend: str = "level", lags: int | None = None) -> TestReport:
    """KPSS test of level or trend stationarity with a Bartlett long-run variance."""
    if trend not in KPSS_CRITICAL:
        raise ParameterError(f"trend must be 'level' or 'trend', got {trend!r}")
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n < 30:
        raise DataError(f"KPSS needs at least 30 observations, got {n}")
    if trend == "level":
        e = x - x.mean()
    else:
        t = np.arange(1, n + 1, dtype=np.float64)
        _, _, e = ols(np.column_stack([np.ones(n), t]), x)
    if lags is None:
        lags = int(math.floor(4.0 * (n / 100.0) ** 0.25))
    s2 = float(e @ e) / n
    for s in range(1, lags + 1):
        s2 += 2.0 * (1.0 - s / (lags + 1.0)) * float(e[s:] @ e[:-s]) / n
    S = np.cumsum(e)
    stat = float(S @ S) / (n * n * s2)
    crit = KPSS_CRITICAL[trend]
    return TestReport(
        test=f"KPSS ({trend}, lags={lags})",
        statistic=stat,
        critical_values=dict(crit),
        decision=_decide(stat, crit, below=False),
        null=f"{trend} stationarity",
        rejects_below=False,
        details={"nobs": n},
    )


@dataclass(frozen=True)
class ArmaModel:
    p: int
    q: int
    phi_0: float
    phi: np.ndarray
    theta: np.ndarray
    sigma2: float
    n: int
    loglik: float
    start: int = 0  # observations conditioned on before residuals are counted
    iterations: int = 0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64).reshape(-1)
        theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        if phi.size != self.p or theta.size != self.q:
            raise ParameterError(f"coefficient lengths ({phi.size}, {theta.size}) vs orders ({self.p}, {self.q})")
        if not self.sigma2 > 0:
            raise ParameterError(f"innovation variance must be > 0, got {self.sigma2}")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)

    @property
    def k(self) -> int:
        """Free parameters counted by the information criteria (coefficients, intercept, variance)."""
        return self.p + self.q + 2

    @property
    def aic(self) -> float:
        return 2.0 * self.k - 2.0 * self.loglik

    @property
    def bic(self) -> float:
        return self.k * math.log(self.n) - 2.0 * self.loglik

    def to_text(self) -> str:
        lines = [f"order: ({self.p}, {self.q})", f"phi_0: {self.phi_0!r}"]
        lines += [f"phi_{i + 1}: {float(v)!r}" for i, v in enumerate(self.phi)]
        lines += [f"theta_{j + 1}: {float(v)!r}" for j, v in enumerate(self.theta)]
        lines += [
            f"sigma2: {self.sigma2!r}",
            f"n: {self.n}",
            f"loglik: {self.loglik!r}",
            f"aic: {self.aic!r}",
            f"bic: {self.bic!r}",
        ]
        return "\n".join(lines) + "\n"


def css_residuals(series, phi_0, phi, theta, start: int | None = None) -> np.ndarray:
    """Innovations a_t for t >= start, with pre-sample innovations set to zero."""
    r = np.asarray(series, dtype=np.float64)
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    p = phi.size
    start = p if start is None else start
    w = r[start:] - phi_0
    for i in range(1, p + 1):
        w = w - phi[i - 1] * r[start - i : r.size - i]
    if theta.size == 0:
        return w
    return lfilter([1.0], np.concatenate([[1.0], -theta]), w)


def _gaussian_loglik(css: float, n: int) -> float:
    s2 = css / n
    return -0.5 * n * (math.log(2.0 * math.pi * s2) + 1.0)


def _lagmat(x, lags: int, start: int):
    return np.column_stack([x[start - i : x.size - i] for i in range(1, lags + 1)]) if lags else np.empty((x.size - start, 0))


def _hannan_rissanen(r, p, q, start):
    """Initial (phi_0, phi, theta) from a long autoregression's residuals."""
    n = r.size
    m = max(p + q, min(20, int(10 * math.log10(n))))
    Xl = np.column_stack([np.ones(n - m), _lagmat(r, m, m)])
    beta, *_ = np.linalg.lstsq(Xl, r[m:], rcond=None)
    a_hat = np.zeros(n)
    a_hat[m:] = r[m:] - Xl @ beta
    s = max(start, m + q)
    X = np.column_stack([np.ones(n - s), _lagmat(r, p, s), _lagmat(a_hat, q, s)])
    coef, *_ = np.linalg.lstsq(X, r[s:], rcond=None)
    phi_0, phi, theta = coef[0], coef[1 : 1 + p], -coef[1 + p :]
    if q and np.any(np.abs(np.roots(np.concatenate([[1.0], -theta])[::-1])) <= 1.0 + 1e-6):
        theta = np.zeros(q)  # non-invertible start; fall back to pure AR start
    return np.concatenate([[phi_0], phi, theta])


def fit_arma(series, p: int, q: int, start: int | None = None, max_iter: int = 5000, tol: float = 1e-12) -> ArmaModel:
    """Conditional-sum-of-squares fit.

    q = 0 is solved exactly by least squares on lagged values. For q > 0 the
    CSS objective is minimized by gradient descent with central-difference
    gradients, Barzilai-Borwein step lengths and backtracking, started from a Hannan-Rissanen
    estimate. Raises ``ConvergenceError`` (carrying the last iterate) when
    ``max_iter`` is exhausted.
    """
    if p < 0 or q < 0:
        raise ParameterError(f"orders must be >= 0, got ({p}, {q})")
    r = np.asarray(series, dtype=np.float64)
    n = r.size
    if n <= 10 * (p + q + 1):
        raise DataError(f"ARMA({p},{q}) needs more than {10 * (p + q + 1)} observations, got {n}")
    start = p if start is None else start
    if start < p:
        raise ParameterError(f"start {start} must be >= p = {p}")
    n_eff = n - start

    def build(beta, iterations=0):
        a = css_residuals(r, beta[0], beta[1 : 1 + p], beta[1 + p :], start)
        css = float(a @ a)
        return ArmaModel(p, q, float(beta[0]), beta[1 : 1 + p], beta[1 + p :], css / n_eff, n_eff,
                         _gaussian_loglik(css, n_eff), start, iterations)

    if q == 0:
        X = np.column_stack([np.ones(n_eff), _lagmat(r, p, start)])
        beta, *_ = np.linalg.lstsq(X, r[start:], rcond=None)
        return build(beta)

    def objective(beta):
        with np.errstate(over="ignore", invalid="ignore"):
            a = css_residuals(r, beta[0], beta[1 : 1 + p], beta[1 + p :], start)
            val = float(a @ a) / n_eff
        return val if math.isfinite(val) else math.inf

    def gradient(beta):
        g = np.empty_like(beta)
        for i in range(beta.size):
            h = 1e-6 * max(1.0, abs(beta[i]))
            up, dn = beta.copy(), beta.copy()
            up[i] += h
            dn[i] -= h
            g[i] = (objective(up) - objective(dn)) / (2.0 * h)
        return g

    beta = _hannan_rissanen(r, p, q, start)
    f = objective(beta)
    g = gradient(beta)
    eta = 0.1
    for it in range(1, max_iter + 1):
        if float(np.linalg.norm(g)) < 1e-9:
            return build(beta, it)
        for _ in range(60):
            cand = sgd_step(beta, g, eta)
            f_new = objective(cand)
            if f_new < f:
                break
            eta *= 0.5
        else:
            return build(beta, it)  # no descent direction left at working precision
        g_new = gradient(cand)
        s_k, y_k = cand - beta, g_new - g
        curv = float(s_k @ y_k)
        # Barzilai-Borwein step length for the next iteration
        eta = float(s_k @ s_k) / curv if curv > 0 else 2.0 * eta
        decrease = f - f_new
        beta, f, g = cand, f_new, g_new
        if decrease <= tol * f:
            return build(beta, it)
    raise ConvergenceError(f"ARMA({p},{q}) CSS did not converge in {max_iter} iterations", last=build(beta, max_iter))


def information_criteria(model: ArmaModel) -> dict:
    return {"aic": model.aic, "bic": model.bic}


def auto_order(series, p_max: int, q_max: int, criterion: str = "bic"):
    """Exhaustive (p, q) grid; returns (p, q, model) minimizing AIC or BIC.

    All candidates condition on the same first ``p_max`` observations so their
    likelihoods are comparable. Ties go to smaller p + q, then smaller p.
    """
    if p_max < 0 or q_max < 0:
        raise ParameterError("p_max and q_max must be >= 0")
    if criterion not in ("aic", "bic"):
        raise ParameterError(f"criterion must be 'aic' or 'bic', got {criterion!r}")
    best = None
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            try:
                m = fit_arma(series, p, q, start=p_max)
            except (ConvergenceError, DataError, np.linalg.LinAlgError) as exc:
                log.info("skipping ARMA(%d,%d): %s", p, q, exc)
                continue
            key = (getattr(m, criterion), p + q, p)
            if best is None or key < best[0]:
                best = (key, m)
    if best is None:
        raise ConvergenceError("no ARMA order in the grid could be fitted")
    m = best[1]
    return m.p, m.q, m


def _residual_history(model: ArmaModel, r):
    a = np.zeros(r.size)
    start = max(model.p, 0)
    if r.size > start:
        a[start:] = css_residuals(r, model.phi_0, model.phi, model.theta, start)
    return a


def forecast(model: ArmaModel, series, h: int) -> np.ndarray:
    """h-step conditional-expectation forecasts from the end of ``series``."""
    if h < 0:
        raise ParameterError(f"horizon must be >= 0, got {h}")
    r = list(np.asarray(series, dtype=np.float64))
    a = list(_residual_history(model, np.asarray(r)))
    out = []
    for _ in range(h):
        val = model.phi_0
        for i in range(1, model.p + 1):
            val += model.phi[i - 1] * r[-i]
        for j in range(1, model.q + 1):
            val -= model.theta[j - 1] * a[-j]
        out.append(val)
        r.append(val)
        a.append(0.0)  # future innovations have zero expectation
    return np.array(out)


def one_step_predictions(model: ArmaModel, series, start: int) -> np.ndarray:
    """Predictions of r_t from data up to t-1 for t = start..n-1, parameters held fixed."""
    r = np.asarray(series, dtype=np.float64)
    a = _residual_history(model, r)
    return r[start:] - a[start:]


def simulate_arma(phi, theta, n: int, sigma: float = 1.0, phi_0: float = 0.0, seed: int = 0, burn: int = 500) -> np.ndarray:
    rng = np.random.default_rng(seed)
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    a = rng.normal(0.0, sigma, n + burn)
    # (1 - sum phi L^i) r = phi_0 + (1 - sum theta L^j) a
    r = lfilter(np.concatenate([[1.0], -theta]), np.concatenate([[1.0], -phi]), a)
    mean = phi_0 / (1.0 - phi.sum()) if phi.size else phi_0
    return r[burn:] + mean

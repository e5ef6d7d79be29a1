"""Closed-form exponents, the regime classifier, and the sup-norm bound machinery.

Every function here is pure arithmetic on the parameter tuple (N, p, alpha, m);
m may be math.inf to express bounded data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import NoConvergence, OutOfRegime

NAN = float("nan")


def _check_Np(N: int, p: float):
    if N < 1 or p <= 1.0:
        raise OutOfRegime(f"need N >= 1 and p > 1, got N={N}, p={p}")


def m_star(N: int, p: float, alpha: float) -> float:
    """Critical summability N p / (N p - (1-alpha)(N-p)).

    Data integrability above this threshold yields full gradient
    integrability of the solution; below it only a weaker exponent.
    Defined for 1 < p < N and 0 < alpha < 1, where it exceeds 1.
    """
    _check_Np(N, p)
    if p >= N:
        raise OutOfRegime(f"m_star needs p < N, got p={p}, N={N}")
    if not 0.0 < alpha < 1.0:
        raise OutOfRegime(f"m_star needs 0 < alpha < 1, got {alpha}")
    return N * p / (N * p - (1.0 - alpha) * (N - p))


def q_star(N: int, p: float, alpha: float, m: float) -> float:
    """Weakened gradient exponent N m (p+alpha-1) / (N - m(1-alpha))."""
    _check_Np(N, p)
    if m < 1.0:
        raise OutOfRegime(f"q_star needs m >= 1, got {m}")
    if math.isinf(m):
        raise OutOfRegime("q_star needs finite m")
    den = N - m * (1.0 - alpha)
    if den <= 0.0:
        raise OutOfRegime(f"q_star denominator N - m(1-alpha) = {den} <= 0")
    return N * m * (p + alpha - 1.0) / den


def s_max(N: int, p: float, alpha: float, m: float) -> float:
    """Largest Lebesgue exponent in the low-summability regime.

    alpha = 1 gives p N m / (N - p m); otherwise N m (p+alpha-1) / (N - p m)
    (the two coincide at alpha = 1).  Requires m < N/p; above that the
    bounded regime applies instead.
    """
    _check_Np(N, p)
    if m < 1.0:
        raise OutOfRegime(f"s_max needs m >= 1, got {m}")
    if not m < N / p:
        raise OutOfRegime(f"s_max needs m < N/p = {N / p}, got m={m}")
    if alpha == 1.0:
        return p * N * m / (N - p * m)
    return N * m * (p + alpha - 1.0) / (N - p * m)


@dataclass(frozen=True)
class H1Result:
    holds: bool
    branch: str  # "small_p", "large_p", or "none"


def check_H1(N: int, p: float, alpha: float, m: float) -> H1Result:
    """Structural hypothesis for the weakened-space existence result.

    Branch small_p: 1 < p < sqrt(N), alpha < (N - p^2)/(N(p+1)), and m in
    (Np/(N(p+alpha-1)+p^2), m_star).  Branch large_p: sqrt(N) <= p < N,
    alpha < 1 - 1/m, and m in (1, m_star).
    """
    _check_Np(N, p)
    if p < N and 0.0 < alpha < 1.0:
        ms = m_star(N, p, alpha)
        root = math.sqrt(N)
        if 1.0 < p < root and alpha < (N - p * p) / (N * (p + 1.0)):
            lo = N * p / (N * (p + alpha - 1.0) + p * p)
            if lo < m < ms:
                return H1Result(True, "small_p")
        if root <= p < N and m > 1.0 and alpha < 1.0 - 1.0 / m:
            if 1.0 < m < ms:
                return H1Result(True, "large_p")
    return H1Result(False, "none")


CASES = (
    "T2_1_Linf",
    "T2_1_Ls",
    "T3_1_W1p_Linf",
    "T3_1_W1p_Ls",
    "T3_2_W1q_H1",
    "T4_1_L1_data",
    "T4_2_unique_W1p",
    "T4_3_not_W1p",
    "open_alpha_2",
    "unclassified",
)


@dataclass(frozen=True)
class RegimeInput:
    N: int
    p: float
    alpha: float
    m: float  # math.inf expresses bounded data

    def __post_init__(self):
        if self.N < 1:
            raise OutOfRegime(f"N must be >= 1, got {self.N}")
        if self.p <= 1.0:
            raise OutOfRegime(f"p must exceed 1, got {self.p}")
        if self.alpha <= 0.0:
            raise OutOfRegime(f"alpha must be positive, got {self.alpha}")
        if self.m < 1.0:
            raise OutOfRegime(f"m must be >= 1 (or inf), got {self.m}")


@dataclass(frozen=True)
class RegimeReport:
    case: str
    m_star: float
    q_star: float
    s_max: float
    sigma: float
    predicted_space: str

    def to_csv(self, inp: RegimeInput | None = None) -> str:
        cols = ["case", "m_star", "q_star", "s_max", "sigma", "predicted_space"]
        vals = [self.case] + [
            format(v, ".12g")
            for v in (self.m_star, self.q_star, self.s_max, self.sigma)
        ] + [self.predicted_space]
        if inp is not None:
            cols = ["N", "p", "alpha", "m"] + cols
            vals = [str(inp.N), format(inp.p, ".12g"), format(inp.alpha, ".12g"),
                    format(inp.m, ".12g")] + vals
        return ",".join(cols) + "\n" + ",".join(vals) + "\n"


def _bounded_window(N, p, m):
    # sub-case for bounded solutions: m > N/p together with 2 - 2/m < p < N
    return m > N / p and 2.0 - 2.0 / m < p < N


def classify_regime(inp: RegimeInput) -> RegimeReport:
    """Map a parameter tuple to the matching existence/regularity case.

    Exactly one case is returned; tuples matching no stated hypothesis come
    back as "unclassified" rather than being force-fitted.
    """
    N, p, alpha, m = inp.N, inp.p, inp.alpha, inp.m
    ms = qs = sm = sg = NAN
    if p < N and 0.0 < alpha < 1.0:
        ms = m_star(N, p, alpha)
    if alpha > 1.0:
        sg = p / (p - 1.0 + alpha)

    if alpha == 1.0:
        if _bounded_window(N, p, m):
            return RegimeReport("T2_1_Linf", ms, qs, sm, sg,
                                "W0^{1,p}, bounded")
        if 1.0 <= m < N / p:
            sm = s_max(N, p, alpha, m)
            return RegimeReport("T2_1_Ls", ms, qs, sm, sg,
                                f"W0^{{1,p}}, L^s up to s={sm:g}")
        return RegimeReport("unclassified", ms, qs, sm, sg, "")

    if 0.0 < alpha < 1.0:
        if math.isnan(ms):
            return RegimeReport("unclassified", ms, qs, sm, sg, "")
        if m >= ms:
            if _bounded_window(N, p, m):
                return RegimeReport("T3_1_W1p_Linf", ms, qs, sm, sg,
                                    "W0^{1,p}, bounded")
            if m < N / p:
                sm = s_max(N, p, alpha, m)
                return RegimeReport("T3_1_W1p_Ls", ms, qs, sm, sg,
                                    f"W0^{{1,p}}, L^s up to s={sm:g}")
            return RegimeReport("unclassified", ms, qs, sm, sg, "")
        h1 = check_H1(N, p, alpha, m)
        if h1.holds:
            qs = q_star(N, p, alpha, m)
            return RegimeReport("T3_2_W1q_H1", ms, qs, sm, sg,
                                f"W^{{1,q}} up to q={qs:g} (< p)")
        return RegimeReport("unclassified", ms, qs, sm, sg, "")

    # alpha > 1
    if math.isinf(m):
        if alpha < 2.0:
            return RegimeReport("T4_2_unique_W1p", ms, qs, sm, sg,
                                "unique positive solution in W0^{1,p}")
        if alpha == 2.0:
            return RegimeReport("open_alpha_2", ms, qs, sm, sg,
                                "open: criticality of alpha = 2 unresolved")
        return RegimeReport("T4_3_not_W1p", ms, qs, sm, sg,
                            "not in W0^{1,p} (envelope u <= b Phi^sigma)")
    if p < N and m < N / p:
        sm = s_max(N, p, alpha, m)
    return RegimeReport("T4_1_L1_data", ms, qs, sm, sg,
                        "u^{(p+alpha-1)/p} in W0^{1,p}")


@dataclass(frozen=True)
class MoserSequences:
    delta: float
    beta: tuple[float, ...]
    beta_star: tuple[float, ...]


def _moser_setup(N, p, m):
    _check_Np(N, p)
    if p >= N:
        raise OutOfRegime(f"need p < N, got p={p}, N={N}")
    if not m > N / p:
        raise OutOfRegime(f"need m > N/p = {N / p}, got m={m}")
    p_star = N * p / (N - p)
    m_conj = 1.0 if math.isinf(m) else m / (m - 1.0)
    delta = p_star / (p * m_conj)
    return p_star, m_conj, delta


def moser_sequences(N: int, p: float, m: float, K: int) -> MoserSequences:
    """Exponent ladder beta_{k+1} = (beta_k + p m') p*/(p m'), beta_1 = p m'."""
    if K < 1:
        raise ValueError("K must be positive")
    p_star, m_conj, delta = _moser_setup(N, p, m)
    beta = [p * m_conj]
    beta_star = [beta[0] + p * m_conj]
    for _ in range(K - 1):
        beta.append(beta_star[-1] * delta)
        beta_star.append(beta[-1] + p * m_conj)
    return MoserSequences(delta, tuple(beta), tuple(beta_star))


def beta_closed_form(N: int, p: float, m: float, k: int) -> float:
    """Fixed-point form of the ladder: (pm' + p*/(d-1)) d^(k-1) - p*/(d-1)."""
    p_star, m_conj, delta = _moser_setup(N, p, m)
    lead = p * m_conj + p_star / (delta - 1.0)
    return lead * delta ** (k - 1) - p_star / (delta - 1.0)


@dataclass(frozen=True)
class MoserReport:
    """Iterated sup-norm bound: F_{k+1} = lambda_k + delta F_k, d0 = lim F_k/beta_k."""

    delta: float
    beta: tuple[float, ...]
    beta_star: tuple[float, ...]
    lam: tuple[float, ...]
    b: float
    F: tuple[float, ...]
    d0: float
    sup_bound: float
    d0_closed_form: float
    mu: float
    C: float
    norm_f_m: float
    norm_f_1: float
    k_stabilized: int

    def to_csv(self) -> str:
        lines = ["k,beta,beta_star,lambda,F,F_over_beta"]
        for i, (bk, bs, lk, fk) in enumerate(
            zip(self.beta, self.beta_star, self.lam, self.F), start=1
        ):
            lines.append(
                f"{i},{bk:.12g},{bs:.12g},{lk:.12g},{fk:.12g},{fk / bk:.12g}"
            )
        return "\n".join(lines) + "\n"


def _d0_closed_form(N, p, m, delta, p_star, b, C, norm_f_1):
    if math.isinf(m):
        return NAN
    lead = ((N + p) * m - 2.0 * N) / ((m - 1.0) * (m * p - N))
    if lead <= 0.0:
        return NAN
    num = (delta - 1.0) ** 2 * math.log(C * norm_f_1 ** (1.0 / p)) \
        + delta * p_star * math.log(delta) + delta * b
    return (m - 1.0) * (m * p - N) * num / (
        (delta - 1.0) ** 2 * (N * m + p * m - 2.0 * N)
    )


def moser_bound(N: int, p: float, m: float, norm_f_m: float, norm_f_1: float,
                mu: float = 1.0, C: float = 1.0, max_iters: int = 200,
                stab_tol: float = 1e-8, stab_steps: int = 5) -> MoserReport:
    """Iterate the exponent ladder to the sup-norm bound exp(d0).

    lambda_k = p* ln(mu beta*_k ||f||_m^(1/p)); the starting value is
    F_1 = ln(C ||f||_1^(1/p)), the log of the first-rung norm bound.  d0 is
    detected by stabilization of F_k/beta_k (|change| < stab_tol over
    stab_steps consecutive steps).  A printed closed form for d0 is
    evaluated alongside for comparison; the iteration is authoritative
    because the printed ladder coefficients fail a deskcheck.
    """
    if min(norm_f_m, norm_f_1, mu, C) <= 0.0:
        raise ValueError("norms and constants must be positive")
    p_star, m_conj, delta = _moser_setup(N, p, m)
    pm = p * m_conj
    log_mu_f = math.log(mu * norm_f_m ** (1.0 / p))

    beta = [pm]
    beta_star = [2.0 * pm]
    F = [math.log(C * norm_f_1 ** (1.0 / p))]
    lam = [p_star * (log_mu_f + math.log(beta_star[0]))]
    ratios = [F[0] / beta[0]]
    k_stab = 0
    streak = 0
    for k in range(1, max_iters):
        beta.append(beta_star[-1] * delta)
        beta_star.append(beta[-1] + pm)
        F.append(lam[-1] + delta * F[-1])
        lam.append(p_star * (log_mu_f + math.log(beta_star[-1])))
        ratios.append(F[-1] / beta[-1])
        if abs(ratios[-1] - ratios[-2]) < stab_tol:
            streak += 1
            if streak >= stab_steps:
                k_stab = k + 1
                break
        else:
            streak = 0
    if k_stab == 0:
        raise NoConvergence(
            f"F_k/beta_k did not stabilize within {max_iters} steps "
            f"(delta = {delta:.4g})"
        )

    d0 = ratios[-1]
    if math.isinf(m):
        b = NAN
    else:
        lead = ((N + p) * m - 2.0 * N) / ((m - 1.0) * (m * p - N))
        b = p_star * math.log(mu * norm_f_m ** (1.0 / p) * lead) \
            if lead > 0.0 else NAN
    d0_cf = _d0_closed_form(N, p, m, delta, p_star, b, C, norm_f_1) \
        if not math.isnan(b) else NAN
    return MoserReport(
        delta=delta, beta=tuple(beta), beta_star=tuple(beta_star),
        lam=tuple(lam), b=b, F=tuple(F), d0=d0, sup_bound=math.exp(d0),
        d0_closed_form=d0_cf, mu=mu, C=C, norm_f_m=norm_f_m,
        norm_f_1=norm_f_1, k_stabilized=k_stab,
    )

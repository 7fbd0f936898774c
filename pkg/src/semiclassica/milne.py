"""Higher-order semiclassical series for the Milne wavelength.

For a zero-energy particle in V = -alpha^2 x^(2 nu) / 2m (m = 1) the local
momentum is p = alpha x^nu and the squared amplitude

    lambda = lambda_0 + hbar^2 lambda_1 + hbar^4 lambda_2 + ...,   lambda_0 = 1/p,

obeys lambda_n = -(1/4p) * integral(lambda'''_{n-1} / p dx) with every
integration constant set to zero. Each term is a single power of x, so the
recurrence runs on exact rationals and only the final evaluation uses mpmath.
The series diverges like (n!)^2 and its smallest term sits near n = S/hbar,
S being the action measured from the turning point (or from infinity when
nu < -1).

The late-term part runs the model recurrence dphi_n/dS = phi''_{n-1} + Q phi_{n-1},
Q = Q_coeff / S^2, and peels the Gamma(n - k) layers off the late terms.
"""

import logging
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np
from mpmath import mp

from .errors import NoMinimum, PeelingUnstable, PrecisionLoss, ValidationError
from .models import CriticalIndex, LateTermTable, PowerLawCase

logger = logging.getLogger(__name__)

MIN_PRECISION = 30
PEEL_AGREEMENT = "1e-12"
MIN_TRUSTED_ORDERS = 2
MAX_LEVELS = 3


def _rational(value: object) -> Fraction:
    if isinstance(value, Fraction):
        return value
    try:
        if isinstance(value, str):
            return Fraction(value.replace(" ", ""))
        return Fraction(float(value)).limit_denominator(10**9)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValidationError("nu must be a real number or a fraction", nu=str(value)) from exc


def _mpf(q: Fraction):
    return mp.mpf(q.numerator) / q.denominator


def _validate(case: PowerLawCase) -> Fraction:
    if not case.alpha > 0:
        raise ValidationError("alpha must be positive", alpha=case.alpha)
    if not case.x > 0:
        raise ValidationError("x must be positive", x=case.x)
    if case.precision < MIN_PRECISION:
        raise ValidationError("precision must be at least %d digits" % MIN_PRECISION, precision=case.precision)
    nu = _rational(case.nu)
    if nu == -1:
        raise ValidationError("nu = -1 is the excluded scaling point")
    return nu


def _rising(q: Fraction, n: int) -> Fraction:
    value = Fraction(1)
    for j in range(n):
        value *= q + j
    return value


def _power_terms(nu: Fraction, n_max: int) -> List[Tuple[Fraction, Fraction]]:
    """Exact (r_n, e_n) with lambda_n = r_n alpha^-(2n+1) x^e_n."""
    terms = [(Fraction(1), -nu)]
    for _ in range(n_max):
        r, e = terms[-1]
        third = r * e * (e - 1) * (e - 2)
        # integral of x^(e-3-nu) and the -1/4p prefactor
        integrated = third / (e - 2 - nu)
        terms.append((-integrated / 4, e - 2 - 2 * nu))
    return terms


def turning_action(case: PowerLawCase) -> float:
    """alpha x^(nu+1) / |nu+1|, the action between x and the far end of the orbit."""
    nu = _validate(case)
    return float(case.alpha * case.x ** float(nu + 1) / abs(float(nu + 1)))


def lambda_term_closed(case: PowerLawCase, n: int):
    """General term from the triple Gamma ratio.

    Gamma(n + a)/Gamma(a) is evaluated as an exact rising factorial, so the
    truncating families nu = -1 +- 1/(2q + 1) give exact zeros rather than
    Gamma poles.
    """
    nu = _validate(case)
    if n < 0:
        raise ValidationError("n must be non-negative", n=n)
    a = nu / (2 * (nu + 1))
    b = (nu + 2) / (2 * (nu + 1))
    prefactor = _rising(a, n) * _rising(Fraction(1, 2), n) * _rising(b, n) * (nu + 1) ** (2 * n)
    sign = -1 if n % 2 else 1
    with mp.workdps(case.precision):
        alpha = mp.mpf(case.alpha)
        x = mp.mpf(case.x)
        nu_mp = _mpf(nu)
        scale = 1 / (alpha * mp.power(x, nu_mp + 1))
        value = sign * _mpf(prefactor) / mp.factorial(n) * scale ** (2 * n) * mp.power(x, -nu_mp) / alpha
        return +value


def lambda_recurrence(case: PowerLawCase, n_max: int) -> list:
    """lambda_0 .. lambda_{n_max} at case.x from the two-term recurrence."""
    nu = _validate(case)
    if n_max < 1:
        raise ValidationError("n_max must be at least 1", n_max=n_max)
    terms = _power_terms(nu, n_max)
    with mp.workdps(case.precision):
        alpha = mp.mpf(case.alpha)
        x = mp.mpf(case.x)
        return [_mpf(r) / alpha ** (2 * n + 1) * mp.power(x, _mpf(e)) for n, (r, e) in enumerate(terms)]


def term_ratio(case: PowerLawCase, n: int) -> float:
    """|lambda_{n+1} / lambda_n|; grows where the expansion deteriorates."""
    current = lambda_term_closed(case, n)
    if current == 0:
        raise NoMinimum("series has terminated before n = %d" % n, n=n)
    return float(abs(lambda_term_closed(case, n + 1) / current))


def critical_index(case: PowerLawCase, hbar: float, n_terms: int = 0) -> CriticalIndex:
    """Index of the smallest term |hbar^2n lambda_n| and its analytic prediction S/hbar."""
    _validate(case)
    if not hbar > 0:
        raise ValidationError("hbar must be positive", hbar=hbar)
    prediction = turning_action(case) / hbar
    n_terms = n_terms or int(2 * prediction) + 20
    lambdas = lambda_recurrence(case, n_terms)
    with mp.workdps(case.precision):
        h2 = mp.mpf(hbar) ** 2
        terms = [abs(lam) * h2**n for n, lam in enumerate(lambdas)]
    for n, term in enumerate(terms):
        if term == 0:
            raise NoMinimum("series terminates at n = %d" % (n - 1), last=n - 1)
    index = min(range(len(terms)), key=terms.__getitem__)
    if index == len(terms) - 1:
        raise NoMinimum("terms still decreasing at n = %d" % index, n_terms=n_terms)
    logger.debug("critical index %d (predicted %.3f)", index, prediction)
    return CriticalIndex(index=index, prediction=prediction, terms=terms)


def truncated_lambda(case: PowerLawCase, hbar: float, n_terms: int):
    """Sum of the first n_terms terms hbar^2n lambda_n."""
    if n_terms < 1:
        raise ValidationError("n_terms must be at least 1", n_terms=n_terms)
    lambdas = lambda_recurrence(case, max(n_terms - 1, 1))[:n_terms]
    with mp.workdps(case.precision):
        h2 = mp.mpf(hbar) ** 2
        terms = [lam * h2**n for n, lam in enumerate(lambdas)]
        total = mp.fsum(terms)
        largest = max(abs(t) for t in terms)
        if total == 0 or abs(total) < largest * mp.mpf(10) ** (10 - case.precision):
            raise PrecisionLoss("partial sum cancelled below working precision", precision=case.precision)
        return total


def exact_airy_lambda(case: PowerLawCase, hbar: float):
    """Exact Milne wavelength for the linear turning point nu = 1/2.

    psi'' + (alpha/hbar)^2 x psi = 0 is solved by Ai(-beta x), Bi(-beta x)
    with beta = (alpha/hbar)^(2/3); the Wronskian normalisation makes
    lambda -> 1/p far from the turning point.
    """
    nu = _validate(case)
    if nu != Fraction(1, 2):
        raise ValidationError("the Airy reference exists only for nu = 1/2", nu=str(nu))
    if not hbar > 0:
        raise ValidationError("hbar must be positive", hbar=hbar)
    with mp.workdps(case.precision):
        alpha = mp.mpf(case.alpha)
        beta = mp.cbrt((alpha / hbar) ** 2)
        y = -beta * mp.mpf(case.x)
        return mp.pi * mp.sqrt(beta) / alpha * (mp.airyai(y) ** 2 + mp.airybi(y) ** 2)


def growth_exponent(terms: Sequence, start: int = 5) -> float:
    """Coefficient of n ln n in a least-squares fit of ln|t_n|.

    The basis [n ln n, n, ln n, 1] absorbs the Stirling corrections, so a
    (n!)^2 growth gives a value close to 2.
    """
    rows = [(n, float(mp.log(abs(t)))) for n, t in enumerate(terms) if n >= max(start, 2) and t != 0]
    if len(rows) < 6:
        raise ValidationError("need at least six non-zero terms to fit the growth", count=len(rows))
    n = np.array([r[0] for r in rows], dtype=float)
    logs = np.array([r[1] for r in rows])
    basis = np.column_stack([n * np.log(n), n, np.log(n), np.ones_like(n)])
    coefficients, *_ = np.linalg.lstsq(basis, logs, rcond=None)
    return float(coefficients[0])


def late_term_coefficients(q_coeff, n_max: int) -> list:
    """c_n with phi_n = c_n S^-n; c_0 = 1, c_n = -c_{n-1} (n(n-1) + Q) / n."""
    q = mp.mpf(q_coeff)
    coefficients = [mp.mpf(1)]
    for n in range(1, n_max + 1):
        coefficients.append(-coefficients[-1] * (n * (n - 1) + q) / n)
    return coefficients


def _extend(head: Sequence, q, n_max: int) -> list:
    sequence = list(head)
    for n in range(len(sequence), n_max + 1):
        sequence.append(-sequence[-1] * (n * (n - 1) + q) / n)
    return sequence


def stokes_closed_form(q_coeff) -> float:
    """sin(pi r)/pi with r the smaller root of r^2 - r + Q."""
    q = mp.mpf(q_coeff)
    r = (1 - mp.sqrt(1 - 4 * q)) / 2
    return float(mp.re(mp.sin(mp.pi * r) / mp.pi))


def _peel_window(sequence: Sequence, width: int, shift: int) -> list:
    # rows are scaled by Gamma(n) so that every entry is 1/rf(n - k, k)
    top = len(sequence) - 1 - shift
    matrix = mp.matrix(width, width)
    rhs = mp.matrix(width, 1)
    for i, n in enumerate(range(top - width + 1, top + 1)):
        sign = -1 if n % 2 else 1
        rhs[i] = sign * sequence[n] / mp.gamma(n)
        for k in range(width):
            matrix[i, k] = 1 / mp.rf(n - k, k)
    solution = mp.lu_solve(matrix, rhs)
    return [solution[k] for k in range(width)]


def _peel(sequence: Sequence, width: int) -> list:
    """Leading inverse-factorial coefficients a_k of (-1)^n u_n ~ sum Gamma(n-k) a_k.

    Only orders on which two adjacent collocation windows agree are kept.
    """
    first = _peel_window(sequence, width, 0)
    second = _peel_window(sequence, width, 1)
    tolerance = mp.mpf(PEEL_AGREEMENT)
    trusted = []
    for a, b in zip(first, second):
        if a == 0 or abs(a - b) > tolerance * abs(a):
            break
        trusted.append(a)
    if len(trusted) < MIN_TRUSTED_ORDERS:
        raise PeelingUnstable("collocation windows disagree; raise n_max", trusted=len(trusted), width=width)
    return trusted


def _recurrence_residual(coefficients: Sequence, q) -> float:
    worst = mp.mpf(0)
    for k in range(1, len(coefficients)):
        predicted = -coefficients[k - 1] * (k * (k - 1) + q) / k
        worst = max(worst, abs(coefficients[k] - predicted) / abs(coefficients[k]))
    return float(worst)


def _relative_mismatch(found: Sequence, reference: Sequence) -> float:
    return float(max(abs(a - b) / abs(b) for a, b in zip(found, reference)))


def dingle_self_similarity(q_coeff: float, n_max: int = 200, m_levels: int = 2, precision: int = 50, S: float = 1.0) -> LateTermTable:
    """Late terms of the 1/S^2 model kernel and their self-similar layers.

    Level m peels the sequence built from the level m-1 coefficients
    (trusted head, then continued by the same recurrence). Each level's
    normalised coefficients must reproduce the recurrence and the previous
    level.
    """
    if n_max < 20:
        raise ValidationError("n_max must be at least 20", n_max=n_max)
    if not 1 <= m_levels <= MAX_LEVELS:
        raise ValidationError("m_levels must be between 1 and %d" % MAX_LEVELS, m_levels=m_levels)
    if precision < MIN_PRECISION:
        raise ValidationError("precision must be at least %d digits" % MIN_PRECISION, precision=precision)
    if not S > 0:
        raise ValidationError("S must be positive", S=S)

    width = n_max // 5
    levels: List[list] = []
    stokes: List[float] = []
    trusted: List[int] = []
    residuals: List[float] = []
    mismatches: List[float] = []
    with mp.workdps(precision + 2 * width + 20):
        q = mp.mpf(q_coeff)
        base = late_term_coefficients(q, n_max)
        if any(c == 0 for c in base):
            raise PeelingUnstable("late-term series terminates; nothing to peel", q_coeff=q_coeff)
        sequence = base
        previous = base
        for level in range(1, m_levels + 1):
            coefficients = _peel(sequence, width)
            constant = coefficients[0]
            normalized = [a / constant for a in coefficients]
            stokes.append(float(constant))
            trusted.append(len(normalized))
            residuals.append(_recurrence_residual(normalized, q))
            mismatches.append(_relative_mismatch(normalized, previous))
            logger.debug("level %d: stokes %s over %d orders", level, mp.nstr(constant, 15), len(normalized))
            levels.append([+c for c in normalized])
            previous = normalized
            sequence = _extend(normalized, q, n_max)

        ratio = abs(base[n_max]) / (abs(base[n_max - 1]) * (n_max - 1))
        layer = [mp.gamma(n_max - k) * abs(base[k]) for k in range(n_max)]
        sub_minimum = min(range(n_max), key=layer.__getitem__)

    with mp.workdps(precision):
        s = mp.mpf(S)
        phi = [+(c / s**n) for n, c in enumerate(base)]
        levels = [[+c for c in level] for level in levels]

    report = {
        "q_coeff": float(q_coeff),
        "width": width,
        "stokes": stokes,
        "stokes_closed_form": stokes_closed_form(q_coeff),
        "trusted_orders": trusted,
        "recurrence_residual": residuals,
        "mismatch": mismatches,
        "ratio_test": float(ratio),
        "sub_minimum": sub_minimum,
        "sub_minimum_prediction": n_max / 2,
    }
    return LateTermTable(S=S, n=list(range(n_max + 1)), phi=phi, levels=levels, report=report)

"""
타원 커널 모듈
야코비 세타 함수, 야코비 타원 함수, 타원 모듈러스/적분, 항등식 검증 배터리

규약:
  θ[m,n](z|τ) = Σ_k exp(iπτ(k+m/2)² + 2iπ(k+m/2)(z+n/2))
  θ11 = -θ1(πz), θ10 = θ2(πz), θ00 = θ3(πz), θ01 = θ4(πz)
  K = (π/2)·θ00(0)², K' = -iτK
  jacobi() 는 hat 인자 û = 2K·u 를 받는다 (u 는 토러스 좌표).
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special
from scipy.optimize import brentq

from config import SERIES_CONFIG, TOLERANCES
from errors import DomainError, NonConvergent, OutOfRange, PoleHit, ThetaOverflow

logger = logging.getLogger(__name__)

Number = Union[complex, float, np.ndarray]

JACOBI_NAMES = ('sn', 'cn', 'dn', 'ns', 'nc', 'nd', 'sc', 'sd', 'cs', 'cd', 'ds', 'dc')


class ThetaChar(NamedTuple):
    """세타 특성 (m, n)"""
    m: int
    n: int

    @classmethod
    def of(cls, m: int, n: int) -> 'ThetaChar':
        return cls(int(m) % 2, int(n) % 2)


class HalfPeriod(NamedTuple):
    """반주기 ρ = j/2 + (l/2)τ"""
    j: int
    l: int

    def value(self, tau: complex) -> complex:
        if self.l % 2 == 0:
            return self.j % 2 / 2
        return (self.j % 2) / 2 + tau / 2

    @property
    def is_zero(self) -> bool:
        return self.j % 2 == 0 and self.l % 2 == 0

    def label(self) -> str:
        parts = []
        if self.j % 2:
            parts.append('1/2')
        if self.l % 2:
            parts.append('tau/2')
        return '+'.join(parts) or '0'


TH00 = ThetaChar(0, 0)
TH01 = ThetaChar(0, 1)
TH10 = ThetaChar(1, 0)
TH11 = ThetaChar(1, 1)


@dataclass(frozen=True)
class TorusParams:
    """토러스 ℂ/(ℤ+τℤ) 와 타원 모듈러스 묶음"""
    tau: complex
    q: complex
    k: complex
    kprime: complex
    K: complex
    Kprime: complex

    @property
    def trig(self) -> bool:
        """k = 0 삼각함수 퇴화 여부"""
        return self.q == 0

    @property
    def is_rectangular(self) -> bool:
        """τ ∈ iℝ⁺ 여부"""
        if self.trig:
            return True
        return abs(self.tau.real) <= 1e-14 * abs(self.tau)

    @property
    def real_k(self) -> Optional[float]:
        """k 가 [0,1) 실수이면 float, 아니면 None"""
        if abs(complex(self.k).imag) > 1e-13:
            return None
        k = float(complex(self.k).real)
        if -1e-15 <= k < 1.0:
            return max(k, 0.0)
        return None

    def lattice_point(self, a: int, b: int) -> complex:
        """a + bτ (삼각 퇴화에서는 b = 0 만 허용)"""
        if self.trig:
            if b:
                raise DomainError("삼각 퇴화에서 τ 주기는 무한대입니다", witness=b)
            return complex(a)
        return a + b * self.tau

    def reduce(self, z: complex) -> Tuple[complex, int, int]:
        """z = z0 + b + aτ 로 분해, |Im z0| ≤ Im τ/2, |Re z0| ≤ 1/2"""
        z = complex(z)
        if self.trig:
            b = round(z.real)
            return z - b, 0, b
        a = round(z.imag / self.tau.imag)
        z1 = z - a * self.tau
        b = round(z1.real)
        return z1 - b, a, b

    def equal_mod_lattice(self, x: complex, y: complex, tol: float = 1e-9) -> bool:
        z0, _, _ = self.reduce(complex(x) - complex(y))
        return abs(z0) <= tol

    @classmethod
    def from_tau(cls, tau: complex) -> 'TorusParams':
        return modulus_suite(tau)

    @classmethod
    def from_modulus(cls, k: float) -> 'TorusParams':
        """실수 k ∈ [0,1) 에서 τ = iK'/K"""
        k = float(k)
        if not 0.0 <= k < 1.0:
            raise DomainError(f"모듈러스 범위 초과: k={k}", witness=k)
        if k == 0.0:
            return trigonometric_params()
        m = k * k
        K = float(special.ellipk(m))
        Kp = float(special.ellipkm1(m))
        return modulus_suite(1j * Kp / K)


def trigonometric_params() -> TorusParams:
    """k = 0 퇴화 (q = 0, K = π/2, K' = ∞)"""
    return TorusParams(tau=complex(0, math.inf), q=0j, k=0j, kprime=1 + 0j,
                       K=complex(math.pi / 2), Kprime=complex(math.inf))


# =============================================================================
# 세타 함수
# =============================================================================

def _char_sign(m: int, n: int) -> Tuple[int, int, int]:
    """θ[m,n] = sign·θ[m0,n0] 로 특성 축약"""
    m0, n0 = m % 2, n % 2
    sign = -1 if (m0 * ((n - n0) // 2)) % 2 else 1
    return m0, n0, sign


def _series_terms(tau: complex) -> int:
    eps = SERIES_CONFIG['eps']
    target = -math.log(eps) + 2.0
    im = tau.imag
    if im <= 0:
        raise NonConvergent(f"Im τ ≤ 0: {tau}", witness=tau)
    n = 1
    while math.pi * im * (n * n - n) <= target:
        n += 1
        if n > SERIES_CONFIG['max_terms']:
            raise NonConvergent(f"세타 급수가 {SERIES_CONFIG['max_terms']}항 안에 수렴하지 않음 (τ={tau})", witness=tau)
    return n


def _theta_reduced(m0: int, n0: int, z0: np.ndarray, tau: complex) -> np.ndarray:
    N = _series_terms(tau)
    ks = np.arange(-N - 1, N + 2, dtype=float) + m0 / 2
    z = z0[..., None] + n0 / 2
    expo = 1j * math.pi * tau * ks * ks + 2j * math.pi * ks * z
    return np.exp(expo).sum(axis=-1)


def _theta_trig(m0: int, n0: int, z: np.ndarray) -> np.ndarray:
    # q^{m/4} 인자를 뺀 선도항 (비율에서만 의미가 있음)
    if m0 == 0:
        return np.ones_like(z, dtype=complex)
    if n0 == 0:
        return 2 * np.cos(np.pi * z)
    return -2 * np.sin(np.pi * z)


def theta(char: Union[ThetaChar, Tuple[int, int]], z: Number, tp: TorusParams) -> Number:
    """
    세타 함수 θ[m,n](z|τ)

    Args:
        char: 특성 (m, n); 0/1 밖의 정수도 허용 (θ[m+2,n]=θ[m,n], θ[m,n+2]=(-1)^m θ[m,n])
        z: 스칼라 또는 numpy 배열
        tp: 토러스 파라미터

    Returns:
        z 와 같은 모양의 복소수 값
    """
    m, n = char
    m0, n0, sign = _char_sign(int(m), int(n))
    scalar = np.isscalar(z) or np.ndim(z) == 0
    zz = np.asarray(z, dtype=complex)

    if tp.trig:
        out = sign * _theta_trig(m0, n0, zz)
        return complex(out) if scalar else out

    tau = tp.tau
    if tau.imag <= 0:
        raise NonConvergent(f"Im τ ≤ 0: {tau}", witness=tau)

    a = np.rint(zz.imag / tau.imag)
    z1 = zz - a * tau
    b = np.rint(z1.real)
    z0 = z1 - b

    log_pref = -1j * math.pi * tau * a * a - 2j * math.pi * a * z0
    if np.any(np.real(log_pref) > SERIES_CONFIG['overflow_log']):
        raise ThetaOverflow(f"세타 스케일 인자가 부동소수 범위를 초과 (|Im z| 과대)", witness=complex(np.max(np.abs(zz.imag))))
    parity = np.where(((m0 * b + n0 * a) % 2) != 0, -1.0, 1.0)
    out = sign * parity * np.exp(log_pref) * _theta_reduced(m0, n0, z0, tau)
    return complex(out) if scalar else out


def half_period_shift(char: Union[ThetaChar, Tuple[int, int]], z: complex, j: int, l: int,
                      tp: TorusParams) -> complex:
    """θ[m,n](z + j/2 + lτ/2) 를 θ[m+l, n+j](z) 로 표현한 값"""
    m, n = char
    if l % 2 and tp.trig:
        raise DomainError("삼각 퇴화에서 τ/2 반주기 이동은 정의되지 않습니다", witness=(j, l))
    pref = 1 + 0j
    if l % 2:
        pref = cmath.exp(-1j * math.pi * tp.tau / 4 - 1j * math.pi * z - 1j * math.pi * (n + j) / 2)
    return pref * theta((m + l, n + j), z, tp)


# =============================================================================
# 모듈러스
# =============================================================================

def modulus_suite(tau: complex) -> TorusParams:
    """
    τ 에서 (q, k, k', K, K') 계산

    k = θ10²(0)/θ00²(0), k' = θ01²(0)/θ00²(0), K = (π/2)θ00²(0), K' = -iτK.
    τ ∈ iℝ⁺ 이면 AGM 경로 (scipy.special.ellipk) 와 교차 검증.
    """
    tau = complex(tau)
    if not tau.imag > 0:
        raise DomainError(f"Im τ > 0 이어야 합니다: {tau}", witness=tau)

    bare = TorusParams(tau=tau, q=cmath.exp(1j * math.pi * tau), k=0j, kprime=0j, K=0j, Kprime=0j)
    t00 = theta(TH00, 0.0, bare)
    t01 = theta(TH01, 0.0, bare)
    t10 = theta(TH10, 0.0, bare)

    k = t10 ** 2 / t00 ** 2
    kp = t01 ** 2 / t00 ** 2
    K = math.pi / 2 * t00 ** 2
    Kp = -1j * tau * K

    if abs(tau.real) <= 1e-14 * abs(tau):
        k, kp, K, Kp = complex(k.real), complex(kp.real), complex(K.real), complex(Kp.real)
        if 0.0 <= k.real < 1.0:
            K_agm = float(special.ellipk(k.real ** 2))
            gap = abs(K.real - K_agm) / K_agm
            if gap > 1e-10:
                raise NonConvergent(f"K 의 세타 경로와 AGM 경로 불일치: {gap:.3e}", witness=gap)

    return TorusParams(tau=tau, q=bare.q, k=k, kprime=kp, K=K, Kprime=Kp)


def modular_transform(tp: TorusParams, which: str) -> TorusParams:
    """생성원 S: τ → -1/τ, T: τ → τ+1"""
    if tp.trig:
        raise DomainError("삼각 퇴화에는 모듈러 변환을 적용할 수 없습니다")
    if which == 'S':
        return modulus_suite(-1 / tp.tau)
    if which == 'T':
        return modulus_suite(tp.tau + 1)
    raise DomainError(f"알 수 없는 생성원: {which}", witness=which)


def modular_normal_form(tau: complex, max_steps: int = 64) -> Tuple[complex, List[str]]:
    """
    τ 를 표준 기본 영역 (|Re τ| ≤ 1/2, |τ| ≥ 1) 으로 축약

    Returns:
        (축약된 τ, 적용한 생성원 목록; 'T', 'T-' (τ-1), 'S')
    """
    tau = complex(tau)
    if tau.imag <= 0:
        raise DomainError(f"Im τ > 0 이어야 합니다: {tau}", witness=tau)
    word: List[str] = []
    for _ in range(max_steps):
        shift = math.floor(tau.real + 0.5)
        if shift:
            word.extend(['T-' if shift > 0 else 'T'] * abs(shift))
            tau -= shift
        if abs(tau) < 1 - 1e-15:
            tau = -1 / tau
            word.append('S')
            continue
        return tau, word
    raise NonConvergent(f"모듈러 정규형 축약 실패: {tau}", witness=tau)


# =============================================================================
# 야코비 타원 함수
# =============================================================================

_LETTER_THETA = {'s': TH11, 'c': TH10, 'd': TH00, 'n': TH01}


def _letter_const(letter: str, tp: TorusParams) -> complex:
    if letter == 'n':
        return 1 + 0j
    t00 = theta(TH00, 0.0, tp)
    t01 = theta(TH01, 0.0, tp)
    t10 = theta(TH10, 0.0, tp)
    if letter == 's':
        return -t00 / t10
    if letter == 'c':
        return t01 / t10
    return t01 / t00


def _check_pole(num: complex, den: complex, name: str, u: complex) -> complex:
    if abs(den) < TOLERANCES['pole']:
        raise PoleHit(f"{name}({u}) 극점", witness=u)
    if abs(den) <= TOLERANCES['near_pole'] * abs(num):
        logger.warning(f"⚠️ {name}({u}) 극점 근처: |분모| = {abs(den):.3g}")
    return num / den


def jacobi(name: str, u: complex, tp: TorusParams) -> complex:
    """
    야코비 타원 함수 pq(û|k)

    Args:
        name: sn, cn, dn 및 역수/몫 (12종)
        u: hat 인자 û (= 2K × 토러스 좌표)
        tp: 토러스 파라미터

    Returns:
        복소수 값 (극점이면 PoleHit)
    """
    if name not in JACOBI_NAMES:
        raise DomainError(f"지원하지 않는 야코비 함수: {name}", witness=name)
    p, q = name[0], name[1]
    u = complex(u)

    k = tp.real_k
    if k is not None and abs(u.imag) == 0.0:
        sn, cn, dn, _ = special.ellipj(u.real, k * k)
        vals = {'s': sn, 'c': cn, 'd': dn, 'n': 1.0}
        return complex(_check_pole(vals[p], vals[q], name, u))

    v = u / (2 * tp.K)
    num = _letter_const(p, tp) * theta(_LETTER_THETA[p], v, tp)
    den = _letter_const(q, tp) * theta(_LETTER_THETA[q], v, tp)
    return _check_pole(num, den, name, u)


def jacobi_torus(name: str, x: complex, tp: TorusParams) -> complex:
    """토러스 좌표 x 에서 pq(2K·x)"""
    return jacobi(name, 2 * tp.K * complex(x), tp)


def inverse_jacobi(name: str, v: float, tp: TorusParams,
                   interval: Optional[Tuple[float, float]] = None) -> float:
    """
    (0, K] 구간에서 sc, ds 의 역함수

    sc: (0, ∞) → (0, K), ds: [k', ∞) → (0, K]
    """
    k = tp.real_k
    if k is None:
        raise DomainError("역 야코비 함수는 k ∈ [0,1) 에서만 정의됩니다", witness=tp.k)
    m = k * k
    kp = math.sqrt(1 - m)
    K = float(tp.K.real)
    lo, hi = interval if interval else (0.0, K)
    v = float(v)

    if name == 'sc':
        if v < 0:
            raise OutOfRange(f"sc 의 값 범위 밖: {v}", witness=v)
        if v == 0:
            return 0.0
        u = float(special.ellipkinc(math.atan(v), m))
    elif name == 'ds':
        if v < kp * (1 - 1e-14):
            raise OutOfRange(f"ds 의 값 범위 [{kp}, ∞) 밖: {v}", witness=v)
        s = min(1.0, 1.0 / math.sqrt(v * v + m))
        u = float(special.ellipkinc(math.asin(s), m))
    else:
        raise DomainError(f"역함수 미지원: {name}", witness=name)

    residual = abs(jacobi(name, u, tp).real - v) if 0 < u < K else 0.0
    if residual > TOLERANCES['kernel'] * max(1.0, abs(v)):
        logger.debug(f"🔧 역 {name} 보정: 잔차 {residual:.2e}")
        f = lambda x: jacobi(name, x, tp).real - v
        a, b = max(lo, 1e-300), hi * (1 - 1e-15)
        try:
            u = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        except ValueError as e:
            raise OutOfRange(f"역 {name} 구간 내 해 없음: {v}", witness=v) from e
    return u


# =============================================================================
# 항등식 배터리
# =============================================================================

@dataclass
class IdentityResult:
    """항등식 하나의 검증 결과"""
    name: str
    max_residual: float = 0.0
    samples: int = 0
    skipped: int = 0
    passed: bool = True

    def to_dict(self) -> Dict[str, object]:
        return {
            'max_residual': self.max_residual,
            'samples': self.samples,
            'skipped': self.skipped,
            'passed': self.passed,
        }


def _rel(lhs: complex, rhs: complex, scale: Optional[float] = None) -> Optional[float]:
    s = scale if scale is not None else max(abs(lhs), abs(rhs))
    if not np.isfinite(s) or s < 1e-250:
        return None
    return abs(lhs - rhs) / s


class _Collector:
    def __init__(self, name: str):
        self.result = IdentityResult(name)

    def add(self, residual: Optional[float]) -> None:
        if residual is None or not np.isfinite(residual):
            self.result.skipped += 1
            return
        self.result.samples += 1
        self.result.max_residual = max(self.result.max_residual, residual)


def _identities(tp: TorusParams, z: complex, w: complex) -> Iterable[Tuple[str, Optional[float]]]:
    tau = tp.tau
    chars = (TH00, TH01, TH10, TH11)

    for c in chars:
        sgn = -1 if c.m * c.n else 1
        yield 'parity', _rel(theta(c, -z, tp), sgn * theta(c, z, tp))
        yield 'period_1', _rel(theta(c, z + 1, tp), (-1) ** c.m * theta(c, z, tp))
        rhs = (-1) ** c.n * cmath.exp(-1j * math.pi * tau - 2j * math.pi * z) * theta(c, z, tp)
        yield 'period_tau', _rel(theta(c, z + tau, tp), rhs)
        for j, l in ((1, 0), (0, 1), (1, 1)):
            lhs = theta(c, z + j / 2 + l * tau / 2, tp)
            yield 'half_period', _rel(lhs, half_period_shift(c, z, j, l, tp))
        yield 'conjugation', _rel(
            theta(c, z, tp).conjugate(),
            theta(c, z.conjugate(), _conjugate_params(tp)))

    t11z, t11w = theta(TH11, z, tp), theta(TH11, w, tp)
    for c in (TH00, TH01, TH10):
        lhs = theta(TH11, z + w, tp) * theta(TH11, z - w, tp) * theta(c, 0.0, tp) ** 2
        a = t11z ** 2 * theta(c, w, tp) ** 2
        b = theta(c, z, tp) ** 2 * t11w ** 2
        yield 'addition', _rel(lhs, a - b, max(abs(lhs), abs(a), abs(b)))

    # 타원 함수 판정: ℓ = 1, b2 = a1 + a2 - b1 - τ
    a1, a2, b1 = 0.31 + 0.07 * tau, -0.22 + 0.41 * tau, 0.13 - 0.18 * tau
    b2 = a1 + a2 - b1 - tau

    def f(u):
        return (cmath.exp(-2j * math.pi * u) * theta(TH11, u - a1, tp) * theta(TH11, u - a2, tp)
                / (theta(TH11, u - b1, tp) * theta(TH11, u - b2, tp)))

    try:
        fz = f(z)
        yield 'meromorphy', _rel(f(z + 1), fz)
        yield 'meromorphy', _rel(f(z + tau), fz)
    except (ZeroDivisionError, OverflowError):
        yield 'meromorphy', None

    tps = modular_transform(tp, 'S')
    t1 = tps.tau
    root = cmath.sqrt(-1j * tau)
    gauss = cmath.exp(1j * math.pi * t1 * z * z)
    for c, c1, fac in ((TH11, TH11, -1j), (TH00, TH00, 1), (TH10, TH01, 1), (TH01, TH10, 1)):
        yield 'modular_S', _rel(root * theta(c, z, tp), fac * gauss * theta(c1, t1 * z, tps))

    tpt = modular_transform(tp, 'T')
    eighth = cmath.exp(1j * math.pi / 4)
    for c, c1, fac in ((TH11, TH11, eighth), (TH10, TH10, eighth), (TH00, TH01, 1), (TH01, TH00, 1)):
        yield 'modular_T', _rel(theta(c, z, tpt), fac * theta(c1, z, tp))

    yield from _landen(tp, z, w)


def _conjugate_params(tp: TorusParams) -> TorusParams:
    return modulus_suite(-tp.tau.conjugate())


def _landen(tp: TorusParams, a: complex, b: complex) -> Iterable[Tuple[str, Optional[float]]]:
    tp1 = modulus_suite(2 * tp.tau)
    tp2 = modulus_suite(2 * tp.tau - 1)
    try:
        lhs = jacobi_torus('sc', a, tp)
        rhs = (1 + tp1.k) * tp2.kprime * jacobi_torus('sc', a, tp2) * jacobi_torus('dn', a, tp2)
        yield 'landen_jacobi', _rel(lhs, rhs)
    except PoleHit:
        yield 'landen_jacobi', None

    num = theta(TH11, a, tp) * theta(TH10, b, tp)
    den = theta(TH10, a, tp) * theta(TH11, b, tp)
    num2 = theta(TH11, a, tp2) * theta(TH00, a, tp2) * theta(TH10, b, tp2) * theta(TH01, b, tp2)
    den2 = theta(TH10, a, tp2) * theta(TH01, a, tp2) * theta(TH11, b, tp2) * theta(TH00, b, tp2)
    if abs(den) < 1e-200 or abs(den2) < 1e-200:
        yield 'landen_theta', None
    else:
        yield 'landen_theta', _rel(num / den, num2 / den2)


IDENTITY_NAMES = ('parity', 'period_1', 'period_tau', 'half_period', 'conjugation', 'addition',
                  'meromorphy', 'modular_S', 'modular_T', 'landen_jacobi', 'landen_theta')


def identity_suite(tp: TorusParams, samples: Sequence[complex],
                   tol: Optional[float] = None) -> Dict[str, IdentityResult]:
    """
    세타 항등식 배터리

    각 항등식에 대해 샘플 전체의 최대 상대 잔차를 구하고 tol (기본 1e-11) 로 판정합니다.
    세타 영점 근처 등 퇴화 샘플은 건너뛰고 개수만 셉니다.
    """
    if tp.trig:
        raise DomainError("항등식 배터리는 k > 0 (유한 τ) 에서만 실행됩니다")
    tol = TOLERANCES['identity'] if tol is None else tol
    collectors = {name: _Collector(name) for name in IDENTITY_NAMES}

    samples = [complex(s) for s in samples]
    for i, z in enumerate(samples):
        w = 0.7 * samples[i - 1] + 0.1 if len(samples) > 1 else 0.3
        for name, residual in _identities(tp, z, w):
            collectors[name].add(residual)

    report = {}
    for name, col in collectors.items():
        col.result.passed = col.result.max_residual < tol
        report[name] = col.result
        if not col.result.passed:
            logger.warning(f"⚠️ 항등식 실패: {name} (잔차 {col.result.max_residual:.3e})")
    logger.debug(f"🧪 항등식 배터리 완료: τ={tp.tau}, 샘플 {len(samples)}개")
    return report

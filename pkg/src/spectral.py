"""
스펙트럼 곡선 모듈
세타 몫 매개화 Ψ(u) = (z(u), w(u)), 전역 스케일 피팅, 아메바/실수 궤적 샘플링, 자유에너지 적분

매개화 (G^Q 방향 트랙 T 마다 각도 α_T, 호몰로지 (h_T, v_T)):
  z(u) = c1·exp(2iπ ℓ_v u)·Π θ11(u - α_T)^(-v_T)
  w(u) = c2·exp(-2iπ ℓ_h u)·Π θ11(u - α_T)^(h_T)
  Σ α_T v_T - ℓ_v τ ∈ ℤ, Σ α_T h_T - ℓ_h τ ∈ ℤ 일 때만 토러스 위 유리형 함수입니다.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import least_squares

from config import SAMPLING_CONFIG, TOLERANCES
from elliptic_kernel import TH11, HalfPeriod, TorusParams, theta
from errors import DomainError, GridOnZero, IllConditioned, MalformedEmbedding, NonMeromorphic, SupportMismatch
from kasteleyn_poly import LaurentPoly2, dimer_charpoly, proportionality_scaled
from lattice import AngleMap, DecoratedGraph, PeriodicGraph

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]

COLUMNS = ['x', 'y', 'label']


# =============================================================================
# 매개화
# =============================================================================

@dataclass
class TrackTerm:
    """매개화의 한 인자: G^Q 방향 트랙의 각도와 호몰로지"""
    track: int
    parent: Tuple[int, int]
    alpha: complex
    h: int
    v: int


@dataclass
class CurveParam:
    """스펙트럼 곡선 매개화 데이터"""
    terms: List[TrackTerm]
    ell_v: int = 0
    ell_h: int = 0
    c1: complex = 1 + 0j
    c2: complex = 1 + 0j

    @property
    def pairs(self) -> Dict[int, Dict[str, Any]]:
        """G 트랙별 (α→, α←, h, v) 묶음 (→ 자식 호몰로지 기준)"""
        out: Dict[int, Dict[str, Any]] = {}
        for term in self.terms:
            track, direction = term.parent
            entry = out.setdefault(track, {})
            if direction == 1:
                entry.update(forward=term.alpha, h=term.h, v=term.v)
            else:
                entry['backward'] = term.alpha
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            'ell_v': self.ell_v,
            'ell_h': self.ell_h,
            'c1': [self.c1.real, self.c1.imag],
            'c2': [self.c2.real, self.c2.imag],
            'terms': [{'track': t.track, 'parent': list(t.parent), 'alpha': [t.alpha.real, t.alpha.imag],
                       'h': t.h, 'v': t.v} for t in self.terms],
        }


def _integer_exponent(total: complex, tp: TorusParams, name: str) -> int:
    """total - ℓτ ∈ ℤ 인 정수 ℓ (없으면 NonMeromorphic)"""
    tol = 1e-9
    if tp.trig:
        if abs(total.imag) > tol:
            raise NonMeromorphic(f"{name}: 삼각 퇴화에서 Σα·(호몰로지) 가 실수가 아닙니다 ({total})", witness=total)
        ell = 0
    else:
        ell = round(total.imag / tp.tau.imag)
        if abs(total.imag - ell * tp.tau.imag) > tol * max(1.0, abs(tp.tau)):
            raise NonMeromorphic(f"{name}: Σα·(호몰로지) = {total} 가 ℤ + ℤτ 에 없습니다", witness=total)
    rest = total - ell * (0 if tp.trig else tp.tau)
    if abs(rest.real - round(rest.real)) > tol:
        raise NonMeromorphic(f"{name}: Σα·(호몰로지) - {ell}τ = {rest} 가 정수가 아닙니다", witness=total)
    return int(ell)


def _check_param(cp: CurveParam, tp: TorusParams) -> None:
    if sum(t.v for t in cp.terms) or sum(t.h for t in cp.terms):
        raise NonMeromorphic("트랙 호몰로지 합이 0 이 아닙니다",
                             witness=(sum(t.h for t in cp.terms), sum(t.v for t in cp.terms)))
    total_v = sum(t.alpha * t.v for t in cp.terms)
    total_h = sum(t.alpha * t.h for t in cp.terms)
    if _integer_exponent(total_v, tp, 'z') != cp.ell_v:
        raise NonMeromorphic(f"ℓ_v = {cp.ell_v} 가 각도 조건과 맞지 않습니다", witness=cp.ell_v)
    if _integer_exponent(total_h, tp, 'w') != cp.ell_h:
        raise NonMeromorphic(f"ℓ_h = {cp.ell_h} 가 각도 조건과 맞지 않습니다", witness=cp.ell_h)


def curve_param_from_tracks(dg: DecoratedGraph, am: AngleMap, tp: TorusParams) -> CurveParam:
    """G^Q 트랙의 부모 표시와 각도 사상에서 CurveParam 생성 (ℓ_v, ℓ_h 계산 포함)"""
    if dg.kind != 'GQ':
        raise MalformedEmbedding(f"매개화에는 G^Q 가 필요합니다: {dg.kind}", witness=dg.kind)
    terms = []
    for track in dg.tracks.tracks:
        parent = dg.track_parent[track.id]
        h, v = track.homology
        terms.append(TrackTerm(track.id, parent, am.angle(parent), int(h), int(v)))

    total_v = sum(t.alpha * t.v for t in terms)
    total_h = sum(t.alpha * t.h for t in terms)
    cp = CurveParam(terms, _integer_exponent(total_v, tp, 'z'), _integer_exponent(total_h, tp, 'w'))
    _check_param(cp, tp)
    logger.debug(f"🌀 매개화: 인자 {len(terms)}개, ℓ_v={cp.ell_v}, ℓ_h={cp.ell_h}")
    return cp


class CurveEvaluator:
    """u ↦ (z(u), w(u)) 벡터화 평가기"""

    def __init__(self, cp: CurveParam, tp: TorusParams):
        self.cp = cp
        self.tp = tp

    def _factors(self, u: np.ndarray) -> Dict[int, np.ndarray]:
        return {t.track: theta(TH11, u - t.alpha, self.tp) for t in self.cp.terms}

    def __call__(self, u) -> Tuple[np.ndarray, np.ndarray]:
        uu = np.asarray(u, dtype=complex)
        factors = self._factors(uu)
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            z = self.cp.c1 * np.exp(2j * math.pi * self.cp.ell_v * uu)
            w = self.cp.c2 * np.exp(-2j * math.pi * self.cp.ell_h * uu)
            for t in self.cp.terms:
                f = factors[t.track]
                if t.v:
                    z = z * f ** (-t.v)
                if t.h:
                    w = w * f ** t.h
        return z, w

    def point(self, u: complex) -> Tuple[complex, complex]:
        z, w = self(np.array([u]))
        return complex(z[0]), complex(w[0])


def _relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.abs(a), np.abs(b))
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(a - b) / scale))


def build_parameterization(cp: CurveParam, tp: TorusParams, check_points: int = 8,
                           seed: int = 0) -> CurveEvaluator:
    """
    CurveParam 검증 후 평가기 생성

    무작위 u 에서 u+1, u+τ 평가값과 비교해 Λ 주기성을 확인합니다.
    """
    _check_param(cp, tp)
    ev = CurveEvaluator(cp, tp)

    rng = np.random.default_rng(seed)
    u = torus_samples(tp, check_points, rng=rng)
    z0, w0 = ev(u)
    shifts = [1.0] if tp.trig else [1.0, tp.tau]
    for shift in shifts:
        z1, w1 = ev(u + shift)
        gap = max(_relative_gap(z0, z1), _relative_gap(w0, w1))
        if not gap <= 1e-8:
            raise NonMeromorphic(f"매개화가 {shift} 이동에 주기적이지 않습니다 (상대 차이 {gap:.2e})", witness=gap)
    logger.debug(f"✅ 매개화 주기성 확인 ({check_points}점)")
    return ev


def torus_samples(tp: TorusParams, n: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    토러스 위 n 개 샘플 (rng 가 없으면 황금비 저불일치 수열)

    삼각 퇴화에서는 원기둥 ℂ/ℤ 의 |Im u| ≤ 1/2 띠에서 뽑습니다.
    """
    if rng is not None:
        a, b = rng.random(n), rng.random(n)
    else:
        m = np.arange(1, n + 1)
        a = (m * SAMPLING_CONFIG['golden_offset']) % 1.0
        b = (m * math.sqrt(2.0)) % 1.0
    b = 0.1 + 0.8 * b
    if tp.trig:
        return a + 1j * (b - 0.5)
    return a + b * tp.tau


def central_symmetry_residual(ev: CurveEvaluator, rho: HalfPeriod, samples: Optional[np.ndarray] = None) -> float:
    """z(u)·z(u+ρ), w(u)·w(u+ρ) 가 상수인지 (최대 상대 편차)"""
    tp = ev.tp
    if rho.l % 2 and tp.trig:
        raise DomainError("삼각 퇴화에서 τ/2 반주기는 정의되지 않습니다", witness=rho.label())
    samples = torus_samples(tp, 16) if samples is None else np.asarray(samples, dtype=complex)
    z0, w0 = ev(samples)
    z1, w1 = ev(samples + rho.value(tp.tau))
    worst = 0.0
    for prod in (z0 * z1, w0 * w1):
        ref = prod[0]
        worst = max(worst, float(np.max(np.abs(prod - ref))) / abs(ref))
    return worst


def conjugation_residual(ev: CurveEvaluator, samples: Optional[np.ndarray] = None) -> float:
    """conj(Ψ(u)) 와 Ψ(conj u) 의 비율이 상수인지 (τ ∈ iℝ⁺ 필요)"""
    if not ev.tp.is_rectangular:
        raise DomainError(f"복소 켤레 대칭은 τ ∈ iℝ⁺ 에서만 검사합니다: {ev.tp.tau}", witness=ev.tp.tau)
    samples = torus_samples(ev.tp, 16) if samples is None else np.asarray(samples, dtype=complex)
    z0, w0 = ev(samples)
    z1, w1 = ev(np.conj(samples))
    worst = 0.0
    for a, b in ((np.conj(z0), z1), (np.conj(w0), w1)):
        ratio = a / b
        worst = max(worst, float(np.max(np.abs(ratio - ratio[0]))) / abs(ratio[0]))
    return worst


# =============================================================================
# 스케일 피팅
# =============================================================================

CONVENTIONS = [(swap, flip_z, flip_w) for swap in (False, True) for flip_z in (False, True) for flip_w in (False, True)]


def _convention_name(conv: Tuple[bool, bool, bool]) -> str:
    swap, flip_z, flip_w = conv
    parts = [name for name, on in (('swap', swap), ('1/z', flip_z), ('1/w', flip_w)) if on]
    return '+'.join(parts) or 'identity'


def _apply_convention(z: np.ndarray, w: np.ndarray, conv: Tuple[bool, bool, bool]) -> Tuple[np.ndarray, np.ndarray]:
    swap, flip_z, flip_w = conv
    if swap:
        z, w = w, z
    if flip_z:
        z = 1 / z
    if flip_w:
        w = 1 / w
    return z, w


def _monomial_rows(support: Sequence[Tuple[int, int]], z: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.stack([z ** i * w ** j for i, j in support], axis=1)


def curve_residual(p: LaurentPoly2, z: np.ndarray, w: np.ndarray) -> float:
    """max_u |p(z,w)| / Σ|항| (샘플별 상대 잔차의 최대)"""
    rows = _monomial_rows(p.support(), z, w)
    coeffs = np.array([p[m] for m in p.support()])
    terms = rows * coeffs[None, :]
    scale = np.abs(terms).sum(axis=1)
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(terms.sum(axis=1)) / scale))


@dataclass
class ScalingFit:
    """p(λ z', μ w') ≈ 0 피팅 결과 (z', w' 는 규약 적용 후 좌표)"""
    lam: complex
    mu: complex
    residual: float
    convention: Tuple[bool, bool, bool] = (False, False, False)
    null_ratio: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda': [self.lam.real, self.lam.imag],
            'mu': [self.mu.real, self.mu.imag],
            'residual': self.residual,
            'convention': _convention_name(self.convention),
            'null_ratio': self.null_ratio,
        }


def _refine(p: LaurentPoly2, z: np.ndarray, w: np.ndarray, lam: complex, mu: complex) -> Tuple[complex, complex]:
    support = p.support()
    coeffs = np.array([p[m] for m in support])
    rows = _monomial_rows(support, z, w)
    ii = np.array([m[0] for m in support])
    jj = np.array([m[1] for m in support])

    def fun(x):
        scale = np.exp(ii * complex(x[0], x[1]) + jj * complex(x[2], x[3]))
        terms = rows * (coeffs * scale)[None, :]
        norm = np.abs(terms).sum(axis=1)
        vals = terms.sum(axis=1) / np.where(norm > 0, norm, 1.0)
        return np.concatenate([vals.real, vals.imag])

    x0 = [math.log(abs(lam)), np.angle(lam), math.log(abs(mu)), np.angle(mu)]
    sol = least_squares(fun, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return complex(np.exp(complex(sol.x[0], sol.x[1]))), complex(np.exp(complex(sol.x[2], sol.x[3])))


def _fit_convention(p: LaurentPoly2, z: np.ndarray, w: np.ndarray,
                    conv: Tuple[bool, bool, bool]) -> Optional[ScalingFit]:
    zc, wc = _apply_convention(z, w, conv)
    support = p.support()
    rows = _monomial_rows(support, zc, wc)
    norms = np.linalg.norm(rows, axis=1)
    rows = rows / norms[:, None]
    _, s, vh = np.linalg.svd(rows)
    null = vh[-1].conj()
    null_ratio = float(s[-1] / s[0])
    q = LaurentPoly2({m: c for m, c in zip(support, null)})
    try:
        _, lam, mu, _ = proportionality_scaled(q, p)
    except SupportMismatch:
        logger.debug(f"🔍 규약 {_convention_name(conv)}: 영공간 지지 집합 불일치")
        return None
    if not (np.isfinite(lam) and np.isfinite(mu)) or lam == 0 or mu == 0:
        return None
    residual = curve_residual(p, lam * zc, mu * wc)
    if residual > 1e-14:
        rl, rm = _refine(p, zc, wc, lam, mu)
        refined = curve_residual(p, rl * zc, rm * wc)
        if refined < residual:
            lam, mu, residual = rl, rm, refined
    return ScalingFit(complex(lam), complex(mu), residual, conv, null_ratio)


def fit_scaling(p: LaurentPoly2, ev: Union[CurveEvaluator, Evaluator],
                samples: Optional[Sequence[complex]] = None) -> ScalingFit:
    """
    p(λ·z(u), μ·w(u)) ≈ 0 이 되는 전역 스케일 (λ, μ) 피팅

    p 의 지지 집합 단항식 행렬의 영공간으로 곡선 다항식 Q 를 구하고, Q ≈ c·p(λz, μw) 를 맞춘 뒤
    최소제곱으로 다듬습니다. z ↔ 1/z, w ↔ 1/w, z ↔ w 규약 8가지 중 잔차가 가장 작은 것을 고릅니다.

    Args:
        p: 같은 모형의 특성 다항식
        ev: 매개화 평가기 (u 배열 → (z, w) 배열)
        samples: 토러스 샘플 (없으면 ev.tp 위 저불일치 수열)

    Returns:
        ScalingFit
    """
    support = p.support()
    if len(support) < 2:
        raise IllConditioned("상수 다항식은 곡선을 정의하지 않습니다", witness=len(support))
    if samples is None:
        tp = getattr(ev, 'tp', None)
        if tp is None:
            raise IllConditioned("샘플 없이 피팅하려면 토러스 파라미터가 있는 평가기가 필요합니다")
        n = max(SAMPLING_CONFIG['fit_samples'], 2 * len(support) + 8)
        samples = torus_samples(tp, n)
    u = np.asarray(samples, dtype=complex)

    diffs = np.abs(u[:, None] - u[None, :]) + np.eye(len(u))
    if np.min(diffs) < 1e-12:
        i, j = np.unravel_index(np.argmin(diffs), diffs.shape)
        raise IllConditioned(f"샘플 {i}, {j} 가 겹칩니다", witness=(int(i), int(j)))

    z, w = ev(u)
    z, w = np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)
    ok = np.isfinite(z) & np.isfinite(w) & (z != 0) & (w != 0)
    if ok.sum() < len(support):
        raise IllConditioned(f"유효 샘플 {int(ok.sum())}개 < 단항식 {len(support)}개", witness=int(ok.sum()))
    if not ok.all():
        logger.warning(f"⚠️ 극점 근처 샘플 {int((~ok).sum())}개 제외")
    z, w = z[ok], w[ok]

    best: Optional[ScalingFit] = None
    for conv in CONVENTIONS:
        fit = _fit_convention(p, z, w, conv)
        if fit is None:
            continue
        logger.debug(f"🔍 규약 {_convention_name(conv)}: 잔차 {fit.residual:.2e}")
        if best is None or (fit.residual < best.residual / 10 and best.residual > 1e-13):
            best = fit
    if best is None:
        raise IllConditioned("어떤 규약에서도 스케일을 맞출 수 없습니다")
    logger.info(f"📏 스케일 피팅: λ={best.lam:.6g}, μ={best.mu:.6g}, 잔차 {best.residual:.2e} "
                f"({_convention_name(best.convention)})")
    return best


# =============================================================================
# 아메바 / 실수 궤적
# =============================================================================

def _log_cloud(z: np.ndarray, w: np.ndarray, label: str) -> Tuple[pd.DataFrame, int]:
    z, w = np.ravel(z), np.ravel(w)
    with np.errstate(divide='ignore', invalid='ignore'):
        x, y = np.log(np.abs(z)), np.log(np.abs(w))
    ok = np.isfinite(x) & np.isfinite(y)
    frame = pd.DataFrame({'x': x[ok], 'y': y[ok], 'label': label}, columns=COLUMNS)
    return frame, int((~ok).sum())


def _slice_roots(p: LaurentPoly2, fixed: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """고정된 w0 마다 p(z, w0) = 0 의 z 근 (동반 행렬 고윳값)"""
    imin, imax, _, _ = p.degree_bounds()
    deg = imax - imin
    if deg == 0:
        return np.empty(0, dtype=complex), np.empty(0, dtype=complex)
    coeffs = np.zeros((len(fixed), deg + 1), dtype=complex)
    for (i, j), c in p:
        coeffs[:, i - imin] += c * fixed ** j
    lead = coeffs[:, deg]
    ok = np.abs(lead) > 1e-14 * np.abs(coeffs).max(axis=1)
    if not ok.all():
        logger.debug(f"🔍 최고차 계수가 사라지는 슬라이스 {int((~ok).sum())}개 건너뜀")
    monic = coeffs[ok, :deg] / lead[ok, None]
    n = monic.shape[0]
    companion = np.zeros((n, deg, deg), dtype=complex)
    if deg > 1:
        companion[:, 1:, :-1] = np.eye(deg - 1)
    companion[:, :, -1] = -monic
    roots = np.linalg.eigvals(companion) if n else np.empty((0, deg), dtype=complex)
    fixed_rep = np.repeat(fixed[ok][:, None], deg, axis=1)
    return roots.ravel(), fixed_rep.ravel()


def _filter_roots(p: LaurentPoly2, z: np.ndarray, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    good = np.isfinite(z) & (np.abs(z) > 0)
    z, w = z[good], w[good]
    if not len(z):
        return z, w
    support = p.support()
    coeffs = np.array([p[m] for m in support])
    terms = _monomial_rows(support, z, w) * coeffs[None, :]
    scale = np.abs(terms).sum(axis=1)
    residual = np.abs(terms.sum(axis=1)) / np.where(scale > 0, scale, 1.0)
    keep = residual <= TOLERANCES['root_residual']
    if not keep.all():
        logger.debug(f"🔍 재평가 잔차 초과 근 {int((~keep).sum())}개 제외")
    return z[keep], w[keep]


def sample_amoeba(source: Union[LaurentPoly2, CurveEvaluator], resolution: Optional[int] = None,
                  radii: Optional[int] = None, log_range: Optional[float] = None) -> pd.DataFrame:
    """
    아메바 점구름 (log|z|, log|w|)

    평가기: 토러스 격자 u = a + bτ 를 Ψ 로 보낸 점 (label 'torus')
    다항식: 여러 반지름의 원 위 w0 에서 p(z, w0) = 0 을 풀고 (label 'slice_z'),
            z0 에서 p(z0, w) = 0 을 푼 점 (label 'slice_w')

    Returns:
        x, y, label 열의 DataFrame
    """
    resolution = SAMPLING_CONFIG['amoeba_resolution'] if resolution is None else int(resolution)
    radii = SAMPLING_CONFIG['amoeba_radii'] if radii is None else int(radii)
    log_range = SAMPLING_CONFIG['amoeba_log_range'] if log_range is None else float(log_range)
    if resolution <= 0 or radii <= 0:
        raise DomainError(f"해상도는 양수여야 합니다: {resolution}, {radii}", witness=(resolution, radii))
    offset = SAMPLING_CONFIG['golden_offset'] / resolution

    if isinstance(source, CurveEvaluator):
        a = np.arange(resolution) / resolution + offset
        if source.tp.trig:
            b = np.linspace(-1.0, 1.0, resolution) * log_range / math.pi
            u = a[:, None] + 1j * b[None, :]
        else:
            b = np.arange(resolution) / resolution + offset / 2
            u = a[:, None] + b[None, :] * source.tp.tau
        z, w = source(u)
        frame, dropped = _log_cloud(z, w, 'torus')
        if dropped:
            logger.debug(f"🔍 극점/영점 {dropped}개 제외")
        logger.info(f"🗺️ 아메바 (매개화): {len(frame)}점")
        return frame

    if not isinstance(source, LaurentPoly2):
        raise DomainError(f"지원하지 않는 아메바 입력: {type(source).__name__}", witness=type(source).__name__)

    circle = np.exp(2j * math.pi * (np.arange(resolution) / resolution + offset))
    rings = np.exp(np.linspace(-log_range, log_range, radii))
    fixed = (rings[:, None] * circle[None, :]).ravel()

    frames = []
    for label, poly, flip in (('slice_z', source, False), ('slice_w', source.swapped(), True)):
        roots, base = _slice_roots(poly, fixed)
        roots, base = _filter_roots(poly, roots, base)
        z, w = (base, roots) if flip else (roots, base)
        frame, _ = _log_cloud(z, w, label)
        frames.append(frame)
    frame = pd.concat(frames, ignore_index=True)
    logger.info(f"🗺️ 아메바 (다항식 슬라이스): {len(frame)}점")
    return frame


def sample_real_locus(ev: CurveEvaluator, tp: Optional[TorusParams] = None,
                      n_points: Optional[int] = None) -> Tuple[pd.DataFrame, int]:
    """
    실수 궤적: 원 ℝ/ℤ 와 ℝ + τ/2 의 Ψ 상 (label 'real', 'real+tau/2')

    Returns:
        (DataFrame, 극점으로 제외된 점 개수)
    """
    tp = tp or ev.tp
    if not tp.is_rectangular:
        raise DomainError(f"실수 궤적은 τ ∈ iℝ⁺ 에서만 정의됩니다: {tp.tau}", witness=tp.tau)
    n = SAMPLING_CONFIG['real_locus_points'] if n_points is None else int(n_points)
    if n <= 0:
        raise DomainError(f"샘플 수는 양수여야 합니다: {n}", witness=n)
    x = (np.arange(n) + 0.5) / n

    circles = [('real', x + 0j)]
    if tp.trig:
        logger.warning("⚠️ 삼각 퇴화: ℝ + τ/2 성분은 무한대로 사라져 'real' 만 샘플링합니다")
    else:
        circles.append(('real+tau/2', x + tp.tau / 2))

    frames, dropped = [], 0
    for label, u in circles:
        z, w = ev(u)
        frame, lost = _log_cloud(z, w, label)
        frames.append(frame)
        dropped += lost
    if dropped:
        logger.warning(f"⚠️ 실수 궤적에서 극점 {dropped}개 제외")
    frame = pd.concat(frames, ignore_index=True)
    logger.info(f"🗺️ 실수 궤적: {len(frame)}점 (성분 {len(circles)}개)")
    return frame, dropped


# =============================================================================
# 자유에너지
# =============================================================================

def coupling_term(J: Sequence[float]) -> float:
    """-½ Σ log cosh(J_e)"""
    J = np.asarray(J, dtype=float)
    return float(-0.5 * np.sum(np.log(np.cosh(J))))


def model_charpoly(g: PeriodicGraph, ca) -> LaurentPoly2:
    """이징-다이머 특성 다항식 (스케일 피팅 기준)"""
    return dimer_charpoly(g, ca)


def _mean_log(p: LaurentPoly2, n: int, shift: Tuple[float, float]) -> Optional[float]:
    theta_grid = 2 * math.pi * (np.arange(n) + shift[0]) / n
    phi_grid = 2 * math.pi * (np.arange(n) + shift[1]) / n
    z = np.exp(1j * theta_grid)[:, None]
    w = np.exp(1j * phi_grid)[None, :]
    values = np.abs(p.evaluate(z, w))
    scale = sum(abs(c) for _, c in p)
    if np.min(values) <= 1e-13 * scale:
        return None
    return float(np.mean(np.log(values)))


def _integral_term(p: LaurentPoly2, n: int) -> Tuple[float, int, Tuple[float, float]]:
    if p.is_zero():
        raise GridOnZero("영 다항식의 log 적분은 정의되지 않습니다")
    g = SAMPLING_CONFIG['golden_offset']
    attempts = SAMPLING_CONFIG['max_perturbations']
    for m in range(attempts + 1):
        shift = ((m * g) % 1.0, (m * g * g) % 1.0)
        value = _mean_log(p, n, shift)
        if value is not None:
            if m:
                logger.warning(f"⚠️ 격자 교란 {m}회 후 적분 (이동 {shift[0]:.4f}, {shift[1]:.4f})")
            return value, m, shift
        logger.debug(f"🔍 격자 {n}×{n} 이 영점에 닿음 (교란 {m})")
    raise GridOnZero(f"격자 교란 {attempts}회 후에도 영점을 피하지 못했습니다 (n={n})", witness=n)


def free_energy(p: LaurentPoly2, grid_n: Optional[int] = None, coupling: float = 0.0) -> float:
    """
    f = coupling - ½·(2π)^-2 ∬ log|p(e^iθ, e^iφ)| dθ dφ

    주기 사다리꼴 규칙 (n×n 격자의 평균) 으로 적분합니다.
    """
    n = SAMPLING_CONFIG['free_energy_grid'] if grid_n is None else int(grid_n)
    if n <= 0:
        raise DomainError(f"격자 크기는 양수여야 합니다: {n}", witness=n)
    mean, _, _ = _integral_term(p, n)
    return coupling - 0.5 * mean


def free_energy_report(p: LaurentPoly2, grid_n: Optional[int] = None, coupling: float = 0.0) -> Dict[str, Any]:
    """n 과 2n 격자의 자유에너지와 리처드슨 차이"""
    n = SAMPLING_CONFIG['free_energy_grid'] if grid_n is None else int(grid_n)
    if n <= 0:
        raise DomainError(f"격자 크기는 양수여야 합니다: {n}", witness=n)
    coarse, m1, shift = _integral_term(p, n)
    fine, m2, _ = _integral_term(p, 2 * n)
    value, refined = coupling - 0.5 * coarse, coupling - 0.5 * fine
    report = {
        'grid_n': n,
        'value': value,
        'value_2n': refined,
        'richardson_gap': abs(value - refined),
        'coupling_term': coupling,
        'perturbations': max(m1, m2),
        'shift': list(shift),
    }
    logger.info(f"🔥 자유에너지 f = {refined:.12f} (n={n} 대비 차이 {report['richardson_gap']:.2e})")
    return report

"""
분류 모듈
필요 조건 I–V 판정, 계열별 결합 상수 추출, 임계 결합, 프러스트레이션 → 부호 복원,
삼각 격자 전체 분류 (정·역방향), 정사각 격자 완전 프러스트레이션 인스턴스

각도와 t 는 토러스 좌표 (격자 ℤ + τℤ), 삼각 격자의 γ 는 hat 좌표 (주기 4K) 입니다.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import brentq, least_squares
from tqdm import tqdm

from config import CLASSIFY_CONFIG, TOLERANCES
from dimer_weights import (CouplingAssignment, FockParams, coupling_assignment, fock_face_weight, frustration,
                           match_family, match_half_period)
from elliptic_kernel import (HalfPeriod, TorusParams, inverse_jacobi, jacobi, jacobi_torus, modular_normal_form,
                             modular_transform)
from errors import (BoundaryCase, DegenerateCoupling, DomainError, FamilyMismatch, FrustrixError, NoAssignment,
                    NonConvergent, ParityObstruction, PoleHit, SupportMismatch)
from kasteleyn_poly import LaurentPoly2, fisher_charpoly, proportionality_up_to_twist, solve_face_parity
from lattice import (AngleMap, DecoratedGraph, PeriodicGraph, bipartite_coloring, build_dual, monotone_order,
                     square)

logger = logging.getLogger(__name__)

CONDITIONS = ('I', 'II', 'III', 'IV', 'V')
CLASS_FAMILY = {'S1': 'I', 'S2': 'II', 'S3': 'III'}

# 위치 판정 허용 오차 (토러스 좌표)
LOCUS_TOL = 1e-9


# =============================================================================
# 필요 조건 I–V
# =============================================================================

@dataclass
class ConditionResult:
    name: str
    passed: bool
    witness: Optional[Dict[str, Any]] = None
    detail: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {'passed': self.passed, 'witness': self.witness, 'detail': self.detail}


@dataclass
class FamilyReport:
    """필요 조건 판정 결과 (조건별 통과 여부와 실패 증인, 계열, 유도 결합 상수)"""
    conditions: Dict[str, ConditionResult]
    family: Optional[str]
    frame: List[str]
    tau: complex
    rho: HalfPeriod
    t: complex
    bipartite_primal: bool
    bipartite_dual: bool
    J: Optional[List[float]] = None
    delta: Optional[List[int]] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    @property
    def failures(self) -> List[str]:
        return [name for name in CONDITIONS if not self.conditions[name].passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'conditions': {name: c.to_dict() for name, c in self.conditions.items()},
            'family': self.family,
            'frame': list(self.frame),
            'tau': self.tau,
            'rho': self.rho.label(),
            't': self.t,
            'bipartite': {'G': self.bipartite_primal, 'G*': self.bipartite_dual},
            'J': self.J,
            'delta': self.delta,
        }


@dataclass
class _Frame:
    """모듈러 변환을 적용한 좌표계에서의 (τ, α, ρ, t)"""
    tp: TorusParams
    am: AngleMap
    rho: HalfPeriod
    t: complex
    word: List[str] = field(default_factory=list)


def _apply_word(fp: FockParams, word: Sequence[str]) -> _Frame:
    tp, rho, t = fp.tp, fp.rho, complex(fp.t)
    fwd = dict(fp.am.forward)
    bwd = dict(fp.am.backward)
    for letter in word:
        rv = rho.value(tp.tau)
        if letter == 'S':
            scale = -1.0 / tp.tau
            new_tp = modular_transform(tp, 'S')
            fwd = {k: v * scale for k, v in fwd.items()}
            bwd = {k: v * scale for k, v in bwd.items()}
            t, rv = t * scale, rv * scale
        elif letter == 'T':
            new_tp = modular_transform(tp, 'T')
            t += 0.5
        elif letter == 'T-':
            new_tp = TorusParams.from_tau(tp.tau - 1)
            t -= 0.5
        else:
            raise DomainError(f"알 수 없는 생성원: {letter}", witness=letter)
        tp = new_tp
        rho = match_half_period(rv, tp)
    return _Frame(tp, AngleMap(fwd, rho, tp.tau, bwd), rho, t, list(word))


def _candidate_words(tp: TorusParams) -> List[List[str]]:
    words: List[List[str]] = [[]]
    if tp.trig:
        return words
    tau0, word = modular_normal_form(tp.tau)
    for cand in (word, word + ['T'] if abs(tau0.real + 0.5) < 1e-12 else None,
                 word + ['S'] if abs(tau0.real) < 1e-12 else None):
        if cand is not None and cand not in words:
            words.append(cand)
    return words


def _imag_class(x: complex, tp: TorusParams, tol: float = LOCUS_TOL) -> Optional[int]:
    """x ∈ ℝ (mod Λ) 이면 0, ℝ + τ/2 이면 1, 둘 다 아니면 None"""
    x = complex(x)
    if tp.trig:
        return 0 if abs(x.imag) <= tol else None
    r = (x.imag / tp.tau.imag) % 1.0
    if min(r, 1.0 - r) <= tol:
        return 0
    if abs(r - 0.5) <= tol:
        return 1
    return None


def _tau_shape(tp: TorusParams) -> Optional[str]:
    if tp.is_rectangular:
        return 'rectangular'
    if abs(abs(tp.tau.real) - 0.5) <= 1e-12 and tp.tau.imag > math.sqrt(3) / 2:
        return 'half'
    return None


def _near_integer(x: float, tol: float = LOCUS_TOL) -> bool:
    return abs(x - round(x)) <= tol


def _all_angles(am: AngleMap) -> List[Tuple[str, int, complex]]:
    out = [('forward', k, v) for k, v in sorted(am.forward.items())]
    out += [('backward', k, v) for k, v in sorted(am.backward.items())]
    return out


def _condition_one(fr: _Frame) -> ConditionResult:
    shape = _tau_shape(fr.tp)
    if shape is None:
        return ConditionResult('I', False, {'tau': fr.tp.tau}, 'τ 가 iℝ⁺ 또는 1/2 + iℝ (Im > √3/2) 가 아닙니다')
    for direction, track, a in _all_angles(fr.am):
        if shape == 'rectangular':
            ok = _imag_class(a, fr.tp) is not None
        else:
            ok = _near_integer(2 * complex(a).real)
        if not ok:
            return ConditionResult('I', False, {'track': track, 'direction': direction, 'angle': a},
                                   f'각도가 허용 궤적 밖 ({shape})')
    if shape == 'rectangular':
        ok = _imag_class(fr.t, fr.tp) is not None
    else:
        q = 4 * fr.t.real
        ok = _near_integer(q) and round(q) % 2 == 1
    if not ok:
        return ConditionResult('I', False, {'t': fr.t}, f't 가 허용 궤적 밖 ({shape})')
    return ConditionResult('I', True, detail=shape)


def _condition_two(fr: _Frame) -> ConditionResult:
    if fr.rho.is_zero:
        return ConditionResult('II', False, {'rho': fr.rho.label()}, 'ρ = 0')
    if _tau_shape(fr.tp) == 'half' and (fr.rho.j % 2, fr.rho.l % 2) != (1, 0):
        return ConditionResult('II', False, {'rho': fr.rho.label()}, 'τ ∈ 1/2 + iℝ 에서는 ρ = 1/2 만 허용')
    rv = fr.rho.value(fr.tp.tau)
    for track, fwd in sorted(fr.am.forward.items()):
        if not fr.tp.equal_mod_lattice(fr.am.backward[track], fwd + rv, LOCUS_TOL):
            return ConditionResult('II', False, {'track': track}, 'α← ≠ α→ + ρ')
    return ConditionResult('II', True)


def _bipartite_needs(rho: HalfPeriod, ell_t: int) -> Tuple[bool, bool]:
    """(G 이분 필요, G* 이분 필요)"""
    key = (rho.j % 2, rho.l % 2)
    if key == (1, 0):
        return (ell_t == 1, ell_t == 1)
    if key == (1, 1):
        return (ell_t == 1, ell_t == 0)
    return (False, False)


def _condition_three(fr: _Frame, dg: DecoratedGraph, bip: Tuple[bool, bool]) -> ConditionResult:
    if not fr.tp.is_rectangular:
        return ConditionResult('III', False, {'tau': fr.tp.tau}, 'τ ∉ iℝ⁺')
    key = (fr.rho.j % 2, fr.rho.l % 2)
    if key in ((0, 0), (0, 1)):
        return ConditionResult('III', False, {'rho': fr.rho.label()}, f'(j, ℓ) = {key} 은 음수 조건을 만족할 수 없습니다')
    ell_t = _imag_class(fr.t, fr.tp)
    if ell_t is None:
        return ConditionResult('III', False, {'t': fr.t}, 't 가 ℝ ∪ (ℝ + τ/2) 밖')
    need_g, need_dual = _bipartite_needs(fr.rho, ell_t)
    if need_g and not bip[0]:
        return ConditionResult('III', False, {'graph': 'G'}, 'G 가 이분 그래프여야 합니다')
    if need_dual and not bip[1]:
        return ConditionResult('III', False, {'graph': 'G*'}, 'G* 가 이분 그래프여야 합니다')

    ell_e = (ell_t + key[1]) % 2
    angles = fr.am.gq_angles(dg)
    rv = fr.rho.value(fr.tp.tau)
    for f in dg.faces_of_kind('square'):
        A, B = dg.face_corner_tracks(f)
        x = angles[A[0]] - angles[B[0]] + rv
        if _imag_class(x, fr.tp) != ell_e:
            return ConditionResult('III', False, {'face': f, 'edge': dg.face_ref[f]},
                                   f'β - α 가 ℝ + {ell_e}·τ/2 밖')
    return ConditionResult('III', True, detail=f'ℓ_t={ell_t}')


def _condition_four(fr: _Frame, bip: Tuple[bool, bool]) -> ConditionResult:
    key = (fr.rho.j % 2, fr.rho.l % 2)
    tp, t = fr.tp, fr.t
    if key == (1, 0) and (tp.equal_mod_lattice(t, 0, LOCUS_TOL) or tp.equal_mod_lattice(t, 0.5, LOCUS_TOL)):
        return ConditionResult('IV', True)
    if key == (1, 1) and not tp.trig:
        if tp.equal_mod_lattice(t, 0.5, LOCUS_TOL):
            if bip[1]:
                return ConditionResult('IV', True)
            return ConditionResult('IV', False, {'graph': 'G*'}, '(1/2+τ/2, 1/2) 는 G* 이분이 필요')
        if tp.equal_mod_lattice(t, tp.tau / 2, LOCUS_TOL):
            if bip[0]:
                return ConditionResult('IV', True)
            return ConditionResult('IV', False, {'graph': 'G'}, '(1/2+τ/2, τ/2) 는 G 이분이 필요')
    return ConditionResult('IV', False, {'rho': fr.rho.label(), 't': t}, '(ρ, t) 가 허용 목록에 없습니다')


def _primal_sn_product(fr: _Frame, dg: DecoratedGraph, f: int, angles: Dict[int, complex]) -> complex:
    A, _ = dg.face_corner_tracks(f)
    rv = fr.rho.value(fr.tp.tau)
    n = len(A)
    prod = 1 + 0j
    for i in range(n):
        prod *= jacobi_torus('sn', angles[A[i]] - angles[A[(i + 1) % n]] + rv, fr.tp)
    return prod


def _condition_five(fr: _Frame, dg: DecoratedGraph) -> ConditionResult:
    tp = fr.tp
    if not tp.trig and (fr.rho.j % 2, fr.rho.l % 2) == (1, 1) and tp.equal_mod_lattice(fr.t, tp.tau / 2, LOCUS_TOL):
        return ConditionResult('V', False, {'rho': fr.rho.label(), 't': fr.t}, '(1/2+τ/2, τ/2) 는 부호 조건을 만족하지 않습니다')
    angles = fr.am.gq_angles(dg)
    for f in dg.faces_of_kind('primal'):
        try:
            prod = _primal_sn_product(fr, dg, f, angles)
        except PoleHit:
            return ConditionResult('V', False, {'face': f, 'vertex': dg.face_ref[f]}, 'sn 극점')
        if abs(prod.imag) > 1e-8 * max(1.0, abs(prod)):
            return ConditionResult('V', False, {'face': f, 'vertex': dg.face_ref[f], 'product': prod}, 'sn 곱이 실수가 아닙니다')
        if not prod.real < 0:
            return ConditionResult('V', False, {'face': f, 'vertex': dg.face_ref[f], 'product': prod.real}, 'Π sn ≥ 0')
    return ConditionResult('V', True)


def _bipartite_flags(g: PeriodicGraph) -> Tuple[bool, bool]:
    primal = bipartite_coloring(g, raise_on_fail=False) is not None
    dual = bipartite_coloring(build_dual(g), raise_on_fail=False) is not None
    return primal, dual


def _report_in_frame(fr: _Frame, dg: DecoratedGraph, bip: Tuple[bool, bool]) -> FamilyReport:
    conditions = {
        'I': _condition_one(fr),
        'II': _condition_two(fr),
        'III': _condition_three(fr, dg, bip),
        'IV': _condition_four(fr, bip),
        'V': _condition_five(fr, dg),
    }
    report = FamilyReport(conditions, None, fr.word, fr.tp.tau, fr.rho, fr.t, bip[0], bip[1])
    if report.passed:
        report.family = family_tag(fr.rho, fr.t, fr.tp)
    return report


def _best_frame(fp: FockParams, dg: DecoratedGraph) -> Tuple[_Frame, FamilyReport]:
    bip = _bipartite_flags(dg.base)
    best = None
    for word in _candidate_words(fp.tp):
        fr = _apply_word(fp, word)
        report = _report_in_frame(fr, dg, bip)
        if report.family is not None:
            return fr, report
        if best is None or len(report.failures) < len(best[1].failures):
            best = (fr, report)
    return best


def check_conditions(fp: FockParams, dg: Optional[DecoratedGraph] = None) -> FamilyReport:
    """
    필요 조건 I–V 를 각각 판정

    τ 가 표준 모양이 아니면 모듈러 정규형 (필요하면 T, S 한 번 더) 좌표계에서 다시 판정하고,
    모든 조건을 통과하는 첫 좌표계를 씁니다. 다섯 조건을 모두 통과해야 계열이 붙으며,
    이때 결합 상수 J 와 프러스트레이션 δ 도 채웁니다.
    """
    dg = dg or fp.dg
    fr, report = _best_frame(fp, dg)
    if report.family is not None:
        try:
            couplings = _frame_couplings(fr, dg, report.family, check_square=False)
            report.J, report.delta = couplings.J, couplings.delta
        except DegenerateCoupling as e:
            logger.warning(f"⚠️ 결합 상수 유도 실패: {e}")
        logger.info(f"✅ 필요 조건 I–V 통과: 계열 {report.family} (좌표계 {fr.word or '원래'})")
    else:
        logger.info(f"❌ 필요 조건 실패: {', '.join(report.failures)}")
    return report


def family_tag(rho: HalfPeriod, t: complex, tp: TorusParams) -> Optional[str]:
    """(ρ, t) 의 계열 이름, 표 계열이 아니면 None"""
    name = match_family(rho, t, tp)
    return None if name == 'other' else name


def monotone_condition_v(dg: DecoratedGraph, am: AngleMap) -> bool:
    """α→ 가 호몰로지 반시계 순서를 따라 순환 증가하는지 (조건 V 의 충분 조건)"""
    order = monotone_order(dg)
    values = [complex(am.forward[t]).real % 1.0 for t in order]
    n = len(values)
    descents = sum(1 for i in range(n) if values[(i + 1) % n] < values[i])
    return descents <= 1


# =============================================================================
# 결합 상수 추출
# =============================================================================

@dataclass
class FockCouplings:
    """Fock 모형에서 읽은 간선별 J_e 와 G 면별 δ_f"""
    family: str
    J: List[float]
    delta: List[int]
    formula_gap: float
    square_gap: float
    frame: List[str]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'family': self.family,
            'J': list(self.J),
            'delta': list(self.delta),
            'formula_gap': self.formula_gap,
            'square_gap': self.square_gap,
            'frame': list(self.frame),
        }


def _reduced_real(x: complex, tp: TorusParams) -> float:
    """τ 배수만 제거한 실수부 (sn 부호 보존)"""
    x = complex(x)
    if tp.trig:
        return x.real
    return (x - round(x.imag / tp.tau.imag) * tp.tau).real


def _edge_coupling(family: str, x: complex, tp: TorusParams, edge: int) -> Tuple[float, float]:
    """사각 면 인자 x 에서 (asinh 경로 J, 로그 경로 J)"""
    k = tp.real_k or 0.0
    kp = math.sqrt(1 - k * k)
    xr = _reduced_real(x, tp)
    sn = jacobi_torus('sn', xr, tp).real
    cn = jacobi_torus('cn', xr, tp).real
    dn = jacobi_torus('dn', xr, tp).real
    if abs(cn) <= TOLERANCES['near_pole']:
        raise DegenerateCoupling(f"간선 {edge}: cn = 0 이라 J = ∞", witness=edge)
    if family == 'I':
        s = abs(sn / cn)
        alt = 0.5 * math.log((1 + abs(sn)) / abs(cn))
    elif family == 'II':
        s = kp * abs(sn / cn)
        alt = 0.5 * math.log((dn + kp * abs(sn)) / abs(cn))
    else:
        s = kp / (k * abs(cn))
        alt = 0.5 * math.log((kp + dn) / (k * abs(cn)))
    return 0.5 * math.asinh(s), alt


def _frame_couplings(fr: _Frame, dg: DecoratedGraph, family: str, check_square: bool = True) -> FockCouplings:
    tp = fr.tp
    g = dg.base
    angles = fr.am.gq_angles(dg)
    rv = fr.rho.value(tp.tau)

    J = [0.0] * g.n_edges
    formula_gap = 0.0
    square_faces = {}
    for f in dg.faces_of_kind('square'):
        e = dg.face_ref[f]
        A, B = dg.face_corner_tracks(f)
        J[e], alt = _edge_coupling(family, angles[A[0]] - angles[B[0]] + rv, tp, e)
        formula_gap = max(formula_gap, abs(J[e] - alt))
        square_faces[e] = f

    delta = [-1] * g.n_faces
    if family in ('I', 'II'):
        for f in dg.faces_of_kind('dual'):
            A, _ = dg.face_corner_tracks(f)
            n = len(A)
            prod = 1.0
            for i in range(n):
                prod *= jacobi_torus('sn', _reduced_real(angles[A[i - 1]] - angles[A[i]] + rv, tp), tp).real
            if prod == 0:
                raise DegenerateCoupling(f"쌍대 면 {dg.face_ref[f]} 의 sn 곱이 0", witness=dg.face_ref[f])
            delta[dg.face_ref[f]] = -1 if prod > 0 else 1

    square_gap = 0.0
    if check_square:
        try:
            frame_fp = FockParams(dg, tp, fr.am, fr.rho, fr.t)
            for e, f in square_faces.items():
                w = fock_face_weight(frame_fp, f, 'raw', angles)
                target = -math.sinh(2 * J[e]) ** 2
                square_gap = max(square_gap, abs(w - target) / max(1.0, abs(target)))
        except (DomainError, PoleHit) as e:
            logger.warning(f"⚠️ 사각 면 가중치 비교 생략: {e}")
            square_gap = math.nan
        if square_gap > TOLERANCES['face_weight']:
            logger.warning(f"⚠️ -sinh²(2J) 와 Fock 사각 면 가중치 차이 {square_gap:.2e}")
    return FockCouplings(family, J, delta, formula_gap, square_gap, list(fr.word))


def couplings_from_fock(fp: FockParams, dg: Optional[DecoratedGraph] = None) -> FockCouplings:
    """
    Fock 모형 → 이징 결합 상수 (J_e, δ_f)

    계열 I: sinh 2J = |sc(x)|, II: k'|sc(x)|, III: (k'/k)|nc(Re x)|  (x = β - α 의 hat 좌표)
    δ_f: I/II 는 -sgn Π sn(β_i - α_i), III 은 -1
    """
    dg = dg or fp.dg
    fr, report = _best_frame(fp, dg)
    if report.family is None:
        raise FamilyMismatch(f"필요 조건 실패 ({', '.join(report.failures)})",
                             witness={name: report.conditions[name].witness for name in report.failures})
    couplings = _frame_couplings(fr, dg, report.family)
    logger.info(f"🔗 계열 {couplings.family} 결합 상수 {len(couplings.J)}개 "
                f"(두 공식 차이 {couplings.formula_gap:.1e})")
    return couplings


def ising_model_from_fock(fp: FockParams, dg: Optional[DecoratedGraph] = None) -> CouplingAssignment:
    """결합 상수 추출 + 부호 복원으로 얻은 이징 모형 (ε, J, δ)"""
    dg = dg or fp.dg
    couplings = couplings_from_fock(fp, dg)
    eps = signs_from_frustration(dg.base, couplings.delta)
    return coupling_assignment(eps, couplings.J, dg.base)


def critical_couplings(dg: DecoratedGraph, am: AngleMap, family: str) -> List[float]:
    """
    k → 0 극한의 간선별 임계 결합

    계열 I/II: sinh(2J_c) = |tan(π·(β - α))|, 계열 III: 무한대
    """
    if family not in CLASS_FAMILY.values():
        raise FamilyMismatch(f"알 수 없는 계열: {family}", witness=family)
    g = dg.base
    if family == 'III':
        return [math.inf] * g.n_edges
    angles = am.gq_angles(dg)
    rv = HalfPeriod(1, 0).value(0j)
    out = [0.0] * g.n_edges
    for f in dg.faces_of_kind('square'):
        A, B = dg.face_corner_tracks(f)
        x = complex(angles[A[0]] - angles[B[0]] + rv).real
        s = abs(math.sin(math.pi * x) / math.cos(math.pi * x)) if abs(math.cos(math.pi * x)) > 1e-15 else math.inf
        out[dg.face_ref[f]] = 0.5 * math.asinh(s)
    return out


# =============================================================================
# 프러스트레이션 → 부호
# =============================================================================

def signs_from_frustration(g: PeriodicGraph, delta: Sequence[int]) -> List[int]:
    """
    면별 프러스트레이션 δ_f 를 만족하는 간선 부호 ε

    쌍대 신장 트리의 잎부터 부호를 정합니다. 토러스에서는 Π δ_f = 1 일 때만 가능합니다.
    """
    if len(delta) != g.n_faces:
        raise DomainError(f"δ 개수 {len(delta)} 가 면 수 {g.n_faces} 와 다릅니다", witness=len(delta))
    delta = [int(d) for d in delta]
    if any(d not in (1, -1) for d in delta):
        raise DomainError(f"δ 는 ±1 이어야 합니다: {delta}", witness=delta)
    if math.prod(delta) == -1:
        raise ParityObstruction(
            f"{g.name}: Π δ_f = -1 이라 부호를 정할 수 없습니다 (기본 영역을 두 배로 늘리면 해결됩니다)",
            witness={'product': -1, 'remedy': 'double the fundamental domain'})

    bits = solve_face_parity(g, bipartite=False, target=[1 if d == -1 else 0 for d in delta])
    if bits is None:
        raise NoAssignment(f"{g.name}: 쌍대 신장 트리 풀이 실패", witness=g.name)
    eps = [-1 if b else 1 for b in bits]
    bad = [f for f, (got, want) in enumerate(zip(frustration(g, eps), delta)) if got != want]
    if bad:
        raise NoAssignment(f"{g.name}: 복원한 부호가 면 {bad} 에서 δ 와 다릅니다", witness=bad)
    logger.debug(f"🧩 {g.name}: 음수 간선 {eps.count(-1)}개로 δ 복원")
    return eps


# =============================================================================
# 삼각 격자 분류
# =============================================================================

def class_thresholds(a: float, b: float) -> Tuple[float, float]:
    """정렬된 두 큰 값 (a ≥ b) 에 대한 경계 (S, T)"""
    S = max((a * b - 1) / (a + b), 0.0)
    ra, rb = math.sqrt(a * a + 1), math.sqrt(b * b + 1)
    T = a * b * (ra * rb - 1) / (b * b * ra + a * a * rb)
    return S, T


def _class_name(klass: Union[int, str]) -> str:
    name = f'S{klass}' if isinstance(klass, int) else str(klass).upper()
    if name not in CLASS_FAMILY:
        raise DomainError(f"알 수 없는 분류: {klass}", witness=klass)
    return name


@dataclass
class TriangularPoint:
    """삼각 격자 프러스트레이션 모형 한 점: s_i = sinh(2J_i) 와 (분류, k, γ)"""
    s: Tuple[float, float, float]
    klass: str
    k: float
    gamma: Tuple[float, float, float]
    K: float
    thresholds: Tuple[float, float]
    tags: Tuple[Optional[str], ...] = (None, None, None)
    consistent: bool = True
    residual: Optional[float] = None

    @property
    def family(self) -> str:
        return CLASS_FAMILY[self.klass]

    @property
    def order(self) -> List[int]:
        return sorted(range(3), key=lambda i: -self.s[i])

    @property
    def sorted_s(self) -> Tuple[float, float, float]:
        return tuple(self.s[i] for i in self.order)

    @property
    def J(self) -> Tuple[float, ...]:
        return tuple(0.5 * math.asinh(v) for v in self.s)

    @property
    def alphas(self) -> Tuple[float, float, float]:
        """γ_1 = α_3 - α_1, γ_2 = α_1 - α_2 를 만족하는 α→ (토러스 좌표, α_1 = 0)"""
        unit = 2 * self.K
        return (0.0, (-self.gamma[1] / unit) % 1.0, (self.gamma[0] / unit) % 1.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            's': list(self.s),
            'J': list(self.J),
            'class': self.klass,
            'family': self.family,
            'k': self.k,
            'gamma': list(self.gamma),
            'gamma_over_K': [g / self.K for g in self.gamma],
            'alphas': list(self.alphas),
            'thresholds': {'S': self.thresholds[0], 'T': self.thresholds[1]},
            'tags': list(self.tags),
            'consistent': self.consistent,
            'residual': self.residual,
        }


def _expected_class(c: float, S: float, T: float) -> str:
    if c <= S:
        return 'S1'
    if c < T:
        return 'S2'
    return 'S3'


def triangular_forward(klass: Union[int, str], k: float, gamma: Sequence[float]) -> TriangularPoint:
    """
    (분류, k, γ) → s = φ_class(k, γ)

    φ1 = 1/(k'|sc γ|), φ2 = 1/|sc γ|, φ3 = |ds γ|/k
    분류 1, 2 는 Π sn(γ_i + K) > 0 (프러스트레이션) 이어야 합니다.
    """
    name = _class_name(klass)
    if len(gamma) != 3:
        raise DomainError(f"γ 는 세 개여야 합니다: {gamma}", witness=gamma)
    if name == 'S3' and not 0 < k < 1:
        raise DomainError(f"분류 3 은 k ∈ (0,1) 이 필요합니다: {k}", witness=k)
    tp = TorusParams.from_modulus(k)
    K = float(tp.K.real)
    kp = math.sqrt(1 - k * k)
    gamma = tuple(float(g) for g in gamma)

    total = sum(gamma) / (4 * K)
    if abs(total - round(total)) > 1e-9:
        raise DomainError(f"Σγ ≠ 0 (mod 4K): {sum(gamma)}", witness=gamma)
    if name != 'S3':
        sign = np.prod([jacobi('sn', g + K, tp).real for g in gamma])
        if not sign > 0:
            raise DomainError(f"Γ+ 밖: Π sn(γ + K) = {sign:.3e}", witness=gamma)

    s, tags = [], []
    for g in gamma:
        try:
            if name == 'S3':
                v = abs(jacobi('ds', g, tp).real) / k
            else:
                v = abs(jacobi('cs', g, tp).real) / (kp if name == 'S1' else 1.0)
        except PoleHit:
            v = math.inf
        s.append(v)
        tags.append('infinite' if math.isinf(v) else 'zero' if v == 0 else None)

    a, b, c = sorted(s, reverse=True)
    thresholds = class_thresholds(a, b) if math.isfinite(a) else (math.nan, math.nan)
    consistent = True
    if all(t is None for t in tags):
        expected = _expected_class(c, *thresholds)
        near = min(abs(c - thresholds[0]), abs(c - thresholds[1])) <= 1e-8 * max(1.0, c)
        consistent = expected == name or near
        if not consistent:
            logger.warning(f"⚠️ φ 결과 {tuple(s)} 가 분류 {name} 이 아니라 {expected} 에 속합니다")
    return TriangularPoint(tuple(s), name, float(k), gamma, K, thresholds, tuple(tags), consistent)


def _bracket_root(func: Callable[[float], float], lo: float, hi: float,
                  lo_limit: float, hi_limit: float) -> float:
    """부호가 바뀔 때까지 구간 끝을 로그 간격으로 넓힌 뒤 brentq"""
    los = [lo] + [lo_limit + (lo - lo_limit) * 10.0 ** -i for i in (3, 6)] + [lo_limit]
    his = [hi] + [hi_limit - (hi_limit - hi) * 10.0 ** -i for i in (3, 6)] + [hi_limit]
    for a, b in zip(los, his):
        try:
            fa, fb = func(a), func(b)
        except (ZeroDivisionError, ValueError):
            continue
        if fa == 0:
            return a
        if fb == 0:
            return b
        if fa * fb < 0:
            return brentq(func, a, b, xtol=CLASSIFY_CONFIG['xtol'], rtol=4 * np.finfo(float).eps, maxiter=500)
    raise NonConvergent(f"근 구간을 찾지 못했습니다 ([{lo_limit}, {hi_limit}])", witness=(lo_limit, hi_limit))


def _rho_equation(a: float, b: float, dt: int) -> Callable[[float], float]:
    """분류 1 (dt=0) / 2 (dt=1) 에서 s_(3) 을 k' 의 함수로"""
    def f(x: float) -> float:
        g1 = math.sqrt(x ** (2 * (1 - dt)) * a * a + 1) / math.sqrt(a * a + x ** (2 * dt))
        g2 = math.sqrt(x ** (2 * (1 - dt)) * b * b + 1) / math.sqrt(b * b + x ** (2 * dt))
        val = (b * a * g2 * g1 - 1) / (b * g1 + a * g2)
        return val / x if dt == 0 else val
    return f


def _ds_equation(a: float, b: float) -> Callable[[float], float]:
    """분류 3 에서 s_(3) 을 x = k'/k ∈ (0, s_(2)] 의 함수로 (ε1 = ε2 = 1 가지)"""
    ra, rb = math.sqrt(a * a + 1), math.sqrt(b * b + 1)

    def f(x: float) -> float:
        qa = math.sqrt(max(a * a - x * x, 0.0))
        qb = math.sqrt(max(b * b - x * x, 0.0))
        den = a * qa / ra + b * qb / rb
        if den == 0:
            return math.inf
        return (b * a - qa * qb / (ra * rb)) / den
    return f


def _solve_class(name: str, a: float, b: float, c: float) -> Tuple[float, float, float, float]:
    """정렬된 (a, b, c) 에 대해 (k, γ_a, γ_b, γ_c)"""
    lo, hi = CLASSIFY_CONFIG['kprime_bracket']
    if name in ('S1', 'S2'):
        dt = 0 if name == 'S1' else 1
        f = _rho_equation(a, b, dt)
        kp = _bracket_root(lambda x: f(x) - c, lo, hi, lo_limit=1e-300 if dt == 0 else 0.0, hi_limit=1.0)
        k = math.sqrt(max(1 - kp * kp, 0.0))
        tp = TorusParams.from_modulus(k)
        K = float(tp.K.real)
        scale = 1.0 if dt == 0 else 1.0 / kp
        da = inverse_jacobi('sc', a * scale, tp)
        db = inverse_jacobi('sc', b * scale, tp)
        ga, gb = da - K, db - K
        return k, ga, gb, -ga - gb

    f = _ds_equation(a, b)
    x = _bracket_root(lambda v: f(v) - c, b * lo, b * hi, lo_limit=0.0, hi_limit=b)
    k = 1.0 / math.sqrt(1 + x * x)
    tp = TorusParams.from_modulus(k)
    da = inverse_jacobi('ds', k * a, tp)
    db = inverse_jacobi('ds', k * b, tp)
    return k, da, db, -da - db


def triangular_classify(s: Sequence[float]) -> TriangularPoint:
    """
    s = (sinh 2J_1, sinh 2J_2, sinh 2J_3) 의 분류와 (k, γ) 역산

    정렬된 s_(1) ≥ s_(2) ≥ s_(3) 에 대해
      s_(3) < S → S1 (계열 I), S < s_(3) < T → S2 (계열 II), s_(3) > T → S3 (계열 III)
    경계에서 1e-10 이내이면 BoundaryCase (witness 에 인접한 두 분류와 퇴화 k).
    """
    s = tuple(float(v) for v in s)
    if len(s) != 3 or any(not math.isfinite(v) or v < 0 for v in s):
        raise DomainError(f"s 는 0 이상의 유한값 세 개여야 합니다: {s}", witness=s)
    order = sorted(range(3), key=lambda i: -s[i])
    a, b, c = (s[i] for i in order)
    if b <= 0:
        raise DomainError(f"가장 큰 두 값이 양수여야 합니다: {s}", witness=s)

    S, T = class_thresholds(a, b)
    tol = TOLERANCES['boundary']
    if abs(c - S) <= tol * max(1.0, S):
        raise BoundaryCase(f"s_(3) = {c} 가 S = {S} 경계 (S1/S2, k = 0)",
                           witness={'classes': ['S1', 'S2'], 'k': 0.0, 's': list(s), 'S': S, 'T': T})
    if abs(c - T) <= tol * max(1.0, T):
        raise BoundaryCase(f"s_(3) = {c} 가 T = {T} 경계 (S2/S3, k → 1)",
                           witness={'classes': ['S2', 'S3'], 'k': 1.0, 's': list(s), 'S': S, 'T': T})
    name = _expected_class(c, S, T)

    k, ga, gb, gc = _solve_class(name, a, b, c)
    gamma = [0.0] * 3
    for idx, value in zip(order, (ga, gb, gc)):
        gamma[idx] = value

    point = triangular_forward(name, k, gamma)
    residual = max(abs(x - y) / max(1.0, abs(y)) for x, y in zip(point.s, s))
    point.s = s
    point.residual = residual
    if residual > 1e-8:
        raise NonConvergent(f"왕복 잔차 {residual:.2e} 초과 (분류 {name}, k = {k})",
                            witness={'s': list(s), 'class': name, 'k': k, 'residual': residual})
    logger.info(f"🔺 {s} → {name} (계열 {CLASS_FAMILY[name]}), k = {k:.12g}, 잔차 {residual:.1e}")
    return point


def triangular_isotropic(k: float) -> TriangularPoint:
    """등방 모형: 분류 3, γ = (4K/3, -2K/3, -2K/3), s = ds(2K/3)/k"""
    K = float(TorusParams.from_modulus(k).K.real)
    return triangular_forward('S3', k, (4 * K / 3, -2 * K / 3, -2 * K / 3))


def triangular_anisotropic(k: float) -> TriangularPoint:
    """비등방 모형: 분류 1, γ = (2K/3, -K/3, -K/3), s = (sc(K/3), sc(2K/3), sc(2K/3))"""
    K = float(TorusParams.from_modulus(k).K.real)
    return triangular_forward('S1', k, (2 * K / 3, -K / 3, -K / 3))


def classify_many(triples: Sequence[Sequence[float]], progress: bool = False) -> pd.DataFrame:
    """여러 s 삼중쌍 분류 (경계/실패는 status 열에 기록)"""
    rows = []
    for s in tqdm(triples, desc='분류', disable=not progress):
        row: Dict[str, Any] = {'s1': s[0], 's2': s[1], 's3': s[2]}
        try:
            p = triangular_classify(s)
            row.update({'class': p.klass, 'family': p.family, 'k': p.k,
                        'gamma1': p.gamma[0], 'gamma2': p.gamma[1], 'gamma3': p.gamma[2],
                        'residual': p.residual, 'status': 'ok'})
        except BoundaryCase as e:
            row.update({'class': 'boundary', 'k': e.witness['k'], 'status': '/'.join(e.witness['classes'])})
        except FrustrixError as e:
            row.update({'class': None, 'status': f'{type(e).__name__}: {e}'})
        rows.append(row)
    return pd.DataFrame(rows)


# =============================================================================
# 정사각 격자
# =============================================================================

@dataclass
class SquareFactorization:
    """완전 프러스트레이션 정사각 격자: P⁻(2×2) = λ·P⁺(1×1)(z, -w)² 피팅 결과"""
    k: float
    J: float
    J_plus: float
    lam: complex
    residual: float
    transform: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {'k': self.k, 'J': self.J, 'J_plus': self.J_plus, 'lambda': self.lam,
                'residual': self.residual, 'transform': self.transform}


def square_frustrated_coupling(k: float) -> float:
    """sinh(2J) = √(k'(1+k'))/k"""
    if not 0 < k < 1:
        raise DomainError(f"k ∈ (0,1) 이어야 합니다: {k}", witness=k)
    kp = math.sqrt(1 - k * k)
    return 0.5 * math.asinh(math.sqrt(kp * (1 + kp)) / k)


def _ferro_square(j_plus: float) -> LaurentPoly2:
    g1 = square(1, 1)
    ca = coupling_assignment([1] * g1.n_edges, [j_plus] * g1.n_edges, g1)
    q = fisher_charpoly(g1, ca).twisted(1, -1)
    return q * q


def _best_match(p: LaurentPoly2, q: LaurentPoly2) -> Tuple[complex, float, Dict[str, Any]]:
    best = None
    for swapped in (False, True):
        cand = q.swapped() if swapped else q
        try:
            c, residual, info = proportionality_up_to_twist(p, cand)
        except SupportMismatch:
            continue
        if best is None or residual < best[1]:
            info = dict(info, swapped=swapped)
            best = (c, residual, info)
    if best is None:
        return 0j, math.inf, {}
    return best


def _transformed(q: LaurentPoly2, info: Dict[str, Any]) -> LaurentPoly2:
    if info.get('swapped'):
        q = q.swapped()
    q = q.reflected(*info['flip'])
    return q.twisted(*info['twist'])


def square_frustrated(k: float, grid: int = 60) -> SquareFactorization:
    """
    2×2 완전 프러스트레이션 모형 (|J| = J(k)) 의 특성 다항식을
    강자성 1×1 모형 (J₊) 특성 다항식의 (z, -w) 제곱과 비교

    J₊ 는 격자 탐색 후 계수 최소제곱으로 다듬습니다.
    """
    J = square_frustrated_coupling(k)
    g2 = square(2, 2)
    eps = signs_from_frustration(g2, [-1] * g2.n_faces)
    p_minus = fisher_charpoly(g2, coupling_assignment(eps, [J] * g2.n_edges, g2))

    scan = []
    for jp in np.geomspace(1e-3, 5.0, grid):
        c, residual, info = _best_match(p_minus, _ferro_square(float(jp)))
        scan.append((residual, float(jp), info))
    _, j0, info = min(scan, key=lambda r: r[0])
    if not info:
        raise SupportMismatch("어떤 J₊ 에서도 지지 집합이 맞지 않습니다", witness=k)

    keys = sorted(set(p_minus.support()) | set(_transformed(_ferro_square(j0), info).support()))
    scale = p_minus.max_coeff()

    def residual_vector(x: np.ndarray) -> np.ndarray:
        q = _transformed(_ferro_square(float(np.exp(x[0]))), info)
        qv = np.array([q[m] for m in keys])
        pv = np.array([p_minus[m] for m in keys])
        lam = np.vdot(qv, pv) / np.vdot(qv, qv)
        diff = (pv - lam * qv) / scale
        return np.concatenate([diff.real, diff.imag])

    sol = least_squares(residual_vector, [math.log(j0)], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    j_plus = float(np.exp(sol.x[0]))
    q = _transformed(_ferro_square(j_plus), info)
    lam, residual, _ = _best_match(p_minus, q)
    logger.info(f"🟦 k = {k}: J = {J:.10g}, J₊ = {j_plus:.10g}, 잔차 {residual:.2e}")
    return SquareFactorization(float(k), J, j_plus, complex(lam), float(residual),
                               {'twist': list(info['twist']), 'flip': list(info['flip']),
                                'swapped': info['swapped']})


def coupling_sweep(kind: str, ks: Sequence[float]) -> pd.DataFrame:
    """
    k 에 따른 결합 상수 곡선

    kind: 'square' (완전 프러스트레이션 정사각), 'triangular-isotropic', 'triangular-anisotropic'
    """
    rows = []
    for k in ks:
        k = float(k)
        if kind == 'square':
            rows.append({'k': k, 'J': square_frustrated_coupling(k)})
        elif kind == 'triangular-isotropic':
            rows.append({'k': k, 'J': triangular_isotropic(k).J[0]})
        elif kind == 'triangular-anisotropic':
            J = triangular_anisotropic(k).J
            rows.append({'k': k, 'J_1': J[0], 'J_2': J[1], 'J_3': J[2]})
        else:
            raise DomainError(f"알 수 없는 곡선 종류: {kind}", witness=kind)
    logger.info(f"📈 {kind} 결합 곡선 {len(rows)}점")
    return pd.DataFrame(rows)

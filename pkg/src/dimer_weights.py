"""
다이머 가중치 모듈
Fisher / 이징-다이머 / Fock 가중치 체계, 면 가중치, 게이지 동치, 실수성, 쌍대 이동

G^Q 면 가중치는 face_darts 순서의 교대 곱입니다 (짝수 위치 = 흰→검 다트가 분자).
  사각 면 y: 분자 = 원 평행 간선, 원 면 v: 분자 = 쌍대 평행 간선, 쌍대 면 f: 분모 = 원 평행 간선
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from config import TOLERANCES
from elliptic_kernel import (TH00, TH11, HalfPeriod, TorusParams, jacobi_torus, modular_transform,
                             theta)
from errors import (DegenerateCoupling, DomainError, FamilyMismatch, MalformedEmbedding, PoleHit,
                    RegistryMismatch)
from kasteleyn_poly import dimer_kmatrix
from lattice import FAMILY, AbelMap, AngleMap, DecoratedGraph, PeriodicGraph, discrete_abel

logger = logging.getLogger(__name__)

ROLE_OF_SLOT = ('primal', 'dual', 'external')


# =============================================================================
# 결합 상수
# =============================================================================

@dataclass
class CouplingAssignment:
    """간선별 부호 ε_e, 절대 결합 J_e 와 면별 프러스트레이션 δ_f"""
    eps: List[int]
    J: List[float]
    delta: List[int]

    @property
    def signed(self) -> List[float]:
        return [e * j for e, j in zip(self.eps, self.J)]

    def to_dict(self) -> Dict[str, Any]:
        return {'eps': list(self.eps), 'J': list(self.J), 'delta': list(self.delta)}


def frustration(g: PeriodicGraph, eps: Sequence[int]) -> List[int]:
    """δ_f = Π_{e∈∂f} ε_e (경계에 두 번 나오는 간선은 상쇄)"""
    out = []
    for darts in g.faces:
        prod = 1
        for d in darts:
            prod *= eps[d >> 1]
        out.append(prod)
    return out


def coupling_assignment(eps: Sequence[int], J: Sequence[float], g: PeriodicGraph) -> CouplingAssignment:
    """ε, J 로부터 δ 를 유도한 결합 상수 묶음"""
    if len(eps) != g.n_edges or len(J) != g.n_edges:
        raise MalformedEmbedding(f"결합 상수 개수 ({len(eps)}, {len(J)}) 가 간선 수 {g.n_edges} 와 다릅니다")
    eps = [int(e) for e in eps]
    if any(e not in (1, -1) for e in eps):
        raise DomainError(f"ε 는 ±1 이어야 합니다: {eps}", witness=eps)
    J = [float(j) for j in J]
    if any(j < 0 or not math.isfinite(j) for j in J):
        raise DomainError(f"J 는 0 이상의 유한값이어야 합니다: {J}", witness=J)
    return CouplingAssignment(eps, J, frustration(g, eps))


def from_signed_couplings(g: PeriodicGraph, couplings: Sequence[float]) -> CouplingAssignment:
    """부호 있는 결합 상수 εJ 에서 (ε, J) 분리 (0 은 ε = +1)"""
    eps = [-1 if c < 0 else 1 for c in couplings]
    return coupling_assignment(eps, [abs(c) for c in couplings], g)


def weak_dual_couplings(J: Sequence[float]) -> List[float]:
    """약한 쌍대 결합 sinh(2J*) = 1/sinh(2J)"""
    out = []
    for j in J:
        if j <= 0:
            raise DegenerateCoupling(f"J = {j} 의 쌍대 결합은 무한대입니다", witness=j)
        out.append(0.5 * math.asinh(1.0 / math.sinh(2 * j)))
    return out


# =============================================================================
# Fisher / 이징-다이머 가중치
# =============================================================================

def fisher_weights(dg: DecoratedGraph, ca: CouplingAssignment) -> List[float]:
    """G^F 간선 가중치: 긴 간선 tanh(ε_e J_e), 짧은 간선 1"""
    if dg.kind != 'fisher':
        raise MalformedEmbedding(f"Fisher 그래프가 아닙니다: {dg.kind}")
    E = dg.base.n_edges
    return [math.tanh(ca.eps[i] * ca.J[i]) if i < E else 1.0 for i in range(dg.graph.n_edges)]


def ising_dimer_weights(dg: DecoratedGraph, ca: CouplingAssignment) -> List[float]:
    """G^Q 간선 가중치: 원 평행 tanh(2εJ), 쌍대 평행 1/cosh(2J), 외부 1"""
    if dg.kind != 'GQ':
        raise MalformedEmbedding(f"G^Q 가 아닙니다: {dg.kind}")
    out = []
    for i in range(dg.graph.n_edges):
        e = (i // 3) >> 1
        role = ROLE_OF_SLOT[i % 3]
        if role == 'primal':
            out.append(math.tanh(2 * ca.eps[e] * ca.J[e]))
        elif role == 'dual':
            out.append(1.0 / math.cosh(2 * ca.J[e]))
        else:
            out.append(1.0)
    return out


# =============================================================================
# 면 가중치 표
# =============================================================================

@dataclass
class FaceWeightTable:
    """G^Q 면별 가중치 (종류: square / primal / dual)"""
    values: Dict[int, complex]
    kinds: Dict[int, str]
    refs: Dict[int, int] = field(default_factory=dict)
    source: str = ''

    def __getitem__(self, f: int) -> complex:
        return self.values[f]

    def __len__(self) -> int:
        return len(self.values)

    def faces(self, kind: Optional[str] = None) -> List[int]:
        return sorted(f for f in self.values if kind is None or self.kinds[f] == kind)

    def to_json(self) -> Dict[str, Any]:
        return {
            'source': self.source,
            'faces': {
                str(f): {'kind': self.kinds[f], 'ref': self.refs.get(f),
                         're': complex(self.values[f]).real, 'im': complex(self.values[f]).imag}
                for f in self.faces()
            },
        }


def _new_table(dg: DecoratedGraph, source: str) -> FaceWeightTable:
    return FaceWeightTable({}, dict(enumerate(dg.face_kind)), dict(enumerate(dg.face_ref)), source)


def ising_face_weights(dg: DecoratedGraph, ca: CouplingAssignment) -> FaceWeightTable:
    """
    이징-다이머 면 가중치 (J, δ 에만 의존)

    W(y) = -sinh²(2J_e), W(v) = (-1)^{|v|-1} Π sech(2J_e), W(f) = (-1)^{|f|-1} δ_f Π coth(2J_e)
    """
    g = dg.base
    table = _new_table(dg, 'ising')
    for f, (kind, ref) in enumerate(zip(dg.face_kind, dg.face_ref)):
        if kind == 'square':
            table.values[f] = complex(-math.sinh(2 * ca.J[ref]) ** 2)
        elif kind == 'primal':
            darts = g.rotation[ref]
            prod = math.prod(1.0 / math.cosh(2 * ca.J[d >> 1]) for d in darts)
            table.values[f] = complex((-1) ** (len(darts) - 1) * prod)
        else:
            darts = g.faces[ref]
            zero = [d >> 1 for d in darts if ca.J[d >> 1] == 0]
            if zero:
                raise DegenerateCoupling(f"J = 0 인 간선 {zero[0]} 때문에 W(f{ref}) 가 무한대", witness=dg.face_label(f))
            prod = math.prod(1.0 / math.tanh(2 * ca.J[d >> 1]) for d in darts)
            table.values[f] = complex((-1) ** (len(darts) - 1) * ca.delta[ref] * prod)
    return table


def _alternating_product(dg: DecoratedGraph, f: int, entry) -> complex:
    num, den = 1 + 0j, 1 + 0j
    for pos, x in enumerate(dg.face_darts(f)):
        value = entry(x >> 1)
        if pos % 2 == 0:
            num *= value
        else:
            den *= value
    if den == 0:
        raise PoleHit(f"면 {dg.face_label(f)} 의 교대 곱 분모가 0", witness=dg.face_label(f))
    return num / den


def ising_face_weights_from_kmatrix(dg: DecoratedGraph, ca: CouplingAssignment) -> FaceWeightTable:
    """실제 G^Q 카스텔레인 성분 (φ·ν) 의 교대 곱으로 계산한 면 가중치"""
    _, m = dimer_kmatrix(dg.base, ca, dg)
    values = {e: complex(p.evaluate(1.0, 1.0)) for e, (_, _, p) in m.edge_entries.items()}
    table = _new_table(dg, 'ising-kmatrix')
    for f in range(len(dg.face_kind)):
        try:
            table.values[f] = _alternating_product(dg, f, lambda e: values.get(e, 0j))
        except PoleHit as err:
            raise DegenerateCoupling(str(err), witness=err.witness) from err
    return table


# =============================================================================
# Fock 가중치
# =============================================================================

def match_family(rho: HalfPeriod, t: complex, tp: TorusParams) -> str:
    """(ρ, t) 가 분류 계열 I/II/III 중 어디에 해당하는지 ('other' 포함)"""
    for name, (frho, ft) in FAMILY.items():
        if name == 'III' and tp.trig:
            continue
        if (rho.j % 2, rho.l % 2) == (frho.j, frho.l) and tp.equal_mod_lattice(t, ft, 1e-12):
            return name
    return 'other'


@dataclass
class FockParams:
    """Fock 다이머 모형 파라미터 (τ, α, ρ, t) 와 이산 아벨 사상"""
    dg: DecoratedGraph
    tp: TorusParams
    am: AngleMap
    rho: HalfPeriod
    t: complex
    abel: Optional[AbelMap] = None

    def __post_init__(self):
        self.t = complex(self.t)
        if not self.tp.trig:
            bad = 0.5 + self.tp.tau / 2
            rv = self.rho.value(self.tp.tau)
            for forbidden in (bad, bad + rv):
                if self.tp.equal_mod_lattice(self.t, forbidden, 1e-12):
                    raise DomainError(f"퇴화 파라미터: t = {self.t} ≡ {forbidden}", witness=self.t)
        if self.abel is None:
            self.abel = discrete_abel(self.dg, self.am, None, self.tp)

    @property
    def family(self) -> str:
        return match_family(self.rho, self.t, self.tp)

    @property
    def angles(self) -> Dict[int, complex]:
        return self.am.gq_angles(self.dg)

    def with_t(self, t: complex) -> 'FockParams':
        return FockParams(self.dg, self.tp, self.am, self.rho, t, self.abel)


def fock_params(dg: DecoratedGraph, am: AngleMap, tp: TorusParams, family: Optional[str] = None,
                rho: Optional[HalfPeriod] = None, t: Optional[complex] = None) -> FockParams:
    """계열 이름 (I/II/III) 또는 명시적 (ρ, t) 로 FockParams 생성"""
    if family is not None:
        if family not in FAMILY:
            raise FamilyMismatch(f"알 수 없는 계열: {family}", witness=family)
        rho, t = FAMILY[family]
    if rho is None or t is None:
        raise FamilyMismatch("ρ 와 t 가 필요합니다")
    return FockParams(dg, tp, am, rho, t)


def _edge_angles(fp: FockParams, e: int, angles: Dict[int, complex]) -> Tuple[complex, complex]:
    dg = fp.dg
    y = 2 * e
    beta = angles[dg.corner_track(y)[0]]
    alpha = angles[dg.corner_track(dg.graph.prev_ccw[y])[0]]
    return beta, alpha


def fock_entry(fp: FockParams, e: int, face: Optional[int] = None,
               angles: Optional[Dict[int, complex]] = None) -> complex:
    """
    Fock 카스텔레인 성분 θ11(β-α) / (θ00(t+d(F_L))·θ00(t+d(F_R)))

    face 를 주면 그 면의 아벨 값을 기준으로 이웃 면 값을 d ± (β-α) 로 국소 리프트합니다.
    β ≡ α (mod Λ) 이면 0.
    """
    angles = angles if angles is not None else fp.angles
    gq = fp.dg.graph
    y = 2 * e
    beta, alpha = _edge_angles(fp, e, angles)
    inc = beta - alpha
    if fp.tp.equal_mod_lattice(inc, 0, 1e-14):
        return 0j

    fl, fr = gq.face_left(y), gq.face_right(y)
    if face is None:
        dl, dr = fp.abel[fl], fp.abel[fr]
    elif face == fl:
        dl = fp.abel[face]
        dr = dl - inc
    elif face == fr:
        dr = fp.abel[face]
        dl = dr + inc
    else:
        raise MalformedEmbedding(f"간선 {e} 는 면 {face} 에 속하지 않습니다", witness=(e, face))

    num = theta(TH11, inc, fp.tp)
    den = theta(TH00, fp.t + dl, fp.tp) * theta(TH00, fp.t + dr, fp.tp)
    if abs(den) < TOLERANCES['pole']:
        raise PoleHit(f"간선 {e} 의 θ00 분모가 0 (t + d 가 θ00 영점)", witness=e)
    return num / den


def _check_condition_two(fp: FockParams) -> None:
    if fp.rho.is_zero:
        raise FamilyMismatch("ρ = 0 에서는 닫힌 형태를 쓸 수 없습니다", witness=fp.rho.label())
    rv = fp.rho.value(fp.tp.tau)
    for track, fwd in fp.am.forward.items():
        if not fp.tp.equal_mod_lattice(fp.am.backward[track], fwd + rv, 1e-12):
            raise FamilyMismatch(f"트랙 {track} 에서 α← ≠ α→ + ρ", witness=track)


def _face_tracks(fp: FockParams, f: int, angles: Dict[int, complex]) -> Tuple[List[complex], List[complex]]:
    A, B = fp.dg.face_corner_tracks(f)
    return [angles[a] for a in A], [angles[b] for b in B]


def _square_closed_form(u: complex, t: complex, rho: HalfPeriod, tp: TorusParams) -> complex:
    j, l = rho.j % 2, rho.l % 2
    ratio = theta((1 + l, 1 + j), u, tp) / theta(TH11, u, tp)
    tt = theta(TH00, t, tp) / theta((l, j), t, tp)
    return (-1) ** j * ratio ** 2 * tt ** 2


def _closed_form(fp: FockParams, f: int, angles: Dict[int, complex]) -> complex:
    tp, t = fp.tp, fp.t
    j, l = fp.rho.j % 2, fp.rho.l % 2
    kind = fp.dg.face_kind[f]
    A, B = _face_tracks(fp, f, angles)
    n = len(A)
    outer = (1 + l, 1 + j)
    inner = (l, j)
    if kind == 'square':
        return _square_closed_form(A[0] - B[0], t, fp.rho, tp)
    value = complex((-1) ** n)
    if kind == 'dual':
        zero = theta(outer, 0.0, tp)
        base = theta(TH00, t, tp)
        for i in range(n):
            y = A[i - 1] - A[i]
            value *= zero / theta(outer, y, tp) * theta(TH00, t + y, tp) / base
        return value
    zero = theta(outer, 0.0, tp)
    base = theta(inner, t, tp)
    for i in range(n):
        z = A[i] - A[i - 1]
        value *= theta(outer, z, tp) / zero * base / theta(inner, t + z, tp)
    return value


def _table_form(fp: FockParams, f: int, angles: Dict[int, complex]) -> complex:
    """계열 I/II/III 의 야코비 타원 함수 표"""
    family = fp.family
    tp = fp.tp
    if family == 'other':
        raise FamilyMismatch(f"(ρ, t) = ({fp.rho.label()}, {fp.t}) 는 표 계열이 아닙니다", witness=fp.t)
    k = tp.real_k
    if k is None:
        raise FamilyMismatch("표 형태는 실수 k ∈ [0,1) 에서만 쓸 수 있습니다", witness=tp.k)
    kp = math.sqrt(1 - k * k)
    rv = fp.rho.value(tp.tau)
    kind = fp.dg.face_kind[f]
    A, B = _face_tracks(fp, f, angles)
    n = len(A)
    jt = lambda name, x: jacobi_torus(name, x, tp)

    if kind == 'square':
        x = A[0] - B[0] + rv
        if family == 'I':
            return -jt('sc', x) ** 2
        if family == 'II':
            return -kp ** 2 * jt('sc', x) ** 2
        xr = complex(x.real)
        return -(kp ** 2 / k ** 2) * jt('nc', xr) ** 2

    value = complex((-1) ** n)
    if kind == 'dual':
        for i in range(n):
            x = A[i - 1] - A[i] + rv
            if family == 'I':
                value *= jt('ns', x)
            elif family == 'II':
                value *= jt('ds', x) / kp
            else:
                value *= jt('nd', A[i - 1] - A[i])
        return value

    for i in range(n):
        x = A[i] - A[(i + 1) % n] + rv
        if family == 'I':
            value *= kp * jt('sd', x)
        elif family == 'II':
            value *= jt('sn', x)
        else:
            value *= k * jt('sn', x)
    return value


def fock_face_weight(fp: FockParams, f: int, mode: str = 'raw',
                     angles: Optional[Dict[int, complex]] = None) -> complex:
    """
    Fock 면 가중치

    mode: 'raw' (성분 교대 곱), 'closed_form' (세타 닫힌 형태), 'table' (야코비 표, 계열 I/II/III)
    """
    angles = angles if angles is not None else fp.angles
    if mode == 'raw':
        return _alternating_product(fp.dg, f, lambda e: fock_entry(fp, e, face=f, angles=angles))
    if mode in ('closed_form', 'table'):
        _check_condition_two(fp)
        if mode == 'closed_form':
            return _closed_form(fp, f, angles)
        return _table_form(fp, f, angles)
    raise FamilyMismatch(f"알 수 없는 면 가중치 방식: {mode}", witness=mode)


def fock_face_weights(fp: FockParams, mode: str = 'raw') -> FaceWeightTable:
    """모든 G^Q 면의 Fock 면 가중치 표"""
    angles = fp.angles
    table = _new_table(fp.dg, f'fock-{mode}')
    for f in range(len(fp.dg.face_kind)):
        table.values[f] = fock_face_weight(fp, f, mode, angles)
    logger.debug(f"📐 Fock 면 가중치 {len(table)}개 ({mode}, 계열 {fp.family})")
    return table


# =============================================================================
# 비교 / 실수성 / 쌍대 / 모듈러
# =============================================================================

@dataclass
class GaugeReport:
    """게이지 동치 판정 결과와 최악의 면"""
    equivalent: bool
    worst_face: Optional[int]
    worst_gap: float
    worst_kind: Optional[str] = None

    def __bool__(self) -> bool:
        return self.equivalent

    def to_dict(self) -> Dict[str, Any]:
        return {'equivalent': self.equivalent, 'worst_face': self.worst_face,
                'worst_kind': self.worst_kind, 'worst_gap': self.worst_gap}


def _rel_gap(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def gauge_equivalent(a: FaceWeightTable, b: FaceWeightTable, tol: Optional[float] = None) -> GaugeReport:
    """모든 면 가중치가 상대 오차 tol 안에서 일치하면 게이지 동치"""
    tol = TOLERANCES['gauge'] if tol is None else tol
    if set(a.values) != set(b.values) or any(a.kinds[f] != b.kinds[f] for f in a.values):
        raise RegistryMismatch(f"면 등록부 불일치 ({a.source} vs {b.source})")
    worst, gap = None, 0.0
    for f in a.faces():
        g = _rel_gap(a[f], b[f])
        if worst is None or g > gap:
            worst, gap = f, g
    return GaugeReport(gap <= tol, worst, gap, a.kinds.get(worst) if worst is not None else None)


def is_real_model(fp: FockParams, faces: Optional[Sequence[int]] = None, mode: str = 'raw',
                  tol: Optional[float] = None) -> bool:
    """모든 면 가중치의 허수부가 상대 tol 이하인지"""
    tol = TOLERANCES['face_weight'] if tol is None else tol
    faces = range(len(fp.dg.face_kind)) if faces is None else faces
    angles = fp.angles
    for f in faces:
        w = fock_face_weight(fp, f, mode, angles)
        if abs(w.imag) > tol * max(1.0, abs(w)):
            logger.debug(f"🔎 면 {fp.dg.face_label(f)} 비실수: {w}")
            return False
    return True


def dual_params(fp: FockParams) -> FockParams:
    """약한 쌍대: t → t + ρ"""
    rv = fp.rho.value(fp.tp.tau)
    return fp.with_t(fp.t + rv)


def weak_duality_report(fp: FockParams, mode: str = 'raw') -> Dict[str, Dict[int, float]]:
    """
    사각 면별 약한 쌍대 검사

    G* 쪽은 쌍대 간선 각도 쌍 (β, α+ρ) 와 t+ρ 로 읽습니다.
    products: sinh²(2J)·sinh²(2J*) (J 는 -W_t(y), J* 는 -W*_{t+ρ}(y) 에서)
    ratios: W_t(y) / W_{G*,t+ρ}(y)
    쌍대이면 두 값 모두 1 입니다.
    """
    rv = fp.rho.value(fp.tp.tau)
    t_star = fp.t + rv
    angles = fp.angles
    products, ratios = {}, {}
    for f in fp.dg.faces_of_kind('square'):
        w = fock_face_weight(fp, f, mode, angles)
        A, B = _face_tracks(fp, f, angles)
        w_star = _square_closed_form(A[0] - B[0] + rv, t_star, fp.rho, fp.tp)
        J = 0.5 * math.asinh(math.sqrt(max(-w.real, 0.0)))
        J_star = 0.5 * math.asinh(math.sqrt(max(-w_star.real, 0.0)))
        products[f] = math.sinh(2 * J) ** 2 * math.sinh(2 * J_star) ** 2
        # G* 면 가중치는 G* 색칠에서 역수
        ratios[f] = (w * w_star).real
        logger.debug(f"🔁 면 {fp.dg.face_label(f)}: W={w.real:.6g}, W*={w_star.real:.6g}")
    return {'products': products, 'ratios': ratios}


def match_half_period(value: complex, tp: TorusParams) -> HalfPeriod:
    for j in (0, 1):
        for l in (0, 1):
            cand = HalfPeriod(j, l)
            if tp.equal_mod_lattice(cand.value(tp.tau), value, 1e-10):
                return cand
    raise DomainError(f"반주기가 아닙니다: {value}", witness=value)


def modular_face_weights(fp: FockParams, which: str, mode: str = 'raw') -> FaceWeightTable:
    """
    모듈러 변환 후의 같은 면 가중치

    'T': τ → τ+1, 각도 그대로, t → t + 1/2
    'S': τ → -1/τ, 모든 인자 (α, t) 에 -1/τ 를 곱함
    """
    if fp.tp.trig:
        raise DomainError("삼각 퇴화에는 모듈러 변환을 적용할 수 없습니다")
    tau = fp.tp.tau
    new_tp = modular_transform(fp.tp, which)
    if which == 'T':
        scale, shift = 1.0, 0.5
    else:
        scale, shift = -1.0 / tau, 0.0
    am = fp.am
    rho = match_half_period(fp.rho.value(tau) * scale, new_tp)
    new_am = AngleMap({k: v * scale for k, v in am.forward.items()}, rho, new_tp.tau,
                      {k: v * scale for k, v in am.backward.items()})
    new_fp = FockParams(fp.dg, new_tp, new_am, rho, fp.t * scale + shift)
    table = fock_face_weights(new_fp, mode)
    table.source = f'fock-{mode}-{which}'
    return table

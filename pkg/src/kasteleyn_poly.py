"""
카스텔레인 모듈
카스텔레인 부호/위상 탐색, 라우렌트 다항식 카스텔레인 행렬, 행렬식과 특성 다항식

교차 규약 (다트 tail→head 의 오프셋 (dx, dy) 마다 z^dx w^dy):
  비이분: K[tail, head] = η·ν·z^dx w^dy, K[head, tail] = -η·ν·z^-dx w^-dy
  이분:   K[흰, 검] = φ·ν·z^dx w^dy (흰 → 검 방향 오프셋)
부호는 간선마다 s_e = η(2e) ∈ {±1} 로 저장하고 η(2e+1) = -s_e 입니다.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy.spatial import ConvexHull

from config import CLASSIFY_CONFIG, TOLERANCES
from errors import DegreeBoundExceeded, MissingWeight, NoAssignment, SupportMismatch
from lattice import WHITE, DecoratedGraph, PeriodicGraph, bipartite_coloring, build_fisher, build_GQ

logger = logging.getLogger(__name__)

Monomial = Tuple[int, int]

MAX_DIMENSION = 64
COFACTOR_LIMIT = 10
GRID_ENTRY_LIMIT = 4e7


# =============================================================================
# 라우렌트 다항식
# =============================================================================

class LaurentPoly2:
    """2변수 라우렌트 다항식 Σ c_ij z^i w^j (희소 딕셔너리)"""

    __slots__ = ('terms',)

    def __init__(self, terms: Optional[Mapping[Monomial, complex]] = None):
        self.terms: Dict[Monomial, complex] = {}
        for (i, j), c in (terms or {}).items():
            c = complex(c)
            if c != 0:
                self.terms[(int(i), int(j))] = c

    @classmethod
    def constant(cls, c: complex) -> 'LaurentPoly2':
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, i: int, j: int, c: complex = 1.0) -> 'LaurentPoly2':
        return cls({(i, j): c})

    # --------------------------------------------------------------- access
    def __getitem__(self, m: Monomial) -> complex:
        return self.terms.get(m, 0j)

    def __iter__(self) -> Iterator[Tuple[Monomial, complex]]:
        return iter(sorted(self.terms.items()))

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def support(self) -> List[Monomial]:
        return sorted(self.terms)

    def max_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def degree_bounds(self) -> Tuple[int, int, int, int]:
        """(i_min, i_max, j_min, j_max)"""
        if not self.terms:
            return 0, 0, 0, 0
        i_vals = [i for i, _ in self.terms]
        j_vals = [j for _, j in self.terms]
        return min(i_vals), max(i_vals), min(j_vals), max(j_vals)

    # ------------------------------------------------------------ arithmetic
    def __add__(self, other) -> 'LaurentPoly2':
        other = _as_poly(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0j) + c
        return LaurentPoly2(out)

    __radd__ = __add__

    def __neg__(self) -> 'LaurentPoly2':
        return LaurentPoly2({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> 'LaurentPoly2':
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> 'LaurentPoly2':
        return _as_poly(other) - self

    def __mul__(self, other) -> 'LaurentPoly2':
        if not isinstance(other, LaurentPoly2):
            c = complex(other)
            return LaurentPoly2({m: a * c for m, a in self.terms.items()})
        out: Dict[Monomial, complex] = {}
        for (i1, j1), a in self.terms.items():
            for (i2, j2), b in other.terms.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0j) + a * b
        return LaurentPoly2(out)

    __rmul__ = __mul__

    def cleanup(self, rel: Optional[float] = None) -> 'LaurentPoly2':
        """최대 계수 대비 rel 미만의 계수 제거"""
        rel = TOLERANCES['coeff_cleanup'] if rel is None else rel
        thr = rel * self.max_coeff()
        return LaurentPoly2({m: c for m, c in self.terms.items() if abs(c) > thr})

    # ------------------------------------------------------------ transforms
    def scaled(self, lam: complex, mu: complex) -> 'LaurentPoly2':
        """p(λz, μw)"""
        return LaurentPoly2({(i, j): c * lam ** i * mu ** j for (i, j), c in self.terms.items()})

    def twisted(self, sz: int, sw: int) -> 'LaurentPoly2':
        """p(±z, ±w)"""
        return LaurentPoly2({(i, j): c * sz ** (i % 2) * sw ** (j % 2) for (i, j), c in self.terms.items()})

    def reflected(self, flip_z: bool, flip_w: bool) -> 'LaurentPoly2':
        """z → 1/z (flip_z), w → 1/w (flip_w)"""
        return LaurentPoly2({(-i if flip_z else i, -j if flip_w else j): c for (i, j), c in self.terms.items()})

    def inverted(self) -> 'LaurentPoly2':
        """p(1/z, 1/w)"""
        return self.reflected(True, True)

    def swapped(self) -> 'LaurentPoly2':
        return LaurentPoly2({(j, i): c for (i, j), c in self.terms.items()})

    # ------------------------------------------------------------ evaluation
    def evaluate(self, z, w):
        """numpy 브로드캐스팅 평가 (스칼라 입력이면 complex)"""
        zz = np.asarray(z, dtype=complex)
        ww = np.asarray(w, dtype=complex)
        out = np.zeros(np.broadcast(zz, ww).shape, dtype=complex)
        for (i, j), c in self.terms.items():
            out = out + c * zz ** i * ww ** j
        return complex(out) if out.ndim == 0 else out

    def newton_polygon(self) -> List[Monomial]:
        """뉴턴 다각형 꼭짓점 (반시계, 일직선이면 양 끝점)"""
        pts = np.array(self.support(), dtype=float)
        if len(pts) <= 2:
            return [tuple(map(int, p)) for p in pts]
        centered = pts - pts.mean(axis=0)
        if np.linalg.matrix_rank(centered) < 2:
            direction = centered[np.argmax(np.linalg.norm(centered, axis=1))]
            proj = centered @ direction
            ends = [pts[int(np.argmin(proj))], pts[int(np.argmax(proj))]]
            return [tuple(map(int, p)) for p in ends]
        hull = ConvexHull(pts)
        return [tuple(map(int, pts[v])) for v in hull.vertices]

    # --------------------------------------------------------- serialization
    def to_json(self) -> Dict[str, List[Dict[str, float]]]:
        return {'terms': [{'i': i, 'j': j, 're': c.real, 'im': c.imag} for (i, j), c in self]}

    @classmethod
    def from_json(cls, data: Mapping) -> 'LaurentPoly2':
        return cls({(int(t['i']), int(t['j'])): complex(t['re'], t.get('im', 0.0)) for t in data['terms']})

    def __repr__(self) -> str:
        shown = ', '.join(f"({i},{j}): {c:.4g}" for (i, j), c in list(self)[:6])
        more = '' if len(self) <= 6 else f", ... (+{len(self) - 6})"
        return f"LaurentPoly2({{{shown}{more}}})"


def _as_poly(x) -> LaurentPoly2:
    return x if isinstance(x, LaurentPoly2) else LaurentPoly2.constant(x)


# =============================================================================
# 카스텔레인 부호
# =============================================================================

def _face_system(g: PeriodicGraph, bipartite: bool) -> Tuple[List[List[int]], List[int]]:
    """면마다 (홀수 번 등장하는 간선, GF(2) 목표값)"""
    edges_of, target = [], []
    for darts in g.faces:
        count: Dict[int, int] = {}
        for d in darts:
            count[d >> 1] = count.get(d >> 1, 0) ^ 1
        edges_of.append(sorted(e for e, odd in count.items() if odd))
        if bipartite:
            target.append((len(darts) // 2 + 1) % 2)
        else:
            odd_darts = sum(d & 1 for d in darts)
            target.append((len(darts) - 1 + odd_darts) % 2)
    return edges_of, target


def check_kasteleyn_signs(g: PeriodicGraph, signs: Sequence[int], bipartite: bool) -> List[int]:
    """카스텔레인 조건을 위반하는 면 목록 (빈 목록이면 유효)"""
    bad = []
    for f, darts in enumerate(g.faces):
        prod = 1
        for d in darts:
            s = signs[d >> 1]
            prod *= s if (bipartite or d % 2 == 0) else -s
        n = len(darts)
        expect = (-1) ** (n // 2 + 1) if bipartite else (-1) ** (n - 1)
        if prod != expect:
            bad.append(f)
    return bad


def solve_face_parity(g: PeriodicGraph, bipartite: bool,
                      target: Optional[Sequence[int]] = None) -> Optional[List[int]]:
    """
    쌍대 신장 트리 잎 제거로 GF(2) 면 조건 풀이

    트리 밖 간선은 0, 잎부터 올라가며 부모 트리 간선으로 면 패리티를 맞추고
    마지막에 루트 면을 확인합니다. 실패하면 None.
    target 을 주면 카스텔레인 조건 대신 면별 목표 패리티를 씁니다.
    """
    edges_of, kasteleyn_target = _face_system(g, bipartite)
    target = kasteleyn_target if target is None else [int(t) % 2 for t in target]
    dual = nx.MultiGraph()
    dual.add_nodes_from(range(g.n_faces))
    for e in range(g.n_edges):
        fl, fr = g.face_left(2 * e), g.face_right(2 * e)
        if fl != fr:
            dual.add_edge(fl, fr, key=e)

    order = [0]
    tree_edge: Dict[int, int] = {}
    for parent, child in nx.bfs_edges(dual, 0):
        tree_edge[child] = next(iter(dual.get_edge_data(parent, child)))
        order.append(child)
    if len(order) != g.n_faces:
        logger.debug("🌳 쌍대 그래프가 연결되어 있지 않음")
        return None

    x = [0] * g.n_edges
    for f in reversed(order[1:]):
        parity = sum(x[e] for e in edges_of[f]) % 2
        if parity != target[f]:
            x[tree_edge[f]] ^= 1
    root_parity = sum(x[e] for e in edges_of[0]) % 2
    if root_parity != target[0]:
        logger.debug(f"🌳 루트 면 패리티 불일치 (V={g.n_vertices})")
        return None
    return x


def exhaustive_kasteleyn_signs(g: PeriodicGraph, bipartite: bool,
                               limit: Optional[int] = None) -> List[List[int]]:
    """모든 ±1 부호 조합 전수 탐색 (간선 수 ≤ exhaustive_edges)"""
    E = g.n_edges
    if E > CLASSIFY_CONFIG['exhaustive_edges']:
        raise NoAssignment(f"전수 탐색 한도 초과: 간선 {E}개", witness=E)
    edges_of, target = _face_system(g, bipartite)
    inc = np.zeros((g.n_faces, E), dtype=np.int64)
    for f, edges in enumerate(edges_of):
        inc[f, edges] = 1
    goal = np.array(target, dtype=np.int64)

    found: List[List[int]] = []
    chunk = 1 << 16
    bit = np.arange(E, dtype=np.int64)
    for start in range(0, 1 << E, chunk):
        idx = np.arange(start, min(start + chunk, 1 << E), dtype=np.int64)
        bits = (idx[:, None] >> bit) & 1
        ok = np.all((bits @ inc.T) % 2 == goal, axis=1)
        for row in bits[ok]:
            found.append([1 - 2 * int(b) for b in row])
            if limit is not None and len(found) >= limit:
                return found
    return found


def find_kasteleyn_signs(g: PeriodicGraph, bipartite: Optional[bool] = None) -> List[int]:
    """
    카스텔레인 부호 (비이분) 또는 실수 카스텔레인-쿠퍼버그 위상 (이분)

    트리 풀이에 γ_x, γ_y 교차 간선 뒤집기 (∅, γ_x, γ_y, 둘 다) 순서로 후보를 만들고,
    모두 실패하면 작은 그래프에서만 전수 탐색합니다.
    """
    if bipartite is None:
        bipartite = bipartite_coloring(g, raise_on_fail=False) is not None
    if g.n_vertices % 2:
        raise NoAssignment(f"{g.name}: 기본 영역의 정점 수가 홀수 ({g.n_vertices})", witness=g.n_vertices)

    base = solve_face_parity(g, bipartite)
    if base is not None:
        gx = {e for e, o in enumerate(g.edge_offsets) if o[1] % 2}
        gy = {e for e, o in enumerate(g.edge_offsets) if o[0] % 2}
        for label, flip in (('none', set()), ('gamma_x', gx), ('gamma_y', gy), ('both', gx ^ gy)):
            signs = [(-1) ** (x ^ int(e in flip)) for e, x in enumerate(base)]
            if not check_kasteleyn_signs(g, signs, bipartite):
                logger.debug(f"✍️ {g.name}: 카스텔레인 부호 확정 (뒤집기: {label})")
                return signs

    if g.n_edges <= CLASSIFY_CONFIG['exhaustive_edges']:
        logger.warning(f"⚠️ {g.name}: 트리 풀이 실패, 전수 탐색으로 전환")
        found = exhaustive_kasteleyn_signs(g, bipartite, limit=1)
        if found:
            return found[0]
    raise NoAssignment(f"{g.name}: 카스텔레인 부호를 찾지 못했습니다", witness=g.name)


# =============================================================================
# 카스텔레인 행렬
# =============================================================================

@dataclass
class KMatrix:
    """라우렌트 다항식 성분의 카스텔레인 행렬 (위치 인덱스)"""
    rows: List[int]
    cols: List[int]
    entries: Dict[Tuple[int, int], LaurentPoly2]
    bipartite: bool
    edge_entries: Dict[int, Tuple[int, int, LaurentPoly2]] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.rows)

    def evaluate(self, z: complex, w: complex) -> np.ndarray:
        out = np.zeros((len(self.rows), len(self.cols)), dtype=complex)
        for (r, c), p in self.entries.items():
            out[r, c] = p.evaluate(z, w)
        return out

    def evaluate_batch(self, zs: np.ndarray, ws: np.ndarray) -> np.ndarray:
        """점 배열에서 (N, rows, cols) 행렬 묶음"""
        zs = np.asarray(zs, dtype=complex).ravel()
        ws = np.asarray(ws, dtype=complex).ravel()
        out = np.zeros((len(zs), len(self.rows), len(self.cols)), dtype=complex)
        for (r, c), p in self.entries.items():
            out[:, r, c] = p.evaluate(zs, ws)
        return out

    def skew_residual(self, z: complex = 1.3 + 0.4j, w: complex = 0.7 - 0.2j) -> float:
        """|K(z,w)^T + K(1/z,1/w)| / |K| (비이분 대칭성)"""
        a = self.evaluate(z, w)
        b = self.evaluate(1 / z, 1 / w)
        return float(np.max(np.abs(a.T + b))) / max(1.0, float(np.max(np.abs(a))))


def _graph_of(source: Union[DecoratedGraph, PeriodicGraph]) -> PeriodicGraph:
    return source.graph if isinstance(source, DecoratedGraph) else source


def assemble_kmatrix(source: Union[DecoratedGraph, PeriodicGraph], weights: Union[Sequence, Mapping],
                     signs: Sequence[int], bipartite: Optional[bool] = None) -> KMatrix:
    """
    간선 가중치와 부호로 K(z, w) 조립

    Args:
        source: 장식 그래프 또는 주기 그래프
        weights: 간선별 복소 가중치 (리스트 또는 딕셔너리)
        signs: find_kasteleyn_signs 결과
        bipartite: None 이면 색칠 가능 여부로 결정
    """
    g = _graph_of(source)
    colors = None
    if bipartite is None or bipartite:
        colors = bipartite_coloring(g, raise_on_fail=bool(bipartite))
        bipartite = colors is not None

    def weight(e: int) -> complex:
        try:
            value = weights[e]
        except (KeyError, IndexError) as err:
            raise MissingWeight(f"간선 {e} 의 가중치가 없습니다", witness=e) from err
        if value is None:
            raise MissingWeight(f"간선 {e} 의 가중치가 없습니다", witness=e)
        return complex(value)

    entries: Dict[Tuple[int, int], LaurentPoly2] = {}
    edge_entries: Dict[int, Tuple[int, int, LaurentPoly2]] = {}

    if bipartite:
        white = [v for v in range(g.n_vertices) if colors[v] == WHITE]
        black = [v for v in range(g.n_vertices) if colors[v] != WHITE]
        if len(white) != len(black):
            raise NoAssignment(f"흰/검 정점 수가 다릅니다 ({len(white)}/{len(black)})")
        rpos = {v: i for i, v in enumerate(white)}
        cpos = {v: i for i, v in enumerate(black)}
        for e in range(g.n_edges):
            d = 2 * e if colors[g.tail(2 * e)] == WHITE else 2 * e + 1
            dx, dy = g.offset(d)
            term = LaurentPoly2.monomial(dx, dy, signs[e] * weight(e))
            key = (rpos[g.tail(d)], cpos[g.head(d)])
            entries[key] = entries.get(key, LaurentPoly2()) + term
            edge_entries[e] = (key[0], key[1], term)
        rows, cols = white, black
    else:
        for e in range(g.n_edges):
            t, h = g.edge_ends[e]
            dx, dy = g.edge_offsets[e]
            nu = signs[e] * weight(e)
            fwd = LaurentPoly2.monomial(dx, dy, nu)
            bwd = LaurentPoly2.monomial(-dx, -dy, -nu)
            entries[(t, h)] = entries.get((t, h), LaurentPoly2()) + fwd
            entries[(h, t)] = entries.get((h, t), LaurentPoly2()) + bwd
            edge_entries[e] = (t, h, fwd)
        rows = cols = list(range(g.n_vertices))

    entries = {k: p for k, p in entries.items() if not p.is_zero()}
    logger.debug(f"🧮 K 조립: {len(rows)}×{len(cols)}, 성분 {len(entries)}개 ({'이분' if bipartite else '비이분'})")
    return KMatrix(list(rows), list(cols), entries, bipartite, edge_entries)


# =============================================================================
# 행렬식
# =============================================================================

def _det_cofactor(m: KMatrix) -> LaurentPoly2:
    n = m.size
    by_row: List[List[Tuple[int, LaurentPoly2]]] = [[] for _ in range(n)]
    for (r, c), p in sorted(m.entries.items()):
        by_row[r].append((c, p))
    one = LaurentPoly2.constant(1.0)

    @lru_cache(maxsize=None)
    def minor(row: int, used: int) -> LaurentPoly2:
        if row == n:
            return one
        total = LaurentPoly2()
        for c, p in by_row[row]:
            if used >> c & 1:
                continue
            sub = minor(row + 1, used | (1 << c))
            if sub.is_zero():
                continue
            free_before = sum(1 for k in range(c) if not used >> k & 1)
            term = p * sub
            total = total + term if free_before % 2 == 0 else total - term
        return total

    return minor(0, 0)


def _exponent_bounds(m: KMatrix) -> Tuple[int, int, int, int]:
    """행/열 최대·최소 지수 합으로 행렬식의 지수 범위 추정"""
    def bounds(axis: int) -> Tuple[int, int, int, int]:
        groups: Dict[int, List[Tuple[int, int, int, int]]] = {}
        for key, p in m.entries.items():
            groups.setdefault(key[axis], []).append(p.degree_bounds())
        lo_i = sum(min(b[0] for b in bs) for bs in groups.values())
        hi_i = sum(max(b[1] for b in bs) for bs in groups.values())
        lo_j = sum(min(b[2] for b in bs) for bs in groups.values())
        hi_j = sum(max(b[3] for b in bs) for bs in groups.values())
        return lo_i, hi_i, lo_j, hi_j

    r = bounds(0)
    c = bounds(1)
    return max(r[0], c[0]), min(r[1], c[1]), max(r[2], c[2]), min(r[3], c[3])


def _det_interpolate(m: KMatrix, radius: float = 1.0) -> LaurentPoly2:
    n = m.size
    lo_i, hi_i, lo_j, hi_j = _exponent_bounds(m)
    nz, nw = hi_i - lo_i + 1, hi_j - lo_j + 1
    if nz <= 0 or nw <= 0:
        return LaurentPoly2()
    if nz * nw * n * n > GRID_ENTRY_LIMIT:
        raise DegreeBoundExceeded(f"보간 격자 과대: {nz}×{nw} 점, 차원 {n}", witness=(nz, nw, n))

    zs = radius * np.exp(2j * np.pi * np.arange(nz) / nz)
    ws = radius * np.exp(2j * np.pi * np.arange(nw) / nw)
    Z, W = np.meshgrid(zs, ws, indexing='ij')
    values = np.linalg.det(m.evaluate_batch(Z, W)).reshape(nz, nw)
    coef = np.fft.fft2(values) / (nz * nw)

    terms = {}
    for i in range(lo_i, hi_i + 1):
        for j in range(lo_j, hi_j + 1):
            terms[(i, j)] = coef[i % nz, j % nw] / radius ** (i + j)
    return LaurentPoly2(terms).cleanup()


def det_laurent(m: KMatrix, method: str = 'auto') -> LaurentPoly2:
    """
    희소 라우렌트 행렬식

    method: 'cofactor' (메모이즈 여인수 전개), 'interpolate' (단위근 격자 + 2차원 역 DFT),
    'auto' (차원 ≤ 10 이면 cofactor)
    """
    n = m.size
    if len(m.cols) != n:
        raise DegreeBoundExceeded(f"정사각 행렬이 아닙니다: {n}×{len(m.cols)}", witness=(n, len(m.cols)))
    if n > MAX_DIMENSION:
        raise DegreeBoundExceeded(f"행렬 차원 {n} > {MAX_DIMENSION}", witness=n)
    if n == 0:
        return LaurentPoly2.constant(1.0)
    if method == 'auto':
        method = 'cofactor' if n <= COFACTOR_LIMIT else 'interpolate'
    if method == 'cofactor':
        return _det_cofactor(m).cleanup()
    if method == 'interpolate':
        return _det_interpolate(m)
    raise DegreeBoundExceeded(f"알 수 없는 행렬식 방법: {method}", witness=method)


# =============================================================================
# 구조 검사
# =============================================================================

def check_central_symmetry(p: LaurentPoly2) -> float:
    """max |c_ij - c_-i,-j| / max|c|"""
    scale = p.max_coeff()
    if scale == 0:
        return 0.0
    keys = set(p.terms) | {(-i, -j) for i, j in p.terms}
    return max(abs(p[(i, j)] - p[(-i, -j)]) for i, j in keys) / scale


def _significant_support(p: LaurentPoly2, rel: float) -> set:
    thr = rel * p.max_coeff()
    return {m for m, c in p.terms.items() if abs(c) > thr}


def proportionality(p: LaurentPoly2, q: LaurentPoly2, support_tol: float = 1e-8) -> Tuple[complex, float]:
    """
    p ≈ c·q 의 상수와 잔차

    c 는 공통 단항식 중 |p| 최대인 곳의 비율, 잔차는 max|p - c·q| / max|p|
    """
    if p.is_zero() or q.is_zero():
        raise SupportMismatch("영 다항식은 비교할 수 없습니다")
    sp, sq = _significant_support(p, support_tol), _significant_support(q, support_tol)
    if sp != sq:
        raise SupportMismatch(f"지지 집합 불일치 ({len(sp ^ sq)}개 단항식)", witness=sorted(sp ^ sq)[:8])
    anchor = max(sp, key=lambda m: abs(p[m]))
    c = p[anchor] / q[anchor]
    residual = (p - q * c).max_coeff() / p.max_coeff()
    return c, residual


def proportionality_scaled(p: LaurentPoly2, q: LaurentPoly2,
                           support_tol: float = 1e-8) -> Tuple[complex, complex, complex, float]:
    """
    p(z,w) ≈ c·q(λz, μw) 피팅 → (c, λ, μ, 잔차)

    |λ|, |μ| 는 log|p_ij / q_ij| 최소제곱, 위상은 실수 부호 (±1) 와 두 단항식 쌍 풀이 후보 중 최선
    """
    if p.is_zero() or q.is_zero():
        raise SupportMismatch("영 다항식은 비교할 수 없습니다")
    sp, sq = _significant_support(p, support_tol), _significant_support(q, support_tol)
    if sp != sq:
        raise SupportMismatch(f"스케일로 설명되지 않는 지지 집합 차이 ({len(sp ^ sq)}개)", witness=sorted(sp ^ sq)[:8])
    mons = sorted(sp)
    ratio = np.array([p[m] / q[m] for m in mons])
    design = np.array([[1.0, i, j] for i, j in mons])
    sol, *_ = np.linalg.lstsq(design, np.log(np.abs(ratio)), rcond=None)
    mod_l, mod_m = float(np.exp(sol[1])), float(np.exp(sol[2]))

    phases = [(a, b) for a in (1, -1) for b in (1, -1)]
    anchor = max(mons, key=lambda m: abs(p[m]))
    arg0 = np.angle(ratio[mons.index(anchor)])
    for m1 in mons:
        for m2 in mons:
            d1 = (m1[0] - anchor[0], m1[1] - anchor[1])
            d2 = (m2[0] - anchor[0], m2[1] - anchor[1])
            det = d1[0] * d2[1] - d1[1] * d2[0]
            if abs(det) == 1:
                a1 = np.angle(ratio[mons.index(m1)]) - arg0
                a2 = np.angle(ratio[mons.index(m2)]) - arg0
                phi_l = (a1 * d2[1] - a2 * d1[1]) / det
                phi_m = (d1[0] * a2 - d2[0] * a1) / det
                phases.append((np.exp(1j * phi_l), np.exp(1j * phi_m)))
                break
        else:
            continue
        break

    best = None
    for a, b in phases:
        lam, mu = mod_l * a, mod_m * b
        qs = q.scaled(lam, mu)
        c = p[anchor] / qs[anchor]
        residual = (p - qs * c).max_coeff() / p.max_coeff()
        if best is None or residual < best[3]:
            best = (c, lam, mu, residual)
    return best


def kasteleyn_twists(p: LaurentPoly2) -> Dict[Tuple[int, int], LaurentPoly2]:
    """네 가지 부호 꼬임 p(±z, ±w)"""
    return {(sz, sw): p.twisted(sz, sw) for sz in (1, -1) for sw in (1, -1)}


def proportionality_up_to_twist(p: LaurentPoly2, q: LaurentPoly2) -> Tuple[complex, float, Dict[str, object]]:
    """
    q 의 부호 꼬임과 변수 반전 (z → 1/z, w → 1/w) 을 모두 시도해 p ≈ c·q' 최선 결과

    Returns:
        (c, 잔차, {'twist': (sz, sw), 'flip': (flip_z, flip_w)})
    """
    best = None
    for flip_z in (False, True):
        for flip_w in (False, True):
            base = q.reflected(flip_z, flip_w)
            for twist, cand in kasteleyn_twists(base).items():
                try:
                    c, residual = proportionality(p, cand)
                except SupportMismatch:
                    continue
                if best is None or residual < best[1]:
                    best = (c, residual, {'twist': twist, 'flip': (flip_z, flip_w)})
    if best is None:
        raise SupportMismatch("어떤 꼬임/반전으로도 지지 집합이 맞지 않습니다")
    return best


# =============================================================================
# 이징 특성 다항식
# =============================================================================

def fisher_kmatrix(g: PeriodicGraph, ca) -> Tuple[DecoratedGraph, KMatrix]:
    """Fisher 그래프 G^F 의 K(z,w) (긴 간선 tanh(εJ), 짧은 간선 1)"""
    from dimer_weights import fisher_weights

    dg = build_fisher(g)
    signs = find_kasteleyn_signs(dg.graph, bipartite=False)
    return dg, assemble_kmatrix(dg, fisher_weights(dg, ca), signs, bipartite=False)


def fisher_charpoly(g: PeriodicGraph, ca) -> LaurentPoly2:
    """P_ising(z, w)"""
    _, m = fisher_kmatrix(g, ca)
    return det_laurent(m)


def dimer_kmatrix(g: PeriodicGraph, ca, dg: Optional[DecoratedGraph] = None) -> Tuple[DecoratedGraph, KMatrix]:
    """G^Q 이징-다이머 K(z,w) (실수 카스텔레인-쿠퍼버그 위상)"""
    from dimer_weights import ising_dimer_weights

    dg = dg or build_GQ(g)
    signs = find_kasteleyn_signs(dg.graph, bipartite=True)
    return dg, assemble_kmatrix(dg, ising_dimer_weights(dg, ca), signs, bipartite=True)


def dimer_charpoly(g: PeriodicGraph, ca) -> LaurentPoly2:
    """P_dub(z, w)"""
    _, m = dimer_kmatrix(g, ca)
    return det_laurent(m)


def brute_force_pfaffian(a: np.ndarray) -> complex:
    """작은 반대칭 행렬의 파피안 (첫 행 전개, 검증용)"""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n % 2:
        return 0j

    @lru_cache(maxsize=None)
    def pf(idx: Tuple[int, ...]) -> complex:
        if not idx:
            return 1 + 0j
        first, rest = idx[0], idx[1:]
        total = 0j
        for pos, j in enumerate(rest):
            if a[first, j] == 0:
                continue
            sub = rest[:pos] + rest[pos + 1:]
            total += (-1) ** pos * a[first, j] * pf(sub)
        return total

    return pf(tuple(range(n)))

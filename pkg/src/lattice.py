"""
격자 모듈
토러스 위 주기 그래프 G, 쌍대 G*, 트레인 트랙, 장식 그래프 G^Q / G^F, 이분 방향 분할, 이산 아벨 사상

다트 규약:
  간선 e 의 다트 2e = tail→head, 2e+1 = 역방향, offset(2e+1) = -offset(2e)
  rotation[v] 는 v 에서 나가는 다트의 반시계 순서
  면 순회: nf(d) = prev_ccw(rev d), 면은 다트의 왼쪽, 반시계 방향
트랙 상태 (d, s): 사각형 quad(d) 를 변 s(d) 로 빠져나감
  L(d) = (tail d, faceL d), R(d) = (tail d, faceR d), 상태 번호 = 2d + s (R=0, L=1)
"""

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ValidationError

from elliptic_kernel import HalfPeriod, TorusParams
from errors import InconsistentLift, MalformedEmbedding, NotBipartite

logger = logging.getLogger(__name__)

R, L = 0, 1
WHITE, BLACK = 0, 1

Offset = Tuple[int, int]


def _add(a: Offset, b: Offset) -> Offset:
    return (a[0] + b[0], a[1] + b[1])


def _neg(a: Offset) -> Offset:
    return (-a[0], -a[1])


# =============================================================================
# 주기 그래프
# =============================================================================

@dataclass
class PeriodicGraph:
    """토러스 기본 영역의 조합적 지도 (회전 시스템 + 주기 오프셋)"""
    n_vertices: int
    edge_ends: List[Tuple[int, int]]
    edge_offsets: List[Offset]
    rotation: List[List[int]]
    name: str = 'graph'
    vertex_colors: Optional[List[int]] = None
    edge_roles: Optional[List[str]] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.edge_ends = [tuple(map(int, e)) for e in self.edge_ends]
        self.edge_offsets = [tuple(map(int, o)) for o in self.edge_offsets]
        if len(self.edge_ends) != len(self.edge_offsets):
            raise MalformedEmbedding("간선 끝점과 오프셋 개수가 다릅니다")
        if len(self.rotation) != self.n_vertices:
            raise MalformedEmbedding("회전 시스템의 정점 수가 맞지 않습니다")
        self._build_darts()
        self._build_faces()

    # ------------------------------------------------------------------ darts
    @property
    def n_edges(self) -> int:
        return len(self.edge_ends)

    @property
    def n_darts(self) -> int:
        return 2 * self.n_edges

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @staticmethod
    def rev(d: int) -> int:
        return d ^ 1

    def tail(self, d: int) -> int:
        u, v = self.edge_ends[d >> 1]
        return u if d % 2 == 0 else v

    def head(self, d: int) -> int:
        return self.tail(d ^ 1)

    def offset(self, d: int) -> Offset:
        off = self.edge_offsets[d >> 1]
        return off if d % 2 == 0 else _neg(off)

    def degree(self, v: int) -> int:
        return len(self.rotation[v])

    def _build_darts(self) -> None:
        n = self.n_darts
        self.next_ccw = [-1] * n
        self.prev_ccw = [-1] * n
        seen = [False] * n
        for v, darts in enumerate(self.rotation):
            k = len(darts)
            for i, d in enumerate(darts):
                if not 0 <= d < n:
                    raise MalformedEmbedding(f"정점 {v} 의 회전에 존재하지 않는 다트 {d}", witness=v)
                if seen[d]:
                    raise MalformedEmbedding(f"다트 {d} 가 회전 시스템에 두 번 등장", witness=d)
                if self.tail(d) != v:
                    raise MalformedEmbedding(f"다트 {d} 의 꼬리가 정점 {v} 가 아닙니다", witness=d)
                seen[d] = True
                self.next_ccw[d] = darts[(i + 1) % k]
                self.prev_ccw[d] = darts[(i - 1) % k]
        if not all(seen):
            missing = seen.index(False)
            raise MalformedEmbedding(f"다트 {missing} 가 회전 시스템에 없습니다", witness=missing)

    def _build_faces(self) -> None:
        n = self.n_darts
        self.face_of_dart = [-1] * n
        self.cum = [(0, 0)] * n
        self.faces: List[List[int]] = []
        for start in range(n):
            if self.face_of_dart[start] >= 0:
                continue
            fid = len(self.faces)
            walk = []
            disp = (0, 0)
            d = start
            while self.face_of_dart[d] < 0:
                self.face_of_dart[d] = fid
                self.cum[d] = disp
                walk.append(d)
                disp = _add(disp, self.offset(d))
                d = self.prev_ccw[d ^ 1]
            if d != start or disp != (0, 0):
                raise MalformedEmbedding(
                    f"면 {fid} 의 경계가 닫히지 않거나 축약 불가능 (변위 {disp})", witness=fid)
            self.faces.append(walk)

        euler = self.n_vertices - self.n_edges + len(self.faces)
        if euler != 0:
            raise MalformedEmbedding(f"토러스 오일러 공식 위반: V-E+F = {euler}", witness=euler)

    def face_left(self, d: int) -> int:
        return self.face_of_dart[d]

    def face_right(self, d: int) -> int:
        return self.face_of_dart[d ^ 1]

    # --------------------------------------------------------------- helpers
    def to_nx(self) -> nx.MultiGraph:
        """networkx 멀티그래프 (키 = 간선 번호)"""
        g = nx.MultiGraph()
        g.add_nodes_from(range(self.n_vertices))
        for e, (u, v) in enumerate(self.edge_ends):
            g.add_edge(u, v, key=e, offset=self.edge_offsets[e])
        return g

    def edge_homology_parity(self, e: int) -> Tuple[int, int]:
        dx, dy = self.edge_offsets[e]
        return dx % 2, dy % 2

    def summary(self) -> str:
        return f"{self.name}: V={self.n_vertices}, E={self.n_edges}, F={self.n_faces}"

    def to_json(self) -> Dict[str, Any]:
        """JSON 그래프 형식으로 직렬화 (회전은 간선 번호 목록)"""
        vertices = []
        for v, darts in enumerate(self.rotation):
            vertices.append({'id': v, 'rotation': [d >> 1 for d in darts]})
        edges = []
        for e, (u, v) in enumerate(self.edge_ends):
            dx, dy = self.edge_offsets[e]
            edges.append({'id': e, 'endpoints': [u, v], 'offset': [dx, dy],
                          'dual_crossings': {'gamma_x': dy, 'gamma_y': dx}})
        return {
            'name': self.name,
            'vertices': vertices,
            'edges': edges,
            'faces': [[d >> 1 for d in f] for f in self.faces],
            'gamma_x': [e for e, o in enumerate(self.edge_offsets) if o[1] != 0],
            'gamma_y': [e for e, o in enumerate(self.edge_offsets) if o[0] != 0],
            'fundamental_domain': self.meta.get('fundamental_domain', {'nx': 1, 'ny': 1}),
        }

    @classmethod
    def from_json(cls, data: Any) -> 'PeriodicGraph':
        return graph_from_json(data)


# =============================================================================
# JSON 입력 (pydantic)
# =============================================================================

class VertexModel(BaseModel):
    id: int
    rotation: List[int]


class EdgeModel(BaseModel):
    id: int
    endpoints: Tuple[int, int]
    offset: Optional[Tuple[int, int]] = None
    dual_crossings: Optional[Dict[str, int]] = None


class GraphModel(BaseModel):
    name: str = 'custom'
    vertices: List[VertexModel]
    edges: List[EdgeModel]
    faces: Optional[List[Any]] = None
    gamma_x: List[int] = []
    gamma_y: List[int] = []
    fundamental_domain: Optional[Dict[str, int]] = None


def graph_from_json(data: Any) -> PeriodicGraph:
    """
    JSON 그래프 로드

    회전은 간선 번호 목록이며, 루프 간선은 처음 등장이 tail 다트입니다.
    offset 이 없으면 dual_crossings (gamma_y → dx, gamma_x → dy) 로 계산합니다.
    """
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    try:
        model = GraphModel.model_validate(data)
    except ValidationError as e:
        raise MalformedEmbedding(f"그래프 JSON 검증 실패: {e}") from e

    vid = {v.id: i for i, v in enumerate(sorted(model.vertices, key=lambda v: v.id))}
    eid = {e.id: i for i, e in enumerate(sorted(model.edges, key=lambda e: e.id))}
    edges = sorted(model.edges, key=lambda e: e.id)

    ends, offsets = [], []
    gx, gy = set(), set()
    for e in edges:
        try:
            u, v = vid[e.endpoints[0]], vid[e.endpoints[1]]
        except KeyError as err:
            raise MalformedEmbedding(f"간선 {e.id} 의 끝점이 정점 목록에 없습니다", witness=e.id) from err
        if e.offset is not None:
            off = tuple(e.offset)
        elif e.dual_crossings is not None:
            off = (e.dual_crossings.get('gamma_y', 0), e.dual_crossings.get('gamma_x', 0))
        else:
            off = (1 if e.id in model.gamma_y else 0, 1 if e.id in model.gamma_x else 0)
        ends.append((u, v))
        offsets.append(off)
        if off[1] != 0:
            gx.add(eid[e.id])
        if off[0] != 0:
            gy.add(eid[e.id])

    if model.gamma_x or model.gamma_y:
        if {eid[e] for e in model.gamma_x} != gx or {eid[e] for e in model.gamma_y} != gy:
            raise MalformedEmbedding("gamma_x/gamma_y 교차 간선이 오프셋과 일치하지 않습니다")

    rotation = []
    used_tail = set()
    for v in sorted(model.vertices, key=lambda v: v.id):
        darts = []
        me = vid[v.id]
        for e_raw in v.rotation:
            e = eid.get(e_raw)
            if e is None:
                raise MalformedEmbedding(f"정점 {v.id} 회전에 알 수 없는 간선 {e_raw}", witness=v.id)
            u, w = ends[e]
            if u == w:
                d = 2 * e if e not in used_tail else 2 * e + 1
                used_tail.add(e)
            elif u == me:
                d = 2 * e
            elif w == me:
                d = 2 * e + 1
            else:
                raise MalformedEmbedding(f"간선 {e_raw} 는 정점 {v.id} 에 붙어 있지 않습니다", witness=v.id)
            darts.append(d)
        rotation.append(darts)

    g = PeriodicGraph(len(vid), ends, offsets, rotation, name=model.name,
                      meta={'fundamental_domain': model.fundamental_domain or {'nx': 1, 'ny': 1}})
    validate_homology_basis(g)
    return g


def validate_homology_basis(g: PeriodicGraph) -> None:
    """사이클 변위가 ℤ² 를 생성하는지 확인 (γ_x, γ_y 가 기저인지)"""
    mg = g.to_nx()
    if not nx.is_connected(mg):
        raise MalformedEmbedding("그래프가 연결되어 있지 않습니다")
    pot = {0: (0, 0)}
    tree = set()
    for parent, child in nx.bfs_edges(mg, 0):
        for key, data in mg.get_edge_data(parent, child).items():
            tail, head = g.edge_ends[key]
            off = data['offset']
            if tail == parent:
                pot[child] = _add(pot[parent], off)
            else:
                pot[child] = _add(pot[parent], _neg(off))
            tree.add(key)
            break

    cycles = []
    for e, (u, v) in enumerate(g.edge_ends):
        if e in tree:
            continue
        du, dv = pot[u], pot[v]
        c = (du[0] + g.edge_offsets[e][0] - dv[0], du[1] + g.edge_offsets[e][1] - dv[1])
        if c != (0, 0):
            cycles.append(c)

    det_gcd = 0
    for i in range(len(cycles)):
        for j in range(i + 1, len(cycles)):
            a, b = cycles[i], cycles[j]
            det_gcd = math.gcd(det_gcd, abs(a[0] * b[1] - a[1] * b[0]))
    if det_gcd != 1:
        raise MalformedEmbedding(f"γ_x, γ_y 가 호몰로지 기저가 아닙니다 (gcd={det_gcd})", witness=det_gcd)


# =============================================================================
# 내장 생성기
# =============================================================================

def square(nx_: int = 1, ny: int = 1) -> PeriodicGraph:
    """정사각 격자 (간선 2·vid = 수평, 2·vid+1 = 수직)"""
    vid = lambda i, j: (i % nx_) + nx_ * (j % ny)
    ends, offs = [], []
    for j in range(ny):
        for i in range(nx_):
            ends.append((vid(i, j), vid(i + 1, j)))
            offs.append((1 if i + 1 == nx_ else 0, 0))
            ends.append((vid(i, j), vid(i, j + 1)))
            offs.append((0, 1 if j + 1 == ny else 0))
    rotation = []
    for j in range(ny):
        for i in range(nx_):
            v = vid(i, j)
            h, u = 2 * v, 2 * v + 1
            rotation.append([2 * h, 2 * u, 2 * (2 * vid(i - 1, j)) + 1, 2 * (2 * vid(i, j - 1) + 1) + 1])
    return PeriodicGraph(nx_ * ny, ends, offs, rotation, name=f'square{nx_}x{ny}',
                         meta={'fundamental_domain': {'nx': nx_, 'ny': ny}})


def triangular(nx_: int = 1, ny: int = 1) -> PeriodicGraph:
    """삼각 격자 (간선 3·vid + {0: (+1,0), 1: (0,+1), 2: (-1,+1)})"""
    vid = lambda i, j: (i % nx_) + nx_ * (j % ny)
    ends, offs = [], []
    for j in range(ny):
        for i in range(nx_):
            v = vid(i, j)
            ends.append((v, vid(i + 1, j)))
            offs.append((1 if i + 1 == nx_ else 0, 0))
            ends.append((v, vid(i, j + 1)))
            offs.append((0, 1 if j + 1 == ny else 0))
            ends.append((v, vid(i - 1, j + 1)))
            offs.append((-1 if i == 0 else 0, 1 if j + 1 == ny else 0))
    rotation = []
    for j in range(ny):
        for i in range(nx_):
            v = vid(i, j)
            rotation.append([
                2 * (3 * v), 2 * (3 * v + 1), 2 * (3 * v + 2),
                2 * (3 * vid(i - 1, j)) + 1,
                2 * (3 * vid(i, j - 1) + 1) + 1,
                2 * (3 * vid(i + 1, j - 1) + 2) + 1,
            ])
    return PeriodicGraph(nx_ * ny, ends, offs, rotation, name=f'triangular{nx_}x{ny}',
                         meta={'fundamental_domain': {'nx': nx_, 'ny': ny}})


def hexagonal(nx_: int = 1, ny: int = 1) -> PeriodicGraph:
    """육각 격자 (흰 정점 2·vid, 검은 정점 2·vid+1)"""
    cell = lambda i, j: (i % nx_) + nx_ * (j % ny)
    ends, offs = [], []
    for j in range(ny):
        for i in range(nx_):
            c = cell(i, j)
            w = 2 * c
            ends.append((w, 2 * cell(i, j) + 1))
            offs.append((0, 0))
            ends.append((w, 2 * cell(i - 1, j) + 1))
            offs.append((-1 if i == 0 else 0, 0))
            ends.append((w, 2 * cell(i, j - 1) + 1))
            offs.append((0, -1 if j == 0 else 0))
    rotation = [None] * (2 * nx_ * ny)
    for j in range(ny):
        for i in range(nx_):
            c = cell(i, j)
            rotation[2 * c] = [2 * (3 * c), 2 * (3 * c + 1), 2 * (3 * c + 2)]
            rotation[2 * c + 1] = [
                2 * (3 * cell(i, j + 1) + 2) + 1,
                2 * (3 * c) + 1,
                2 * (3 * cell(i + 1, j) + 1) + 1,
            ]
    return PeriodicGraph(2 * nx_ * ny, ends, offs, rotation, name=f'hexagonal{nx_}x{ny}',
                         vertex_colors=[v % 2 for v in range(2 * nx_ * ny)],
                         meta={'fundamental_domain': {'nx': nx_, 'ny': ny}})


def pinched_torus() -> PeriodicGraph:
    """등반경이 아닌 작은 토러스 그래프 (정점 a, b; 루프 e2 가 γ_x 를 가로지름)"""
    ends = [(0, 1), (1, 0), (0, 0)]
    offs = [(0, 0), (1, 0), (0, 1)]
    rotation = [[0, 4, 3, 5], [2, 1]]
    return PeriodicGraph(2, ends, offs, rotation, name='pinched')


BUILTIN_GRAPHS = {
    'square': square,
    'triangular': triangular,
    'hexagonal': hexagonal,
}


def builtin_graph(name: str, nx_: int = 1, ny: int = 1) -> PeriodicGraph:
    if name == 'pinched':
        return pinched_torus()
    if name not in BUILTIN_GRAPHS:
        raise MalformedEmbedding(f"알 수 없는 내장 그래프: {name}", witness=name)
    return BUILTIN_GRAPHS[name](nx_, ny)


# =============================================================================
# 쌍대 그래프
# =============================================================================

def build_dual(g: PeriodicGraph) -> PeriodicGraph:
    """쌍대 그래프: 간선 e* 는 faceR(2e) → faceL(2e), 간선 번호 보존"""
    ends, offs = [], []
    for e in range(g.n_edges):
        d = 2 * e
        fr, fl = g.face_right(d), g.face_left(d)
        ends.append((fr, fl))
        off = _add(_add(_neg(g.cum[d]), _neg(g.offset(d))), g.cum[d ^ 1])
        offs.append(off)
    rotation = [[d ^ 1 for d in face] for face in g.faces]
    dual = PeriodicGraph(g.n_faces, ends, offs, rotation, name=f'{g.name}*',
                         meta={'fundamental_domain': g.meta.get('fundamental_domain')})
    dual.vertex_colors = bipartite_coloring(dual, raise_on_fail=False)
    return dual


def is_isomorphic(g1: PeriodicGraph, g2: PeriodicGraph) -> bool:
    """기저 멀티그래프 동형 판정 (networkx)"""
    return nx.is_isomorphic(g1.to_nx(), g2.to_nx())


def bipartite_coloring(g: PeriodicGraph, raise_on_fail: bool = True) -> Optional[List[int]]:
    """이분 색칠 (정점 0 = 흰색); 루프나 홀수 사이클이면 NotBipartite"""
    if g.vertex_colors is not None and len(g.vertex_colors) == g.n_vertices:
        if all(g.vertex_colors[u] != g.vertex_colors[v] for u, v in g.edge_ends):
            return list(g.vertex_colors)
    mg = nx.Graph()
    mg.add_nodes_from(range(g.n_vertices))
    ok = True
    for u, v in g.edge_ends:
        if u == v:
            ok = False
            break
        mg.add_edge(u, v)
    if ok:
        try:
            color = nx.bipartite.color(mg)
        except nx.NetworkXError:
            ok = False
    if not ok:
        if raise_on_fail:
            raise NotBipartite(f"{g.name} 은 이분 그래프가 아닙니다", witness=g.name)
        return None
    if color[0] != WHITE:
        color = {v: 1 - c for v, c in color.items()}
    return [color[v] for v in range(g.n_vertices)]


# =============================================================================
# 트레인 트랙
# =============================================================================

@dataclass
class TrainTrack:
    """방향 트레인 트랙 (→ 대표 궤도)"""
    id: int
    states: Tuple[int, ...]
    homology: Offset
    orientation: str = 'lowest'

    @property
    def reverse_states(self) -> Tuple[int, ...]:
        return tuple(reverse_state(s) for s in reversed(self.states))

    @property
    def edges(self) -> List[int]:
        return sorted({s >> 2 for s in self.states})


def reverse_state(s: int) -> int:
    """(x, side) 의 역방향은 (rev x, side)"""
    d, side = s >> 1, s & 1
    return ((d ^ 1) << 1) | side


def next_state(g: PeriodicGraph, s: int) -> Tuple[int, Offset]:
    d, side = s >> 1, s & 1
    if side == L:
        y = g.next_ccw[d]
        return ((y ^ 1) << 1) | R, g.offset(y)
    y = g.prev_ccw[d]
    return ((y ^ 1) << 1) | L, g.offset(y)


def left_primal(g: PeriodicGraph, s: int) -> int:
    """상태 왼쪽의 원 그래프 정점"""
    d, side = s >> 1, s & 1
    return g.head(d) if side == R else g.tail(d)


def left_dual(g: PeriodicGraph, s: int) -> int:
    """상태 왼쪽의 쌍대 정점 (면)"""
    return g.face_right(s >> 1)


@dataclass
class TrackSystem:
    """그래프의 트랙 전체와 상태 → (트랙, 방향) 조회표"""
    graph: PeriodicGraph
    tracks: List[TrainTrack]
    state_track: List[int]
    state_dir: List[int]
    orientation: str

    def track_of_state(self, s: int) -> Tuple[int, int]:
        return self.state_track[s], self.state_dir[s]

    def track_A(self, e: int) -> int:
        return self.state_track[(2 * e) << 1 | R]

    def track_B(self, e: int) -> int:
        return self.state_track[(2 * e) << 1 | L]

    def homology_sum(self) -> Offset:
        total = (0, 0)
        for t in self.tracks:
            total = _add(total, t.homology)
        return total


def _orbits(g: PeriodicGraph) -> List[Tuple[List[int], Offset]]:
    n = 2 * g.n_darts
    seen = [False] * n
    orbits = []
    for start in range(n):
        if seen[start]:
            continue
        states, disp, s = [], (0, 0), start
        while not seen[s]:
            seen[s] = True
            states.append(s)
            s, step = next_state(g, s)
            disp = _add(disp, step)
        if s != start:
            raise MalformedEmbedding(f"트랙 궤도가 닫히지 않습니다 (상태 {start})", witness=start)
        orbits.append((states, disp))
    return orbits


def extract_train_tracks(g: PeriodicGraph, orientation: str = 'auto',
                         colors: Optional[List[int]] = None) -> TrackSystem:
    """
    트레인 트랙 추출

    Args:
        g: 주기 그래프
        orientation: 'auto' (G* 이분 → 'dual', G 이분 → 'primal', 아니면 'lowest'),
            'dual' / 'primal' (흰 쌍대/원 정점이 왼쪽), 'lowest' (최소 상태 번호)
        colors: orientation='primal'/'dual' 에서 사용할 색칠 (없으면 계산)

    Returns:
        TrackSystem
    """
    orbits = _orbits(g)
    index = {}
    for k, (states, _) in enumerate(orbits):
        for s in states:
            index[s] = k

    if orientation == 'auto':
        if bipartite_coloring(build_dual(g), raise_on_fail=False) is not None:
            orientation = 'dual'
        elif bipartite_coloring(g, raise_on_fail=False) is not None:
            orientation = 'primal'
        else:
            orientation = 'lowest'

    if orientation == 'primal':
        colors = colors or bipartite_coloring(g)
        is_forward = lambda s: colors[left_primal(g, s)] == WHITE
    elif orientation == 'dual':
        colors = colors or bipartite_coloring(build_dual(g))
        is_forward = lambda s: colors[left_dual(g, s)] == WHITE
    elif orientation == 'lowest':
        is_forward = None
    else:
        raise MalformedEmbedding(f"알 수 없는 방향 규칙: {orientation}", witness=orientation)

    n_states = 2 * g.n_darts
    state_track = [-1] * n_states
    state_dir = [0] * n_states
    tracks: List[TrainTrack] = []
    for k, (states, disp) in enumerate(orbits):
        if state_track[states[0]] >= 0:
            continue
        rk = index[reverse_state(states[0])]
        if rk == k:
            raise MalformedEmbedding(f"트랙이 자기 자신의 역방향입니다 (상태 {states[0]})", witness=states[0])
        if is_forward is None:
            fwd = k if min(states) < min(orbits[rk][0]) else rk
        else:
            fwd = k if is_forward(states[0]) else rk
            if any(is_forward(s) != (fwd == k) for s in states):
                raise MalformedEmbedding(f"트랙 {len(tracks)} 의 이분 방향이 일관되지 않습니다", witness=states[0])
        bwd = rk if fwd == k else k
        tid = len(tracks)
        fstates, fdisp = orbits[fwd]
        tracks.append(TrainTrack(id=tid, states=tuple(fstates), homology=fdisp, orientation=orientation))
        for s in fstates:
            state_track[s], state_dir[s] = tid, 1
        for s in orbits[bwd][0]:
            state_track[s], state_dir[s] = tid, -1

    system = TrackSystem(g, tracks, state_track, state_dir, orientation)
    if orientation in ('primal', 'dual') and system.homology_sum() != (0, 0):
        raise MalformedEmbedding(f"트랙 호몰로지 합이 0 이 아닙니다: {system.homology_sum()}")
    logger.debug(f"🧵 {g.name}: 트랙 {len(tracks)}개 ({orientation})")
    return system


def bipartite_track_orientation(g: PeriodicGraph, side: str = 'dual') -> Dict[int, int]:
    """
    이분 방향 분할: 트랙 id → 방향 대표 궤도 첫 상태

    side='dual' 이면 G* 가, 'primal' 이면 G 가 이분이어야 합니다.
    G 와 G* 가 모두 이분이면 G* 색칠은 G 색칠과 같은 → 방향을 주도록 고정됩니다.
    """
    if side == 'primal':
        system = extract_train_tracks(g, 'primal', bipartite_coloring(g))
    elif side == 'dual':
        dual = build_dual(g)
        colors = bipartite_coloring(dual)
        primal = bipartite_coloring(g, raise_on_fail=False)
        if primal is not None:
            ref = extract_train_tracks(g, 'primal', primal)
            trial = extract_train_tracks(g, 'dual', colors)
            if [t.states[0] for t in trial.tracks] != [t.states[0] for t in ref.tracks]:
                colors = [1 - c for c in colors]
                logger.debug("🎨 G 색칠에 맞춰 G* 색칠을 뒤집음")
        system = extract_train_tracks(g, 'dual', colors)
    else:
        raise NotBipartite(f"알 수 없는 분할 기준: {side}", witness=side)
    return {t.id: t.states[0] for t in system.tracks}


def _crossing_counts(system: TrackSystem) -> Dict[Tuple[int, int], List[int]]:
    """트랙 쌍별 교차 (n+, n-) 와 자기 교차 표시"""
    counts: Dict[Tuple[int, int], List[int]] = {}
    g = system.graph
    for e in range(g.n_edges):
        d = 2 * e
        sa = (d << 1) | R
        sb = (d << 1) | L
        ta, da = system.track_of_state(sa)
        tb, db = system.track_of_state(sb)
        if ta == tb:
            counts.setdefault((ta, ta), [0, 0])[0] += 1
            continue
        sign = -da * db
        if ta > tb:
            ta, tb, sign = tb, ta, -sign
        c = counts.setdefault((ta, tb), [0, 0])
        c[0 if sign > 0 else 1] += 1
    return counts


def is_isoradial(g: PeriodicGraph, system: Optional[TrackSystem] = None) -> bool:
    """트랙이 자기 교차하지 않고, 두 트랙이 기본 영역당 |det| 번, 한 방향으로만 교차"""
    system = system or extract_train_tracks(g)
    counts = _crossing_counts(system)
    hom = {t.id: t.homology for t in system.tracks}
    for (a, b), (npos, nneg) in counts.items():
        if a == b:
            logger.debug(f"🔁 트랙 {a} 자기 교차")
            return False
    ids = sorted(hom)
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            npos, nneg = counts.get((a, b), [0, 0])
            det = abs(hom[a][0] * hom[b][1] - hom[a][1] * hom[b][0])
            if npos + nneg != det or min(npos, nneg) != 0:
                logger.debug(f"✂️ 트랙 {a},{b}: 교차 ({npos},{nneg}), |det|={det}")
                return False
    return True


# =============================================================================
# 장식 그래프 G^Q, G^F
# =============================================================================

@dataclass
class DecoratedGraph:
    """장식 그래프 (G^Q 또는 Fisher 그래프 G^F) 와 원 그래프 G 의 대응"""
    kind: str
    graph: PeriodicGraph
    base: PeriodicGraph
    face_kind: List[str] = field(default_factory=list)
    face_ref: List[int] = field(default_factory=list)
    base_tracks: Optional[TrackSystem] = None
    tracks: Optional[TrackSystem] = None
    track_parent: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    is_minimal: Optional[bool] = None

    @property
    def white(self) -> List[int]:
        return [v for v, c in enumerate(self.graph.vertex_colors or []) if c == WHITE]

    @property
    def black(self) -> List[int]:
        return [v for v, c in enumerate(self.graph.vertex_colors or []) if c == BLACK]

    def faces_of_kind(self, kind: str) -> List[int]:
        return [f for f, k in enumerate(self.face_kind) if k == kind]

    def square_face(self, e: int) -> int:
        for f, (k, r) in enumerate(zip(self.face_kind, self.face_ref)):
            if k == 'square' and r == e:
                return f
        raise MalformedEmbedding(f"간선 {e} 의 사각 면이 없습니다", witness=e)

    def face_label(self, f: int) -> str:
        return f"{self.face_kind[f]}:{self.face_ref[f]}"

    def corner_track(self, y: int) -> Tuple[int, int]:
        """G^Q 다트 y 의 모서리 L(y) 를 지나는 자연 방향 G^Q 트랙 (트랙 id, 방향)"""
        g = self.graph
        if g.vertex_colors[g.tail(y)] == WHITE:
            s = (y << 1) | L
        else:
            s = (g.next_ccw[y] << 1) | R
        return self.tracks.track_of_state(s)

    def face_corner_tracks(self, f: int) -> Tuple[List[int], List[int]]:
        """면 f 의 (A_i, B_i) 트랙 목록 (tail(y_1) 이 흰 정점인 반시계 순서)"""
        g = self.graph
        darts = list(g.faces[f])
        while g.vertex_colors[g.tail(darts[0])] != WHITE:
            darts = darts[1:] + darts[:1]
        n = len(darts) // 2
        A = [self.corner_track(darts[2 * i])[0] for i in range(n)]
        B = [self.corner_track(darts[(2 * i - 1) % (2 * n)])[0] for i in range(n)]
        return A, B

    def face_darts(self, f: int) -> List[int]:
        """흰 꼬리에서 시작하는 면 f 의 경계 다트"""
        g = self.graph
        darts = list(g.faces[f])
        while g.vertex_colors[g.tail(darts[0])] != WHITE:
            darts = darts[1:] + darts[:1]
        return darts


def build_GQ(g: PeriodicGraph) -> DecoratedGraph:
    """
    이분 장식 그래프 G^Q

    흰 정점 (d,R) = d, 검은 정점 (d,L) = 2E + d
    간선: pp(d) = 3d: (d,R)-(rev d,L) [offset(d)], dp(d) = 3d+1: (d,R)-(d,L), ext(d) = 3d+2: (d,R)-(prev_ccw d, L)
    """
    E2 = g.n_darts
    ends, offs, roles = [], [], []
    for d in range(E2):
        ends.append((d, E2 + (d ^ 1)))
        offs.append(g.offset(d))
        roles.append('primal')
        ends.append((d, E2 + d))
        offs.append((0, 0))
        roles.append('dual')
        ends.append((d, E2 + g.prev_ccw[d]))
        offs.append((0, 0))
        roles.append('external')

    rotation = [None] * (2 * E2)
    for d in range(E2):
        rotation[d] = [2 * (3 * d), 2 * (3 * d + 1), 2 * (3 * d + 2)]
        rotation[E2 + d] = [2 * (3 * (d ^ 1)) + 1, 2 * (3 * g.next_ccw[d] + 2) + 1, 2 * (3 * d + 1) + 1]

    colors = [WHITE] * E2 + [BLACK] * E2
    gq = PeriodicGraph(2 * E2, ends, offs, rotation, name=f'{g.name}^Q', vertex_colors=colors,
                       edge_roles=roles, meta=dict(g.meta))

    face_kind, face_ref = [], []
    for f, darts in enumerate(gq.faces):
        kinds = {roles[y >> 1] for y in darts}
        if kinds == {'primal', 'dual'}:
            y = next(y for y in darts if roles[y >> 1] == 'primal')
            face_kind.append('square')
            face_ref.append((y >> 1) // 3 // 2)
        elif kinds == {'dual', 'external'}:
            y = next(y for y in darts if roles[y >> 1] == 'dual')
            face_kind.append('primal')
            face_ref.append(g.tail((y >> 1) // 3))
        elif kinds == {'primal', 'external'}:
            b = next(gq.tail(y) for y in darts if colors[gq.tail(y)] == BLACK)
            face_kind.append('dual')
            face_ref.append(g.face_left(b - E2))
        else:
            raise MalformedEmbedding(f"G^Q 면 {f} 의 간선 역할이 예상과 다릅니다: {kinds}", witness=f)

    dg = DecoratedGraph('GQ', gq, g, face_kind, face_ref)
    dg.base_tracks = extract_train_tracks(g)
    dg.tracks = extract_train_tracks(gq, 'primal', colors)
    _label_children(dg)

    iso = is_isoradial(g, dg.base_tracks)
    dg.is_minimal = is_minimal(dg)
    if not iso:
        logger.warning(f"⚠️ {g.name} 은 등반경 그래프가 아닙니다 (G^Q 최소성: {dg.is_minimal})")
    logger.debug(f"🧩 G^Q 생성: {gq.summary()}")
    return dg


def _label_children(dg: DecoratedGraph) -> None:
    """G^Q 트랙마다 부모 G 트랙과 →/← 표시"""
    g, gq = dg.base, dg.graph
    base = dg.base_tracks
    parent: Dict[int, Tuple[int, int]] = {}
    for e in range(g.n_edges):
        for x in (2 * e, 2 * e + 1):
            gs = (2 * (3 * x) << 1) | L
            child, direction = dg.tracks.track_of_state(gs)
            if direction != 1:
                raise MalformedEmbedding(f"G^Q 상태 {gs} 가 자연 방향이 아닙니다", witness=gs)
            ptrack, pdir = base.track_of_state((x << 1) | L)
            label = (ptrack, pdir)
            if parent.setdefault(child, label) != label:
                raise MalformedEmbedding(f"G^Q 트랙 {child} 의 부모 표시가 일관되지 않습니다", witness=child)
    if len(parent) != len(dg.tracks.tracks):
        raise MalformedEmbedding("표시되지 않은 G^Q 트랙이 있습니다")
    dg.track_parent = parent


def is_minimal(dg: DecoratedGraph) -> bool:
    """
    G^Q 최소성: 자기 교차 없음, 형제 쌍 (T→, T←) 은 외부 간선 사각형에서만 교차,
    독립 호몰로지 쌍은 |det| 번 한 방향으로, 평행한 비형제 쌍은 교차 없음
    """
    system = dg.tracks
    gq = dg.graph
    hom = {t.id: t.homology for t in system.tracks}
    for t in system.tracks:
        if t.homology == (0, 0):
            return False

    counts: Dict[Tuple[int, int], List[int]] = {}
    for e in range(gq.n_edges):
        d = 2 * e
        ta, da = system.track_of_state((d << 1) | R)
        tb, db = system.track_of_state((d << 1) | L)
        if ta == tb:
            return False
        pa, pb = dg.track_parent.get(ta), dg.track_parent.get(tb)
        if pa and pb and pa[0] == pb[0] and gq.edge_roles[e] != 'external':
            return False
        sign = -da * db
        if ta > tb:
            ta, tb, sign = tb, ta, -sign
        c = counts.setdefault((ta, tb), [0, 0])
        c[0 if sign > 0 else 1] += 1

    ids = sorted(hom)
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            npos, nneg = counts.get((a, b), [0, 0])
            det = abs(hom[a][0] * hom[b][1] - hom[a][1] * hom[b][0])
            siblings = dg.track_parent[a][0] == dg.track_parent[b][0]
            if det:
                if npos + nneg != det or min(npos, nneg):
                    return False
            elif not siblings and npos + nneg:
                return False
            elif siblings and npos != nneg:
                return False
    return True


def build_fisher(g: PeriodicGraph) -> DecoratedGraph:
    """
    Fisher 그래프 G^F

    정점 v 의 i 번째 다트마다 삼각형 (o_i, a_i, b_i) = base + 3i + {0,1,2}
    긴 간선 e (0..E-1) 은 다트 2e, 2e+1 의 o 슬롯을 잇고, 짧은 간선은 oa, ob, ab, b_i-a_{i+1}
    """
    E = g.n_edges
    slot = {}
    owner = []
    base = 0
    for v in range(g.n_vertices):
        for i, d in enumerate(g.rotation[v]):
            slot[d] = (base + 3 * i, v, i)
        base += 3 * g.degree(v)
        owner.extend([v] * (3 * g.degree(v)))
    n = base

    ends, offs, roles = [], [], []
    for e in range(E):
        ends.append((slot[2 * e][0], slot[2 * e + 1][0]))
        offs.append(g.edge_offsets[e])
        roles.append('long')

    short = {}
    for v in range(g.n_vertices):
        k = g.degree(v)
        for i, d in enumerate(g.rotation[v]):
            o = slot[d][0]
            a, b = o + 1, o + 2
            nxt = slot[g.rotation[v][(i + 1) % k]][0] + 1
            ids = []
            for u, w in ((o, a), (o, b), (a, b), (b, nxt)):
                ids.append(len(ends))
                ends.append((u, w))
                offs.append((0, 0))
                roles.append('short')
            short[d] = ids

    rotation = [None] * n
    for v in range(g.n_vertices):
        k = g.degree(v)
        for i, d in enumerate(g.rotation[v]):
            o = slot[d][0]
            oa, ob, ab, circ = short[d]
            prev_circ = short[g.rotation[v][(i - 1) % k]][3]
            rotation[o] = [d, 2 * ob, 2 * oa]
            rotation[o + 1] = [2 * oa + 1, 2 * ab, 2 * prev_circ + 1]
            rotation[o + 2] = [2 * circ, 2 * ab + 1, 2 * ob + 1]

    gf = PeriodicGraph(n, ends, offs, rotation, name=f'{g.name}^F', edge_roles=roles, meta=dict(g.meta))
    kinds, refs = [], []
    for f, darts in enumerate(gf.faces):
        long_edges = [y >> 1 for y in darts if roles[y >> 1] == 'long']
        if len(darts) == 3 and not long_edges:
            kinds.append('triangle')
            refs.append(gf.tail(darts[0]) // 3)
        elif not long_edges:
            kinds.append('vertex')
            refs.append(owner[gf.tail(darts[0])])
        else:
            kinds.append('face')
            y = next(y for y in darts if roles[y >> 1] == 'long')
            refs.append(g.face_left(y))
    dg = DecoratedGraph('fisher', gf, g, kinds, refs)
    logger.debug(f"🧩 Fisher 그래프 생성: {gf.summary()}")
    return dg


# =============================================================================
# 각도 사상, 이산 아벨 사상
# =============================================================================

@dataclass
class AngleMap:
    """방향 트랙별 각도 (명시적 리프트)"""
    forward: Dict[int, complex]
    rho: HalfPeriod
    tau: complex
    backward: Dict[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        rv = self.rho.value(self.tau)
        for t, a in self.forward.items():
            self.backward.setdefault(t, complex(a) + rv)

    def angle(self, parent: Tuple[int, int]) -> complex:
        track, direction = parent
        return complex(self.forward[track] if direction == 1 else self.backward[track])

    def gq_angles(self, dg: DecoratedGraph) -> Dict[int, complex]:
        """G^Q 트랙 id → 각도"""
        return {t: self.angle(p) for t, p in dg.track_parent.items()}

    def shifted(self, track: int, amount: complex, backward: bool = False) -> 'AngleMap':
        fwd = dict(self.forward)
        bwd = dict(self.backward)
        if backward:
            bwd[track] += amount
        else:
            fwd[track] += amount
        return AngleMap(fwd, self.rho, self.tau, bwd)


def angle_map(dg: DecoratedGraph, alphas: Sequence[complex], rho: HalfPeriod, tp: TorusParams) -> AngleMap:
    """G 트랙 순서대로 α→ 를 받아 α← = α→ + ρ 인 각도 사상 생성"""
    n = len(dg.base_tracks.tracks)
    if len(alphas) != n:
        raise MalformedEmbedding(f"각도 개수 {len(alphas)} 가 트랙 수 {n} 와 다릅니다", witness=len(alphas))
    return AngleMap({i: complex(a) for i, a in enumerate(alphas)}, rho, tp.tau)


# 분류 계열: (ρ, t)
FAMILY = {
    'I': (HalfPeriod(1, 0), 0j),
    'II': (HalfPeriod(1, 0), 0.5 + 0j),
    'III': (HalfPeriod(1, 1), 0.5 + 0j),
}


def monotone_order(dg: DecoratedGraph) -> List[int]:
    """G 트랙을 호몰로지 방향 (h, v) 의 반시계 각도 순으로 정렬"""
    tracks = dg.base_tracks.tracks
    return sorted(range(len(tracks)), key=lambda i: math.atan2(tracks[i].homology[1], tracks[i].homology[0]))


def random_angle_map(dg: DecoratedGraph, family: str, tp: TorusParams,
                     rng: Optional[np.random.Generator] = None, sorted_angles: bool = False,
                     min_gap: float = 0.02, max_tries: int = 1000) -> AngleMap:
    """
    계열 family 의 허용 각도 사상을 무작위로 생성 (α→ 는 [0,1) 실수)

    서로 다른 트랙 각도 차이가 0, 1/2 (mod 1) 에서 min_gap 이상 떨어지도록 재추출합니다.
    sorted_angles=True 이면 호몰로지 반시계 순서대로 증가하는 단조 사상을 만듭니다.
    """
    if family not in FAMILY:
        raise MalformedEmbedding(f"알 수 없는 계열: {family}", witness=family)
    rho, _ = FAMILY[family]
    if family == 'III':
        if tp.trig:
            raise NotBipartite("계열 III 은 k = 0 퇴화에서 정의되지 않습니다", witness=family)
        if dg.base_tracks.orientation != 'dual':
            raise NotBipartite(f"계열 III 은 G* 이분 방향이 필요합니다 ({dg.base.name})", witness=dg.base.name)

    rng = rng if rng is not None else np.random.default_rng()
    n = len(dg.base_tracks.tracks)
    for _ in range(max_tries):
        draw = rng.random(n)
        gaps = [abs(((draw[i] - draw[j]) * 2 + 0.5) % 1.0 - 0.5) / 2
                for i in range(n) for j in range(i + 1, n)]
        if not gaps or min(gaps) >= min_gap:
            break
    else:
        raise MalformedEmbedding(f"각도 재추출 {max_tries} 회 실패 (트랙 {n}개, 간격 {min_gap})")

    alphas = [0j] * n
    if sorted_angles:
        for track, value in zip(monotone_order(dg), sorted(draw)):
            alphas[track] = complex(value)
    else:
        alphas = [complex(a) for a in draw]
    return angle_map(dg, alphas, rho, tp)


@dataclass
class AbelMap:
    """G^Q 면 → 이산 아벨 사상 값 (리프트)"""
    values: Dict[int, complex]
    anchor: int

    def __getitem__(self, f: int) -> complex:
        return self.values[f]


def _edge_increment(dg: DecoratedGraph, y: int, angles: Dict[int, complex]) -> complex:
    """흰→검 다트 y 를 가로질러 faceR → faceL 로 갈 때의 증가량 β - α"""
    g = dg.graph
    beta = angles[dg.corner_track(y)[0]]
    alpha = angles[dg.corner_track(g.prev_ccw[y])[0]]
    return beta - alpha


def discrete_abel(dg: DecoratedGraph, am: AngleMap, rho: Optional[HalfPeriod], tp: TorusParams,
                  tol: float = 1e-9) -> AbelMap:
    """
    이산 아벨 사상 (정점 0 의 원 면 = 0)

    증분 규칙 d(F_L) = d(F_R) + β - α 로 너비 우선 전파하고,
    닫힌 형태 d(v) ≡ 0, d(f) ≡ ρ, d(y) ≡ A_1 - B_1 (mod Λ) 와 비교합니다.
    """
    g = dg.graph
    angles = am.gq_angles(dg)
    anchor = next(f for f, (k, r) in enumerate(zip(dg.face_kind, dg.face_ref)) if k == 'primal' and r == 0)

    values = {anchor: 0j}
    queue = deque([anchor])
    while queue:
        f = queue.popleft()
        for y in g.faces[f]:
            for dart in (y, y ^ 1):
                if dart % 2:
                    continue
                fl, fr = g.face_left(dart), g.face_right(dart)
                inc = _edge_increment(dg, dart, angles)
                if fr in values and fl not in values:
                    values[fl] = values[fr] + inc
                    queue.append(fl)
                elif fl in values and fr not in values:
                    values[fr] = values[fl] - inc
                    queue.append(fr)

    for e in range(g.n_edges):
        dart = 2 * e
        fl, fr = g.face_left(dart), g.face_right(dart)
        gap = values[fl] - values[fr] - _edge_increment(dg, dart, angles)
        if not tp.equal_mod_lattice(gap, 0, tol):
            raise InconsistentLift(f"아벨 사상이 G^Q 간선 {e} 에서 격자 밖으로 어긋남: {gap}", witness=e)

    if rho is not None:
        rv = rho.value(tp.tau)
        for f, kind in enumerate(dg.face_kind):
            if kind == 'primal':
                expect = 0j
            elif kind == 'dual':
                expect = rv
            else:
                A, B = dg.face_corner_tracks(f)
                expect = angles[A[0]] - angles[B[0]]
            if not tp.equal_mod_lattice(values[f], expect, tol):
                raise InconsistentLift(
                    f"아벨 사상 닫힌 형태 불일치 ({dg.face_label(f)}): {values[f]} vs {expect}",
                    witness=dg.face_label(f))
    return AbelMap(values, anchor)

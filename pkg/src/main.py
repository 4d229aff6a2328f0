#!/usr/bin/env python3
"""
frustrix 메인 실행 파일

종수 1 프러스트레이션 이징 모형 분류 라이브러리의 명령행 진입점입니다.
검증 배터리, 특성 다항식, 아메바/실수 궤적, 삼각 격자 분류, 결합 상수, 자유에너지,
프러스트레이션 → 부호 복원을 실행하고 결과를 JSON/CSV 로 저장합니다.

종료 코드: 0 통과, 1 검사 실패, 2 사용법/설정 오류
"""

import sys
import math
import argparse
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table
from tqdm import tqdm

from config import SAMPLING_CONFIG, TOLERANCES, VERSION
from classify import (check_conditions, classify_many, couplings_from_fock, coupling_sweep, critical_couplings,
                      ising_model_from_fock, signs_from_frustration, square_frustrated,
                      square_frustrated_coupling, triangular_classify)
from dimer_weights import (fock_face_weights, fock_params, from_signed_couplings, gauge_equivalent,
                           ising_face_weights, weak_duality_report, coupling_assignment)
from elliptic_kernel import HalfPeriod, TorusParams, identity_suite
from errors import BoundaryCase, DomainError, FrustrixError, MalformedEmbedding, NotBipartite, OutOfRange
from kasteleyn_poly import (check_central_symmetry, dimer_charpoly, fisher_charpoly,
                            proportionality_up_to_twist)
from lattice import FAMILY, angle_map, build_GQ, builtin_graph, graph_from_json, random_angle_map, square
from spectral import (build_parameterization, coupling_term, curve_param_from_tracks, free_energy_report,
                      sample_amoeba, sample_real_locus, torus_samples)
from storage import OutputManager

# 로그 설정 (main.py에서 전체 제어)
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[logging.StreamHandler(sys.stdout)]
)
logger = logging.getLogger("main")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# 설정 단계에서 나오면 사용법 오류로 취급
USAGE_ERRORS = (DomainError, MalformedEmbedding, OutOfRange, NotBipartite, ValueError, FileNotFoundError)

RHO_TAGS = {
    '0': HalfPeriod(0, 0),
    '1/2': HalfPeriod(1, 0),
    'tau/2': HalfPeriod(0, 1),
    '1/2+tau/2': HalfPeriod(1, 1),
}

console = Console()


def print_banner(command: str):
    """프로그램 시작 배너 출력"""
    banner = f"""
{"=" * 60}
🧲 {VERSION} ({command})
{"=" * 60}
⏰ 실행 시간: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}
"""
    logger.info(banner)


def print_summary(command: str, start_time: datetime, outputs: Sequence[Path], code: int):
    """실행 결과 요약 출력"""
    elapsed = (datetime.now() - start_time).total_seconds()
    status = {EXIT_OK: '✅ 통과', EXIT_FAIL: '❌ 실패', EXIT_USAGE: '⚠️ 설정 오류'}[code]
    summary = f"""
{"=" * 60}
📊 실행 결과 요약 ({command})
{"=" * 60}
{status} (종료 코드 {code})
📁 출력 파일: {len(outputs)}개
⏱️ 소요 시간: {elapsed:.2f}초
"""
    for path in outputs:
        summary += f"  - {path}\n"
    summary += "=" * 60
    for line in summary.strip().split('\n'):
        logger.info(line)


def show_table(title: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]):
    table = Table(title=title)
    for col in columns:
        table.add_column(col)
    for row in rows:
        table.add_row(*[_cell(v) for v in row])
    console.print(table)


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return '✅' if value else '❌'
    if isinstance(value, float):
        return f"{value:.3e}"
    return str(value)


# =============================================================================
# 인자 해석
# =============================================================================

def parse_complex(text: str) -> complex:
    """'1.3i', '0.5+1.2i', '2' 형태의 복소수"""
    try:
        return complex(text.strip().replace(' ', '').replace('i', 'j'))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"복소수로 해석할 수 없습니다: {text}") from e


def parse_floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"실수 목록으로 해석할 수 없습니다: {text}") from e


def parse_complexes(text: str) -> List[complex]:
    return [parse_complex(x) for x in text.split(',') if x.strip()]


def torus_from_args(args, required: bool = True) -> Optional[TorusParams]:
    if getattr(args, 'k', None) is not None:
        return TorusParams.from_modulus(args.k)
    if getattr(args, 'tau', None) is not None:
        if args.tau.imag <= 0:
            raise DomainError(f"Im τ > 0 이어야 합니다: {args.tau}", witness=args.tau)
        return TorusParams.from_tau(args.tau)
    if required:
        raise DomainError("--k 또는 --tau 가 필요합니다")
    return None


def graph_from_args(args):
    source = args.graph
    if source.endswith('.json'):
        path = Path(source)
        if not path.exists():
            raise MalformedEmbedding(f"그래프 파일이 없습니다: {source}", witness=source)
        return graph_from_json(path.read_text(encoding='utf-8'))
    return builtin_graph(source, args.nx, args.ny)


def resolve_t(text: Optional[str], tp: TorusParams) -> Optional[complex]:
    """t 값: 'tau/2', '1/2+tau/2' 같은 반주기 표기 또는 복소수"""
    if text is None:
        return None
    if text in RHO_TAGS:
        return complex(RHO_TAGS[text].value(tp.tau))
    return parse_complex(text)


def fock_from_args(args) -> Tuple[Any, Any, TorusParams]:
    """(FockParams, DecoratedGraph, TorusParams)"""
    tp = torus_from_args(args)
    g = graph_from_args(args)
    dg = build_GQ(g)

    family = args.family
    if family is not None:
        rho, t = FAMILY[family]
    elif args.rho is not None and args.t is not None:
        rho, t = RHO_TAGS[args.rho], None
    else:
        raise DomainError("--family 또는 (--rho, --t) 가 필요합니다")
    if args.rho is not None:
        rho = RHO_TAGS[args.rho]
    explicit_t = resolve_t(args.t, tp)
    if explicit_t is not None:
        t = explicit_t

    if args.angles:
        am = angle_map(dg, args.angles, rho, tp)
    else:
        if family is None:
            raise DomainError("--family 없이 무작위 각도를 만들 수 없습니다 (--angles 필요)")
        am = random_angle_map(dg, family, tp, rng=np.random.default_rng(args.seed),
                              sorted_angles=args.sorted_angles)
    fp = fock_params(dg, am, tp, rho=rho, t=t)
    logger.info(f"🧭 {g.name}: ρ = {rho.label()}, t = {t}, 트랙 {len(am.forward)}개, τ = {tp.tau}")
    return fp, dg, tp


def couplings_from_args(args, g):
    if args.couplings:
        values = list(args.couplings)
        if len(values) == 1:
            values = values * g.n_edges
        return from_signed_couplings(g, values)
    rng = np.random.default_rng(args.seed)
    J = rng.uniform(0.2, 1.2, g.n_edges)
    eps = rng.choice([-1, 1], g.n_edges)
    logger.info(f"🎲 무작위 결합 상수 (seed={args.seed})")
    return coupling_assignment(eps.tolist(), J.tolist(), g)


# =============================================================================
# 명령 실행
# =============================================================================

def run_verify(args, out: OutputManager) -> Tuple[int, List[Path]]:
    """검증 배터리 실행"""
    which = args.which
    if which == 'theta':
        tp = torus_from_args(args)
        samples = torus_samples(tp, args.samples, rng=np.random.default_rng(args.seed))
        results = identity_suite(tp, samples)
        show_table(f"세타 항등식 (τ = {tp.tau})", ['항등식', '최대 잔차', '샘플', '통과'],
                   [(n, r.max_residual, r.samples, r.passed) for n, r in results.items()])
        ok = all(r.passed for r in results.values())
        path = out.save_json({'tau': tp.tau, 'results': results, 'passed': ok}, 'verify_theta.json')
        return (EXIT_OK if ok else EXIT_FAIL), [path]

    if which == 'gauge':
        fp, dg, _ = fock_from_args(args)
        report = check_conditions(fp, dg)
        ca = ising_model_from_fock(fp, dg)
        gauge = gauge_equivalent(ising_face_weights(dg, ca), fock_face_weights(fp, 'raw'))
        show_table("게이지 동치", ['계열', '조건', '최악 면', '상대 차이', '통과'],
                   [(report.family, ','.join(c for c in report.conditions if report.conditions[c].passed),
                     gauge.worst_face, gauge.worst_gap, gauge.equivalent)])
        path = out.save_json({'conditions': report, 'couplings': ca, 'gauge': gauge}, 'verify_gauge.json')
        return (EXIT_OK if gauge.equivalent else EXIT_FAIL), [path]

    if which == 'duality':
        fp, _, _ = fock_from_args(args)
        rep = weak_duality_report(fp)
        products = np.array(list(rep['products'].values()))
        ratios = np.array(list(rep['ratios'].values()))
        product_gap = float(np.max(np.abs(products - 1.0))) if len(products) else math.nan
        ratio_gap = float(np.max(np.abs(ratios - 1.0))) if len(ratios) else math.nan
        ok = product_gap < TOLERANCES['duality'] and ratio_gap < TOLERANCES['duality']
        show_table("약한 쌍대", ['사각 면', '|sinh² 곱 - 1|', '|W_t / W* - 1|', '통과'],
                   [(len(products), product_gap, ratio_gap, ok)])
        path = out.save_json({'report': rep, 'product_gap': product_gap, 'ratio_gap': ratio_gap, 'passed': ok},
                             'verify_duality.json')
        return (EXIT_OK if ok else EXIT_FAIL), [path]

    if which == 'symmetry':
        g = graph_from_args(args)
        ca = couplings_from_args(args, g)
        p_ising = fisher_charpoly(g, ca)
        p_dub = dimer_charpoly(g, ca)
        sym = check_central_symmetry(p_ising)
        c, residual, transform = proportionality_up_to_twist(p_ising, p_dub)
        ok = sym < TOLERANCES['face_weight'] and residual < TOLERANCES['root_residual']
        show_table(f"중심 대칭 / 비례 ({g.name})", ['중심 대칭 잔차', '비례 상수', '꼬임', '반전', '비례 잔차', '통과'],
                   [(sym, f"{c:.6g}", transform['twist'], transform['flip'], residual, ok)])
        path = out.save_json({'central_symmetry': sym, 'constant': c, 'residual': residual, 'transform': transform,
                              'passed': ok, 'couplings': ca}, 'verify_symmetry.json')
        return (EXIT_OK if ok else EXIT_FAIL), [path]

    if which == 'square-factorization':
        if args.k is None:
            raise DomainError("--k 가 필요합니다")
        result = square_frustrated(args.k)
        ok = result.residual < 1e-9
        show_table("정사각 격자 인수분해", ['k', 'J', 'J₊', '잔차', '통과'],
                   [(result.k, result.J, result.J_plus, result.residual, ok)])
        path = out.save_json(result, 'verify_square_factorization.json')
        return (EXIT_OK if ok else EXIT_FAIL), [path]

    raise DomainError(f"알 수 없는 검증: {which}", witness=which)


def run_charpoly(args, out: OutputManager) -> Tuple[int, List[Path]]:
    """특성 다항식 계산 및 저장"""
    g = graph_from_args(args)
    ca = couplings_from_args(args, g)
    poly = fisher_charpoly(g, ca) if args.kind == 'ising' else dimer_charpoly(g, ca)
    logger.info(f"🧮 {args.kind} 특성 다항식: 단항식 {len(poly)}개")
    path = out.save_json({'kind': args.kind, 'graph': g.name, 'couplings': ca, 'poly': poly.to_json(),
                          'newton_polygon': poly.newton_polygon()}, f'charpoly_{args.kind}.json')
    return EXIT_OK, [path]


def _torus_annotation(fp) -> pd.DataFrame:
    rows = []
    for track, a in sorted(fp.am.forward.items()):
        rows.append({'x': complex(a).real, 'y': complex(a).imag, 'label': f'T{track}+'})
    for track, a in sorted(fp.am.backward.items()):
        rows.append({'x': complex(a).real, 'y': complex(a).imag, 'label': f'T{track}-'})
    rows.append({'x': fp.t.real, 'y': fp.t.imag, 'label': 't'})
    return pd.DataFrame(rows)


def run_amoeba(args, out: OutputManager, real_only: bool = False) -> Tuple[int, List[Path]]:
    """매개화 아메바, 실수 궤적, 토러스 각도 표시"""
    if not real_only and args.resolution is not None and args.resolution <= 0:
        raise DomainError(f"해상도는 양수여야 합니다: {args.resolution}", witness=args.resolution)
    fp, dg, tp = fock_from_args(args)
    ev = build_parameterization(curve_param_from_tracks(dg, fp.am, tp), tp)
    outputs = []
    locus, dropped = sample_real_locus(ev, tp, args.points)
    outputs.append(out.save_points(locus, 'real_locus.csv'))
    if not real_only:
        cloud = sample_amoeba(ev, args.resolution)
        outputs.insert(0, out.save_points(cloud, 'amoeba.csv'))
        outputs.append(out.save_points(_torus_annotation(fp), 'torus.csv'))
    counts = locus['label'].value_counts().to_dict()
    show_table("실수 궤적", ['성분', '점 수'], sorted(counts.items()))
    if dropped:
        logger.warning(f"⚠️ 극점 근처 {dropped}점 제외")
    return EXIT_OK, outputs


def run_classify(args, out: OutputManager) -> Tuple[int, List[Path]]:
    """삼각 격자 분류 (단일 삼중쌍, 배치 CSV, 결합 곡선)"""
    outputs: List[Path] = []
    code = EXIT_OK
    if args.s is not None:
        if len(args.s) != 3 or any(not v > 0 for v in args.s):
            raise DomainError(f"--s 는 양수 세 개여야 합니다: {args.s}", witness=args.s)
        try:
            point = triangular_classify(args.s)
            show_table("삼각 격자 분류", ['s', '분류', '계열', 'k', '잔차'],
                       [(tuple(args.s), point.klass, point.family, point.k, point.residual)])
            outputs.append(out.save_json(point, 'classify_triangular.json'))
        except BoundaryCase as e:
            logger.warning(f"⚠️ 경계 사례: {e}")
            outputs.append(out.save_json({'s': list(args.s), 'class': 'boundary', 'witness': e.witness},
                                         'classify_triangular.json'))
            code = EXIT_OK if args.allow_boundary else EXIT_FAIL

    if args.batch:
        frame = pd.read_csv(args.batch)
        triples = frame[['s1', 's2', 's3']].to_numpy(dtype=float).tolist()
        result = classify_many(triples, progress=True)
        outputs.append(out.save_csv(result, 'classify_batch.csv'))
        if not args.allow_boundary and (result['class'] == 'boundary').any():
            code = EXIT_FAIL
        if result['class'].isna().any():
            code = EXIT_FAIL

    if args.sweep:
        ks = args.k_values or list(np.linspace(0.05, 0.95, 19))
        outputs.append(out.save_csv(coupling_sweep(args.sweep, ks), f'sweep_{args.sweep}.csv'))

    if not outputs:
        raise DomainError("--s, --batch, --sweep 중 하나가 필요합니다")
    return code, outputs


def run_couplings(args, out: OutputManager) -> Tuple[int, List[Path]]:
    """Fock 모형 → 이징 결합 상수, 프러스트레이션, 임계 결합"""
    fp, dg, tp = fock_from_args(args)
    report = check_conditions(fp, dg)
    rows = [(name, c.passed, c.detail or '', c.witness or '') for name, c in report.conditions.items()]
    show_table("필요 조건", ['조건', '통과', '내용', '증인'], rows)
    if report.family is None:
        path = out.save_json({'conditions': report}, 'couplings.json')
        return EXIT_FAIL, [path]

    couplings = couplings_from_fock(fp, dg)
    eps = signs_from_frustration(dg.base, couplings.delta)
    crit = critical_couplings(dg, fp.am, couplings.family)
    show_table(f"결합 상수 (계열 {couplings.family})", ['간선', 'J', 'ε', 'J_crit'],
               [(e, j, eps[e], c) for e, (j, c) in enumerate(zip(couplings.J, crit))])
    path = out.save_json({'conditions': report, 'couplings': couplings, 'eps': eps,
                          'critical': crit, 'k': tp.real_k}, 'couplings.json')
    return EXIT_OK, [path]


def _frustrated_square_energy(k: float, grid_n: int) -> Dict[str, Any]:
    J = square_frustrated_coupling(k)
    g = square(2, 2)
    eps = signs_from_frustration(g, [-1] * g.n_faces)
    ca = coupling_assignment(eps, [J] * g.n_edges, g)
    report = free_energy_report(fisher_charpoly(g, ca), grid_n, coupling_term(ca.J))
    return {'k': k, 'J': J, 'f': report['value_2n'], 'richardson_gap': report['richardson_gap']}


def run_free_energy(args, out: OutputManager) -> Tuple[int, List[Path]]:
    """자유에너지 (격자 사다리꼴 적분 + 리처드슨 차이)"""
    grid_n = args.grid or SAMPLING_CONFIG['free_energy_grid']
    if args.model == 'square-frustrated':
        ks = args.k_values or ([args.k] if args.k is not None else None)
        if not ks:
            raise DomainError("--k 또는 --k-values 가 필요합니다")
        rows = [_frustrated_square_energy(k, grid_n) for k in tqdm(ks, desc='자유에너지')]
        frame = pd.DataFrame(rows, columns=['k', 'J', 'f', 'richardson_gap'])
        show_table("완전 프러스트레이션 정사각 격자", ['k', 'J', 'f', '차이'],
                   [tuple(r.values()) for r in rows])
        return EXIT_OK, [out.save_csv(frame, 'free_energy_sweep.csv')]

    if args.model == 'fock':
        fp, dg, _ = fock_from_args(args)
        g, ca = dg.base, ising_model_from_fock(fp, dg)
    else:
        g = graph_from_args(args)
        ca = couplings_from_args(args, g)
    report = free_energy_report(fisher_charpoly(g, ca), grid_n, coupling_term(ca.J))
    show_table(f"자유에너지 ({g.name})", ['n', 'f(n)', 'f(2n)', '차이'],
               [(report['grid_n'], report['value'], report['value_2n'], report['richardson_gap'])])
    path = out.save_json({'graph': g.name, 'couplings': ca, 'free_energy': report}, 'free_energy.json')
    return EXIT_OK, [path]


def run_signs(args, out: OutputManager) -> Tuple[int, List[Path]]:
    """면별 프러스트레이션 → 간선 부호"""
    g = graph_from_args(args)
    if args.delta == 'all-minus':
        delta = [-1] * g.n_faces
    else:
        delta = [int(float(x)) for x in args.delta.split(',') if x.strip()]
    eps = signs_from_frustration(g, delta)
    show_table(f"부호 복원 ({g.name})", ['간선', 'ε'], list(enumerate(eps)))
    path = out.save_json({'graph': g.name, 'delta': delta, 'eps': eps}, 'signs.json')
    return EXIT_OK, [path]


COMMANDS = {
    'verify': run_verify,
    'charpoly': run_charpoly,
    'amoeba': run_amoeba,
    'real-locus': lambda args, out: run_amoeba(args, out, real_only=True),
    'classify': run_classify,
    'couplings': run_couplings,
    'free-energy': run_free_energy,
    'signs-from-frustration': run_signs,
}


def run_command(args) -> int:
    """명령 실행 후 종료 코드 반환"""
    start_time = datetime.now()
    print_banner(args.command)
    outputs: List[Path] = []
    try:
        out = OutputManager(args.output_dir)
        code, outputs = COMMANDS[args.command](args, out)
    except KeyboardInterrupt:
        logger.warning("⚠️ 사용자에 의해 중단되었습니다")
        code = EXIT_FAIL
    except USAGE_ERRORS as e:
        logger.error(f"❌ 설정 오류: {e}")
        code = EXIT_USAGE
    except FrustrixError as e:
        logger.error(f"❌ 검사 실패 ({type(e).__name__}): {e}", exc_info=args.verbose)
        if e.witness is not None:
            logger.error(f"  증인: {e.witness}")
        code = EXIT_FAIL
    except Exception as e:
        logger.error(f"❌ 실행 중 오류 발생: {e}", exc_info=True)
        code = EXIT_FAIL
    print_summary(args.command, start_time, outputs, code)
    return code


# =============================================================================
# 인자 파서
# =============================================================================

def _add_graph_args(p):
    p.add_argument('--graph', default='triangular', help='내장 그래프 (square, triangular, hexagonal, pinched) 또는 JSON 경로')
    p.add_argument('--nx', type=int, default=1, help='기본 영역 가로 크기')
    p.add_argument('--ny', type=int, default=1, help='기본 영역 세로 크기')


def _add_torus_args(p):
    p.add_argument('--k', type=float, help='타원 모듈러스 k ∈ [0, 1)')
    p.add_argument('--tau', type=parse_complex, help='모듈러 파라미터 τ (예: 1.3i, 0.5+1.2i)')


def _add_family_args(p):
    _add_graph_args(p)
    _add_torus_args(p)
    p.add_argument('--family', choices=sorted(FAMILY), help='계열 I (ρ=1/2, t=0), II (ρ=1/2, t=1/2), III (ρ=1/2+τ/2, t=1/2)')
    p.add_argument('--rho', choices=sorted(RHO_TAGS), help='반주기 ρ (계열 대신 직접 지정)')
    p.add_argument('--t', type=str, help='t 값 (복소수 또는 0, 1/2, tau/2, 1/2+tau/2)')
    p.add_argument('--angles', type=parse_complexes, help='G 트랙 순서의 α→ (토러스 좌표, 콤마 구분)')
    p.add_argument('--sorted-angles', action='store_true', help='무작위 각도를 호몰로지 순서로 정렬')
    p.add_argument('--seed', type=int, default=0, help='난수 시드')


def _add_coupling_args(p):
    p.add_argument('--couplings', type=parse_floats, help='간선별 부호 있는 결합 εJ (값 하나면 전체 간선)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='frustrix',
        description='종수 1 프러스트레이션 이징 모형 분류기',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
사용 예시:
  python main.py verify theta --tau 1.3i
  python main.py verify gauge --graph triangular --family III --k 0.5 --angles 0,0.3333,0.6667
  python main.py verify square-factorization --k 0.5
  python main.py classify triangular --s 1,1,1
  python main.py amoeba --graph triangular --family I --k 0.5 --seed 3
  python main.py free-energy --model square-frustrated --k-values 0.2,0.5,0.8
  python main.py signs-from-frustration --graph square --nx 2 --ny 2 --delta all-minus
        """
    )
    parser.add_argument('--output-dir', type=str, help='출력 디렉토리 (기본: FRUSTRIX_OUTPUT_DIR 또는 output/)')
    parser.add_argument('--verbose', action='store_true', help='디버그 로그 출력')
    parser.add_argument('--version', action='version', version=VERSION)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('verify', help='검증 배터리')
    p.add_argument('which', choices=['theta', 'gauge', 'duality', 'symmetry', 'square-factorization'])
    _add_family_args(p)
    _add_coupling_args(p)
    p.add_argument('--samples', type=int, default=200, help='항등식 샘플 수')

    p = sub.add_parser('charpoly', help='특성 다항식 (Fisher / 이징-다이머)')
    _add_graph_args(p)
    _add_coupling_args(p)
    p.add_argument('--kind', choices=['ising', 'dimer'], default='ising')
    p.add_argument('--seed', type=int, default=0, help='난수 시드')

    for name, help_text in (('amoeba', '아메바 / 실수 궤적 / 토러스 각도 CSV'), ('real-locus', '실수 궤적 CSV')):
        p = sub.add_parser(name, help=help_text)
        _add_family_args(p)
        p.add_argument('--resolution', type=int, help='토러스 격자 해상도')
        p.add_argument('--points', type=int, help='실수 궤적 원 당 샘플 수')

    p = sub.add_parser('classify', help='삼각 격자 분류')
    p.add_argument('target', choices=['triangular'])
    p.add_argument('--s', type=parse_floats, help='sinh(2J_i) 세 값 (콤마 구분)')
    p.add_argument('--batch', type=str, help='s1,s2,s3 열을 가진 CSV')
    p.add_argument('--sweep', choices=['square', 'triangular-isotropic', 'triangular-anisotropic'],
                   help='k 에 따른 결합 곡선 CSV')
    p.add_argument('--k-values', type=parse_floats, help='곡선에 쓸 k 목록')
    p.add_argument('--allow-boundary', action='store_true', help='경계 사례를 실패로 보지 않음')

    p = sub.add_parser('couplings', help='Fock 모형의 이징 결합 상수')
    _add_family_args(p)

    p = sub.add_parser('free-energy', help='자유에너지')
    _add_family_args(p)
    _add_coupling_args(p)
    p.add_argument('--model', choices=['couplings', 'fock', 'square-frustrated'], default='couplings')
    p.add_argument('--grid', type=int, help='적분 격자 크기 n (n, 2n 을 비교)')
    p.add_argument('--k-values', type=parse_floats, help='square-frustrated 곡선의 k 목록')

    p = sub.add_parser('signs-from-frustration', help='면별 δ 에서 간선 부호 복원')
    _add_graph_args(p)
    p.add_argument('--delta', required=True, help="면별 ±1 (콤마 구분) 또는 'all-minus'")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """메인 함수"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    return run_command(args)


if __name__ == '__main__':
    sys.exit(main())

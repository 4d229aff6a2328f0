import os
import logging
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
OUTPUT_DIR = os.getenv('FRUSTRIX_OUTPUT_DIR', os.path.join(BASE_DIR, '..', 'output'))

VERSION = 'frustrix v1.0'

# 수치 허용 오차 (계층별)
TOLERANCES = {
    'kernel': 1e-12,  # 세타/타원함수 자체 정확도
    'identity': 1e-11,  # 항등식 배터리 통과 기준
    'face_weight': 1e-10,  # 면 가중치 비교
    'gauge': 1e-9,  # 게이지 동치 판정
    'pole': 1e-250,  # |분모| 가 이보다 작으면 극점 (절대)
    'duality': 1e-10,  # 약한 쌍대 곱/비율의 1 로부터 거리
    'near_pole': 1e-14,  # |분모| / |분자| 가 이보다 작으면 극점 근처 경고
    'coeff_cleanup': 1e-13,  # 라우렌트 다항식 계수 정리 기준 (상대)
    'boundary': 1e-10,  # 삼각격자 분류 경계 판정
    'root_residual': 1e-8,  # 아메바 근 재평가 잔차
}

# 세타 급수 설정
SERIES_CONFIG = {
    'max_terms': 200,  # 최대 항 수
    'eps': 1e-16,  # 항 크기 절단 기준
    'overflow_log': 700.0,  # exp 인자의 실수부 상한
}

# 샘플링 설정
SAMPLING_CONFIG = {
    'amoeba_resolution': 120,  # 토러스 격자 해상도
    'amoeba_radii': 40,  # 다항식 슬라이스 반지름 개수
    'amoeba_log_range': 6.0,  # log 반지름 범위 (±)
    'real_locus_points': 2000,  # 실수 궤적 원 당 샘플 수
    'free_energy_grid': 512,  # 자유에너지 적분 격자
    'max_perturbations': 3,  # 격자 교란 최대 횟수
    'golden_offset': 0.6180339887498949,  # 황금비 오프셋
    'fit_samples': 40,  # 스케일링 피팅 샘플 수
}

# 분류 설정
CLASSIFY_CONFIG = {
    'kprime_bracket': (1e-9, 1.0 - 1e-9),  # k' 이분법 구간
    'exhaustive_edges': 20,  # 카스텔레인 전수 탐색 최대 간선 수
    'xtol': 1e-15,  # 근 찾기 허용 오차
    'scan_points': 64,  # 부호 변화 탐색 점 수
}


def _apply_tolerance_override(raw):
    """FRUSTRIX_TOL 환경변수 적용 ("key=val,..." 또는 단일 값)"""
    if not raw:
        return
    raw = raw.strip()
    try:
        TOLERANCES['gauge'] = float(raw)
        logger.info(f"⚙️ 게이지 허용 오차 재설정: {TOLERANCES['gauge']}")
        return
    except ValueError:
        pass

    for item in raw.split(','):
        if '=' not in item:
            logger.warning(f"⚠️ 잘못된 FRUSTRIX_TOL 항목 무시: {item}")
            continue
        key, value = (s.strip() for s in item.split('=', 1))
        if key not in TOLERANCES:
            logger.warning(f"⚠️ 알 수 없는 허용 오차 키 무시: {key}")
            continue
        try:
            TOLERANCES[key] = float(value)
        except ValueError:
            logger.warning(f"⚠️ 허용 오차 값 파싱 실패: {item}")


_apply_tolerance_override(os.getenv('FRUSTRIX_TOL'))

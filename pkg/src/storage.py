"""
결과 저장 모듈
검증/분류 보고서를 JSON 으로, 점 구름과 곡선을 CSV 로 저장

같은 입력이면 바이트 단위로 같은 파일이 나오도록 키를 정렬하고 실수는 %.12e 문자열로 고정합니다.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import pandas as pd

from config import OUTPUT_DIR

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12e'


def _format_float(x: float) -> str:
    if math.isnan(x):
        return 'nan'
    if math.isinf(x):
        return 'inf' if x > 0 else '-inf'
    return FLOAT_FORMAT % x


def to_serializable(obj: Any) -> Any:
    """보고서 객체를 JSON 으로 쓸 수 있는 값으로 변환 (실수 → 고정 형식 문자열)"""
    if hasattr(obj, 'to_dict'):
        return to_serializable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_serializable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        items = sorted(obj) if isinstance(obj, set) else obj
        return [to_serializable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return [to_serializable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return {'re': _format_float(z.real), 'im': _format_float(z.imag)}
    return obj


class OutputManager:
    """출력 디렉토리 관리 및 보고서/CSV 저장"""

    def __init__(self, base_dir: Optional[Union[str, Path]] = None):
        self.base_dir = Path(base_dir) if base_dir else Path(OUTPUT_DIR)
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.base_dir / name

    def save_json(self, data: Any, name: str) -> Path:
        """
        보고서를 JSON 으로 저장

        Args:
            data: dict 또는 to_dict() 를 가진 객체
            name: 출력 디렉토리 기준 파일 이름

        Returns:
            저장한 파일 경로
        """
        filepath = self.path(name)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(to_serializable(data), ensure_ascii=False, indent=2, sort_keys=True)
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(text + '\n')
        logger.info(f"  💾 보고서 저장: {filepath.name}")
        return filepath

    def load_json(self, name: Union[str, Path]) -> Optional[Any]:
        filepath = Path(name)
        if not filepath.is_absolute() and not filepath.exists():
            filepath = self.path(str(name))
        if not filepath.exists():
            logger.debug(f"파일이 존재하지 않음: {filepath}")
            return None
        with open(filepath, 'r', encoding='utf-8') as f:
            return json.load(f)

    def save_csv(self, frame: pd.DataFrame, name: str, columns: Optional[Sequence[str]] = None) -> Path:
        """DataFrame 을 고정 열 순서, %.12e 실수 형식으로 저장"""
        filepath = self.path(name)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        if columns is not None:
            frame = frame.reindex(columns=list(columns))
        frame.to_csv(filepath, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        logger.info(f"  💾 CSV 저장: {filepath.name} ({len(frame)}행)")
        return filepath

    def save_points(self, frame: pd.DataFrame, name: str) -> Path:
        """x, y, label 점 구름"""
        return self.save_csv(frame, name, columns=['x', 'y', 'label'])

"""
frustrix 예외 계층

라이브러리 코드는 예외를 던지고, main.py 만 잡아서 종료 코드로 변환합니다.
"""

from typing import Any, Optional


class FrustrixError(Exception):
    """모든 frustrix 오류의 기반 클래스 (witness: 실패한 면/트랙/잔차 등)"""

    def __init__(self, message: str, witness: Optional[Any] = None):
        super().__init__(message)
        self.witness = witness


# elliptic_kernel
class NonConvergent(FrustrixError):
    pass


class ThetaOverflow(FrustrixError):
    pass


class DomainError(FrustrixError):
    pass


class PoleHit(FrustrixError):
    pass


class OutOfRange(FrustrixError):
    pass


# lattice
class MalformedEmbedding(FrustrixError):
    pass


class NotBipartite(FrustrixError):
    pass


class InconsistentLift(FrustrixError):
    pass


# kasteleyn_poly
class NoAssignment(FrustrixError):
    pass


class MissingWeight(FrustrixError):
    pass


class DegreeBoundExceeded(FrustrixError):
    pass


class SupportMismatch(FrustrixError):
    pass


# dimer_weights
class FamilyMismatch(FrustrixError):
    pass


class DegenerateCoupling(FrustrixError):
    pass


class RegistryMismatch(FrustrixError):
    pass


# spectral
class NonMeromorphic(FrustrixError):
    pass


class IllConditioned(FrustrixError):
    pass


class GridOnZero(FrustrixError):
    pass


# classify
class BoundaryCase(FrustrixError):
    """분류 경계 (witness 에 인접한 두 분류 결과를 담음)"""
    pass


class ParityObstruction(FrustrixError):
    """프러스트레이션 곱이 -1 인 경우 (기본 영역을 두 배로 늘리면 해결 가능)"""
    pass

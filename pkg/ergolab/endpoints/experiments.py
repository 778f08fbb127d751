"""
Experiment Endpoints
HTTP access to the experiments with validated request models
"""

import logging
from typing import Any, Dict, List, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from ergolab.errors import BudgetExceededError, ConfigurationError, ErgoLabError
from ergolab.models.polynomials import GrowthFn
from ergolab.simulations.dynamics import SkewSystem, SystemConfig
from ergolab.simulations.experiments import (
    certify_points,
    cesaro_trajectory,
    entropy_proxy,
    estimate_e_measure,
    llt_curve,
    triple_measure_curve,
)
from ergolab.simulations.selftest import run_selftest
from ergolab.simulations.series import series_partial_sums

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/experiments", tags=["Experiments"])


class SystemParams(BaseModel):
    p1: str = "n^5"
    p2: str = "2*n^5"
    M: Optional[int] = None
    horizon: int = 20
    f: str = "dyadic"
    eta: Optional[float] = None
    seed: int = 42
    omega_per_point: int = 16
    base: str = "walk"
    unsafe_degree: bool = False
    scan_bound: Optional[int] = None
    budget: int = 50_000_000

    def build(self, samples: int) -> SkewSystem:
        return SystemConfig(samples=samples, **self.model_dump()).build()


class LLTRequest(BaseModel):
    n_values: List[int] = Field(default_factory=lambda: [100, 400, 1600])
    w_bound: int = 3


class SeriesRequest(BaseModel):
    growth: str = "poly:n^5"
    n_cap: int = 100
    k_cap: int = 100


class EMeasureRequest(BaseModel):
    system: SystemParams = Field(default_factory=SystemParams)
    n_values: List[int] = Field(default_factory=lambda: [2, 4, 6])
    samples: int = 200
    k_cap: int = 5


class TripleRequest(BaseModel):
    system: SystemParams = Field(default_factory=SystemParams)
    n_from: Optional[int] = None
    n_to: Optional[int] = None
    samples: int = 50


class CesaroRequest(BaseModel):
    system: SystemParams = Field(default_factory=SystemParams)
    n_max: Optional[int] = None
    samples: int = 50


class EntropyRequest(BaseModel):
    system: SystemParams = Field(default_factory=SystemParams)
    n_values: List[int] = Field(default_factory=lambda: [1000, 10000])
    samples: int = 20


class CertifyRequest(BaseModel):
    system: SystemParams = Field(default_factory=SystemParams)
    samples: int = 20


class SelftestRequest(BaseModel):
    system: SystemParams = Field(default_factory=SystemParams)
    points: int = 2
    omega_ids: int = 8
    conjugacy_trials: int = 50


def _run(label: str, action) -> Dict[str, Any]:
    try:
        return action().to_dict()
    except (ConfigurationError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except BudgetExceededError as e:
        raise HTTPException(status_code=413, detail=str(e))
    except ErgoLabError as e:
        logger.error(f"{label} failed: {e}")
        raise HTTPException(status_code=500, detail=f"{label} failed: {str(e)}")


@router.post("/llt")
def run_llt(request: LLTRequest) -> Dict[str, Any]:
    """Exact local-CLT deviation and W_n masses"""
    return _run("llt", lambda: llt_curve(request.n_values, request.w_bound))


@router.post("/series")
def run_series(request: SeriesRequest) -> Dict[str, Any]:
    return _run("series", lambda: series_partial_sums(GrowthFn.parse(request.growth),
                                                      request.n_cap, request.k_cap))


@router.post("/e-measure")
def run_e_measure(request: EMeasureRequest) -> Dict[str, Any]:
    return _run("e-measure", lambda: estimate_e_measure(request.system.build(request.samples),
                                                        request.n_values, request.samples, request.k_cap))


@router.post("/triple")
def run_triple(request: TripleRequest) -> Dict[str, Any]:
    """Triple-intersection dichotomy over an n window"""
    def action():
        system = request.system.build(request.samples)
        n_from = request.n_from if request.n_from is not None else system.start
        n_to = request.n_to if request.n_to is not None else system.last_n
        return triple_measure_curve(system, n_from, n_to, request.samples)
    return _run("triple", action)


@router.post("/cesaro")
def run_cesaro(request: CesaroRequest) -> Dict[str, Any]:
    def action():
        system = request.system.build(request.samples)
        n_max = request.n_max if request.n_max is not None else system.last_n
        return cesaro_trajectory(system, n_max, request.samples)
    return _run("cesaro", action)


@router.post("/entropy")
def run_entropy(request: EntropyRequest) -> Dict[str, Any]:
    return _run("entropy", lambda: entropy_proxy(request.system.build(request.samples),
                                                 request.n_values, request.samples))


@router.post("/certify")
def run_certify(request: CertifyRequest) -> Dict[str, Any]:
    return _run("certify", lambda: certify_points(request.system.build(request.samples), request.samples))


@router.post("/selftest")
def run_selftest_endpoint(request: SelftestRequest) -> Dict[str, Any]:
    return _run("selftest", lambda: run_selftest(request.system.build(request.points),
                                                 points=request.points, omega_ids=request.omega_ids,
                                                 conjugacy_trials=request.conjugacy_trials))

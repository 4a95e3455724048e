"""Benchmark model endpoints."""

from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool
from typing import List
import logging

import numpy as np

from app.exceptions import DimensionMismatch, DistributionLearningError, UnknownBenchmark
from app.models.benchmark import BenchmarkPreset, EvaluateRequest, EvaluateResponse
from app.services.benchmarks import get_benchmark, list_benchmarks

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/benchmarks", tags=["benchmarks"])


@router.get("", response_model=List[BenchmarkPreset])
async def get_benchmarks():
    """List registered benchmarks with their preset ranges."""
    return list_benchmarks()


@router.post("/{name}/evaluate", response_model=EvaluateResponse)
async def evaluate_benchmark(name: str, request: EvaluateRequest):
    """Evaluate a benchmark model at the given points."""

    try:
        model = get_benchmark(name)
        points = np.asarray(request.points, dtype=float)
        if points.ndim != 2:
            raise DimensionMismatch("points must be a list of equally long coordinate lists")
        outputs = await run_in_threadpool(model, points)

        logger.info(f"Evaluated {name} at {points.shape[0]} point(s)")
        return EvaluateResponse(benchmark=name, outputs=outputs.tolist(), n_model_calls=model.calls)

    except UnknownBenchmark as e:
        raise HTTPException(status_code=404, detail=str(e))
    except (DistributionLearningError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Failed to evaluate benchmark {name}: {e}")
        raise HTTPException(status_code=500, detail="Failed to evaluate benchmark")

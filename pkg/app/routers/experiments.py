"""Experiment and reference solution endpoints."""

from fastapi import APIRouter, HTTPException, BackgroundTasks
from fastapi.concurrency import run_in_threadpool
from typing import Dict
from datetime import datetime
import logging

import aiofiles

from app.config import get_settings
from app.exceptions import DistributionLearningError, UnknownBenchmark
from app.models.experiment import (
    AggregateReport,
    ExperimentConfig,
    ExperimentJob,
    ExperimentJobView,
    JobStatus,
    ReferenceInfo,
    ReferenceRequest,
)
from app.services.benchmarks import get_preset
from app.services.experiment_service import ExperimentService, generate_reference

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/experiments", tags=["experiments"])
references_router = APIRouter(prefix="/references", tags=["references"])

# Initialize service
experiment_service = ExperimentService()

# In-memory job registry; jobs do not survive a restart
jobs: Dict[str, ExperimentJob] = {}


def run_experiment_job(job_id: str) -> None:
    """Execute a submitted experiment and record its outcome."""
    job = jobs[job_id]
    job.status = JobStatus.RUNNING
    job.updated_at = datetime.utcnow()
    try:
        aggregate = experiment_service.run_experiment(job.config)
        json_path, _ = experiment_service.aggregate_paths(job.config)
        job.aggregate_path = str(json_path)
        job.partial = aggregate.partial
        job.status = JobStatus.COMPLETED
        logger.info(f"Experiment job {job_id} completed")
    except Exception as e:
        logger.error(f"Experiment job {job_id} failed: {e}", exc_info=True)
        job.status = JobStatus.FAILED
        job.error = str(e)
    job.updated_at = datetime.utcnow()


@router.post("", response_model=ExperimentJob, status_code=202)
async def submit_experiment(config: ExperimentConfig, background_tasks: BackgroundTasks):
    """Queue an experiment; poll its job for the aggregate."""

    try:
        experiment_service.resolve_range(config)
    except UnknownBenchmark as e:
        raise HTTPException(status_code=404, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))

    job = ExperimentJob(config=config)
    jobs[job.job_id] = job
    background_tasks.add_task(run_experiment_job, job.job_id)

    logger.info(f"Queued experiment job {job.job_id} on {config.benchmark}")
    return job


@router.get("/{job_id}", response_model=ExperimentJobView)
async def get_experiment(job_id: str):
    """Get a job and, once written, its aggregate report."""

    job = jobs.get(job_id)
    if not job:
        raise HTTPException(status_code=404, detail="Experiment job not found")

    if job.status != JobStatus.COMPLETED or not job.aggregate_path:
        return ExperimentJobView(job=job)

    try:
        async with aiofiles.open(job.aggregate_path, "r") as f:
            content = await f.read()
        return ExperimentJobView(job=job, aggregate=AggregateReport.model_validate_json(content))

    except Exception as e:
        logger.error(f"Failed to read aggregate for job {job_id}: {e}")
        raise HTTPException(status_code=500, detail="Failed to read experiment aggregate")


@references_router.post("", response_model=ReferenceInfo)
async def create_reference(request: ReferenceRequest):
    """Generate a reference CDF table, or return the cached one."""

    settings = get_settings()
    try:
        get_preset(request.benchmark)
        seed = settings.reference_seed if request.seed is None else request.seed
        return await run_in_threadpool(
            generate_reference, request.benchmark, request.samples, seed,
            settings.reference_dir, settings.workers, settings,
        )

    except UnknownBenchmark as e:
        raise HTTPException(status_code=404, detail=str(e))
    except DistributionLearningError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Failed to generate reference for {request.benchmark}: {e}")
        raise HTTPException(status_code=500, detail="Failed to generate reference")

"""
Legged trajectory dataset generator
FastAPI application entry point.
"""

from contextlib import asynccontextmanager
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
import logging

from app.config import get_settings
from app.database import init_db
from app.routers import datasets, terrains, tracking

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(_app: FastAPI):
    """
    Application lifespan manager.
    Handles startup and shutdown events.
    """
    # Startup
    logger.info("Starting dataset generator application...")
    settings = get_settings()

    try:
        init_db()
    except Exception as e:
        logger.error(f"Failed to create database tables: {e}")
        raise

    logger.info(f"Storage directories ready at {settings.storage_root}")
    logger.info("Application startup complete")

    yield

    # Shutdown
    logger.info("Shutting down dataset generator application...")


# Create FastAPI application
app = FastAPI(
    title="Legged Trajectory Datagen",
    description="Centroidal trajectory optimization, imitation clip datasets and evaluation terrains",
    version="0.1.0",
    lifespan=lifespan
)

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/health", tags=["health"])
async def health_check():
    """Detailed health check endpoint."""
    settings = get_settings()

    return {
        "status": "healthy",
        "database": "connected",
        "storage": {
            "datasets_dir": str(settings.datasets_dir),
            "terrains_dir": str(settings.terrains_dir),
        },
        "robot_config": str(settings.robot_config_path),
    }


# Include routers
app.include_router(datasets.router)
app.include_router(terrains.router)
app.include_router(tracking.router)


# Global exception handler
@app.exception_handler(Exception)
async def global_exception_handler(_request, exc):
    """Handle uncaught exceptions globally."""
    logger.error(f"Unhandled exception: {exc}", exc_info=True)
    return JSONResponse(
        status_code=500,
        content={
            "detail": "Internal server error occurred",
            "error": str(exc)
        }
    )


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=8000,
        reload=True,
        log_level="info"
    )

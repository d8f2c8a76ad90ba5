import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from api.logging_config import configure_logging
from api.settings import get_settings

logger = logging.getLogger(__name__)

app = FastAPI(title="energy-two-step", version="0.1.0")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.on_event("startup")
async def startup_event():
    """Set up logging and the run-history table"""
    configure_logging(get_settings())
    from api.experiment_api.models import init_db
    init_db()
    logger.info("energy-two-step service started")


@app.get("/")
async def root():
    return {"message": "Two-step energy-preserving integrators. See /docs for the API."}


@app.get("/api/health")
async def health_check():
    return {"status": "healthy"}


# Include routers
from api.experiment_api.endpoints import router as experiment_api_router
app.include_router(experiment_api_router, prefix="/api/experiments", tags=["experiments"])

from api.rules_api.endpoints import router as rules_api_router
app.include_router(rules_api_router, prefix="/api/rules", tags=["rules"])

if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)

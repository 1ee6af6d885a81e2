import logging
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from scbicm.api.routes import router
from scbicm.config import Config
from scbicm.core.channel import load_or_build_profile
from scbicm.exceptions import ConstraintViolationError, ScbicmError
from scbicm.models.constellation import ErasureProfile
from scbicm.utils.helpers import configure_logging

logger = logging.getLogger(__name__)


def create_app(config: Optional[Config] = None, profile: Optional[ErasureProfile] = None) -> FastAPI:
    config = config or Config.from_env()
    configure_logging(config.LOG_LEVEL)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        # Load the cached 16-QAM profile, building it on first start
        app.state.profile = profile or load_or_build_profile(config.PROFILE_PATH)
        logger.info("profile ready constellation=%s", app.state.profile.constellation)
        yield

    app = FastAPI(title="SC-LDPC BICM design service", lifespan=lifespan)
    app.state.config = config

    @app.exception_handler(ScbicmError)
    async def scbicm_error(request: Request, err: ScbicmError):
        status = 422 if isinstance(err, ConstraintViolationError) else 400
        logger.warning("request failed path=%s category=%s msg=%s", request.url.path, err.category, err.message)
        return JSONResponse(status_code=status, content={"detail": err.message, "category": err.category})

    app.include_router(router)
    return app


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(create_app(), host="0.0.0.0", port=8000)

# Tracking/API/api.py
from __future__ import annotations

import logging
import os
from contextlib import asynccontextmanager
from typing import Any
from uuid import UUID

import dotenv
import uvicorn
from fastapi import APIRouter, Depends, FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ValidationError

from Tracking.API.deps import auth_ws, verify_token
from Tracking.Domain.errors import ConfigError, SessionNotFoundError, TrackingError
from Tracking.Domain.events import EventBus, TrackingEventType, log_event
from Tracking.Domain.geometry import Box
from Tracking.Domain.kalman import FilterConfig
from Tracking.Domain.mbpp import FrameObservation, MbppConfig
from Tracking.Domain.tracking_service import TrackingService

dotenv.load_dotenv()

logging.basicConfig(
    level=os.getenv("TRACKING_LOG_LEVEL", "INFO").upper(),
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s"
)
logger = logging.getLogger(__name__)


class OpenSessionRequest(BaseModel):
    init_box: Box
    mbpp: MbppConfig | None = None
    # matrices as nested lists or diagonals; validated into a FilterConfig
    filter: dict[str, Any] | None = None


def _filter_config(raw: dict[str, Any] | None) -> FilterConfig | None:
    if raw is None:
        return None
    try:
        return FilterConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"filter: {e.errors()[0]['msg']}") from e


@asynccontextmanager
async def lifespan(app: FastAPI):
    events = EventBus()
    events.subscribe(TrackingEventType.DRIFT_DETECTED, log_event)
    events.subscribe(TrackingEventType.ERROR, log_event)
    app.state.service = TrackingService(events=events)
    yield
    logger.info("shutting down with %d open session(s)", len(app.state.service))


app = FastAPI(title="MBPP tracking service", lifespan=lifespan)
protected = APIRouter(dependencies=[Depends(verify_token)])


@app.exception_handler(TrackingError)
async def tracking_error_handler(request: Request, exc: TrackingError):
    status_code = 404 if isinstance(exc, SessionNotFoundError) else 422
    return JSONResponse(status_code=status_code, content={"detail": exc.to_dict()})


def _service(request: Request) -> TrackingService:
    return request.app.state.service


@app.get("/health")
async def health_check(request: Request):
    return {"status": "healthy", "sessions": len(_service(request))}


@protected.post("/sessions")
async def open_session(req: OpenSessionRequest, request: Request):
    session = await _service(request).open_session(req.init_box, req.mbpp, _filter_config(req.filter))
    return {"session_id": str(session.session_id)}


@protected.post("/sessions/{session_id}/frames")
async def track_frame(session_id: UUID, obs: FrameObservation, request: Request):
    box, diagnostics = await _service(request).track(session_id, obs)
    return {"frame": obs.frame, "box": box.as_list(), "diagnostics": diagnostics.model_dump(mode="json")}


@protected.delete("/sessions/{session_id}")
async def close_session(session_id: UUID, request: Request):
    session = await _service(request).close_session(session_id)
    return {"session_id": str(session_id), "frames": session.frame_count}


@app.websocket("/ws/track")
async def track_ws(websocket: WebSocket, _: None = Depends(auth_ws)):
    """First message opens a session ({init_box, mbpp?, filter?}); each later message is one frame."""
    await websocket.accept()
    service: TrackingService = websocket.app.state.service
    session_id: UUID | None = None
    try:
        try:
            req = OpenSessionRequest.model_validate(await websocket.receive_json())
            session = await service.open_session(req.init_box, req.mbpp, _filter_config(req.filter))
        except (TrackingError, ValidationError) as e:
            code = e.code if isinstance(e, TrackingError) else "format_error"
            await websocket.send_json({"error": code, "message": str(e)})
            return await websocket.close()

        session_id = session.session_id
        await websocket.send_json({"session_id": str(session_id)})

        while True:
            payload = await websocket.receive_json()
            try:
                obs = FrameObservation.model_validate(payload)
                box, diagnostics = await service.track(session_id, obs)
            except (TrackingError, ValidationError) as e:
                code = e.code if isinstance(e, TrackingError) else "format_error"
                await websocket.send_json({"error": code, "message": str(e)})
                continue
            await websocket.send_json(
                {"frame": obs.frame, "box": box.as_list(), "diagnostics": diagnostics.model_dump(mode="json")}
            )

    except WebSocketDisconnect:
        logger.info("WebSocket connection closed by the client.")
    finally:
        if session_id is not None:
            await service.close_session(session_id)


app.include_router(protected)


if __name__ == "__main__":
    uvicorn.run("Tracking.API.api:app", host="0.0.0.0", port=8080, reload=True)

# Tracking/Domain/tracking_service.py
from __future__ import annotations

import asyncio
import logging
from uuid import UUID

from Tracking.Domain import mbpp
from Tracking.Domain.errors import SessionNotFoundError, TrackingError
from Tracking.Domain.events import EventBus, TrackingEvent, TrackingEventType
from Tracking.Domain.geometry import Box
from Tracking.Domain.kalman import FilterConfig
from Tracking.Domain.mbpp import FrameObservation, MbppConfig, StepDiagnostics, TrackerSession

logger = logging.getLogger(__name__)


class TrackingService:
    """Registry of live MBPP sessions. Steps on one session are serialized by its lock."""

    def __init__(
        self,
        events: EventBus | None = None,
        mbpp_defaults: MbppConfig | None = None,
        filter_defaults: FilterConfig | None = None,
    ) -> None:
        self.events = events or EventBus()
        self.mbpp_defaults = mbpp_defaults or MbppConfig()
        self.filter_defaults = filter_defaults or FilterConfig()
        self._sessions: dict[UUID, TrackerSession] = {}
        self._locks: dict[UUID, asyncio.Lock] = {}

    def __len__(self) -> int:
        return len(self._sessions)

    def get(self, session_id: UUID) -> TrackerSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise SessionNotFoundError(str(session_id)) from None

    async def open_session(
        self,
        init_box: Box,
        config: MbppConfig | None = None,
        filter_config: FilterConfig | None = None,
    ) -> TrackerSession:
        session = mbpp.start(init_box, config or self.mbpp_defaults, filter_config or self.filter_defaults)
        self._sessions[session.session_id] = session
        self._locks[session.session_id] = asyncio.Lock()
        logger.info("session %s started at %s", session.session_id, init_box.as_list())
        await self.events.publish(TrackingEvent(
            type=TrackingEventType.SESSION_STARTED,
            data={"session_id": str(session.session_id), "init_box": init_box.as_list()},
        ))
        return session

    async def track(self, session_id: UUID, obs: FrameObservation) -> tuple[Box, StepDiagnostics]:
        self.get(session_id)
        async with self._locks[session_id]:
            # the session may have been closed while this call waited
            session = self.get(session_id)
            try:
                box, diagnostics = mbpp.step(session, obs)
            except TrackingError as e:
                await self.events.publish(TrackingEvent(
                    type=TrackingEventType.ERROR,
                    data={"session_id": str(session_id), "frame": obs.frame, **e.to_dict()},
                ))
                raise

        if diagnostics.drift_detected:
            await self.events.publish(TrackingEvent(
                type=TrackingEventType.DRIFT_DETECTED,
                data={
                    "session_id": str(session_id),
                    "frame": obs.frame,
                    "chosen_index": diagnostics.chosen_index,
                    "fallback_used": diagnostics.fallback_used,
                },
            ))
        await self.events.publish(TrackingEvent(
            type=TrackingEventType.FRAME_TRACKED,
            data={"session_id": str(session_id), "frame": obs.frame, "box": box.as_list()},
        ))
        return box, diagnostics

    async def close_session(self, session_id: UUID) -> TrackerSession:
        self.get(session_id)
        async with self._locks[session_id]:
            session = self.get(session_id)
            self._sessions.pop(session_id)
        self._locks.pop(session_id, None)
        logger.info("session %s closed after %d frames", session_id, session.frame_count)
        await self.events.publish(TrackingEvent(
            type=TrackingEventType.SESSION_CLOSED,
            data={"session_id": str(session_id), "frames": session.frame_count},
        ))
        return session

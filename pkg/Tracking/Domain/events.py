from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Awaitable, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)


class TrackingEventType(str, Enum):
    # Session lifecycle
    SESSION_STARTED = "session.started"
    SESSION_CLOSED = "session.closed"

    # Per-frame decisions
    FRAME_TRACKED = "frame.tracked"
    DRIFT_DETECTED = "drift.detected"

    # Errors
    ERROR = "error"


@dataclass(frozen=True)
class TrackingEvent:
    type: TrackingEventType
    data: Dict[str, Any] | None = None


Callback = Callable[[TrackingEvent], Awaitable[None]]


class EventBus:
    def __init__(self) -> None:
        # per-event-type subscriber lists; None = wildcard subscribers
        self._subscribers: Dict[Optional[TrackingEventType], List[Callback]] = {}
        self._lock = asyncio.Lock()

    def subscribe(self, event_type: TrackingEventType | None, callback: Callback) -> None:
        """
        Register a callback for a given event_type.
        If event_type is None, the callback receives *all* events.
        """
        self._subscribers.setdefault(event_type, []).append(callback)

    async def publish(self, event: TrackingEvent) -> None:
        async with self._lock:
            callbacks = list(self._subscribers.get(event.type, []))
            callbacks += self._subscribers.get(None, [])

        for cb in callbacks:
            try:
                await cb(event)
            except Exception:
                # a failing subscriber must not break the tracking loop
                logger.exception("event subscriber failed for %s", event.type.value)


async def log_event(event: TrackingEvent) -> None:
    """Subscriber that writes drift corrections and step failures to the log."""
    data = event.data or {}
    session, frame = data.get("session_id"), data.get("frame")
    if event.type is TrackingEventType.ERROR:
        logger.warning("session %s frame %s: %s (%s)", session, frame, data.get("message"), data.get("error"))
    elif event.type is TrackingEventType.DRIFT_DETECTED:
        if data.get("fallback_used"):
            logger.info("session %s frame %s: drift detected, no candidate overlaps the estimation box", session, frame)
        else:
            logger.info("session %s frame %s: drift detected, relocated to candidate %s", session, frame, data.get("chosen_index"))
    else:
        logger.debug("%s %s", event.type.value, data)

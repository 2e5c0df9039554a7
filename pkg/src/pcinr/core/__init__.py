"""Event collection: bounded background collector and the event emitter."""

from .collector import EventCollector, FanoutSink
from .emitter import Emitter

__all__ = ["Emitter", "EventCollector", "FanoutSink"]

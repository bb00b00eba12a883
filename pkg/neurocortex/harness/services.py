"""Service layer owning named simulation sessions."""

import logging
from pathlib import Path
from threading import Lock
from typing import Any, Dict, List, Optional, Union

from neurocortex.config import Settings
from neurocortex.harness.scenario import ScenarioRunner, parse_line, run_scenario
from neurocortex.harness.session import Session
from neurocortex.harness.snapshot import load_session
from neurocortex.models import RunSummary, ScenarioStep

logger = logging.getLogger(__name__)


class SimulationService:
    """Manages session lifecycle; every network is driven by one runner at a time."""

    def __init__(self, settings: Settings):
        """
        Initialize the simulation service.

        Args:
            settings: Settings used for newly created sessions
        """
        self.settings = settings
        self._sessions: Dict[str, Session] = {}
        self._runners: Dict[str, ScenarioRunner] = {}
        self._lines: Dict[str, int] = {}
        self._lock = Lock()

    def get_or_create_session(self, session_id: str) -> Session:
        """
        Get or create the session with the given id.

        Args:
            session_id: The session identifier

        Returns:
            Session holding the network and its registries
        """
        with self._lock:
            if session_id not in self._sessions:
                logger.info("creating session %s", session_id)
                self._sessions[session_id] = Session.create(session_id, self.settings)
            return self._sessions[session_id]

    def load_session(self, session_id: str, snapshot: Union[str, Path]) -> Session:
        """Replace (or create) a session from a snapshot file."""
        session = load_session(snapshot, session_id, self.settings)
        with self._lock:
            self._sessions[session_id] = session
            self._runners.pop(session_id, None)
            self._lines.pop(session_id, None)
        logger.info("loaded session %s from %s", session_id, snapshot)
        return session

    def _runner(self, session_id: str) -> ScenarioRunner:
        session = self.get_or_create_session(session_id)
        with self._lock:
            if session_id not in self._runners:
                self._runners[session_id] = ScenarioRunner(session)
            return self._runners[session_id]

    def execute_line(self, session_id: str, text: str) -> List[str]:
        """
        Parse and execute one scenario statement in a session.

        Args:
            session_id: Session to run in
            text: A single scenario line

        Returns:
            Lines the statement printed
        """
        runner = self._runner(session_id)
        with self._lock:
            number = self._lines.get(session_id, 0) + 1
            self._lines[session_id] = number
        parsed = parse_line(text, number, runner.steps_executed)
        if parsed is None:
            return []
        if isinstance(parsed, ScenarioStep):
            return runner.execute(parsed)
        kind, key, value = parsed
        if kind == "set":
            runner.apply_override(key, value)
        return []

    def run_scenario(
        self,
        path: Union[str, Path],
        session_id: Optional[str] = None,
        out_dir: Optional[Union[str, Path]] = None,
        trace_format: Optional[str] = None,
    ) -> RunSummary:
        """Run a scenario file, in a named session when ``session_id`` is given."""
        session = self.get_or_create_session(session_id) if session_id else None
        return run_scenario(path, self.settings, out_dir, trace_format, session)

    def cleanup_session(self, session_id: str) -> bool:
        """
        Remove a session and its runner.

        Args:
            session_id: The session identifier

        Returns:
            True if the session existed
        """
        with self._lock:
            self._runners.pop(session_id, None)
            self._lines.pop(session_id, None)
            return self._sessions.pop(session_id, None) is not None

    def get_session_info(self) -> Dict[str, Any]:
        """Summary of the active sessions."""
        with self._lock:
            return {
                "active_sessions": len(self._sessions),
                "sessions": {
                    sid: {
                        "neurons": len(s.net),
                        "synapses": len(s.net.synapses),
                        "tick": s.net.tick,
                        "words": len(s.lexicon),
                        "rules": len(s.rules.rules),
                        "patterns": sorted(s.patterns),
                    }
                    for sid, s in self._sessions.items()
                },
            }

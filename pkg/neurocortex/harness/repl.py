"""Interactive shell over a simulation session.

Each line is a scenario statement. Typing ``generate animal furry meows``
after loading a trained snapshot prints the next sentence for that context.
"""

import sys
from pathlib import Path
from typing import IO, List, Optional

from neurocortex.exceptions import NeurocortexError
from neurocortex.harness.services import SimulationService


class InteractiveRepl:
    """Read-eval-print loop feeding lines through the scenario runner."""

    def __init__(
        self,
        service: SimulationService,
        session_id: str = "repl",
        stdin: Optional[IO[str]] = None,
        stdout: Optional[IO[str]] = None,
        transcript: Optional[Path] = None,
        prompt: str = "> ",
    ):
        self.service = service
        self.session_id = session_id
        self.stdin = stdin or sys.stdin
        self.stdout = stdout or sys.stdout
        self.transcript = transcript
        self.prompt = prompt
        self.history: List[str] = []
        self.errors = 0

    def _print(self, text: str = "") -> None:
        print(text, file=self.stdout)

    def handle(self, line: str) -> List[str]:
        """Execute one line; errors are reported and the loop continues."""
        try:
            lines = self.service.execute_line(self.session_id, line)
        except NeurocortexError as exc:
            self.errors += 1
            self._print(f"error: {exc.message}")
            return []
        if line.strip():
            self.history.append(line.rstrip("\n"))
        for text in lines:
            self._print(text)
        return lines

    def start(self) -> int:
        interactive = self.stdin.isatty()
        if interactive:
            self._print("neurocortex REPL")
            self._print("=" * 60)
            self._print("Type scenario statements, e.g. 'generate animal furry meows'.")
            self._print("Type 'quit', 'exit', or press Ctrl+C to stop.")
            self._print("=" * 60)
        try:
            while True:
                if interactive:
                    self.stdout.write(self.prompt)
                    self.stdout.flush()
                try:
                    line = self.stdin.readline()
                except KeyboardInterrupt:
                    break
                if not line:
                    break
                if line.strip().lower() in ("quit", "exit", "q"):
                    break
                self.handle(line)
        except KeyboardInterrupt:
            pass
        if self.transcript is not None:
            self.transcript.write_text("".join(f"{line}\n" for line in self.history), encoding="utf-8")
        return 0 if not self.errors else 2

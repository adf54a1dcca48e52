"""Hand a design to an external simulator command."""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from pathlib import Path
from typing import Optional, Union

from .engine import FAIL, PASS, SIM_ERROR, SimOutcome

DEFAULT_TIMEOUT = 30.0


def run_external(
    source: str,
    command_template: str,
    workdir: Optional[Union[str, Path]] = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> SimOutcome:
    """Write ``source`` to a temp file and run ``command_template`` on it.

    The template must contain ``{design}``, which is replaced by the
    shell-quoted path of the written file. Exit status 0 is a pass.
    """
    if "{design}" not in command_template:
        raise ValueError("command template must contain a {design} placeholder")
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        path = Path(tmp) / "design.v"
        path.write_text(source, encoding="utf-8")
        command = command_template.replace("{design}", shlex.quote(str(path)))
        try:
            proc = subprocess.run(
                command,
                shell=True,
                cwd=workdir,
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired as exc:
            return SimOutcome(SIM_ERROR, message=f"external simulator timed out after {timeout:g} s",
                              stdout=_text(exc.stdout), stderr=_text(exc.stderr))
        except OSError as exc:
            return SimOutcome(SIM_ERROR, message=f"could not start external simulator: {exc}")
    # 126/127: the shell could not find or execute the command
    if proc.returncode in (126, 127):
        return SimOutcome(SIM_ERROR, message=f"could not start external simulator (exit {proc.returncode})",
                          stdout=proc.stdout, stderr=proc.stderr)
    verdict = PASS if proc.returncode == 0 else FAIL
    message = "" if verdict == PASS else f"external simulator exited with status {proc.returncode}"
    return SimOutcome(verdict, message=message, stdout=proc.stdout, stderr=proc.stderr)


def _text(data) -> str:
    if data is None:
        return ""
    if isinstance(data, bytes):
        return data.decode("utf-8", "replace")
    return data
